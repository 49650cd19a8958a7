//! Exact integer linear algebra and finitely generated abelian groups.
//!
//! Everything here is arbitrary-precision: Smith normal form with unimodular
//! transforms, integer linear solving, cokernel presentations in invariant-factor
//! form, homomorphisms checked modulo relations, tensor/Tor against Z/n, and
//! exactness of two-step sequences. These are the carriers for every K-group
//! in the rest of the crate.

use num_bigint::BigInt;
use num_integer::Integer as NumInteger;
use num_traits::{One, Signed, Zero};
use std::fmt;

pub type Int = BigInt;

pub fn int(v: i64) -> Int {
    Int::from(v)
}

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMat {
    rows: usize,
    cols: usize,
    e: Vec<Int>,
}

impl fmt::Debug for IntMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.rows {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.at(i, j))?;
            }
        }
        write!(f, "]")
    }
}

impl IntMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMat {
            rows,
            cols,
            e: vec![Int::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = IntMat::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Int::one());
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = IntMat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            for (j, v) in row.iter().enumerate() {
                m.set(i, j, int(*v));
            }
        }
        m
    }

    pub fn from_cols(dim: usize, cols: &[Vec<Int>]) -> Self {
        let mut m = IntMat::zeros(dim, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), dim, "column length mismatch");
            for i in 0..dim {
                m.set(i, j, col[i].clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, i: usize, j: usize) -> &Int {
        &self.e[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Int) {
        self.e[i * self.cols + j] = v;
    }

    pub fn col(&self, j: usize) -> Vec<Int> {
        (0..self.rows).map(|i| self.at(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.e.iter().all(|x| x.is_zero())
    }

    pub fn mul(&self, rhs: &IntMat) -> IntMat {
        assert_eq!(self.cols, rhs.rows, "matrix product shape mismatch");
        let mut out = IntMat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.at(i, j) + a * rhs.at(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(self.cols, v.len(), "matrix-vector shape mismatch");
        (0..self.rows)
            .map(|i| {
                let mut acc = Int::zero();
                for j in 0..self.cols {
                    acc += self.at(i, j) * &v[j];
                }
                acc
            })
            .collect()
    }

    pub fn hstack(&self, rhs: &IntMat) -> IntMat {
        assert_eq!(self.rows, rhs.rows);
        let mut m = IntMat::zeros(self.rows, self.cols + rhs.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(i, j, self.at(i, j).clone());
            }
            for j in 0..rhs.cols {
                m.set(i, self.cols + j, rhs.at(i, j).clone());
            }
        }
        m
    }

    /// Fraction-free determinant (Bareiss).
    pub fn det(&self) -> Int {
        assert_eq!(self.rows, self.cols, "det of non-square");
        let n = self.rows;
        if n == 0 {
            return Int::one();
        }
        let mut a = self.clone();
        let mut sign = Int::one();
        let mut prev = Int::one();
        for k in 0..n - 1 {
            if a.at(k, k).is_zero() {
                let swap = (k + 1..n).find(|&i| !a.at(i, k).is_zero());
                match swap {
                    Some(i) => {
                        for j in 0..n {
                            let tmp = a.at(k, j).clone();
                            a.set(k, j, a.at(i, j).clone());
                            a.set(i, j, tmp);
                        }
                        sign = -sign;
                    }
                    None => return Int::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.at(i, j) * a.at(k, k) - a.at(i, k) * a.at(k, j)) / &prev;
                    a.set(i, j, v);
                }
            }
            prev = a.at(k, k).clone();
        }
        sign * a.at(n - 1, n - 1).clone()
    }

    pub fn is_unimodular(&self) -> bool {
        self.rows == self.cols && self.det().abs().is_one()
    }

    pub fn transpose(&self) -> IntMat {
        let mut m = IntMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m.set(j, i, self.at(i, j).clone());
            }
        }
        m
    }

    pub fn scaled(&self, c: &Int) -> IntMat {
        let mut m = self.clone();
        for v in &mut m.e {
            *v = &*v * c;
        }
        m
    }

    pub fn add(&self, rhs: &IntMat) -> IntMat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        let mut m = self.clone();
        for (a, b) in m.e.iter_mut().zip(rhs.e.iter()) {
            *a = &*a + b;
        }
        m
    }

    pub fn neg(&self) -> IntMat {
        self.scaled(&int(-1))
    }
}

/// Result of `smith_normal_form`: `u * m * v = s` with `u`, `v` unimodular,
/// `s` diagonal with nonnegative entries in a divisibility chain.
#[derive(Clone, Debug)]
pub struct SmithDecomposition {
    pub u: IntMat,
    pub uinv: IntMat,
    pub s: IntMat,
    pub v: IntMat,
    pub vinv: IntMat,
}

impl SmithDecomposition {
    pub fn diag(&self) -> Vec<Int> {
        let n = self.s.rows().min(self.s.cols());
        (0..n).map(|i| self.s.at(i, i).clone()).collect()
    }

    /// Nonzero diagonal entries (the invariant factors of the column span).
    pub fn invariant_factors(&self) -> Vec<Int> {
        self.diag().into_iter().filter(|d| !d.is_zero()).collect()
    }
}

struct SnfCalc {
    a: IntMat,
    u: IntMat,
    uinv: IntMat,
    v: IntMat,
    vinv: IntMat,
}

impl SnfCalc {
    fn swap_rows(&mut self, i: usize, k: usize) {
        if i == k {
            return;
        }
        for j in 0..self.a.cols() {
            let t = self.a.at(i, j).clone();
            self.a.set(i, j, self.a.at(k, j).clone());
            self.a.set(k, j, t);
        }
        for j in 0..self.u.cols() {
            let t = self.u.at(i, j).clone();
            self.u.set(i, j, self.u.at(k, j).clone());
            self.u.set(k, j, t);
        }
        // inverse gets the corresponding column swap
        for r in 0..self.uinv.rows() {
            let t = self.uinv.at(r, i).clone();
            self.uinv.set(r, i, self.uinv.at(r, k).clone());
            self.uinv.set(r, k, t);
        }
    }

    fn swap_cols(&mut self, j: usize, k: usize) {
        if j == k {
            return;
        }
        for i in 0..self.a.rows() {
            let t = self.a.at(i, j).clone();
            self.a.set(i, j, self.a.at(i, k).clone());
            self.a.set(i, k, t);
        }
        for i in 0..self.v.rows() {
            let t = self.v.at(i, j).clone();
            self.v.set(i, j, self.v.at(i, k).clone());
            self.v.set(i, k, t);
        }
        for c in 0..self.vinv.cols() {
            let t = self.vinv.at(j, c).clone();
            self.vinv.set(j, c, self.vinv.at(k, c).clone());
            self.vinv.set(k, c, t);
        }
    }

    /// row_i += c * row_k
    fn add_row(&mut self, i: usize, k: usize, c: &Int) {
        if c.is_zero() {
            return;
        }
        for j in 0..self.a.cols() {
            let t = self.a.at(i, j) + c * self.a.at(k, j);
            self.a.set(i, j, t);
        }
        for j in 0..self.u.cols() {
            let t = self.u.at(i, j) + c * self.u.at(k, j);
            self.u.set(i, j, t);
        }
        // uinv: col_k -= c * col_i
        for r in 0..self.uinv.rows() {
            let t = self.uinv.at(r, k) - c * self.uinv.at(r, i);
            self.uinv.set(r, k, t);
        }
    }

    /// col_j += c * col_k
    fn add_col(&mut self, j: usize, k: usize, c: &Int) {
        if c.is_zero() {
            return;
        }
        for i in 0..self.a.rows() {
            let t = self.a.at(i, j) + c * self.a.at(i, k);
            self.a.set(i, j, t);
        }
        for i in 0..self.v.rows() {
            let t = self.v.at(i, j) + c * self.v.at(i, k);
            self.v.set(i, j, t);
        }
        for c2 in 0..self.vinv.cols() {
            let t = self.vinv.at(k, c2) - c * self.vinv.at(j, c2);
            self.vinv.set(k, c2, t);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.a.cols() {
            let t = -self.a.at(i, j).clone();
            self.a.set(i, j, t);
        }
        for j in 0..self.u.cols() {
            let t = -self.u.at(i, j).clone();
            self.u.set(i, j, t);
        }
        for r in 0..self.uinv.rows() {
            let t = -self.uinv.at(r, i).clone();
            self.uinv.set(r, i, t);
        }
    }
}

/// Smith normal form over Z with both transforms and their inverses.
pub fn smith_normal_form(m: &IntMat) -> SmithDecomposition {
    let (rows, cols) = (m.rows(), m.cols());
    let mut c = SnfCalc {
        a: m.clone(),
        u: IntMat::identity(rows),
        uinv: IntMat::identity(rows),
        v: IntMat::identity(cols),
        vinv: IntMat::identity(cols),
    };
    let n = rows.min(cols);
    let mut k = 0;
    while k < n {
        // locate pivot: smallest nonzero absolute value in the trailing block
        let mut pivot: Option<(usize, usize)> = None;
        for i in k..rows {
            for j in k..cols {
                if !c.a.at(i, j).is_zero() {
                    match &pivot {
                        None => pivot = Some((i, j)),
                        Some((pi, pj)) => {
                            if c.a.at(i, j).abs() < c.a.at(*pi, *pj).abs() {
                                pivot = Some((i, j));
                            }
                        }
                    }
                }
            }
        }
        let (pi, pj) = match pivot {
            None => break,
            Some(p) => p,
        };
        c.swap_rows(k, pi);
        c.swap_cols(k, pj);
        if c.a.at(k, k).is_negative() {
            c.negate_row(k);
        }
        // clear column and row below/right of the pivot
        let mut dirty = false;
        for i in k + 1..rows {
            if !c.a.at(i, k).is_zero() {
                let q = c.a.at(i, k).div_floor(c.a.at(k, k));
                c.add_row(i, k, &-q);
                if !c.a.at(i, k).is_zero() {
                    dirty = true;
                }
            }
        }
        for j in k + 1..cols {
            if !c.a.at(k, j).is_zero() {
                let q = c.a.at(k, j).div_floor(c.a.at(k, k));
                c.add_col(j, k, &-q);
                if !c.a.at(k, j).is_zero() {
                    dirty = true;
                }
            }
        }
        if dirty {
            continue; // smaller remainders appeared; re-pivot
        }
        // enforce divisibility of the trailing block by the pivot
        let mut fixed = true;
        'scan: for i in k + 1..rows {
            for j in k + 1..cols {
                if !(c.a.at(i, j) % c.a.at(k, k)).is_zero() {
                    c.add_row(k, i, &Int::one());
                    fixed = false;
                    break 'scan;
                }
            }
        }
        if fixed {
            k += 1;
        }
    }
    SmithDecomposition {
        u: c.u,
        uinv: c.uinv,
        s: c.a,
        v: c.v,
        vinv: c.vinv,
    }
}

/// Solve `m * x = b` over the integers. Returns one solution if any exists.
pub fn solve_linear(m: &IntMat, b: &[Int]) -> Option<Vec<Int>> {
    assert_eq!(m.rows(), b.len(), "solve_linear: dimension mismatch");
    let snf = smith_normal_form(m);
    let c = snf.u.mul_vec(b);
    let n = m.rows().min(m.cols());
    let mut y = vec![Int::zero(); m.cols()];
    for i in 0..m.rows() {
        if i < n && !snf.s.at(i, i).is_zero() {
            let (q, r) = c[i].div_rem(snf.s.at(i, i));
            if !r.is_zero() {
                return None;
            }
            y[i] = q;
        } else if !c[i].is_zero() {
            return None;
        }
    }
    Some(snf.v.mul_vec(&y))
}

/// Basis of the integer kernel {x : m * x = 0}.
pub fn kernel_basis(m: &IntMat) -> Vec<Vec<Int>> {
    let snf = smith_normal_form(m);
    let n = m.rows().min(m.cols());
    let mut out = Vec::new();
    for j in 0..m.cols() {
        let free = j >= n || snf.s.at(j, j).is_zero();
        if free {
            out.push(snf.v.col(j));
        }
    }
    out
}

/// Finitely generated abelian group in canonical invariant-factor form:
/// `Z^rank ⊕ Z/d_1 ⊕ ... ⊕ Z/d_k` with `2 <= d_1 | d_2 | ... | d_k`.
///
/// Elements are integer vectors of length `rank + k`; free coordinates come
/// first, torsion coordinate `i` is reduced into `[0, d_i)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct FgAbGroup {
    rank: usize,
    torsion: Vec<Int>,
}

impl fmt::Debug for FgAbGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.describe())
    }
}

impl FgAbGroup {
    pub fn zero() -> Self {
        FgAbGroup {
            rank: 0,
            torsion: vec![],
        }
    }

    pub fn free(rank: usize) -> Self {
        FgAbGroup {
            rank,
            torsion: vec![],
        }
    }

    pub fn cyclic(d: u64) -> Self {
        assert!(d >= 2);
        FgAbGroup {
            rank: 0,
            torsion: vec![int(d as i64)],
        }
    }

    pub fn new(rank: usize, torsion: Vec<Int>) -> Self {
        for w in torsion.windows(2) {
            assert!(
                (&w[1] % &w[0]).is_zero(),
                "invariant factors must form a divisibility chain"
            );
        }
        assert!(torsion.iter().all(|d| *d >= int(2)));
        FgAbGroup { rank, torsion }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn torsion(&self) -> &[Int] {
        &self.torsion
    }

    pub fn dim(&self) -> usize {
        self.rank + self.torsion.len()
    }

    pub fn is_zero_group(&self) -> bool {
        self.dim() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.rank == 0
    }

    pub fn order(&self) -> Option<Int> {
        if self.rank > 0 {
            return None;
        }
        let mut o = Int::one();
        for d in &self.torsion {
            o *= d;
        }
        Some(o)
    }

    /// Exponent of the torsion part (1 when torsion-free).
    pub fn torsion_exponent(&self) -> Int {
        self.torsion.last().cloned().unwrap_or_else(Int::one)
    }

    pub fn zero_elem(&self) -> Vec<Int> {
        vec![Int::zero(); self.dim()]
    }

    pub fn gen_elem(&self, i: usize) -> Vec<Int> {
        let mut v = self.zero_elem();
        v[i] = Int::one();
        v
    }

    /// Order of the i-th canonical generator: 0 for free, d_i for torsion.
    pub fn gen_order(&self, i: usize) -> Int {
        if i < self.rank {
            Int::zero()
        } else {
            self.torsion[i - self.rank].clone()
        }
    }

    pub fn normalize(&self, v: &[Int]) -> Vec<Int> {
        assert_eq!(v.len(), self.dim(), "element has wrong dimension");
        let mut out = v.to_vec();
        for (i, d) in self.torsion.iter().enumerate() {
            out[self.rank + i] = out[self.rank + i].mod_floor(d);
        }
        out
    }

    pub fn is_zero_elem(&self, v: &[Int]) -> bool {
        self.normalize(v).iter().all(|x| x.is_zero())
    }

    pub fn elem_eq(&self, a: &[Int], b: &[Int]) -> bool {
        self.normalize(a) == self.normalize(b)
    }

    pub fn add_elems(&self, a: &[Int], b: &[Int]) -> Vec<Int> {
        let v: Vec<Int> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
        self.normalize(&v)
    }

    pub fn neg_elem(&self, a: &[Int]) -> Vec<Int> {
        let v: Vec<Int> = a.iter().map(|x| -x.clone()).collect();
        self.normalize(&v)
    }

    pub fn scale_elem(&self, k: &Int, a: &[Int]) -> Vec<Int> {
        let v: Vec<Int> = a.iter().map(|x| k * x).collect();
        self.normalize(&v)
    }

    /// Diagonal relation columns (d_i on the torsion coordinates).
    pub fn relation_cols(&self) -> IntMat {
        let mut m = IntMat::zeros(self.dim(), self.torsion.len());
        for (i, d) in self.torsion.iter().enumerate() {
            m.set(self.rank + i, i, d.clone());
        }
        m
    }

    /// All elements; only valid for finite groups.
    pub fn elems(&self) -> Vec<Vec<Int>> {
        assert!(self.is_finite(), "cannot enumerate an infinite group");
        let mut out = vec![vec![]];
        for d in &self.torsion {
            let mut next = Vec::new();
            let dd: u64 = d.to_string().parse().expect("torsion factor too large");
            for v in &out {
                for x in 0..dd {
                    let mut w = v.clone();
                    w.push(int(x as i64));
                    next.push(w);
                }
            }
            out = next;
        }
        out
    }

    /// Generators of the n-torsion subgroup {x : n·x = 0}.
    pub fn n_torsion_gens(&self, n: &Int) -> Vec<Vec<Int>> {
        let mut out = Vec::new();
        for (i, d) in self.torsion.iter().enumerate() {
            let g = d.gcd(n);
            if g > Int::one() {
                let mut v = self.zero_elem();
                v[self.rank + i] = d / &g;
                out.push(v);
            }
        }
        out
    }

    /// Generators of n·G.
    pub fn multiple_subgroup_gens(&self, n: &Int) -> Vec<Vec<Int>> {
        (0..self.dim())
            .map(|i| self.scale_elem(n, &self.gen_elem(i)))
            .filter(|v| !self.is_zero_elem(v))
            .collect()
    }

    pub fn describe(&self) -> String {
        if self.is_zero_group() {
            return "0".into();
        }
        let mut parts = Vec::new();
        if self.rank == 1 {
            parts.push("Z".to_string());
        } else if self.rank > 1 {
            parts.push(format!("Z^{}", self.rank));
        }
        for d in &self.torsion {
            parts.push(format!("Z/{}", d));
        }
        parts.join(" + ")
    }
}

/// Outcome of presenting a group by generators and relation columns.
pub struct Presentation {
    pub group: FgAbGroup,
    /// canonical coordinates of each original generator
    pub gen_images: Vec<Vec<Int>>,
    /// original-generator coordinates of each canonical generator
    pub can_lifts: Vec<Vec<Int>>,
}

/// Cokernel of `rels` viewed as relation columns on `ngens` generators,
/// in canonical form with a basis witness both ways.
pub fn present(ngens: usize, rels: &IntMat) -> Presentation {
    assert_eq!(rels.rows(), ngens);
    let snf = smith_normal_form(rels);
    let n = ngens.min(rels.cols());
    // classify the new basis coordinates
    let mut free_idx = Vec::new();
    let mut tor_idx = Vec::new();
    for i in 0..ngens {
        let s = if i < n {
            snf.s.at(i, i).clone()
        } else {
            Int::zero()
        };
        if s.is_zero() {
            free_idx.push(i);
        } else if s > Int::one() {
            tor_idx.push((i, s));
        } // s == 1: dead coordinate
    }
    tor_idx.sort_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0)));
    let torsion: Vec<Int> = tor_idx.iter().map(|(_, s)| s.clone()).collect();
    let group = FgAbGroup {
        rank: free_idx.len(),
        torsion,
    };
    let order: Vec<usize> = free_idx
        .iter()
        .cloned()
        .chain(tor_idx.iter().map(|(i, _)| *i))
        .collect();
    // y = U x : images of original generators
    let mut gen_images = Vec::with_capacity(ngens);
    for j in 0..ngens {
        let y = snf.u.col(j); // column j of U = image of e_j
        let v: Vec<Int> = order.iter().map(|&i| y[i].clone()).collect();
        gen_images.push(group.normalize(&v));
    }
    // x = Uinv y : lifts of canonical generators
    let mut can_lifts = Vec::with_capacity(order.len());
    for &i in &order {
        can_lifts.push(snf.uinv.col(i));
    }
    Presentation {
        group,
        gen_images,
        can_lifts,
    }
}

/// Cokernel of a relation matrix: the group presented by the columns of `m`
/// as relations on `m.rows()` generators.
pub fn cokernel(m: &IntMat) -> FgAbGroup {
    present(m.rows(), m).group
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AbError {
    ShapeMismatch(String),
    NotWellDefined(String),
    GroupMismatch(String),
}

impl fmt::Display for AbError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbError::ShapeMismatch(s) => write!(f, "shape mismatch: {s}"),
            AbError::NotWellDefined(s) => write!(f, "map not well-defined: {s}"),
            AbError::GroupMismatch(s) => write!(f, "group mismatch: {s}"),
        }
    }
}

/// Homomorphism between canonical groups, stored as the matrix of images of
/// the source's canonical generators.
#[derive(Clone)]
pub struct AbHom {
    src: FgAbGroup,
    tgt: FgAbGroup,
    mat: IntMat,
}

impl fmt::Debug for AbHom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?} : {} -> {}",
            self.mat,
            self.src.describe(),
            self.tgt.describe()
        )
    }
}

impl PartialEq for AbHom {
    fn eq(&self, other: &Self) -> bool {
        if self.src != other.src || self.tgt != other.tgt {
            return false;
        }
        (0..self.src.dim()).all(|j| self.tgt.elem_eq(&self.mat.col(j), &other.mat.col(j)))
    }
}

impl Eq for AbHom {}

impl AbHom {
    pub fn new(src: FgAbGroup, tgt: FgAbGroup, mat: IntMat) -> Result<Self, AbError> {
        if mat.rows() != tgt.dim() || mat.cols() != src.dim() {
            return Err(AbError::ShapeMismatch(format!(
                "matrix {}x{} against {} -> {}",
                mat.rows(),
                mat.cols(),
                src.describe(),
                tgt.describe()
            )));
        }
        // d_i * (image of torsion generator i) must vanish in the target
        for j in 0..src.dim() {
            let d = src.gen_order(j);
            if d.is_zero() {
                continue;
            }
            let img = tgt.scale_elem(&d, &mat.col(j));
            if !img.iter().all(|x| x.is_zero()) {
                return Err(AbError::NotWellDefined(format!(
                    "generator {j} of order {d} maps to an element not killed by {d}"
                )));
            }
        }
        let mut normd = IntMat::zeros(tgt.dim(), src.dim());
        for j in 0..src.dim() {
            let c = tgt.normalize(&mat.col(j));
            for i in 0..tgt.dim() {
                normd.set(i, j, c[i].clone());
            }
        }
        Ok(AbHom {
            src,
            tgt,
            mat: normd,
        })
    }

    pub fn zero(src: FgAbGroup, tgt: FgAbGroup) -> Self {
        let mat = IntMat::zeros(tgt.dim(), src.dim());
        AbHom { src, tgt, mat }
    }

    pub fn identity(g: &FgAbGroup) -> Self {
        AbHom {
            src: g.clone(),
            tgt: g.clone(),
            mat: IntMat::identity(g.dim()),
        }
    }

    /// Multiplication by n as an endomorphism.
    pub fn mul_scalar(g: &FgAbGroup, n: &Int) -> Self {
        AbHom::new(g.clone(), g.clone(), IntMat::identity(g.dim()).scaled(n)).unwrap()
    }

    pub fn src(&self) -> &FgAbGroup {
        &self.src
    }

    pub fn tgt(&self) -> &FgAbGroup {
        &self.tgt
    }

    pub fn matrix(&self) -> &IntMat {
        &self.mat
    }

    pub fn apply(&self, v: &[Int]) -> Vec<Int> {
        self.tgt.normalize(&self.mat.mul_vec(&self.src.normalize(v)))
    }

    /// self ∘ other
    pub fn compose(&self, other: &AbHom) -> Result<AbHom, AbError> {
        if other.tgt != self.src {
            return Err(AbError::GroupMismatch(format!(
                "compose: {} vs {}",
                other.tgt.describe(),
                self.src.describe()
            )));
        }
        AbHom::new(
            other.src.clone(),
            self.tgt.clone(),
            self.mat.mul(&other.mat),
        )
    }

    pub fn add(&self, other: &AbHom) -> Result<AbHom, AbError> {
        if self.src != other.src || self.tgt != other.tgt {
            return Err(AbError::GroupMismatch("hom addition".into()));
        }
        AbHom::new(self.src.clone(), self.tgt.clone(), self.mat.add(&other.mat))
    }

    pub fn neg(&self) -> AbHom {
        AbHom::new(self.src.clone(), self.tgt.clone(), self.mat.neg()).unwrap()
    }

    pub fn is_zero_hom(&self) -> bool {
        (0..self.src.dim()).all(|j| self.tgt.is_zero_elem(&self.mat.col(j)))
    }

    /// Generators of the kernel subgroup of the source.
    pub fn kernel_gens(&self) -> Vec<Vec<Int>> {
        // solutions of mat·x ≡ 0 in the target: [mat | tgt relations]·(x; k) = 0
        let aug = self.mat.hstack(&self.tgt.relation_cols());
        let mut out: Vec<Vec<Int>> = kernel_basis(&aug)
            .into_iter()
            .map(|xk| self.src.normalize(&xk[..self.src.dim()]))
            .filter(|v| !v.iter().all(|x| x.is_zero()))
            .collect();
        // source relations are kernel elements of the lifted problem, already 0 as group elements
        out.sort();
        out.dedup();
        out
    }

    pub fn is_injective(&self) -> bool {
        self.kernel_gens().is_empty()
    }

    /// Does `w` lie in the image of this map?
    pub fn image_contains(&self, w: &[Int]) -> bool {
        let aug = self.mat.hstack(&self.tgt.relation_cols());
        solve_linear(&aug, &self.tgt.normalize(w)).is_some()
    }

    /// One preimage of `w`, if any.
    pub fn preimage(&self, w: &[Int]) -> Option<Vec<Int>> {
        let aug = self.mat.hstack(&self.tgt.relation_cols());
        solve_linear(&aug, &self.tgt.normalize(w)).map(|xk| self.src.normalize(&xk[..self.src.dim()]))
    }

    pub fn is_surjective(&self) -> bool {
        (0..self.tgt.dim()).all(|i| self.image_contains(&self.tgt.gen_elem(i)))
    }

    pub fn is_bijective(&self) -> bool {
        self.is_injective() && self.is_surjective()
    }

    /// Inverse of a bijective hom.
    pub fn inverse(&self) -> Option<AbHom> {
        let mut cols = Vec::new();
        for i in 0..self.tgt.dim() {
            cols.push(self.preimage(&self.tgt.gen_elem(i))?);
        }
        let inv = AbHom::new(
            self.tgt.clone(),
            self.src.clone(),
            IntMat::from_cols(self.src.dim(), &cols),
        )
        .ok()?;
        let id = inv.compose(self).ok()?;
        if id == AbHom::identity(&self.src) {
            Some(inv)
        } else {
            None
        }
    }

    /// Canonical form of the image subgroup.
    pub fn image_group(&self) -> FgAbGroup {
        subgroup_group(&self.tgt, &(0..self.src.dim()).map(|j| self.mat.col(j)).collect::<Vec<_>>())
    }

    /// Canonical form of the kernel subgroup.
    pub fn kernel_group(&self) -> FgAbGroup {
        subgroup_group(&self.src, &self.kernel_gens())
    }

    /// Direct sum of two homs (block diagonal), through sum witnesses.
    pub fn direct_sum(f: &AbHom, g: &AbHom, src_sum: &DirectSum, tgt_sum: &DirectSum) -> AbHom {
        // tgt_incl_a ∘ f ∘ src_proj_a + tgt_incl_b ∘ g ∘ src_proj_b
        let a = tgt_sum
            .incl_a
            .compose(f)
            .and_then(|h| h.compose(&src_sum.proj_a))
            .expect("direct_sum shape");
        let b = tgt_sum
            .incl_b
            .compose(g)
            .and_then(|h| h.compose(&src_sum.proj_b))
            .expect("direct_sum shape");
        a.add(&b).expect("direct_sum add")
    }
}

/// Canonical form of the subgroup of `g` generated by `gens`.
pub fn subgroup_group(g: &FgAbGroup, gens: &[Vec<Int>]) -> FgAbGroup {
    if gens.is_empty() {
        return FgAbGroup::zero();
    }
    // subgroup ≅ Z^k / kernel of (Z^k -> G)
    let mat = IntMat::from_cols(g.dim(), gens);
    let hom = AbHom::new(FgAbGroup::free(gens.len()), g.clone(), mat).expect("subgroup gens");
    let rels = hom.kernel_gens();
    let rel_mat = IntMat::from_cols(gens.len(), &rels);
    present(gens.len(), &rel_mat).group
}

/// Quotient of `g` by the subgroup generated by `gens`, with projection.
pub fn quotient(g: &FgAbGroup, gens: &[Vec<Int>]) -> (FgAbGroup, AbHom) {
    let rels = g.relation_cols().hstack(&IntMat::from_cols(g.dim(), gens));
    let p = present(g.dim(), &rels);
    let mat = IntMat::from_cols(p.group.dim(), &p.gen_images);
    let proj = AbHom::new(g.clone(), p.group.clone(), mat).expect("quotient projection");
    (p.group, proj)
}

/// Exactness of `A --f--> B --g--> C` at `B`: image(f) = kernel(g).
pub fn is_exact_at(f: &AbHom, g: &AbHom) -> Result<bool, AbError> {
    if f.tgt != g.src {
        return Err(AbError::GroupMismatch(format!(
            "exactness: middle groups differ: {} vs {}",
            f.tgt.describe(),
            g.src.describe()
        )));
    }
    let composed = g.compose(f)?;
    if !composed.is_zero_hom() {
        return Ok(false);
    }
    Ok(g.kernel_gens().iter().all(|k| f.image_contains(k)))
}

/// Direct sum `a ⊕ b` in canonical form with inclusion/projection witnesses.
pub struct DirectSum {
    pub group: FgAbGroup,
    pub incl_a: AbHom,
    pub incl_b: AbHom,
    pub proj_a: AbHom,
    pub proj_b: AbHom,
}

pub fn direct_sum(a: &FgAbGroup, b: &FgAbGroup) -> DirectSum {
    let n = a.dim() + b.dim();
    let mut rels = IntMat::zeros(n, a.torsion().len() + b.torsion().len());
    let mut c = 0;
    for (i, d) in a.torsion().iter().enumerate() {
        rels.set(a.rank() + i, c, d.clone());
        c += 1;
    }
    for (i, d) in b.torsion().iter().enumerate() {
        rels.set(a.dim() + b.rank() + i, c, d.clone());
        c += 1;
    }
    let p = present(n, &rels);
    let group = p.group;
    let ia = IntMat::from_cols(group.dim(), &p.gen_images[..a.dim()].to_vec());
    let ib = IntMat::from_cols(group.dim(), &p.gen_images[a.dim()..].to_vec());
    let incl_a = AbHom::new(a.clone(), group.clone(), ia).expect("incl_a");
    let incl_b = AbHom::new(b.clone(), group.clone(), ib).expect("incl_b");
    let mut pa_cols = Vec::new();
    let mut pb_cols = Vec::new();
    for lift in &p.can_lifts {
        pa_cols.push(lift[..a.dim()].to_vec());
        pb_cols.push(lift[a.dim()..].to_vec());
    }
    let proj_a = AbHom::new(
        group.clone(),
        a.clone(),
        IntMat::from_cols(a.dim(), &pa_cols),
    )
    .expect("proj_a");
    let proj_b = AbHom::new(
        group.clone(),
        b.clone(),
        IntMat::from_cols(b.dim(), &pb_cols),
    )
    .expect("proj_b");
    DirectSum {
        group,
        incl_a,
        incl_b,
        proj_a,
        proj_b,
    }
}

/// `G ⊗ Z/n` with the canonical projection `G -> G ⊗ Z/n`.
pub fn tensor_zn(g: &FgAbGroup, n: u64) -> Result<(FgAbGroup, AbHom), AbError> {
    if n < 2 {
        return Err(AbError::NotWellDefined(format!("modulus {n} < 2")));
    }
    let nn = int(n as i64);
    // torsion factors gcd(d_i, n) (kept when >= 2) then `n` for each free generator
    let mut factors: Vec<Int> = Vec::new();
    let mut tor_pos: Vec<Option<usize>> = Vec::new();
    for d in g.torsion() {
        let gc = d.gcd(&nn);
        if gc > Int::one() {
            tor_pos.push(Some(factors.len()));
            factors.push(gc);
        } else {
            tor_pos.push(None);
        }
    }
    let free_start = factors.len();
    for _ in 0..g.rank() {
        factors.push(nn.clone());
    }
    let tg = FgAbGroup {
        rank: 0,
        torsion: factors,
    };
    let mut mat = IntMat::zeros(tg.dim(), g.dim());
    for j in 0..g.rank() {
        mat.set(free_start + j, j, Int::one());
    }
    for (i, pos) in tor_pos.iter().enumerate() {
        if let Some(p) = pos {
            mat.set(*p, g.rank() + i, Int::one());
        }
    }
    let proj = AbHom::new(g.clone(), tg.clone(), mat)?;
    Ok((tg, proj))
}

/// `Tor(G, Z/n)` realized as the n-torsion subgroup of `G`, with inclusion.
pub fn tor_zn(g: &FgAbGroup, n: u64) -> Result<(FgAbGroup, AbHom), AbError> {
    if n < 2 {
        return Err(AbError::NotWellDefined(format!("modulus {n} < 2")));
    }
    let nn = int(n as i64);
    let mut factors = Vec::new();
    let mut cols = Vec::new();
    for (i, d) in g.torsion().iter().enumerate() {
        let gc = d.gcd(&nn);
        if gc > Int::one() {
            factors.push(gc.clone());
            let mut v = g.zero_elem();
            v[g.rank() + i] = d / &gc;
            cols.push(v);
        }
    }
    let tg = FgAbGroup {
        rank: 0,
        torsion: factors,
    };
    let incl = AbHom::new(tg.clone(), g.clone(), IntMat::from_cols(g.dim(), &cols))?;
    Ok((tg, incl))
}

/// The group Hom(src, tgt) presented by basis homomorphisms with their orders
/// (order 0 = infinite cyclic direction).
pub struct HomSpace {
    pub src: FgAbGroup,
    pub tgt: FgAbGroup,
    pub basis: Vec<IntMat>,
    pub orders: Vec<Int>,
}

pub fn hom_space(src: &FgAbGroup, tgt: &FgAbGroup) -> HomSpace {
    let mut basis = Vec::new();
    let mut orders = Vec::new();
    for j in 0..src.dim() {
        let a = src.gen_order(j);
        for i in 0..tgt.dim() {
            let b = tgt.gen_order(i);
            let (mult, order) = if a.is_zero() {
                (Int::one(), b.clone())
            } else if b.is_zero() {
                continue; // Hom(Z/d, Z) = 0
            } else {
                let g = a.gcd(&b);
                ((&b / &g), g)
            };
            let mut m = IntMat::zeros(tgt.dim(), src.dim());
            m.set(i, j, mult);
            basis.push(m);
            orders.push(order);
        }
    }
    HomSpace {
        src: src.clone(),
        tgt: tgt.clone(),
        basis,
        orders,
    }
}

impl HomSpace {
    pub fn hom_from_coeffs(&self, coeffs: &[Int]) -> AbHom {
        assert_eq!(coeffs.len(), self.basis.len());
        let mut m = IntMat::zeros(self.tgt.dim(), self.src.dim());
        for (c, b) in coeffs.iter().zip(self.basis.iter()) {
            if !c.is_zero() {
                m = m.add(&b.scaled(c));
            }
        }
        AbHom::new(self.src.clone(), self.tgt.clone(), m).expect("hom space basis is well-defined")
    }

    pub fn is_finite(&self) -> bool {
        self.orders.iter().all(|o| !o.is_zero())
    }

    /// Enumerate all homomorphisms (finite hom spaces only), deterministic order.
    pub fn all_homs(&self) -> Vec<AbHom> {
        assert!(self.is_finite(), "cannot enumerate infinite hom space");
        let mut coeff_sets: Vec<Vec<Int>> = vec![vec![]];
        for o in &self.orders {
            let ov: u64 = o.to_string().parse().expect("hom order too large");
            let mut next = Vec::new();
            for c in &coeff_sets {
                for x in 0..ov {
                    let mut c2 = c.clone();
                    c2.push(int(x as i64));
                    next.push(c2);
                }
            }
            coeff_sets = next;
        }
        coeff_sets.iter().map(|c| self.hom_from_coeffs(c)).collect()
    }
}

/// A system of linear congruences over unknowns that each live modulo a
/// (possibly infinite) order. Rows are `sum coeff·t ≡ rhs (mod m)`, with
/// `m = 0` meaning an exact integer equation.
pub struct CongruenceSystem {
    pub nvars: usize,
    pub var_orders: Vec<Int>,
    rows: Vec<(Vec<Int>, Int, Int)>,
}

/// Solution set `particular + span(basis)` of a congruence system, with
/// variable orders retained for enumeration.
pub struct AffineSolutions {
    pub particular: Vec<Int>,
    pub basis: Vec<Vec<Int>>,
    pub var_orders: Vec<Int>,
}

impl CongruenceSystem {
    pub fn new(var_orders: Vec<Int>) -> Self {
        CongruenceSystem {
            nvars: var_orders.len(),
            var_orders,
            rows: Vec::new(),
        }
    }

    pub fn add_row(&mut self, coeffs: Vec<Int>, rhs: Int, modulus: Int) {
        assert_eq!(coeffs.len(), self.nvars);
        self.rows.push((coeffs, rhs, modulus));
    }

    pub fn solve(&self) -> Option<AffineSolutions> {
        let nslack = self.rows.iter().filter(|(_, _, m)| !m.is_zero()).count();
        let mut mat = IntMat::zeros(self.rows.len(), self.nvars + nslack);
        let mut rhs = Vec::with_capacity(self.rows.len());
        let mut slack = 0;
        for (i, (coeffs, b, m)) in self.rows.iter().enumerate() {
            for (j, c) in coeffs.iter().enumerate() {
                mat.set(i, j, c.clone());
            }
            if !m.is_zero() {
                mat.set(i, self.nvars + slack, m.clone());
                slack += 1;
            }
            rhs.push(b.clone());
        }
        let part_full = solve_linear(&mat, &rhs)?;
        let particular: Vec<Int> = part_full[..self.nvars].to_vec();
        let mut basis: Vec<Vec<Int>> = kernel_basis(&mat)
            .into_iter()
            .map(|v| v[..self.nvars].to_vec())
            .collect();
        // each unknown's own order is a homogeneous direction
        for (i, o) in self.var_orders.iter().enumerate() {
            if !o.is_zero() {
                let mut v = vec![Int::zero(); self.nvars];
                v[i] = o.clone();
                basis.push(v);
            }
        }
        basis.retain(|v| v.iter().any(|x| !x.is_zero()));
        Some(AffineSolutions {
            particular,
            basis,
            var_orders: self.var_orders.clone(),
        })
    }
}

impl AffineSolutions {
    fn reduce(&self, v: &[Int]) -> Vec<Int> {
        v.iter()
            .zip(self.var_orders.iter())
            .map(|(x, o)| if o.is_zero() { x.clone() } else { x.mod_floor(o) })
            .collect()
    }

    pub fn all_finite(&self) -> bool {
        self.var_orders.iter().all(|o| !o.is_zero())
    }

    fn norm(&self, v: &[Int]) -> Int {
        // torsion coordinates measured by distance to 0 around the cycle
        v.iter()
            .zip(self.var_orders.iter())
            .map(|(x, o)| {
                if o.is_zero() {
                    x.abs()
                } else {
                    let r = x.mod_floor(o);
                    (&r).min(&(o - &r)).clone()
                }
            })
            .sum()
    }

    /// Pairwise size reduction of the homogeneous basis over the free
    /// coordinates, so that short solutions are reachable through short walks.
    pub fn size_reduce(&mut self) {
        let free: Vec<usize> = self
            .var_orders
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_zero())
            .map(|(i, _)| i)
            .collect();
        for b in &mut self.basis {
            *b = b
                .iter()
                .zip(self.var_orders.iter())
                .map(|(x, o)| if o.is_zero() { x.clone() } else { x.mod_floor(o) })
                .collect();
        }
        if free.is_empty() {
            return;
        }
        let dot = |a: &[Int], b: &[Int]| -> Int {
            free.iter().map(|&i| &a[i] * &b[i]).sum()
        };
        for _ in 0..4 {
            let mut changed = false;
            for i in 0..self.basis.len() {
                for j in 0..self.basis.len() {
                    if i == j {
                        continue;
                    }
                    let den = dot(&self.basis[j], &self.basis[j]);
                    if den.is_zero() {
                        continue;
                    }
                    let num = dot(&self.basis[i], &self.basis[j]);
                    // nearest integer to num/den
                    let two_num_plus_den: Int = &num * 2 + &den;
                    let q: Int = two_num_plus_den.div_floor(&(&den * 2));
                    if q.is_zero() {
                        continue;
                    }
                    let cur = dot(&self.basis[i], &self.basis[i]);
                    let cand: Vec<Int> = self.basis[i]
                        .iter()
                        .zip(self.basis[j].iter())
                        .map(|(a, b)| a - &q * b)
                        .collect();
                    let cand_norm = dot(&cand, &cand);
                    if cand_norm < cur {
                        self.basis[i] = self.reduce(&cand);
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        self.basis.retain(|b| b.iter().any(|x| !x.is_zero()));
    }

    /// Lazy enumeration of distinct solutions in increasing norm order.
    /// Free coordinates are explored inside a corridor proportional to
    /// `free_bound`. After draining, `complete()` tells whether the whole
    /// solution set was visited (exact for all-finite variable orders).
    pub fn iter_solutions(&self, cap: usize, free_bound: i64) -> SolutionIter<'_> {
        use std::cmp::Reverse;
        let mut sols = SolutionIter {
            owner: self,
            corridor: int(free_bound.max(1) * 4 + 8),
            cap,
            emitted: 0,
            complete: true,
            seen: std::collections::BTreeSet::new(),
            heap: std::collections::BinaryHeap::new(),
        };
        let start = self.reduce(&self.particular);
        sols.heap.push(Reverse((self.norm(&start), start.clone())));
        sols.seen.insert(start);
        sols
    }

    /// Drain the iterator into a vector together with the completeness flag.
    pub fn enumerate(&self, cap: usize, free_bound: i64) -> (Vec<Vec<Int>>, bool) {
        let mut it = self.iter_solutions(cap, free_bound);
        let mut out = Vec::new();
        while let Some(v) = it.next_solution() {
            out.push(v);
        }
        (out, it.complete())
    }
}

pub struct SolutionIter<'a> {
    owner: &'a AffineSolutions,
    corridor: Int,
    cap: usize,
    emitted: usize,
    complete: bool,
    seen: std::collections::BTreeSet<Vec<Int>>,
    heap: std::collections::BinaryHeap<std::cmp::Reverse<(Int, Vec<Int>)>>,
}

impl SolutionIter<'_> {
    pub fn next_solution(&mut self) -> Option<Vec<Int>> {
        use std::cmp::Reverse;
        if self.emitted >= self.cap {
            self.complete = false;
            return None;
        }
        let Reverse((_, cur)) = self.heap.pop()?;
        for b in &self.owner.basis {
            for sgn in [1i64, -1] {
                let cand: Vec<Int> = cur
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| x + y * int(sgn))
                    .collect();
                let cand = self.owner.reduce(&cand);
                let inside = cand
                    .iter()
                    .zip(self.owner.var_orders.iter())
                    .all(|(x, o)| !o.is_zero() || x.abs() <= self.corridor);
                if !inside {
                    self.complete = false;
                    continue;
                }
                if self.seen.insert(cand.clone()) {
                    self.heap.push(Reverse((self.owner.norm(&cand), cand)));
                }
            }
        }
        self.emitted += 1;
        Some(cur)
    }

    /// Meaningful after draining: true when the whole solution set was seen.
    pub fn complete(&self) -> bool {
        self.complete && self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gcd_of_minors(m: &IntMat, k: usize) -> Int {
        // brute-force gcd of all k×k minors
        fn combos(n: usize, k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if n < k {
                return vec![];
            }
            let mut out = Vec::new();
            fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == k {
                    out.push(cur.clone());
                    return;
                }
                for i in start..n {
                    cur.push(i);
                    rec(i + 1, n, k, cur, out);
                    cur.pop();
                }
            }
            rec(0, n, k, &mut Vec::new(), &mut out);
            out
        }
        let mut g = Int::zero();
        for rs in combos(m.rows(), k) {
            for cs in combos(m.cols(), k) {
                let mut sub = IntMat::zeros(k, k);
                for (a, &i) in rs.iter().enumerate() {
                    for (b, &j) in cs.iter().enumerate() {
                        sub.set(a, b, m.at(i, j).clone());
                    }
                }
                g = g.gcd(&sub.det());
            }
        }
        g
    }

    /// Invariant factors from the gcd-of-minors characterization.
    fn minors_invariant_factors(m: &IntMat) -> Vec<Int> {
        let n = m.rows().min(m.cols());
        let mut prev = Int::one();
        let mut out = Vec::new();
        for k in 1..=n {
            let g = gcd_of_minors(m, k);
            if g.is_zero() {
                break;
            }
            out.push(&g / &prev);
            prev = g;
        }
        out
    }

    #[test]
    fn snf_identity() {
        let m = IntMat::identity(2);
        let s = smith_normal_form(&m);
        assert_eq!(s.s, IntMat::identity(2));
        assert!(s.u.is_unimodular() && s.v.is_unimodular());
    }

    #[test]
    fn snf_zero() {
        let m = IntMat::zeros(2, 3);
        let s = smith_normal_form(&m);
        assert!(s.s.is_zero());
    }

    #[test]
    fn snf_2468() {
        let m = IntMat::from_rows(&[vec![2, 4], vec![6, 8]]);
        let s = smith_normal_form(&m);
        assert_eq!(s.invariant_factors(), vec![int(2), int(4)]);
        assert_eq!(s.u.mul(&m).mul(&s.v), s.s);
    }

    #[test]
    fn cokernel_examples() {
        assert_eq!(
            cokernel(&IntMat::from_rows(&[vec![3]])),
            FgAbGroup::cyclic(3)
        );
        assert_eq!(cokernel(&IntMat::zeros(2, 0)), FgAbGroup::free(2));
        let g = cokernel(&IntMat::from_rows(&[vec![2, 0], vec![0, 0]]));
        assert_eq!(g, FgAbGroup::new(1, vec![int(2)]));
    }

    #[test]
    fn solve_examples() {
        let m = IntMat::from_rows(&[vec![2]]);
        assert_eq!(solve_linear(&m, &[int(4)]), Some(vec![int(2)]));
        assert_eq!(solve_linear(&m, &[int(3)]), None);
        let m = IntMat::from_rows(&[vec![2, 3]]);
        let x = solve_linear(&m, &[int(1)]).unwrap();
        assert_eq!(&x[0] * 2 + &x[1] * 3, int(1));
    }

    #[test]
    fn exactness_examples() {
        let z = FgAbGroup::free(1);
        let z2 = FgAbGroup::cyclic(2);
        let zero_to_z = AbHom::zero(FgAbGroup::zero(), z.clone());
        let id = AbHom::identity(&z);
        assert!(is_exact_at(&zero_to_z, &id).unwrap()); // 0 -> Z --id--> Z exact at first Z
        let times2 = AbHom::mul_scalar(&z, &int(2));
        let mod2 = AbHom::new(z.clone(), z2.clone(), IntMat::from_rows(&[vec![1]])).unwrap();
        assert!(is_exact_at(&times2, &mod2).unwrap());
        let zero_map = AbHom::zero(z.clone(), z2.clone());
        assert!(!is_exact_at(&times2, &zero_map).unwrap());
    }

    #[test]
    fn tensor_tor_examples() {
        let z = FgAbGroup::free(1);
        let (t, _) = tensor_zn(&z, 2).unwrap();
        assert_eq!(t, FgAbGroup::cyclic(2));
        let (t, _) = tensor_zn(&FgAbGroup::cyclic(3), 2).unwrap();
        assert!(t.is_zero_group());
        let (t, _) = tensor_zn(&FgAbGroup::cyclic(4), 2).unwrap();
        assert_eq!(t, FgAbGroup::cyclic(2));
        let (t, _) = tor_zn(&z, 6).unwrap();
        assert!(t.is_zero_group());
        let (t, incl) = tor_zn(&FgAbGroup::cyclic(4), 2).unwrap();
        assert_eq!(t, FgAbGroup::cyclic(2));
        assert_eq!(incl.apply(&[int(1)]), vec![int(2)]); // included as {0,2} ⊂ Z/4
        let (t, _) = tor_zn(&FgAbGroup::cyclic(3), 3).unwrap();
        assert_eq!(t, FgAbGroup::cyclic(3));
    }

    #[test]
    fn direct_sum_renormalizes() {
        let s = direct_sum(&FgAbGroup::cyclic(2), &FgAbGroup::cyclic(3));
        assert_eq!(s.group, FgAbGroup::cyclic(6));
        // round trips
        let x = vec![int(1)];
        let through = s.proj_a.apply(&s.incl_a.apply(&x));
        assert_eq!(through, x);
    }

    #[test]
    fn hom_space_counts() {
        let f2cube = FgAbGroup::new(0, vec![int(2), int(2), int(2)]);
        let hs = hom_space(&f2cube, &FgAbGroup::cyclic(2));
        assert_eq!(hs.all_homs().len(), 8);
    }

    /// Brute-force exactness on small finite groups by full enumeration.
    fn exact_brute(f: &AbHom, g: &AbHom) -> bool {
        let mid = f.tgt().clone();
        let mut image: Vec<Vec<Int>> = f
            .src()
            .elems()
            .iter()
            .map(|x| f.apply(x))
            .collect();
        image.sort();
        image.dedup();
        let mut kernel: Vec<Vec<Int>> = mid
            .elems()
            .into_iter()
            .filter(|x| g.tgt().is_zero_elem(&g.apply(x)))
            .collect();
        kernel.sort();
        kernel.dedup();
        image == kernel
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn snf_sound(rows in 1usize..5, cols in 1usize..5, seed in any::<u64>()) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as i64 % 19) - 9
            };
            let mut m = IntMat::zeros(rows, cols);
            for i in 0..rows { for j in 0..cols { m.set(i, j, int(next())); } }
            let s = smith_normal_form(&m);
            prop_assert_eq!(s.u.mul(&m).mul(&s.v), s.s.clone());
            prop_assert!(s.u.is_unimodular());
            prop_assert!(s.v.is_unimodular());
            prop_assert_eq!(s.u.mul(&s.uinv), IntMat::identity(rows));
            prop_assert_eq!(s.v.mul(&s.vinv), IntMat::identity(cols));
            let fac = s.invariant_factors();
            for w in fac.windows(2) { prop_assert!((&w[1] % &w[0]).is_zero()); }
            prop_assert_eq!(fac, minors_invariant_factors(&m));
        }

        #[test]
        fn cokernel_unimodular_invariant(seed in any::<u64>()) {
            let mut state = seed;
            let mut next = || {
                state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                ((state >> 33) as i64 % 9) - 4
            };
            let mut m = IntMat::zeros(3, 3);
            for i in 0..3 { for j in 0..3 { m.set(i, j, int(next())); } }
            let s = smith_normal_form(&m);
            prop_assert_eq!(cokernel(&m), cokernel(&s.u.mul(&m).mul(&s.v)));
        }

        #[test]
        fn exactness_matches_brute(d1 in 2u64..7, d2 in 2u64..7, seed in any::<u64>()) {
            // random pair Z/d1 --f--> Z/(d1 d2 gcd-ish) --g--> Z/d2 style maps
            let a = FgAbGroup::cyclic(d1);
            let b = FgAbGroup::new(0, vec![int((d1 * d2) as i64)]);
            let c = FgAbGroup::cyclic(d2);
            let f = AbHom::new(a.clone(), b.clone(),
                IntMat::from_rows(&[vec![(d2 as i64) * ((seed % 3) as i64 + 1)]])).ok();
            let g = AbHom::new(b.clone(), c.clone(),
                IntMat::from_rows(&[vec![((seed / 3) % (d2 as u64)) as i64]])).ok();
            if let (Some(f), Some(g)) = (f, g) {
                if a.order().unwrap() <= int(64) && b.order().unwrap() <= int(64) {
                    prop_assert_eq!(is_exact_at(&f, &g).unwrap(), exact_brute(&f, &g));
                }
            }
        }

        #[test]
        fn tensor_tor_orders(rank in 0usize..2, d in 2u64..13, n in 2u64..7) {
            let g = FgAbGroup::new(rank, vec![int(d as i64)]);
            let (t, proj) = tensor_zn(&g, n).unwrap();
            // |G ⊗ Z/n| = n^rank * gcd(d, n)
            let expect = int((n as i64).pow(rank as u32) * num_integer::gcd(d, n) as i64);
            prop_assert_eq!(t.order().unwrap(), expect);
            prop_assert!(proj.is_surjective());
            let (tor, incl) = tor_zn(&g, n).unwrap();
            // |Tor(G, Z/n)| = |torsion(G) ∩ ker(×n)|, by enumeration
            let count = FgAbGroup::new(0, vec![int(d as i64)]).elems().into_iter()
                .filter(|x| {
                    let mut v = g.zero_elem();
                    v[rank..].clone_from_slice(x);
                    g.is_zero_elem(&g.scale_elem(&int(n as i64), &v))
                })
                .count();
            prop_assert_eq!(tor.order().unwrap(), int(count as i64));
            prop_assert!(incl.is_injective());
        }
    }
}
