//! Semilinear subsets of finitely generated abelian groups: finite unions of
//! components `offset + Z·(z-periods) + N·(n-periods)`.
//!
//! Membership is decided exactly: the z-periods and the ambient relations are
//! quotiented out (Smith normal form), and the remaining nonnegative system is
//! searched with per-variable bounds. Bounds for periods with nonzero free
//! image come from a positivity functional found at construction; periods with
//! torsion-only image cycle with the quotient exponent. Components whose cone
//! is not pointed in the quotient are rejected at construction.

use crate::abelian::{AbHom, FgAbGroup, Int};
use num_traits::{Signed, Zero};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub offset: Vec<Int>,
    pub z_periods: Vec<Vec<Int>>,
    pub n_periods: Vec<Vec<Int>>,
}

#[derive(Clone, PartialEq, Eq)]
pub struct SemilinearSet {
    ambient: FgAbGroup,
    comps: Vec<Component>,
}

impl fmt::Debug for SemilinearSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "SemilinearSet({} comps in {})",
            self.comps.len(),
            self.ambient.describe()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SemilinearError {
    Dimension(String),
    UnpointedCone(String),
}

impl fmt::Display for SemilinearError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemilinearError::Dimension(s) => write!(f, "dimension: {s}"),
            SemilinearError::UnpointedCone(s) => write!(f, "unpointed cone: {s}"),
        }
    }
}

/// Quotient data for one component: ambient modulo (z-periods + relations).
struct ComponentSolver {
    q: FgAbGroup,
    proj: AbHom,
    /// images of the n-periods in the quotient
    cs: Vec<Vec<Int>>,
    /// positivity functional on the free part of q (empty when free rank 0)
    ell: Vec<Int>,
}

fn find_positivity_functional(free_rank: usize, vs: &[Vec<Int>]) -> Option<Vec<Int>> {
    // need ell with ell(v) >= 1 for every v in vs (all nonzero free parts)
    if vs.is_empty() || free_rank == 0 {
        return Some(vec![Int::zero(); free_rank]);
    }
    let range: Vec<i64> = (-4..=4).collect();
    let mut cand = vec![0usize; free_rank];
    loop {
        let ell: Vec<Int> = cand.iter().map(|&i| Int::from(range[i])).collect();
        let ok = vs.iter().all(|v| {
            let dot: Int = ell.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
            dot >= Int::from(1)
        });
        if ok {
            return Some(ell);
        }
        let mut pos = 0;
        loop {
            if pos == free_rank {
                return None;
            }
            cand[pos] += 1;
            if cand[pos] < range.len() {
                break;
            }
            cand[pos] = 0;
            pos += 1;
        }
    }
}

impl ComponentSolver {
    fn new(ambient: &FgAbGroup, comp: &Component) -> Result<Self, SemilinearError> {
        let (q, proj) = crate::abelian::quotient(ambient, &comp.z_periods);
        let cs: Vec<Vec<Int>> = comp.n_periods.iter().map(|p| proj.apply(p)).collect();
        let free = q.rank();
        let free_parts: Vec<Vec<Int>> = cs
            .iter()
            .map(|c| c[..free].to_vec())
            .filter(|v| v.iter().any(|x| !x.is_zero()))
            .collect();
        let ell = find_positivity_functional(free, &free_parts).ok_or_else(|| {
            SemilinearError::UnpointedCone(
                "no positivity functional for the period cone in the quotient".into(),
            )
        })?;
        Ok(ComponentSolver { q, proj, cs, ell })
    }

    /// Does `x - offset` lie in N·periods + Z·z_periods + relations?
    fn solves(&self, w: &[Int]) -> bool {
        let target = self.proj.apply(w);
        self.search(&target, 0)
    }

    fn search(&self, target: &[Int], j: usize) -> bool {
        let free = self.q.rank();
        if j == self.cs.len() {
            return self.q.is_zero_elem(target);
        }
        let c = &self.cs[j];
        if self.q.is_zero_elem(c) {
            return self.search(target, j + 1);
        }
        let free_part_zero = c[..free].iter().all(|x| x.is_zero());
        let bound: Int = if free_part_zero {
            // torsion-only period cycles with the exponent
            self.q.torsion_exponent() - 1
        } else {
            // positivity functional bounds the coefficient
            let dot: Int = self.ell.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
            if dot.is_negative() {
                Int::zero()
            } else {
                dot
            }
        };
        let mut k = Int::zero();
        let mut cur = target.to_vec();
        loop {
            if self.search(&cur, j + 1) {
                return true;
            }
            if k >= bound {
                return false;
            }
            k += 1;
            cur = self.q.add_elems(&cur, &self.q.neg_elem(c));
        }
    }
}

impl SemilinearSet {
    pub fn new(ambient: FgAbGroup, comps: Vec<Component>) -> Result<Self, SemilinearError> {
        for c in &comps {
            if c.offset.len() != ambient.dim()
                || c.z_periods.iter().any(|p| p.len() != ambient.dim())
                || c.n_periods.iter().any(|p| p.len() != ambient.dim())
            {
                return Err(SemilinearError::Dimension(
                    "component vectors must match the ambient dimension".into(),
                ));
            }
            ComponentSolver::new(&ambient, c)?;
        }
        Ok(SemilinearSet { ambient, comps })
    }

    /// The singleton {0}.
    pub fn zero_point(ambient: FgAbGroup) -> Self {
        let offset = ambient.zero_elem();
        SemilinearSet {
            ambient,
            comps: vec![Component {
                offset,
                z_periods: vec![],
                n_periods: vec![],
            }],
        }
    }

    /// The whole group as one component (all generators as z-periods).
    pub fn whole_group(ambient: FgAbGroup) -> Self {
        let z: Vec<Vec<Int>> = (0..ambient.dim()).map(|i| ambient.gen_elem(i)).collect();
        SemilinearSet {
            ambient: ambient.clone(),
            comps: vec![Component {
                offset: ambient.zero_elem(),
                z_periods: z,
                n_periods: vec![],
            }],
        }
    }

    pub fn ambient(&self) -> &FgAbGroup {
        &self.ambient
    }

    pub fn components(&self) -> &[Component] {
        &self.comps
    }

    pub fn is_empty_set(&self) -> bool {
        self.comps.is_empty()
    }

    pub fn contains(&self, x: &[Int]) -> bool {
        self.comps.iter().any(|c| {
            let solver = ComponentSolver::new(&self.ambient, c).expect("validated at construction");
            let w: Vec<Int> = x
                .iter()
                .zip(c.offset.iter())
                .map(|(a, b)| a - b)
                .collect();
            solver.solves(&w)
        })
    }

    /// Image under a homomorphism; the image periods must again form pointed
    /// cones (catalog pushforwards always do).
    pub fn push_forward(&self, h: &AbHom) -> Result<SemilinearSet, SemilinearError> {
        if h.src() != &self.ambient {
            return Err(SemilinearError::Dimension(
                "pushforward source group mismatch".into(),
            ));
        }
        let comps = self
            .comps
            .iter()
            .map(|c| Component {
                offset: h.apply(&c.offset),
                z_periods: c.z_periods.iter().map(|p| h.apply(p)).collect(),
                n_periods: c.n_periods.iter().map(|p| h.apply(p)).collect(),
            })
            .collect();
        SemilinearSet::new(h.tgt().clone(), comps)
    }

    /// Is the whole translated set `v + direction·N` inside this component's
    /// recession (homogeneous membership of a period)?
    fn recession_contains(&self, comp: &Component, v: &[Int]) -> bool {
        let solver = ComponentSolver::new(&self.ambient, comp).expect("validated");
        solver.solves(v)
    }

    /// Sufficient inclusion test: every component of `self` fits inside a
    /// single component of `other` (offset member + periods absorbed). Exact
    /// for finite ambients via full enumeration.
    pub fn subset_of(&self, other: &SemilinearSet) -> bool {
        if self.ambient != other.ambient {
            return false;
        }
        if self.ambient.is_finite() {
            return self
                .enumerate_finite()
                .is_subset(&other.enumerate_finite());
        }
        'comps: for c in &self.comps {
            for oc in &other.comps {
                if !other.contains(&c.offset) {
                    continue;
                }
                // offset of c relative to oc plus absorbed periods
                let rel: Vec<Int> = c
                    .offset
                    .iter()
                    .zip(oc.offset.iter())
                    .map(|(a, b)| a - b)
                    .collect();
                let solver = ComponentSolver::new(&self.ambient, oc).expect("validated");
                if !solver.solves(&rel) {
                    continue;
                }
                let zs_ok = c.z_periods.iter().all(|z| {
                    other.recession_contains(oc, z)
                        && other.recession_contains(oc, &self.ambient.neg_elem(z))
                });
                let ns_ok = c
                    .n_periods
                    .iter()
                    .all(|p| other.recession_contains(oc, p));
                if zs_ok && ns_ok {
                    continue 'comps;
                }
            }
            return false;
        }
        true
    }

    pub fn set_eq(&self, other: &SemilinearSet) -> bool {
        self.subset_of(other) && other.subset_of(self)
    }

    /// All members of a finite ambient group that lie in the set.
    pub fn enumerate_finite(&self) -> BTreeSet<Vec<Int>> {
        assert!(self.ambient.is_finite());
        self.ambient
            .elems()
            .into_iter()
            .filter(|x| self.contains(x))
            .collect()
    }

    /// Members whose free coordinates are bounded by `bound` in absolute
    /// value; exact within the box.
    pub fn enumerate_box(&self, bound: i64) -> BTreeSet<Vec<Int>> {
        let rank = self.ambient.rank();
        let mut frees: Vec<Vec<Int>> = vec![vec![]];
        for _ in 0..rank {
            let mut next = Vec::new();
            for f in &frees {
                for v in -bound..=bound {
                    let mut f2 = f.clone();
                    f2.push(Int::from(v));
                    next.push(f2);
                }
            }
            frees = next;
        }
        let tors = FgAbGroup::new(0, self.ambient.torsion().to_vec()).elems();
        let mut out = BTreeSet::new();
        for f in &frees {
            for t in &tors {
                let mut x = f.clone();
                x.extend(t.iter().cloned());
                if self.contains(&x) {
                    out.insert(x);
                }
            }
        }
        out
    }

    /// Membership in one designated component.
    pub fn component_contains(&self, k: usize, x: &[Int]) -> bool {
        let c = &self.comps[k];
        let solver = ComponentSolver::new(&self.ambient, c).expect("validated");
        let w: Vec<Int> = x
            .iter()
            .zip(c.offset.iter())
            .map(|(a, b)| a - b)
            .collect();
        solver.solves(&w)
    }

    /// Homogeneous membership: does `v` lie in the recession of component `k`
    /// (nonnegative span of its n-periods plus the z-period lattice)?
    pub fn component_recession_contains(&self, k: usize, v: &[Int]) -> bool {
        self.recession_contains(&self.comps[k], v)
    }

    /// The set translated by `shift`.
    pub fn translated(&self, shift: &[Int]) -> SemilinearSet {
        let comps = self
            .comps
            .iter()
            .map(|c| Component {
                offset: self.ambient.add_elems(&c.offset, shift),
                z_periods: c.z_periods.clone(),
                n_periods: c.n_periods.clone(),
            })
            .collect();
        SemilinearSet {
            ambient: self.ambient.clone(),
            comps,
        }
    }

    /// Cartesian product inside a direct-sum ambient, through the inclusions.
    pub fn product(
        a: &SemilinearSet,
        b: &SemilinearSet,
        incl_a: &AbHom,
        incl_b: &AbHom,
    ) -> Result<SemilinearSet, SemilinearError> {
        let ambient = incl_a.tgt().clone();
        let mut comps = Vec::new();
        for ca in &a.comps {
            for cb in &b.comps {
                let offset = ambient.add_elems(&incl_a.apply(&ca.offset), &incl_b.apply(&cb.offset));
                let mut z = Vec::new();
                let mut np = Vec::new();
                for p in &ca.z_periods {
                    z.push(incl_a.apply(p));
                }
                for p in &cb.z_periods {
                    z.push(incl_b.apply(p));
                }
                for p in &ca.n_periods {
                    np.push(incl_a.apply(p));
                }
                for p in &cb.n_periods {
                    np.push(incl_b.apply(p));
                }
                comps.push(Component {
                    offset,
                    z_periods: z,
                    n_periods: np,
                });
            }
        }
        SemilinearSet::new(ambient, comps)
    }

    /// Is there a point x in `self` and y in `other` with x = y? Exact when
    /// the combined difference cone is pointed or the ambient finite; returns
    /// None when the combined cone is unpointed (caller decides a fallback).
    pub fn intersects(&self, other: &SemilinearSet) -> Option<bool> {
        if self.ambient != other.ambient {
            return Some(false);
        }
        if self.ambient.is_finite() {
            return Some(
                self.enumerate_finite()
                    .intersection(&other.enumerate_finite())
                    .next()
                    .is_some(),
            );
        }
        // cheap witnesses first: a component offset lying in the other set
        if self.comps.iter().any(|c| other.contains(&c.offset))
            || other.comps.iter().any(|c| self.contains(&c.offset))
        {
            return Some(true);
        }
        for c1 in &self.comps {
            for c2 in &other.comps {
                // 0 = (o1 - o2) + N·P1 - N·P2 + Z·(z1 ∪ z2)  (mod relations)
                let mut z = c1.z_periods.clone();
                z.extend(c2.z_periods.iter().cloned());
                let mut np = c1.n_periods.clone();
                np.extend(c2.n_periods.iter().map(|p| self.ambient.neg_elem(p)));
                let offset: Vec<Int> = c1
                    .offset
                    .iter()
                    .zip(c2.offset.iter())
                    .map(|(a, b)| a - b)
                    .collect();
                let comp = Component {
                    offset: offset.clone(),
                    z_periods: z,
                    n_periods: np,
                };
                match ComponentSolver::new(&self.ambient, &comp) {
                    Ok(solver) => {
                        let w: Vec<Int> = offset.iter().map(|x| -x.clone()).collect();
                        if solver.solves(&w) {
                            return Some(true);
                        }
                    }
                    Err(_) => return None,
                }
            }
        }
        Some(false)
    }
}

/// Membership of `x - shift` in the pushforward of `set` under `h`: used for
/// order tests (is x reachable from the layer through the connecting map).
pub fn pushed_contains(set: &SemilinearSet, h: &AbHom, x: &[Int]) -> Result<bool, SemilinearError> {
    let pushed = set.push_forward(h)?;
    Ok(pushed.contains(x))
}

/// Integer-tuple convenience constructors.
pub fn offset_cone(
    ambient: &FgAbGroup,
    offset: Vec<i64>,
    z_periods: Vec<Vec<i64>>,
    n_periods: Vec<Vec<i64>>,
) -> Result<SemilinearSet, SemilinearError> {
    let to_int = |v: Vec<i64>| -> Vec<Int> { v.into_iter().map(Int::from).collect() };
    SemilinearSet::new(
        ambient.clone(),
        vec![Component {
            offset: to_int(offset),
            z_periods: z_periods.into_iter().map(to_int).collect(),
            n_periods: n_periods.into_iter().map(to_int).collect(),
        }],
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::int;
    use crate::abelian::IntMat as _IM;

    #[test]
    fn cone_in_z() {
        // {t >= 1} in Z
        let z = FgAbGroup::free(1);
        let s = offset_cone(&z, vec![1], vec![], vec![vec![1]]).unwrap();
        assert!(s.contains(&[int(1)]));
        assert!(s.contains(&[int(7)]));
        assert!(!s.contains(&[int(0)]));
        assert!(!s.contains(&[int(-3)]));
    }

    #[test]
    fn unit_layer_in_z2() {
        // {(t, s) : s >= 1, t unrestricted}
        let z2 = FgAbGroup::free(2);
        let s = offset_cone(&z2, vec![0, 1], vec![vec![1, 0]], vec![vec![0, 1]]).unwrap();
        assert!(s.contains(&[int(-1), int(1)])); // scalar rank 1
        assert!(s.contains(&[int(5), int(3)]));
        assert!(!s.contains(&[int(2), int(0)]));
        assert!(!s.contains(&[int(0), int(-1)]));
    }

    #[test]
    fn torsion_layer() {
        let z3 = FgAbGroup::cyclic(3);
        let s = SemilinearSet::whole_group(z3.clone());
        for x in z3.elems() {
            assert!(s.contains(&x));
        }
        assert_eq!(s.enumerate_finite().len(), 3);
    }

    #[test]
    fn pushforward_of_cone() {
        // push {t >= 1} ⊂ Z through t |-> (t, 0) into Z^2
        let z = FgAbGroup::free(1);
        let z2 = FgAbGroup::free(2);
        let s = offset_cone(&z, vec![1], vec![], vec![vec![1]]).unwrap();
        let h = AbHom::new(z, z2, _IM::from_rows(&[vec![1], vec![0]])).unwrap();
        let p = s.push_forward(&h).unwrap();
        assert!(p.contains(&[int(2), int(0)]));
        assert!(!p.contains(&[int(2), int(1)]));
    }

    #[test]
    fn subset_and_eq() {
        let z = FgAbGroup::free(1);
        let ge1 = offset_cone(&z, vec![1], vec![], vec![vec![1]]).unwrap();
        let ge2 = offset_cone(&z, vec![2], vec![], vec![vec![1]]).unwrap();
        assert!(ge2.subset_of(&ge1));
        assert!(!ge1.subset_of(&ge2));
        assert!(ge1.set_eq(&ge1));
    }

    #[test]
    fn unpointed_rejected() {
        let z = FgAbGroup::free(1);
        let bad = offset_cone(&z, vec![0], vec![], vec![vec![1], vec![-1]]);
        assert!(bad.is_err());
        // same set expressed with a z-period is fine
        let good = offset_cone(&z, vec![0], vec![vec![1]], vec![]).unwrap();
        assert!(good.contains(&[int(-5)]));
    }

    #[test]
    fn intersections() {
        let z2 = FgAbGroup::free(2);
        // {(t,0): t >= 1} vs {(t,s): s >= 1}
        let a = offset_cone(&z2, vec![1, 0], vec![], vec![vec![1, 0]]).unwrap();
        let b = offset_cone(&z2, vec![0, 1], vec![vec![1, 0]], vec![vec![0, 1]]).unwrap();
        assert_eq!(a.intersects(&b), Some(false));
        assert_eq!(b.intersects(&b), Some(true));
    }

    #[test]
    fn mixed_free_torsion() {
        // Z ⊕ Z/3 with layer {(b, a) : b any, a any} (kirchberg-over-compacts shape)
        let g = FgAbGroup::new(1, vec![int(3)]);
        let s = SemilinearSet::whole_group(g.clone());
        assert!(s.contains(&[int(-4), int(2)]));
        // box enumeration picks up all torsion coordinates
        let box1 = s.enumerate_box(1);
        assert_eq!(box1.len(), 3 * 3);
    }
}
