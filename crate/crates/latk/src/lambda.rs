//! Graded coefficient modules: Z2 × Z+ graded groups carrying reduction (rho),
//! coefficient-change (kappa) and Bockstein (beta) maps, truncated to a finite
//! divisor-closed set of moduli.
//!
//! A module is valid when both six-term families are exact: for each modulus n
//! the sequence
//! `G_j --xn--> G_j --rho--> G_{j,n} --beta--> G_{1-j} --xn--> ...`
//! and for each factorization m*n in the coefficient set the sequence through
//! `kappa_{mn,m}`, `kappa_{n,mn}` and `beta_{m,n} = rho_m ∘ beta_n`.

use crate::abelian::{
    direct_sum, hom_space, int, quotient, subgroup_group, tensor_zn, tor_zn, AbHom,
    AffineSolutions, CongruenceSystem, DirectSum, FgAbGroup, Int, IntMat,
};
use crate::{Budget, SearchOutcome};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Finite, divisor-closed set of moduli n >= 2.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CoefficientSet(BTreeSet<u64>);

impl CoefficientSet {
    pub fn new(moduli: impl IntoIterator<Item = u64>) -> Result<Self, String> {
        let set: BTreeSet<u64> = moduli.into_iter().collect();
        if set.is_empty() {
            return Err("coefficient set must be nonempty".into());
        }
        for &n in &set {
            if n < 2 {
                return Err(format!("modulus {n} < 2"));
            }
            for d in 2..=n {
                if n % d == 0 && !set.contains(&d) {
                    return Err(format!(
                        "coefficient set not divisor-closed: {d} | {n} missing"
                    ));
                }
            }
        }
        Ok(CoefficientSet(set))
    }

    pub fn default_set() -> Self {
        CoefficientSet::new([2, 3, 4, 6]).unwrap()
    }

    pub fn moduli(&self) -> impl Iterator<Item = u64> + '_ {
        self.0.iter().copied()
    }

    pub fn contains(&self, n: u64) -> bool {
        self.0.contains(&n)
    }

    pub fn to_vec(&self) -> Vec<u64> {
        self.0.iter().copied().collect()
    }

    /// Ordered pairs (m, n), both >= 2, with m*n in the set.
    pub fn factor_pairs(&self) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for &mn in &self.0 {
            for m in 2..mn {
                if mn % m == 0 {
                    let n = mn / m;
                    if n >= 2 && self.0.contains(&m) && self.0.contains(&n) {
                        out.push((m, n));
                    }
                }
            }
        }
        out.sort();
        out
    }
}

/// Index of one graded piece.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Slot {
    /// K_j
    G(u8),
    /// K_j( ; Z/n)
    Gn(u8, u64),
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::G(j) => write!(f, "K{j}"),
            Slot::Gn(j, n) => write!(f, "K{j};Z/{n}"),
        }
    }
}

/// Label of one structure map, used in validation reports.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum MapLabel {
    Rho(u8, u64),
    Beta(u8, u64),
    /// kappa_{mn,m}: G_{j,m} -> G_{j,mn} for the pair (m, n)
    KappaUp(u8, u64, u64),
    /// kappa_{n,mn}: G_{j,mn} -> G_{j,n} for the pair (m, n)
    KappaRed(u8, u64, u64),
}

impl MapLabel {
    pub fn slots(&self) -> (Slot, Slot) {
        match *self {
            MapLabel::Rho(j, n) => (Slot::G(j), Slot::Gn(j, n)),
            MapLabel::Beta(j, n) => (Slot::Gn(j, n), Slot::G(1 - j)),
            MapLabel::KappaUp(j, m, n) => (Slot::Gn(j, m), Slot::Gn(j, m * n)),
            MapLabel::KappaRed(j, m, n) => (Slot::Gn(j, m * n), Slot::Gn(j, n)),
        }
    }
}

impl fmt::Display for MapLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            MapLabel::Rho(j, n) => write!(f, "rho^{j}_{n}"),
            MapLabel::Beta(j, n) => write!(f, "beta^{j}_{n}"),
            MapLabel::KappaUp(j, m, n) => write!(f, "kappa^{j}_{{{},{}}}", m * n, m),
            MapLabel::KappaRed(j, m, n) => write!(f, "kappa^{j}_{{{},{}}}", n, m * n),
        }
    }
}

/// One item of a validation report.
#[derive(Clone, Debug)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub items: Vec<CheckItem>,
}

impl ValidationReport {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.items.push(CheckItem {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn merge(&mut self, other: ValidationReport) {
        self.items.extend(other.items);
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> Vec<&CheckItem> {
        self.items.iter().filter(|i| !i.passed).collect()
    }
}

/// Truncated graded coefficient module.
#[derive(Clone, PartialEq, Eq)]
pub struct LambdaModule {
    coeffs: CoefficientSet,
    g: [FgAbGroup; 2],
    gn: BTreeMap<(u8, u64), FgAbGroup>,
    rho: BTreeMap<(u8, u64), AbHom>,
    beta: BTreeMap<(u8, u64), AbHom>,
    kup: BTreeMap<(u8, u64, u64), AbHom>,
    kred: BTreeMap<(u8, u64, u64), AbHom>,
}

impl fmt::Debug for LambdaModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "LambdaModule(K0={}, K1={}",
            self.g[0].describe(),
            self.g[1].describe()
        )?;
        for ((j, n), g) in &self.gn {
            write!(f, ", K{j};Z/{n}={}", g.describe())?;
        }
        write!(f, ")")
    }
}

impl LambdaModule {
    pub fn coefficients(&self) -> &CoefficientSet {
        &self.coeffs
    }

    pub fn group(&self, s: Slot) -> &FgAbGroup {
        match s {
            Slot::G(j) => &self.g[j as usize],
            Slot::Gn(j, n) => &self.gn[&(j, n)],
        }
    }

    pub fn slots(&self) -> Vec<Slot> {
        let mut v = vec![Slot::G(0), Slot::G(1)];
        for &(j, n) in self.gn.keys() {
            v.push(Slot::Gn(j, n));
        }
        v.sort();
        v
    }

    pub fn map_labels(&self) -> Vec<MapLabel> {
        let mut v = Vec::new();
        for j in 0..2u8 {
            for n in self.coeffs.moduli() {
                v.push(MapLabel::Rho(j, n));
                v.push(MapLabel::Beta(j, n));
            }
            for (m, n) in self.coeffs.factor_pairs() {
                v.push(MapLabel::KappaUp(j, m, n));
                v.push(MapLabel::KappaRed(j, m, n));
            }
        }
        v.sort();
        v
    }

    pub fn structure_map(&self, l: MapLabel) -> &AbHom {
        match l {
            MapLabel::Rho(j, n) => &self.rho[&(j, n)],
            MapLabel::Beta(j, n) => &self.beta[&(j, n)],
            MapLabel::KappaUp(j, m, n) => &self.kup[&(j, m, n)],
            MapLabel::KappaRed(j, m, n) => &self.kred[&(j, m, n)],
        }
    }

    /// beta_{m,n}^j = rho_m^{1-j} ∘ beta_n^j : G_{j,n} -> G_{1-j,m}
    pub fn beta_hat(&self, j: u8, m: u64, n: u64) -> AbHom {
        self.rho[&(1 - j, m)]
            .compose(&self.beta[&(j, n)])
            .expect("beta_hat composition")
    }

    pub fn is_all_finite(&self) -> bool {
        self.slots().iter().all(|s| self.group(*s).is_finite())
    }

    /// Assemble a module from explicit data; shapes are checked here,
    /// exactness by `validate`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        coeffs: CoefficientSet,
        g0: FgAbGroup,
        g1: FgAbGroup,
        gn: BTreeMap<(u8, u64), FgAbGroup>,
        rho: BTreeMap<(u8, u64), AbHom>,
        beta: BTreeMap<(u8, u64), AbHom>,
        kup: BTreeMap<(u8, u64, u64), AbHom>,
        kred: BTreeMap<(u8, u64, u64), AbHom>,
    ) -> Result<Self, String> {
        let m = LambdaModule {
            coeffs,
            g: [g0, g1],
            gn,
            rho,
            beta,
            kup,
            kred,
        };
        m.check_shape()?;
        Ok(m)
    }

    fn check_shape(&self) -> Result<(), String> {
        for j in 0..2u8 {
            for n in self.coeffs.moduli() {
                if !self.gn.contains_key(&(j, n)) {
                    return Err(format!("missing graded piece K{j};Z/{n}"));
                }
            }
        }
        for l in self.map_labels() {
            let (a, b) = l.slots();
            let h = match l {
                MapLabel::Rho(j, n) => self.rho.get(&(j, n)),
                MapLabel::Beta(j, n) => self.beta.get(&(j, n)),
                MapLabel::KappaUp(j, m, n) => self.kup.get(&(j, m, n)),
                MapLabel::KappaRed(j, m, n) => self.kred.get(&(j, m, n)),
            }
            .ok_or_else(|| format!("missing structure map {l}"))?;
            if h.src() != self.group(a) || h.tgt() != self.group(b) {
                return Err(format!("structure map {l} has wrong source or target"));
            }
        }
        Ok(())
    }

    /// The module with all pieces zero.
    pub fn zero(coeffs: &CoefficientSet) -> Self {
        LambdaModule::standard(&FgAbGroup::zero(), &FgAbGroup::zero(), coeffs)
    }

    /// Split-carrier realization on (g0, g1):
    /// `G_{j,n} = (G_j ⊗ Z/n) ⊕ Tor(G_{1-j}, Z/n)` with the canonical maps.
    pub fn standard(g0: &FgAbGroup, g1: &FgAbGroup, coeffs: &CoefficientSet) -> Self {
        let g = [g0.clone(), g1.clone()];
        let mut gn = BTreeMap::new();
        let mut rho = BTreeMap::new();
        let mut beta = BTreeMap::new();
        let mut kup = BTreeMap::new();
        let mut kred = BTreeMap::new();
        struct SlotData {
            sum: DirectSum,
            tensor_proj: AbHom, // G_j -> G_j ⊗ Z/n
            tor_incl: AbHom,    // Tor(G_{1-j}, Z/n) -> G_{1-j}
        }
        let mut data: BTreeMap<(u8, u64), SlotData> = BTreeMap::new();
        for j in 0..2u8 {
            for n in coeffs.moduli() {
                let (tens, tproj) = tensor_zn(&g[j as usize], n).expect("tensor");
                let (tor, tincl) = tor_zn(&g[1 - j as usize], n).expect("tor");
                let sum = direct_sum(&tens, &tor);
                gn.insert((j, n), sum.group.clone());
                data.insert(
                    (j, n),
                    SlotData {
                        sum,
                        tensor_proj: tproj,
                        tor_incl: tincl,
                    },
                );
            }
        }
        for j in 0..2u8 {
            for n in coeffs.moduli() {
                let d = &data[&(j, n)];
                // rho = incl_tensor ∘ (G_j -> G_j ⊗ Z/n)
                let r = d.sum.incl_a.compose(&d.tensor_proj).expect("rho");
                rho.insert((j, n), r);
                // beta = (Tor -> G_{1-j}) ∘ proj_tor
                let b = d.tor_incl.compose(&d.sum.proj_b).expect("beta");
                beta.insert((j, n), b);
            }
            for (m, n) in coeffs.factor_pairs() {
                let mn = m * n;
                let dm = &data[&(j, m)];
                let dmn = &data[&(j, mn)];
                let dn = &data[&(j, n)];
                // kappa_{mn,m}: tensor part x + mG |-> n·x + mnG; Tor part inclusion
                let t_up = induced_tensor_map(
                    &g[j as usize],
                    &dm.tensor_proj,
                    &dmn.tensor_proj,
                    &int(n as i64),
                );
                let tor_up = induced_tor_map(&dm.tor_incl, &dmn.tor_incl, &Int::one());
                let up = AbHom::direct_sum(&t_up, &tor_up, &dm.sum, &dmn.sum);
                kup.insert((j, m, n), up);
                // kappa_{n,mn}: tensor part reduction mod n; Tor part ×m
                let t_red = induced_tensor_map(
                    &g[j as usize],
                    &dmn.tensor_proj,
                    &dn.tensor_proj,
                    &Int::one(),
                );
                let tor_red = induced_tor_map(&dmn.tor_incl, &dn.tor_incl, &int(m as i64));
                let red = AbHom::direct_sum(&t_red, &tor_red, &dmn.sum, &dn.sum);
                kred.insert((j, m, n), red);
            }
        }
        LambdaModule {
            coeffs: coeffs.clone(),
            g,
            gn,
            rho,
            beta,
            kup,
            kred,
        }
    }

    /// Exactness of both six-term families, one report item per position.
    pub fn validate(&self) -> ValidationReport {
        let mut rep = ValidationReport::default();
        if let Err(e) = self.check_shape() {
            rep.push("shape", false, e);
            return rep;
        }
        rep.push("shape", true, "all pieces and maps present");
        for n in self.coeffs.moduli() {
            let nn = int(n as i64);
            for j in 0..2u8 {
                let mul_j = AbHom::mul_scalar(&self.g[j as usize], &nn);
                let rho_j = &self.rho[&(j, n)];
                let beta_j = &self.beta[&(j, n)];
                let beta_prev = &self.beta[&(1 - j, n)];
                let at_g = crate::abelian::is_exact_at(beta_prev, &mul_j).unwrap_or(false);
                rep.push(
                    format!("six1[n={n}] exact at K{j} (beta, xn)"),
                    at_g,
                    String::new(),
                );
                let at_g2 = crate::abelian::is_exact_at(&mul_j, rho_j).unwrap_or(false);
                rep.push(
                    format!("six1[n={n}] exact at K{j} (xn, rho)"),
                    at_g2,
                    String::new(),
                );
                let at_gn = crate::abelian::is_exact_at(rho_j, beta_j).unwrap_or(false);
                rep.push(
                    format!("six1[n={n}] exact at K{j};Z/{n} (rho, beta)"),
                    at_gn,
                    String::new(),
                );
            }
        }
        for (m, n) in self.coeffs.factor_pairs() {
            let mn = m * n;
            for j in 0..2u8 {
                let bh_in = self.beta_hat(1 - j, m, n); // G_{1-j,n} -> G_{j,m}
                let up = &self.kup[&(j, m, n)];
                let red = &self.kred[&(j, m, n)];
                let bh_out = self.beta_hat(j, m, n); // G_{j,n} -> G_{1-j,m}
                let a = crate::abelian::is_exact_at(&bh_in, up).unwrap_or(false);
                rep.push(
                    format!("six2[m={m},n={n}] exact at K{j};Z/{m} (beta_hat, kup)"),
                    a,
                    String::new(),
                );
                let b = crate::abelian::is_exact_at(up, red).unwrap_or(false);
                rep.push(
                    format!("six2[m={m},n={n}] exact at K{j};Z/{mn} (kup, kred)"),
                    b,
                    String::new(),
                );
                let c = crate::abelian::is_exact_at(red, &bh_out).unwrap_or(false);
                rep.push(
                    format!("six2[m={m},n={n}] exact at K{j};Z/{n} (kred, beta_hat)"),
                    c,
                    String::new(),
                );
            }
        }
        rep
    }

    /// Direct sum with inclusion/projection morphisms.
    pub fn sum(a: &LambdaModule, b: &LambdaModule) -> Result<SumOfModules, String> {
        if a.coeffs != b.coeffs {
            return Err("coefficient sets differ".into());
        }
        let mut sums: BTreeMap<Slot, DirectSum> = BTreeMap::new();
        for s in a.slots() {
            sums.insert(s, direct_sum(a.group(s), b.group(s)));
        }
        let mut gn = BTreeMap::new();
        for &(j, n) in a.gn.keys() {
            gn.insert((j, n), sums[&Slot::Gn(j, n)].group.clone());
        }
        let g0 = sums[&Slot::G(0)].group.clone();
        let g1 = sums[&Slot::G(1)].group.clone();
        let mk = |la: &AbHom, lb: &AbHom, sa: Slot, sb: Slot| {
            AbHom::direct_sum(la, lb, &sums[&sa], &sums[&sb])
        };
        let mut rho = BTreeMap::new();
        let mut beta = BTreeMap::new();
        let mut kup = BTreeMap::new();
        let mut kred = BTreeMap::new();
        for l in a.map_labels() {
            let (sa, sb) = l.slots();
            let h = mk(a.structure_map(l), b.structure_map(l), sa, sb);
            match l {
                MapLabel::Rho(j, n) => {
                    rho.insert((j, n), h);
                }
                MapLabel::Beta(j, n) => {
                    beta.insert((j, n), h);
                }
                MapLabel::KappaUp(j, m, n) => {
                    kup.insert((j, m, n), h);
                }
                MapLabel::KappaRed(j, m, n) => {
                    kred.insert((j, m, n), h);
                }
            }
        }
        let module = LambdaModule {
            coeffs: a.coeffs.clone(),
            g: [g0, g1],
            gn,
            rho,
            beta,
            kup,
            kred,
        };
        let mut incl_a = BTreeMap::new();
        let mut incl_b = BTreeMap::new();
        let mut proj_a = BTreeMap::new();
        let mut proj_b = BTreeMap::new();
        for (s, d) in &sums {
            incl_a.insert(*s, d.incl_a.clone());
            incl_b.insert(*s, d.incl_b.clone());
            proj_a.insert(*s, d.proj_a.clone());
            proj_b.insert(*s, d.proj_b.clone());
        }
        Ok(SumOfModules {
            incl: [
                LambdaMorphism::from_components(a.clone(), module.clone(), incl_a)?,
                LambdaMorphism::from_components(b.clone(), module.clone(), incl_b)?,
            ],
            proj: [
                LambdaMorphism::from_components(module.clone(), a.clone(), proj_a)?,
                LambdaMorphism::from_components(module.clone(), b.clone(), proj_b)?,
            ],
            module,
        })
    }

    /// Functorial extension of a graded pair (f0: K0 -> K0', f1: K1 -> K1')
    /// to a morphism between the standard modules on those groups.
    pub fn standard_functor(
        f0: &AbHom,
        f1: &AbHom,
        src: &LambdaModule,
        tgt: &LambdaModule,
    ) -> Result<LambdaMorphism, String> {
        if src.g[0] != *f0.src()
            || tgt.g[0] != *f0.tgt()
            || src.g[1] != *f1.src()
            || tgt.g[1] != *f1.tgt()
        {
            return Err("standard_functor: group mismatch".into());
        }
        let f = [f0.clone(), f1.clone()];
        let mut comps: BTreeMap<Slot, AbHom> = BTreeMap::new();
        comps.insert(Slot::G(0), f0.clone());
        comps.insert(Slot::G(1), f1.clone());
        for j in 0..2u8 {
            for n in src.coeffs.moduli() {
                let comp =
                    induced_coefficient_map(src, tgt, j, n, &f[j as usize], &f[1 - j as usize])?;
                comps.insert(Slot::Gn(j, n), comp);
            }
        }
        LambdaMorphism::from_components(src.clone(), tgt.clone(), comps)
    }

    /// Conjugate every structure map by the given graded automorphisms; the
    /// returned morphism (self -> result) is an isomorphism by construction.
    pub fn conjugate(
        &self,
        comps: &BTreeMap<Slot, AbHom>,
    ) -> Result<(LambdaModule, LambdaMorphism), String> {
        let mut inv: BTreeMap<Slot, AbHom> = BTreeMap::new();
        for s in self.slots() {
            let u = comps
                .get(&s)
                .ok_or_else(|| format!("missing automorphism at {s}"))?;
            if u.src() != self.group(s) || u.tgt() != self.group(s) {
                return Err(format!("automorphism at {s} has wrong shape"));
            }
            inv.insert(
                s,
                u.inverse()
                    .ok_or_else(|| format!("component at {s} not invertible"))?,
            );
        }
        let conj = |l: MapLabel| -> AbHom {
            let (a, b) = l.slots();
            comps[&b]
                .compose(self.structure_map(l))
                .and_then(|h| h.compose(&inv[&a]))
                .expect("conjugation composes")
        };
        let mut rho = BTreeMap::new();
        let mut beta = BTreeMap::new();
        let mut kup = BTreeMap::new();
        let mut kred = BTreeMap::new();
        for l in self.map_labels() {
            let h = conj(l);
            match l {
                MapLabel::Rho(j, n) => {
                    rho.insert((j, n), h);
                }
                MapLabel::Beta(j, n) => {
                    beta.insert((j, n), h);
                }
                MapLabel::KappaUp(j, m, n) => {
                    kup.insert((j, m, n), h);
                }
                MapLabel::KappaRed(j, m, n) => {
                    kred.insert((j, m, n), h);
                }
            }
        }
        let out = LambdaModule {
            coeffs: self.coeffs.clone(),
            g: self.g.clone(),
            gn: self.gn.clone(),
            rho,
            beta,
            kup,
            kred,
        };
        let w = LambdaMorphism::from_components(self.clone(), out.clone(), comps.clone())?;
        Ok((out, w))
    }

    /// Cheap isomorphism invariants: canonical types of kernels and images of
    /// all structure maps and short composites, plus pairwise image sums.
    pub fn fingerprint(&self) -> Vec<String> {
        let mut maps: Vec<(String, AbHom)> = Vec::new();
        for l in self.map_labels() {
            maps.push((l.to_string(), self.structure_map(l).clone()));
        }
        for j in 0..2u8 {
            for (m, n) in self.coeffs.factor_pairs() {
                maps.push((format!("beta_hat^{j}[{m},{n}]"), self.beta_hat(j, m, n)));
                let up_rho = self.kup[&(j, m, n)]
                    .compose(&self.rho[&(j, m)])
                    .expect("kup∘rho");
                maps.push((format!("kup∘rho^{j}[{m},{n}]"), up_rho));
                let red_rho = self.kred[&(j, m, n)]
                    .compose(&self.rho[&(j, m * n)])
                    .expect("kred∘rho");
                maps.push((format!("kred∘rho^{j}[{m},{n}]"), red_rho));
                let beta_up = self.beta[&(j, m * n)]
                    .compose(&self.kup[&(j, m, n)])
                    .expect("beta∘kup");
                maps.push((format!("beta∘kup^{j}[{m},{n}]"), beta_up));
                let beta_red = self.beta[&(j, n)]
                    .compose(&self.kred[&(j, m, n)])
                    .expect("beta∘kred");
                maps.push((format!("beta∘kred^{j}[{m},{n}]"), beta_red));
            }
        }
        let mut out = Vec::new();
        for (name, h) in &maps {
            out.push(format!(
                "{name}: ker={} im={}",
                h.kernel_group().describe(),
                h.image_group().describe()
            ));
        }
        for (i, (na, ha)) in maps.iter().enumerate() {
            for (nb, hb) in maps.iter().skip(i + 1) {
                if ha.tgt() != hb.tgt() {
                    continue;
                }
                let mut gens: Vec<Vec<Int>> = Vec::new();
                for c in 0..ha.src().dim() {
                    gens.push(ha.matrix().col(c));
                }
                for c in 0..hb.src().dim() {
                    gens.push(hb.matrix().col(c));
                }
                out.push(format!(
                    "{na}+{nb}: {}",
                    subgroup_group(ha.tgt(), &gens).describe()
                ));
            }
        }
        out
    }
}

/// Tensor-part map `G⊗Z/a -> G⊗Z/b` induced by multiplication by `mult` on G.
fn induced_tensor_map(g: &FgAbGroup, src_proj: &AbHom, tgt_proj: &AbHom, mult: &Int) -> AbHom {
    let src_t = src_proj.tgt().clone();
    let tgt_t = tgt_proj.tgt().clone();
    let mut cols: Vec<Vec<Int>> = vec![tgt_t.zero_elem(); src_t.dim()];
    for i in 0..g.dim() {
        let img_src = src_proj.apply(&g.gen_elem(i));
        for (p, v) in img_src.iter().enumerate() {
            if v.is_one() {
                cols[p] = tgt_proj.apply(&g.scale_elem(mult, &g.gen_elem(i)));
            }
        }
    }
    AbHom::new(src_t, tgt_t.clone(), IntMat::from_cols(tgt_t.dim(), &cols)).expect("tensor map")
}

/// Tor-part map given by multiplication by `mult` inside the ambient group
/// (inclusion of torsion subgroups for mult = 1).
fn induced_tor_map(src_incl: &AbHom, tgt_incl: &AbHom, mult: &Int) -> AbHom {
    let src_t = src_incl.src().clone();
    let tgt_t = tgt_incl.src().clone();
    let b = src_incl.tgt().clone();
    let mut cols = Vec::new();
    for i in 0..src_t.dim() {
        let in_b = b.scale_elem(mult, &src_incl.apply(&src_t.gen_elem(i)));
        let pre = tgt_incl
            .preimage(&in_b)
            .expect("multiplied torsion element lies in target Tor subgroup");
        cols.push(pre);
    }
    AbHom::new(src_t, tgt_t.clone(), IntMat::from_cols(tgt_t.dim(), &cols)).expect("tor map")
}

/// Coefficient-slot component of the functorial morphism between standard
/// modules: block map (tensor via f_j) ⊕ (Tor via f_{1-j}).
fn induced_coefficient_map(
    src: &LambdaModule,
    tgt: &LambdaModule,
    j: u8,
    n: u64,
    f_j: &AbHom,
    f_other: &AbHom,
) -> Result<AbHom, String> {
    let (s_t, s_tp) = tensor_zn(&src.g[j as usize], n).map_err(|e| e.to_string())?;
    let (s_tor, s_ti) = tor_zn(&src.g[1 - j as usize], n).map_err(|e| e.to_string())?;
    let s_sum = direct_sum(&s_t, &s_tor);
    let (t_t, t_tp) = tensor_zn(&tgt.g[j as usize], n).map_err(|e| e.to_string())?;
    let (t_tor, t_ti) = tor_zn(&tgt.g[1 - j as usize], n).map_err(|e| e.to_string())?;
    let t_sum = direct_sum(&t_t, &t_tor);
    if s_sum.group != *src.group(Slot::Gn(j, n)) || t_sum.group != *tgt.group(Slot::Gn(j, n)) {
        return Err("standard_functor: modules are not split-standard carriers".into());
    }
    let mut t_cols: Vec<Vec<Int>> = vec![t_t.zero_elem(); s_t.dim()];
    let gsrc = f_j.src();
    for i in 0..gsrc.dim() {
        let img = s_tp.apply(&gsrc.gen_elem(i));
        for (p, v) in img.iter().enumerate() {
            if v.is_one() {
                t_cols[p] = t_tp.apply(&f_j.apply(&gsrc.gen_elem(i)));
            }
        }
    }
    let tensor_part = AbHom::new(s_t.clone(), t_t.clone(), IntMat::from_cols(t_t.dim(), &t_cols))
        .map_err(|e| e.to_string())?;
    let mut tor_cols = Vec::new();
    for i in 0..s_tor.dim() {
        let in_b = f_other.apply(&s_ti.apply(&s_tor.gen_elem(i)));
        let pre = t_ti
            .preimage(&in_b)
            .ok_or_else(|| "functorial Tor image escapes the torsion subgroup".to_string())?;
        tor_cols.push(pre);
    }
    let tor_part = AbHom::new(
        s_tor.clone(),
        t_tor.clone(),
        IntMat::from_cols(t_tor.dim(), &tor_cols),
    )
    .map_err(|e| e.to_string())?;
    Ok(AbHom::direct_sum(&tensor_part, &tor_part, &s_sum, &t_sum))
}

pub struct SumOfModules {
    pub module: LambdaModule,
    pub incl: [LambdaMorphism; 2],
    pub proj: [LambdaMorphism; 2],
}

/// Graded morphism between two modules; Λ-linearity is a property checked by
/// `is_lambda_linear`, not an invariant of the type.
#[derive(Clone, PartialEq, Eq)]
pub struct LambdaMorphism {
    src: LambdaModule,
    tgt: LambdaModule,
    comps: BTreeMap<Slot, AbHom>,
}

impl fmt::Debug for LambdaMorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "LambdaMorphism({:?} -> {:?})", self.src, self.tgt)
    }
}

impl LambdaMorphism {
    pub fn from_components(
        src: LambdaModule,
        tgt: LambdaModule,
        comps: BTreeMap<Slot, AbHom>,
    ) -> Result<Self, String> {
        for s in src.slots() {
            let h = comps
                .get(&s)
                .ok_or_else(|| format!("missing component at {s}"))?;
            if h.src() != src.group(s) || h.tgt() != tgt.group(s) {
                return Err(format!("component at {s} has wrong source or target"));
            }
        }
        Ok(LambdaMorphism { src, tgt, comps })
    }

    pub fn identity(m: &LambdaModule) -> Self {
        let comps = m
            .slots()
            .into_iter()
            .map(|s| (s, AbHom::identity(m.group(s))))
            .collect();
        LambdaMorphism {
            src: m.clone(),
            tgt: m.clone(),
            comps,
        }
    }

    pub fn zero(src: &LambdaModule, tgt: &LambdaModule) -> Self {
        let comps = src
            .slots()
            .into_iter()
            .map(|s| (s, AbHom::zero(src.group(s).clone(), tgt.group(s).clone())))
            .collect();
        LambdaMorphism {
            src: src.clone(),
            tgt: tgt.clone(),
            comps,
        }
    }

    pub fn source(&self) -> &LambdaModule {
        &self.src
    }

    pub fn target(&self) -> &LambdaModule {
        &self.tgt
    }

    pub fn component(&self, s: Slot) -> &AbHom {
        &self.comps[&s]
    }

    pub fn components(&self) -> &BTreeMap<Slot, AbHom> {
        &self.comps
    }

    pub fn compose(&self, other: &LambdaMorphism) -> Result<LambdaMorphism, String> {
        if other.tgt != self.src {
            return Err("compose: middle modules differ".into());
        }
        let mut comps = BTreeMap::new();
        for s in other.src.slots() {
            comps.insert(
                s,
                self.comps[&s]
                    .compose(&other.comps[&s])
                    .map_err(|e| e.to_string())?,
            );
        }
        Ok(LambdaMorphism {
            src: other.src.clone(),
            tgt: self.tgt.clone(),
            comps,
        })
    }

    /// Commutes with every rho, kappa, beta of source and target.
    pub fn is_lambda_linear(&self) -> bool {
        for l in self.src.map_labels() {
            let (a, b) = l.slots();
            let lhs = self.comps[&b].compose(self.src.structure_map(l));
            let rhs = self.tgt.structure_map(l).compose(&self.comps[&a]);
            match (lhs, rhs) {
                (Ok(x), Ok(y)) => {
                    if x != y {
                        return false;
                    }
                }
                _ => return false,
            }
        }
        true
    }

    pub fn is_invertible(&self) -> bool {
        self.comps.values().all(|h| h.is_bijective())
    }

    pub fn inverse(&self) -> Option<LambdaMorphism> {
        let mut comps = BTreeMap::new();
        for (s, h) in &self.comps {
            comps.insert(*s, h.inverse()?);
        }
        Some(LambdaMorphism {
            src: self.tgt.clone(),
            tgt: self.src.clone(),
            comps,
        })
    }
}

/// Componentwise group isomorphism search: decided by canonical forms.
pub fn graded_iso_search(m1: &LambdaModule, m2: &LambdaModule) -> SearchOutcome<LambdaMorphism> {
    if m1.coefficients() != m2.coefficients() {
        return SearchOutcome::Absent;
    }
    for s in m1.slots() {
        if m1.group(s) != m2.group(s) {
            return SearchOutcome::Absent;
        }
    }
    let comps = m1
        .slots()
        .into_iter()
        .map(|s| (s, AbHom::identity(m1.group(s))))
        .collect();
    SearchOutcome::Found(LambdaMorphism {
        src: m1.clone(),
        tgt: m2.clone(),
        comps,
    })
}

/// Layout of unknown hom slots for the commuting-square solver. Shared by the
/// Λ-level and lattice-level isomorphism searches.
pub struct HomSystem<K: Ord + Copy> {
    pub slots: Vec<(K, crate::abelian::HomSpace)>,
    offsets: Vec<usize>,
    pub system: CongruenceSystem,
}

impl<K: Ord + Copy> HomSystem<K> {
    pub fn new(slot_pairs: Vec<(K, FgAbGroup, FgAbGroup)>) -> Self {
        let mut slots = Vec::new();
        let mut offsets = Vec::new();
        let mut orders = Vec::new();
        for (s, a, b) in slot_pairs {
            let hs = hom_space(&a, &b);
            offsets.push(orders.len());
            orders.extend(hs.orders.iter().cloned());
            slots.push((s, hs));
        }
        HomSystem {
            slots,
            offsets,
            system: CongruenceSystem::new(orders),
        }
    }

    fn slot_index(&self, s: K) -> usize {
        self.slots
            .iter()
            .position(|(t, _)| *t == s)
            .expect("unknown slot")
    }

    /// Add the condition `phi_b ∘ f_src = f_tgt ∘ phi_a` on the unknowns.
    pub fn add_square(&mut self, a: K, b: K, f_src: &AbHom, f_tgt: &AbHom) {
        let ia = self.slot_index(a);
        let ib = self.slot_index(b);
        let nvars = self.system.nvars;
        let tgt_b = self.slots[ib].1.tgt.clone();
        let rows = tgt_b.dim();
        let cols = f_src.src().dim();
        for r in 0..rows {
            for c in 0..cols {
                let mut coeffs = vec![Int::zero(); nvars];
                for (k, bmat) in self.slots[ib].1.basis.iter().enumerate() {
                    let m = bmat.mul(f_src.matrix());
                    coeffs[self.offsets[ib] + k] = m.at(r, c).clone();
                }
                for (k, bmat) in self.slots[ia].1.basis.iter().enumerate() {
                    let m = f_tgt.matrix().mul(bmat);
                    coeffs[self.offsets[ia] + k] = &coeffs[self.offsets[ia] + k] - m.at(r, c);
                }
                if coeffs.iter().all(|x| x.is_zero()) {
                    continue;
                }
                let modulus = tgt_b.gen_order(r);
                self.system.add_row(coeffs, Int::zero(), modulus);
            }
        }
    }

    pub fn solve(&self) -> AffineSolutions {
        self.system
            .solve()
            .expect("homogeneous system always has the zero solution")
    }

    pub fn homs_from(&self, coeffs: &[Int]) -> BTreeMap<K, AbHom> {
        let mut out = BTreeMap::new();
        for (i, (s, hs)) in self.slots.iter().enumerate() {
            let start = self.offsets[i];
            let end = start + hs.basis.len();
            out.insert(*s, hs.hom_from_coeffs(&coeffs[start..end]));
        }
        out
    }
}

fn lambda_hom_system(m1: &LambdaModule, m2: &LambdaModule) -> HomSystem<Slot> {
    let slot_pairs = m1
        .slots()
        .into_iter()
        .map(|s| (s, m1.group(s).clone(), m2.group(s).clone()))
        .collect();
    let mut hs = HomSystem::new(slot_pairs);
    for l in m1.map_labels() {
        let (a, b) = l.slots();
        hs.add_square(a, b, m1.structure_map(l), m2.structure_map(l));
    }
    hs
}

/// Exhaustive Λ-linear isomorphism search via the commuting-square solver.
/// Complete for all-finite modules; with free parts the enumeration is bounded
/// by `free_bound` and a miss is reported as budget exhaustion, never absence.
pub fn lambda_iso_search(
    m1: &LambdaModule,
    m2: &LambdaModule,
    budget: &Budget,
    free_bound: i64,
) -> SearchOutcome<LambdaMorphism> {
    if m1.coefficients() != m2.coefficients() {
        return SearchOutcome::Absent;
    }
    for s in m1.slots() {
        if m1.group(s) != m2.group(s) {
            return SearchOutcome::Absent;
        }
    }
    let sys = lambda_hom_system(m1, m2);
    let mut sols = sys.solve();
    sols.size_reduce();
    let mut it = sols.iter_solutions(budget.max_nodes, free_bound);
    while let Some(coeffs) = it.next_solution() {
        let comps = sys.homs_from(&coeffs);
        if comps.values().all(|h| h.is_bijective()) {
            let w = LambdaMorphism {
                src: m1.clone(),
                tgt: m2.clone(),
                comps,
            };
            if w.is_lambda_linear() && w.is_invertible() {
                return SearchOutcome::Found(w);
            }
        }
    }
    if it.complete() {
        SearchOutcome::Absent
    } else {
        SearchOutcome::BudgetExceeded("bounded search over free directions found no witness".into())
    }
}

/// Closure of a generating set inside a finite group.
pub fn subgroup_elements(g: &FgAbGroup, gens: &[Vec<Int>]) -> BTreeSet<Vec<Int>> {
    let mut set: BTreeSet<Vec<Int>> = BTreeSet::new();
    set.insert(g.zero_elem());
    let mut frontier: Vec<Vec<Int>> = vec![g.zero_elem()];
    while let Some(x) = frontier.pop() {
        for gen in gens {
            let y = g.add_elems(&x, gen);
            if set.insert(y.clone()) {
                frontier.push(y);
            }
        }
    }
    set
}

/// All homs g -> tgt with kernel exactly the subgroup generated by `ker_gens`.
fn homs_with_exact_kernel(g: &FgAbGroup, ker_gens: &[Vec<Int>], tgt: &FgAbGroup) -> Vec<AbHom> {
    let (q, proj) = quotient(g, ker_gens);
    let hs = hom_space(&q, tgt);
    if !hs.is_finite() {
        return Vec::new();
    }
    hs.all_homs()
        .into_iter()
        .filter(|h| h.is_injective())
        .map(|h| h.compose(&proj).expect("compose with projection"))
        .collect()
}

/// All homs g -> tgt with kernel exactly `ker_gens` and image exactly the
/// subgroup generated by `img_gens`.
fn homs_with_kernel_and_image(
    g: &FgAbGroup,
    ker_gens: &[Vec<Int>],
    tgt: &FgAbGroup,
    img_gens: &[Vec<Int>],
) -> Vec<AbHom> {
    let (q, proj) = quotient(g, ker_gens);
    let img_gens: Vec<Vec<Int>> = img_gens
        .iter()
        .map(|v| tgt.normalize(v))
        .filter(|v| !v.iter().all(|x| x.is_zero()))
        .collect();
    if img_gens.is_empty() {
        return if q.is_zero_group() {
            vec![AbHom::zero(g.clone(), tgt.clone())]
        } else {
            Vec::new()
        };
    }
    let mat = IntMat::from_cols(tgt.dim(), &img_gens);
    let to_tgt = AbHom::new(FgAbGroup::free(img_gens.len()), tgt.clone(), mat).expect("img map");
    let rels = IntMat::from_cols(img_gens.len(), &to_tgt.kernel_gens());
    let p = crate::abelian::present(img_gens.len(), &rels);
    let s = p.group.clone();
    let mut incl_cols = Vec::new();
    for lift in &p.can_lifts {
        let mut acc = tgt.zero_elem();
        for (i, c) in lift.iter().enumerate() {
            acc = tgt.add_elems(&acc, &tgt.scale_elem(c, &img_gens[i]));
        }
        incl_cols.push(acc);
    }
    let incl = AbHom::new(
        s.clone(),
        tgt.clone(),
        IntMat::from_cols(tgt.dim(), &incl_cols),
    )
    .expect("subgroup inclusion");
    if q != s {
        return Vec::new();
    }
    let hs = hom_space(&q, &s);
    if !hs.is_finite() {
        return Vec::new();
    }
    hs.all_homs()
        .into_iter()
        .filter(|h| h.is_bijective())
        .map(|iso| {
            incl.compose(&iso)
                .and_then(|h| h.compose(&proj))
                .expect("kernel/image hom assembly")
        })
        .collect()
}

fn image_gens(h: &AbHom) -> Vec<Vec<Int>> {
    (0..h.src().dim())
        .map(|j| h.matrix().col(j))
        .filter(|v| !h.tgt().is_zero_elem(v))
        .collect()
}

fn all_automorphisms(g: &FgAbGroup) -> Vec<(AbHom, AbHom)> {
    let hs = hom_space(g, g);
    if !hs.is_finite() {
        let id = AbHom::identity(g);
        return vec![(id.clone(), id)];
    }
    hs.all_homs()
        .into_iter()
        .filter(|h| h.is_bijective())
        .map(|h| {
            let inv = h.inverse().expect("bijective hom inverts");
            (h, inv)
        })
        .collect()
}

fn hom_key(h: &AbHom) -> Vec<Int> {
    let mut v = Vec::new();
    for i in 0..h.matrix().rows() {
        for j in 0..h.matrix().cols() {
            v.push(h.matrix().at(i, j).clone());
        }
    }
    v
}

/// Options for the variant enumeration.
#[derive(Clone, Debug)]
pub struct BetaVariantOptions {
    pub budget: Budget,
    /// stop early once this many pairwise non-isomorphic classes are found
    pub stop_at: Option<usize>,
    /// solver-certify same-fingerprint candidates instead of merging them
    pub thorough: bool,
}

impl Default for BetaVariantOptions {
    fn default() -> Self {
        BetaVariantOptions {
            budget: Budget::default(),
            stop_at: None,
            thorough: false,
        }
    }
}

#[derive(Debug)]
pub struct BetaVariantResult {
    pub representatives: Vec<LambdaModule>,
    pub candidates_seen: usize,
    /// true when the full (gauge-reduced) assignment space was scanned
    pub exhausted: bool,
    /// true when same-fingerprint candidates were merged without solver proof
    pub merged_by_fingerprint: bool,
}

/// Enumerate structure-map assignments (rho, beta, kappa) on the graded
/// carrier of `standard(g0, g1)` that pass validation, up to carrier gauge,
/// and return pairwise non-isomorphic representatives certified by
/// `lambda_iso_search`.
pub fn beta_variant_search(
    g0: &FgAbGroup,
    g1: &FgAbGroup,
    coeffs: &CoefficientSet,
    opts: &BetaVariantOptions,
) -> Result<BetaVariantResult, String> {
    if !g0.is_finite() || !g1.is_finite() {
        return Err("variant search requires finite groups".into());
    }
    let std_mod = LambdaModule::standard(g0, g1, coeffs);
    let g = [g0.clone(), g1.clone()];

    // per (j, n): gauge-reduced (rho, beta) pairs exact for the first family
    let mut slot_pairs: BTreeMap<(u8, u64), Vec<(AbHom, AbHom)>> = BTreeMap::new();
    for j in 0..2u8 {
        for n in coeffs.moduli() {
            let nn = int(n as i64);
            let carrier = std_mod.group(Slot::Gn(j, n)).clone();
            let auts = all_automorphisms(&carrier);
            let ker_rho = g[j as usize].multiple_subgroup_gens(&nn);
            let rhos = homs_with_exact_kernel(&g[j as usize], &ker_rho, &carrier);
            let tor_target = g[1 - j as usize].n_torsion_gens(&nn);
            let mut reduced: BTreeMap<Vec<Int>, (AbHom, AbHom)> = BTreeMap::new();
            for rho in rhos {
                let betas = homs_with_kernel_and_image(
                    &carrier,
                    &image_gens(&rho),
                    &g[1 - j as usize],
                    &tor_target,
                );
                for beta in betas {
                    let mut best: Option<Vec<Int>> = None;
                    let mut best_pair = None;
                    for (u, uinv) in &auts {
                        let r2 = u.compose(&rho).expect("gauge rho");
                        let b2 = beta.compose(uinv).expect("gauge beta");
                        let mut key = hom_key(&r2);
                        key.extend(hom_key(&b2));
                        if best.as_ref().map_or(true, |b| key < *b) {
                            best = Some(key);
                            best_pair = Some((r2, b2));
                        }
                    }
                    if let (Some(k), Some(p)) = (best, best_pair) {
                        reduced.entry(k).or_insert(p);
                    }
                }
            }
            let mut list: Vec<(AbHom, AbHom)> = reduced.into_values().collect();
            let std_rho = std_mod.structure_map(MapLabel::Rho(j, n)).clone();
            let std_beta = std_mod.structure_map(MapLabel::Beta(j, n)).clone();
            list.sort_by_key(|(r, b)| {
                let is_std = *r == std_rho && *b == std_beta;
                let mut k = hom_key(r);
                k.extend(hom_key(b));
                (if is_std { 0 } else { 1 }, k)
            });
            slot_pairs.insert((j, n), list);
        }
    }

    let slot_keys: Vec<(u8, u64)> = slot_pairs.keys().cloned().collect();
    let mut result = BetaVariantResult {
        representatives: Vec::new(),
        candidates_seen: 0,
        exhausted: true,
        merged_by_fingerprint: !opts.thorough,
    };
    let mut fingerprints: Vec<Vec<String>> = Vec::new();
    let mut nodes: usize = 0;
    let pairs = coeffs.factor_pairs();

    // iterate the cartesian product of per-slot (rho, beta) choices
    let mut slot_idx = vec![0usize; slot_keys.len()];
    'outer: loop {
        let mut rho = BTreeMap::new();
        let mut beta = BTreeMap::new();
        for (i, k) in slot_keys.iter().enumerate() {
            let (r, b) = &slot_pairs[k][slot_idx[i]];
            rho.insert(*k, r.clone());
            beta.insert(*k, b.clone());
        }
        let beta_hat =
            |j: u8, m: u64, n: u64| -> AbHom { rho[&(1 - j, m)].compose(&beta[&(j, n)]).unwrap() };
        // per ordered factor pair and parity: constrained (kup, kred) options
        let mut kappa_options: Vec<Vec<(AbHom, AbHom)>> = Vec::new();
        for &(m, n) in &pairs {
            let mn = m * n;
            for j in 0..2u8 {
                let src_m = std_mod.group(Slot::Gn(j, m)).clone();
                let mid = std_mod.group(Slot::Gn(j, mn)).clone();
                let tgt_n = std_mod.group(Slot::Gn(j, n)).clone();
                let bh_in = beta_hat(1 - j, m, n);
                let bh_out = beta_hat(j, m, n);
                let ups = homs_with_exact_kernel(&src_m, &image_gens(&bh_in), &mid);
                let ker_bh_out = bh_out.kernel_gens();
                let mut opts_jmn = Vec::new();
                for up in ups {
                    let reds =
                        homs_with_kernel_and_image(&mid, &image_gens(&up), &tgt_n, &ker_bh_out);
                    for red in reds {
                        opts_jmn.push((up.clone(), red));
                    }
                }
                let sup = std_mod.structure_map(MapLabel::KappaUp(j, m, n)).clone();
                let sred = std_mod.structure_map(MapLabel::KappaRed(j, m, n)).clone();
                opts_jmn.sort_by_key(|(u, r)| {
                    let is_std = *u == sup && *r == sred;
                    let mut k = hom_key(u);
                    k.extend(hom_key(r));
                    (if is_std { 0 } else { 1 }, k)
                });
                kappa_options.push(opts_jmn);
            }
        }
        if kappa_options.iter().all(|v| !v.is_empty()) {
            let mut idx = vec![0usize; kappa_options.len()];
            loop {
                nodes += 1;
                if nodes > opts.budget.max_nodes {
                    if opts.stop_at.is_some() && result.representatives.len() >= 2 {
                        result.exhausted = false;
                        break 'outer;
                    }
                    return Err("budget exceeded during variant enumeration".into());
                }
                let mut kup = BTreeMap::new();
                let mut kred = BTreeMap::new();
                let mut pos = 0;
                for &(m, n) in &pairs {
                    for j in 0..2u8 {
                        let (u, r) = &kappa_options[pos][idx[pos]];
                        kup.insert((j, m, n), u.clone());
                        kred.insert((j, m, n), r.clone());
                        pos += 1;
                    }
                }
                let mut gn = BTreeMap::new();
                for j in 0..2u8 {
                    for n in coeffs.moduli() {
                        gn.insert((j, n), std_mod.group(Slot::Gn(j, n)).clone());
                    }
                }
                let cand = LambdaModule {
                    coeffs: coeffs.clone(),
                    g: g.clone(),
                    gn,
                    rho: rho.clone(),
                    beta: beta.clone(),
                    kup,
                    kred,
                };
                result.candidates_seen += 1;
                debug_assert!(cand.validate().passed());
                let fp = cand.fingerprint();
                let mut matched = false;
                for (i, rep_fp) in fingerprints.iter().enumerate() {
                    if *rep_fp == fp {
                        if opts.thorough {
                            match lambda_iso_search(
                                &result.representatives[i],
                                &cand,
                                &opts.budget,
                                2,
                            ) {
                                SearchOutcome::Found(_) => {
                                    matched = true;
                                    break;
                                }
                                SearchOutcome::Absent => {}
                                SearchOutcome::BudgetExceeded(e) => return Err(e),
                            }
                        } else {
                            matched = true;
                            break;
                        }
                    }
                }
                if !matched {
                    result.representatives.push(cand);
                    fingerprints.push(fp);
                    if let Some(k) = opts.stop_at {
                        if result.representatives.len() >= k {
                            result.exhausted = false;
                            break 'outer;
                        }
                    }
                }
                // advance kappa indices
                let mut advanced = false;
                for i in (0..kappa_options.len()).rev() {
                    idx[i] += 1;
                    if idx[i] < kappa_options[i].len() {
                        advanced = true;
                        break;
                    }
                    idx[i] = 0;
                }
                if !advanced || kappa_options.is_empty() {
                    break;
                }
            }
        }
        // advance slot indices
        let mut advanced = false;
        for i in (0..slot_keys.len()).rev() {
            slot_idx[i] += 1;
            if slot_idx[i] < slot_pairs[&slot_keys[i]].len() {
                advanced = true;
                break;
            }
            slot_idx[i] = 0;
        }
        if !advanced {
            break;
        }
    }

    // certify the returned list pairwise
    for i in 0..result.representatives.len() {
        for k in (i + 1)..result.representatives.len() {
            match lambda_iso_search(
                &result.representatives[i],
                &result.representatives[k],
                &opts.budget,
                2,
            ) {
                SearchOutcome::Absent => {}
                SearchOutcome::Found(_) => {
                    return Err(format!(
                        "fingerprint split too coarse: representatives {i} and {k} isomorphic"
                    ))
                }
                SearchOutcome::BudgetExceeded(e) => return Err(e),
            }
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z() -> FgAbGroup {
        FgAbGroup::free(1)
    }

    fn zmod(d: u64) -> FgAbGroup {
        FgAbGroup::cyclic(d)
    }

    #[test]
    fn coefficient_set_divisor_closed() {
        assert!(CoefficientSet::new([2, 3, 4, 6]).is_ok());
        assert!(CoefficientSet::new([4]).is_err());
        assert!(CoefficientSet::new([]).is_err());
        assert_eq!(
            CoefficientSet::new([2, 3, 4, 6]).unwrap().factor_pairs(),
            vec![(2, 2), (2, 3), (3, 2)]
        );
    }

    #[test]
    fn standard_z_mod2() {
        let n = CoefficientSet::new([2]).unwrap();
        let m = LambdaModule::standard(&z(), &FgAbGroup::zero(), &n);
        assert_eq!(*m.group(Slot::Gn(0, 2)), zmod(2));
        assert!(m.group(Slot::Gn(1, 2)).is_zero_group());
        assert!(m.validate().passed());
    }

    #[test]
    fn standard_zero_module() {
        let n = CoefficientSet::new([2, 3, 6]).unwrap();
        let m = LambdaModule::zero(&n);
        for s in m.slots() {
            assert!(m.group(s).is_zero_group());
        }
        assert!(m.validate().passed());
    }

    #[test]
    fn standard_z3_coefficients() {
        let n = CoefficientSet::new([2, 3, 6]).unwrap();
        let m = LambdaModule::standard(&zmod(3), &FgAbGroup::zero(), &n);
        assert!(m.group(Slot::Gn(0, 2)).is_zero_group());
        assert_eq!(*m.group(Slot::Gn(0, 3)), zmod(3));
        assert_eq!(*m.group(Slot::Gn(1, 3)), zmod(3)); // Tor part
        assert_eq!(*m.group(Slot::Gn(0, 6)), zmod(3));
        assert!(m.validate().passed());
    }

    #[test]
    fn corrupted_beta_fails() {
        let n = CoefficientSet::new([2]).unwrap();
        let mut m = LambdaModule::standard(&FgAbGroup::zero(), &zmod(2), &n);
        // G_{0,2} = Tor(G1, Z2) = Z/2; kill beta_2^0
        m.beta.insert(
            (0, 2),
            AbHom::zero(m.group(Slot::Gn(0, 2)).clone(), zmod(2)),
        );
        let rep = m.validate();
        assert!(!rep.passed());
    }

    #[test]
    fn lambda_linear_checks() {
        let n = CoefficientSet::new([2]).unwrap();
        let m = LambdaModule::standard(&zmod(2), &zmod(2), &n);
        assert!(LambdaMorphism::identity(&m).is_lambda_linear());
        assert!(LambdaMorphism::zero(&m, &m).is_lambda_linear());
        // swapping the two Z/2 summands of G_{0,2} breaks a square
        let g02 = m.group(Slot::Gn(0, 2)).clone();
        assert_eq!(g02, FgAbGroup::new(0, vec![int(2), int(2)]));
        let swap = AbHom::new(
            g02.clone(),
            g02.clone(),
            IntMat::from_rows(&[vec![0, 1], vec![1, 0]]),
        )
        .unwrap();
        let mut comps: BTreeMap<Slot, AbHom> = m
            .slots()
            .into_iter()
            .map(|s| (s, AbHom::identity(m.group(s))))
            .collect();
        comps.insert(Slot::Gn(0, 2), swap);
        let phi = LambdaMorphism::from_components(m.clone(), m.clone(), comps).unwrap();
        assert!(!phi.is_lambda_linear());
    }

    #[test]
    fn graded_vs_lambda_iso() {
        let n = CoefficientSet::new([2]).unwrap();
        let a = LambdaModule::standard(&zmod(2), &FgAbGroup::zero(), &n);
        let b = LambdaModule::standard(&FgAbGroup::zero(), &zmod(2), &n);
        assert!(graded_iso_search(&a, &a).is_found());
        assert!(graded_iso_search(&a, &b).is_absent()); // grading differs
        let w = lambda_iso_search(&a, &a, &Budget::default(), 2);
        assert!(w.is_found());
        let w = w.found().unwrap().clone();
        assert!(w.is_lambda_linear() && w.is_invertible());
    }

    #[test]
    fn direct_sum_of_standards_is_standard() {
        let n = CoefficientSet::new([2, 3, 6]).unwrap();
        let a = LambdaModule::standard(&zmod(2), &zmod(3), &n);
        let b = LambdaModule::standard(&zmod(4), &FgAbGroup::zero(), &n);
        let s = LambdaModule::sum(&a, &b).unwrap();
        assert!(s.module.validate().passed());
        let joint = LambdaModule::standard(
            &direct_sum(&zmod(2), &zmod(4)).group,
            &direct_sum(&zmod(3), &FgAbGroup::zero()).group,
            &n,
        );
        let iso = lambda_iso_search(&s.module, &joint, &Budget::default(), 2);
        assert!(iso.is_found());
    }

    #[test]
    fn conjugate_is_isomorphic() {
        let n = CoefficientSet::new([2]).unwrap();
        let m = LambdaModule::standard(&zmod(4), &zmod(2), &n);
        let mut comps: BTreeMap<Slot, AbHom> = m
            .slots()
            .into_iter()
            .map(|s| (s, AbHom::identity(m.group(s))))
            .collect();
        comps.insert(Slot::G(0), AbHom::mul_scalar(&zmod(4), &int(3)));
        let (m2, w) = m.conjugate(&comps).unwrap();
        assert!(m2.validate().passed());
        assert!(w.is_lambda_linear() && w.is_invertible());
        assert!(lambda_iso_search(&m, &m2, &Budget::default(), 2).is_found());
    }

    #[test]
    fn variant_search_trivial_cases() {
        let n = CoefficientSet::new([2]).unwrap();
        let r = beta_variant_search(
            &FgAbGroup::zero(),
            &FgAbGroup::zero(),
            &n,
            &BetaVariantOptions {
                thorough: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(r.representatives.len(), 1);
        assert!(r.exhausted);
        let r = beta_variant_search(
            &zmod(2),
            &FgAbGroup::zero(),
            &n,
            &BetaVariantOptions {
                thorough: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(!r.representatives.is_empty());
        assert!(r
            .representatives
            .iter()
            .any(|m| *m == LambdaModule::standard(&zmod(2), &FgAbGroup::zero(), &n)));
    }
}
