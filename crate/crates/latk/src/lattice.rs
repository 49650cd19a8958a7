//! Finite lattices of ideal names: order plus total join/meet tables.

use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct FiniteLattice {
    names: Vec<String>,
    le: Vec<bool>,
    join: Vec<usize>,
    meet: Vec<usize>,
    bottom: usize,
    top: usize,
}

impl fmt::Debug for FiniteLattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FiniteLattice[{}]", self.names.join(", "))
    }
}

impl FiniteLattice {
    /// Build from a reflexive order relation; fails when joins or meets are
    /// not unique.
    pub fn from_order(names: Vec<String>, le: Vec<bool>) -> Result<Self, String> {
        let n = names.len();
        if n == 0 || le.len() != n * n {
            return Err("lattice needs at least one element and a full order table".into());
        }
        let leq = |a: usize, b: usize| le[a * n + b];
        for a in 0..n {
            if !leq(a, a) {
                return Err(format!("order not reflexive at {a}"));
            }
            for b in 0..n {
                if leq(a, b) && leq(b, a) && a != b {
                    return Err(format!("order not antisymmetric at {a},{b}"));
                }
                for c in 0..n {
                    if leq(a, b) && leq(b, c) && !leq(a, c) {
                        return Err(format!("order not transitive at {a},{b},{c}"));
                    }
                }
            }
        }
        let mut join = vec![0usize; n * n];
        let mut meet = vec![0usize; n * n];
        for a in 0..n {
            for b in 0..n {
                let ubs: Vec<usize> = (0..n).filter(|&x| leq(a, x) && leq(b, x)).collect();
                let lub: Vec<usize> = ubs
                    .iter()
                    .cloned()
                    .filter(|&x| ubs.iter().all(|&y| leq(x, y)))
                    .collect();
                if lub.len() != 1 {
                    return Err(format!("join of {a},{b} not unique"));
                }
                join[a * n + b] = lub[0];
                let lbs: Vec<usize> = (0..n).filter(|&x| leq(x, a) && leq(x, b)).collect();
                let glb: Vec<usize> = lbs
                    .iter()
                    .cloned()
                    .filter(|&x| lbs.iter().all(|&y| leq(y, x)))
                    .collect();
                if glb.len() != 1 {
                    return Err(format!("meet of {a},{b} not unique"));
                }
                meet[a * n + b] = glb[0];
            }
        }
        let bottom = (0..n)
            .find(|&x| (0..n).all(|y| leq(x, y)))
            .ok_or("no bottom element")?;
        let top = (0..n)
            .find(|&x| (0..n).all(|y| leq(y, x)))
            .ok_or("no top element")?;
        Ok(FiniteLattice {
            names,
            le,
            join,
            meet,
            bottom,
            top,
        })
    }

    pub fn point(name: &str) -> Self {
        FiniteLattice::from_order(vec![name.to_string()], vec![true]).unwrap()
    }

    pub fn chain(names: Vec<String>) -> Self {
        let n = names.len();
        let mut le = vec![false; n * n];
        for a in 0..n {
            for b in a..n {
                le[a * n + b] = true;
            }
        }
        FiniteLattice::from_order(names, le).unwrap()
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn le(&self, a: usize, b: usize) -> bool {
        self.le[a * self.names.len() + b]
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.join[a * self.names.len() + b]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.meet[a * self.names.len() + b]
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn top(&self) -> usize {
        self.top
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.names.len()
    }

    /// Down-set of `i` as a sorted index list.
    pub fn downset(&self, i: usize) -> Vec<usize> {
        (0..self.names.len()).filter(|&x| self.le(x, i)).collect()
    }

    /// Sub-lattice on the down-set of `i`; returns (lattice, index map old->new).
    pub fn downset_lattice(&self, i: usize) -> (FiniteLattice, Vec<usize>) {
        let keep = self.downset(i);
        let n = keep.len();
        let mut le = vec![false; n * n];
        for (a, &x) in keep.iter().enumerate() {
            for (b, &y) in keep.iter().enumerate() {
                le[a * n + b] = self.le(x, y);
            }
        }
        let names = keep.iter().map(|&x| self.names[x].clone()).collect();
        (
            FiniteLattice::from_order(names, le).expect("down-set of a lattice is a lattice"),
            keep,
        )
    }

    /// Product lattice with componentwise order; names are "a|b".
    pub fn product(a: &FiniteLattice, b: &FiniteLattice) -> FiniteLattice {
        let n = a.size() * b.size();
        let mut names = Vec::with_capacity(n);
        for i in 0..a.size() {
            for j in 0..b.size() {
                names.push(format!("{}|{}", a.names[i], b.names[j]));
            }
        }
        let idx = |i: usize, j: usize| i * b.size() + j;
        let mut le = vec![false; n * n];
        for i1 in 0..a.size() {
            for j1 in 0..b.size() {
                for i2 in 0..a.size() {
                    for j2 in 0..b.size() {
                        le[idx(i1, j1) * n + idx(i2, j2)] = a.le(i1, i2) && b.le(j1, j2);
                    }
                }
            }
        }
        FiniteLattice::from_order(names, le).expect("product of lattices is a lattice")
    }

    /// Adjoin a new top element above everything.
    pub fn adjoin_top(&self, name: &str) -> FiniteLattice {
        let n = self.size() + 1;
        let mut names = self.names.clone();
        names.push(name.to_string());
        let mut le = vec![false; n * n];
        for a in 0..self.size() {
            for b in 0..self.size() {
                le[a * n + b] = self.le(a, b);
            }
            le[a * n + (n - 1)] = true;
        }
        le[(n - 1) * n + (n - 1)] = true;
        FiniteLattice::from_order(names, le).expect("adjoining a top preserves lattice-ness")
    }

    /// All order isomorphisms onto `other` (as index maps), deterministic order.
    pub fn isomorphisms(&self, other: &FiniteLattice) -> Vec<Vec<usize>> {
        let n = self.size();
        if n != other.size() {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut perm: Vec<usize> = Vec::new();
        let mut used = vec![false; n];
        fn rec(
            a: &FiniteLattice,
            b: &FiniteLattice,
            perm: &mut Vec<usize>,
            used: &mut Vec<bool>,
            out: &mut Vec<Vec<usize>>,
        ) {
            let k = perm.len();
            if k == a.size() {
                out.push(perm.clone());
                return;
            }
            for cand in 0..b.size() {
                if used[cand] {
                    continue;
                }
                let ok = (0..k).all(|i| {
                    a.le(i, k) == b.le(perm[i], cand) && a.le(k, i) == b.le(cand, perm[i])
                });
                if ok {
                    used[cand] = true;
                    perm.push(cand);
                    rec(a, b, perm, used, out);
                    perm.pop();
                    used[cand] = false;
                }
            }
        }
        rec(self, other, &mut perm, &mut used, &mut out);
        out
    }

    /// Monotone-map check for an index map.
    pub fn is_monotone_to(&self, other: &FiniteLattice, map: &[usize]) -> bool {
        if map.len() != self.size() || map.iter().any(|&x| x >= other.size()) {
            return false;
        }
        for a in 0..self.size() {
            for b in 0..self.size() {
                if self.le(a, b) && !other.le(map[a], map[b]) {
                    return false;
                }
            }
        }
        true
    }

    /// Join-preservation check for an index map.
    pub fn preserves_joins_to(&self, other: &FiniteLattice, map: &[usize]) -> bool {
        for a in 0..self.size() {
            for b in 0..self.size() {
                if map[self.join(a, b)] != other.join(map[a], map[b]) {
                    return false;
                }
            }
        }
        true
    }

    /// Comparable pairs (a, b) with a <= b, a != b.
    pub fn strict_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for a in 0..self.size() {
            for b in 0..self.size() {
                if a != b && self.le(a, b) {
                    v.push((a, b));
                }
            }
        }
        v
    }

    pub fn element_set(&self) -> BTreeSet<usize> {
        (0..self.size()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_and_product() {
        let two = FiniteLattice::chain(vec!["0".into(), "T".into()]);
        assert_eq!(two.bottom(), 0);
        assert_eq!(two.top(), 1);
        let four = FiniteLattice::product(&two, &two);
        assert_eq!(four.size(), 4);
        assert_eq!(four.join(1, 2), 3);
        assert_eq!(four.meet(1, 2), 0);
        let five = four.adjoin_top("T'");
        assert_eq!(five.size(), 5);
        assert_eq!(five.top(), 4);
    }

    #[test]
    fn downsets() {
        let three = FiniteLattice::chain(vec!["0".into(), "K".into(), "T".into()]);
        let (sub, keep) = three.downset_lattice(1);
        assert_eq!(sub.size(), 2);
        assert_eq!(keep, vec![0, 1]);
    }

    #[test]
    fn isomorphism_enumeration() {
        let a = FiniteLattice::chain(vec!["0".into(), "1".into(), "2".into()]);
        let b = FiniteLattice::chain(vec!["x".into(), "y".into(), "z".into()]);
        assert_eq!(a.isomorphisms(&b).len(), 1); // chains are rigid
        let two = FiniteLattice::chain(vec!["0".into(), "T".into()]);
        let sq = FiniteLattice::product(&two, &two);
        assert_eq!(sq.isomorphisms(&sq).len(), 2); // swap the two middle atoms
        assert!(a.isomorphisms(&sq).is_empty());
    }

    #[test]
    fn not_a_lattice_rejected() {
        // two incomparable elements with no common upper bound
        let names = vec!["a".into(), "b".into()];
        let le = vec![true, false, false, true];
        assert!(FiniteLattice::from_order(names, le).is_err());
    }
}
