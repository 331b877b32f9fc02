//! Sparse symmetric tensors over the pole-part kernel basis.
//!
//! A rank-n symmetric differential is stored as a map from *sorted* basis
//! multi-indices to coefficients: the value attached to a sorted key applies
//! to every distinct arrangement of that key over the n variable slots.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64 as C;

use crate::curve::{BasisIdx, KernelBasis, SpectralCurve};
use crate::error::Result;
use crate::series::Jet;

#[derive(Clone, Debug, Default)]
pub struct OmegaGN {
    pub rank: usize,
    terms: BTreeMap<Vec<BasisIdx>, C>,
}

impl OmegaGN {
    pub fn new(rank: usize) -> Self {
        OmegaGN { rank, terms: BTreeMap::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<BasisIdx>, &C)> {
        self.terms.iter()
    }

    pub fn insert(&mut self, mut key: Vec<BasisIdx>, c: C) {
        assert_eq!(key.len(), self.rank);
        key.sort();
        *self.terms.entry(key).or_insert(C::new(0.0, 0.0)) += c;
    }

    pub fn coeff(&self, key: &[BasisIdx]) -> C {
        let mut k = key.to_vec();
        k.sort();
        self.terms.get(&k).copied().unwrap_or(C::new(0.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn trim(&mut self, tol_abs: f64) {
        self.terms.retain(|_, c| c.norm() > tol_abs);
    }

    /// Distinct arrangements of a sorted key over the variable slots.
    pub(crate) fn arrangements(key: &[BasisIdx]) -> BTreeSet<Vec<BasisIdx>> {
        let mut out = BTreeSet::new();
        let mut perm = key.to_vec();
        // Heap-style enumeration is overkill for rank <= 5: recurse instead.
        fn rec(left: &mut Vec<BasisIdx>, cur: &mut Vec<BasisIdx>, out: &mut BTreeSet<Vec<BasisIdx>>) {
            if left.is_empty() {
                out.insert(cur.clone());
                return;
            }
            let mut seen = BTreeSet::new();
            for i in 0..left.len() {
                if !seen.insert(left[i]) {
                    continue;
                }
                let v = left.remove(i);
                cur.push(v);
                rec(left, cur, out);
                cur.pop();
                left.insert(i, v);
            }
        }
        rec(&mut perm, &mut Vec::new(), &mut out);
        out
    }

    /// Pointwise value at a tuple of evaluation points (one per slot), as the
    /// coefficient against the product of coordinate differentials.
    pub fn eval(&self, curve: &SpectralCurve, basis: &KernelBasis, pts: &[C]) -> Result<C> {
        assert_eq!(pts.len(), self.rank);
        let mut total = C::new(0.0, 0.0);
        for (key, c) in &self.terms {
            for arr in Self::arrangements(key) {
                let mut p = *c;
                for (idx, z) in arr.iter().zip(pts) {
                    p *= basis.eval(curve, *idx, *z)?;
                }
                total += p;
            }
        }
        Ok(total)
    }

    /// Jet in the first slot at z0 with the remaining slots evaluated.
    pub fn jet_in_first(
        &self,
        curve: &SpectralCurve,
        basis: &KernelBasis,
        z0: C,
        rest: &[C],
        order: usize,
        tag: u64,
    ) -> Result<Jet> {
        assert_eq!(rest.len() + 1, self.rank);
        let mut total = Jet::zero(tag).truncated(order as i32);
        for (key, c) in &self.terms {
            for arr in Self::arrangements(key) {
                let mut p = *c;
                for (idx, z) in arr[1..].iter().zip(rest) {
                    p *= basis.eval(curve, *idx, *z)?;
                }
                if p.norm() == 0.0 {
                    continue;
                }
                let j = basis.jet(curve, arr[0], z0, order, tag)?;
                total = total.add(&j.scale(p))?;
            }
        }
        Ok(total)
    }

    /// Maximum absolute difference between two tensors of equal rank.
    pub fn distance(&self, other: &OmegaGN) -> f64 {
        let mut keys: BTreeSet<&Vec<BasisIdx>> = self.terms.keys().collect();
        keys.extend(other.terms.keys());
        keys.iter()
            .map(|k| (self.coeff(k) - other.coeff(k)).norm())
            .fold(0.0, f64::max)
    }
}

/// All set partitions of {0, .., n-1} into nonempty blocks.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for mut p in set_partitions(n - 1) {
        for i in 0..p.len() {
            let mut q = p.clone();
            q[i].push(n - 1);
            out.push(q);
        }
        p.push(vec![n - 1]);
        out.push(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_count_is_bell() {
        assert_eq!(set_partitions(0).len(), 1);
        assert_eq!(set_partitions(1).len(), 1);
        assert_eq!(set_partitions(3).len(), 5);
        assert_eq!(set_partitions(4).len(), 15);
        for p in set_partitions(4) {
            let mut all: Vec<usize> = p.iter().flatten().copied().collect();
            all.sort();
            assert_eq!(all, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn symmetric_storage_round_trip() {
        let mut t = OmegaGN::new(2);
        let a = BasisIdx::G { q: 0, k: 1 };
        let b = BasisIdx::G { q: 0, k: 3 };
        t.insert(vec![b, a], C::new(2.0, 0.0));
        t.insert(vec![a, b], C::new(1.0, 0.0));
        assert_eq!(t.coeff(&[a, b]), C::new(3.0, 0.0));
        assert_eq!(t.coeff(&[b, a]), C::new(3.0, 0.0));
        assert_eq!(OmegaGN::arrangements(&[a, b]).len(), 2);
        assert_eq!(OmegaGN::arrangements(&[a, a]).len(), 1);
    }
}
