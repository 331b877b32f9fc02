//! Sparse multigraded series in a formal small parameter h and up to two
//! bookkeeping variables u, with coefficients in any ring implementing
//! [`Coeff`].  Degrees may be negative (prefactors like dx/(u h) carry
//! explicit inverse powers); products respect truncation caps.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use num_complex::Complex64 as C;

use super::bijet::BiJet;
use super::jet::Jet;

/// Ring operations needed from coefficient types.
pub trait Coeff: Clone {
    fn add(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn scale(&self, s: C) -> Self;
    fn is_negligible(&self) -> bool;
    /// Multiplicative inverse, when it exists.
    fn inv(&self) -> Result<Self>;
}

impl Coeff for C {
    fn add(&self, o: &Self) -> Result<Self> {
        Ok(self + o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Ok(self * o)
    }
    fn neg(&self) -> Self {
        -self
    }
    fn scale(&self, s: C) -> Self {
        self * s
    }
    fn is_negligible(&self) -> bool {
        self.norm() < 1e-300
    }
    fn inv(&self) -> Result<Self> {
        if self.norm() == 0.0 {
            return Err(Error::ZeroLeading("inverse of zero scalar"));
        }
        Ok(C::new(1.0, 0.0) / self)
    }
}

impl Coeff for Jet {
    fn add(&self, o: &Self) -> Result<Self> {
        Jet::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Jet::mul(self, o)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn scale(&self, s: C) -> Self {
        Jet::scale(self, s)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn inv(&self) -> Result<Self> {
        Jet::inv(self)
    }
}

impl Coeff for BiJet {
    fn add(&self, o: &Self) -> Result<Self> {
        BiJet::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        BiJet::mul(self, o)
    }
    fn neg(&self) -> Self {
        BiJet::neg(self)
    }
    fn scale(&self, s: C) -> Self {
        BiJet::scale(self, s)
    }
    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
    fn inv(&self) -> Result<Self> {
        BiJet::inv_unit(self)
    }
}

/// Degree key: power of h and powers of up to two u-variables.
pub type Key = (i32, [i32; 2]);

#[derive(Clone, Debug)]
pub struct MSeries<T: Coeff> {
    terms: BTreeMap<Key, T>,
    /// Truncation caps: terms with h-degree above `hcap` or u-degree above
    /// `ucap` (in either u) are dropped.
    pub hcap: i32,
    pub ucap: i32,
}

impl<T: Coeff> MSeries<T> {
    pub fn new(hcap: i32, ucap: i32) -> Self {
        MSeries { terms: BTreeMap::new(), hcap, ucap }
    }

    pub fn term(hcap: i32, ucap: i32, key: Key, val: T) -> Self {
        let mut s = Self::new(hcap, ucap);
        s.insert(key, val);
        s
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &T)> {
        self.terms.iter()
    }

    pub fn get(&self, key: &Key) -> Option<&T> {
        self.terms.get(key)
    }

    fn within_caps(&self, key: &Key) -> bool {
        key.0 <= self.hcap && key.1[0] <= self.ucap && key.1[1] <= self.ucap
    }

    pub fn insert(&mut self, key: Key, val: T) {
        if !self.within_caps(&key) || val.is_negligible() {
            return;
        }
        self.terms.insert(key, val);
    }

    pub fn accumulate(&mut self, key: Key, val: T) -> Result<()> {
        if !self.within_caps(&key) || val.is_negligible() {
            return Ok(());
        }
        match self.terms.remove(&key) {
            Some(prev) => {
                let sum = prev.add(&val)?;
                if !sum.is_negligible() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, val);
            }
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let mut out = Self::new(self.hcap.min(o.hcap), self.ucap.min(o.ucap));
        for (k, v) in self.terms.iter().chain(o.terms.iter()) {
            out.accumulate(*k, v.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        let mut out = Self::new(self.hcap, self.ucap);
        for (k, v) in self.terms.iter() {
            out.terms.insert(*k, v.neg());
        }
        out
    }

    pub fn scale(&self, s: C) -> Self {
        let mut out = Self::new(self.hcap, self.ucap);
        for (k, v) in self.terms.iter() {
            let w = v.scale(s);
            if !w.is_negligible() {
                out.terms.insert(*k, w);
            }
        }
        out
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        let mut out = Self::new(self.hcap.min(o.hcap), self.ucap.min(o.ucap));
        for (ka, va) in self.terms.iter() {
            for (kb, vb) in o.terms.iter() {
                let key = (ka.0 + kb.0, [ka.1[0] + kb.1[0], ka.1[1] + kb.1[1]]);
                if !out.within_caps(&key) {
                    continue;
                }
                out.accumulate(key, va.mul(vb)?)?;
            }
        }
        Ok(out)
    }

    /// Map coefficients, keeping keys.
    pub fn map<U: Coeff>(&self, mut f: impl FnMut(&Key, &T) -> Result<U>) -> Result<MSeries<U>> {
        let mut out = MSeries::new(self.hcap, self.ucap);
        for (k, v) in self.terms.iter() {
            let w = f(k, v)?;
            if !w.is_negligible() {
                out.terms.insert(*k, w);
            }
        }
        Ok(out)
    }

    /// exp of a series whose every term has positive total degree in (h, u),
    /// so that the exponential truncates.  `one` is the multiplicative unit
    /// of the coefficient ring.
    pub fn exp(&self, one: T) -> Result<Self> {
        for (k, _) in self.terms.iter() {
            if k.0 + k.1[0] + k.1[1] <= 0 {
                return Err(Error::Other(
                    "exp needs strictly positive total grading in every term".into(),
                ));
            }
        }
        let mut out = Self::term(self.hcap, self.ucap, (0, [0, 0]), one);
        let mut pw = out.clone();
        let bound = (self.hcap + 2 * self.ucap + 2).max(2) as usize;
        let mut fact = 1.0;
        for k in 1..=bound {
            pw = pw.mul(self)?;
            if pw.is_zero() {
                break;
            }
            fact *= k as f64;
            out = out.add(&pw.scale(C::new(1.0 / fact, 0.0)))?;
        }
        Ok(out)
    }

    /// Extract the coefficient series of h^p (a series in the u-variables).
    pub fn h_slice(&self, p: i32) -> Self {
        let mut out = Self::new(0, self.ucap);
        for (k, v) in self.terms.iter() {
            if k.0 == p {
                out.terms.insert((0, k.1), v.clone());
            }
        }
        out
    }

    /// Extract the single coefficient at a key, or None.
    pub fn coeff(&self, key: &Key) -> Option<T> {
        self.terms.get(key).cloned()
    }

    /// Substitute u -> 0 in the given slot: keep only terms with zero degree
    /// there; error if negative powers survive (a genuine pole at u = 0).
    pub fn at_u_zero(&self, slot: usize) -> Result<Self> {
        let mut out = Self::new(self.hcap, self.ucap);
        for (k, v) in self.terms.iter() {
            if k.1[slot] < 0 {
                return Err(Error::Other(format!(
                    "series has pole of order {} at u = 0",
                    -k.1[slot]
                )));
            }
            if k.1[slot] == 0 {
                out.terms.insert(*k, v.clone());
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn mul_respects_caps() {
        let mut a = MSeries::<C>::new(2, 4);
        a.insert((1, [0, 0]), c(3.0));
        a.insert((2, [0, 0]), c(5.0));
        let p = a.mul(&a).unwrap();
        // h^2 term = 9, h^3 and h^4 dropped by cap
        assert_eq!(p.coeff(&(2, [0, 0])), Some(c(9.0)));
        assert_eq!(p.coeff(&(3, [0, 0])), None);
    }

    #[test]
    fn negative_degrees_multiply() {
        let mut a = MSeries::<C>::new(4, 4);
        a.insert((-1, [-1, 0]), c(1.0)); // like 1/(u h)
        let mut b = MSeries::<C>::new(4, 4);
        b.insert((1, [1, 0]), c(2.0));
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff(&(0, [0, 0])), Some(c(2.0)));
    }

    #[test]
    fn exp_truncates() {
        let mut a = MSeries::<C>::new(3, 0);
        a.insert((1, [0, 0]), c(1.0));
        let e = a.exp(c(1.0)).unwrap();
        assert_eq!(e.coeff(&(0, [0, 0])), Some(c(1.0)));
        assert_eq!(e.coeff(&(1, [0, 0])), Some(c(1.0)));
        assert_eq!(e.coeff(&(2, [0, 0])), Some(c(0.5)));
        assert!((e.coeff(&(3, [0, 0])).unwrap() - c(1.0 / 6.0)).norm() < 1e-15);
    }

    #[test]
    fn exp_rejects_nonpositive_grading() {
        let mut a = MSeries::<C>::new(3, 3);
        a.insert((0, [0, 0]), c(1.0));
        assert!(a.exp(c(1.0)).is_err());
    }

    #[test]
    fn u_zero_substitution() {
        let mut a = MSeries::<C>::new(3, 3);
        a.insert((1, [0, 0]), c(1.0));
        a.insert((1, [2, 0]), c(7.0));
        let z = a.at_u_zero(0).unwrap();
        assert_eq!(z.coeff(&(1, [0, 0])), Some(c(1.0)));
        assert_eq!(z.coeff(&(1, [2, 0])), None);
        let mut b = MSeries::<C>::new(3, 3);
        b.insert((0, [-1, 0]), c(1.0));
        assert!(b.at_u_zero(0).is_err());
    }
}
