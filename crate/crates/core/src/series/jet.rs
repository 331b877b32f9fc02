//! Truncated Laurent series in a local coordinate with exactness-window tracking.
//!
//! A `Jet` stores coefficients a_k for k in [lo, hi].  Coefficients below `lo`
//! are exactly zero; coefficients above `hi` are unknown.  Every operation
//! computes the largest window on which its result is exact, and fails rather
//! than silently truncating when no exact coefficient survives.

use crate::error::{Error, Result};
use num_complex::Complex64 as C;

/// Sentinel for "exact to all orders" upper bound.  Kept far from i32 range
/// limits so window arithmetic cannot overflow.
pub const INF: i32 = 1 << 24;

fn sat(a: i32, b: i32) -> i32 {
    (a + b).clamp(-INF, INF)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub tag: u64,
    lo: i32,
    hi: i32,
    coeffs: Vec<C>, // index i holds a_{lo+i}; empty iff identically zero
}

impl Jet {
    pub fn new(tag: u64, lo: i32, coeffs: Vec<C>) -> Self {
        let hi = lo + coeffs.len() as i32 - 1;
        Jet { tag, lo, hi, coeffs }
    }

    /// Identically-zero jet, exact to all orders.
    pub fn zero(tag: u64) -> Self {
        Jet { tag, lo: INF, hi: INF, coeffs: Vec::new() }
    }

    /// Constant jet, exact to all orders.
    pub fn constant(tag: u64, v: C) -> Self {
        if v == C::new(0.0, 0.0) {
            return Self::zero(tag);
        }
        Jet { tag, lo: 0, hi: INF, coeffs: vec![v] }
    }

    pub fn one(tag: u64) -> Self {
        Self::constant(tag, C::new(1.0, 0.0))
    }

    /// The coordinate itself.
    pub fn var(tag: u64) -> Self {
        Jet { tag, lo: 1, hi: INF, coeffs: vec![C::new(1.0, 0.0)] }
    }

    /// c * s^k, exact to all orders.
    pub fn monomial(tag: u64, k: i32, c: C) -> Self {
        if c == C::new(0.0, 0.0) {
            return Self::zero(tag);
        }
        Jet { tag, lo: k, hi: INF, coeffs: vec![c] }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn lo(&self) -> i32 {
        self.lo
    }

    pub fn hi(&self) -> i32 {
        self.hi
    }

    /// Exact coefficient of degree k, or an error if k lies above the window.
    pub fn coeff(&self, k: i32) -> Result<C> {
        if k > self.hi {
            return Err(Error::OutsideWindow(k, self.lo, self.hi));
        }
        if k < self.lo || self.coeffs.is_empty() {
            return Ok(C::new(0.0, 0.0));
        }
        let i = (k - self.lo) as usize;
        Ok(self.coeffs.get(i).copied().unwrap_or(C::new(0.0, 0.0)))
    }

    pub fn coeff_or_zero(&self, k: i32) -> C {
        self.coeff(k).unwrap_or(C::new(0.0, 0.0))
    }

    fn check_tag(&self, o: &Jet) -> Result<()> {
        if self.tag != o.tag {
            return Err(Error::TagMismatch(self.tag, o.tag));
        }
        Ok(())
    }

    /// Largest absolute coefficient value.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Drop leading coefficients whose magnitude is below `rel_tol` times the
    /// largest coefficient.  Needed before inversion when cancellations leave
    /// round-off garbage at the stored leading order.
    pub fn trimmed(&self, rel_tol: f64) -> Jet {
        if self.is_zero() {
            return self.clone();
        }
        // Compare each leading coefficient with a nearby scale, not the global
        // maximum: jets with a finite radius of convergence grow geometrically
        // towards high orders, which would swamp genuine low-order content.
        let mut start = 0usize;
        while start < self.coeffs.len() {
            let end = (start + 9).min(self.coeffs.len());
            let scale = self.coeffs[start..end]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
            if self.coeffs[start].norm() > rel_tol * scale {
                break;
            }
            start += 1;
        }
        if start == self.coeffs.len() {
            return Jet::zero(self.tag);
        }
        Jet {
            tag: self.tag,
            lo: self.lo + start as i32,
            hi: self.hi,
            coeffs: self.coeffs[start..].to_vec(),
        }
    }

    /// Restrict the window from above (keep degrees <= new_hi).
    pub fn truncated(&self, new_hi: i32) -> Jet {
        if self.is_zero() || new_hi >= self.hi {
            let mut j = self.clone();
            if !j.is_zero() && new_hi < j.hi {
                j.hi = new_hi;
            }
            return j;
        }
        if new_hi < self.lo {
            // Window keeps only known zeros; represent as zero exact up to new_hi.
            return Jet { tag: self.tag, lo: new_hi + 1, hi: new_hi, coeffs: Vec::new() };
        }
        let keep = (new_hi - self.lo + 1) as usize;
        Jet {
            tag: self.tag,
            lo: self.lo,
            hi: new_hi,
            coeffs: self.coeffs[..keep.min(self.coeffs.len())].to_vec(),
        }
    }

    fn normalized(mut self) -> Result<Jet> {
        if !self.coeffs.is_empty() && self.hi < self.lo {
            self.coeffs.clear();
        }
        if self.coeffs.is_empty() && self.hi < self.lo {
            // An empty window with nothing known: no exact content survives.
            return Err(Error::EmptyWindow("window intersection"));
        }
        Ok(self)
    }

    pub fn add(&self, o: &Jet) -> Result<Jet> {
        self.check_tag(o)?;
        if self.is_zero() {
            return Ok(o.truncated(self.hi.min(o.hi)));
        }
        if o.is_zero() {
            return Ok(self.truncated(self.hi.min(o.hi)));
        }
        let lo = self.lo.min(o.lo);
        let hi = self.hi.min(o.hi);
        if hi < lo {
            return Err(Error::EmptyWindow("jet addition"));
        }
        let mut coeffs = vec![C::new(0.0, 0.0); (hi - lo + 1) as usize];
        for (k, c) in coeffs.iter_mut().enumerate() {
            let d = lo + k as i32;
            *c = self.coeff_or_zero(d) + o.coeff_or_zero(d);
        }
        Jet { tag: self.tag, lo, hi, coeffs }.normalized()
    }

    pub fn sub(&self, o: &Jet) -> Result<Jet> {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Jet {
        let mut j = self.clone();
        for c in j.coeffs.iter_mut() {
            *c = -*c;
        }
        j
    }

    pub fn scale(&self, s: C) -> Jet {
        if s == C::new(0.0, 0.0) {
            return Jet::zero(self.tag);
        }
        let mut j = self.clone();
        for c in j.coeffs.iter_mut() {
            *c *= s;
        }
        j
    }

    pub fn mul(&self, o: &Jet) -> Result<Jet> {
        self.check_tag(o)?;
        if self.is_zero() || o.is_zero() {
            // Product is identically zero; exactness limited by the unknown
            // tails only when both factors are nonzero.
            return Ok(Jet::zero(self.tag));
        }
        let lo = sat(self.lo, o.lo);
        let hi = sat(self.hi, o.lo).min(sat(o.hi, self.lo));
        if hi < lo {
            return Err(Error::EmptyWindow("jet multiplication"));
        }
        let n = (hi - lo + 1) as usize;
        let mut coeffs = vec![C::new(0.0, 0.0); n];
        for (i, a) in self.coeffs.iter().enumerate() {
            let da = self.lo + i as i32;
            if da > hi - o.lo {
                break;
            }
            for (j, b) in o.coeffs.iter().enumerate() {
                let d = da + o.lo + j as i32;
                if d > hi {
                    break;
                }
                coeffs[(d - lo) as usize] += a * b;
            }
        }
        Jet { tag: self.tag, lo, hi, coeffs }.normalized()
    }

    /// Multiplicative inverse.  The stored leading coefficient must be
    /// nonzero; call `trimmed` first if round-off may sit at the front.
    pub fn inv(&self) -> Result<Jet> {
        if self.is_zero() {
            return Err(Error::ZeroLeading("jet inversion of zero"));
        }
        let a0 = self.coeffs[0];
        if a0.norm() == 0.0 {
            return Err(Error::ZeroLeading("jet inversion"));
        }
        let m = self.lo;
        let len = if self.hi >= INF / 2 {
            self.coeffs.len()
        } else {
            (self.hi - self.lo + 1) as usize
        };
        // b with (sum a_{m+i} t^i)(sum b_i t^i) = 1, then shift by -m.
        let mut b = vec![C::new(0.0, 0.0); len];
        b[0] = C::new(1.0, 0.0) / a0;
        for k in 1..len {
            let mut acc = C::new(0.0, 0.0);
            for i in 1..=k {
                let a = self.coeffs.get(i).copied().unwrap_or(C::new(0.0, 0.0));
                acc += a * b[k - i];
            }
            b[k] = -acc / a0;
        }
        let hi = if self.hi >= INF / 2 { -m + len as i32 - 1 } else { self.hi - 2 * m };
        Ok(Jet { tag: self.tag, lo: -m, hi, coeffs: b })
    }

    pub fn div(&self, o: &Jet) -> Result<Jet> {
        self.mul(&o.inv()?)
    }

    /// d/ds.
    pub fn deriv(&self) -> Jet {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = Vec::with_capacity(self.coeffs.len());
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.lo + i as i32;
            coeffs.push(a * C::new(k as f64, 0.0));
        }
        let mut j = Jet { tag: self.tag, lo: self.lo - 1, hi: sat(self.hi, -1), coeffs };
        // A leading zero appears when lo == 0; keep representation tidy.
        if !j.coeffs.is_empty() && j.coeffs[0].norm() == 0.0 && j.lo == -1 {
            j.coeffs.remove(0);
            j.lo = 0;
        }
        j
    }

    /// Primitive with zero constant term.  Fails if the residue coefficient
    /// a_{-1} is present and nonzero (the primitive would be multivalued).
    pub fn integrate(&self) -> Result<Jet> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let res = self.coeff_or_zero(-1);
        let scale = self.max_abs().max(1e-300);
        if res.norm() > 1e-10 * scale {
            return Err(Error::ResidueObstruction(res.norm()));
        }
        let lo = self.lo + 1;
        let hi = sat(self.hi, 1);
        let mut coeffs = vec![C::new(0.0, 0.0); (hi.min(self.hi + 1) - lo + 1).max(0) as usize];
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.lo + i as i32;
            if k == -1 {
                continue;
            }
            let d = k + 1;
            let idx = (d - lo) as usize;
            if idx < coeffs.len() {
                coeffs[idx] = a / C::new((k + 1) as f64, 0.0);
            }
        }
        Jet { tag: self.tag, lo, hi, coeffs }.normalized()
    }

    /// Substitute s -> -s: degree-k coefficient picks up (-1)^k.
    pub fn flip_var(&self) -> Jet {
        let mut j = self.clone();
        for (i, c) in j.coeffs.iter_mut().enumerate() {
            let k = j.lo + i as i32;
            if k.rem_euclid(2) == 1 {
                *c = -*c;
            }
        }
        j
    }

    /// Residue: exact coefficient of s^{-1}.
    pub fn residue(&self) -> Result<C> {
        self.coeff(-1)
    }

    /// Evaluate the jet at s (mainly for tests and diagnostics).
    pub fn eval(&self, s: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (i, a) in self.coeffs.iter().enumerate() {
            let k = self.lo + i as i32;
            acc += a * s.powi(k);
        }
        acc
    }

    /// Composition self(g(s)) where g has positive leading order.  When self
    /// has Laurent part, g must start exactly at order 1 so that 1/g exists.
    /// The result carries the tag of g.
    pub fn compose(&self, g: &Jet) -> Result<Jet> {
        if self.is_zero() {
            return Ok(Jet::zero(g.tag));
        }
        if g.lo < 1 {
            return Err(Error::ZeroLeading("composition with non-vanishing inner series"));
        }
        let tag = g.tag;
        // Non-negative part by Horner from the top.
        let hi_deg = if self.hi >= INF / 2 { self.lo.max(0) + self.coeffs.len() as i32 - 1 } else { self.hi };
        let mut acc = Jet::zero(tag);
        let mut k = hi_deg;
        while k >= self.lo.max(0) {
            acc = acc.mul(g)?;
            acc = acc.add(&Jet::constant(tag, self.coeff_or_zero(k)))?;
            k -= 1;
        }
        if self.lo.max(0) > 0 {
            for _ in 0..self.lo.max(0) {
                acc = acc.mul(g)?;
            }
        }
        // Laurent part via powers of 1/g.
        if self.lo < 0 {
            let ginv = g.inv()?;
            let mut p = ginv.clone();
            for k in 1..=(-self.lo) {
                let c = self.coeff_or_zero(-k);
                if c.norm() > 0.0 {
                    acc = acc.add(&p.scale(c))?;
                }
                if k < -self.lo {
                    p = p.mul(&ginv)?;
                }
            }
        }
        Ok(acc)
    }

    /// Compositional inverse of g (g.lo == 1, leading coefficient nonzero):
    /// returns h with g(h(s)) = s + O(s^{W+1}).
    pub fn reversion(&self, out_tag: u64) -> Result<Jet> {
        if self.is_zero() || self.lo != 1 {
            return Err(Error::ZeroLeading("series reversion"));
        }
        let g1 = self.coeffs[0];
        if g1.norm() == 0.0 {
            return Err(Error::ZeroLeading("series reversion"));
        }
        let w = if self.hi >= INF / 2 { self.coeffs.len() as i32 + 8 } else { self.hi };
        // Newton-free order-by-order solve: h = s/g1 - (g(h) - g1*h)/g1 iterated.
        let mut h = Jet::new(out_tag, 1, vec![C::new(1.0, 0.0) / g1]);
        h.hi = 1;
        for target in 2..=w {
            // extend window
            h.hi = target;
            let mut coeffs = h.coeffs.clone();
            coeffs.resize(target as usize, C::new(0.0, 0.0));
            h = Jet { tag: out_tag, lo: 1, hi: target, coeffs };
            let gh = self.truncated(target).compose(&h)?;
            // gh = s + e_target s^target + ...; correct h_target -= e/g1
            let e = gh.coeff_or_zero(target) - if target == 1 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
            let idx = (target - 1) as usize;
            h.coeffs[idx] -= e / g1;
        }
        Ok(h)
    }

    /// exp of a jet with vanishing constant term (lo >= 1).
    pub fn exp_nilpotent(&self) -> Result<Jet> {
        if self.is_zero() {
            return Ok(Jet::one(self.tag));
        }
        if self.lo < 1 {
            return Err(Error::ZeroLeading("exp of jet with constant term"));
        }
        let w = if self.hi >= INF / 2 { self.coeffs.len() as i32 + 4 } else { self.hi };
        let mut acc = Jet::one(self.tag).truncated(w);
        let mut pw = Jet::one(self.tag).truncated(w);
        let mut fact = 1.0;
        for k in 1..=(w as usize) {
            pw = pw.mul(self)?;
            fact *= k as f64;
            acc = acc.add(&pw.scale(C::new(1.0 / fact, 0.0)))?;
            if pw.lo > w {
                break;
            }
        }
        Ok(acc)
    }

    /// log of a jet with nonzero constant term; branch from the principal log
    /// of the constant.
    pub fn log(&self) -> Result<Jet> {
        if self.is_zero() || self.lo != 0 {
            return Err(Error::ZeroLeading("log of jet without constant term"));
        }
        let c0 = self.coeffs[0];
        if c0.norm() == 0.0 {
            return Err(Error::ZeroLeading("log of jet"));
        }
        let lt = self.deriv().div(self)?;
        let tail = lt.integrate()?;
        tail.add(&Jet::constant(self.tag, c0.ln()))
    }

    /// Square root with leading coefficient on the principal branch.
    /// Requires even leading degree.
    pub fn sqrt(&self) -> Result<Jet> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        if self.lo % 2 != 0 {
            return Err(Error::ZeroLeading("sqrt of odd leading degree"));
        }
        let c0 = self.coeffs[0];
        if c0.norm() == 0.0 {
            return Err(Error::ZeroLeading("sqrt"));
        }
        // self = c0 s^lo (1 + n); sqrt via binomial series on n.
        let shifted = Jet { tag: self.tag, lo: 0, hi: self.hi - self.lo, coeffs: self.coeffs.clone() };
        let unit = shifted.scale(C::new(1.0, 0.0) / c0);
        let n = unit.sub(&Jet::one(self.tag))?;
        let w = if n.is_zero() { 4 } else { (n.hi - 1).max(1) };
        let mut acc = Jet::one(self.tag).truncated(n.hi.min(INF));
        let mut pw = Jet::one(self.tag).truncated(n.hi.min(INF));
        let mut coef = 1.0_f64;
        if !n.is_zero() {
            for k in 1..=(w as usize + 2) {
                pw = pw.mul(&n)?;
                coef *= (0.5 - (k as f64 - 1.0)) / k as f64;
                acc = acc.add(&pw.scale(C::new(coef, 0.0)))?;
                if pw.lo > n.hi {
                    break;
                }
            }
        }
        let root = acc.scale(c0.sqrt());
        Ok(Jet {
            tag: self.tag,
            lo: root.lo + self.lo / 2,
            hi: sat(root.hi, self.lo / 2),
            coeffs: root.coeffs,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn mul_identity_case() {
        // (1/z) * z = 1
        let a = Jet::new(1, -1, vec![c(1.0); 8]);
        let b = Jet::var(1);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff_or_zero(0), c(1.0));
    }

    #[test]
    fn mul_simple() {
        // (1+z)(1-z) = 1 - z^2
        let a = Jet::new(1, 0, vec![c(1.0), c(1.0)]);
        let b = Jet::new(1, 0, vec![c(1.0), c(-1.0)]);
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff_or_zero(0), c(1.0));
        assert_eq!(p.coeff_or_zero(1), c(0.0));
        // z^2 coefficient is outside the exact window of the truncated inputs
        assert!(p.coeff(2).is_err());
    }

    #[test]
    fn mul_laurent() {
        // (z^{-2}+1) * z^2 = 1 + z^2
        let a = Jet::new(1, -2, vec![c(1.0), c(0.0), c(1.0), c(0.0), c(0.0)]);
        let b = Jet::monomial(1, 2, c(1.0));
        let p = a.mul(&b).unwrap();
        assert_eq!(p.coeff_or_zero(0), c(1.0));
        assert_eq!(p.coeff_or_zero(2), c(1.0));
    }

    #[test]
    fn inv_geometric() {
        // 1/(1+z) = 1 - z + z^2 - ...
        let a = Jet::new(1, 0, vec![c(1.0), c(1.0), c(0.0), c(0.0), c(0.0)]);
        let b = a.inv().unwrap();
        for k in 0..5 {
            assert!((b.coeff_or_zero(k) - c(if k % 2 == 0 { 1.0 } else { -1.0 })).norm() < 1e-14);
        }
    }

    #[test]
    fn inv_monomial() {
        // 1/(2z) = z^{-1}/2
        let a = Jet::new(1, 1, vec![c(2.0), c(0.0), c(0.0)]);
        let b = a.inv().unwrap();
        assert_eq!(b.lo(), -1);
        assert!((b.coeff_or_zero(-1) - c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn inv_shifted() {
        // 1/(z^2 (1+z)) = z^{-2} (1 - z + z^2 - ...)
        let a = Jet::new(1, 2, vec![c(1.0), c(1.0), c(0.0), c(0.0)]);
        let b = a.inv().unwrap();
        assert_eq!(b.lo(), -2);
        assert!((b.coeff_or_zero(-1) - c(-1.0)).norm() < 1e-14);
        assert!((b.coeff_or_zero(0) - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn residue_examples() {
        let a = Jet::new(1, -1, vec![c(1.0)]);
        assert_eq!(a.residue().unwrap(), c(1.0));
        let b = Jet::new(1, -2, vec![c(1.0), c(0.0)]);
        assert_eq!(b.residue().unwrap(), c(0.0));
        let d = Jet::new(1, -1, vec![c(3.0), c(5.0), c(1.0)]);
        assert_eq!(d.residue().unwrap(), c(3.0));
    }

    #[test]
    fn residue_outside_window_fails() {
        let a = Jet::new(1, 0, vec![c(1.0)]);
        assert_eq!(a.residue().unwrap(), c(0.0)); // known zero below lo
        let b = Jet::new(1, -3, vec![c(1.0)]); // window [-3,-3], -1 unknown
        assert!(b.residue().is_err());
    }

    #[test]
    fn tag_mismatch() {
        let a = Jet::one(1);
        let b = Jet::one(2);
        assert!(a.mul(&b).is_err());
    }

    #[test]
    fn round_trip_inverse() {
        let a = Jet::new(1, -1, vec![c(2.0), c(0.3), c(-1.2), c(0.7), c(0.1), c(0.9)]);
        let p = a.mul(&a.inv().unwrap()).unwrap();
        assert!((p.coeff_or_zero(0) - c(1.0)).norm() < 1e-13);
        for k in 1..=3 {
            assert!(p.coeff_or_zero(k).norm() < 1e-13);
        }
    }

    #[test]
    fn compose_and_revert() {
        // g = z + z^2; h = reversion; g(h) = z
        let g = Jet::new(1, 1, vec![c(1.0), c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        let h = g.reversion(1).unwrap();
        let gh = g.compose(&h).unwrap();
        assert!((gh.coeff_or_zero(1) - c(1.0)).norm() < 1e-13);
        for k in 2..=6 {
            assert!(gh.coeff_or_zero(k).norm() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn log_exp_round_trip() {
        let a = Jet::new(1, 1, vec![c(0.4), c(-0.2), c(0.1), c(0.05), c(0.0), c(0.0)]);
        let e = a.exp_nilpotent().unwrap();
        let l = e.log().unwrap();
        for k in 1..=4 {
            assert!((l.coeff_or_zero(k) - a.coeff_or_zero(k)).norm() < 1e-12);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let a = Jet::new(1, 2, vec![c(4.0), c(1.0), c(0.5), c(0.0), c(0.0), c(0.0)]);
        let r = a.sqrt().unwrap();
        let sq = r.mul(&r).unwrap();
        for k in 2..=5 {
            assert!((sq.coeff_or_zero(k) - a.coeff_or_zero(k)).norm() < 1e-12, "k={k}");
        }
    }
}
