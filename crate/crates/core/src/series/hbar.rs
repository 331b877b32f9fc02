//! Truncated series in the formal parameter hbar and polynomials in the
//! auxiliary variable u, with coefficients in any [`Coeff`] ring.

use crate::error::{Error, Result};
use num_complex::Complex64 as C;

use super::mseries::Coeff;

/// Truncated formal series in hbar: coefficients at degrees 0..=d_max.
#[derive(Clone, Debug)]
pub struct HbarSeries<T: Coeff> {
    coeffs: Vec<T>,
}

impl<T: Coeff> HbarSeries<T> {
    /// All coefficients given explicitly; length fixes d_max.
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("hbar series needs at least the constant term".into()));
        }
        Ok(HbarSeries { coeffs })
    }

    pub fn constant(v: T, d_max: usize, zero: T) -> Self {
        let mut coeffs = vec![zero; d_max + 1];
        coeffs[0] = v;
        HbarSeries { coeffs }
    }

    pub fn d_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, d: usize) -> Result<&T> {
        self.coeffs
            .get(d)
            .ok_or(Error::OutsideWindow(d as i32, 0, self.d_max() as i32))
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        let n = self.coeffs.len().min(o.coeffs.len());
        let coeffs: Result<Vec<T>> =
            (0..n).map(|d| self.coeffs[d].add(&o.coeffs[d])).collect();
        Ok(HbarSeries { coeffs: coeffs? })
    }

    pub fn scale(&self, s: C) -> Self {
        HbarSeries { coeffs: self.coeffs.iter().map(|c| c.scale(s)).collect() }
    }

    /// Product truncated at the common d_max; the degree-d output only reads
    /// inputs at degrees <= d.
    pub fn mul(&self, o: &Self) -> Result<Self> {
        let n = self.coeffs.len().min(o.coeffs.len());
        let mut coeffs: Vec<Option<T>> = vec![None; n];
        for d in 0..n {
            for i in 0..=d {
                let p = self.coeffs[i].mul(&o.coeffs[d - i])?;
                coeffs[d] = Some(match coeffs[d].take() {
                    Some(acc) => acc.add(&p)?,
                    None => p,
                });
            }
        }
        Ok(HbarSeries { coeffs: coeffs.into_iter().map(|c| c.unwrap()).collect() })
    }
}

/// Polynomial in u: coefficients at degrees 0..=r_max.
#[derive(Clone, Debug)]
pub struct UPoly<T: Coeff> {
    coeffs: Vec<T>,
}

impl<T: Coeff> UPoly<T> {
    pub fn new(coeffs: Vec<T>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::Config("u-polynomial needs at least the constant term".into()));
        }
        Ok(UPoly { coeffs })
    }

    pub fn r_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Exact extraction of [u^r] for r <= r_max.
    pub fn coeff(&self, r: usize) -> Result<&T> {
        self.coeffs
            .get(r)
            .ok_or(Error::OutsideWindow(r as i32, 0, self.r_max() as i32))
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }
}

/// Even Taylor coefficients of S(z) = z^{-1}(e^{z/2} - e^{-z/2}) up to degree
/// r_max: the degree-2p coefficient is 1/(4^p (2p+1)!), odd ones vanish.
pub fn s_operator(r_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; r_max + 1];
    let mut val = 1.0;
    let mut p = 0usize;
    loop {
        let deg = 2 * p;
        if deg > r_max {
            break;
        }
        out[deg] = val;
        // from 1/(4^p (2p+1)!) to 1/(4^{p+1} (2p+3)!)
        val /= 4.0 * ((2 * p + 2) * (2 * p + 3)) as f64;
        p += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn s_operator_values() {
        let s = s_operator(4);
        assert_eq!(s[0], 1.0);
        assert_eq!(s[1], 0.0);
        assert!((s[2] - 1.0 / 24.0).abs() < 1e-16);
        assert_eq!(s[3], 0.0);
        assert!((s[4] - 1.0 / 1920.0).abs() < 1e-16);
    }

    #[test]
    fn s_operator_matches_function() {
        // Compare the truncated series against 2 sinh(z/2)/z at small z.
        let s = s_operator(8);
        let z = 0.37_f64;
        let series: f64 = s.iter().enumerate().map(|(k, &v)| v * z.powi(k as i32)).sum();
        let exact = 2.0 * (z / 2.0).sinh() / z;
        assert!((series - exact).abs() < 1e-14);
    }

    #[test]
    fn hbar_mul_truncates() {
        let a = HbarSeries::new(vec![c(1.0), c(2.0), c(3.0)]).unwrap();
        let b = HbarSeries::new(vec![c(1.0), c(-1.0), c(0.5)]).unwrap();
        let p = a.mul(&b).unwrap();
        assert_eq!(*p.coeff(0).unwrap(), c(1.0));
        assert_eq!(*p.coeff(1).unwrap(), c(1.0)); // 1*(-1) + 2*1
        assert_eq!(*p.coeff(2).unwrap(), c(1.5)); // 0.5 - 2 + 3
        assert!(p.coeff(3).is_err());
    }

    #[test]
    fn upoly_extraction() {
        let p = UPoly::new(vec![c(1.0), c(0.0), c(4.0)]).unwrap();
        assert_eq!(*p.coeff(2).unwrap(), c(4.0));
        assert!(p.coeff(3).is_err());
    }
}
