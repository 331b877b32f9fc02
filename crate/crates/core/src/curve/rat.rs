//! Dense polynomials and rational functions of the genus-0 global coordinate.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::series::jet::Jet;

#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    /// coeffs[k] multiplies z^k; trailing zeros trimmed.
    pub coeffs: Vec<C>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<C>) -> Self {
        while coeffs.last().map(|c| c.norm() == 0.0).unwrap_or(false) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::new(vec![C::new(1.0, 0.0)])
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.is_zero() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn eval(&self, z: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    }

    pub fn deriv(&self) -> Poly {
        if self.coeffs.len() <= 1 {
            return Poly::zero();
        }
        Poly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * C::new((i + 1) as f64, 0.0))
                .collect(),
        )
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.is_zero() || o.is_zero() {
            return Poly::zero();
        }
        let mut coeffs = vec![C::new(0.0, 0.0); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly::new(coeffs)
    }

    /// Taylor jet at z0 in t = z - z0, exact to all orders (truncated to
    /// `order` coefficients past the degree for window bookkeeping).
    pub fn jet_at(&self, z0: C, tag: u64, order: usize) -> Jet {
        if self.is_zero() {
            return Jet::zero(tag);
        }
        let n = self.coeffs.len();
        // Repeated synthetic division by (z - z0).
        let mut work = self.coeffs.clone();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            // divide work by (z - z0): remainder is the next Taylor coeff
            let mut rem = C::new(0.0, 0.0);
            for c in work.iter_mut().rev() {
                let tmp = *c + rem * z0;
                rem = tmp;
                *c = tmp;
            }
            // work now holds [r, q0, q1, ...]: remainder then quotient
            out.push(work[0]);
            work.remove(0);
            if work.is_empty() {
                break;
            }
        }
        out.resize(out.len().max(order + 1), C::new(0.0, 0.0));
        Jet::new(tag, 0, out)
    }

    /// All roots (with multiplicity) by Durand-Kerner iteration.
    pub fn roots(&self) -> Vec<C> {
        let deg = match self.degree() {
            Some(d) if d >= 1 => d,
            _ => return Vec::new(),
        };
        let lead = self.coeffs[deg];
        let monic: Vec<C> = self.coeffs.iter().map(|&c| c / lead).collect();
        let radius = 1.0
            + monic[..deg]
                .iter()
                .map(|c| c.norm())
                .fold(0.0, f64::max);
        let mut zs: Vec<C> = (0..deg)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / deg as f64;
                C::new(radius * 0.7 * ang.cos(), radius * 0.7 * ang.sin())
            })
            .collect();
        for _ in 0..200 {
            let mut delta = 0.0f64;
            for i in 0..deg {
                let mut denom = C::new(1.0, 0.0);
                for j in 0..deg {
                    if j != i {
                        denom *= zs[i] - zs[j];
                    }
                }
                let p = {
                    let mut acc = C::new(0.0, 0.0);
                    for &c in monic.iter().rev() {
                        acc = acc * zs[i] + c;
                    }
                    acc
                };
                let step = p / denom;
                zs[i] -= step;
                delta = delta.max(step.norm());
            }
            if delta < 1e-13 * radius {
                break;
            }
        }
        zs
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rat {
    pub num: Poly,
    pub den: Poly,
}

impl Rat {
    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::Config("rational function with zero denominator".into()));
        }
        Ok(Rat { num, den })
    }

    pub fn from_poly(p: Poly) -> Self {
        Rat { num: p, den: Poly::one() }
    }

    pub fn eval(&self, z: C) -> C {
        self.num.eval(z) / self.den.eval(z)
    }

    pub fn deriv(&self) -> Rat {
        // (n/d)' = (n'd - nd')/d^2
        let n = self.num.deriv().mul(&self.den);
        let m = self.num.mul(&self.den.deriv());
        let num = Poly::new(
            (0..n.coeffs.len().max(m.coeffs.len()))
                .map(|k| {
                    n.coeffs.get(k).copied().unwrap_or(C::new(0.0, 0.0))
                        - m.coeffs.get(k).copied().unwrap_or(C::new(0.0, 0.0))
                })
                .collect(),
        );
        Rat { num, den: self.den.mul(&self.den) }
    }

    /// Laurent jet at z0 in t = z - z0, exact through `order` coefficients
    /// past the leading one.
    pub fn jet_at(&self, z0: C, tag: u64, order: usize) -> Result<Jet> {
        let nj = self.num.jet_at(z0, tag, order + 8).trimmed(1e-13);
        let dj = self.den.jet_at(z0, tag, order + 8).trimmed(1e-13);
        if nj.is_zero() {
            return Ok(Jet::zero(tag));
        }
        nj.div(&dj)
    }

    /// Local order at z0: valuation of the function (negative at a pole).
    pub fn order_at(&self, z0: C) -> Result<i32> {
        let j = self.jet_at(z0, 0, 8)?;
        if j.is_zero() {
            return Err(Error::Other("local order of the zero function".into()));
        }
        Ok(j.lo())
    }

    /// Finite poles (denominator roots not cancelled by the numerator).
    pub fn poles(&self) -> Vec<C> {
        self.den
            .roots()
            .into_iter()
            .filter(|&r| self.num.eval(r).norm() > 1e-9 * self.num_scale())
            .collect()
    }

    fn num_scale(&self) -> f64 {
        self.num.coeffs.iter().map(|c| c.norm()).fold(1e-300, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn poly_jet_at_shifted_point() {
        // z^2 at z0 = 1: (1 + t)^2 = 1 + 2t + t^2
        let p = Poly::new(vec![c(0.0), c(0.0), c(1.0)]);
        let j = p.jet_at(c(1.0), 0, 4);
        assert_eq!(j.coeff_or_zero(0), c(1.0));
        assert_eq!(j.coeff_or_zero(1), c(2.0));
        assert_eq!(j.coeff_or_zero(2), c(1.0));
        assert_eq!(j.coeff_or_zero(3), c(0.0));
    }

    #[test]
    fn rat_jet_with_pole() {
        // 1/z at z0 = 0: t^{-1}
        let r = Rat::new(Poly::one(), Poly::new(vec![c(0.0), c(1.0)])).unwrap();
        let j = r.jet_at(c(0.0), 0, 4).unwrap();
        assert_eq!(j.lo(), -1);
        assert_eq!(j.coeff_or_zero(-1), c(1.0));
        assert_eq!(r.order_at(c(0.0)).unwrap(), -1);
    }

    #[test]
    fn roots_of_quadratic() {
        // z^2 - 3z + 2 -> 1, 2
        let p = Poly::new(vec![c(2.0), c(-3.0), c(1.0)]);
        let mut rs = p.roots();
        rs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((rs[0] - c(1.0)).norm() < 1e-10);
        assert!((rs[1] - c(2.0)).norm() < 1e-10);
    }

    #[test]
    fn deriv_matches_difference() {
        let r = Rat::new(
            Poly::new(vec![c(1.0), c(2.0), c(1.0)]),
            Poly::new(vec![c(3.0), c(0.0), c(1.0)]),
        )
        .unwrap();
        let d = r.deriv();
        let z = C::new(0.4, 0.7);
        let h = 1e-6;
        let fd = (r.eval(z + C::new(h, 0.0)) - r.eval(z - C::new(h, 0.0))) / c(2.0 * h);
        assert!((fd - d.eval(z)).norm() < 1e-8);
    }
}
