//! Action of the shift kernel u h S(u h d/dx) on jets in a local coordinate.
//!
//! At a ramification point the coordinate s satisfies x - x(q) = s^2, so
//! d/dx = (1/(2s)) d/ds; at a non-ramified basepoint x is (a shift of) s and
//! d/dx = d/ds.  Each application of d/dx costs window: dividing by 2s lowers
//! the exact upper bound by one, which is why window tracking is mandatory.

use crate::error::Result;
use num_complex::Complex64 as C;

use super::hbar::{s_operator, UPoly};
use super::jet::Jet;

/// How d/dx acts on the jet's coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum XDeriv {
    /// x - x(q) = s^2: d/dx = (1/(2s)) d/ds.
    Ramified,
    /// x = s + const: d/dx = d/ds.
    Plain,
}

/// One application of d/dx to a jet in coordinate s.
pub fn d_dx(f: &Jet, mode: XDeriv) -> Result<Jet> {
    let df = f.deriv();
    match mode {
        XDeriv::Plain => Ok(df),
        XDeriv::Ramified => {
            let two_s = Jet::var(f.tag).scale(C::new(2.0, 0.0));
            df.div(&two_s)
        }
    }
}

/// Termwise action of u h S(u h d/dx) on f, as a polynomial in u with jet
/// coefficients.  Since powers of u and h enter together, the degree-r
/// coefficient is understood to carry h^r: only odd degrees are populated,
/// with [u^{2p+1}] = S_{2p} (d/dx)^{2p} f.
pub fn apply_shift_kernel(f: &Jet, r_max: usize, mode: XDeriv) -> Result<UPoly<Jet>> {
    let s = s_operator(r_max.saturating_sub(1));
    let mut coeffs = vec![Jet::zero(f.tag); r_max + 1];
    let mut der = f.clone();
    let mut p = 0usize;
    loop {
        let r = 2 * p + 1;
        if r > r_max {
            break;
        }
        coeffs[r] = der.scale(C::new(s[2 * p], 0.0));
        if 2 * p + 3 > r_max {
            break;
        }
        der = d_dx(&d_dx(&der, mode)?, mode)?;
        p += 1;
    }
    UPoly::new(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn constant_input_gives_single_term() {
        // f = 1: only the u^1 term survives, equal to f itself.
        let f = Jet::one(3).truncated(8);
        let p = apply_shift_kernel(&f, 5, XDeriv::Ramified).unwrap();
        assert_eq!(p.coeff(1).unwrap().coeff_or_zero(0), c(1.0));
        assert!(p.coeff(3).unwrap().is_zero());
        assert!(p.coeff(5).unwrap().is_zero());
    }

    #[test]
    fn coordinate_x_input() {
        // f = x = s^2 at a ramified point: (d/dx)^2 x = 0, so only u^1 term.
        let f = Jet::new(3, 2, vec![c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        let p = apply_shift_kernel(&f, 5, XDeriv::Ramified).unwrap();
        assert_eq!(p.coeff(1).unwrap().coeff_or_zero(2), c(1.0));
        assert!(p.coeff(3).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn inverse_coordinate_third_order() {
        // f = 1/s with x = s^2.  (d/dx)^2 (1/s) = (1/2s) d/ds (1/2s * -1/s^2)
        //   = (1/2s) d/ds (-s^{-3}/2) = (1/2s)(3/2) s^{-4} = (3/4) s^{-5}.
        // [u^3] = S_2-coefficient 1/24 times that = (1/32) s^{-5}.
        let f = Jet::new(3, -1, vec![c(1.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0), c(0.0)]);
        let p = apply_shift_kernel(&f, 3, XDeriv::Ramified).unwrap();
        let u3 = p.coeff(3).unwrap();
        assert!((u3.coeff_or_zero(-5) - c(3.0 / 4.0 / 24.0)).norm() < 1e-14);
    }

    #[test]
    fn degree_zero_reduces_to_multiplication_by_u() {
        // [u^1] with S(0)=1 is just f.
        let f = Jet::new(3, -2, vec![c(2.0), c(1.0), c(-0.5), c(0.3), c(0.0), c(0.0)]);
        let p = apply_shift_kernel(&f, 4, XDeriv::Plain).unwrap();
        let u1 = p.coeff(1).unwrap();
        for k in -2..=1 {
            assert_eq!(u1.coeff_or_zero(k), f.coeff_or_zero(k));
        }
    }
}
