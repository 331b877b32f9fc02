//! Elliptic building blocks on the torus C/(Z + tau Z) in the flat
//! coordinate, all derived from the odd theta function: with
//! f = log theta*,  eta1 = -theta*'''(0)/(6 theta*'(0)),
//!   zeta(z) = f'(z) + 2 eta1 z,   wp(z) = -f''(z) - 2 eta1.
//! Jets are Laurent jets in t = z - z0 and stay valid at lattice points,
//! where the pole structure comes out of jet division exactly.

use num_complex::Complex64 as C;

use crate::error::Result;
use crate::series::jet::Jet;
use crate::theta::ThetaContext;

#[derive(Clone, Debug)]
pub struct Elliptic {
    pub theta: ThetaContext,
    pub eta1: C,
}

impl Elliptic {
    pub fn new(theta: ThetaContext) -> Result<Self> {
        let t1 = theta.theta_deriv_raw(&[1], &[C::new(0.0, 0.0)])?;
        let t3 = theta.theta_deriv_raw(&[3], &[C::new(0.0, 0.0)])?;
        let eta1 = -t3 / (C::new(6.0, 0.0) * t1);
        Ok(Elliptic { theta, eta1 })
    }

    pub fn tau(&self) -> C {
        self.theta.tau()
    }

    /// Jet of f'(z0 + t) = (log theta*)'(z0 + t); Laurent at lattice points.
    pub fn f_prime_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let th = self.theta.theta_star_jet(z0, order + 2, tag)?;
        let th = th.trimmed(1e-13);
        th.deriv().div(&th)
    }

    /// Jet of f^{(m)}(z0 + t) for m >= 1.
    pub fn f_deriv_jet(&self, m: usize, z0: C, order: usize, tag: u64) -> Result<Jet> {
        assert!(m >= 1);
        let mut j = self.f_prime_jet(z0, order + m - 1, tag)?;
        for _ in 1..m {
            j = j.deriv();
        }
        Ok(j)
    }

    /// Jet of f(z0 + t) (off lattice points only: f has log singularities
    /// there).
    pub fn f_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        self.theta.log_theta_jet(z0, order, tag)
    }

    /// f(z) pointwise, principal branch of log.
    pub fn f_val(&self, z: C) -> Result<C> {
        Ok(self.theta.theta_star_deriv(&[0], &[z])?.ln())
    }

    pub fn f_prime_val(&self, z: C) -> Result<C> {
        let t0 = self.theta.theta_star_deriv(&[0], &[z])?;
        let t1 = self.theta.theta_star_deriv(&[1], &[z])?;
        Ok(t1 / t0)
    }

    /// Weierstrass wp(z) = -f''(z) - 2 eta1.
    pub fn wp_val(&self, z: C) -> Result<C> {
        let j = self.f_prime_jet(z, 3, 0)?;
        // f''(z): the t^0 coefficient of d/dt f'(z + t) ... single-valued
        // only off-lattice; for pointwise use require z off-lattice.
        let fpp = j.deriv().coeff_or_zero(0);
        Ok(-fpp - C::new(2.0, 0.0) * self.eta1)
    }

    /// Jet of wp(z0 + t); Laurent 1/t^2 at lattice points.
    pub fn wp_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let fpp = self.f_deriv_jet(2, z0, order + 4, tag)?;
        let c = Jet::constant(tag, -C::new(2.0, 0.0) * self.eta1);
        fpp.neg().add(&c)
    }

    /// Jet of wp'(z0 + t).
    pub fn wp_prime_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        Ok(self.f_deriv_jet(3, z0, order + 5, tag)?.neg())
    }

    /// Jet of zeta(z0 + t) = f'(z0 + t) + 2 eta1 (z0 + t); Laurent 1/t at
    /// lattice points.
    pub fn zeta_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let fp = self.f_prime_jet(z0, order, tag)?;
        let lin = Jet::constant(tag, z0)
            .add(&Jet::monomial(tag, 1, C::new(1.0, 0.0)))?
            .scale(C::new(2.0, 0.0) * self.eta1);
        fp.add(&lin)
    }

    /// Bergman kernel coefficient: B(z1, z2)/(dz1 dz2) = wp(z1 - z2) + 2 eta1
    /// = -f''(z1 - z2).
    pub fn bergman_val(&self, z1: C, z2: C) -> Result<C> {
        let j = self.f_prime_jet(z1 - z2, 2, 0)?;
        Ok(-j.deriv().coeff_or_zero(0))
    }

    /// Jet in z of B(z0 + t, z2)/(dz dz2) = -f''(z0 - z2 + t): valid also
    /// when z0 - z2 is a lattice point (double pole).
    pub fn bergman_jet(&self, z0: C, z2: C, order: usize, tag: u64) -> Result<Jet> {
        self.f_deriv_jet(2, z0 - z2, order + 4, tag).map(|j| j.neg())
    }

    /// Prime form in the flat frame: E(z1, z2) = theta*(z1-z2)/theta*'(0).
    pub fn prime_form_val(&self, z1: C, z2: C) -> Result<C> {
        let num = self.theta.theta_star_deriv(&[0], &[z1 - z2])?;
        let den = self.theta.theta_deriv_raw(&[1], &[C::new(0.0, 0.0)])?;
        Ok(num / den)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theta::Modification;

    fn ell() -> Elliptic {
        let ctx = ThetaContext::genus1(
            C::new(0.0, 1.0),
            C::new(0.3, 0.2),
            12,
            Modification::trivial(1),
        )
        .unwrap();
        Elliptic::new(ctx).unwrap()
    }

    #[test]
    fn wp_laurent_expansion_at_origin() {
        // wp(t) = t^{-2} + 0 + 0 t + (g2/20) t^2 + ...: no 1/t, no constant.
        let e = ell();
        let j = e.wp_jet(C::new(0.0, 0.0), 6, 0).unwrap();
        assert!((j.coeff_or_zero(-2) - C::new(1.0, 0.0)).norm() < 1e-11);
        assert!(j.coeff_or_zero(-1).norm() < 1e-11);
        assert!(j.coeff_or_zero(0).norm() < 1e-10, "const {}", j.coeff_or_zero(0));
        assert!(j.coeff_or_zero(1).norm() < 1e-10);
    }

    #[test]
    fn wp_is_even_and_periodic() {
        let e = ell();
        let z = C::new(0.23, 0.11);
        let a = e.wp_val(z).unwrap();
        let b = e.wp_val(-z).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        let p1 = e.wp_val(z + C::new(1.0, 0.0)).unwrap();
        let pt = e.wp_val(z + e.tau()).unwrap();
        assert!((a - p1).norm() < 1e-10 * a.norm().max(1.0));
        assert!((a - pt).norm() < 1e-9 * a.norm().max(1.0));
    }

    #[test]
    fn zeta_quasi_periodicity_legendre() {
        // zeta(z + 1) = zeta(z) + 2 eta1, and eta1 tau - eta2 = i pi with
        // zeta(z + tau) = zeta(z) + 2 eta2.
        let e = ell();
        let z = C::new(0.17, 0.21);
        let zv = e.zeta_jet(z, 2, 0).unwrap().coeff_or_zero(0);
        let z1 = e.zeta_jet(z + C::new(1.0, 0.0), 2, 0).unwrap().coeff_or_zero(0);
        assert!((z1 - zv - C::new(2.0, 0.0) * e.eta1).norm() < 1e-10);
        let zt = e.zeta_jet(z + e.tau(), 2, 0).unwrap().coeff_or_zero(0);
        let eta2 = (zt - zv) / C::new(2.0, 0.0);
        let legendre = e.eta1 * e.tau() - eta2;
        assert!((legendre - C::new(0.0, std::f64::consts::PI)).norm() < 1e-9);
    }

    #[test]
    fn wp_satisfies_differential_equation() {
        // (wp')^2 = 4 wp^3 - g2 wp - g3: check via jets at a generic point by
        // comparing (wp')^2 - 4 wp^3 at two points; the difference must be a
        // degree-1 polynomial in wp with the same coefficients.
        let e = ell();
        let probe = |z: C| -> (C, C) {
            let wp = e.wp_jet(z, 4, 0).unwrap();
            let wpp = e.wp_prime_jet(z, 4, 0).unwrap();
            (wp.coeff_or_zero(0), wpp.coeff_or_zero(0))
        };
        let (p1, d1) = probe(C::new(0.21, 0.05));
        let (p2, d2) = probe(C::new(-0.13, 0.33));
        let (p3, d3) = probe(C::new(0.4, -0.22));
        // Solve d^2 - 4p^3 = -g2 p - g3 from two points, verify at the third.
        let lhs1 = d1 * d1 - C::new(4.0, 0.0) * p1 * p1 * p1;
        let lhs2 = d2 * d2 - C::new(4.0, 0.0) * p2 * p2 * p2;
        let lhs3 = d3 * d3 - C::new(4.0, 0.0) * p3 * p3 * p3;
        let g2 = (lhs2 - lhs1) / (p1 - p2);
        let g3 = -lhs1 - g2 * p1;
        let resid = (lhs3 + g2 * p3 + g3).norm();
        assert!(resid < 1e-8 * lhs3.norm().max(1.0), "resid {resid}");
    }

    #[test]
    fn bergman_symmetry_and_pole() {
        let e = ell();
        let z1 = C::new(0.31, 0.12);
        let z2 = C::new(-0.08, 0.27);
        let a = e.bergman_val(z1, z2).unwrap();
        let b = e.bergman_val(z2, z1).unwrap();
        assert!((a - b).norm() < 1e-10 * a.norm().max(1.0));
        // Diagonal jet: B(z2 + t, z2) ~ 1/t^2.
        let j = e.bergman_jet(z2, z2, 4, 0).unwrap();
        assert!((j.coeff_or_zero(-2) - C::new(1.0, 0.0)).norm() < 1e-10);
        assert!(j.coeff_or_zero(-1).norm() < 1e-10);
    }

    #[test]
    fn prime_form_leading_behavior() {
        let e = ell();
        let z1 = C::new(0.2, 0.1);
        for &eps in &[1e-4, 1e-5] {
            let z2 = z1 - C::new(eps, 0.0);
            let ef = e.prime_form_val(z1, z2).unwrap();
            assert!((ef / C::new(eps, 0.0) - C::new(1.0, 0.0)).norm() < 1e-3);
        }
    }
}
