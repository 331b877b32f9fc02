//! Shared fixtures for unit tests: one Airy curve and one flat-torus curve
//! with prebuilt recursion tables, leaked to 'static so every test module
//! reuses the same expensive build.

use std::sync::{Mutex, OnceLock};

use num_complex::Complex64 as C;

use crate::curve::{CurveData, EllDiff, Elliptic, KeyPoint, Poly, Rat, SpectralCurve};
use crate::theta::{Modification, ThetaContext};
use crate::toprec::{Recursion, TrParams};

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn airy_curve() -> &'static SpectralCurve {
    static CURVE: OnceLock<&'static SpectralCurve> = OnceLock::new();
    CURVE.get_or_init(|| {
        let x = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
        let y = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        Box::leak(Box::new(SpectralCurve {
            data: CurveData::Rational { x, y },
            key_points: vec![KeyPoint { z: c(0.0, 0.0), ramified: true }],
            dual_key_points: vec![],
        }))
    })
}

/// The Airy dual: x = z (no ramification), y = z^2; the key-point set is
/// empty and the stable table vanishes.
pub fn airy_dual_curve() -> &'static SpectralCurve {
    static CURVE: OnceLock<&'static SpectralCurve> = OnceLock::new();
    CURVE.get_or_init(|| {
        let x = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let y = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
        Box::leak(Box::new(SpectralCurve {
            data: CurveData::Rational { x, y },
            key_points: vec![],
            dual_key_points: vec![c(0.0, 0.0)],
        }))
    })
}

pub fn torus_curve() -> &'static SpectralCurve {
    static CURVE: OnceLock<&'static SpectralCurve> = OnceLock::new();
    CURVE.get_or_init(|| {
        let ctx = ThetaContext::genus1(c(0.0, 1.0), c(0.3, 0.2), 16, Modification::trivial(1))
            .unwrap();
        let ell = Elliptic::new(ctx).unwrap();
        let a = c(0.31, 0.12);
        let dx = EllDiff { wp_prime_terms: vec![(c(1.0, 0.0), c(0.0, 0.0))], ..Default::default() };
        let dy = EllDiff { wp_prime_terms: vec![(c(1.0, 0.0), a)], ..Default::default() };
        let tau = ell.tau();
        let half = c(0.5, 0.0);
        Box::leak(Box::new(SpectralCurve {
            data: CurveData::Torus { ell, dx, dy },
            key_points: vec![KeyPoint { z: half, ramified: true }],
            dual_key_points: vec![
                tau * half,
                (tau + c(1.0, 0.0)) * half,
                a + half,
                a + tau * half,
                a + (tau + c(1.0, 0.0)) * half,
            ],
        }))
    })
}

/// Built Airy recursion at level 3, shared behind a mutex (the dressed-field
/// cache mutates on access).
pub fn airy_rec() -> &'static Mutex<Recursion<'static>> {
    static REC: OnceLock<&'static Mutex<Recursion<'static>>> = OnceLock::new();
    REC.get_or_init(|| {
        let mut rec = Recursion::new(airy_curve(), TrParams::with_level(3)).unwrap();
        rec.build().unwrap();
        Box::leak(Box::new(Mutex::new(rec)))
    })
}

/// Built torus recursion at level 1 (arity-3 table), shared.
pub fn torus_rec() -> &'static Mutex<Recursion<'static>> {
    static REC: OnceLock<&'static Mutex<Recursion<'static>>> = OnceLock::new();
    REC.get_or_init(|| {
        let mut rec = Recursion::new(torus_curve(), TrParams::with_level(1)).unwrap();
        rec.build().unwrap();
        Box::leak(Box::new(Mutex::new(rec)))
    })
}
