//! Structural checks of the recursion output: loop equations at key points
//! and the projection property, on a rational and an elliptic curve.

use nptr::curve::{
    CurveData, EllDiff, Elliptic, KeyPoint, Poly, Rat, SpectralCurve,
};
use nptr::theta::{Modification, ThetaContext};
use nptr::toprec::{check_loop_eq, check_projection, Recursion, TrParams};
use num_complex::Complex64 as C;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

fn airy() -> SpectralCurve {
    let x = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
    let y = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]));
    SpectralCurve {
        data: CurveData::Rational { x, y },
        key_points: vec![KeyPoint { z: c(0.0, 0.0), ramified: true }],
        dual_key_points: vec![],
    }
}

fn torus() -> SpectralCurve {
    let ctx = ThetaContext::genus1(c(0.0, 1.0), c(0.3, 0.2), 16, Modification::trivial(1))
        .unwrap();
    let ell = Elliptic::new(ctx).unwrap();
    // x = wp(z), y = wp(z - a): dx = wp'(z) dz, dy = wp'(z - a) dz
    let a = c(0.31, 0.12);
    let dx = EllDiff { wp_prime_terms: vec![(c(1.0, 0.0), c(0.0, 0.0))], ..Default::default() };
    let dy = EllDiff { wp_prime_terms: vec![(c(1.0, 0.0), a)], ..Default::default() };
    let tau = ell.tau();
    let half = c(0.5, 0.0);
    SpectralCurve {
        data: CurveData::Torus { ell, dx, dy },
        key_points: vec![KeyPoint { z: half, ramified: true }],
        dual_key_points: vec![
            tau * half,
            (tau + c(1.0, 0.0)) * half,
            a + half,
            a + tau * half,
            a + (tau + c(1.0, 0.0)) * half,
        ],
    }
}

#[test]
fn airy_loop_equations_hold() {
    let curve = airy();
    let mut rec = Recursion::new(&curve, TrParams::with_level(2)).unwrap();
    rec.build().unwrap();
    let spec = [c(0.8, 0.4)];
    let r01 = check_loop_eq(&mut rec, 0, 1, &spec, 1).unwrap();
    assert!(r01 < 1e-10, "(0,1) loop-eq residual {r01}");
    let r11 = check_loop_eq(&mut rec, 1, 1, &spec, 1).unwrap();
    assert!(r11 < 1e-9, "(1,1) loop-eq residual {r11}");
    let r02 = check_loop_eq(&mut rec, 0, 2, &[c(0.8, 0.4), c(-0.5, 0.9)], 1).unwrap();
    assert!(r02 < 1e-9, "(0,2) loop-eq residual {r02}");
}

#[test]
fn airy_projection_is_trivial() {
    let curve = airy();
    let mut rec = Recursion::new(&curve, TrParams::with_level(1)).unwrap();
    rec.build().unwrap();
    let p = check_projection(&rec, 0, 3, &[c(0.8, 0.4), c(-0.5, 0.9)]).unwrap();
    assert_eq!(p, 0.0);
}

#[test]
fn torus_recursion_satisfies_projection_and_loop_equations() {
    let curve = torus();
    let mut rec = Recursion::new(&curve, TrParams::with_level(1)).unwrap();
    rec.build().unwrap();
    let z1 = c(0.21, 0.34);
    let z2 = c(-0.17, 0.42);
    let p03 = check_projection(&rec, 0, 3, &[z1, z2]).unwrap();
    assert!(p03 < 1e-8, "(0,3) A-period {p03}");
    let p11 = check_projection(&rec, 1, 1, &[]).unwrap();
    assert!(p11 < 1e-8, "(1,1) A-period {p11}");
    let r01 = check_loop_eq(&mut rec, 0, 1, &[z1], 1).unwrap();
    assert!(r01 < 1e-8, "(0,1) loop-eq residual {r01}");
}
