//! Adaptive Gauss-Legendre quadrature along straight segments in the complex
//! plane, used for cycle integrals and path integrals of differentials.

use num_complex::Complex64 as C;

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton iteration
/// on the Legendre polynomial.
fn gl_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(n);
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n and P_n' by recurrence.
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        xs.push(x);
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        ws.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (xs, ws)
}

fn rule() -> &'static (Vec<f64>, Vec<f64>) {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gl_rule(24))
}

fn gl_segment(f: &mut dyn FnMut(C) -> Result<C>, a: C, b: C) -> Result<C> {
    let (xs, ws) = rule();
    let mid = (a + b) * C::new(0.5, 0.0);
    let half = (b - a) * C::new(0.5, 0.0);
    let mut acc = C::new(0.0, 0.0);
    for (&x, &w) in xs.iter().zip(ws) {
        let z = mid + half * C::new(x, 0.0);
        let v = f(z)?;
        if !v.re.is_finite() || !v.im.is_finite() || v.norm() > 1e14 {
            return Err(Error::PoleOnContour(0));
        }
        acc += v * C::new(w, 0.0);
    }
    Ok(acc * half)
}

fn adaptive(
    f: &mut dyn FnMut(C) -> Result<C>,
    a: C,
    b: C,
    whole: C,
    tol: f64,
    depth: usize,
) -> Result<C> {
    let mid = (a + b) * C::new(0.5, 0.0);
    let left = gl_segment(f, a, mid)?;
    let right = gl_segment(f, mid, b)?;
    let err = (left + right - whole).norm();
    if err < tol || err < 1e-16 * (left + right).norm() {
        return Ok(left + right);
    }
    if depth == 0 {
        return Err(Error::QuadTolerance(err, tol));
    }
    let l = adaptive(f, a, mid, left, tol * 0.5, depth - 1)?;
    let r = adaptive(f, mid, b, right, tol * 0.5, depth - 1)?;
    Ok(l + r)
}

/// Integrate f along the straight segment a -> b with adaptive refinement.
pub fn integrate_segment(mut f: impl FnMut(C) -> Result<C>, a: C, b: C, tol: f64) -> Result<C> {
    let whole = gl_segment(&mut f, a, b)?;
    adaptive(&mut f, a, b, whole, tol, 24)
}

/// Integrate along a polyline.
pub fn integrate_path(mut f: impl FnMut(C) -> Result<C>, pts: &[C], tol: f64) -> Result<C> {
    let mut acc = C::new(0.0, 0.0);
    for w in pts.windows(2) {
        acc += integrate_segment(&mut f, w[0], w[1], tol)?;
    }
    Ok(acc)
}
