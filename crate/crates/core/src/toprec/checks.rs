//! Verifiers for the structural properties of the recursion output: loop
//! equations at key points and the projection property (A-periods).

use num_complex::Complex64 as C;

use crate::curve::{Cycle, PeriodData};
use crate::error::{Error, Result};
use crate::series::Jet;

use super::engine::Recursion;

/// Solve min ||A x - b|| over complex x via normal equations (small systems).
pub(crate) fn least_squares(a: &[Vec<C>], b: &[C]) -> Result<Vec<C>> {
    let rows = a.len();
    let cols = if rows == 0 { 0 } else { a[0].len() };
    let mut m = vec![vec![C::new(0.0, 0.0); cols + 1]; cols];
    for i in 0..cols {
        for j in 0..cols {
            for r in 0..rows {
                m[i][j] += a[r][i].conj() * a[r][j];
            }
        }
        for r in 0..rows {
            m[i][cols] += a[r][i].conj() * b[r];
        }
        // ridge term keeps degenerate generator sets solvable
        m[i][i] += C::new(1e-13, 0.0);
    }
    // Gaussian elimination with partial pivoting
    for col in 0..cols {
        let piv = (col..cols)
            .max_by(|&i, &j| m[i][col].norm().total_cmp(&m[j][col].norm()))
            .ok_or(Error::Other("empty system".into()))?;
        m.swap(col, piv);
        let d = m[col][col];
        if d.norm() < 1e-300 {
            return Err(Error::Other("singular least-squares system".into()));
        }
        for j in col..=cols {
            m[col][j] /= d;
        }
        for i in 0..cols {
            if i != col {
                let f = m[i][col];
                for j in col..=cols {
                    m[i][j] = m[i][j] - f * m[col][j];
                }
            }
        }
    }
    Ok((0..cols).map(|i| m[i][cols]).collect())
}

/// Max residual of the principal part of `cand` against the span of the
/// generator jets, relative to the candidate scale.
pub(crate) fn principal_part_residual(cand: &Jet, gens: &[Jet]) -> Result<f64> {
    if cand.is_zero() || cand.lo() >= 0 {
        return Ok(0.0);
    }
    let depth = (-cand.lo()) as usize;
    let b: Vec<C> = (1..=depth)
        .map(|m| cand.coeff(-(m as i32)))
        .collect::<Result<_>>()?;
    let scale = b.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let a: Vec<Vec<C>> = (1..=depth)
        .map(|m| {
            gens.iter()
                .map(|g| g.coeff_or_zero(-(m as i32)))
                .collect()
        })
        .collect();
    let x = least_squares(&a, &b)?;
    let mut worst: f64 = 0.0;
    for (row, bv) in a.iter().zip(&b) {
        let fit: C = row.iter().zip(&x).map(|(av, xv)| av * xv).sum();
        worst = worst.max((fit - bv).norm());
    }
    Ok(worst / scale)
}

/// Loop equations at every key point: for each k <= k_check, the principal
/// part of [u^k] e^{u y} of the level slice of the dressed field must lie in
/// the span generated from holomorphic forms by repeated d(1/dx).
///
/// Spectator slots are closed off by evaluating the basis at the supplied
/// sample points (`spectators.len()` must match n).
pub fn check_loop_eq(
    rec: &mut Recursion,
    g: usize,
    n: usize,
    spectators: &[C],
    k_check: i32,
) -> Result<f64> {
    if spectators.len() != n {
        return Err(Error::Config("spectator count must match n".into()));
    }
    // total hbar weight of the n-spectator field feeding the (g, n) level,
    // counting the hbar bundled with each u
    let weight = 2 * g as i32 - 1 + n as i32;
    let ord = rec.params.work_order() as i32;
    let mut worst: f64 = 0.0;
    for qi in 0..rec.curve.key_points.len() {
        let q = rec.curve.key_points[qi].z;
        let w = rec.w_field(qi, n)?;
        let tag = 7001 + 17 * qi as u64;

        // local y with y(q) = 0; exp(u y) as a u-polynomial of jets
        let ys = rec.curve.y_shift_jet(q, rec.params.work_order() + 6, tag)?;
        let mut eyu: Vec<Jet> = Vec::new(); // index = u-power
        let mut pw = Jet::one(tag).truncated(ord);
        let mut fact = 1.0;
        for j in 0..=rec.params.u_cap {
            if j > 0 {
                pw = pw.mul(&ys)?;
                fact *= j as f64;
            }
            eyu.push(pw.scale(C::new(1.0 / fact, 0.0)));
        }

        // close off spectators; total[i] holds the u^{i-1} part of the
        // weight slice (the prefactor carries u^{-1})
        let nu = rec.params.u_cap as usize + 2;
        let mut total: Vec<Jet> = vec![Jet::zero(tag).truncated(ord); nu];
        for (key, ms) in &w.terms {
            let mut factor = C::new(1.0, 0.0);
            for &(l, idx) in key.iter() {
                factor *= rec.basis.eval(rec.curve, idx, spectators[l])?;
            }
            if factor.norm() == 0.0 {
                continue;
            }
            for (i, slot) in total.iter_mut().enumerate() {
                let r = i as i32 - 1;
                if let Some(v) = ms.coeff(&(weight - r, [r, 0])) {
                    *slot = slot.add(&v.scale(factor))?;
                }
            }
        }

        // generators of the admissible pattern at q
        let xp = rec.curve.dx_jet(q, rec.params.work_order() + 6, tag)?.trimmed(1e-12);
        let xp_inv = xp.inv()?;
        let j_max = rec.params.k_max / 2 + 3;
        let mut gens = Vec::new();
        for l in 0..=(2 * j_max + 2) {
            let mut f = Jet::monomial(tag, l as i32, C::new(1.0, 0.0)).truncated(ord);
            gens.push(f.clone());
            for _ in 0..j_max {
                // d(1/dx) acting on a differential f dt
                f = f.mul(&xp_inv)?.deriv();
                gens.push(f.clone());
            }
        }

        for k in 0..=k_check {
            // [u^k] e^{uy} W = sum_j y^j/j! * total at u^{k-j}
            let mut cand = Jet::zero(tag).truncated(ord);
            for (j, e) in eyu.iter().enumerate() {
                let idx = k - j as i32 + 1;
                if (0..total.len() as i32).contains(&idx) {
                    cand = cand.add(&e.mul(&total[idx as usize])?)?;
                }
            }
            worst = worst.max(principal_part_residual(&cand, &gens)?);
        }
    }
    Ok(worst)
}

/// Projection property: A-periods of the computed differential vanish.  On
/// genus 0 all cycles are trivial and the result is exactly zero; on genus 1
/// the period is evaluated by quadrature in the first slot with the other
/// slots held at sample points.
pub fn check_projection(rec: &Recursion, g: usize, n: usize, spectators: &[C]) -> Result<f64> {
    if rec.curve.genus() == 0 {
        return Ok(0.0);
    }
    if spectators.len() + 1 != n {
        return Err(Error::Config("need n - 1 spectator points".into()));
    }
    let tensor = rec.omega(g, n)?;
    let periods = PeriodData::new(rec.curve.tau().expect("genus-1 curve"));
    let val = periods.cycle_integral(Cycle::A, |z| tensor.eval(rec.curve, &rec.basis, &{
        let mut pts = vec![z];
        pts.extend_from_slice(spectators);
        pts
    }))?;
    Ok(val.norm())
}
