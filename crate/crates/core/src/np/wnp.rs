//! Slices of the theta-dressed field at a key point: the resummed local
//! field (the engine's dressed disc field) sits at one vertex, and the
//! remaining graph content (other table vertices, theta vertices, second
//! cycle pairings) multiplies it by scalars.  Each expansion order of the
//! dressed differentials is a finite sum of such contributions, and the
//! loop equations hold order by order.

use num_complex::Complex64 as C;

use crate::curve::BasisIdx;
use crate::error::{Error, Result};
use crate::series::Jet;
use crate::toprec::checks::principal_part_residual;
use crate::toprec::{OmegaGN, Recursion};

use super::graph::{enumerate_graphs, Variant};

fn i2pi() -> C {
    C::new(0.0, 2.0 * std::f64::consts::PI)
}

/// u-power slices (index i holds power i - 1) of the dressed field at key
/// point `qi`, at total expansion order `dtot`, with the extra variables
/// closed off at `spectators`.
pub fn wnp_totals(
    rec: &mut Recursion,
    qi: usize,
    spectators: &[C],
    dtot: usize,
) -> Result<Vec<Jet>> {
    let n = spectators.len();
    let tag = 7001 + 17 * qi as u64;
    let ord = rec.params.work_order() as i32;
    let nu = rec.params.u_cap as usize + 2;
    let mut total: Vec<Jet> = vec![Jet::zero(tag).truncated(ord); nu];
    let tau = rec.curve.tau();
    let phi = |basis: &crate::curve::KernelBasis, idx: BasisIdx| basis.b_period(idx, tau) / i2pi();

    for graph in enumerate_graphs(Variant::Dressed, n, dtot) {
        if rec.curve.genus() == 0 && !graph.thetas.is_empty() {
            continue;
        }
        let di = graph
            .verts
            .iter()
            .position(|v| v.leaves.contains(&0))
            .expect("dressed vertex");
        let dv = graph.verts[di].clone();
        let d_rest = graph.degree(Variant::Dressed);
        let hu = dtot as i64 - d_rest;
        let nspec = dv.m() - 1 + dv.k;
        if hu < nspec as i64 - 1 {
            continue;
        }

        // The dressed field with one slot per extra leaf and per theta stub.
        let w = rec.w_field(qi, nspec)?;

        // Scalar factors: the other vertices with their slots closed off,
        // and the log-theta derivatives of the theta vertices.
        let mut scalar = C::new(1.0, 0.0) / C::new(graph.aut_order as f64, 0.0);
        for &deg in &graph.theta_degrees() {
            let ell = rec
                .curve
                .ell()
                .ok_or_else(|| Error::Config("theta factors need a genus-1 curve".into()))?;
            scalar *= ell.theta.log_deriv(deg)?;
        }
        for (vi, v) in graph.verts.iter().enumerate() {
            if vi == di {
                continue;
            }
            if v.degree() == 0 {
                // (0,1,1): second-cycle integral of the two-point kernel.
                // (0,2,0): the two-point kernel between its two spectators.
                scalar *= if v.k == 1 {
                    rec.basis
                        .eval(rec.curve, BasisIdx::Eta, spectators[v.leaves[0] - 1])?
                } else {
                    rec.curve
                        .bergman_eval(spectators[v.leaves[0] - 1], spectators[v.leaves[1] - 1])?
                };
                continue;
            }
            let tensor = rec
                .table
                .get(&(v.g, v.m() + v.k))
                .ok_or(Error::MissingTable(v.g, v.m() + v.k))?;
            let mut vsum = C::new(0.0, 0.0);
            for (key, c) in tensor.terms() {
                for arr in OmegaGN::arrangements(key) {
                    let mut s = *c;
                    for idx in arr.iter().take(v.k) {
                        s *= phi(&rec.basis, *idx);
                    }
                    for (leaf, idx) in v.leaves.iter().zip(arr.iter().skip(v.k)) {
                        s *= rec.basis.eval(rec.curve, *idx, spectators[leaf - 1])?;
                    }
                    vsum += s;
                }
            }
            scalar *= vsum;
        }
        if scalar.norm() == 0.0 {
            continue;
        }

        // Contract the dressed field's slots: extra leaves of the dressed
        // vertex evaluate at spectators, theta stubs pair with the second
        // cycle (slot order: leaves first, then stubs).
        let dleaves: Vec<usize> = dv.leaves.iter().copied().filter(|&l| l != 0).collect();
        for (key, ms) in &w.terms {
            let mut factor = scalar;
            for &(l, idx) in key.iter() {
                if l < dleaves.len() {
                    factor *= rec.basis.eval(rec.curve, idx, spectators[dleaves[l] - 1])?;
                } else {
                    factor *= phi(&rec.basis, idx);
                }
            }
            if factor.norm() == 0.0 {
                continue;
            }
            for (i, slot) in total.iter_mut().enumerate() {
                let r = i as i64 - 1;
                if let Some(v) = ms.coeff(&((hu - r) as i32, [r as i32, 0])) {
                    *slot = slot.add(&v.scale(factor))?;
                }
            }
        }
    }
    Ok(total)
}

/// Worst principal-part residual of the dressed loop equations at all key
/// points, for u-powers 0..=k_check at expansion order `dtot`.
pub fn check_np_loop(
    rec: &mut Recursion,
    spectators: &[C],
    dtot: usize,
    k_check: i32,
) -> Result<f64> {
    let ord = rec.params.work_order() as i32;
    let mut worst: f64 = 0.0;
    for qi in 0..rec.curve.key_points.len() {
        let q = rec.curve.key_points[qi].z;
        let tag = 7001 + 17 * qi as u64;
        let total = wnp_totals(rec, qi, spectators, dtot)?;

        let ys = rec.curve.y_shift_jet(q, rec.params.work_order() + 6, tag)?;
        let mut eyu: Vec<Jet> = Vec::new();
        let mut pw = Jet::one(tag).truncated(ord);
        let mut fact = 1.0;
        for j in 0..=rec.params.u_cap {
            if j > 0 {
                pw = pw.mul(&ys)?;
                fact *= j as f64;
            }
            eyu.push(pw.scale(C::new(1.0 / fact, 0.0)));
        }

        let xp = rec
            .curve
            .dx_jet(q, rec.params.work_order() + 6, tag)?
            .trimmed(1e-12);
        let xp_inv = xp.inv()?;
        let j_max = rec.params.k_max / 2 + 3;
        let mut gens = Vec::new();
        for l in 0..=(2 * j_max + 2) {
            let mut f = Jet::monomial(tag, l as i32, C::new(1.0, 0.0)).truncated(ord);
            gens.push(f.clone());
            for _ in 0..j_max {
                f = f.mul(&xp_inv)?.deriv();
                gens.push(f.clone());
            }
        }

        for k in 0..=k_check {
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testfix;

    #[test]
    fn undressed_slices_satisfy_loop_equations() {
        let mut rec = testfix::airy_rec().lock().unwrap();
        for dtot in 0..=2 {
            let r = check_np_loop(&mut rec, &[], dtot, 2).unwrap();
            assert!(r <= 1e-8, "order {dtot}: residual {r}");
        }
    }

    #[test]
    fn dressed_slices_satisfy_loop_equations() {
        let mut rec = testfix::torus_rec().lock().unwrap();
        for dtot in 0..=1 {
            let r = check_np_loop(&mut rec, &[], dtot, 1).unwrap();
            assert!(r <= 1e-7, "order {dtot}: residual {r}");
        }
    }

    #[test]
    fn dressed_slices_with_spectator_satisfy_loop_equations() {
        let mut rec = testfix::torus_rec().lock().unwrap();
        let spec = [C::new(0.29, 0.18)];
        for dtot in 0..=1 {
            let r = check_np_loop(&mut rec, &spec, dtot, 1).unwrap();
            assert!(r <= 1e-7, "order {dtot}: residual {r}");
        }
    }
}
