//! Extended n|n kernels as truncated expansion-parameter series: the stored
//! value strips the essential singularity factor exp(hbar^{-1} int y dx),
//! which cancels in every determinantal combination.
//!
//! Order zero is the closed theta-shift form; positive orders exponentiate
//! finite sums over "core" graphs (every vertex of positive degree) whose
//! integral slots all receive the same segment-sum functional, with the
//! log-theta factors Taylor-shifted to w + a by the resummed degree-zero
//! chains (a is the total displacement sum).

use num_complex::Complex64 as C;

use crate::curve::BasisIdx;
use crate::error::{Error, Result};
use crate::toprec::{set_partitions, OmegaGN};

use super::assemble::NpContext;
use super::graph::{enumerate_graphs, Variant};

/// Truncated power series in the expansion parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct HSeries(pub Vec<C>);

impl HSeries {
    pub fn zero(d: usize) -> Self {
        HSeries(vec![C::new(0.0, 0.0); d + 1])
    }

    pub fn constant(d: usize, c: C) -> Self {
        let mut s = Self::zero(d);
        s.0[0] = c;
        s
    }

    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    pub fn add(&self, o: &HSeries) -> HSeries {
        let n = self.0.len().min(o.0.len());
        HSeries((0..n).map(|i| self.0[i] + o.0[i]).collect())
    }

    pub fn sub(&self, o: &HSeries) -> HSeries {
        let n = self.0.len().min(o.0.len());
        HSeries((0..n).map(|i| self.0[i] - o.0[i]).collect())
    }

    pub fn scale(&self, c: C) -> HSeries {
        HSeries(self.0.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &HSeries) -> HSeries {
        let n = self.0.len().min(o.0.len());
        let mut out = vec![C::new(0.0, 0.0); n];
        for i in 0..n {
            for j in 0..n - i {
                out[i + j] += self.0[i] * o.0[j];
            }
        }
        HSeries(out)
    }

    /// exp of a series with vanishing constant term.
    pub fn exp(&self) -> HSeries {
        let d = self.order();
        let mut out = HSeries::constant(d, C::new(1.0, 0.0));
        let mut term = HSeries::constant(d, C::new(1.0, 0.0));
        for k in 1..=d {
            term = term.mul(self).scale(C::new(1.0 / k as f64, 0.0));
            out = out.add(&term);
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

/// Which inclusion-exclusion side of the extended kernel to produce.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Disconnected,
    Connected,
}

/// Local coordinate for the short-distance factor of the one-point kernel.
pub enum Chi<'f> {
    /// The curve's own prime form.
    Canonical,
    /// chi(z) and chi'(z); genus-0 use (any coordinate regular near the
    /// evaluation points).
    Custom(&'f dyn Fn(C) -> (C, C)),
}

fn prime_ratio_prefactor(ctx: &NpContext, zp: &[C], zm: &[C]) -> Result<C> {
    let n = zp.len();
    let mut pref = C::new(1.0, 0.0);
    for k in 0..n {
        for l in k + 1..n {
            pref *= ctx.curve.prime_form(zp[k], zp[l])? * ctx.curve.prime_form(zm[k], zm[l])?
                / (ctx.curve.prime_form(zp[k], zm[l])? * ctx.curve.prime_form(zm[k], zp[l])?);
        }
    }
    for i in 0..n {
        pref /= ctx.curve.prime_form(zp[i], zm[i])?;
    }
    Ok(pref)
}

/// Derivatives of log theta at the shifted argument w + a, orders 0..=jmax.
fn shifted_log_derivs(ctx: &NpContext, a: C, jmax: usize) -> Result<Vec<C>> {
    let th = ctx
        .theta()
        .ok_or_else(|| Error::Config("theta factors need a genus-1 curve".into()))?;
    let w = th.w[0];
    let jet = th.log_theta_jet(w + a, jmax, 31)?;
    Ok((0..=jmax)
        .map(|j| jet.coeff_or_zero(j as i32) * crate::curve::factorial(j))
        .collect())
}

/// One flattened contribution to the core-graph exponent: a scalar weight
/// (graph symmetry, slot factorials, second-cycle pairings), the integral
/// slots, and the log-theta derivative orders of the theta vertices.
pub(crate) struct CoreTerm {
    pub coeff: C,
    pub slots: Vec<BasisIdx>,
    pub thetas: Vec<usize>,
    /// All integral slots of this contribution come from resummed
    /// degree-zero chains (so the chain count starts at one, not zero).
    pub chains_only: bool,
}

/// Flattened degree-d core-graph contributions to the exponent, merged by
/// slot multiset (every slot receives the same segment functional, so only
/// the multiset matters).
pub(crate) fn core_terms(ctx: &NpContext, d: usize) -> Result<Vec<CoreTerm>> {
    let mut merged: std::collections::BTreeMap<(Vec<BasisIdx>, Vec<usize>, bool), C> =
        std::collections::BTreeMap::new();
    for graph in enumerate_graphs(Variant::Extended, 1, d) {
        let m_total: usize = graph.verts.iter().map(|v| v.m()).sum();
        let degs = graph.theta_degrees();
        if m_total == 0 && degs.is_empty() {
            continue;
        }
        if ctx.curve.genus() == 0 && !graph.thetas.is_empty() {
            continue;
        }
        let mut base = C::new(1.0, 0.0) / C::new(graph.aut_order as f64, 0.0);
        for v in &graph.verts {
            base /= crate::curve::factorial(v.m());
        }
        // Cartesian product over per-vertex contraction terms.
        let mut partial: Vec<(C, Vec<BasisIdx>)> = vec![(base, Vec::new())];
        for v in &graph.verts {
            let tensor = ctx
                .table
                .get(&(v.g, v.m() + v.k))
                .ok_or(Error::MissingTable(v.g, v.m() + v.k))?;
            let mut vterms: Vec<(C, Vec<BasisIdx>)> = Vec::new();
            for (key, c) in tensor.terms() {
                for arr in OmegaGN::arrangements(key) {
                    let mut s = *c;
                    for idx in arr.iter().take(v.k) {
                        s *= ctx.phi(*idx);
                    }
                    if s.norm() == 0.0 {
                        continue;
                    }
                    vterms.push((s, arr[v.k..].to_vec()));
                }
            }
            let mut next = Vec::new();
            for (pc, pslots) in &partial {
                for (vc, vslots) in &vterms {
                    let mut slots = pslots.clone();
                    slots.extend_from_slice(vslots);
                    next.push((pc * vc, slots));
                }
            }
            partial = next;
        }
        for (coeff, mut slots) in partial {
            slots.sort();
            *merged
                .entry((slots, degs.clone(), m_total == 0))
                .or_insert(C::new(0.0, 0.0)) += coeff;
        }
    }
    Ok(merged
        .into_iter()
        .map(|((slots, thetas, chains_only), coeff)| CoreTerm { coeff, slots, thetas, chains_only })
        .collect())
}

/// The degree-d core-graph sum: all integral slots receive `seg` (the
/// segment-sum functional on basis primitives) and log-theta factors take
/// the shifted values `lshift`.
fn core_sum(ctx: &NpContext, d: usize, seg: &dyn Fn(BasisIdx) -> Result<C>, lshift: &[C]) -> Result<C> {
    let mut total = C::new(0.0, 0.0);
    for term in core_terms(ctx, d)? {
        let mut w = term.coeff;
        for idx in &term.slots {
            w *= seg(*idx)?;
        }
        let mut tfact = C::new(1.0, 0.0);
        for &dt in &term.thetas {
            let l = *lshift.get(dt).ok_or(Error::DerivCache(dt, lshift.len()))?;
            tfact *= l;
        }
        if term.chains_only {
            tfact -= ctx.theta_value(&term.thetas)?;
        }
        total += w * tfact;
    }
    Ok(total)
}

/// Disconnected extended kernel (stripped) as a series through order d.
pub fn omega_bullet(ctx: &NpContext, zp: &[C], zm: &[C], d: usize) -> Result<HSeries> {
    assert_eq!(zp.len(), zm.len());
    let a: C = zp.iter().sum::<C>() - zm.iter().sum::<C>();
    let pref = prime_ratio_prefactor(ctx, zp, zm)?;
    let (kr, lshift) = if ctx.curve.genus() == 1 {
        let th = ctx.theta().unwrap();
        let w = th.w[0];
        let num = th.theta_star_deriv(&[0], &[w + a])?;
        let den = th.theta_star_deriv(&[0], &[w])?;
        if den.norm() < 1e-200 {
            return Err(Error::ThetaZero);
        }
        (num / den, shifted_log_derivs(ctx, a, 2 * d + 4)?)
    } else {
        (C::new(1.0, 0.0), Vec::new())
    };
    let seg = |idx: BasisIdx| -> Result<C> {
        let mut s = C::new(0.0, 0.0);
        for i in 0..zp.len() {
            s += ctx.basis.primitive_val(ctx.curve, idx, zp[i])?
                - ctx.basis.primitive_val(ctx.curve, idx, zm[i])?;
        }
        Ok(s)
    };
    let mut t = HSeries::zero(d);
    for dp in 1..=d {
        t.0[dp] = core_sum(ctx, dp, &seg, &lshift)?;
    }
    Ok(t.exp().scale(pref * kr))
}

/// Extended kernel of the requested kind (stripped), through order d.
pub fn np_extended(
    ctx: &NpContext,
    zp: &[C],
    zm: &[C],
    d: usize,
    kind: Kind,
) -> Result<HSeries> {
    match kind {
        Kind::Disconnected => omega_bullet(ctx, zp, zm, d),
        Kind::Connected => {
            let n = zp.len();
            let mut total = HSeries::zero(d);
            for partition in set_partitions(n) {
                let ell = partition.len();
                let mut prod = HSeries::constant(d, C::new(1.0, 0.0));
                for block in &partition {
                    let bp: Vec<C> = block.iter().map(|&i| zp[i]).collect();
                    let bm: Vec<C> = block.iter().map(|&i| zm[i]).collect();
                    prod = prod.mul(&omega_bullet(ctx, &bp, &bm, d)?);
                }
                let sign = if ell % 2 == 1 { 1.0 } else { -1.0 };
                total = total.add(&prod.scale(C::new(sign * crate::curve::factorial(ell - 1), 0.0)));
            }
            Ok(total)
        }
    }
}

/// One-point kernel (stripped) with an explicit short-distance coordinate;
/// the remaining factors are coordinate-free.
pub fn omega1_np(ctx: &NpContext, zp: C, zm: C, d: usize, chi: Chi) -> Result<HSeries> {
    match chi {
        Chi::Canonical => omega_bullet(ctx, &[zp], &[zm], d),
        Chi::Custom(f) => {
            if ctx.curve.genus() != 0 {
                return Err(Error::Config(
                    "custom short-distance coordinates are supported at genus 0".into(),
                ));
            }
            let base = omega_bullet(ctx, &[zp], &[zm], d)?;
            let e = ctx.curve.prime_form(zp, zm)?;
            let (cp, dp) = f(zp);
            let (cm, dm) = f(zm);
            if (cp - cm).norm() < 1e-14 {
                return Err(Error::CoincidentPoints("one-point kernel"));
            }
            // The chi-dependent prefactor pairs with the exponentiated
            // chi-regularized Bergman double integral over the segment
            // square. The inner variable integrates in closed form; the
            // outer one by quadrature. Together the two chi-dependent
            // factors cancel the change of prefactor exactly.
            let inner = |x1: C| -> Result<C> {
                let (c1, d1) = f(x1);
                let bpart = (x1 - zp).inv() - (x1 - zm).inv();
                let cpart = d1 * ((c1 - cp).inv() - (c1 - cm).inv());
                Ok(bpart - cpart)
            };
            let fint = crate::curve::quad::integrate_segment(inner, zm, zp, 1e-12)?;
            let pref = dp.sqrt() * dm.sqrt() / (cp - cm);
            Ok(base.scale(e * pref * (fint * C::new(0.5, 0.0)).exp()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::np::assemble::{assemble_np, NpContext};
    use crate::testfix;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn order_zero_matches_theta_shift_closed_form() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let zp = [c(0.21, 0.13), c(-0.11, 0.29)];
        let zm = [c(0.05, -0.17), c(0.33, 0.41)];
        let s = omega_bullet(&ctx, &zp, &zm, 0).unwrap();
        // Independent direct evaluation of the closed form.
        let th = ctx.theta().unwrap();
        let w = th.w[0];
        let a: C = zp.iter().sum::<C>() - zm.iter().sum::<C>();
        let mut direct = th.theta_star_deriv(&[0], &[w + a]).unwrap()
            / th.theta_star_deriv(&[0], &[w]).unwrap();
        for k in 0..2 {
            for l in k + 1..2 {
                direct *= ctx.curve.prime_form(zp[k], zp[l]).unwrap()
                    * ctx.curve.prime_form(zm[k], zm[l]).unwrap()
                    / (ctx.curve.prime_form(zp[k], zm[l]).unwrap()
                        * ctx.curve.prime_form(zm[k], zp[l]).unwrap());
            }
        }
        for i in 0..2 {
            direct /= ctx.curve.prime_form(zp[i], zm[i]).unwrap();
        }
        assert!((s.0[0] - direct).norm() <= 1e-8 * direct.norm());
    }

    #[test]
    fn one_point_kernel_order_zero_is_szego() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let (zp, zm) = (c(0.27, 0.08), c(-0.12, 0.31));
        let s = omega1_np(&ctx, zp, zm, 1, Chi::Canonical).unwrap();
        let sz = ctx.theta().unwrap().szego(zp, zm).unwrap();
        assert!((s.0[0] - sz).norm() <= 1e-9 * sz.norm(), "{} vs {}", s.0[0], sz);
    }

    #[test]
    fn chi_choice_does_not_change_genus_zero_kernel() {
        let rec = testfix::airy_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let (zp, zm) = (c(0.8, 0.1), c(0.35, -0.2));
        let a = omega1_np(&ctx, zp, zm, 3, Chi::Canonical).unwrap();
        let chi = |z: C| (z + c(0.3, 0.0) * z * z, c(1.0, 0.0) + c(0.6, 0.0) * z);
        let b = omega1_np(&ctx, zp, zm, 3, Chi::Custom(&chi)).unwrap();
        for k in 0..=3 {
            let scale = a.0[k].norm().max(a.max_abs() * 1e-3).max(1e-12);
            assert!((a.0[k] - b.0[k]).norm() <= 1e-9 * scale, "order {k}");
        }
    }

    #[test]
    fn connected_two_point_diagonal_limit_recovers_differential() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let z = [c(0.22, 0.12), c(-0.31, 0.27)];
        let eps = 1e-5;
        let zp = [z[0] + c(eps, 0.0), z[1] + c(0.0, eps)];
        let s = np_extended(&ctx, &zp, &z, 1, Kind::Connected).unwrap();
        // The 1/E poles against the collapsing displacements turn the
        // half-differential kernel into an honest differential coefficient,
        // so the diagonal limit is the connected differential itself.
        for d in 0..=1 {
            let lhs = s.0[d];
            let omega = assemble_np(&ctx, 2, d).unwrap();
            let rhs = omega.eval(&ctx, &z).unwrap();
            assert!(
                (lhs - rhs).norm() <= 2e-4 * rhs.norm().max(1e-6),
                "d={d}: {lhs} vs {rhs}"
            );
        }
    }
}
