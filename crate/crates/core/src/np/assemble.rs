//! Graph weights and the assembled non-perturbative differentials: each
//! expansion order is a finite sum of terms scalar x (log-theta derivative
//! factors) x (one pole-basis differential per variable slot).

use std::collections::BTreeMap;

use num_complex::Complex64 as C;

use crate::curve::{BasisIdx, KernelBasis, SpectralCurve};
use crate::error::{Error, Result};
use crate::series::Jet;
use crate::theta::ThetaContext;
use crate::toprec::OmegaGN;

use super::graph::{enumerate_graphs, Graph3L, VSpec, Variant};

fn i2pi() -> C {
    C::new(0.0, 2.0 * std::f64::consts::PI)
}

/// Immutable assembly inputs: curve geometry, pole basis, recursion table.
pub struct NpContext<'a> {
    pub curve: &'a SpectralCurve,
    pub basis: KernelBasis,
    pub table: &'a BTreeMap<(usize, usize), OmegaGN>,
}

impl<'a> NpContext<'a> {
    pub fn new(
        curve: &'a SpectralCurve,
        k_max: usize,
        table: &'a BTreeMap<(usize, usize), OmegaGN>,
    ) -> Self {
        NpContext { curve, basis: KernelBasis::new(curve, k_max), table }
    }

    pub fn theta(&self) -> Option<&ThetaContext> {
        self.curve.ell().map(|e| &e.theta)
    }

    /// Cycle-pairing scalar of a basis differential: (1/2 pi i) of the
    /// second-cycle period.
    pub fn phi(&self, idx: BasisIdx) -> C {
        self.basis.b_period(idx, self.curve.tau()) / i2pi()
    }

    fn omega(&self, g: usize, m: usize) -> Result<&OmegaGN> {
        self.table.get(&(g, m)).ok_or(Error::MissingTable(g, m))
    }

    /// Product of cached log-theta derivatives for the given degrees.
    pub fn theta_value(&self, degs: &[usize]) -> Result<C> {
        if degs.is_empty() {
            return Ok(C::new(1.0, 0.0));
        }
        let ctx = self
            .theta()
            .ok_or_else(|| Error::Config("theta factors need a genus-1 curve".into()))?;
        let mut p = C::new(1.0, 0.0);
        for &m in degs {
            p *= ctx.log_deriv(m)?;
        }
        Ok(p)
    }
}

/// One variable slot of an assembled term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Slot {
    /// A pole-basis differential (or the holomorphic one) in this variable.
    Basis(BasisIdx),
    /// Half of a two-point-kernel pair; the partner slot index is stored on
    /// both sides and the pair is evaluated once, from the smaller index.
    Berg(usize),
}

#[derive(Clone, Debug)]
pub struct NPTerm {
    pub coeff: C,
    /// Sorted log-theta derivative degrees, one entry per theta vertex.
    pub theta: Vec<usize>,
    pub slots: Vec<Slot>,
}

/// One expansion order of a non-perturbative n-differential.
#[derive(Clone, Debug)]
pub struct NPDifferential {
    pub n: usize,
    pub d: usize,
    pub terms: Vec<NPTerm>,
}

impl NPDifferential {
    pub fn consolidate(mut self) -> Self {
        let mut map: BTreeMap<(Vec<usize>, Vec<Slot>), C> = BTreeMap::new();
        for t in self.terms.drain(..) {
            *map.entry((t.theta, t.slots)).or_insert(C::new(0.0, 0.0)) += t.coeff;
        }
        let scale = map.values().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
        self.terms = map
            .into_iter()
            .filter(|(_, c)| c.norm() > 1e-13 * scale)
            .map(|((theta, slots), coeff)| NPTerm { coeff, theta, slots })
            .collect();
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.norm()).fold(0.0, f64::max)
    }

    /// Pointwise value as the coefficient against the product of coordinate
    /// differentials dz_1 ... dz_n.
    pub fn eval(&self, ctx: &NpContext, pts: &[C]) -> Result<C> {
        assert_eq!(pts.len(), self.n);
        let mut total = C::new(0.0, 0.0);
        for t in &self.terms {
            let mut v = t.coeff * ctx.theta_value(&t.theta)?;
            for (i, slot) in t.slots.iter().enumerate() {
                match slot {
                    Slot::Basis(idx) => v *= ctx.basis.eval(ctx.curve, *idx, pts[i])?,
                    Slot::Berg(j) => {
                        if i < *j {
                            v *= ctx.curve.bergman_eval(pts[i], pts[*j])?;
                        }
                    }
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Jet in slot `slot` at z0 with the remaining slots held at `rest`
    /// (in increasing slot order).
    pub fn jet_in_slot(
        &self,
        ctx: &NpContext,
        slot: usize,
        z0: C,
        rest: &[C],
        order: usize,
        tag: u64,
    ) -> Result<Jet> {
        assert_eq!(rest.len() + 1, self.n);
        let pt = |i: usize| -> C {
            if i < slot {
                rest[i]
            } else {
                rest[i - 1]
            }
        };
        let mut total = Jet::zero(tag).truncated(order as i32);
        for t in &self.terms {
            let mut scalar = t.coeff * ctx.theta_value(&t.theta)?;
            let mut jet: Option<Jet> = None;
            for (i, s) in t.slots.iter().enumerate() {
                match s {
                    Slot::Basis(idx) => {
                        if i == slot {
                            jet = Some(ctx.basis.jet(ctx.curve, *idx, z0, order, tag)?);
                        } else {
                            scalar *= ctx.basis.eval(ctx.curve, *idx, pt(i))?;
                        }
                    }
                    Slot::Berg(j) => {
                        if i == slot {
                            jet = Some(ctx.curve.bergman_jet(z0, pt(*j), order, tag)?);
                        } else if *j != slot && i < *j {
                            scalar *= ctx.curve.bergman_eval(pt(i), pt(*j))?;
                        }
                    }
                }
            }
            let jet = jet.ok_or_else(|| Error::Other("empty slot".into()))?;
            total = total.add(&jet.scale(scalar))?;
        }
        Ok(total)
    }

    /// Exact first-cycle period in slot 0 with the remaining slots held at
    /// `rest`: only the holomorphic basis element survives (unit period).
    pub fn a_period_slot0(&self, ctx: &NpContext, rest: &[C]) -> Result<C> {
        assert_eq!(rest.len() + 1, self.n);
        let mut total = C::new(0.0, 0.0);
        for t in &self.terms {
            if t.slots[0] != Slot::Basis(BasisIdx::Eta) {
                continue;
            }
            let mut v = t.coeff * ctx.theta_value(&t.theta)?;
            for (i, s) in t.slots.iter().enumerate().skip(1) {
                match s {
                    Slot::Basis(idx) => v *= ctx.basis.eval(ctx.curve, *idx, rest[i - 1])?,
                    Slot::Berg(j) => {
                        if i < *j {
                            v *= ctx.curve.bergman_eval(rest[i - 1], rest[*j - 1])?;
                        }
                    }
                }
            }
            total += v;
        }
        Ok(total)
    }

    /// Derivative in the theta argument w, by the product rule on the
    /// log-theta factors (all other data is w-independent).
    pub fn dw(&self) -> NPDifferential {
        let mut terms = Vec::new();
        for t in &self.terms {
            for pos in 0..t.theta.len() {
                let mut theta = t.theta.clone();
                theta[pos] += 1;
                theta.sort();
                terms.push(NPTerm { coeff: t.coeff, theta, slots: t.slots.clone() });
            }
        }
        NPDifferential { n: self.n, d: self.d, terms }.consolidate()
    }
}

/// Contributions of a middle vertex: scalar factor and the basis index
/// assigned to each of its leaves (in the order of `v.leaves`).
fn vertex_terms(ctx: &NpContext, v: &VSpec) -> Result<Vec<(C, Vec<BasisIdx>)>> {
    let (g, m, k) = (v.g, v.m(), v.k);
    if 2 * g as i64 - 2 + (m + k) as i64 > 0 {
        let tensor = ctx.omega(g, m + k)?;
        let mut out: BTreeMap<Vec<BasisIdx>, C> = BTreeMap::new();
        for (key, c) in tensor.terms() {
            for arr in OmegaGN::arrangements(key) {
                let mut s = *c;
                for idx in arr.iter().take(k) {
                    s *= ctx.phi(*idx);
                }
                if s.norm() == 0.0 {
                    continue;
                }
                *out.entry(arr[k..].to_vec()).or_insert(C::new(0.0, 0.0)) += s;
            }
        }
        return Ok(out.into_iter().map(|(key, c)| (c, key)).collect());
    }
    match (g, m, k) {
        // Two-point kernel with one leg period-paired: the holomorphic
        // differential remains on the leaf.
        (0, 1, 1) => Ok(vec![(C::new(1.0, 0.0), vec![BasisIdx::Eta])]),
        // Bare two-point kernel between two leaves; handled by the caller
        // via a paired slot, signalled by an empty basis list.
        (0, 2, 0) => Ok(vec![(C::new(1.0, 0.0), Vec::new())]),
        _ => Err(Error::Config(format!("unsupported degree-0 vertex ({g},{m},{k})"))),
    }
}

/// The weight of one graph as a list of assembled terms.
pub fn graph_weight(ctx: &NpContext, graph: &Graph3L) -> Result<Vec<NPTerm>> {
    let theta: Vec<usize> = graph.theta_degrees();
    let mut partial: Vec<(C, Vec<(usize, Slot)>)> = vec![(
        C::new(1.0, 0.0) / C::new(graph.aut_order as f64, 0.0),
        Vec::new(),
    )];
    for v in &graph.verts {
        let vt = vertex_terms(ctx, v)?;
        let mut next = Vec::new();
        for (c0, slots0) in &partial {
            for (c, leaves_idx) in &vt {
                let mut slots = slots0.clone();
                if v.g == 0 && v.m() == 2 && v.k == 0 && leaves_idx.is_empty() {
                    slots.push((v.leaves[0], Slot::Berg(v.leaves[1])));
                    slots.push((v.leaves[1], Slot::Berg(v.leaves[0])));
                } else {
                    for (leaf, idx) in v.leaves.iter().zip(leaves_idx) {
                        slots.push((*leaf, Slot::Basis(*idx)));
                    }
                }
                next.push((*c0 * *c, slots));
            }
        }
        partial = next;
    }
    let mut out = Vec::new();
    for (coeff, mut slots) in partial {
        slots.sort_by_key(|&(leaf, _)| leaf);
        debug_assert_eq!(slots.len(), graph.n);
        out.push(NPTerm {
            coeff,
            theta: theta.clone(),
            slots: slots.into_iter().map(|(_, s)| s).collect(),
        });
    }
    Ok(out)
}

/// The leading-order differential: holomorphic slots against an iterated
/// log-theta derivative, plus the two-point kernel at n = 2.
pub fn krichever_omega(ctx: &NpContext, n: usize) -> Result<NPDifferential> {
    let mut terms = Vec::new();
    if ctx.curve.genus() == 1 {
        terms.push(NPTerm {
            coeff: C::new(1.0, 0.0),
            theta: vec![n],
            slots: vec![Slot::Basis(BasisIdx::Eta); n],
        });
    }
    if n == 2 {
        terms.push(NPTerm {
            coeff: C::new(1.0, 0.0),
            theta: Vec::new(),
            slots: vec![Slot::Berg(1), Slot::Berg(0)],
        });
    }
    Ok(NPDifferential { n, d: 0, terms }.consolidate())
}

/// The order-d non-perturbative n-differential, by summation over graphs.
pub fn assemble_np(ctx: &NpContext, n: usize, d: usize) -> Result<NPDifferential> {
    let genus = ctx.curve.genus();
    let mut terms = Vec::new();
    for graph in enumerate_graphs(Variant::Omega, n, d) {
        if genus == 0 && !graph.thetas.is_empty() {
            continue;
        }
        terms.extend(graph_weight(ctx, &graph)?);
    }
    Ok(NPDifferential { n, d, terms }.consolidate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{Cycle, PeriodData};
    use crate::testfix;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    #[test]
    fn airy_assembly_is_perturbative() {
        let rec = testfix::airy_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        // Order 2g - 2 + n slices coincide with the recursion table entries.
        for (g, n) in [(0usize, 3usize), (1, 1), (1, 2), (0, 4)] {
            let d = (2 * g as i64 - 2 + n as i64) as usize;
            let np = assemble_np(&ctx, n, d).unwrap();
            let tensor = rec.table.get(&(g, n)).unwrap();
            let pts: Vec<C> = (0..n).map(|i| c(0.31 + 0.13 * i as f64, 0.4 - 0.07 * i as f64)).collect();
            let a = np.eval(&ctx, &pts).unwrap();
            let b = tensor.eval(rec.curve, &ctx.basis, &pts).unwrap();
            assert!((a - b).norm() <= 1e-10 * b.norm().max(1e-6), "({g},{n}): {a} vs {b}");
        }
        // Off-grading orders vanish: d = 2 holds no arity-2 contribution at
        // genus 0 parity (2g - 2 + 2 = 2 needs g = 1, which exists), use n=3
        // d=2 instead (2g - 2 + 3 = 2 has no integer g).
        let np = assemble_np(&ctx, 3, 2).unwrap();
        assert!(np.terms.is_empty());
    }

    #[test]
    fn torus_leading_order_matches_krichever_term_lists() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        for n in 1..=3 {
            let a = assemble_np(&ctx, n, 0).unwrap();
            let b = krichever_omega(&ctx, n).unwrap();
            let enc = |d: &NPDifferential| -> Vec<(Vec<usize>, Vec<Slot>, C)> {
                d.terms.iter().map(|t| (t.theta.clone(), t.slots.clone(), t.coeff)).collect()
            };
            assert_eq!(enc(&a).len(), enc(&b).len(), "n={n}");
            for (x, y) in enc(&a).iter().zip(enc(&b).iter()) {
                assert_eq!(x.0, y.0);
                assert_eq!(x.1, y.1);
                assert!((x.2 - y.2).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn torus_order_one_is_symmetric() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let np = assemble_np(&ctx, 2, 1).unwrap();
        assert!(!np.terms.is_empty());
        let p = [c(0.21, 0.33), c(-0.17, 0.52)];
        let q = [p[1], p[0]];
        let a = np.eval(&ctx, &p).unwrap();
        let b = np.eval(&ctx, &q).unwrap();
        assert!((a - b).norm() <= 1e-10 * a.norm().max(1e-12));
    }

    #[test]
    fn second_cycle_pairing_matches_quadrature() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        // omega^{(1)}_1 period: exact pairing vs. contour quadrature.
        let tensor = rec.table.get(&(1, 1)).unwrap();
        let mut exact = c(0.0, 0.0);
        for (key, coeff) in tensor.terms() {
            exact += *coeff * ctx.phi(key[0]);
        }
        let periods = PeriodData::new(rec.curve.tau().unwrap());
        let quad = periods
            .cycle_integral(Cycle::B, |z| tensor.eval(rec.curve, &ctx.basis, &[z]))
            .unwrap()
            / i2pi();
        assert!((exact - quad).norm() <= 1e-9 * exact.norm().max(1e-9), "{exact} vs {quad}");
    }

    #[test]
    fn order_one_has_poles_only_at_key_points() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let np = assemble_np(&ctx, 1, 1).unwrap();
        let probe = c(0.23, 0.41);
        let jet = np.jet_in_slot(&ctx, 0, probe, &[], 4, 991).unwrap();
        for k in jet.lo()..0 {
            assert!(jet.coeff_or_zero(k).norm() < 1e-12);
        }
    }
}
