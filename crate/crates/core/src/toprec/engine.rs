//! Recursion engine: builds the table of multi-differentials level by level
//! (level = 2g - 2 + n) from residues of dressed disc fields at key points.
//!
//! Grading convention: series keys are (h, [u, 0]) where h counts only the
//! weights 2g - 2 + m of the differentials entering a term, while u counts
//! the auxiliary Laplace variable (each power of which carries one implicit
//! power of the expansion parameter).  The genuine expansion order of a term
//! is h + u.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;

use crate::curve::{factorial, BasisIdx, KernelBasis, SpectralCurve};
use crate::error::{Error, Result};
use crate::series::{s_operator, BiJet, Jet, MSeries};

use super::tensor::{set_partitions, OmegaGN};

/// Truncation and tolerance parameters for the recursion.
#[derive(Clone, Debug)]
pub struct TrParams {
    /// Maximum level 2g - 2 + n computed.
    pub d_max: usize,
    /// Degree cap in the auxiliary variable u.
    pub u_cap: i32,
    /// Highest derivative-kernel index kept in the pole basis.
    pub k_max: usize,
    /// Jet window size at key points.
    pub jet_order: usize,
    /// Relative tolerance for the symmetry cross-check of each new tensor.
    pub sym_tol: f64,
}

impl TrParams {
    pub fn with_level(d_max: usize) -> Self {
        TrParams {
            d_max,
            u_cap: 2 * d_max as i32 + 2,
            k_max: 2 * d_max + 4,
            jet_order: 4 * d_max + 8,
            sym_tol: 1e-9,
        }
    }

    /// Working jet order: products of Laurent jets with poles up to order
    /// k_max + 3 consume window at both ends, so intermediates carry extra
    /// exact coefficients beyond the requested window.
    pub fn work_order(&self) -> usize {
        self.jet_order + (self.d_max + 2) * (self.k_max + 3) + self.u_cap as usize + 10
    }
}

/// Spectator slot assignment: (label, basis index), sorted by label.
pub type SpecKey = Vec<(usize, BasisIdx)>;

/// A graded field at a key point carrying free spectator slots: map from
/// spectator assignments to (h, u)-graded jets in the local coordinate.
#[derive(Clone, Debug)]
pub struct WField {
    pub terms: BTreeMap<SpecKey, MSeries<Jet>>,
    pub hcap: i32,
    pub ucap: i32,
}

impl WField {
    pub fn new(hcap: i32, ucap: i32) -> Self {
        WField { terms: BTreeMap::new(), hcap, ucap }
    }

    pub fn scalar(hcap: i32, ucap: i32, ms: MSeries<Jet>) -> Self {
        let mut w = Self::new(hcap, ucap);
        w.accumulate(Vec::new(), ms).expect("fresh field");
        w
    }

    pub fn accumulate(&mut self, key: SpecKey, ms: MSeries<Jet>) -> Result<()> {
        if ms.is_zero() {
            return Ok(());
        }
        match self.terms.remove(&key) {
            Some(prev) => {
                let sum = prev.add(&ms)?;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, ms);
            }
        }
        Ok(())
    }

    pub fn add(&self, o: &WField) -> Result<WField> {
        let mut out = self.clone();
        for (k, v) in &o.terms {
            out.accumulate(k.clone(), v.clone())?;
        }
        Ok(out)
    }

    /// Product; spectator label sets of the factors must be disjoint.
    pub fn mul(&self, o: &WField) -> Result<WField> {
        let mut out = WField::new(self.hcap.min(o.hcap), self.ucap.min(o.ucap));
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                let mut key = ka.clone();
                key.extend(kb.iter().copied());
                key.sort();
                if key.windows(2).any(|w| w[0].0 == w[1].0) {
                    return Err(Error::Other("spectator label collision in product".into()));
                }
                let p = va.mul(vb)?;
                out.accumulate(key, p)?;
            }
        }
        Ok(out)
    }

    /// Rename canonical labels 0..n-1 to the given labels.
    pub fn relabel(&self, labels: &[usize]) -> WField {
        let mut out = WField::new(self.hcap, self.ucap);
        for (k, v) in &self.terms {
            let mut key: SpecKey = k.iter().map(|&(l, b)| (labels[l], b)).collect();
            key.sort();
            out.terms.insert(key, v.clone());
        }
        out
    }

    /// Coefficient series of h^p across all spectator keys.
    pub fn h_slice(&self, p: i32) -> WField {
        let mut out = WField::new(0, self.ucap);
        for (k, v) in &self.terms {
            let s = v.h_slice(p);
            if !s.is_zero() {
                out.terms.insert(k.clone(), s);
            }
        }
        out
    }
}

/// Per-key-point local data.
struct KeyData {
    z: C,
    tag: u64,
    /// dx/dt and dy/dt jets and their inverses.
    xp: Jet,
    xp_inv: Jet,
    yp_inv: Jet,
    /// y(q + t) - y(q).
    y_shift: Jet,
    /// diag[p1][p2] = D1^{2 p1} D2^{2 p2} of the regularized two-point
    /// function B/(dx dx) - 1/(x - x')^2, restricted to the diagonal.
    diag: Vec<Vec<Jet>>,
}

pub struct Recursion<'a> {
    pub curve: &'a SpectralCurve,
    pub basis: KernelBasis,
    pub params: TrParams,
    pub table: BTreeMap<(usize, usize), OmegaGN>,
    keys: Vec<KeyData>,
    s_ops: Vec<f64>,
    /// Canonical disc-field cache per (key point, spectator count).
    t_cache: BTreeMap<(usize, usize), WField>,
}

impl<'a> Recursion<'a> {
    pub fn new(curve: &'a SpectralCurve, params: TrParams) -> Result<Self> {
        curve.validate()?;
        let basis = KernelBasis::new(curve, params.k_max);
        let p_max = ((params.u_cap - 1) / 2).max(0) as usize;
        let mut keys = Vec::new();
        for (i, kp) in curve.key_points.iter().enumerate() {
            keys.push(KeyData::build(curve, kp.z, 7001 + 17 * i as u64, &params, p_max)?);
        }
        Ok(Recursion {
            curve,
            basis,
            params,
            table: BTreeMap::new(),
            keys,
            s_ops: s_operator(2 * p_max + 1),
            t_cache: BTreeMap::new(),
        })
    }

    /// Build all levels up to `d_max`, in order.
    pub fn build(&mut self) -> Result<()> {
        for level in 1..=self.params.d_max {
            for g in 0..=(level + 1) / 2 {
                let n = level as i64 + 2 - 2 * g as i64;
                if n >= 1 {
                    self.tr_step(g, n as usize)?;
                }
            }
        }
        Ok(())
    }

    pub fn omega(&self, g: usize, n: usize) -> Result<&OmegaGN> {
        self.table
            .get(&(g, n))
            .ok_or(Error::MissingTable(g, n))
    }

    fn d_dx(kd: &KeyData, f: &Jet) -> Result<Jet> {
        f.deriv().mul(&kd.xp_inv)
    }

    /// The slot operator: sum over p of S_p u^{2p+1} (d/dx)^{2p} f, at h = 0.
    fn slot_series(&self, kd: &KeyData, f: &Jet) -> Result<MSeries<Jet>> {
        let mut out = MSeries::new(self.params.d_max as i32, self.params.u_cap);
        let mut g = f.clone();
        let mut p = 0usize;
        loop {
            let up = 2 * p as i32 + 1;
            if up > self.params.u_cap {
                break;
            }
            out.accumulate((0, [up, 0]), g.scale(C::new(self.s_ops[2 * p], 0.0)))?;
            g = Self::d_dx(kd, &Self::d_dx(kd, &g)?)?;
            p += 1;
        }
        Ok(out)
    }

    /// Disc field with `n` canonical spectator slots at key point `qi`
    /// (the building block whose products dress the full field).
    fn t_field(&mut self, qi: usize, n: usize) -> Result<WField> {
        if let Some(t) = self.t_cache.get(&(qi, n)) {
            return Ok(t.clone());
        }
        let hcap = self.params.d_max as i32;
        let ucap = self.params.u_cap;
        let ord = self.params.work_order() as i32;
        let kd = &self.keys[qi];
        let tag = kd.tag;
        let p_max = ((ucap - 1) / 2).max(0) as usize;
        let mut t = WField::new(hcap, ucap);

        if n == 0 {
            // u (S - 1) y: pure derivative terms, weight -1.
            let mut ms = MSeries::new(hcap, ucap);
            let mut g = kd.y_shift.clone();
            for p in 1..=p_max {
                g = Self::d_dx(kd, &Self::d_dx(kd, &g)?)?;
                let up = 2 * p as i32 + 1;
                if up > ucap {
                    break;
                }
                ms.accumulate((-1, [up, 0]), g.scale(C::new(self.s_ops[2 * p], 0.0)))?;
            }
            // Two slots on the regularized two-point function (the 1/2! is
            // the k = 2 combinatorial factor).
            for p1 in 0..=p_max {
                for p2 in 0..=p_max {
                    let up = 2 * (p1 + p2) as i32 + 2;
                    if up > ucap {
                        continue;
                    }
                    let s = 0.5 * self.s_ops[2 * p1] * self.s_ops[2 * p2];
                    ms.accumulate((0, [up, 0]), kd.diag[p1][p2].scale(C::new(s, 0.0)))?;
                }
            }
            t.accumulate(Vec::new(), ms)?;
        }

        if n == 1 {
            // One slot on the two-point kernel, spectator on the other leg:
            // the t-expansion of B(q + t, .) has the derivative kernels as
            // coefficients.
            for j in 0..=(self.params.k_max + 4) {
                let f = Jet::monomial(tag, j as i32, C::new(1.0 / factorial(j), 0.0))
                    .mul(&kd.xp_inv)?
                    .truncated(ord);
                let ms = self.slot_series(kd, &f)?;
                t.accumulate(vec![(0, BasisIdx::G { q: qi, k: j })], ms)?;
            }
        }

        // Stable lower differentials with k >= 1 slots and n spectators.
        let entries: Vec<((usize, usize), OmegaGN)> = self
            .table
            .iter()
            .filter(|((_, m), _)| *m > n)
            .map(|(k, v)| (*k, v.clone()))
            .collect();
        let mut slot_cache: BTreeMap<BasisIdx, MSeries<Jet>> = BTreeMap::new();
        for ((g, m), tensor) in entries {
            let k = m - n;
            let w = (2 * g as i64 - 2 + m as i64) as i32;
            // each slot costs at least u^1 (hence one expansion order)
            if w + k as i32 > hcap + ucap || k as i32 > ucap {
                continue;
            }
            let pref = C::new(1.0 / factorial(k), 0.0);
            for (key, c) in tensor.terms() {
                for arr in OmegaGN::arrangements(key) {
                    let mut ms =
                        MSeries::term(hcap, ucap, (w, [0, 0]), Jet::one(tag).truncated(ord));
                    for idx in arr.iter().take(k) {
                        if !slot_cache.contains_key(idx) {
                            let bj = self
                                .basis
                                .jet(self.curve, *idx, kd.z, self.params.work_order(), tag)?;
                            let f = bj.mul(&self.keys[qi].xp_inv)?;
                            let s = self.slot_series(&self.keys[qi], &f)?;
                            slot_cache.insert(*idx, s);
                        }
                        ms = ms.mul(&slot_cache[idx])?;
                        if ms.is_zero() {
                            break;
                        }
                    }
                    if ms.is_zero() {
                        continue;
                    }
                    let spec: SpecKey = arr[k..]
                        .iter()
                        .enumerate()
                        .map(|(l, idx)| (l, *idx))
                        .collect();
                    t.accumulate(spec, ms.scale(*c * pref))?;
                }
            }
        }
        self.t_cache.insert((qi, n), t.clone());
        Ok(t)
    }

    /// The full dressed field with `n` spectators at key point `qi`:
    /// prefactor dx/u, exponential of the 0-slot field, and the partition
    /// sum of spectator blocks.
    pub fn w_field(&mut self, qi: usize, n: usize) -> Result<WField> {
        let hcap = self.params.d_max as i32;
        let ucap = self.params.u_cap;
        let kd = &self.keys[qi];
        let tag = kd.tag;
        let pref = MSeries::term(hcap, ucap, (0, [-1, 0]), kd.xp.clone());
        let t0 = self.t_field(qi, 0)?;
        let t0_ms = t0.terms.get(&Vec::new()).cloned().unwrap_or_else(|| MSeries::new(hcap, ucap));
        let expt0 = t0_ms.exp(Jet::one(tag).truncated(self.params.work_order() as i32))?;
        let mut base = WField::scalar(hcap, ucap, pref.mul(&expt0)?);

        let mut sum = WField::new(hcap, ucap);
        for partition in set_partitions(n) {
            let mut prod: Option<WField> = None;
            for block in &partition {
                let tb = self.t_field(qi, block.len())?.relabel(block);
                prod = Some(match prod {
                    None => tb,
                    Some(p) => p.mul(&tb)?,
                });
            }
            let term = prod.unwrap_or_else(|| {
                WField::scalar(
                    hcap,
                    ucap,
                    MSeries::term(hcap, ucap, (0, [0, 0]), Jet::one(tag)),
                )
            });
            sum = sum.add(&term)?;
        }
        base = base.mul(&sum)?;
        Ok(base)
    }

    /// One step of the recursion: compute the (g, n) tensor from residues of
    /// the dressed field with n - 1 spectators.
    pub fn tr_step(&mut self, g: usize, n: usize) -> Result<()> {
        let level = 2 * g as i64 - 2 + n as i64;
        if level < 1 || n < 1 {
            return Err(Error::Config(format!("invalid recursion target ({g}, {n})")));
        }
        let k_max = self.params.k_max;
        // ordered full key -> value (first slot distinguished)
        let mut ordered: BTreeMap<(BasisIdx, SpecKey), C> = BTreeMap::new();
        let mut scale: f64 = 0.0;
        for qi in 0..self.keys.len() {
            let w = self.w_field(qi, n - 1)?;
            let kd = &self.keys[qi];
            for (spec, ms) in &w.terms {
                // A = -sum_{r>=1} (-1)^r Dy^r of the hbar^{2g-2+n} part of
                // the u^r coefficient; the r-th term sits at weight
                // 2g-2+n-r once the hbar bundled with each u is split off.
                let mut a = Jet::zero(kd.tag).truncated(self.params.work_order() as i32);
                for r in 1..=self.params.u_cap {
                    if let Some(coef) = ms.coeff(&(level as i32 - r, [r, 0])) {
                        let mut jr = coef;
                        for _ in 0..r {
                            jr = jr.mul(&kd.yp_inv)?.deriv();
                        }
                        let sign = if r % 2 == 1 { 1.0 } else { -1.0 };
                        a = a.add(&jr.scale(C::new(sign, 0.0)))?;
                    }
                }
                if a.is_zero() {
                    continue;
                }
                let amax = a.max_abs();
                for k in 0..=(k_max + 2) {
                    let c = a.coeff(-(k as i32) - 2)? / factorial(k + 1);
                    scale = scale.max(c.norm());
                    if k > k_max {
                        if c.norm() > self.params.sym_tol * amax.max(1.0) {
                            return Err(Error::ResidueObstruction(c.norm()));
                        }
                        continue;
                    }
                    if c.norm() > 0.0 {
                        *ordered
                            .entry((BasisIdx::G { q: qi, k }, spec.clone()))
                            .or_insert(C::new(0.0, 0.0)) += c;
                    }
                }
            }
        }
        // Consolidate the distinguished-slot values into a symmetric tensor,
        // verifying that the distinguished slot is interchangeable.
        let mut groups: BTreeMap<Vec<BasisIdx>, Vec<C>> = BTreeMap::new();
        for ((first, spec), c) in &ordered {
            let mut key: Vec<BasisIdx> = Vec::with_capacity(n);
            key.push(*first);
            key.extend(spec.iter().map(|&(_, b)| b));
            key.sort();
            groups.entry(key).or_default().push(*c);
        }
        let mut tensor = OmegaGN::new(n);
        let tol = self.params.sym_tol * scale.max(1e-6);
        for (key, vals) in groups {
            let mean = vals.iter().sum::<C>() / vals.len() as f64;
            // count how many ordered representatives should have been seen:
            // one per distinct position pattern x (n-1)! label orderings;
            // all seen values must agree.
            for v in &vals {
                if (v - mean).norm() > tol {
                    return Err(Error::Asymmetry((v - mean).norm() / scale.max(1e-300)));
                }
            }
            if mean.norm() > 1e-13 * scale.max(1e-300) {
                if key.iter().any(|b| matches!(b, BasisIdx::G { k, .. } if *k > k_max)) {
                    return Err(Error::ResidueObstruction(mean.norm()));
                }
                tensor.insert(key, mean);
            }
        }
        self.table.insert((g, n), tensor);
        self.t_cache.clear();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{CurveData, KeyPoint, Poly, Rat};

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

    /// Direct residue evaluation of the classical recursion kernel formula
    /// at the single branch point of x = z^2, y = z, with B = dz1 dz2/(z1-z2)^2
    /// and deck transformation z -> -z.  Everything is expanded in jets at 0.
    fn airy_kernel_times(z0: C, bracket: &Jet, tag: u64) -> C {
        // K(z0, z) = dz0 (1/(z0-t) - 1/(z0+t)) / (2 (y - y(-t)) dx)
        //          = dz0 P(t) / (8 t^2 dt)
        let ord = 16;
        let var = Jet::var(tag).truncated(ord);
        let p = Jet::constant(tag, z0)
            .sub(&var)
            .unwrap()
            .inv()
            .unwrap()
            .sub(&Jet::constant(tag, z0).add(&var).unwrap().inv().unwrap())
            .unwrap();
        let k = p.mul(&Jet::monomial(tag, -2, c(0.125, 0.0))).unwrap();
        let integrand = k.mul(bracket).unwrap();
        integrand.coeff(-1).unwrap()
    }

    fn inv_sq_shift(z: C, sign: f64, tag: u64) -> Jet {
        // 1/(t + sign*z)^2 as a Taylor jet at t = 0
        let base = Jet::var(tag)
            .truncated(16)
            .add(&Jet::constant(tag, z * sign))
            .unwrap()
            .inv()
            .unwrap();
        base.mul(&base).unwrap()
    }

    fn oracle_w03(z0: C, z1: C, z2: C) -> C {
        let tag = 3;
        // B(z, zi) = dt dzi/(t - zi)^2;  B(-z, zi) = -dt dzi/(t + zi)^2
        let t1 = inv_sq_shift(z1, -1.0, tag)
            .mul(&inv_sq_shift(z2, 1.0, tag))
            .unwrap();
        let t2 = inv_sq_shift(z2, -1.0, tag)
            .mul(&inv_sq_shift(z1, 1.0, tag))
            .unwrap();
        let bracket = t1.add(&t2).unwrap().scale(c(-1.0, 0.0));
        airy_kernel_times(z0, &bracket, tag)
    }

    fn oracle_w11(z0: C) -> C {
        let tag = 4;
        // B(z, -z) with measure d(-t) = -dt: -1/(4 t^2) dt^2
        let bracket = Jet::monomial(tag, -2, c(-0.25, 0.0));
        airy_kernel_times(z0, &bracket, tag)
    }

    #[test]
    fn airy_level_one_matches_direct_residue_oracle() {
        let curve = airy();
        let mut rec = Recursion::new(&curve, TrParams::with_level(1)).unwrap();
        rec.build().unwrap();

        let pts = [c(0.7, 0.3), c(-0.4, 0.9), c(1.3, -0.5)];
        let got = rec
            .omega(0, 3)
            .unwrap()
            .eval(&curve, &rec.basis, &pts)
            .unwrap();
        let want = oracle_w03(pts[0], pts[1], pts[2]);
        assert!(
            (got - want).norm() <= 1e-10 * want.norm(),
            "w03 mismatch: {got} vs {want}"
        );

        let z0 = c(0.6, -0.8);
        let got1 = rec
            .omega(1, 1)
            .unwrap()
            .eval(&curve, &rec.basis, &[z0])
            .unwrap();
        let want1 = oracle_w11(z0);
        assert!(
            (got1 - want1).norm() <= 1e-10 * want1.norm(),
            "w11 mismatch: {got1} vs {want1}"
        );
        // closed form: -dz/(16 z^4) = -(1/96) G_{0,2}
        let coeff = rec.omega(1, 1).unwrap().coeff(&[BasisIdx::G { q: 0, k: 2 }]);
        assert!((coeff - c(-1.0 / 96.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn table_is_stable_under_truncation_increase() {
        let curve = airy();
        let mut lo = Recursion::new(&curve, TrParams::with_level(1)).unwrap();
        lo.build().unwrap();
        let mut hi = Recursion::new(&curve, TrParams::with_level(3)).unwrap();
        hi.build().unwrap();
        for key in [(0usize, 3usize), (1, 1)] {
            let d = lo.table[&key].distance(&hi.table[&key]);
            assert!(d < 1e-10, "tensor {key:?} drifts with truncation: {d}");
        }
    }

    #[test]
    fn empty_key_set_gives_zero_differentials() {
        let x = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]));
        let y = Rat::from_poly(Poly::new(vec![c(0.0, 0.0), c(1.0, 0.0)]));
        let curve = SpectralCurve {
            data: CurveData::Rational { x, y },
            key_points: vec![],
            dual_key_points: vec![],
        };
        let mut rec = Recursion::new(&curve, TrParams::with_level(2)).unwrap();
        rec.build().unwrap();
        for (_, tensor) in &rec.table {
            assert!(tensor.is_empty());
        }
    }

    #[test]
    fn disc_field_u3_coefficient_matches_symbolic_value() {
        // u^3 coefficient of the 0-slot field: S_1 (d/dx)^2 y = -1/(96 t^3)
        // for x = t^2, y = t, plus no even contribution at that u-power.
        let curve = airy();
        let mut rec = Recursion::new(&curve, TrParams::with_level(2)).unwrap();
        let t0 = rec.t_field(0, 0).unwrap();
        let ms = t0.terms.get(&Vec::new()).unwrap();
        let j = ms.coeff(&(-1, [3, 0])).unwrap();
        let t = c(0.1, 0.0);
        let want = -1.0 / (96.0 * 0.001);
        assert!((j.eval(t) - c(want, 0.0)).norm() < 1e-9 * want.abs());
        // the weight-0 u^3 slot is absent (two-slot term is even in u)
        assert!(ms.coeff(&(0, [3, 0])).is_none());
    }

    #[test]
    fn disc_field_diagonal_u2_coefficient_matches_symbolic_value() {
        // u^2 coefficient of the 0-slot field is the regularized coincident
        // two-point function with two bare slots: (1/2) * 1/(16 t^4) for
        // x = t^2.
        let curve = airy();
        let mut rec = Recursion::new(&curve, TrParams::with_level(2)).unwrap();
        let t0 = rec.t_field(0, 0).unwrap();
        let ms = t0.terms.get(&Vec::new()).unwrap();
        let j = ms.coeff(&(0, [2, 0])).expect("diag term present");
        let t = c(0.1, 0.0);
        let want = 0.5 / (16.0 * 1e-4);
        assert!(
            (j.eval(t) - c(want, 0.0)).norm() < 1e-9 * want.abs(),
            "diag u^2 = {:?}, want {want}",
            j.eval(t)
        );
    }
}

impl KeyData {
    fn build(
        curve: &SpectralCurve,
        z: C,
        tag: u64,
        params: &TrParams,
        p_max: usize,
    ) -> Result<KeyData> {
        let ord = params.work_order();
        let xp = curve.dx_jet(z, ord + 6, tag)?.trimmed(1e-12);
        let yp = curve.dy_jet(z, ord + 6, tag)?.trimmed(1e-12);
        let xp_inv = xp.inv()?;
        let yp_inv = yp.inv()?;
        let y_shift = curve.y_shift_jet(z, ord + 6, tag)?;
        let diag = Self::diagonal_jets(curve, z, &xp, &xp_inv, tag, ord, p_max)?;
        Ok(KeyData { z, tag, xp, xp_inv, yp_inv, y_shift, diag })
    }

    /// Jets on the diagonal of the regularized two-point function.  Work in
    /// coordinates (t, v) with the two points at q + t and q + t + v; the
    /// double pole of both pieces sits at v = 0 and cancels.
    fn diagonal_jets(
        curve: &SpectralCurve,
        z: C,
        xp: &Jet,
        xp_inv: &Jet,
        tag: u64,
        ord: usize,
        p_max: usize,
    ) -> Result<Vec<Vec<Jet>>> {
        let tagv = tag + 251;
        let vord = (2 * p_max + 6) as i32;
        let xp_tv = BiJet::shift_expand(xp, tag, tagv, ord)?; // dx/dt at t + v
        let xpi_t = BiJet::from_jet(xp_inv, tagv, 0, vord);

        // (x(t+v) - x(t))/v, equal to dx/dt at v = 0
        let xs = curve.x_shift_jet(z, ord + 6, tag)?.trimmed(1e-12);
        let xs_tv = BiJet::shift_expand(&xs, tag, tagv, ord)?;
        let xs_t = BiJet::from_jet(&xs, tagv, 0, vord);
        let r = xs_tv.sub(&xs_t)?.div_axis1()?;

        // B/(dx1 dx2) = b(v)/(X'(t) X'(t+v)) with b(v) v^2 a unit
        let b2: BiJet = match curve.genus() {
            0 => BiJet::from_jet(&Jet::one(tagv).truncated(vord + 4), tag, 1, ord as i32),
            _ => {
                // v^2 * B(z, z + v)/(dz dz): even Laurent series starting at 1
                let ell = curve.ell().expect("torus data");
                let bj = ell.bergman_jet(z, z, 2 * p_max + 8, tagv)?;
                let v2 = bj.mul(&Jet::monomial(tagv, 2, C::new(1.0, 0.0)))?;
                BiJet::from_jet(&v2, tag, 1, ord as i32)
            }
        };
        let inv_xp_ratio = xp_tv.mul(&xpi_t)?.inv_unit_axis1()?; // X'(t)/X'(t+v)
        let a1 = b2.mul(&xpi_t)?.mul(&xpi_t)?.mul(&inv_xp_ratio)?;
        let inv_r_ratio = r.mul(&xpi_t)?.inv_unit_axis1()?; // X'(t)/R
        let a2 = inv_r_ratio.mul(&inv_r_ratio)?.mul(&xpi_t)?.mul(&xpi_t)?;
        let phi = a1.sub(&a2)?.div_axis1()?.div_axis1()?;

        // D1 = (1/X'(t)) (d/dt - d/dv), D2 = (1/X'(t+v)) d/dv
        let inv_xptv = xpi_t.mul(&inv_xp_ratio)?;
        let mut rows = Vec::with_capacity(p_max + 1);
        let mut cur = phi;
        for _ in 0..=p_max {
            // fill row: apply D2^2 repeatedly to a copy
            let mut row = Vec::with_capacity(p_max + 1);
            let mut c2 = cur.clone();
            for _ in 0..=p_max {
                row.push(c2.at_axis1_zero(tag).truncated(ord as i32));
                c2 = inv_xptv.mul(&c2.deriv(1))?;
                c2 = inv_xptv.mul(&c2.deriv(1))?;
            }
            rows.push(row);
            // advance D1^2
            let d1 = |b: &BiJet| -> Result<BiJet> {
                let d = b.deriv(0).sub(&b.deriv(1))?;
                xpi_t.mul(&d)
            };
            cur = d1(&d1(&cur)?)?;
        }
        Ok(rows)
    }
}
