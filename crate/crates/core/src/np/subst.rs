//! The coordinate-swap evaluator.  The dressed kernels are expanded along
//! flows that shift one coordinate role by half the per-variable times
//! u_i hbar; the result is a polynomial in the flow times and the expansion
//! parameter whose coefficients are jets at the base points.  Differentials
//! of the swapped role are then recovered by applying powers of the
//! substitution operator -d (1/dy) to the flow-time coefficients.

use std::collections::BTreeMap;

use num_complex::Complex64 as C;

use crate::curve::{factorial, BasisIdx, SpectralCurve};
use crate::error::{Error, Result};
use crate::series::{s_operator, BiJet, Jet};

use super::assemble::NpContext;
use super::extended::core_terms;

/// Monomial label: one flow-time exponent per variable, plus the extra
/// power of the expansion parameter carried by the coefficient.
type Key = (Vec<i32>, i32);

fn one() -> C {
    C::new(1.0, 0.0)
}

fn key_ord(key: &Key) -> i32 {
    key.0.iter().sum::<i32>() + key.1
}

fn key_add(a: &Key, b: &Key) -> Key {
    let v = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
    (v, a.1 + b.1)
}

fn key_sub(a: &Key, b: &Key) -> Key {
    let v = a.0.iter().zip(&b.0).map(|(x, y)| x - y).collect();
    (v, a.1 - b.1)
}

/// Coefficient algebra of the flow polynomials: jets in one variable or
/// bijets in two.
pub(crate) trait SwapCoeff: Clone {
    fn add(&self, o: &Self) -> Result<Self>;
    fn mul(&self, o: &Self) -> Result<Self>;
    fn neg(&self) -> Self;
    fn scale(&self, s: C) -> Self;
    fn inv(&self) -> Result<Self>;
    fn deriv_var(&self, axis: usize) -> Self;
    fn max_abs(&self) -> f64;
    /// Value at the base point(s).
    fn value(&self) -> C;
}

impl SwapCoeff for Jet {
    fn add(&self, o: &Self) -> Result<Self> {
        Jet::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        Jet::mul(self, o)
    }
    fn neg(&self) -> Self {
        Jet::neg(self)
    }
    fn scale(&self, s: C) -> Self {
        Jet::scale(self, s)
    }
    fn inv(&self) -> Result<Self> {
        self.trimmed(1e-13).inv()
    }
    fn deriv_var(&self, _axis: usize) -> Self {
        self.deriv()
    }
    fn max_abs(&self) -> f64 {
        Jet::max_abs(self)
    }
    fn value(&self) -> C {
        self.coeff_or_zero(0)
    }
}

impl SwapCoeff for BiJet {
    fn add(&self, o: &Self) -> Result<Self> {
        BiJet::add(self, o)
    }
    fn mul(&self, o: &Self) -> Result<Self> {
        BiJet::mul(self, o)
    }
    fn neg(&self) -> Self {
        BiJet::neg(self)
    }
    fn scale(&self, s: C) -> Self {
        BiJet::scale(self, s)
    }
    fn inv(&self) -> Result<Self> {
        self.inv_unit()
    }
    fn deriv_var(&self, axis: usize) -> Self {
        self.deriv(axis)
    }
    fn max_abs(&self) -> f64 {
        BiJet::max_abs(self)
    }
    fn value(&self) -> C {
        self.coeff_or_zero(0, 0)
    }
}

/// Polynomial in the per-variable flow times (exponents `key.0`) and the
/// expansion parameter (extra exponent `key.1`), truncated at total grading
/// `dcap`.  Flow-time exponents below -1 cannot arise (each variable carries
/// a single simple pole) and are discarded along with everything above the
/// caps.
#[derive(Clone)]
pub(crate) struct SwapPoly<K: SwapCoeff> {
    nvar: usize,
    dcap: i32,
    terms: BTreeMap<Key, K>,
}

impl<K: SwapCoeff> SwapPoly<K> {
    pub(crate) fn zero(nvar: usize, dcap: i32) -> Self {
        SwapPoly { nvar, dcap, terms: BTreeMap::new() }
    }

    pub(crate) fn single(nvar: usize, dcap: i32, key: Key, v: K) -> Result<Self> {
        let mut p = Self::zero(nvar, dcap);
        p.insert(key, v)?;
        Ok(p)
    }

    pub(crate) fn get(&self, key: &Key) -> Option<&K> {
        self.terms.get(key)
    }

    fn insert(&mut self, key: Key, v: K) -> Result<()> {
        if v.max_abs() == 0.0 {
            return Ok(());
        }
        if key_ord(&key) > self.dcap
            || key.1 < -(self.dcap + 2)
            || key.0.iter().any(|&a| a < -1 || a > self.dcap + 3)
        {
            return Ok(());
        }
        match self.terms.remove(&key) {
            Some(old) => {
                let s = old.add(&v)?;
                if s.max_abs() != 0.0 {
                    self.terms.insert(key, s);
                }
            }
            None => {
                self.terms.insert(key, v);
            }
        }
        Ok(())
    }

    pub(crate) fn add(&self, o: &Self) -> Result<Self> {
        let mut out = Self::zero(self.nvar, self.dcap);
        for (k, v) in self.terms.iter().chain(o.terms.iter()) {
            out.insert(k.clone(), v.clone())?;
        }
        Ok(out)
    }

    pub(crate) fn sub(&self, o: &Self) -> Result<Self> {
        self.add(&o.neg())
    }

    pub(crate) fn neg(&self) -> Self {
        let mut out = Self::zero(self.nvar, self.dcap);
        for (k, v) in &self.terms {
            out.terms.insert(k.clone(), v.neg());
        }
        out
    }

    pub(crate) fn scale(&self, s: C) -> Self {
        let mut out = Self::zero(self.nvar, self.dcap);
        if s == C::new(0.0, 0.0) {
            return out;
        }
        for (k, v) in &self.terms {
            out.terms.insert(k.clone(), v.scale(s));
        }
        out
    }

    pub(crate) fn mul(&self, o: &Self) -> Result<Self> {
        let mut out = Self::zero(self.nvar, self.dcap);
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                out.insert(key_add(ka, kb), va.mul(vb)?)?;
            }
        }
        Ok(out)
    }

    fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    fn check_nilpotent(&self, what: &str) -> Result<()> {
        if self.terms.keys().any(|k| key_ord(k) < 1) {
            return Err(Error::Config(format!("{what}: expected grading at least one")));
        }
        Ok(())
    }

    /// Exponential of a polynomial with no grading-zero part.
    pub(crate) fn exp(&self, unit: &K) -> Result<Self> {
        self.check_nilpotent("flow polynomial exponential")?;
        let u = Self::single(self.nvar, self.dcap, (vec![0; self.nvar], 0), unit.clone())?;
        let mut acc = u.clone();
        let mut term = u;
        for k in 1..=(self.dcap + 4).max(2) {
            term = term.mul(self)?.scale(one() / C::new(k as f64, 0.0));
            if term.is_empty() {
                break;
            }
            acc = acc.add(&term)?;
        }
        Ok(acc)
    }

    /// Multiplicative inverse.  The lexicographically first monomial acts as
    /// the pivot; everything past it must carry strictly higher grading.
    pub(crate) fn inv(&self) -> Result<Self> {
        let (kp, p) = self
            .terms
            .iter()
            .next()
            .ok_or_else(|| Error::Config("inverse of an empty flow polynomial".into()))?;
        let pinv = p.inv()?;
        let unit = p.mul(&pinv)?;
        let mut n = Self::zero(self.nvar, self.dcap);
        for (k, v) in self.terms.iter().skip(1) {
            let shifted = key_sub(k, kp);
            if key_ord(&shifted) < 1 {
                return Err(Error::Config("flow polynomial pivot is not dominant".into()));
            }
            n.insert(shifted, v.mul(&pinv)?.neg())?;
        }
        let u = Self::single(self.nvar, self.dcap, (vec![0; self.nvar], 0), unit)?;
        let mut acc = u.clone();
        let mut pow = u;
        for _ in 0..(2 * self.dcap + 8).max(2) {
            pow = pow.mul(&n)?;
            if pow.is_empty() {
                break;
            }
            acc = acc.add(&pow)?;
        }
        let mut out = Self::zero(self.nvar, self.dcap);
        for (k, v) in &acc.terms {
            out.insert(key_sub(k, kp), v.mul(&pinv)?)?;
        }
        Ok(out)
    }

    /// Taylor composition sum_j cs[j] arg^j of scalar coefficients with a
    /// polynomial of grading at least one (Horner form).
    pub(crate) fn compose(cs: &[C], arg: &Self, unit: &K) -> Result<Self> {
        arg.check_nilpotent("flow polynomial composition")?;
        let upoly = |s: C| Self::single(arg.nvar, arg.dcap, (vec![0; arg.nvar], 0), unit.scale(s));
        let mut acc = upoly(*cs.last().ok_or_else(|| {
            Error::Config("empty coefficient list in flow composition".into())
        })?)?;
        for j in (0..cs.len() - 1).rev() {
            acc = acc.mul(arg)?.add(&upoly(cs[j])?)?;
        }
        Ok(acc)
    }
}

/// Iterated flow derivatives [f, Df, D^2 f, ...] with D = (1/x') d/dt.
fn dchain(f0: &Jet, xpinv: &Jet, len: usize) -> Result<Vec<Jet>> {
    let mut out = vec![f0.clone()];
    for a in 0..len {
        out.push(out[a].deriv().mul(xpinv)?);
    }
    Ok(out)
}

/// Square root of a polynomial whose grading-zero part is the unit.
fn sqrt_unit<K: SwapCoeff>(p: &SwapPoly<K>, unit: &K) -> Result<SwapPoly<K>> {
    let u = SwapPoly::single(p.nvar, p.dcap, (vec![0; p.nvar], 0), unit.clone())?;
    let n = p.sub(&u)?;
    n.check_nilpotent("flow polynomial square root")?;
    let mut acc = u.clone();
    let mut pow = u;
    let mut binom = one();
    for k in 1..=(p.dcap + 4).max(2) {
        binom *= C::new((0.5 - (k as f64 - 1.0)) / k as f64, 0.0);
        pow = pow.mul(&n)?;
        if pow.is_empty() {
            break;
        }
        acc = acc.add(&pow.scale(binom))?;
    }
    Ok(acc)
}

/// Per-variable flow data at one base point: the flow-coordinate derivative
/// chains of the local coordinate.
struct VarFlow {
    z0: C,
    tag: u64,
    ord: usize,
    dcap: i32,
    amax: usize,
    xpinv: Jet,
    idch: Vec<Jet>,
}

impl VarFlow {
    fn new(curve: &SpectralCurve, z0: C, ord: usize, tag: u64, dcap: i32) -> Result<Self> {
        let amax = (dcap + 3).max(1) as usize;
        let xp = curve.dx_jet(z0, ord, tag)?;
        let xpinv = xp.trimmed(1e-13).inv()?;
        let id = Jet::constant(tag, z0).add(&Jet::var(tag))?.truncated(ord as i32);
        let idch = dchain(&id, &xpinv, amax)?;
        Ok(VarFlow { z0, tag, ord, dcap, amax, xpinv, idch })
    }

    /// The flowed coordinate as a polynomial in the flow time.
    fn flow(&self, sign: f64) -> Result<SwapPoly<Jet>> {
        let mut p = SwapPoly::zero(1, self.dcap);
        for a in 0..=self.amax {
            let c = C::new((sign * 0.5_f64).powi(a as i32) / factorial(a), 0.0);
            p.insert((vec![a as i32], 0), self.idch[a].scale(c))?;
        }
        Ok(p)
    }

    /// Difference of a function's values at the two flowed points, from its
    /// flow-derivative chain ch[a] = D^a F.
    fn delta_of(&self, ch: &[Jet]) -> Result<SwapPoly<Jet>> {
        let mut p = SwapPoly::zero(1, self.dcap);
        let mut a = 1usize;
        while a <= self.amax && a < ch.len() {
            let c = C::new(2.0 * 0.5_f64.powi(a as i32) / factorial(a), 0.0);
            p.insert((vec![a as i32], 0), ch[a].scale(c))?;
            a += 2;
        }
        Ok(p)
    }

    fn coord_delta(&self) -> Result<SwapPoly<Jet>> {
        self.delta_of(&self.idch)
    }

    /// Square root of the product of the two flow Jacobians: the net
    /// half-density factor of the per-variable pole term.
    fn jac_sqrt(&self) -> Result<SwapPoly<Jet>> {
        let mut jp = SwapPoly::zero(1, self.dcap);
        let mut jm = SwapPoly::zero(1, self.dcap);
        for a in 0..=self.amax {
            let c = C::new(0.5_f64.powi(a as i32) / factorial(a), 0.0);
            let d = self.idch[a].deriv();
            jp.insert((vec![a as i32], 0), d.scale(c))?;
            let s = if a % 2 == 0 { one() } else { -one() };
            jm.insert((vec![a as i32], 0), d.scale(c * s))?;
        }
        sqrt_unit(&jp.mul(&jm)?, &Jet::one(self.tag).truncated(self.ord as i32))
    }

    /// Exponent left over after the classical-action factor cancels against
    /// the explicit e^{-u y}: an odd series in the flow time with one inverse
    /// power of the expansion parameter.
    fn action_exponent(&self, curve: &SpectralCurve) -> Result<SwapPoly<Jet>> {
        let yp = curve.dy_jet(self.z0, self.ord, self.tag)?;
        let g = yp.mul(&self.xpinv)?;
        let ych = dchain(&g, &self.xpinv, self.amax)?;
        let s = s_operator(self.amax + 1);
        let mut p = SwapPoly::zero(1, self.dcap);
        let mut tp = 1usize;
        while 2 * tp + 1 <= self.amax {
            let c = C::new(s[2 * tp], 0.0);
            p.insert((vec![(2 * tp + 1) as i32], -1), ych[2 * tp - 1].scale(c))?;
            tp += 1;
        }
        Ok(p)
    }

    /// Difference of a pole-basis primitive at the two flowed points.
    fn prim_delta(&self, ctx: &NpContext, idx: BasisIdx) -> Result<SwapPoly<Jet>> {
        let f = ctx.basis.jet(ctx.curve, idx, self.z0, self.ord, self.tag)?;
        let g = f.mul(&self.xpinv)?;
        let ch = dchain(&g, &self.xpinv, self.amax)?;
        // ch[a] here is D^{a+1} of the primitive; shift by a leading zero.
        let mut shifted = vec![Jet::zero(self.tag)];
        shifted.extend(ch);
        self.delta_of(&shifted)
    }

    /// Pole factor x Jacobians x classical-action factor for one variable.
    fn pole_common(&self, curve: &SpectralCurve) -> Result<SwapPoly<Jet>> {
        let unit = Jet::one(self.tag);
        let w = self.action_exponent(curve)?.exp(&unit)?;
        let w = w.mul(&self.jac_sqrt()?)?;
        w.mul(&self.coord_delta()?.inv()?)
    }
}

fn theta_taylor(curve: &SpectralCurve, at: C, len: usize, tag: u64) -> Result<Vec<C>> {
    let ell = curve
        .ell()
        .ok_or_else(|| Error::Config("theta factors need a genus-1 curve".into()))?;
    let j = ell.theta.theta_star_jet(at, len + 1, tag)?;
    Ok((0..len as i32).map(|k| j.coeff_or_zero(k)).collect())
}

/// One-variable dressed kernel as a flow polynomial.  `ctx` supplies the
/// correction table (omit it when the curve has no stable differentials).
pub(crate) fn w_one(
    curve: &SpectralCurve,
    ctx: Option<&NpContext>,
    z0: C,
    d_max: usize,
    ord: usize,
    tag: u64,
) -> Result<SwapPoly<Jet>> {
    let dcap = d_max as i32 + 2;
    let unit = Jet::one(tag).truncated(ord as i32);
    let vf = VarFlow::new(curve, z0, ord, tag, dcap)?;
    let mut w = vf.pole_common(curve)?;
    if curve.genus() == 1 {
        let dz = vf.coord_delta()?;
        let len = (dcap + 4) as usize;
        // Pole normalization: the odd prime factor of the coordinate
        // difference, with its exact zero at the origin imposed.
        let mut c0 = theta_taylor(curve, C::new(0.0, 0.0), len, tag)?;
        let slope = c0[1];
        c0[0] = C::new(0.0, 0.0);
        let e = SwapPoly::compose(&c0, &dz, &unit)?;
        w = w.mul(&e.inv()?.scale(slope))?;
        // And the coordinate-delta pole factor of `pole_common` cancels out.
        w = w.mul(&dz)?;
        // Theta dressing shifted by the flow displacement.
        let ell = curve.ell().unwrap();
        let wpt = ell.theta.w[0];
        let cw = theta_taylor(curve, wpt, len, tag)?;
        let ratio = SwapPoly::compose(&cw, &dz, &unit)?.scale(one() / cw[0]);
        w = w.mul(&ratio)?;
    }
    if let Some(cx) = ctx {
        if d_max >= 1 {
            let mut cache: BTreeMap<BasisIdx, SwapPoly<Jet>> = BTreeMap::new();
            let mut t = SwapPoly::zero(1, dcap);
            for dp in 1..=d_max {
                for term in core_terms(cx, dp)? {
                    if !term.thetas.is_empty() {
                        return Err(Error::Config(
                            "flow evaluation of theta-bearing corrections is not supported".into(),
                        ));
                    }
                    let mut p =
                        SwapPoly::single(1, dcap, (vec![0], dp as i32), unit.scale(term.coeff))?;
                    for idx in &term.slots {
                        if !cache.contains_key(idx) {
                            cache.insert(*idx, vf.prim_delta(cx, *idx)?);
                        }
                        p = p.mul(&cache[idx])?;
                    }
                    t = t.add(&p)?;
                }
            }
            w = w.mul(&t.exp(&unit)?)?;
        }
    }
    Ok(w)
}

fn lift(p: &SwapPoly<Jet>, axis: usize, other_tag: u64, ord: usize, dcap: i32) -> Result<SwapPoly<BiJet>> {
    let mut out = SwapPoly::zero(2, dcap);
    for (k, v) in &p.terms {
        let key = if axis == 0 { (vec![k.0[0], 0], k.1) } else { (vec![0, k.0[0]], k.1) };
        out.insert(key, BiJet::from_jet(&v.truncated(ord as i32), other_tag, axis, ord as i32))?;
    }
    Ok(out)
}

/// Connected two-variable dressed kernel as a flow polynomial (genus zero).
pub(crate) fn w_two(
    curve: &SpectralCurve,
    ctx: Option<&NpContext>,
    z0: [C; 2],
    d_max: usize,
    ord: usize,
    tags: [u64; 2],
) -> Result<SwapPoly<BiJet>> {
    if curve.genus() != 0 {
        return Err(Error::Config(
            "two-variable flow evaluation supports genus zero only".into(),
        ));
    }
    let dcap = d_max as i32 + 3;
    let bunit = BiJet::one(tags[0], tags[1], ord as i32, ord as i32);
    let vf = [
        VarFlow::new(curve, z0[0], ord, tags[0], dcap)?,
        VarFlow::new(curve, z0[1], ord, tags[1], dcap)?,
    ];
    let common = lift(&vf[0].pole_common(curve)?, 0, tags[1], ord, dcap)?
        .mul(&lift(&vf[1].pole_common(curve)?, 1, tags[0], ord, dcap)?)?;
    let fl = |i: usize, sign: f64| -> Result<SwapPoly<BiJet>> {
        lift(&vf[i].flow(sign)?, i, tags[1 - i], ord, dcap)
    };
    let (zp1, zm1, zp2, zm2) = (fl(0, 1.0)?, fl(0, -1.0)?, fl(1, 1.0)?, fl(1, -1.0)?);
    let cross = zp1
        .sub(&zp2)?
        .mul(&zm1.sub(&zm2)?)?
        .mul(&zp1.sub(&zm2)?.mul(&zm1.sub(&zp2)?)?.inv()?)?;
    let corrections = match ctx {
        Some(cx) if d_max >= 1 => {
            // Per-variable segment polynomials and their sum, cached by slot.
            let mut cache: BTreeMap<BasisIdx, [SwapPoly<BiJet>; 3]> = BTreeMap::new();
            let mut t12 = SwapPoly::zero(2, dcap);
            let mut t1 = SwapPoly::zero(2, dcap);
            let mut t2 = SwapPoly::zero(2, dcap);
            for dp in 1..=d_max {
                for term in core_terms(cx, dp)? {
                    if !term.thetas.is_empty() {
                        return Err(Error::Config(
                            "flow evaluation of theta-bearing corrections is not supported".into(),
                        ));
                    }
                    let base =
                        SwapPoly::single(2, dcap, (vec![0, 0], dp as i32), bunit.scale(term.coeff))?;
                    let (mut p12, mut p1, mut p2) = (base.clone(), base.clone(), base);
                    for idx in &term.slots {
                        if !cache.contains_key(idx) {
                            let d1 = lift(&vf[0].prim_delta(cx, *idx)?, 0, tags[1], ord, dcap)?;
                            let d2 = lift(&vf[1].prim_delta(cx, *idx)?, 1, tags[0], ord, dcap)?;
                            cache.insert(*idx, [d1.add(&d2)?, d1, d2]);
                        }
                        let [d12, d1, d2] = &cache[idx];
                        p12 = p12.mul(d12)?;
                        p1 = p1.mul(d1)?;
                        p2 = p2.mul(d2)?;
                    }
                    t12 = t12.add(&p12)?;
                    t1 = t1.add(&p1)?;
                    t2 = t2.add(&p2)?;
                }
            }
            cross
                .mul(&t12.exp(&bunit)?)?
                .sub(&t1.exp(&bunit)?.mul(&t2.exp(&bunit)?)?)?
        }
        _ => {
            let u = SwapPoly::single(2, dcap, (vec![0, 0], 0), bunit)?;
            cross.sub(&u)?
        }
    };
    common.mul(&corrections)
}

/// Apply the swap: for every monomial with flow-time exponents r_i >= 0, act
/// with the i-th substitution operator r_i times, evaluate at the base
/// points, and collect by total grading.  Returns (sum, magnitude scale) per
/// grading up to `d_max`; the scale is the sum of the contributions' sizes.
pub(crate) fn swap_orders<K: SwapCoeff>(
    w: &SwapPoly<K>,
    ypinv: &[K],
    d_max: usize,
) -> Result<Vec<(C, f64)>> {
    let sign = if w.nvar % 2 == 0 { one() } else { -one() };
    let mut out = vec![(C::new(0.0, 0.0), 0.0); d_max + 1];
    for (key, v) in &w.terms {
        if key.0.iter().any(|&a| a < 0) {
            continue;
        }
        let d = key_ord(key);
        if d < 0 || d as usize > d_max {
            continue;
        }
        let mut f = v.clone();
        for (i, &a) in key.0.iter().enumerate() {
            for _ in 0..a {
                f = f.mul(&ypinv[i])?.deriv_var(i).neg();
            }
        }
        let val = sign * f.value();
        out[d as usize].0 += val;
        out[d as usize].1 += val.norm();
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::np::assemble::{assemble_np, NpContext};
    use crate::testfix;
    use crate::toprec::OmegaGN;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    /// Pointwise value of a stable differential from the recursion table.
    fn omega_val(ctx: &NpContext, g: usize, pts: &[C]) -> C {
        let tensor = ctx.table.get(&(g, pts.len())).unwrap();
        let mut total = C::new(0.0, 0.0);
        for (key, coeff) in tensor.terms() {
            for arr in OmegaGN::arrangements(key) {
                let mut s = *coeff;
                for (idx, &z) in arr.iter().zip(pts) {
                    s *= ctx.basis.eval(ctx.curve, *idx, z).unwrap();
                }
                total += s;
            }
        }
        total
    }

    #[test]
    fn swap_annihilates_one_point_kernel_of_a_trivial_dual_role() {
        let rec = testfix::airy_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let z0 = c(0.8, 0.3);
        let w = w_one(rec.curve, Some(&ctx), z0, 3, 20, 501).unwrap();
        let ypinv = rec.curve.dy_jet(z0, 20, 501).unwrap().trimmed(1e-13).inv().unwrap();
        let res = swap_orders(&w, &[ypinv], 3).unwrap();
        for (d, (total, scale)) in res.iter().enumerate() {
            assert!(
                total.norm() <= 1e-6 * scale.max(1e-6),
                "order {d}: {total} vs scale {scale}"
            );
        }
    }

    #[test]
    fn swap_two_point_kernel_reduces_to_bergman() {
        let rec = testfix::airy_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let z0 = [c(0.8, 0.3), c(-0.45, 0.45)];
        let w = w_two(rec.curve, Some(&ctx), z0, 3, 14, [601, 602]).unwrap();
        let yp = |i: usize| -> BiJet {
            let j = rec.curve.dy_jet(z0[i], 14, [601, 602][i]).unwrap();
            BiJet::from_jet(&j.trimmed(1e-13).inv().unwrap().truncated(14), [602, 601][i], i, 14)
        };
        let res = swap_orders(&w, &[yp(0), yp(1)], 3).unwrap();
        let b = (z0[0] - z0[1]).powi(-2);
        assert!((res[0].0 - b).norm() <= 1e-6 * b.norm(), "{} vs {}", res[0].0, b);
        for d in 1..=3 {
            let (total, scale) = res[d];
            assert!(
                total.norm() <= 1e-6 * scale.max(1e-6),
                "order {d}: {total} vs scale {scale}"
            );
        }
    }

    #[test]
    fn inverse_swap_recovers_stable_differentials() {
        let rec = testfix::airy_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let dual = testfix::airy_dual_curve();
        let z0 = c(0.8, 0.3);
        // The substitution operator divides by the original first role.
        let xpinv = rec.curve.dx_jet(z0, 20, 701).unwrap().trimmed(1e-13).inv().unwrap();
        let w = w_one(dual, None, z0, 3, 20, 701).unwrap();
        let res = swap_orders(&w, &[xpinv], 3).unwrap();
        for (d, g) in [(1usize, 1usize), (3, 2)] {
            let target = omega_val(&ctx, g, &[z0]);
            assert!(
                (res[d].0 - target).norm() <= 1e-6 * target.norm(),
                "order {d}: {} vs {}",
                res[d].0,
                target
            );
        }
        for d in [0usize, 2] {
            assert!(res[d].0.norm() <= 1e-9 * res[d].1.max(1e-6), "order {d}: {}", res[d].0);
        }

        let z2 = [z0, c(-0.45, 0.45)];
        let w2 = w_two(dual, None, z2, 3, 14, [801, 802]).unwrap();
        let xp = |i: usize| -> BiJet {
            let j = rec.curve.dx_jet(z2[i], 14, [801, 802][i]).unwrap();
            BiJet::from_jet(&j.trimmed(1e-13).inv().unwrap().truncated(14), [802, 801][i], i, 14)
        };
        let res2 = swap_orders(&w2, &[xp(0), xp(1)], 3).unwrap();
        let b = (z2[0] - z2[1]).powi(-2);
        assert!((res2[0].0 - b).norm() <= 1e-6 * b.norm(), "{} vs {}", res2[0].0, b);
        let target = omega_val(&ctx, 1, &z2);
        assert!(
            (res2[2].0 - target).norm() <= 1e-6 * target.norm(),
            "{} vs {}",
            res2[2].0,
            target
        );
        for d in [1usize, 3] {
            assert!(res2[d].0.norm() <= 1e-9 * res2[d].1.max(1e-6), "order {d}: {}", res2[d].0);
        }
    }

    #[test]
    fn dressed_flow_kernel_matches_assembled_differential_at_order_zero() {
        let rec = testfix::torus_rec().lock().unwrap();
        let ctx = NpContext::new(rec.curve, rec.params.k_max, &rec.table);
        let z0 = c(0.52, 0.36);
        let w = w_one(rec.curve, Some(&ctx), z0, 0, 20, 901).unwrap();
        let got = w.get(&(vec![0], 0)).map(|j| j.value()).unwrap_or(C::new(0.0, 0.0));
        let target = assemble_np(&ctx, 1, 0).unwrap().eval(&ctx, &[z0]).unwrap();
        assert!(
            (got - target).norm() <= 1e-8 * target.norm(),
            "{got} vs {target}"
        );
    }
}
