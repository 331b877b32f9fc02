//! Spectral-curve geometry: the input data (Sigma, dx, dy, key points) for
//! genus 0 and genus 1, Bergman kernel, prime form, cycles and periods, and
//! the kernel basis of meromorphic differentials used to store all recursion
//! output.

pub mod elliptic;
pub mod quad;
pub mod rat;

use num_complex::Complex64 as C;

use crate::error::{Error, Result};
use crate::series::jet::Jet;

pub use elliptic::Elliptic;
pub use rat::{Poly, Rat};

fn one() -> C {
    C::new(1.0, 0.0)
}

fn zero() -> C {
    C::new(0.0, 0.0)
}

fn i2pi() -> C {
    C::new(0.0, 2.0 * std::f64::consts::PI)
}

/// Differential on the torus: a finite combination of elliptic atoms times dz.
#[derive(Clone, Debug, Default)]
pub struct EllDiff {
    pub const_term: C,
    /// (c, p): c * wp(z - p)
    pub wp_terms: Vec<(C, C)>,
    /// (c, p): c * wp'(z - p)
    pub wp_prime_terms: Vec<(C, C)>,
    /// (c, p, p'): c * (zeta(z - p) - zeta(z - p'))
    pub zeta_terms: Vec<(C, C, C)>,
}

impl EllDiff {
    pub fn jet(&self, ell: &Elliptic, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let mut acc = Jet::constant(tag, self.const_term);
        for &(c, p) in &self.wp_terms {
            acc = acc.add(&ell.wp_jet(z0 - p, order, tag)?.scale(c))?;
        }
        for &(c, p) in &self.wp_prime_terms {
            acc = acc.add(&ell.wp_prime_jet(z0 - p, order, tag)?.scale(c))?;
        }
        for &(c, p, pp) in &self.zeta_terms {
            let a = ell.zeta_jet(z0 - p, order, tag)?;
            let b = ell.zeta_jet(z0 - pp, order, tag)?;
            acc = acc.add(&a.sub(&b)?.scale(c))?;
        }
        Ok(acc)
    }

    pub fn eval(&self, ell: &Elliptic, z: C) -> Result<C> {
        Ok(self.jet(ell, z, 2, 0)?.coeff_or_zero(0))
    }

    /// All atom centers (pole locations modulo the lattice).
    pub fn pole_centers(&self) -> Vec<C> {
        let mut out = Vec::new();
        for &(_, p) in &self.wp_terms {
            out.push(p);
        }
        for &(_, p) in &self.wp_prime_terms {
            out.push(p);
        }
        for &(_, p, pp) in &self.zeta_terms {
            out.push(p);
            out.push(pp);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cycle {
    A,
    B,
}

#[derive(Clone, Debug)]
pub struct KeyPoint {
    pub z: C,
    /// Simple zero of dx (standard setup coordinate x - x(q) = s^2).
    pub ramified: bool,
}

#[derive(Clone, Debug)]
pub enum CurveData {
    /// Genus 0: x(z), y(z) rational in the global coordinate.
    Rational { x: Rat, y: Rat },
    /// Genus 1 in the flat coordinate on C/(Z + tau Z).
    Torus { ell: Elliptic, dx: EllDiff, dy: EllDiff },
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub data: CurveData,
    pub key_points: Vec<KeyPoint>,
    pub dual_key_points: Vec<C>,
}

impl SpectralCurve {
    pub fn genus(&self) -> u8 {
        match self.data {
            CurveData::Rational { .. } => 0,
            CurveData::Torus { .. } => 1,
        }
    }

    pub fn ell(&self) -> Option<&Elliptic> {
        match &self.data {
            CurveData::Torus { ell, .. } => Some(ell),
            _ => None,
        }
    }

    pub fn tau(&self) -> Option<C> {
        self.ell().map(|e| e.tau())
    }

    /// Jet of dx/dz at z0 in t = z - z0.
    pub fn dx_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        match &self.data {
            CurveData::Rational { x, .. } => x.deriv().jet_at(z0, tag, order),
            CurveData::Torus { ell, dx, .. } => dx.jet(ell, z0, order, tag),
        }
    }

    pub fn dy_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        match &self.data {
            CurveData::Rational { y, .. } => y.deriv().jet_at(z0, tag, order),
            CurveData::Torus { ell, dy, .. } => dy.jet(ell, z0, order, tag),
        }
    }

    /// Jet of x(z0 + t) - x(z0) (primitive of dx with zero constant).
    pub fn x_shift_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let d = self.dx_jet(z0, order, tag)?;
        d.integrate()
    }

    /// Jet of y(z0 + t) - y(z0).
    pub fn y_shift_jet(&self, z0: C, order: usize, tag: u64) -> Result<Jet> {
        let d = self.dy_jet(z0, order, tag)?;
        d.integrate()
    }

    /// Local orders (r, s) of dx and dy at a point; a point is special when
    /// neither r = s = 1 nor r + s <= 0 holds... the recursion takes residues
    /// exactly at the special points assigned to the key set.
    pub fn local_orders(&self, z0: C) -> Result<(i32, i32)> {
        let dx = self.dx_jet(z0, 6, 0)?;
        let dy = self.dy_jet(z0, 6, 0)?;
        match (leading_order(&dx), leading_order(&dy)) {
            (Some(r), Some(s)) => Ok((r, s)),
            _ => Err(Error::Other("vanishing differential at probe point".into())),
        }
    }

    pub fn is_special(&self, z0: C) -> Result<bool> {
        let (r, s) = self.local_orders(z0)?;
        Ok(!((r == 1 && s == 1) || r + s <= 0))
    }

    /// Validate that every listed key point is special, and standard-setup
    /// structure where declared.
    pub fn validate(&self) -> Result<()> {
        for kp in &self.key_points {
            if !self.is_special(kp.z)? {
                return Err(Error::Config(format!(
                    "key point {} is not special",
                    kp.z
                )));
            }
            if kp.ramified {
                let (r, _) = self.local_orders(kp.z)?;
                let dy0 = self.dy_jet(kp.z, 2, 0)?.coeff_or_zero(0);
                if r != 1 || dy0.norm() < 1e-12 {
                    return Err(Error::Config(format!(
                        "key point {} is not a standard-setup ramification point",
                        kp.z
                    )));
                }
            }
        }
        for &z in &self.dual_key_points {
            if !self.is_special(z)? {
                return Err(Error::Config(format!(
                    "dual key point {z} is not special"
                )));
            }
        }
        Ok(())
    }

    /// Bergman kernel sample: coefficient of dz1 dz2.
    pub fn bergman_eval(&self, z1: C, z2: C) -> Result<C> {
        if (z1 - z2).norm() < 1e-12 {
            return Err(Error::CoincidentPoints("bergman kernel"));
        }
        match &self.data {
            CurveData::Rational { .. } => Ok(one() / ((z1 - z2) * (z1 - z2))),
            CurveData::Torus { ell, .. } => ell.bergman_val(z1, z2),
        }
    }

    /// Jet in z at z0 of B(z, z2)/(dz dz2) with z2 fixed; valid when z0 = z2
    /// (Laurent with double pole).
    pub fn bergman_jet(&self, z0: C, z2: C, order: usize, tag: u64) -> Result<Jet> {
        match &self.data {
            CurveData::Rational { .. } => {
                // 1/((z0 - z2) + t)^2
                let base = Jet::constant(tag, z0 - z2)
                    .add(&Jet::monomial(tag, 1, one()))?
                    .truncated(order as i32 + 3);
                let inv = base.trimmed(1e-14).inv()?;
                inv.mul(&inv)
            }
            CurveData::Torus { ell, .. } => ell.bergman_jet(z0, z2, order, tag),
        }
    }

    /// Prime form sample in the flat/global frame.
    pub fn prime_form(&self, z1: C, z2: C) -> Result<C> {
        match &self.data {
            CurveData::Rational { .. } => Ok(z1 - z2),
            CurveData::Torus { ell, .. } => ell.prime_form_val(z1, z2),
        }
    }

    /// Poles to avoid when sampling and routing contours (finite poles of the
    /// input differentials plus key points).
    pub fn avoid_points(&self) -> Vec<C> {
        let mut pts: Vec<C> = self.key_points.iter().map(|k| k.z).collect();
        pts.extend(self.dual_key_points.iter().copied());
        match &self.data {
            CurveData::Rational { x, y } => {
                pts.extend(x.poles());
                pts.extend(y.poles());
            }
            CurveData::Torus { dx, dy, .. } => {
                pts.extend(dx.pole_centers());
                pts.extend(dy.pole_centers());
            }
        }
        pts
    }
}

/// Cycle data and quadrature for genus 1: A along [0,1], B along [0,tau],
/// translated away from poles.
#[derive(Clone, Debug)]
pub struct PeriodData {
    pub tau: C,
    /// Base offset fraction for contours.
    pub shift: f64,
    pub tol: f64,
}

impl PeriodData {
    pub fn new(tau: C) -> Self {
        PeriodData { tau, shift: 0.1931, tol: 1e-11 }
    }

    /// Integrate the scalar coefficient (of dz) of a differential along a
    /// cycle, retrying with doubled offsets when a pole is hit.
    pub fn cycle_integral(
        &self,
        cycle: Cycle,
        mut f: impl FnMut(C) -> Result<C>,
    ) -> Result<C> {
        let mut shift = self.shift;
        let mut last = Error::PoleOnContour(0);
        for attempt in 0..4 {
            let (a, b) = match cycle {
                Cycle::A => {
                    let base = self.tau * C::new(shift, 0.0);
                    (base, base + one())
                }
                Cycle::B => {
                    let base = C::new(shift, 0.0);
                    (base, base + self.tau)
                }
            };
            match quad::integrate_segment(&mut f, a, b, self.tol) {
                Ok(v) => return Ok(v),
                Err(e) => {
                    last = e;
                    shift *= 2.0;
                    let _ = attempt;
                }
            }
        }
        Err(last)
    }
}

/// Flattened basis index: the k-th derivative kernel at key point q_idx, or
/// the holomorphic completion eta (genus 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BasisIdx {
    G { q: usize, k: usize },
    Eta,
}

/// The family G_q^{(k)} = (d_w^k B(w, .))|_{w=q} together with eta at genus 1.
#[derive(Clone, Debug)]
pub struct KernelBasis {
    pub points: Vec<C>,
    pub k_max: usize,
    pub genus: u8,
}

impl KernelBasis {
    pub fn new(curve: &SpectralCurve, k_max: usize) -> Self {
        KernelBasis {
            points: curve.key_points.iter().map(|k| k.z).collect(),
            k_max,
            genus: curve.genus(),
        }
    }

    pub fn indices(&self) -> Vec<BasisIdx> {
        let mut v: Vec<BasisIdx> = (0..self.points.len())
            .flat_map(|q| (0..=self.k_max).map(move |k| BasisIdx::G { q, k }))
            .collect();
        if self.genus == 1 {
            v.push(BasisIdx::Eta);
        }
        v
    }

    /// Jet in t = z - z0 of the basis differential's dz-coefficient.
    pub fn jet(
        &self,
        curve: &SpectralCurve,
        idx: BasisIdx,
        z0: C,
        order: usize,
        tag: u64,
    ) -> Result<Jet> {
        match idx {
            BasisIdx::Eta => Ok(Jet::one(tag)),
            BasisIdx::G { q, k } => {
                let qz = self.points[q];
                match &curve.data {
                    CurveData::Rational { .. } => {
                        // (-1)^k (k+1)! (q - z)^{-(k+2)}
                        let base = Jet::constant(tag, qz - z0)
                            .sub(&Jet::monomial(tag, 1, one()))?
                            .truncated((order + k + 4) as i32);
                        let inv = base.trimmed(1e-14).inv()?;
                        let mut p = inv.clone();
                        for _ in 0..k + 1 {
                            p = p.mul(&inv)?;
                        }
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        Ok(p.scale(C::new(sign * factorial(k + 1), 0.0)))
                    }
                    CurveData::Torus { ell, .. } => {
                        // -f^{(2+k)}(q - z) as a jet in t at z0.
                        let j = ell.f_deriv_jet(2 + k, qz - z0, order + 2 + k, tag)?;
                        Ok(j.flip_var().neg())
                    }
                }
            }
        }
    }

    /// Pointwise value of the basis differential's dz-coefficient.
    pub fn eval(&self, curve: &SpectralCurve, idx: BasisIdx, z: C) -> Result<C> {
        Ok(self.jet(curve, idx, z, 2, 0)?.coeff_or_zero(0))
    }

    /// Jet of the primitive P with dP/dz = basis coefficient; the primitive of
    /// G_q^{(k)} is single-valued (genus 1: f^{(k+1)}(q - z); genus 0:
    /// (-1)^k k! (q - z)^{-(k+1)}); the primitive of eta is z itself.
    pub fn primitive_jet(
        &self,
        curve: &SpectralCurve,
        idx: BasisIdx,
        z0: C,
        order: usize,
        tag: u64,
    ) -> Result<Jet> {
        match idx {
            BasisIdx::Eta => Jet::constant(tag, z0).add(&Jet::monomial(tag, 1, one())),
            BasisIdx::G { q, k } => {
                let qz = self.points[q];
                match &curve.data {
                    CurveData::Rational { .. } => {
                        let base = Jet::constant(tag, qz - z0)
                            .sub(&Jet::monomial(tag, 1, one()))?
                            .truncated((order + k + 4) as i32);
                        let inv = base.trimmed(1e-14).inv()?;
                        let mut p = inv.clone();
                        for _ in 0..k {
                            p = p.mul(&inv)?;
                        }
                        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                        Ok(p.scale(C::new(sign * factorial(k), 0.0)))
                    }
                    CurveData::Torus { ell, .. } => {
                        let j = ell.f_deriv_jet(k + 1, qz - z0, order + k + 2, tag)?;
                        Ok(j.flip_var())
                    }
                }
            }
        }
    }

    pub fn primitive_val(&self, curve: &SpectralCurve, idx: BasisIdx, z: C) -> Result<C> {
        Ok(self.primitive_jet(curve, idx, z, 2, 0)?.coeff_or_zero(0))
    }

    /// Exact B-period: (1/2pi i) of it is the theta-argument moment.  On the
    /// flat torus only k = 0 survives; eta has period tau; genus 0 has none.
    pub fn b_period(&self, idx: BasisIdx, tau: Option<C>) -> C {
        match (self.genus, idx) {
            (0, _) => zero(),
            (1, BasisIdx::Eta) => tau.unwrap(),
            (1, BasisIdx::G { k: 0, .. }) => i2pi(),
            _ => zero(),
        }
    }

    /// Recover coefficients from principal parts: d = sum c_{q,k} G_q^{(k)}
    /// (+ c_eta eta).  `jets[q]` is the Laurent jet of d/dz at key point q;
    /// `a_period` supplies the eta component at genus 1 (0 when omitted).
    pub fn decompose(
        &self,
        jets: &[Jet],
        a_period: Option<C>,
    ) -> Result<Vec<(BasisIdx, C)>> {
        if jets.len() != self.points.len() {
            return Err(Error::Config("one principal-part jet per key point required".into()));
        }
        let mut out = Vec::new();
        for (q, jet) in jets.iter().enumerate() {
            let scale = jet.max_abs().max(1e-300);
            let res = jet.coeff_or_zero(-1);
            if res.norm() > 1e-9 * scale {
                return Err(Error::ResidueObstruction(res.norm() / scale));
            }
            for k in 0..=self.k_max {
                let a = jet.coeff_or_zero(-(k as i32) - 2);
                if a.norm() > 1e-13 * scale {
                    out.push((BasisIdx::G { q, k }, a / C::new(factorial(k + 1), 0.0)));
                }
            }
            // Anything deeper than k_max + 2 is unrepresentable.
            if jet.lo() < -(self.k_max as i32) - 2 {
                let deep = jet.coeff_or_zero(jet.lo());
                if deep.norm() > 1e-11 * scale {
                    return Err(Error::Other(format!(
                        "pole order {} exceeds basis depth {}",
                        -jet.lo(),
                        self.k_max + 2
                    )));
                }
            }
        }
        if self.genus == 1 {
            if let Some(p) = a_period {
                if p.norm() > 1e-300 {
                    out.push((BasisIdx::Eta, p));
                }
            }
        }
        Ok(out)
    }
}

/// Leading order of a jet judged against a short look-ahead scale, so that a
/// genuine leading coefficient is not discarded just because higher Taylor
/// coefficients grow geometrically.
fn leading_order(j: &Jet) -> Option<i32> {
    if j.is_zero() {
        return None;
    }
    for k in j.lo()..=j.hi().min(j.lo() + 24) {
        let c = j.coeff_or_zero(k).norm();
        let scale = (k..=(k + 3).min(j.hi()))
            .map(|m| j.coeff_or_zero(m).norm())
            .fold(1e-300, f64::max);
        if c > 1e-9 * scale {
            return Some(k);
        }
    }
    None
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}
