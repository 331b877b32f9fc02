//! Bivariate truncated Taylor/Laurent series in two independent local
//! coordinates.  Used for two-point objects (the Bergman kernel near the
//! diagonal and cross-terms between evaluation points).

use crate::error::{Error, Result};
use num_complex::Complex64 as C;

use super::jet::Jet;

fn binom(n: usize, k: usize) -> f64 {
    let k = k.min(n - k.min(n));
    let mut v = 1.0;
    for i in 0..k {
        v = v * (n - i) as f64 / (i + 1) as f64;
    }
    v
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiJet {
    pub tag0: u64,
    pub tag1: u64,
    lo0: i32,
    lo1: i32,
    /// coeffs[i][j] holds the coefficient of s^{lo0+i} t^{lo1+j}.
    coeffs: Vec<Vec<C>>,
    hi0: i32,
    hi1: i32,
}

impl BiJet {
    pub fn new(tag0: u64, tag1: u64, lo0: i32, lo1: i32, coeffs: Vec<Vec<C>>) -> Self {
        let hi0 = lo0 + coeffs.len() as i32 - 1;
        let hi1 = lo1 + coeffs.first().map(|r| r.len()).unwrap_or(0) as i32 - 1;
        BiJet { tag0, tag1, lo0, lo1, coeffs, hi0, hi1 }
    }

    pub fn zero(tag0: u64, tag1: u64, hi0: i32, hi1: i32) -> Self {
        BiJet { tag0, tag1, lo0: hi0 + 1, lo1: hi1 + 1, coeffs: Vec::new(), hi0, hi1 }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn windows(&self) -> (i32, i32, i32, i32) {
        (self.lo0, self.hi0, self.lo1, self.hi1)
    }

    pub fn coeff(&self, i: i32, j: i32) -> Result<C> {
        if i > self.hi0 || j > self.hi1 {
            return Err(Error::OutsideWindow(i.max(j), self.lo0.min(self.lo1), self.hi0.min(self.hi1)));
        }
        if i < self.lo0 || j < self.lo1 || self.coeffs.is_empty() {
            return Ok(C::new(0.0, 0.0));
        }
        // the stored block may cover only part of the declared window
        Ok(self
            .coeffs
            .get((i - self.lo0) as usize)
            .and_then(|row| row.get((j - self.lo1) as usize))
            .copied()
            .unwrap_or(C::new(0.0, 0.0)))
    }

    pub fn coeff_or_zero(&self, i: i32, j: i32) -> C {
        self.coeff(i, j).unwrap_or(C::new(0.0, 0.0))
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs
            .iter()
            .flat_map(|r| r.iter())
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn check_tags(&self, o: &BiJet) -> Result<()> {
        if self.tag0 != o.tag0 {
            return Err(Error::TagMismatch(self.tag0, o.tag0));
        }
        if self.tag1 != o.tag1 {
            return Err(Error::TagMismatch(self.tag1, o.tag1));
        }
        Ok(())
    }

    /// Promote a univariate jet in the first (axis 0) or second coordinate,
    /// exact to all orders in the other variable within the given window.
    pub fn from_jet(j: &Jet, other_tag: u64, axis: usize, other_hi: i32) -> BiJet {
        if j.is_zero() {
            return match axis {
                0 => BiJet::zero(j.tag, other_tag, other_hi, other_hi),
                _ => BiJet::zero(other_tag, j.tag, other_hi, other_hi),
            };
        }
        let n = (j.hi().min(j.lo() + 4096) - j.lo() + 1).max(0) as usize;
        let vals: Vec<C> = (0..n).map(|i| j.coeff_or_zero(j.lo() + i as i32)).collect();
        match axis {
            0 => {
                let coeffs: Vec<Vec<C>> = vals.iter().map(|&v| vec![v]).collect();
                let mut b = BiJet::new(j.tag, other_tag, j.lo(), 0, coeffs);
                b.hi0 = j.hi();
                b.hi1 = other_hi;
                // widen constant rows to full window
                for row in b.coeffs.iter_mut() {
                    let v = row[0];
                    row.clear();
                    row.resize((other_hi + 1).max(1) as usize, C::new(0.0, 0.0));
                    row[0] = v;
                }
                b.lo1 = 0;
                b
            }
            _ => {
                let row: Vec<C> = vals;
                let mut b = BiJet::new(other_tag, j.tag, 0, j.lo(), vec![row]);
                b.hi1 = j.hi();
                b.hi0 = other_hi;
                let ncols = b.coeffs[0].len();
                let first = std::mem::take(&mut b.coeffs[0]);
                b.coeffs = vec![vec![C::new(0.0, 0.0); ncols]; (other_hi + 1).max(1) as usize];
                b.coeffs[0] = first;
                b.lo0 = 0;
                b
            }
        }
    }

    pub fn add(&self, o: &BiJet) -> Result<BiJet> {
        self.check_tags(o)?;
        let hi0 = self.hi0.min(o.hi0);
        let hi1 = self.hi1.min(o.hi1);
        if self.is_zero() && o.is_zero() {
            return Ok(BiJet::zero(self.tag0, self.tag1, hi0, hi1));
        }
        let lo0 = self.lo0.min(o.lo0).min(hi0);
        let lo1 = self.lo1.min(o.lo1).min(hi1);
        if hi0 < lo0 || hi1 < lo1 {
            return Err(Error::EmptyWindow("bijet addition"));
        }
        let mut coeffs =
            vec![vec![C::new(0.0, 0.0); (hi1 - lo1 + 1) as usize]; (hi0 - lo0 + 1) as usize];
        for (i, row) in coeffs.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                let di = lo0 + i as i32;
                let dj = lo1 + j as i32;
                *c = self.coeff_or_zero(di, dj) + o.coeff_or_zero(di, dj);
            }
        }
        Ok(BiJet { tag0: self.tag0, tag1: self.tag1, lo0, lo1, coeffs, hi0, hi1 })
    }

    pub fn neg(&self) -> BiJet {
        self.scale(C::new(-1.0, 0.0))
    }

    pub fn sub(&self, o: &BiJet) -> Result<BiJet> {
        self.add(&o.neg())
    }

    pub fn scale(&self, s: C) -> BiJet {
        let mut b = self.clone();
        for row in b.coeffs.iter_mut() {
            for c in row.iter_mut() {
                *c *= s;
            }
        }
        b
    }

    pub fn mul(&self, o: &BiJet) -> Result<BiJet> {
        self.check_tags(o)?;
        if self.is_zero() || o.is_zero() {
            return Ok(BiJet::zero(
                self.tag0,
                self.tag1,
                self.hi0.min(o.hi0),
                self.hi1.min(o.hi1),
            ));
        }
        let lo0 = self.lo0 + o.lo0;
        let lo1 = self.lo1 + o.lo1;
        let hi0 = (self.hi0 + o.lo0).min(o.hi0 + self.lo0);
        let hi1 = (self.hi1 + o.lo1).min(o.hi1 + self.lo1);
        if hi0 < lo0 || hi1 < lo1 {
            return Err(Error::EmptyWindow("bijet multiplication"));
        }
        let mut coeffs =
            vec![vec![C::new(0.0, 0.0); (hi1 - lo1 + 1) as usize]; (hi0 - lo0 + 1) as usize];
        for (ia, rowa) in self.coeffs.iter().enumerate() {
            for (ib, rowb) in o.coeffs.iter().enumerate() {
                let di = self.lo0 + ia as i32 + o.lo0 + ib as i32;
                if di > hi0 {
                    continue;
                }
                for (ja, &a) in rowa.iter().enumerate() {
                    if a.norm() == 0.0 {
                        continue;
                    }
                    for (jb, &b) in rowb.iter().enumerate() {
                        let dj = self.lo1 + ja as i32 + o.lo1 + jb as i32;
                        if dj > hi1 {
                            break;
                        }
                        coeffs[(di - lo0) as usize][(dj - lo1) as usize] += a * b;
                    }
                }
            }
        }
        Ok(BiJet { tag0: self.tag0, tag1: self.tag1, lo0, lo1, coeffs, hi0, hi1 })
    }

    /// Bivariate unit with the given truncation window.
    pub fn one(tag0: u64, tag1: u64, hi0: i32, hi1: i32) -> BiJet {
        let mut coeffs =
            vec![vec![C::new(0.0, 0.0); (hi1 + 1).max(1) as usize]; (hi0 + 1).max(1) as usize];
        coeffs[0][0] = C::new(1.0, 0.0);
        BiJet::new(tag0, tag1, 0, 0, coeffs)
    }

    /// Inverse of a unit (Taylor data with nonzero constant term), by the
    /// geometric series within the truncation window.
    pub fn inv_unit(&self) -> Result<BiJet> {
        let c00 = self.coeff_or_zero(0, 0);
        if self.lo0 < 0 || self.lo1 < 0 || c00.norm() < 1e-300 {
            return Err(Error::Other("bivariate inverse needs a unit".into()));
        }
        let one = BiJet::one(self.tag0, self.tag1, self.hi0, self.hi1);
        let n = one.sub(&self.scale(C::new(1.0, 0.0) / c00))?;
        let mut acc = one.clone();
        let mut pw = one;
        for _ in 0..(self.hi0 + self.hi1 + 1).max(1) {
            pw = pw.mul(&n)?;
            if pw.is_zero() || pw.max_abs() == 0.0 {
                break;
            }
            acc = acc.add(&pw)?;
        }
        Ok(acc.scale(C::new(1.0, 0.0) / c00))
    }

    /// Partial derivative along axis 0 or 1.
    pub fn deriv(&self, axis: usize) -> BiJet {
        if self.is_zero() {
            let mut b = self.clone();
            if axis == 0 {
                b.hi0 -= 1;
                b.lo0 -= 1;
            } else {
                b.hi1 -= 1;
                b.lo1 -= 1;
            }
            return b;
        }
        let mut b = self.clone();
        match axis {
            0 => {
                for (i, row) in b.coeffs.iter_mut().enumerate() {
                    let k = (b.lo0 + i as i32) as f64;
                    for c in row.iter_mut() {
                        *c *= C::new(k, 0.0);
                    }
                }
                b.lo0 -= 1;
                b.hi0 -= 1;
            }
            _ => {
                for row in b.coeffs.iter_mut() {
                    for (j, c) in row.iter_mut().enumerate() {
                        let k = (b.lo1 + j as i32) as f64;
                        *c *= C::new(k, 0.0);
                    }
                }
                b.lo1 -= 1;
                b.hi1 -= 1;
            }
        }
        b
    }

    /// Restriction to the diagonal t = s, valid only when tag sharing is
    /// intended; the caller supplies the resulting tag.
    pub fn diagonal(&self, tag: u64) -> Jet {
        if self.is_zero() {
            return Jet::zero(tag);
        }
        let lo = self.lo0 + self.lo1;
        let hi = (self.hi0 + self.lo1).min(self.hi1 + self.lo0);
        let mut coeffs = vec![C::new(0.0, 0.0); (hi - lo + 1).max(0) as usize];
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                let d = self.lo0 + i as i32 + self.lo1 + j as i32;
                if d <= hi {
                    coeffs[(d - lo) as usize] += c;
                }
            }
        }
        Jet::new(tag, lo, coeffs).truncated(hi)
    }

    /// Division by (s - t) via synthetic division in s, with coefficients
    /// series in t.  Requires Taylor data in s (lo0 >= 0) and an input that is
    /// actually divisible: the remainder must vanish to round-off.
    pub fn div_diff(&self) -> Result<BiJet> {
        if self.is_zero() {
            return Ok(BiJet::zero(self.tag0, self.tag1, self.hi0 - 1, self.hi1));
        }
        if self.lo0 < 0 {
            return Err(Error::Other("division by coordinate difference needs Taylor data".into()));
        }
        let hi0 = self.hi0 - 1;
        let hi1 = self.hi1;
        if hi0 < 0 {
            return Err(Error::EmptyWindow("division by coordinate difference"));
        }
        let n1 = (hi1 - self.lo1.min(0) + 1).max(1) as usize;
        let lo1 = self.lo1.min(0);
        // self = sum_i A_i(t) s^i, i in [0, hi0+1].  B_{hi0} = A_{hi0+1},
        // B_{i-1} = A_i + t B_i, remainder A_0 + t B_0 ~ 0.
        let col = |i: i32| -> Vec<C> {
            (0..n1).map(|j| self.coeff_or_zero(i, lo1 + j as i32)).collect()
        };
        let shift_t = |v: &[C]| -> Vec<C> {
            // multiply by t: drop the top coefficient (leaves window intact)
            let mut w = vec![C::new(0.0, 0.0); v.len()];
            for j in 1..v.len() {
                w[j] = v[j - 1];
            }
            // t^{lo1} term of v would land at lo1+1 >= lo1: consistent only if
            // lo1 <= 0 start; handled by lo1.min(0) above.
            w
        };
        let addv = |a: &[C], b: &[C]| -> Vec<C> {
            a.iter().zip(b).map(|(x, y)| x + y).collect()
        };
        let mut b_cols: Vec<Vec<C>> = vec![Vec::new(); (hi0 + 1) as usize];
        let mut cur = col(hi0 + 1);
        for i in (0..=hi0).rev() {
            b_cols[i as usize] = cur.clone();
            cur = addv(&col(i), &shift_t(&cur));
        }
        let rem: f64 = cur.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let scale = self.max_abs().max(1e-300);
        if rem > 1e-8 * scale {
            return Err(Error::Other(format!(
                "coordinate-difference division leaves remainder {:.3e}",
                rem / scale
            )));
        }
        let coeffs: Vec<Vec<C>> = b_cols.into_iter().collect();
        Ok(BiJet { tag0: self.tag0, tag1: self.tag1, lo0: 0, lo1, coeffs, hi0, hi1 })
    }

    /// Bivariate re-expansion g(s + t) of a univariate Taylor jet g: the
    /// (i, j) coefficient is g_{i+j} C(i+j, j).  Requires lo >= 0.
    pub fn shift_expand(g: &Jet, tag_s: u64, tag_t: u64, order: usize) -> Result<BiJet> {
        if g.is_zero() {
            return Ok(BiJet::zero(tag_s, tag_t, order as i32, order as i32));
        }
        if g.lo() < 0 {
            return Err(Error::Other("shift expansion needs Taylor data".into()));
        }
        let hi = g.hi().min(order as i32 * 2 + 2);
        let n = (order + 1).min((hi + 1).max(0) as usize);
        let mut coeffs = vec![vec![C::new(0.0, 0.0); n]; n];
        for (i, row) in coeffs.iter_mut().enumerate() {
            for (j, c) in row.iter_mut().enumerate() {
                let m = (i + j) as i32;
                if m <= hi {
                    *c = g.coeff_or_zero(m) * C::new(binom(i + j, j), 0.0);
                }
            }
        }
        let mut b = BiJet::new(tag_s, tag_t, 0, 0, coeffs);
        // exact up to total degree hi; per-axis windows are the safe bound
        b.hi0 = hi.min(order as i32);
        b.hi1 = hi.min(order as i32);
        Ok(b)
    }

    /// Drop leading axis-1 columns that are exactly zero, so that lo1
    /// reflects the actual content (window arithmetic in mul uses lo1).
    fn tighten_lo1(mut self) -> BiJet {
        while self.lo1 < self.hi1
            && !self.coeffs.is_empty()
            && self
                .coeffs
                .iter()
                .all(|r| r.first().map(|c| c.norm() == 0.0).unwrap_or(true))
        {
            for row in self.coeffs.iter_mut() {
                if !row.is_empty() {
                    row.remove(0);
                }
            }
            self.lo1 += 1;
        }
        self
    }

    /// Inverse of 1 + M where M has strictly positive degree along axis 1,
    /// via the finite geometric series.  The axis-1 constant column must be
    /// 1 to round-off.
    pub fn inv_unit_axis1(&self) -> Result<BiJet> {
        let scale = self.max_abs().max(1e-300);
        let mut m = self.clone();
        if m.lo1 <= 0 {
            let col = (0 - m.lo1) as usize;
            for (i, row) in m.coeffs.iter_mut().enumerate() {
                if col >= row.len() {
                    continue;
                }
                let want = if m.lo0 + i as i32 == 0 { C::new(1.0, 0.0) } else { C::new(0.0, 0.0) };
                if (row[col] - want).norm() > 1e-8 * scale {
                    return Err(Error::ZeroLeading("unit inverse needs vanishing axis-1 constant"));
                }
                row[col] = C::new(0.0, 0.0);
            }
        }
        // m now holds self with the constant column zeroed; m is nilpotent in
        // the axis-1 coordinate up to the window.
        let m = m.tighten_lo1();
        let one = {
            let mut b = BiJet::new(self.tag0, self.tag1, 0, 0, vec![vec![C::new(1.0, 0.0)]]);
            b.hi0 = self.hi0;
            b.hi1 = self.hi1;
            b
        };
        let mut acc = one.clone();
        let mut pw = one;
        for _ in 0..(self.hi1.max(0) + 1) {
            pw = pw.mul(&m)?.neg();
            if pw.is_zero() || pw.max_abs() == 0.0 {
                break;
            }
            acc = acc.add(&pw)?;
        }
        Ok(acc)
    }

    /// Divide by the axis-1 coordinate: shift columns down by one.  The
    /// constant column must vanish to round-off.
    pub fn div_axis1(&self) -> Result<BiJet> {
        if self.is_zero() {
            return Ok(BiJet::zero(self.tag0, self.tag1, self.hi0, self.hi1 - 1));
        }
        let scale = self.max_abs().max(1e-300);
        let mut b = self.clone();
        if b.lo1 <= 0 {
            let col = (0 - b.lo1) as usize;
            for row in b.coeffs.iter_mut() {
                let c = row[col];
                if c.norm() > 1e-8 * scale {
                    return Err(Error::Other(format!(
                        "axis-1 division leaves remainder {:.3e}",
                        c.norm() / scale
                    )));
                }
                row[col] = C::new(0.0, 0.0);
            }
        }
        b.lo1 -= 1;
        b.hi1 -= 1;
        Ok(b.tighten_lo1())
    }

    /// Restriction to axis-1 coordinate = 0 (the constant column).
    pub fn at_axis1_zero(&self, tag: u64) -> Jet {
        if self.is_zero() || self.lo1 > 0 {
            return Jet::zero(tag).truncated(self.hi0);
        }
        let col = (0 - self.lo1) as usize;
        let coeffs: Vec<C> = self
            .coeffs
            .iter()
            .map(|r| r.get(col).copied().unwrap_or(C::new(0.0, 0.0)))
            .collect();
        Jet::new(tag, self.lo0, coeffs).truncated(self.hi0)
    }

    /// Evaluate at (s, t) for tests.
    pub fn eval(&self, s: C, t: C) -> C {
        let mut acc = C::new(0.0, 0.0);
        for (i, row) in self.coeffs.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                acc += c * s.powi(self.lo0 + i as i32) * t.powi(self.lo1 + j as i32);
            }
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C {
        C::new(re, 0.0)
    }

    #[test]
    fn mul_and_eval() {
        // (s + t)^2 = s^2 + 2st + t^2
        let mut m = vec![vec![c(0.0); 3]; 3];
        m[1][0] = c(1.0);
        m[0][1] = c(1.0);
        let a = BiJet::new(1, 2, 0, 0, m);
        let p = a.mul(&a).unwrap();
        assert_eq!(p.coeff_or_zero(2, 0), c(1.0));
        assert_eq!(p.coeff_or_zero(1, 1), c(2.0));
        assert_eq!(p.coeff_or_zero(0, 2), c(1.0));
    }

    #[test]
    fn div_diff_recovers_quotient() {
        // s^2 - t^2 = (s - t)(s + t)
        let mut coeffs = vec![vec![c(0.0); 4]; 4];
        coeffs[2][0] = c(1.0);
        coeffs[0][2] = c(-1.0);
        let a = BiJet::new(1, 2, 0, 0, coeffs);
        let q = a.div_diff().unwrap();
        assert!((q.coeff_or_zero(1, 0) - c(1.0)).norm() < 1e-14);
        assert!((q.coeff_or_zero(0, 1) - c(1.0)).norm() < 1e-14);
        assert!(q.coeff_or_zero(1, 1).norm() < 1e-14);
    }

    #[test]
    fn diagonal_restriction() {
        // s t -> s^2 on the diagonal
        let mut m = vec![vec![c(0.0); 3]; 3];
        m[1][1] = c(1.0);
        let a = BiJet::new(1, 2, 0, 0, m);
        let d = a.diagonal(9);
        assert_eq!(d.coeff_or_zero(2), c(1.0));
    }

    #[test]
    fn deriv_axes() {
        // d/ds (s^2 t) = 2 s t; d/dt (s^2 t) = s^2
        let mut coeffs = vec![vec![c(0.0); 2]; 3];
        coeffs[2][1] = c(1.0);
        let a = BiJet::new(1, 2, 0, 0, coeffs);
        let ds = a.deriv(0);
        assert_eq!(ds.coeff_or_zero(1, 1), c(2.0));
        let dt = a.deriv(1);
        assert_eq!(dt.coeff_or_zero(2, 0), c(1.0));
    }

    #[test]
    fn from_jet_promotion() {
        let j = Jet::new(7, -1, vec![c(2.0), c(3.0)]);
        let b = BiJet::from_jet(&j, 8, 0, 3);
        assert_eq!(b.coeff_or_zero(-1, 0), c(2.0));
        assert_eq!(b.coeff_or_zero(0, 0), c(3.0));
        assert_eq!(b.coeff_or_zero(-1, 1), c(0.0));
        let b1 = BiJet::from_jet(&j, 8, 1, 3);
        assert_eq!(b1.coeff_or_zero(0, -1), c(2.0));
        assert_eq!(b1.coeff_or_zero(0, 0), c(3.0));
    }
}
