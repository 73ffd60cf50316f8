//! Decreasing rearrangements and Lorentz (semi)norms of grid functions.
//!
//! A grid function is a simple function (constant on cells), so its
//! rearrangement is an exact step function and every quantity below is
//! evaluated without sampling error.
//!
//! Conventions, for `1 < p < inf`, `1 <= q < inf`:
//!
//! ```text
//! ||f||*_(p,q) = [ (q/p) ∫ (t^(1/p) f*(t))^q  dt/t ]^(1/q)    ||f||*_(p,inf) = sup t^(1/p) f*(t)
//! ||f||_(p,q)  = [ (q/p) ∫ (t^(1/p) f**(t))^q dt/t ]^(1/q)    ||f||_(p,inf)  = sup t^(1/p) f**(t)
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Axis, Grid, GridFunction};
use crate::special::gauss_legendre;

/// Lorentz exponents `(p, q)` with `p in (1, inf]`, `q in [1, inf]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LorentzIndex {
    p: f64,
    q: f64,
}

impl LorentzIndex {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 1.0) {
            return Err(invalid(format!("Lorentz index needs p > 1, got {p}")));
        }
        if !(q >= 1.0) {
            return Err(invalid(format!("Lorentz index needs q >= 1, got {q}")));
        }
        Ok(Self { p, q })
    }

    /// Marcinkiewicz (weak-`L^p`) index `(p, inf)`.
    pub fn weak(p: f64) -> Result<Self> {
        Self::new(p, f64::INFINITY)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Conjugate exponent `p / (p - 1)`.
    pub fn p_conjugate(&self) -> f64 {
        if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// `f*` as a right-continuous step function: value `values[i]` on
/// `[ends[i-1], ends[i])` with `ends[-1] = 0`, and 0 after the last end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RearrangementProfile {
    ends: Vec<f64>,
    values: Vec<f64>,
    /// `∫_0^{ends[i]} f*`
    cumulative: Vec<f64>,
}

/// Exact decreasing rearrangement of `|f|`.
pub fn rearrange(f: &GridFunction) -> RearrangementProfile {
    let mut v: Vec<f64> = f.values().iter().map(|a| a.abs()).filter(|a| *a > 0.0).collect();
    v.sort_unstable_by(|a, b| b.total_cmp(a));
    RearrangementProfile::from_sorted(&v, f.grid().cell_volume())
}

impl RearrangementProfile {
    /// From values sorted in decreasing order, each carrying measure `cell`.
    fn from_sorted(sorted: &[f64], cell: f64) -> Self {
        let mut ends = Vec::new();
        let mut values = Vec::new();
        let mut count = 0usize;
        let mut i = 0;
        while i < sorted.len() {
            let v = sorted[i];
            let mut j = i;
            while j < sorted.len() && sorted[j] == v {
                j += 1;
            }
            count += j - i;
            ends.push(count as f64 * cell);
            values.push(v);
            i = j;
        }
        let mut cumulative = Vec::with_capacity(ends.len());
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (e, v) in ends.iter().zip(&values) {
            acc += v * (e - prev);
            cumulative.push(acc);
            prev = *e;
        }
        Self { ends, values, cumulative }
    }

    /// Step representation from explicit breakpoints; `values` must be
    /// positive and nonincreasing, `ends` strictly increasing.
    pub fn from_steps(ends: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ends.len() != values.len() {
            return Err(Error::ShapeMismatch("ends and values differ in length".into()));
        }
        let ok_t = ends.windows(2).all(|w| w[0] < w[1]) && ends.first().is_none_or(|e| *e > 0.0);
        let ok_v = values.windows(2).all(|w| w[0] >= w[1]) && values.iter().all(|v| *v > 0.0);
        if !ok_t || !ok_v {
            return Err(invalid("profile must have increasing ends and positive nonincreasing values"));
        }
        let mut out = Self { ends, values, cumulative: Vec::new() };
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (e, v) in out.ends.iter().zip(&out.values) {
            acc += v * (e - prev);
            out.cumulative.push(acc);
            prev = *e;
        }
        Ok(out)
    }

    pub fn ends(&self) -> &[f64] {
        &self.ends
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Measure of the support of `f`.
    pub fn total_measure(&self) -> f64 {
        self.ends.last().copied().unwrap_or(0.0)
    }

    /// `∫ |f|`.
    pub fn l1(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    fn segment(&self, t: f64) -> usize {
        self.ends.partition_point(|e| *e <= t)
    }

    /// `f*(t)` for `t >= 0`.
    pub fn f_star(&self, t: f64) -> f64 {
        self.values.get(self.segment(t)).copied().unwrap_or(0.0)
    }

    /// `f**(t) = (1/t) ∫_0^t f*`.
    pub fn f_star_star(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(invalid(format!("f** needs t > 0, got {t}")));
        }
        let i = self.segment(t);
        let (start, before) = if i == 0 { (0.0, 0.0) } else { (self.ends[i - 1], self.cumulative[i - 1]) };
        let v = self.values.get(i).copied().unwrap_or(0.0);
        Ok((before + v * (t - start)) / t)
    }

    /// Measure of `{f* > s}`.
    pub fn distribution(&self, s: f64) -> f64 {
        let i = self.values.partition_point(|v| *v > s);
        if i == 0 {
            0.0
        } else {
            self.ends[i - 1]
        }
    }

    /// `sup_t t^(1/p) f*(t)`, attained at the right end of a step.
    pub fn weak_seminorm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.first().copied().unwrap_or(0.0);
        }
        self.ends
            .iter()
            .zip(&self.values)
            .map(|(e, v)| e.powf(1.0 / p) * v)
            .fold(0.0, f64::max)
    }

    /// `sup_t t^(1/p) f**(t)`. On each step `t^(1/p) f**` has the form
    /// `t^(1/p - 1)(A + v t)` with `A >= 0`, whose only critical point is a
    /// minimum, so the supremum sits at a breakpoint.
    pub fn weak_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.first().copied().unwrap_or(0.0);
        }
        self.ends
            .iter()
            .zip(&self.cumulative)
            .map(|(e, c)| e.powf(1.0 / p - 1.0) * c)
            .fold(0.0, f64::max)
    }

    /// `||f||*_(p,q)`.
    pub fn seminorm(&self, idx: LorentzIndex) -> f64 {
        let (p, q) = (idx.p, idx.q);
        if q.is_infinite() {
            return self.weak_seminorm(p);
        }
        if p.is_infinite() {
            // (q/p) -> 0 while the integral diverges; only f = 0 has a finite value.
            return if self.is_zero() { 0.0 } else { f64::INFINITY };
        }
        let e = q / p;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for (t, v) in self.ends.iter().zip(&self.values) {
            acc += v.powf(q) * (t.powf(e) - prev);
            prev = t.powf(e);
        }
        acc.powf(1.0 / q)
    }

    /// `||f||_(p,q)`.
    pub fn norm(&self, idx: LorentzIndex) -> f64 {
        let (p, q) = (idx.p, idx.q);
        if q.is_infinite() {
            return self.weak_norm(p);
        }
        if self.is_zero() {
            return 0.0;
        }
        if p.is_infinite() {
            return f64::INFINITY;
        }
        // ∫ t^(q/p - 1 - q) (A + v t)^q dt per step, with A = C_{i-1} - v T_{i-1}.
        let mut total = 0.0;
        let mut start = 0.0;
        let mut before = 0.0;
        for ((&end, &v), &cum) in self.ends.iter().zip(&self.values).zip(&self.cumulative) {
            let a = (before - v * start).max(0.0);
            total += if start == 0.0 {
                v.powf(q) * (p / q) * end.powf(q / p)
            } else {
                step_integral(a, v, start, end, p, q)
            };
            start = end;
            before = cum;
        }
        // Tail: f** = C / t beyond the support.
        total += before.powf(q) * start.powf(q / p - q) / (q - q / p);
        ((q / p) * total).powf(1.0 / q)
    }

    /// Sampled `(t, f*(t), f**(t))` at each breakpoint.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        self.ends
            .iter()
            .zip(&self.values)
            .zip(&self.cumulative)
            .map(|((t, v), c)| (*t, *v, c / t))
            .collect()
    }
}

/// `∫_s^e t^(q/p - 1 - q) (a + v t)^q dt` with `0 < s < e`.
fn step_integral(a: f64, v: f64, s: f64, e: f64, p: f64, q: f64) -> f64 {
    let base = q / p - q;
    if q.fract() == 0.0 && q <= 16.0 {
        // Binomial expansion: every term integrates in closed form.
        let qi = q as u32;
        let mut sum = 0.0;
        let mut binom = 1.0;
        for j in 0..=qi {
            if j > 0 {
                binom *= (qi - j + 1) as f64 / j as f64;
            }
            let ex = base + j as f64;
            let coeff = binom * a.powi((qi - j) as i32) * v.powi(j as i32);
            if coeff == 0.0 {
                continue;
            }
            sum += coeff * if ex.abs() < 1e-14 { (e / s).ln() } else { (e.powf(ex) - s.powf(ex)) / ex };
        }
        sum
    } else {
        // Smooth in u = ln t; Gauss-Legendre on subintervals of ratio <= e.
        let (gx, gw) = gauss_legendre(24);
        let (lo, hi) = (s.ln(), e.ln());
        let pieces = (hi - lo).ceil().max(1.0) as usize;
        let width = (hi - lo) / pieces as f64;
        let mut sum = 0.0;
        for k in 0..pieces {
            let mid = lo + (k as f64 + 0.5) * width;
            for (x, w) in gx.iter().zip(&gw) {
                let u = mid + 0.5 * width * x;
                let t = u.exp();
                sum += 0.5 * width * w * t.powf(base) * (a + v * t).powf(q);
            }
        }
        sum
    }
}

/// `f**` as a callable.
pub struct Averaged<'a> {
    profile: &'a RearrangementProfile,
}

impl Averaged<'_> {
    pub fn eval(&self, t: f64) -> Result<f64> {
        self.profile.f_star_star(t)
    }
}

pub fn averaged(profile: &RearrangementProfile) -> Averaged<'_> {
    Averaged { profile }
}

pub fn lorentz_norm(f: &GridFunction, idx: LorentzIndex) -> f64 {
    rearrange(f).norm(idx)
}

pub fn lorentz_seminorm(f: &GridFunction, idx: LorentzIndex) -> f64 {
    rearrange(f).seminorm(idx)
}

/// `f(l x, l^2 y)` carried exactly onto the grid shrunk by `l` in `x` and
/// `l^2` in `y` (same node values, cell volume scaled by `l^-Q`).
pub fn dilate_exact(f: &GridFunction, lambda: f64) -> Result<GridFunction> {
    if !(lambda > 0.0) {
        return Err(invalid("lambda must be positive"));
    }
    let g = f.grid();
    let scale = |a: &Axis, s: f64| Axis::new(a.min / s, a.max / s, a.count);
    let xs = g.x_axes().iter().map(|a| scale(a, lambda)).collect::<Result<Vec<_>>>()?;
    let ys = g.y_axes().iter().map(|a| scale(a, lambda * lambda)).collect::<Result<Vec<_>>>()?;
    GridFunction::new(Grid::new(xs, ys)?, f.values().to_vec())
}

/// Both sides of the generalised Hölder inequality for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    pub r: f64,
    pub d3: f64,
    /// `||fg||_(r, d3)`
    pub lhs: f64,
    /// `||f||_(p1, d1) ||g||_(p2, d2)`
    pub rhs: f64,
    pub ratio: f64,
}

/// `||fg||_(r,d3)` against `||f||_(p1,d1) ||g||_(p2,d2)` with
/// `1/r = 1/p1 + 1/p2 < 1` and the smallest admissible `d3 >= 1`.
pub fn holder_check(f: &GridFunction, g: &GridFunction, p1: f64, p2: f64, d1: f64, d2: f64) -> Result<HolderReport> {
    if !(p1 > 1.0 && p2 > 1.0 && p1.is_finite() && p2.is_finite()) {
        return Err(Error::IndexConstraint(format!("need 1 < p1, p2 < inf, got {p1}, {p2}")));
    }
    let inv_r = 1.0 / p1 + 1.0 / p2;
    if inv_r >= 1.0 {
        return Err(Error::IndexConstraint(format!("need 1/p1 + 1/p2 < 1, got {inv_r}")));
    }
    if !(d1 >= 1.0 && d2 >= 1.0) {
        return Err(Error::IndexConstraint("need d1, d2 >= 1".into()));
    }
    let r = 1.0 / inv_r;
    let d3 = (1.0 / (1.0 / d1 + 1.0 / d2)).max(1.0);
    let h = f.mul(g)?;
    let lhs = lorentz_norm(&h, LorentzIndex::new(r, d3)?);
    let rhs = lorentz_norm(f, LorentzIndex::new(p1, d1)?) * lorentz_norm(g, LorentzIndex::new(p2, d2)?);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(HolderReport { r, d3, lhs, rhs, ratio })
}

/// Both sides of `||fg||_1 <= ||f||_(p,q1) ||g||_(p',q2)`.
pub fn holder_l1_check(f: &GridFunction, g: &GridFunction, p: f64, q1: f64, q2: f64) -> Result<HolderReport> {
    let i1 = LorentzIndex::new(p, q1)?;
    let i2 = LorentzIndex::new(i1.p_conjugate(), q2)?;
    let lhs = f.mul(g)?.lebesgue_norm(1.0);
    let rhs = lorentz_norm(f, i1) * lorentz_norm(g, i2);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(HolderReport { r: 1.0, d3: 1.0, lhs, rhs, ratio })
}

/// Both sides of `|| |h|^q ||_(p,inf) <= p/(p-1) ||h||_(pq,inf)^q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerInequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

pub fn power_inequality_check(h: &GridFunction, p: f64, q: f64) -> Result<PowerInequalityReport> {
    if !(p > 1.0 && p.is_finite()) || !(q >= 1.0 && q.is_finite()) {
        return Err(Error::IndexConstraint(format!("need 1 < p < inf and 1 <= q < inf, got {p}, {q}")));
    }
    let hq = h.map(|v| v.abs().powf(q))?;
    let lhs = lorentz_norm(&hq, LorentzIndex::weak(p)?);
    let rhs = p / (p - 1.0) * lorentz_norm(h, LorentzIndex::weak(p * q)?).powf(q);
    Ok(PowerInequalityReport { lhs, rhs, holds: lhs <= rhs + 1e-12 * rhs.max(1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::unit_ball_volume;
    use proptest::prelude::*;

    fn indicator(measure_cells: usize, amp: f64) -> GridFunction {
        let g = Grid::cube(1, 1, 2.0, 8).unwrap(); // cell volume 1/4
        let mut v = vec![0.0; g.len()];
        v.iter_mut().take(measure_cells).for_each(|a| *a = amp);
        GridFunction::new(g, v).unwrap()
    }

    #[test]
    fn two_level_function() {
        let f = indicator(8, 3.0);
        let pr = rearrange(&f);
        assert_eq!(pr.ends(), &[2.0]);
        assert_eq!(pr.f_star(0.0), 3.0);
        assert_eq!(pr.f_star(1.999), 3.0);
        assert_eq!(pr.f_star(2.0), 0.0);
        assert!(rearrange(&GridFunction::zeros(f.grid().clone())).is_zero());
    }

    #[test]
    fn averaged_indicator() {
        let f = indicator(12, 1.0); // measure 3
        let pr = rearrange(&f);
        let ff = averaged(&pr);
        for &t in &[0.5, 1.0, 3.0, 4.0, 30.0] {
            assert!((ff.eval(t).unwrap() - (3.0 / t).min(1.0)).abs() < 1e-15);
        }
        assert!(ff.eval(0.0).is_err());
        let c = rearrange(&indicator(12, 2.5));
        assert!((c.f_star_star(2.0).unwrap() - 2.5).abs() < 1e-15);
        assert!((c.f_star_star(6.0).unwrap() - 2.5 * 3.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_weak_norm() {
        let f = indicator(32, 1.0); // measure 8
        let idx = LorentzIndex::weak(2.0).unwrap();
        let expect = 8f64.sqrt();
        assert!((lorentz_norm(&f, idx) - expect).abs() < 1e-12);
        assert!((lorentz_seminorm(&f, idx) - expect).abs() < 1e-12);
        // Brute-force supremum over a dense t sweep.
        let pr = rearrange(&f);
        let brute = (1..20000)
            .map(|i| {
                let t = i as f64 * 1e-3;
                t.sqrt() * pr.f_star_star(t).unwrap()
            })
            .fold(0.0, f64::max);
        assert!(brute <= expect + 1e-12 && brute > expect - 1e-3);
    }

    #[test]
    fn indicator_strong_norms_closed_form() {
        // Indicator of measure m: ||.||*_(p,q) = m^(1/p) for every q.
        let f = indicator(20, 1.0); // m = 5
        for &(p, q) in &[(2.0, 1.0), (3.0, 2.0), (1.5, 2.5), (4.0, 3.0)] {
            let idx = LorentzIndex::new(p, q).unwrap();
            let semi = lorentz_seminorm(&f, idx);
            assert!((semi - 5f64.powf(1.0 / p)).abs() < 1e-12, "{p} {q}");
            // Norm: (q/p)[ (p/q) m^(q/p) + m^q m^(q/p - q) / (q - q/p) ]
            let m: f64 = 5.0;
            let norm = ((q / p) * ((p / q) * m.powf(q / p) + m.powf(q / p) / (q - q / p))).powf(1.0 / q);
            assert!((lorentz_norm(&f, idx) - norm).abs() < 1e-11 * norm);
        }
    }

    #[test]
    fn power_law_seminorm_is_flat() {
        // f(z) = |z|^(-Q/p) on a ball in R^3 (N = 1, k = 1 is 2-d; use the
        // 3-d cube with N = 1, k = 2 as the measure space).
        let p = 3.0;
        let g = Grid::cube(1, 2, 4.0, 96).unwrap();
        let f = GridFunction::from_fn(g, |x, y| {
            let r = (x[0] * x[0] + y[0] * y[0] + y[1] * y[1]).sqrt();
            if r <= 4.0 {
                r.powf(-3.0 / p)
            } else {
                0.0
            }
        })
        .unwrap();
        let pr = rearrange(&f);
        let omega = unit_ball_volume(3);
        // Distribution of |z|^-a on the ball of radius 4: omega s^-p for s >= 4^-a.
        let total = omega * 64.0;
        let mut worst: f64 = 0.0;
        for &t in &[0.5, 1.0, 2.0, 5.0, 10.0, 20.0] {
            assert!(t < 0.5 * total);
            let val = t.powf(1.0 / p) * pr.f_star(t);
            worst = worst.max((val / omega.powf(1.0 / p) - 1.0).abs());
        }
        assert!(worst < 0.02, "{worst}");
    }

    #[test]
    fn equimeasurable() {
        let g = Grid::cube(1, 1, 2.0, 10).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x, y| (3.0 * x[0]).sin() * y[0]).unwrap();
        let pr = rearrange(&f);
        for &s in &[0.0, 0.1, 0.5, 1.0, 1.7] {
            let direct = f.values().iter().filter(|v| v.abs() > s).count() as f64 * g.cell_volume();
            assert_eq!(pr.distribution(s), direct);
        }
    }

    #[test]
    fn exact_dilation_law() {
        let g = Grid::cube(1, 1, 4.0, 32).unwrap();
        let f = GridFunction::from_fn(g, |x, y| (-(x[0] * x[0]) - y[0].abs()).exp()).unwrap();
        let idx = LorentzIndex::weak(3.0).unwrap();
        let fl = dilate_exact(&f, 2.0).unwrap();
        let ratio = lorentz_norm(&fl, idx) / lorentz_norm(&f, idx);
        assert!((ratio - 2f64.powf(-1.0)).abs() < 1e-12);
    }

    #[test]
    fn holder_three_factor_case() {
        let g = Grid::cube(1, 1, 3.0, 24).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x, y| (-(x[0] * x[0]) - y[0] * y[0]).exp()).unwrap();
        let h = GridFunction::from_fn(g, |x, y| 1.0 / (1.0 + x[0].abs() + y[0] * y[0])).unwrap();
        let rep = holder_l1_check(&f, &h, 2.0, 1.0, f64::INFINITY).unwrap();
        assert!(rep.lhs <= rep.rhs);
        assert!(holder_check(&f, &h, 1.5, 2.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn holder_indicator_ratio_independent_of_measure() {
        let ratios: Vec<f64> = [4usize, 16, 36]
            .iter()
            .map(|&m| {
                let f = indicator(m, 1.0);
                holder_check(&f, &f, 3.0, 4.0, 2.0, 2.0).unwrap().ratio
            })
            .collect();
        for r in &ratios {
            assert!((r - ratios[0]).abs() < 1e-12 * ratios[0]);
        }
    }

    #[test]
    fn power_inequality_on_indicator_and_zero() {
        let f = indicator(10, 2.0);
        let rep = power_inequality_check(&f, 2.0, 3.0).unwrap();
        // |h|^3 = 8 on measure 2.5: lhs = 8 * 2.5^(1/2); rhs = 2 * (2 * 2.5^(1/6))^3.
        assert!((rep.lhs - 8.0 * 2.5f64.sqrt()).abs() < 1e-12);
        assert!((rep.rhs - 2.0 * 8.0 * 2.5f64.sqrt()).abs() < 1e-12);
        assert!(rep.holds);
        let z = power_inequality_check(&GridFunction::zeros(f.grid().clone()), 2.0, 2.0).unwrap();
        assert_eq!((z.lhs, z.rhs), (0.0, 0.0));
    }

    fn random_function(seed: &[f64]) -> GridFunction {
        let g = Grid::cube(1, 1, 1.0, 6).unwrap();
        GridFunction::new(g, seed.to_vec()).unwrap()
    }

    proptest! {
        #[test]
        fn sandwich_and_monotonicity(
            vals in proptest::collection::vec(-5.0f64..5.0, 36),
            p in 1.1f64..8.0,
            q in prop_oneof![Just(f64::INFINITY), 1.0f64..6.0],
            c in -3.0f64..3.0,
        ) {
            let f = random_function(&vals);
            let idx = LorentzIndex::new(p, q).unwrap();
            let pr = rearrange(&f);
            let (semi, norm) = (pr.seminorm(idx), pr.norm(idx));
            prop_assert!(semi <= norm * (1.0 + 1e-12));
            prop_assert!(norm <= p / (p - 1.0) * semi * (1.0 + 1e-12));
            prop_assert!((lorentz_norm(&f.scale(c), idx) - c.abs() * norm).abs() <= 1e-12 * norm.max(1.0));
            let bigger = f.map(|v| v.abs() + 0.5).unwrap();
            prop_assert!(lorentz_norm(&bigger, LorentzIndex::weak(p).unwrap()) >= pr.weak_norm(p));
            for (i, (t, fs, fss)) in pr.table().into_iter().enumerate() {
                prop_assert!(fss >= fs * (1.0 - 1e-14));
                prop_assert!(t > 0.0 && i < pr.ends().len());
            }
        }

        #[test]
        fn power_inequality_holds(vals in proptest::collection::vec(-5.0f64..5.0, 36), p in 1.1f64..6.0, q in 1.0f64..4.0) {
            let f = random_function(&vals);
            prop_assert!(power_inequality_check(&f, p, q).unwrap().holds);
        }
    }
}
