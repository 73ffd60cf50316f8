//! Pointwise evaluation of the Grushin heat kernel
//!
//! ```text
//! K(x, x0, y; t) = (2 pi)^(-Q/2) ∫_{R^k} m(|xi|) e^{i xi.y} d xi,
//! m(r) = (r / sinh(rt))^(N/2) exp(-(r/2) [(|x|^2 + |x0|^2) coth(rt) - 2 x.x0 csch(rt)])
//! ```
//!
//! reduced to a one-dimensional radial integral (cosine transform for
//! `k = 1`, order-zero Hankel transform for `k = 2`) and integrated with
//! composite Gauss-Legendre panels.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{Grid, GridFunction, ModelParams};
use crate::special::{bessel_j0, gauss_legendre, ln_sinh, sphere_surface};

/// Quadrature policy for the radial frequency integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelQuadrature {
    /// Absolute accuracy target for `K`.
    pub abs_tol: f64,
    /// Below this value of `rt` the Mehler factor uses its series form.
    pub small_arg_threshold: f64,
    /// Multiplier on the panel width `min(1, pi / (2(|y|+1)), 8/c)`, where
    /// `c` is the exponential decay rate of the integrand.
    pub base_width: f64,
    pub nodes_per_panel: usize,
    /// Share of `abs_tol` granted to the truncated tail.
    pub tail_fraction: f64,
}

impl Default for KernelQuadrature {
    fn default() -> Self {
        Self {
            abs_tol: 1e-8,
            small_arg_threshold: 1e-4,
            base_width: 1.0,
            nodes_per_panel: 16,
            tail_fraction: 0.1,
        }
    }
}

impl KernelQuadrature {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) {
            return Err(invalid("abs_tol must be positive"));
        }
        if !(self.small_arg_threshold > 0.0) {
            return Err(invalid("small_arg_threshold must be positive"));
        }
        if !(self.base_width > 0.0 && self.base_width.is_finite()) {
            return Err(invalid("base_width must be positive"));
        }
        if self.nodes_per_panel < 4 {
            return Err(invalid("nodes_per_panel must be at least 4"));
        }
        if !(self.tail_fraction > 0.0 && self.tail_fraction <= 1.0) {
            return Err(invalid("tail_fraction must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Same policy with every panel halved.
    pub fn refined(&self) -> Self {
        Self { base_width: 0.5 * self.base_width, ..*self }
    }

    pub fn with_tol(&self, abs_tol: f64) -> Self {
        Self { abs_tol, ..*self }
    }
}

/// Arguments of one Mehler factor evaluation.
#[derive(Debug, Clone, Copy)]
pub struct MehlerArgs<'a> {
    /// Radial frequency `|xi|`.
    pub r: f64,
    pub t: f64,
    pub x: &'a [f64],
    pub x0: &'a [f64],
}

/// `ln m(r)` with the default small-argument threshold.
pub fn log_mehler_factor(a: &MehlerArgs) -> Result<f64> {
    log_mehler_factor_with(a, KernelQuadrature::default().small_arg_threshold)
}

pub fn log_mehler_factor_with(a: &MehlerArgs, small_arg_threshold: f64) -> Result<f64> {
    if !(a.t > 0.0) {
        return Err(Error::NonPositiveTime(a.t));
    }
    if !(a.r >= 0.0) {
        return Err(invalid(format!("radial frequency must be nonnegative, got {}", a.r)));
    }
    if a.x.len() != a.x0.len() {
        return Err(Error::ShapeMismatch("x and x0 differ in length".into()));
    }
    Ok(MehlerPair::new(a.x, a.x0).log_m(a.r, a.t, small_arg_threshold))
}

/// The geometric data of an `(x, x0)` pair that the Mehler factor depends on.
#[derive(Debug, Clone, Copy)]
pub(crate) struct MehlerPair {
    pub half_n: f64,
    /// `|x|^2 + |x0|^2`
    pub a_sum: f64,
    /// `|x - x0|^2`
    pub d2: f64,
}

impl MehlerPair {
    pub fn new(x: &[f64], x0: &[f64]) -> Self {
        let mut a_sum = 0.0;
        let mut d2 = 0.0;
        for (a, b) in x.iter().zip(x0) {
            a_sum += a * a + b * b;
            d2 += (a - b) * (a - b);
        }
        Self { half_n: 0.5 * x.len() as f64, a_sum, d2 }
    }

    /// `x . x0`
    pub fn dot(&self) -> f64 {
        0.5 * (self.a_sum - self.d2)
    }

    /// `ln m(r)`, using `a coth s - 2 b csch s = a tanh(s/2) + (a - 2b) csch s`.
    pub fn log_m(&self, r: f64, t: f64, small: f64) -> f64 {
        let s = r * t;
        if s < small {
            let log_ratio = -t.ln() - s * s / 6.0;
            let e = self.d2 / (2.0 * t) + r * r * t * (self.a_sum + self.dot()) / 6.0;
            self.half_n * log_ratio - e
        } else {
            let log_ratio = r.ln() - ln_sinh(s);
            let mut e = 0.5 * r * self.a_sum * (0.5 * s).tanh();
            if self.d2 > 0.0 {
                e += 0.5 * self.d2 * log_ratio.exp();
            }
            self.half_n * log_ratio - e
        }
    }

    /// Upper envelope of `m` that ignores the (nonnegative) `d2` term.
    pub fn log_envelope(&self, r: f64, t: f64) -> f64 {
        let s = r * t;
        let log_ratio = if s < 1e-4 { -t.ln() - s * s / 6.0 } else { r.ln() - ln_sinh(s) };
        self.half_n * log_ratio - 0.5 * r * self.a_sum * (0.5 * s).tanh()
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
type Rule = (Vec<f64>, Vec<f64>);

thread_local! {
    static GL_RULES: RefCell<HashMap<usize, Rule>> = RefCell::new(HashMap::new());
}

fn with_rule<R>(n: usize, f: impl FnOnce(&[f64], &[f64]) -> R) -> R {
    GL_RULES.with(|cache| {
        let mut cache = cache.borrow_mut();
        let (x, w) = cache.entry(n).or_insert_with(|| gauss_legendre(n));
        f(x, w)
    })
}

/// Radial quadrature nodes and weights for one `(x, x0, t)`, with the
/// Mehler factor and every constant folded into the weights, so that
/// `K(x, x0, y; t) = sum_i w_i osc(r_i |y|)`.
#[derive(Debug, Clone)]
pub struct RadialPlan {
    k: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    log_m: Vec<f64>,
    truncation: f64,
}

impl RadialPlan {
    /// Plan valid for every `|y| <= y_cap`.
    pub fn new(
        x: &[f64],
        x0: &[f64],
        t: f64,
        y_cap: f64,
        params: &ModelParams,
        q: &KernelQuadrature,
    ) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        if x.len() != params.n() || x0.len() != params.n() {
            return Err(Error::ShapeMismatch("x, x0 must have length N".into()));
        }
        if !(1..=2).contains(&params.k()) {
            return Err(invalid(format!("kernel evaluation supports k in {{1, 2}}, got {}", params.k())));
        }
        q.validate()?;
        Ok(Self::build(MehlerPair::new(x, x0), t, y_cap.abs(), params, q))
    }

    pub(crate) fn build(pair: MehlerPair, t: f64, y_cap: f64, params: &ModelParams, q: &KernelQuadrature) -> Self {
        let k = params.k();
        let n = params.n() as f64;
        let surface = sphere_surface(k);
        let norm = (2.0 * PI).powf(-0.5 * params.q() as f64);
        let radius = truncation_radius(&pair, t, params, q);

        let c = 0.5 * (n * t + pair.a_sum);
        let width = q.base_width * 1f64.min(PI / (2.0 * (y_cap + 1.0))).min(8.0 / c);
        let panels = (radius / width).ceil().max(1.0) as usize;
        let width = radius / panels as f64;

        let m = q.nodes_per_panel;
        let mut nodes = Vec::with_capacity(panels * m);
        let mut weights = Vec::with_capacity(panels * m);
        let mut log_m = Vec::with_capacity(panels * m);
        with_rule(m, |gx, gw| {
            for p in 0..panels {
                let mid = (p as f64 + 0.5) * width;
                for (xi, wi) in gx.iter().zip(gw) {
                    let r = mid + 0.5 * width * xi;
                    let lm = pair.log_m(r, t, q.small_arg_threshold);
                    let radial = if k == 1 { 1.0 } else { r };
                    nodes.push(r);
                    log_m.push(lm);
                    weights.push(norm * surface * 0.5 * width * wi * radial * lm.exp());
                }
            }
        });
        Self { k, nodes, weights, log_m, truncation: radius }
    }

    /// `K` at `|y| = y_abs`.
    pub fn eval(&self, y_abs: f64) -> f64 {
        if y_abs == 0.0 {
            return self.weights.iter().sum();
        }
        match self.k {
            1 => self.nodes.iter().zip(&self.weights).map(|(r, w)| w * (r * y_abs).cos()).sum(),
            _ => self.nodes.iter().zip(&self.weights).map(|(r, w)| w * bessel_j0(r * y_abs)).sum(),
        }
    }

    pub fn truncation_radius(&self) -> f64 {
        self.truncation
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub(crate) fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub(crate) fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Smallest `R` (on a 1.25-geometric ladder) whose tail bound
/// `S_k (4)^(N/2) ∫_R^inf r^(k-1+N/2) e^(-beta r) dr`, with
/// `beta = (N t + a_sum tanh(R t / 2)) / 2`, meets the target.
fn truncation_radius(pair: &MehlerPair, t: f64, params: &ModelParams, q: &KernelQuadrature) -> f64 {
    let n = params.n() as f64;
    let k = params.k() as f64;
    let alpha = k - 1.0 + 0.5 * n;
    let log_pref = sphere_surface(params.k()).ln() + 0.5 * n * 4f64.ln();
    let log_target = (q.tail_fraction * q.abs_tol).ln() + 0.5 * params.q() as f64 * (2.0 * PI).ln();
    // sinh(s) >= e^s / 4 needs s >= ln(2)/2.
    let mut r: f64 = (0.35 / t).max(1e-3);
    loop {
        let beta = 0.5 * (n * t + pair.a_sum * (0.5 * r * t).tanh());
        if beta * r >= 2.0 * alpha {
            // ∫_R^inf r^a e^(-b r) dr <= R^a e^(-b R) / (b - a/R) <= 2 R^a e^(-b R) / b
            let log_tail = log_pref + (2.0 / beta).ln() + alpha * r.ln() - beta * r;
            if log_tail < log_target {
                return r;
            }
        }
        r *= 1.25;
    }
}

/// `K(x, x0, y; t)`.
pub fn kernel_eval(
    x: &[f64],
    x0: &[f64],
    y: &[f64],
    t: f64,
    params: &ModelParams,
    q: &KernelQuadrature,
) -> Result<f64> {
    if y.len() != params.k() {
        return Err(Error::ShapeMismatch("y must have length k".into()));
    }
    let ya = norm(y);
    Ok(RadialPlan::new(x, x0, t, ya, params, q)?.eval(ya))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// `K(x, w, y - z; t)` at every grid node `(w, z)`.
pub fn kernel_row(
    x: &[f64],
    y: &[f64],
    t: f64,
    grid: &Grid,
    params: &ModelParams,
    q: &KernelQuadrature,
) -> Result<GridFunction> {
    if grid.n() != params.n() || grid.k() != params.k() || x.len() != params.n() || y.len() != params.k() {
        return Err(Error::ShapeMismatch("point and grid dimensions must match the model".into()));
    }
    // Largest |y - z| over the box.
    let y_cap = grid
        .y_axes()
        .iter()
        .zip(y)
        .map(|(a, v)| (v - a.min).abs().max((a.max - v).abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let zs = grid.y_points();
    let ws = grid.x_points();
    let rows: Vec<Result<Vec<f64>>> = ws
        .par_iter()
        .map(|w| {
            let plan = RadialPlan::new(x, w, t, y_cap, params, q)?;
            Ok(zs
                .iter()
                .map(|z| {
                    let d: f64 = y.iter().zip(z).map(|(a, b)| (a - b) * (a - b)).sum();
                    plan.eval(d.sqrt())
                })
                .collect())
        })
        .collect();
    let mut values = Vec::with_capacity(grid.len());
    for row in rows {
        values.extend(row?);
    }
    GridFunction::new(grid.clone(), values)
}

/// One quadrature node of the radial integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrandSample {
    pub r: f64,
    pub log_m: f64,
    /// Weighted contribution of this node to `K`.
    pub contribution: f64,
}

/// Quadrature nodes behind one `kernel_eval` call.
pub fn integrand_samples(
    x: &[f64],
    x0: &[f64],
    y: &[f64],
    t: f64,
    params: &ModelParams,
    q: &KernelQuadrature,
) -> Result<Vec<IntegrandSample>> {
    let ya = norm(y);
    let plan = RadialPlan::new(x, x0, t, ya, params, q)?;
    Ok(plan
        .nodes
        .iter()
        .zip(&plan.weights)
        .zip(&plan.log_m)
        .map(|((&r, &w), &log_m)| {
            let osc = if plan.k == 1 { (r * ya).cos() } else { bessel_j0(r * ya) };
            IntegrandSample { r, log_m, contribution: w * osc }
        })
        .collect())
}

/// `(2 pi t)^(-N/2) exp(-|x - x0|^2 / (2t))`, the `y`-marginal of `K`.
pub fn gaussian_marginal(x: &[f64], x0: &[f64], t: f64) -> f64 {
    let d2: f64 = x.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
    (2.0 * PI * t).powf(-0.5 * x.len() as f64) * (-d2 / (2.0 * t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(n: usize, k: usize) -> ModelParams {
        ModelParams::new(n, k, 3.0).unwrap()
    }

    #[test]
    fn small_r_limit_is_gaussian() {
        for &(x, x0, t) in &[(0.3, -0.2, 1.0), (1.5, 1.0, 0.25), (0.0, 2.0, 4.0)] {
            let lm = log_mehler_factor(&MehlerArgs { r: 1e-8, t, x: &[x], x0: &[x0] }).unwrap();
            let expect = -0.5 * t.ln() - (x - x0) * (x - x0) / (2.0 * t);
            assert!((lm - expect).abs() < 1e-12, "{lm} {expect}");
        }
    }

    #[test]
    fn origin_n2_is_ratio() {
        for &(r, t) in &[(0.5, 1.0), (3.0, 0.1), (1e-5, 2.0), (40.0, 1.0)] {
            let lm = log_mehler_factor(&MehlerArgs { r, t, x: &[0.0, 0.0], x0: &[0.0, 0.0] }).unwrap();
            let expect = (r / (r * t).sinh()).ln();
            assert!((lm - expect).abs() < 1e-12 * expect.abs().max(1.0));
        }
    }

    #[test]
    fn large_argument_branch() {
        let r = 50.0;
        let lm = log_mehler_factor(&MehlerArgs { r, t: 1.0, x: &[0.0], x0: &[0.0] }).unwrap();
        let expect = 0.5 * (r.ln() - 50.0 + 2f64.ln() - (-(-100f64).exp()).ln_1p());
        assert!((lm - expect).abs() <= 1e-12 * expect.abs());
        // sinh(50) is representable, so the naive form is an independent check.
        let naive = 0.5 * (r / 50f64.sinh()).ln();
        assert!((lm - naive).abs() <= 1e-12 * naive.abs());
    }

    #[test]
    fn series_branch_is_continuous() {
        let q = KernelQuadrature::default();
        let pair = MehlerPair::new(&[0.7], &[-0.4]);
        let t = 1.0;
        let below = pair.log_m(q.small_arg_threshold * 0.999_999, t, q.small_arg_threshold);
        let above = pair.log_m(q.small_arg_threshold * 1.000_001, t, q.small_arg_threshold);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_time() {
        let q = KernelQuadrature::default();
        assert!(matches!(kernel_eval(&[0.0], &[0.0], &[0.0], 0.0, &p(1, 1), &q), Err(Error::NonPositiveTime(_))));
        assert!(log_mehler_factor(&MehlerArgs { r: 1.0, t: -1.0, x: &[0.0], x0: &[0.0] }).is_err());
    }

    // For N = 2, k = 1, x = x0 = 0: ∫_0^inf r cos(a r) / sinh(b r) dr
    // = (pi^2 / (4 b^2)) sech^2(pi a / (2b)), so K = sech^2(pi y / (2t)) / (8 t^2).
    #[test]
    fn closed_form_at_origin_n2() {
        let q = KernelQuadrature::default().with_tol(1e-12);
        for &(y, t) in &[(0.0, 1.0), (0.7, 1.0), (2.0, 0.5), (-3.0, 2.0)] {
            let k = kernel_eval(&[0.0, 0.0], &[0.0, 0.0], &[y], t, &p(2, 1), &q).unwrap();
            let expect = (PI * y / (2.0 * t)).cosh().powi(-2) / (8.0 * t * t);
            assert!((k - expect).abs() < 1e-11, "y={y} t={t}: {k} vs {expect}");
        }
    }

    #[test]
    fn y_marginal_matches_gaussian() {
        let q = KernelQuadrature::default();
        let params = p(1, 1);
        for &(x, x0, t) in &[(0.0, 0.0, 1.0), (0.5, -0.3, 0.5), (1.0, 1.2, 2.0)] {
            // Trapezoid over y on a wide window; K decays exponentially in |y|.
            let h = 0.02;
            let ymax = 40.0;
            let mut s = 0.5 * kernel_eval(&[x], &[x0], &[0.0], t, &params, &q).unwrap();
            let mut j = 1;
            while j as f64 * h <= ymax {
                s += kernel_eval(&[x], &[x0], &[j as f64 * h], t, &params, &q).unwrap();
                j += 1;
            }
            let integral = 2.0 * h * s;
            let expect = gaussian_marginal(&[x], &[x0], t);
            assert!((integral - expect).abs() <= 1e-6 * expect, "{integral} {expect}");
        }
        let at_origin = gaussian_marginal(&[0.0], &[0.0], 1.0);
        assert!((at_origin - 0.398_942_280_4).abs() < 1e-10);
    }

    #[test]
    fn refinement_changes_less_than_tolerance() {
        let q = KernelQuadrature::default();
        let params = p(1, 1);
        for &(x, x0, y, t) in &[(0.2, 0.1, 0.3, 1.0), (2.0, -1.0, 3.0, 0.5), (0.0, 0.0, 5.0, 4.0)] {
            let a = kernel_eval(&[x], &[x0], &[y], t, &params, &q).unwrap();
            let b = kernel_eval(&[x], &[x0], &[y], t, &params, &q.refined()).unwrap();
            assert!((a - b).abs() < q.abs_tol);
        }
    }

    #[test]
    fn k2_kernel_integrates_to_marginal() {
        // Radial y-integration: ∫ K dy = 2 pi ∫_0^inf K(rho) rho d rho.
        let q = KernelQuadrature::default();
        let params = p(1, 2);
        let (x, x0, t) = (0.4, -0.2, 1.0);
        let (gx, gw) = gauss_legendre(32);
        let mut total = 0.0;
        let width = 0.25;
        for panel in 0..120 {
            for (u, w) in gx.iter().zip(&gw) {
                let rho = (panel as f64 + 0.5 + 0.5 * u) * width;
                let k = kernel_eval(&[x], &[x0], &[rho, 0.0], t, &params, &q).unwrap();
                total += 2.0 * PI * rho * k * 0.5 * width * w;
            }
        }
        let expect = gaussian_marginal(&[x], &[x0], t);
        assert!((total - expect).abs() < 1e-6 * expect, "{total} {expect}");
    }

    #[test]
    fn row_matches_pointwise_and_is_positive() {
        let params = p(1, 1);
        let q = KernelQuadrature::default();
        let grid = Grid::cube(1, 1, 3.0, 12).unwrap();
        let row = kernel_row(&[0.25], &[-0.5], 0.7, &grid, &params, &q).unwrap();
        assert!(row.min() > 0.0);
        for (f, v) in row.values().iter().enumerate() {
            let ix = f / grid.y_len();
            let iy = f % grid.y_len();
            let w = grid.x_axes()[0].node(ix);
            let z = grid.y_axes()[0].node(iy);
            let direct = kernel_eval(&[0.25], &[w], &[-0.5 - z], 0.7, &params, &q).unwrap();
            assert!((v - direct).abs() < 1e-12 + 1e-9 * direct);
        }
    }

    #[test]
    fn integrand_dump_sums_to_kernel() {
        let params = p(1, 1);
        let q = KernelQuadrature::default();
        let s = integrand_samples(&[0.5], &[0.2], &[1.0], 1.0, &params, &q).unwrap();
        let total: f64 = s.iter().map(|e| e.contribution).sum();
        let k = kernel_eval(&[0.5], &[0.2], &[1.0], 1.0, &params, &q).unwrap();
        assert!((total - k).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[0].r < w[1].r));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn symmetric_in_x_and_even_in_y(
            x in -2.0f64..2.0, x0 in -2.0f64..2.0, y in -3.0f64..3.0, t in 0.2f64..3.0,
        ) {
            let params = p(1, 1);
            let q = KernelQuadrature::default();
            let a = kernel_eval(&[x], &[x0], &[y], t, &params, &q).unwrap();
            let b = kernel_eval(&[x0], &[x], &[y], t, &params, &q).unwrap();
            let c = kernel_eval(&[x], &[x0], &[-y], t, &params, &q).unwrap();
            prop_assert!(a > 0.0);
            prop_assert!((a - b).abs() <= 10.0 * q.abs_tol);
            prop_assert!((a - c).abs() <= 10.0 * q.abs_tol);
        }

        #[test]
        fn scaling_identity(
            x in -1.5f64..1.5, x0 in -1.5f64..1.5, y in -2.0f64..2.0, t in 0.3f64..2.0,
            big in proptest::bool::ANY,
        ) {
            let params = p(1, 1);
            let q = KernelQuadrature::default();
            let l: f64 = if big { 2.0 } else { 0.5 };
            let a = kernel_eval(&[l * x], &[l * x0], &[l * l * y], l * l * t, &params, &q).unwrap();
            let b = kernel_eval(&[x], &[x0], &[y], t, &params, &q).unwrap();
            prop_assert!((a * l.powi(3) - b).abs() <= 10.0 * q.abs_tol);
        }
    }
}
