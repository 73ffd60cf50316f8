//! Monte Carlo oracle: Euler–Maruyama paths of the diffusion generated by
//! `Δ_G`, `dX = dB`, `dY = |X| dW`.
//!
//! Paths are grouped in blocks; block `b` draws from a ChaCha8 stream
//! `(seed, b)`, and block sums are reduced pairwise in block order, so results
//! do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erf;

use crate::error::{invalid, Error, Result};
use crate::kernel::{kernel_eval, KernelQuadrature};
use crate::model::{Grid, GridFunction, ModelParams, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MCConfig {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub start: Point,
    /// Paths per generator stream.
    #[serde(default = "default_block")]
    pub block: usize,
    /// Upper bound on `paths * steps`.
    #[serde(default = "default_budget")]
    pub max_work: f64,
}

fn default_block() -> usize {
    1024
}

fn default_budget() -> f64 {
    1e9
}

impl MCConfig {
    pub fn new(paths: usize, dt: f64, seed: u64, start: Point) -> Self {
        Self { paths, dt, seed, start, block: default_block(), max_work: default_budget() }
    }

    /// Steps and effective step size for horizon `t`.
    fn steps(&self, t: f64) -> Result<(usize, f64)> {
        if !(t > 0.0) {
            return Err(Error::NonPositiveTime(t));
        }
        if self.paths < 1000 {
            return Err(invalid(format!("need at least 1000 paths, got {}", self.paths)));
        }
        if !(self.dt > 0.0) || self.block == 0 {
            return Err(invalid("dt and block size must be positive"));
        }
        let steps = (t / self.dt - 1e-9).ceil().max(1.0) as usize;
        if self.paths as f64 * steps as f64 > self.max_work {
            return Err(invalid(format!(
                "{} paths x {steps} steps exceeds the work budget {:e}",
                self.paths, self.max_work
            )));
        }
        Ok((steps, t / steps as f64))
    }

    fn blocks(&self) -> Vec<(u64, usize, usize)> {
        (0..self.paths.div_ceil(self.block))
            .map(|b| (b as u64, b * self.block, self.block.min(self.paths - b * self.block)))
            .collect()
    }
}

/// A test function evaluated along paths.
pub trait Observable: Sync {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;
}

impl<F: Fn(&[f64], &[f64]) -> f64 + Sync> Observable for F {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self(x, y)
    }
}

/// Multilinear interpolation, zero outside the box.
impl Observable for GridFunction {
    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.sample(x, y).unwrap_or(0.0)
    }
}

/// Endpoints of every path of one block, at the requested step counts.
/// `levels[l]` aggregates `2^l` fine increments per step.
struct Walker<'a> {
    start: &'a Point,
    fine_steps: usize,
    fine_dt: f64,
    levels: usize,
}

impl Walker<'_> {
    /// Runs one path on every level with shared Brownian increments; returns
    /// `(x, y)` per level.
    fn run(&self, rng: &mut ChaCha8Rng, out: &mut [(Vec<f64>, Vec<f64>)]) {
        let (n, k) = (self.start.x.len(), self.start.y.len());
        for (x, y) in out.iter_mut() {
            x.clone_from(&self.start.x);
            y.clone_from(&self.start.y);
        }
        let mut acc_z = vec![vec![0.0; n]; self.levels];
        let mut acc_w = vec![vec![0.0; k]; self.levels];
        let sq = self.fine_dt.sqrt();
        let mut z = vec![0.0; n];
        let mut w = vec![0.0; k];
        for step in 0..self.fine_steps {
            for v in z.iter_mut().chain(w.iter_mut()) {
                *v = sq * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            }
            for l in 0..self.levels {
                for (a, v) in acc_z[l].iter_mut().zip(&z) {
                    *a += v;
                }
                for (a, v) in acc_w[l].iter_mut().zip(&w) {
                    *a += v;
                }
                if (step + 1) % (1 << l) == 0 {
                    let (x, y) = &mut out[l];
                    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for (yv, dw) in y.iter_mut().zip(&acc_w[l]) {
                        *yv += r * dw;
                    }
                    for (xv, dz) in x.iter_mut().zip(&acc_z[l]) {
                        *xv += dz;
                    }
                    acc_z[l].iter_mut().for_each(|v| *v = 0.0);
                    acc_w[l].iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
    }
}

fn pairwise(v: &[f64]) -> f64 {
    if v.len() <= 8 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise(a) + pairwise(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub paths: usize,
    pub dt: f64,
}

fn summarize(values: &[f64], dt: f64) -> Estimate {
    let n = values.len() as f64;
    let mean = pairwise(values) / n;
    let dev: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let var = if values.len() > 1 { pairwise(&dev) / (n - 1.0) } else { 0.0 };
    Estimate { mean, stderr: (var / n).sqrt(), paths: values.len(), dt }
}

/// Observable values at the endpoints for `levels` coupled step sizes
/// `dt_eff * 2^l`; `result[l][path]`.
fn endpoint_values<O: Observable + ?Sized>(
    phi: &O,
    t: f64,
    cfg: &MCConfig,
    params: &ModelParams,
    levels: usize,
) -> Result<Vec<Vec<f64>>> {
    cfg.start.check_dims(params)?;
    let (steps, dt) = cfg.steps(t)?;
    let fine_steps = steps << (levels - 1);
    let walker = Walker { start: &cfg.start, fine_steps, fine_dt: dt / (1 << (levels - 1)) as f64, levels };
    let blocks: Vec<Result<Vec<Vec<f64>>>> = cfg
        .blocks()
        .into_par_iter()
        .map(|(b, first, len)| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b);
            let mut ends = vec![(Vec::new(), Vec::new()); levels];
            let mut vals = vec![Vec::with_capacity(len); levels];
            for p in 0..len {
                walker.run(&mut rng, &mut ends);
                // Level order: coarsest (the configured dt) first.
                for (l, (x, y)) in ends.iter().rev().enumerate() {
                    let v = phi.eval(x, y);
                    if !v.is_finite() {
                        return Err(Error::PathNonFinite { path: first + p, x: x.clone(), y: y.clone() });
                    }
                    vals[l].push(v);
                }
            }
            Ok(vals)
        })
        .collect();
    let mut out = vec![Vec::with_capacity(cfg.paths); levels];
    for b in blocks {
        for (o, v) in out.iter_mut().zip(b?) {
            o.extend(v);
        }
    }
    Ok(out)
}

/// `E[phi(X_t, Y_t)]` from `cfg.start`, an estimate of `(S(t) phi)(start)`.
pub fn simulate_expectation<O: Observable + ?Sized>(
    phi: &O,
    t: f64,
    cfg: &MCConfig,
    params: &ModelParams,
) -> Result<Estimate> {
    let vals = endpoint_values(phi, t, cfg, params, 1)?;
    Ok(summarize(&vals[0], cfg.steps(t)?.1))
}

/// Estimates at `dt`, `dt/2` and `dt/4` driven by the same Brownian paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementReport {
    pub estimates: [Estimate; 3],
    /// `(e(dt) - e(dt/2)) / (e(dt/2) - e(dt/4))`, about 2 for a first-order bias.
    pub ratio: f64,
    /// Standard errors of the two paired differences.
    pub difference_stderr: [f64; 2],
}

pub fn dt_refinement<O: Observable + ?Sized>(
    phi: &O,
    t: f64,
    cfg: &MCConfig,
    params: &ModelParams,
) -> Result<RefinementReport> {
    let vals = endpoint_values(phi, t, cfg, params, 3)?;
    let dt = cfg.steps(t)?.1;
    let est = |l: usize| summarize(&vals[l], dt / (1 << l) as f64);
    let diff = |a: usize, b: usize| {
        let d: Vec<f64> = vals[a].iter().zip(&vals[b]).map(|(u, v)| u - v).collect();
        summarize(&d, dt)
    };
    let (d1, d2) = (diff(0, 1), diff(1, 2));
    Ok(RefinementReport {
        estimates: [est(0), est(1), est(2)],
        ratio: d1.mean / d2.mean,
        difference_stderr: [d1.stderr, d2.stderr],
    })
}

/// Endpoint histogram normalised by cell volume.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub density: GridFunction,
    pub hits: Vec<u64>,
    /// Hits per `x` cell whatever the `y` position.
    pub x_hits: Vec<u64>,
    pub paths: usize,
    pub escaped: usize,
    pub t: f64,
    pub start: Point,
}

impl Histogram {
    /// `∫ density`, equal to `1 - escaped / paths` up to rounding.
    pub fn mass(&self) -> f64 {
        self.hits.iter().sum::<u64>() as f64 / self.paths as f64
    }
}

fn x_cell(grid: &Grid, x: &[f64]) -> Option<usize> {
    locate(grid.x_axes().iter().zip(x))
}

fn cell_of(grid: &Grid, x: &[f64], y: &[f64]) -> Option<usize> {
    locate(grid.axes().zip(x.iter().chain(y)))
}

fn locate<'a>(pairs: impl Iterator<Item = (&'a crate::model::Axis, &'a f64)>) -> Option<usize> {
    let mut flat = 0;
    for (axis, &v) in pairs {
        let s = (v - axis.min) / axis.spacing();
        if !(s >= 0.0 && s < axis.count as f64) {
            return None;
        }
        flat = flat * axis.count + s as usize;
    }
    Some(flat)
}

pub fn density_histogram(t: f64, cfg: &MCConfig, params: &ModelParams, grid: &Grid) -> Result<Histogram> {
    cfg.start.check_dims(params)?;
    if grid.n() != params.n() || grid.k() != params.k() {
        return Err(Error::ShapeMismatch("grid does not match the model".into()));
    }
    let (len, x_len) = (grid.len(), grid.x_len());
    // Encode the x cell and the full cell (`x_len` and `len` when outside).
    let index = |x: &[f64], y: &[f64]| {
        let xc = x_cell(grid, x).unwrap_or(x_len);
        let c = cell_of(grid, x, y).unwrap_or(len);
        (xc * (len + 1) + c) as f64
    };
    let vals = endpoint_values(&index, t, cfg, params, 1)?;
    let mut hits = vec![0u64; len];
    let mut x_hits = vec![0u64; x_len];
    let mut escaped = 0;
    for v in &vals[0] {
        let code = *v as usize;
        let (xc, c) = (code / (len + 1), code % (len + 1));
        if c < len {
            hits[c] += 1;
        } else {
            escaped += 1;
        }
        if xc < x_len {
            x_hits[xc] += 1;
        }
    }
    let scale = 1.0 / (cfg.paths as f64 * grid.cell_volume());
    let density = GridFunction::new(grid.clone(), hits.iter().map(|h| *h as f64 * scale).collect())?;
    Ok(Histogram { density, hits, x_hits, paths: cfg.paths, escaped, t, start: cfg.start.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareReport {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Pearson test of the `x`-marginal histogram against the Gaussian law of
/// `X_t`. Cells with fewer than 5 expected hits are pooled with the paths
/// outside the `x` box into one bin.
pub fn x_marginal_chi_square(hist: &Histogram) -> Result<ChiSquareReport> {
    let grid = hist.density.grid();
    let s = (2.0 * hist.t).sqrt();
    let observed = &hist.x_hits;
    let n = hist.paths as f64;
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut rest_obs, mut rest_exp) = (n - observed.iter().sum::<u64>() as f64, n);
    let mut idx = vec![0usize; grid.n()];
    for (ix, obs) in observed.iter().enumerate() {
        let mut r = ix;
        for d in (0..grid.n()).rev() {
            idx[d] = r % grid.x_axes()[d].count;
            r /= grid.x_axes()[d].count;
        }
        let p: f64 = grid
            .x_axes()
            .iter()
            .zip(&idx)
            .zip(&hist.start.x)
            .map(|((a, &i), x0)| {
                let lo = a.min + i as f64 * a.spacing();
                0.5 * (erf((lo + a.spacing() - x0) / s) - erf((lo - x0) / s))
            })
            .product();
        let e = n * p;
        if e >= 5.0 {
            stat += (*obs as f64 - e).powi(2) / e;
            bins += 1;
            rest_exp -= e;
        } else {
            rest_obs += *obs as f64;
        }
    }
    if rest_exp >= 5.0 {
        stat += (rest_obs - rest_exp).powi(2) / rest_exp;
        bins += 1;
    }
    if bins < 2 {
        return Err(Error::InsufficientSamples { need: 2, got: bins });
    }
    let dof = bins - 1;
    let chi = ChiSquared::new(dof as f64).map_err(|e| invalid(e.to_string()))?;
    Ok(ChiSquareReport { statistic: stat, dof, p_value: 1.0 - chi.cdf(stat) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelComparison {
    /// Cells with at least `min_hits` hits.
    pub cells: usize,
    /// Cells where `|hist - K| > 3 sigma + margin * K`.
    pub violations: usize,
    /// Largest `|hist - K| / sigma`.
    pub worst_z: f64,
}

/// Cellwise comparison of a histogram with cell averages of the kernel
/// (3-point Gauss–Legendre per axis). `sigma` is the binomial standard error
/// of the cell density; `margin` is the relative allowance for the time-step
/// bias.
pub fn compare_with_kernel(
    hist: &Histogram,
    params: &ModelParams,
    quad: &KernelQuadrature,
    min_hits: u64,
    margin: f64,
) -> Result<KernelComparison> {
    const GL3: [(f64, f64); 3] = [(-0.774_596_669_241_483_4, 5.0 / 18.0), (0.0, 8.0 / 18.0), (0.774_596_669_241_483_4, 5.0 / 18.0)];
    let grid = hist.density.grid();
    let (n, k) = (grid.n(), grid.k());
    let d = n + k;
    let axes: Vec<_> = grid.axes().copied().collect();
    let vol = grid.cell_volume();
    let cells: Vec<usize> = (0..grid.len()).filter(|&f| hist.hits[f] >= min_hits).collect();
    let results: Vec<Result<(bool, f64)>> = cells
        .par_iter()
        .map(|&f| {
            let m = grid.multi_index(f);
            let mut avg = 0.0;
            let mut z = vec![0.0; d];
            for q in 0..3usize.pow(d as u32) {
                let mut w = 1.0;
                let mut r = q;
                for a in 0..d {
                    let (node, weight) = GL3[r % 3];
                    r /= 3;
                    z[a] = axes[a].node(m[a]) + 0.5 * axes[a].spacing() * node;
                    w *= weight;
                }
                let dy: Vec<f64> = z[n..].iter().zip(&hist.start.y).map(|(y, y0)| y - y0).collect();
                avg += w * kernel_eval(&z[..n], &hist.start.x, &dy, hist.t, params, quad)?;
            }
            let p = (avg * vol).clamp(0.0, 1.0);
            let sigma = (p * (1.0 - p) / hist.paths as f64).sqrt() / vol;
            let diff = (hist.density.values()[f] - avg).abs();
            Ok((diff > 3.0 * sigma + margin * avg, diff / sigma))
        })
        .collect();
    let mut out = KernelComparison { cells: cells.len(), violations: 0, worst_z: 0.0 };
    for r in results {
        let (bad, z) = r?;
        out.violations += bad as usize;
        out.worst_z = out.worst_z.max(z);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::Semigroup;

    fn cfg(paths: usize, dt: f64, x0: f64, y0: f64) -> MCConfig {
        MCConfig::new(paths, dt, 7, Point::new(vec![x0], vec![y0]).unwrap())
    }

    #[test]
    fn constants_and_martingale() {
        let p = ModelParams::reference();
        let c = cfg(4000, 0.01, 0.3, -0.2);
        let one = simulate_expectation(&|_: &[f64], _: &[f64]| 1.0, 1.0, &c, &p).unwrap();
        assert_eq!(one.mean, 1.0);
        assert_eq!(one.stderr, 0.0);
        let x = simulate_expectation(&|x: &[f64], _: &[f64]| x[0], 1.0, &c, &p).unwrap();
        assert!((x.mean - 0.3).abs() <= 3.0 * x.stderr, "{x:?}");
        let y = simulate_expectation(&|_: &[f64], y: &[f64]| y[0], 1.0, &c, &p).unwrap();
        assert!((y.mean + 0.2).abs() <= 3.0 * y.stderr, "{y:?}");
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let p = ModelParams::reference();
        let c = MCConfig { block: 100, ..cfg(2000, 0.05, 0.0, 0.0) };
        let f = |x: &[f64], y: &[f64]| (x[0] + y[0]).cos();
        let a = simulate_expectation(&f, 1.0, &c, &p).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| simulate_expectation(&f, 1.0, &c, &p).unwrap());
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
        let other = simulate_expectation(&f, 1.0, &MCConfig { seed: 8, ..c.clone() }, &p).unwrap();
        assert_ne!(a.mean, other.mean);
    }

    #[test]
    fn rejects_bad_configs_and_nan() {
        let p = ModelParams::reference();
        let one = |_: &[f64], _: &[f64]| 1.0;
        assert!(simulate_expectation(&one, 1.0, &cfg(10, 0.1, 0.0, 0.0), &p).is_err());
        assert!(simulate_expectation(&one, 0.0, &cfg(1000, 0.1, 0.0, 0.0), &p).is_err());
        let big = MCConfig { max_work: 1e3, ..cfg(1000, 0.1, 0.0, 0.0) };
        assert!(simulate_expectation(&one, 1.0, &big, &p).is_err());
        let nan = |x: &[f64], _: &[f64]| if x[0] > 1.0 { f64::NAN } else { 0.0 };
        assert!(matches!(
            simulate_expectation(&nan, 1.0, &cfg(1000, 0.1, 0.0, 0.0), &p),
            Err(Error::PathNonFinite { .. })
        ));
    }

    #[test]
    fn histogram_mass_and_mirror() {
        let p = ModelParams::reference();
        let g = Grid::cube(1, 1, 2.0, 16).unwrap();
        let h = density_histogram(1.0, &cfg(5000, 0.02, 0.5, 0.0), &p, &g).unwrap();
        assert_eq!(h.hits.iter().sum::<u64>() as usize + h.escaped, 5000);
        assert!((h.density.integral() - h.mass()).abs() < 1e-12);
        let m = density_histogram(1.0, &cfg(5000, 0.02, -0.5, 0.0), &p, &g).unwrap();
        // Mirrored x cells carry statistically equal counts.
        let mut chi = 0.0;
        let mut cells = 0;
        for f in 0..g.len() {
            let idx = g.multi_index(f);
            let mirror = g.flat_index(&[15 - idx[0], idx[1]]);
            let (a, b) = (h.hits[f] as f64, m.hits[mirror] as f64);
            if a + b >= 20.0 {
                chi += (a - b).powi(2) / (a + b);
                cells += 1;
            }
        }
        assert!(chi < cells as f64 + 5.0 * (2.0 * cells as f64).sqrt(), "{chi} over {cells}");
        let r = x_marginal_chi_square(&h).unwrap();
        assert!(r.p_value > 1e-3, "{r:?}");
    }

    #[test]
    fn agrees_with_semigroup() {
        let p = ModelParams::reference();
        let g = Grid::cube(1, 1, 6.0, 48).unwrap();
        let bump = |x: &[f64], y: &[f64]| (-(x[0] - 0.3).powi(2) - 0.5 * y[0] * y[0]).exp();
        let phi = GridFunction::from_fn(g.clone(), bump).unwrap();
        let out = Semigroup::spectral(p).apply(0.5, &phi).unwrap();
        let node = [24usize, 26];
        let (x0, y0) = (g.x_axes()[0].node(node[0]), g.y_axes()[0].node(node[1]));
        let est = simulate_expectation(&bump, 0.5, &cfg(20_000, 0.01, x0, y0), &p).unwrap();
        let exact = out.value_at_node(&node);
        assert!((est.mean - exact).abs() <= 3.0 * est.stderr + 0.01 * exact, "{est:?} vs {exact}");
    }
}
