use std::collections::HashMap;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{run_suite, CheckSpec, Measured, Suite};
use crate::error::{invalid, Result};
use crate::kernel::{gaussian_marginal, kernel_eval, kernel_row, KernelQuadrature};
use crate::lorentz::{dilate_exact, lorentz_norm, lorentz_seminorm, rearrange, LorentzIndex};
use crate::mc::{compare_with_kernel, density_histogram, dt_refinement, simulate_expectation, x_marginal_chi_square, MCConfig};
use crate::model::{homogeneous_power, Axis, Datum, Grid, GridFunction, ModelParams, Point, SignedPermutation, TimeConvention};
use crate::semigroup::{chapman_kolmogorov_defect, smoothing_fit, yamazaki_diagnostic, NormKind, Semigroup};
use crate::solver::{
    blowup_probe, cylindrical_defect, decay_fit, energy, energy_series, profile_agreement, profile_residual,
    self_similarity_defect, symmetry_preserved, BlowupConfig, ConvergenceReport, ConvergenceStatus, MarchScheme,
    ProfileWindow, SimilarityWindow, Solver, Trajectory,
};
use crate::special::{gauss_legendre, unit_ball_volume};

pub(super) struct Run {
    u0: GridFunction,
    traj: Trajectory,
    report: ConvergenceReport,
}

/// Shared state for one suite run: the model, the reference grid, one
/// solver (whose semigroup cache every check reuses) and finished Picard
/// runs keyed by datum and grid.
pub(super) struct Context {
    suite: Suite,
    params: ModelParams,
    grid: Grid,
    solver: Solver,
    runs: HashMap<String, Rc<Run>>,
}

impl Context {
    pub fn new(suite: &Suite) -> Result<Self> {
        let params = suite.reference.params()?;
        Ok(Self {
            suite: suite.clone(),
            params,
            grid: suite.reference.grid()?,
            solver: Solver::new(params, suite.reference.solver_config())?,
            runs: HashMap::new(),
        })
    }

    fn sg(&self) -> &Semigroup {
        self.solver.semigroup()
    }

    fn seed(&self) -> u64 {
        self.suite.reference.seed
    }

    fn run(&mut self, datum: &Datum, count: usize) -> Result<Rc<Run>> {
        let key = format!("{}@{count}", serde_json::to_string(datum)?);
        if let Some(r) = self.runs.get(&key) {
            return Ok(r.clone());
        }
        let grid = self.suite.reference.grid_with(count)?;
        let u0 = datum.sample(&self.params, &grid)?;
        let (traj, report) = self.solver.picard(&u0)?;
        let run = Rc::new(Run { u0, traj, report });
        self.runs.insert(key, run.clone());
        Ok(run)
    }
}

pub(super) fn run(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    match spec.name.as_str() {
        "kernel_mass" => kernel_mass(ctx, spec),
        "kernel_scaling" => kernel_scaling(ctx, spec),
        "y_marginal" => y_marginal(ctx, spec),
        "chapman_kolmogorov" => chapman_kolmogorov(ctx, spec),
        "direct_vs_spectral" => direct_vs_spectral(ctx, spec),
        "mc_oracle" => mc_oracle(ctx, spec),
        "lorentz_closed_forms" => lorentz_closed_forms(ctx, spec),
        "norm_scaling" => norm_scaling(ctx, spec),
        "smoothing_exponent" => smoothing_exponent(ctx, spec),
        "yamazaki_ratio" => yamazaki_ratio(ctx, spec),
        "picard_convergence" => picard_convergence(ctx, spec),
        "positivity_symmetry" => positivity_symmetry(ctx, spec),
        "self_similarity" => self_similarity(ctx, spec),
        "decay_law" => decay_law(ctx, spec),
        "profile" => profile(ctx, spec),
        "energy_blowup" => energy_blowup(ctx, spec),
        "uniqueness" => uniqueness(ctx, spec),
        "determinism" => determinism(ctx, spec),
        other => Err(invalid(format!("unknown check {other:?}"))),
    }
}

fn gaussian(spec: &CheckSpec, amplitude: f64, width: f64) -> Result<Datum> {
    let w = spec.number("width", width)?;
    Ok(Datum::Gaussian { amplitude: spec.number("amplitude", amplitude)?, x_width: w, y_width: w })
}

fn quadrature(spec: &CheckSpec) -> Result<KernelQuadrature> {
    let q = KernelQuadrature::default();
    let q = q.with_tol(spec.number("abs_tol", q.abs_tol)?);
    q.validate()?;
    Ok(q)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `∫ K(x, 0, y; t)` on a box of half-widths `a sqrt(t)` in `x` and `b t`
/// in `y`, matching the parabolic scaling of the kernel.
fn kernel_mass(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["times", "x_half_per_sqrt_t", "y_half_per_t", "x_count", "y_count", "abs_tol"])?;
    let times = spec.numbers("times", &[0.25, 1.0, 4.0])?;
    let (a, b) = (spec.number("x_half_per_sqrt_t", 8.0)?, spec.number("y_half_per_t", 16.0)?);
    let (xc, yc) = (spec.count("x_count", 256)?, spec.count("y_count", 512)?);
    let q = quadrature(spec)?;
    let (n, k) = (ctx.params.n(), ctx.params.k());
    let (x0, y0) = (vec![0.0; n], vec![0.0; k]);
    let mut worst: f64 = 0.0;
    let (mut scaled, mut boxed) = (Vec::new(), Vec::new());
    for &t in &times {
        let grid = Grid::new(
            vec![Axis::symmetric(a * t.sqrt(), xc)?; n],
            vec![Axis::symmetric(b * t, yc)?; k],
        )?;
        let m = kernel_row(&x0, &y0, t, &grid, &ctx.params, &q)?.integral();
        worst = worst.max((m - 1.0).abs());
        scaled.push(m - 1.0);
        boxed.push(kernel_row(&x0, &y0, t, &ctx.grid, &ctx.params, &q)?.integral() - 1.0);
    }
    Ok(Measured::new(worst, worst <= spec.tolerance)
        .detail("times", &times)
        .detail("mass_minus_one", &scaled)
        .detail("reference_box_mass_minus_one", &boxed))
}

fn kernel_scaling(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["points", "lambdas", "abs_tol"])?;
    let points = spec.count("points", 100)?;
    let lambdas = spec.numbers("lambdas", &[0.5, 2.0])?;
    let q = quadrature(spec)?;
    let p = ctx.params;
    let qd = p.q() as i32;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut worst = vec![0.0f64; lambdas.len()];
    for _ in 0..points {
        let x: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let x0: Vec<f64> = (0..p.n()).map(|_| rng.random_range(-1.5..1.5)).collect();
        let y: Vec<f64> = (0..p.k()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t = rng.random_range(0.3..2.0);
        let base = kernel_eval(&x, &x0, &y, t, &p, &q)?;
        for (w, &l) in worst.iter_mut().zip(&lambdas) {
            let s = |v: &[f64], f: f64| v.iter().map(|a| a * f).collect::<Vec<_>>();
            let scaled = kernel_eval(&s(&x, l), &s(&x0, l), &s(&y, l * l), l * l * t, &p, &q)?;
            *w = w.max(rel(scaled * l.powi(qd), base));
        }
    }
    let m = worst.iter().copied().fold(0.0, f64::max);
    Ok(Measured::new(m, m <= spec.tolerance).detail("lambdas", &lambdas).detail("worst_per_lambda", &worst))
}

/// `∫ K dy` by Gauss-Legendre panels in `|y|` against the Gaussian law.
fn y_marginal(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["cases", "abs_tol"])?;
    let cases = spec.numbers("cases", &[0.0, 0.0, 1.0, 0.5, -0.3, 0.5, 1.0, 1.2, 2.0, 0.2, 0.1, 0.25, 2.0, -1.0, 4.0])?;
    if cases.is_empty() || cases.len() % 3 != 0 {
        return Err(invalid("cases holds (x, x0, t) triples"));
    }
    let q = quadrature(spec)?;
    let p = ctx.params;
    if p.k() > 2 {
        return Err(invalid("y marginal supports k in {1, 2}"));
    }
    let (gx, gw) = gauss_legendre(16);
    let width = 0.5;
    let mut errors = Vec::new();
    for c in cases.chunks(3) {
        let (t, mut x, mut x0) = (c[2], vec![0.0; p.n()], vec![0.0; p.n()]);
        x[0] = c[0];
        x0[0] = c[1];
        let panels = (40f64.max(16.0 * t) / width).ceil() as usize;
        let mut total = 0.0;
        let mut y = vec![0.0; p.k()];
        for panel in 0..panels {
            for (u, w) in gx.iter().zip(&gw) {
                let r = (panel as f64 + 0.5 + 0.5 * u) * width;
                y[0] = r;
                let jac = if p.k() == 1 { 2.0 } else { 2.0 * std::f64::consts::PI * r };
                total += jac * kernel_eval(&x, &x0, &y, t, &p, &q)? * 0.5 * width * w;
            }
        }
        errors.push(rel(total, gaussian_marginal(&x, &x0, t)));
    }
    let m = errors.iter().copied().fold(0.0, f64::max);
    Ok(Measured::new(m, m <= spec.tolerance).detail("relative_errors", &errors))
}

fn gaussian_bump(grid: &Grid, xw: f64, yw: f64) -> Result<GridFunction> {
    GridFunction::from_fn(grid.clone(), |x, y| {
        let rx: f64 = x.iter().map(|a| a * a).sum();
        let ry: f64 = y.iter().map(|a| a * a).sum();
        (-rx / (2.0 * xw * xw) - ry / (2.0 * yw * yw)).exp()
    })
}

fn chapman_kolmogorov(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["t", "s", "counts", "width"])?;
    let (t, s) = (spec.number("t", 0.5)?, spec.number("s", 0.5)?);
    let counts = spec.numbers("counts", &[64.0, 128.0])?;
    let w = spec.number("width", 0.7)?;
    let mut defects = Vec::new();
    for &c in &counts {
        let g = ctx.suite.reference.grid_with(c as usize)?;
        defects.push(chapman_kolmogorov_defect(ctx.sg(), t, s, &gaussian_bump(&g, w, w)?)?);
    }
    let last = *defects.last().ok_or_else(|| invalid("counts is empty"))?;
    let decreasing = defects.windows(2).all(|d| d[1] < d[0]);
    Ok(Measured::new(last, last <= spec.tolerance && decreasing)
        .detail("counts", &counts)
        .detail("defects", &defects)
        .detail("decreasing", decreasing))
}

/// Relative sup gap between the two routes over nodes within `interior`
/// times the half-width of the box.
fn direct_vs_spectral(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["t", "x_width", "y_width", "interior"])?;
    let t = spec.number("t", 1.0)?;
    let phi = gaussian_bump(&ctx.grid, spec.number("x_width", 0.8)?, spec.number("y_width", 1.0)?)?;
    let frac = spec.number("interior", 0.5)?;
    let a = Semigroup::direct(ctx.params).apply(t, &phi)?;
    let b = ctx.sg().apply(t, &phi)?;
    let lim = frac * ctx.suite.reference.half_width;
    let g = &ctx.grid;
    let mut worst: f64 = 0.0;
    for f in 0..g.len() {
        let m = g.multi_index(f);
        if g.axes().zip(&m).all(|(ax, &i)| ax.node(i).abs() <= lim) {
            worst = worst.max((a.values()[f] - b.values()[f]).abs());
        }
    }
    let m = worst / b.max_abs();
    Ok(Measured::new(m, m <= spec.tolerance))
}

/// `(|E - S(t)phi| - bias) / stderr` at one node, with the time-step bias
/// estimated from a coarse coupled refinement and scaled linearly to `dt`;
/// plus the Gaussian gate on the `x`-marginal and a cellwise kernel check.
fn mc_oracle(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&[
        "t", "dt", "paths", "node", "probe_dt", "hist_half_width", "hist_count", "alpha", "min_hits",
        "max_kernel_violations",
    ])?;
    let t = spec.number("t", 1.0)?;
    let dt = spec.number("dt", 1e-3)?;
    let paths = spec.count("paths", 100_000)?;
    let node: Vec<usize> = spec.numbers("node", &[68.0, 60.0])?.iter().map(|v| *v as usize).collect();
    let g = ctx.grid.clone();
    if node.len() != g.n() + g.k() || g.axes().zip(&node).any(|(a, &i)| i >= a.count) {
        return Err(invalid("node must be a multi-index of the reference grid"));
    }
    let coords: Vec<f64> = g.axes().zip(&node).map(|(a, &i)| a.node(i)).collect();
    let start = Point::new(coords[..g.n()].to_vec(), coords[g.n()..].to_vec())?;
    let bump = |x: &[f64], y: &[f64]| {
        let rx = (x[0] - 0.3).powi(2) + x[1..].iter().map(|a| a * a).sum::<f64>();
        (-rx - 0.5 * y.iter().map(|a| a * a).sum::<f64>()).exp()
    };
    let exact = ctx.sg().apply(t, &GridFunction::from_fn(g.clone(), bump)?)?.value_at_node(&node);
    let cfg = MCConfig::new(paths, dt, ctx.seed(), start.clone());
    let est = simulate_expectation(&bump, t, &cfg, &ctx.params)?;
    let probe_dt = spec.number("probe_dt", 0.05)?;
    let probe = dt_refinement(&bump, t, &MCConfig { dt: probe_dt, ..cfg.clone() }, &ctx.params)?;
    // First-order bias at the probe step is about 2 (e(dt) - e(dt/2)).
    let bias = 2.0 * (probe.estimates[0].mean - probe.estimates[1].mean).abs() * dt / probe_dt;
    let z = ((est.mean - exact).abs() - bias).max(0.0) / est.stderr;

    let hg = Grid::cube(g.n(), g.k(), spec.number("hist_half_width", 4.0)?, spec.count("hist_count", 32)?)?;
    let hist = density_histogram(t, &cfg, &ctx.params, &hg)?;
    let chi = x_marginal_chi_square(&hist)?;
    let alpha = spec.number("alpha", 1e-3)?;
    let kc = compare_with_kernel(&hist, &ctx.params, &KernelQuadrature::default(), spec.count("min_hits", 50)? as u64, 0.0)?;
    let allowance = spec.count("max_kernel_violations", 5)?;
    let pass = z <= spec.tolerance && chi.p_value >= alpha && kc.violations <= allowance;
    Ok(Measured::new(z, pass)
        .detail("estimate", est)
        .detail("semigroup", exact)
        .detail("bias_margin", bias)
        .detail("refinement_ratio", probe.ratio)
        .detail("chi_square", chi)
        .detail("kernel_comparison", kc))
}

/// Indicator norms, the seminorm/norm sandwich on random functions and the
/// flatness of `t^(1/p) f*(t)` for a gauge-homogeneous power.
fn lorentz_closed_forms(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["functions", "flatness_tol", "flatness_p", "flatness_times"])?;
    let small = Grid::cube(1, 1, 2.0, 8)?;
    let mut indicator_defect: f64 = 0.0;
    for cells in [1usize, 4, 20, 64] {
        let f = GridFunction::from_fn(small.clone(), |_, _| 0.0)?;
        let mut v = f.into_values();
        v.iter_mut().take(cells).for_each(|a| *a = 1.0);
        let f = GridFunction::new(small.clone(), v)?;
        let m = cells as f64 * small.cell_volume();
        for p in [1.5, 2.0, 3.0, 4.0] {
            let expect = m.powf(1.0 / p);
            for q in [1.0, 2.0, 5.0, f64::INFINITY] {
                indicator_defect = indicator_defect.max(rel(lorentz_seminorm(&f, LorentzIndex::new(p, q)?), expect));
            }
            indicator_defect = indicator_defect.max(rel(lorentz_norm(&f, LorentzIndex::weak(p)?), expect));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed());
    let mut violations = 0usize;
    let functions = spec.count("functions", 100)?;
    for _ in 0..functions {
        let vals: Vec<f64> = (0..small.len()).map(|_| rng.random_range(-5.0..5.0)).collect();
        let pr = rearrange(&GridFunction::new(small.clone(), vals)?);
        let p = rng.random_range(1.1..8.0);
        let q = if rng.random_bool(0.25) { f64::INFINITY } else { rng.random_range(1.0..6.0) };
        let idx = LorentzIndex::new(p, q)?;
        let (semi, norm) = (pr.seminorm(idx), pr.norm(idx));
        if !(semi <= norm * (1.0 + 1e-12) && norm <= idx.p_conjugate() * semi * (1.0 + 1e-12)) {
            violations += 1;
        }
    }

    // |{f > s}| = c s^(-p) for f = gauge^(-Q/p), so t^(1/p) f*(t) = c^(1/p).
    // Times below 1 put level sets within a few cells of the origin.
    let p = spec.number("flatness_p", 3.0)?;
    let (n, k) = (ctx.params.n(), ctx.params.k());
    let f = homogeneous_power(&ctx.grid, 1.0, -(ctx.params.q() as f64) / p)?;
    let c = gauge_ball_volume(n, k);
    let pr = rearrange(&f);
    let times = spec.numbers("flatness_times", &[1.0, 2.0, 5.0, 10.0, 20.0])?;
    let flat = times.iter().map(|&t| (t.powf(1.0 / p) * pr.f_star(t) / c.powf(1.0 / p) - 1.0).abs()).fold(0.0, f64::max);
    let flat_tol = spec.number("flatness_tol", 0.02)?;
    let pass = indicator_defect <= spec.tolerance && violations == 0 && flat <= flat_tol;
    Ok(Measured::new(indicator_defect, pass)
        .detail("sandwich_functions", functions)
        .detail("sandwich_violations", violations)
        .detail("power_law_flatness", flat))
}

/// `|{|x|^4 + |y|^2 < 1}| = omega_k N omega_N ∫_0^1 r^(N-1) (1 - r^4)^(k/2) dr`.
fn gauge_ball_volume(n: usize, k: usize) -> f64 {
    let (gx, gw) = gauss_legendre(32);
    // Substituting r = 1 - s^2 removes the square-root endpoint behaviour.
    let integral: f64 = gx
        .iter()
        .zip(&gw)
        .map(|(u, w)| {
            let s = 0.5 * (u + 1.0);
            let r = 1.0 - s * s;
            0.5 * w * 2.0 * s * r.powi(n as i32 - 1) * (1.0 - r.powi(4)).powf(0.5 * k as f64)
        })
        .sum();
    unit_ball_volume(k) * n as f64 * unit_ball_volume(n) * integral
}

/// `||f(l., l^2 .)||_(p,q) = l^(-Q/p) ||f||_(p,q)`, with the dilate
/// resampled on the same grid; the exact dilation is checked alongside.
fn norm_scaling(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["lambda", "width", "indices"])?;
    let l = spec.number("lambda", 2.0)?;
    let w = spec.number("width", 1.0)?;
    let idx = spec.numbers("indices", &[3.0, f64::INFINITY, 2.0, 1.0, 1.5, 4.0, 3.0, 3.0])?;
    if idx.is_empty() || idx.len() % 2 != 0 {
        return Err(invalid("indices holds (p, q) pairs"));
    }
    let qd = ctx.params.q() as f64;
    let f = |s: f64| GridFunction::from_fn(ctx.grid.clone(), |x, y| {
        let rx: f64 = x.iter().map(|a| (s * a).powi(2)).sum();
        let ry: f64 = y.iter().map(|a| (s * s * a).powi(2)).sum();
        (-(rx + ry) / (2.0 * w * w)).exp()
    });
    let (f1, fl) = (f(1.0)?, f(l)?);
    let fe = dilate_exact(&f1, l)?;
    let (mut sampled, mut exact): (f64, f64) = (0.0, 0.0);
    for pq in idx.chunks(2) {
        let i = LorentzIndex::new(pq[0], pq[1])?;
        let expect = l.powf(-qd / pq[0]) * lorentz_norm(&f1, i);
        sampled = sampled.max(rel(lorentz_norm(&fl, i), expect));
        exact = exact.max(rel(lorentz_norm(&fe, i), expect));
    }
    Ok(Measured::new(sampled, sampled <= spec.tolerance && exact <= 1e-12).detail("exact_dilation_defect", exact))
}

fn geometric_times(t_max: f64, per_doubling: usize, count: usize) -> Vec<f64> {
    (0..count).rev().map(|i| t_max * 2f64.powf(-(i as f64) / per_doubling as f64)).collect()
}

/// Fitted decay slopes for `(1, inf)` on a concentrated Gaussian and
/// `(2, 4)` on the critically homogeneous power of degree `-Q/2`. The power
/// does not decay, so its window stops at half the `y` half-width, before
/// mass missing beyond the box steepens the decay.
fn smoothing_exponent(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["width", "t_max_1_inf", "t_max_2_4", "per_doubling", "count"])?;
    let (per, count) = (spec.count("per_doubling", 2)?, spec.count("count", 9)?);
    let y_half = ctx.grid.y_axes().iter().map(|a| 0.5 * (a.max - a.min)).fold(f64::INFINITY, f64::min);
    let ta = geometric_times(spec.number("t_max_1_inf", ctx.suite.reference.horizon)?, per, count);
    let tb = geometric_times(spec.number("t_max_2_4", 0.5 * y_half)?, per, count);
    let w = spec.number("width", 0.2)?;
    let narrow = gaussian_bump(&ctx.grid, w, w)?;
    let power = homogeneous_power(&ctx.grid, 1.0, -0.5 * ctx.params.q() as f64)?;
    let a = smoothing_fit(ctx.sg(), &narrow, 1.0, f64::INFINITY, &ta, NormKind::Lebesgue)?;
    let b = smoothing_fit(ctx.sg(), &power, 2.0, 4.0, &tb, NormKind::Lebesgue)?;
    let errs = [rel(a.exponent_fit, a.exponent_expected), rel(b.exponent_fit, b.exponent_expected)];
    let m = errs[0].max(errs[1]);
    let rows = [(&a, 1.0, f64::INFINITY), (&b, 2.0, 4.0)]
        .into_iter()
        .flat_map(|(rep, p, r)| rep.times.iter().zip(&rep.norms).map(move |(t, v)| vec![p, r, *t, *v]));
    Ok(Measured::new(m, m <= spec.tolerance)
        .detail("slope_1_inf", [a.exponent_fit, a.exponent_expected])
        .detail("slope_2_4", [b.exponent_fit, b.exponent_expected])
        .detail("fit_range_1_inf", a.fit_range)
        .detail("fit_range_2_4", b.fit_range)
        .csv(&["p", "r", "t", "norm"], rows))
}

/// `I(phi_l) / I(phi)` against `l^(-Q/p)` for a Gaussian.
fn yamazaki_ratio(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["lambda", "p", "r", "width", "per_doubling", "count"])?;
    let l = spec.number("lambda", 2.0)?;
    let (p, r) = (spec.number("p", 3.0)?, spec.number("r", 6.0)?);
    let w = spec.number("width", 1.0)?;
    let times = geometric_times(ctx.suite.reference.horizon, spec.count("per_doubling", 2)?, spec.count("count", 25)?);
    let phi = |s: f64| gaussian_bump(&ctx.grid, w / s, w / (s * s));
    let a = yamazaki_diagnostic(ctx.sg(), &phi(1.0)?, p, r, &times)?;
    let b = yamazaki_diagnostic(ctx.sg(), &phi(l)?, p, r, &times)?;
    let expect = l.powf(-(ctx.params.q() as f64) / p);
    let ratio = b.integral / a.integral;
    let m = rel(ratio, expect);
    Ok(Measured::new(m, m <= spec.tolerance)
        .detail("ratio", ratio)
        .detail("expected", expect)
        .detail("head_body_tail", [a.head, a.body, a.tail]))
}

fn picard_convergence(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["amplitude", "width"])?;
    let run = ctx.run(&gaussian(spec, 0.5, 1.0)?, ctx.suite.reference.count)?;
    let rep = &run.report;
    let residual = ctx.solver.fixed_point_residual(&run.u0, &run.traj)?;
    let contracting = rep.ratios.iter().all(|r| *r < 1.0);
    let (zt, zr) = ctx.solver.picard(&GridFunction::zeros(ctx.grid.clone()))?;
    let zero_exact = zr.status == ConvergenceStatus::Converged
        && zt.states.iter().all(|u| u.values().iter().all(|v| *v == 0.0));
    let pass = rep.status == ConvergenceStatus::Converged && contracting && zero_exact && residual <= spec.tolerance;
    Ok(Measured::new(residual, pass)
        .detail("status", rep.status)
        .detail("iterations", rep.iterations)
        .detail("ratios", &rep.ratios)
        .detail("zero_datum_exact", zero_exact))
}

fn positivity_symmetry(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["amplitude", "width", "cylindrical_tol"])?;
    let run = ctx.run(&gaussian(spec, 0.5, 1.0)?, ctx.suite.reference.count)?;
    let traj = &run.traj;
    let scale = traj.sup_abs();
    let negativity = traj.states.iter().map(|u| (-u.min()).max(0.0)).fold(0.0, f64::max) / scale;
    let (n, k) = (ctx.params.n(), ctx.params.k());
    let flip = |d: usize| SignedPermutation { perm: (0..d).collect(), sign: vec![-1.0; d] };
    let (ix, iy) = (SignedPermutation::identity(n), SignedPermutation::identity(k));
    let mut symmetric = true;
    for (p1, p2) in [(flip(n), iy.clone()), (ix, flip(k)), (flip(n), flip(k))] {
        symmetric &= symmetry_preserved(traj, &p1, &p2)?;
    }
    let cyl = traj.states.iter().map(cylindrical_defect).fold(0.0, f64::max);
    let cyl_tol = spec.number("cylindrical_tol", 1e-10)?;
    let pass = negativity <= spec.tolerance && symmetric && cyl <= cyl_tol;
    Ok(Measured::new(negativity, pass)
        .detail("bitwise_symmetric", symmetric)
        .detail("cylindrical_defect", cyl))
}

fn self_similarity(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["epsilon", "lambdas", "control_amplitude", "control_width", "control_min"])?;
    let count = ctx.suite.reference.count;
    let run = ctx.run(&Datum::Homogeneous { epsilon: spec.number("epsilon", 0.1)? }, count)?;
    let lambdas = spec.numbers("lambdas", &[0.5, 2.0])?;
    let window = SimilarityWindow::for_grid(run.traj.state(0).grid());
    let mut worst: f64 = 0.0;
    let (mut defects, mut linear_time, mut rows) = (Vec::new(), Vec::new(), Vec::new());
    for &l in &lambdas {
        let r = self_similarity_defect(&run.traj, l, &ctx.params, TimeConvention::Parabolic, window)?;
        worst = worst.max(r.defect);
        defects.push(r.defect);
        rows.extend(r.per_time.iter().map(|(t, d)| vec![l, *t, *d]));
        let s = self_similarity_defect(&run.traj, l, &ctx.params, TimeConvention::LinearTime, window)?;
        linear_time.push(s.defect);
    }
    let control_datum = Datum::Gaussian {
        amplitude: spec.number("control_amplitude", 0.5)?,
        x_width: spec.number("control_width", 1.0)?,
        y_width: spec.number("control_width", 1.0)?,
    };
    let control = ctx.run(&control_datum, count)?;
    let mut control_defect = f64::INFINITY;
    for &l in &lambdas {
        let r = self_similarity_defect(&control.traj, l, &ctx.params, TimeConvention::Parabolic, window)?;
        control_defect = control_defect.min(r.defect);
    }
    let control_min = spec.number("control_min", 0.2)?;
    let pass = worst <= spec.tolerance && control_defect >= control_min;
    Ok(Measured::new(worst, pass)
        .detail("lambdas", &lambdas)
        .detail("defects", &defects)
        .detail("linear_time_defects", &linear_time)
        .detail("gaussian_control_defect", control_defect)
        .detail("window", window)
        .csv(&["lambda", "t", "defect"], rows))
}

fn decay_law(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["epsilon", "r"])?;
    let run = ctx.run(&Datum::Homogeneous { epsilon: spec.number("epsilon", 0.1)? }, ctx.suite.reference.count)?;
    let d = decay_fit(&run.traj, spec.number("r", 12.0)?, &ctx.params)?;
    let m = rel(d.slope, -d.sigma);
    let rows = d.times.iter().zip(&d.norms).map(|(t, v)| vec![*t, *v]);
    Ok(Measured::new(m, m <= spec.tolerance)
        .detail("slope", d.slope)
        .detail("sigma", d.sigma)
        .csv(&["t", "weak_norm"], rows))
}

fn profile(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["epsilon", "counts", "residual_time", "agreement_times", "min_order"])?;
    let datum = Datum::Homogeneous { epsilon: spec.number("epsilon", 0.1)? };
    let counts = spec.numbers("counts", &[64.0, 128.0])?;
    let t_res = spec.number("residual_time", 1.0)?;
    let window = ProfileWindow::default();
    let mut residuals = Vec::new();
    for &c in &counts {
        let run = ctx.run(&datum, c as usize)?;
        let n = run.traj.time_grid.find(t_res).ok_or_else(|| invalid(format!("{t_res} is not a time node")))?;
        residuals.push(profile_residual(&run.traj, n, &ctx.params, window)?.interior_mean);
    }
    if residuals.len() < 2 {
        return Err(invalid("profile refinement needs two grids"));
    }
    let m = residuals.len();
    let order = (residuals[m - 2] / residuals[m - 1]).ln() / (counts[m - 1] / counts[m - 2]).ln();
    let times = spec.numbers("agreement_times", &[0.5, 2.0])?;
    if times.len() != 2 {
        return Err(invalid("agreement_times holds two times"));
    }
    let run = ctx.run(&datum, ctx.suite.reference.count)?;
    let tg = &run.traj.time_grid;
    let find = |t: f64| tg.find(t).ok_or_else(|| invalid(format!("{t} is not a time node")));
    let agreement = profile_agreement(&run.traj, find(times[0])?, find(times[1])?, &ctx.params, window)?;
    let pass = agreement <= spec.tolerance && order >= spec.number("min_order", 1.0)?;
    Ok(Measured::new(agreement, pass)
        .detail("counts", &counts)
        .detail("residuals", &residuals)
        .detail("order", order))
}

fn energy_blowup(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&[
        "amplitude", "width", "blowup_amplitude", "blowup_width", "control_amplitude", "dt", "horizon",
        "min_growth", "control_max_growth",
    ])?;
    let run = ctx.run(&gaussian(spec, 0.5, 1.0)?, ctx.suite.reference.count)?;
    let e = energy_series(&run.traj, &ctx.params)?;
    let e0 = energy(&run.u0, &ctx.params)?;
    let series: Vec<f64> = std::iter::once(e0).chain(e.iter().copied()).collect();
    let increase = series.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let m = increase.max(0.0) / e0.abs();

    let cfg = BlowupConfig { dt: spec.number("dt", 0.01)?, horizon: spec.number("horizon", 2.0)?, ..BlowupConfig::default() };
    let bw = spec.number("blowup_width", 0.8)?;
    let big = Datum::Gaussian { amplitude: spec.number("blowup_amplitude", 4.0)?, x_width: bw, y_width: bw }
        .sample(&ctx.params, &ctx.grid)?;
    let small = Datum::Gaussian { amplitude: spec.number("control_amplitude", 0.2)?, x_width: bw, y_width: bw }
        .sample(&ctx.params, &ctx.grid)?;
    let blow = blowup_probe(ctx.sg(), &big, &cfg)?;
    let ctrl = blowup_probe(ctx.sg(), &small, &cfg)?;
    let pass = m <= spec.tolerance
        && blow.initial_energy < 0.0
        && blow.growth >= spec.number("min_growth", 10.0)?
        && ctrl.growth <= spec.number("control_max_growth", 1.5)?;
    let rows = run.traj.times().iter().zip(&e).map(|(t, v)| vec![*t, *v]);
    Ok(Measured::new(m, pass)
        .detail("initial_energy", e0)
        .detail("blowup_initial_energy", blow.initial_energy)
        .detail("blowup_growth", blow.growth)
        .detail("blowup_time", blow.times.last().copied().unwrap_or(0.0))
        .detail("control_growth", ctrl.growth)
        .csv(&["t", "energy"], rows))
}

fn uniqueness(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["amplitude", "width"])?;
    let run = ctx.run(&gaussian(spec, 0.5, 1.0)?, ctx.suite.reference.count)?;
    let euler = run.traj.distance(&ctx.solver.march(&run.u0, MarchScheme::Euler)?)?;
    let heun = run.traj.distance(&ctx.solver.march(&run.u0, MarchScheme::Heun)?)?;
    let m = euler.max(heun);
    Ok(Measured::new(m, m <= spec.tolerance).detail("euler", euler).detail("heun", heun))
}

/// Runs the probe checks twice from scratch and counts outcomes whose
/// canonical serialisation differs.
fn determinism(ctx: &mut Context, spec: &CheckSpec) -> Result<Measured> {
    spec.allow(&["probe"])?;
    let names = spec.texts("probe", &["kernel_scaling", "mc_oracle", "picard_convergence"])?;
    let mut checks = Vec::new();
    for name in &names {
        if name == "determinism" {
            return Err(invalid("determinism cannot probe itself"));
        }
        let found = ctx.suite.checks.iter().find(|c| &c.name == name);
        checks.push(found.cloned().ok_or_else(|| invalid(format!("probe {name:?} is not in the suite")))?);
    }
    let sub = Suite { reference: ctx.suite.reference, checks };
    let a = run_suite(&sub)?.canonical();
    let b = run_suite(&sub)?.canonical();
    let mut differing = Vec::new();
    for (x, y) in a.checks.iter().zip(&b.checks) {
        if serde_json::to_string(x)? != serde_json::to_string(y)? {
            differing.push(x.name.clone());
        }
    }
    let m = differing.len() as f64;
    Ok(Measured::new(m, m < spec.tolerance).detail("probe", &names).detail("differing", &differing))
}
