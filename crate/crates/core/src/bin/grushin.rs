//! Command line front end: `grushin <kernel|evolve|solve|lorentz|mc|verify>`.
//!
//! Exit codes: 0 on success, 1 when a computation or check fails, 2 on a
//! usage or configuration error.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use grushin::config::{GridSection, Integrator, RunConfig};
use grushin::io::{read_csv, write_csv, write_table};
use grushin::kernel::{gaussian_marginal, integrand_samples, kernel_eval};
use grushin::lorentz::{lorentz_norm, lorentz_seminorm, rearrange, LorentzIndex};
use grushin::mc::{density_histogram, simulate_expectation, Observable};
use grushin::model::Datum;
use grushin::plot::{plot_emit, PlotSpec, Scale, Series};
use grushin::semigroup::{Semigroup, SemigroupMethod};
use grushin::solver::{decay_fit, energy, Solver};
use grushin::verify::{run_suite, Status, Suite};
use grushin::GridFunction;

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
    #[error(transparent)]
    Lib(#[from] grushin::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failed(_) | CliError::Lib(_) => 1,
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "grushin", version, about = "Grushin heat kernel, semigroup and semilinear solver", arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the heat kernel K(x, x0, y; t).
    Kernel(KernelArgs),
    /// Apply the linear semigroup S(t) to a datum.
    Evolve(EvolveArgs),
    /// Solve the semilinear problem and report norms along the run.
    Solve(SolveArgs),
    /// Lorentz norm of a grid function.
    Lorentz(LorentzArgs),
    /// Monte Carlo estimate of S(t) phi at a point.
    Mc(McArgs),
    /// Run a verification suite.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    Spectral,
    Direct,
}

/// Flags shared by the computing subcommands; they override the file.
#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho: Option<f64>,
    /// HALF:COUNT or HALF:COUNT,YHALF:YCOUNT.
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, value_enum)]
    method: Option<Route>,
    /// Absolute tolerance of the kernel quadrature.
    #[arg(long)]
    abs_tol: Option<f64>,
}

impl Common {
    fn resolve(&self) -> CliResult<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p).map_err(usage)?,
            None => RunConfig::default(),
        };
        if let Some(n) = self.n {
            c.model.n = n;
        }
        if let Some(k) = self.k {
            c.model.k = k;
        }
        if let Some(rho) = self.rho {
            c.model.rho = rho;
        }
        if let Some(g) = &self.grid {
            c.grid = GridSection::parse(g).map_err(usage)?;
        }
        match self.method {
            Some(Route::Direct) => c.semigroup = SemigroupMethod::Direct,
            Some(Route::Spectral) if c.semigroup == SemigroupMethod::Direct => c.semigroup = SemigroupMethod::default(),
            _ => {}
        }
        if let Some(t) = self.abs_tol {
            c.kernel.abs_tol = t;
        }
        Ok(c)
    }
}

fn finish(c: RunConfig) -> CliResult<RunConfig> {
    c.validate().map_err(usage)?;
    Ok(c)
}

/// Accepts `inf` as well as finite numbers.
fn parse_index(s: &str) -> Result<f64, String> {
    match s {
        "inf" | "infinity" => Ok(f64::INFINITY),
        _ => s.parse::<f64>().map_err(|e| e.to_string()),
    }
}

#[derive(Args)]
struct KernelArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    t: f64,
    /// Comma separated, N entries.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x0: Vec<f64>,
    /// The y offset, k entries.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    /// Write the radial quadrature nodes as CSV (r, log_m, contribution).
    #[arg(long)]
    samples: Option<PathBuf>,
}

/// Datum flags shared by `evolve` and `solve`.
#[derive(Args)]
struct DatumArgs {
    /// gaussian | singular | homogeneous | indicator | bump | csv:PATH
    #[arg(long)]
    datum: Option<String>,
    /// Scale of the datum: epsilon for the singular data, amplitude otherwise.
    #[arg(long)]
    epsilon: Option<f64>,
}

enum Source {
    Named(Datum),
    Csv(PathBuf),
}

impl DatumArgs {
    fn apply(&self, c: &mut RunConfig) -> CliResult<Option<PathBuf>> {
        let source = match self.datum.as_deref() {
            None => Source::Named(c.datum.clone()),
            Some(s) => match s.strip_prefix("csv:") {
                Some(p) => Source::Csv(PathBuf::from(p)),
                None => Source::Named(named_datum(s)?),
            },
        };
        match source {
            Source::Csv(p) => {
                if self.epsilon.is_some() {
                    return Err(usage("--epsilon does not apply to a CSV datum"));
                }
                Ok(Some(p))
            }
            Source::Named(mut d) => {
                if let Some(e) = self.epsilon {
                    match &mut d {
                        Datum::Singular { epsilon } | Datum::Homogeneous { epsilon } => *epsilon = e,
                        Datum::Gaussian { amplitude, .. }
                        | Datum::Indicator { amplitude, .. }
                        | Datum::Bump { amplitude, .. } => *amplitude = e,
                    }
                }
                c.datum = d;
                Ok(None)
            }
        }
    }
}

fn named_datum(name: &str) -> CliResult<Datum> {
    Ok(match name {
        "gaussian" => Datum::Gaussian { amplitude: 1.0, x_width: 1.0, y_width: 1.0 },
        "singular" => Datum::Singular { epsilon: 0.1 },
        "homogeneous" => Datum::Homogeneous { epsilon: 0.1 },
        "indicator" => Datum::Indicator { amplitude: 1.0, x_half: 1.0, y_half: 1.0 },
        "bump" => Datum::Bump { amplitude: 1.0, x_radius: 2.0, y_radius: 2.0 },
        other => return Err(usage(format!("unknown datum {other:?}"))),
    })
}

fn load_datum(c: &RunConfig, csv: &Option<PathBuf>) -> CliResult<GridFunction> {
    let params = c.params()?;
    let f = match csv {
        Some(p) => read_csv(BufReader::new(File::open(p).map_err(|e| usage(format!("{}: {e}", p.display())))?))
            .map_err(usage)?,
        None => c.datum.sample(&params, &c.grid()?)?,
    };
    if f.grid().n() != params.n() || f.grid().k() != params.k() {
        return Err(usage("datum dimensions do not match the model"));
    }
    Ok(f)
}

#[derive(Args)]
struct EvolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    datum: DatumArgs,
    #[arg(long)]
    t: f64,
    /// Output grid function CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Append the JSON-lines diagnostics record here instead of stdout.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    datum: DatumArgs,
    /// Time horizon.
    #[arg(long = "T")]
    horizon: Option<f64>,
    #[arg(long, value_enum)]
    integrator: Option<IntegratorArg>,
    /// Second weak norm index (default 4p).
    #[arg(long)]
    r: Option<f64>,
    /// Norms CSV; stdout when absent.
    #[arg(long)]
    norms: Option<PathBuf>,
    /// Directory for one grid function CSV per time node.
    #[arg(long)]
    dump: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// SVG of the r-norm decay on log-log axes.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum IntegratorArg {
    Picard,
    Euler,
    Heun,
}

#[derive(Args)]
struct LorentzArgs {
    /// Grid function CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Defaults to the critical index of the model.
    #[arg(long)]
    p: Option<f64>,
    /// A number or `inf`.
    #[arg(long, value_parser = parse_index)]
    q: Option<f64>,
    /// Use f* instead of f** in the quasi-norm.
    #[arg(long)]
    seminorm: bool,
    /// Write the rearrangement CSV (t, f_star, f_star_star).
    #[arg(long)]
    profile: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObservableArg {
    One,
    X1,
    Gaussian,
    Bump,
}

#[derive(Args)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    paths: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    t: f64,
    /// Comma separated N + k coordinates, x first.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    start: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "bump")]
    observable: ObservableArg,
    /// Also evaluate the semigroup on the grid at the start point.
    #[arg(long)]
    compare: bool,
    /// Estimate CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Endpoint density histogram on the grid, as a grid function CSV.
    #[arg(long)]
    histogram: Option<PathBuf>,
    /// SVG overlay of the x-marginal histogram and the Gaussian marginal.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite TOML, or `default`.
    #[arg(long, default_value = "default")]
    suite: String,
    /// Canonical JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Keep per-check runtimes in the report (breaks byte identity).
    #[arg(long)]
    timings: bool,
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(grushin::Error::from)?))
}

fn config_comment(c: &RunConfig) -> Vec<String> {
    vec![format!("config: {}", c.echo())]
}

fn run_kernel(a: KernelArgs) -> CliResult<()> {
    let c = finish(a.common.resolve()?)?;
    let params = c.params()?;
    let (x, x0, y) = (a.x, a.x0, a.y);
    if x.len() != params.n() || x0.len() != params.n() || y.len() != params.k() {
        return Err(usage(format!("--x and --x0 need {} entries, --y needs {}", params.n(), params.k())));
    }
    if !(a.t > 0.0) {
        return Err(usage("--t must be positive"));
    }
    println!("{}", kernel_eval(&x, &x0, &y, a.t, &params, &c.kernel)?);
    if let Some(p) = a.samples {
        let rows: Vec<Vec<f64>> = integrand_samples(&x, &x0, &y, a.t, &params, &c.kernel)?
            .iter()
            .map(|s| vec![s.r, s.log_m, s.contribution])
            .collect();
        let mut comments = config_comment(&c);
        comments.push(format!("point: x={x:?} x0={x0:?} y={y:?} t={}", a.t));
        write_table(create(&p)?, &comments, &["r", "log_m", "contribution"], &rows)?;
    }
    Ok(())
}

fn run_evolve(a: EvolveArgs) -> CliResult<()> {
    let mut c = a.common.resolve()?;
    let csv = a.datum.apply(&mut c)?;
    let c = finish(c)?;
    if !(a.t > 0.0) {
        return Err(usage("--t must be positive"));
    }
    let params = c.params()?;
    let phi = load_datum(&c, &csv)?;
    c.semigroup.validate(phi.grid()).map_err(usage)?;
    let u = Semigroup::new(params, c.semigroup, c.kernel)?.apply(a.t, &phi)?;
    if let Some(p) = &a.out {
        let mut comments = config_comment(&c);
        comments.push(format!("t: {}", a.t));
        write_csv(create(p)?, &u, &comments)?;
    }
    let weak = LorentzIndex::weak(params.p_critical())?;
    let record = json!({
        "t": a.t,
        "mass": u.integral(),
        "initial_mass": phi.integral(),
        "min": u.min(),
        "max": u.max(),
        "norms": {
            "l1": u.lebesgue_norm(1.0),
            "l2": u.lebesgue_norm(2.0),
            "linf": u.max_abs(),
            "weak_p": lorentz_norm(&u, weak),
        },
        "config": serde_json::from_str::<serde_json::Value>(&c.echo()).map_err(grushin::Error::from)?,
    });
    let line = format!("{}\n", serde_json::to_string(&record).map_err(grushin::Error::from)?);
    match &a.diagnostics {
        Some(p) => {
            let mut f = std::fs::OpenOptions::new().create(true).append(true).open(p).map_err(grushin::Error::from)?;
            f.write_all(line.as_bytes()).map_err(grushin::Error::from)?;
        }
        None => print!("{line}"),
    }
    Ok(())
}

fn run_solve(a: SolveArgs) -> CliResult<()> {
    let mut c = a.common.resolve()?;
    let csv = a.datum.apply(&mut c)?;
    if let Some(h) = a.horizon {
        c.solver.horizon = h;
    }
    if let Some(i) = a.integrator {
        c.solver.integrator = match i {
            IntegratorArg::Picard => Integrator::Picard,
            IntegratorArg::Euler => Integrator::Euler,
            IntegratorArg::Heun => Integrator::Heun,
        };
    }
    if a.r.is_some() {
        c.solver.r = a.r;
    }
    let c = finish(c)?;
    let params = c.params()?;
    let u0 = load_datum(&c, &csv)?;
    c.semigroup.validate(u0.grid()).map_err(usage)?;
    let solver = Solver::new(params, c.solver_config())?;
    let (traj, convergence) = match c.solver.integrator.scheme() {
        None => {
            let (t, r) = solver.picard(&u0)?;
            (t, Some(r))
        }
        Some(s) => (solver.march(&u0, s)?, None),
    };
    let r = c.decay_index()?;
    let r_idx = LorentzIndex::weak(r)?;
    let mut rows = Vec::with_capacity(traj.states.len());
    let mut energies = Vec::with_capacity(traj.states.len());
    for (n, u) in traj.states.iter().enumerate() {
        let e = energy(u, &params)?;
        energies.push(e);
        rows.push(vec![traj.times()[n], traj.weak_norms[n], lorentz_norm(u, r_idx), u.max_abs(), u.integral(), e]);
    }
    let header = ["t", "norm_p_weak", "norm_r_weak", "linf", "mass", "energy"];
    let mut comments = config_comment(&c);
    comments.push(format!("p: {} r: {r}", params.p_critical()));
    match &a.norms {
        Some(p) => write_table(create(p)?, &comments, &header, &rows)?,
        None => write_table(std::io::stdout().lock(), &comments, &header, &rows)?,
    }
    if let Some(dir) = &a.dump {
        std::fs::create_dir_all(dir).map_err(grushin::Error::from)?;
        for (n, u) in traj.states.iter().enumerate() {
            let mut cm = config_comment(&c);
            cm.push(format!("t: {}", traj.times()[n]));
            write_csv(create(&dir.join(format!("state_{n:03}.csv")))?, u, &cm)?;
        }
    }
    let decay = decay_fit(&traj, r, &params).ok();
    if let Some(p) = &a.plot {
        let d = decay.as_ref().ok_or_else(|| CliError::Failed("decay fit unavailable for this run".into()))?;
        let spec = PlotSpec {
            title: format!("weak L^{r} norm"),
            x_label: "t".into(),
            y_label: "norm".into(),
            x_scale: Scale::Log,
            y_scale: Scale::Log,
            annotation: Some(format!("fitted slope {:.4}, predicted {:.4}", d.slope, -d.sigma)),
            description: Some(c.echo()),
        };
        plot_emit(&[Series::new("norm_r_weak", d.times.clone(), d.norms.clone())], &spec, p)?;
    }
    let residual = match convergence {
        Some(_) => Some(solver.fixed_point_residual(&u0, &traj)?),
        None => None,
    };
    let e0 = energies[0];
    let energy_increase = energies.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    let converged = convergence.as_ref().is_none_or(|r| r.status == grushin::solver::ConvergenceStatus::Converged);
    if let Some(p) = &a.report {
        let report = json!({
            "config": serde_json::from_str::<serde_json::Value>(&c.echo()).map_err(grushin::Error::from)?,
            "integrator": c.solver.integrator,
            "convergence": convergence,
            "fixed_point_residual": residual,
            "sup_weak_norm": traj.sup_weak_norm(),
            "sup_abs": traj.sup_abs(),
            "decay": decay,
            "energy": { "initial": e0, "max_increase": energy_increase },
        });
        let mut w = create(p)?;
        serde_json::to_writer_pretty(&mut w, &report).map_err(grushin::Error::from)?;
        writeln!(w).map_err(grushin::Error::from)?;
    }
    if !converged {
        return Err(CliError::Failed("Picard iteration did not converge".into()));
    }
    Ok(())
}

fn run_lorentz(a: LorentzArgs) -> CliResult<()> {
    let mut c = match &a.config {
        Some(p) => RunConfig::load(p).map_err(usage)?,
        None => RunConfig::default(),
    };
    if a.p.is_some() {
        c.lorentz.p = a.p;
    }
    if let Some(q) = a.q {
        c.lorentz.q = q.is_finite().then_some(q);
    }
    c.lorentz.seminorm |= a.seminorm;
    let c = finish(c)?;
    let idx = c.lorentz_index().map_err(usage)?;
    let file = File::open(&a.input).map_err(|e| usage(format!("{}: {e}", a.input.display())))?;
    let f = read_csv(BufReader::new(file)).map_err(usage)?;
    let v = if c.lorentz.seminorm { lorentz_seminorm(&f, idx) } else { lorentz_norm(&f, idx) };
    println!("{v}");
    if let Some(p) = a.profile {
        let rows: Vec<Vec<f64>> = rearrange(&f).table().into_iter().map(|(t, s, ss)| vec![t, s, ss]).collect();
        write_table(create(&p)?, &config_comment(&c), &["t", "f_star", "f_star_star"], &rows)?;
    }
    Ok(())
}

fn observable(kind: ObservableArg) -> Box<dyn Observable> {
    fn norm2(v: &[f64]) -> f64 {
        v.iter().map(|a| a * a).sum()
    }
    match kind {
        ObservableArg::One => Box::new(|_: &[f64], _: &[f64]| 1.0),
        ObservableArg::X1 => Box::new(|x: &[f64], _: &[f64]| x[0]),
        ObservableArg::Gaussian => Box::new(|x: &[f64], y: &[f64]| (-0.5 * (norm2(x) + norm2(y))).exp()),
        ObservableArg::Bump => Box::new(|x: &[f64], y: &[f64]| {
            let s2 = (norm2(x) + norm2(y)) / 4.0;
            if s2 < 1.0 {
                (1.0 - 1.0 / (1.0 - s2)).exp()
            } else {
                0.0
            }
        }),
    }
}

fn run_mc(a: McArgs) -> CliResult<()> {
    let mut c = a.common.resolve()?;
    if let Some(v) = a.paths {
        c.mc.paths = v;
    }
    if let Some(v) = a.dt {
        c.mc.dt = v;
    }
    if let Some(v) = a.seed {
        c.mc.seed = v;
    }
    if let Some(v) = a.start {
        c.mc.start = v;
    }
    let c = finish(c)?;
    if !(a.t > 0.0) {
        return Err(usage("--t must be positive"));
    }
    let params = c.params()?;
    let cfg = c.mc_config()?;
    let phi = observable(a.observable);
    let est = simulate_expectation(phi.as_ref(), a.t, &cfg, &params)?;
    let mut header = vec!["t", "dt", "paths", "mean", "stderr"];
    let mut row = vec![a.t, est.dt, est.paths as f64, est.mean, est.stderr];
    if a.compare {
        let grid = c.grid()?;
        let sampled = GridFunction::from_fn(grid, |x, y| phi.eval(x, y))?;
        let evolved = Semigroup::new(params, c.semigroup, c.kernel)?.apply(a.t, &sampled)?;
        let reference = evolved
            .sample(&cfg.start.x, &cfg.start.y)
            .ok_or_else(|| usage("start point lies outside the grid"))?;
        header.extend(["reference", "z"]);
        row.extend([reference, (est.mean - reference) / est.stderr]);
    }
    let mut comments = config_comment(&c);
    comments.push(format!("observable: {}", a.observable.to_possible_value().expect("named").get_name()));
    match &a.out {
        Some(p) => write_table(create(p)?, &comments, &header, &[row])?,
        None => write_table(std::io::stdout().lock(), &comments, &header, &[row])?,
    }
    if a.histogram.is_some() || a.plot.is_some() {
        let grid = c.grid()?;
        let hist = density_histogram(a.t, &cfg, &params, &grid)?;
        if let Some(p) = &a.histogram {
            let mut cm = config_comment(&c);
            cm.push(format!("t: {} paths: {} escaped: {}", a.t, hist.paths, hist.escaped));
            write_csv(create(p)?, &hist.density, &cm)?;
        }
        if let Some(p) = &a.plot {
            let xa = &grid.x_axes()[0];
            let xs = xa.nodes();
            let stride = grid.x_len() / xa.count;
            let empirical: Vec<f64> = (0..xa.count)
                .map(|i| (0..stride).map(|j| hist.x_hits[i * stride + j]).sum::<u64>() as f64 / (hist.paths as f64 * xa.spacing()))
                .collect();
            let exact: Vec<f64> = xs.iter().map(|&x| gaussian_marginal(&[x], &cfg.start.x[..1], a.t)).collect();
            let spec = PlotSpec {
                title: format!("x1 marginal at t = {}", a.t),
                x_label: "x1".into(),
                y_label: "density".into(),
                description: Some(c.echo()),
                ..PlotSpec::default()
            };
            plot_emit(&[Series::new("histogram", xs.clone(), empirical), Series::new("Gaussian", xs, exact)], &spec, p)?;
        }
    }
    Ok(())
}

fn run_verify(a: VerifyArgs) -> CliResult<()> {
    let suite = Suite::load(&a.suite).map_err(|e| usage(format!("suite {}: {e}", a.suite)))?;
    let report = run_suite(&suite)?;
    for o in &report.checks {
        let mark = match o.status {
            Status::Passed => "PASS",
            Status::Failed if o.informational => "INFO",
            Status::Failed => "FAIL",
            Status::Errored => "ERROR",
        };
        let measured = o.measured.map_or("-".to_string(), |m| format!("{m:.4e}"));
        println!("{mark:5} {:24} measured {measured:>11}  tolerance {:.1e}", o.name, o.tolerance);
        if let Some(e) = &o.error {
            println!("      {e}");
        }
    }
    let s = &report.summary;
    println!("{} passed, {} failed, {} errored of {}", s.passed, s.failed, s.errored, s.total);
    if let Some(p) = &a.report {
        let out = if a.timings { report.clone() } else { report.canonical() };
        std::fs::write(p, out.to_json()?).map_err(grushin::Error::from)?;
    }
    if !s.ok {
        return Err(CliError::Failed("verification failed".into()));
    }
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var("GRUSHIN_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().map_err(|_| usage(format!("GRUSHIN_THREADS={v:?} is not a positive integer")))?;
    if n == 0 {
        return Err(usage("GRUSHIN_THREADS must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Failed(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|_| match cli.command {
        Command::Kernel(a) => run_kernel(a),
        Command::Evolve(a) => run_evolve(a),
        Command::Solve(a) => run_solve(a),
        Command::Lorentz(a) => run_lorentz(a),
        Command::Mc(a) => run_mc(a),
        Command::Verify(a) => run_verify(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
