//! Run configuration shared by the command line tool.
//!
//! A TOML file with one table per module. Every key is optional and unknown
//! keys are rejected:
//!
//! ```toml
//! [model]
//! n = 1
//! k = 1
//! rho = 3.0
//!
//! [grid]
//! half_width = 8.0
//! count = 128
//!
//! [semigroup]
//! route = "spectral"
//! padding = 2
//!
//! [solver]
//! horizon = 8.0
//! integrator = "picard"
//!
//! [datum]
//! kind = "homogeneous"
//! epsilon = 0.1
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelQuadrature;
use crate::lorentz::LorentzIndex;
use crate::mc::MCConfig;
use crate::model::{Datum, Grid, ModelParams, Point};
use crate::semigroup::SemigroupMethod;
use crate::solver::{MarchScheme, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub n: usize,
    pub k: usize,
    pub rho: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::reference();
        Self { n: p.n(), k: p.k(), rho: p.rho() }
    }
}

/// Symmetric box `[-half_width, half_width]` with `count` cells per axis.
/// The `y` axes may use their own extent and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub count: usize,
    pub y_half_width: Option<f64>,
    pub y_count: Option<usize>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_width: 8.0, count: 128, y_half_width: None, y_count: None }
    }
}

impl GridSection {
    /// Parses `HALF:COUNT` or `HALF:COUNT,YHALF:YCOUNT`.
    pub fn parse(spec: &str) -> Result<Self> {
        let pair = |s: &str| -> Result<(f64, usize)> {
            let (h, c) = s.split_once(':').ok_or_else(|| invalid(format!("grid spec {s:?} is not HALF:COUNT")))?;
            let h = h.trim().parse::<f64>().map_err(|e| invalid(format!("grid half width {h:?}: {e}")))?;
            let c = c.trim().parse::<usize>().map_err(|e| invalid(format!("grid count {c:?}: {e}")))?;
            Ok((h, c))
        };
        match spec.split_once(',') {
            None => {
                let (half_width, count) = pair(spec)?;
                Ok(Self { half_width, count, y_half_width: None, y_count: None })
            }
            Some((x, y)) => {
                let (half_width, count) = pair(x)?;
                let (yh, yc) = pair(y)?;
                Ok(Self { half_width, count, y_half_width: Some(yh), y_count: Some(yc) })
            }
        }
    }

    pub fn build(&self, params: &ModelParams) -> Result<Grid> {
        Grid::boxed(
            params.n(),
            params.k(),
            self.half_width,
            self.count,
            self.y_half_width.unwrap_or(self.half_width),
            self.y_count.unwrap_or(self.count),
        )
    }
}

/// How `solve` produces a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    #[default]
    Picard,
    Euler,
    Heun,
}

impl Integrator {
    pub fn scheme(&self) -> Option<MarchScheme> {
        match self {
            Integrator::Picard => None,
            Integrator::Euler => Some(MarchScheme::Euler),
            Integrator::Heun => Some(MarchScheme::Heun),
        }
    }
}

/// The scalar fields of [`SolverConfig`]; the semigroup route and kernel
/// quadrature come from their own sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub horizon: f64,
    pub t_min_fraction: f64,
    pub nodes_per_doubling: usize,
    pub picard_tol: f64,
    pub max_picard: usize,
    pub tau_min_fraction: f64,
    pub divergence_factor: f64,
    pub contraction_guard: f64,
    pub integrator: Integrator,
    /// Index of the second weak norm tracked along runs; `4p` when unset.
    pub r: Option<f64>,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            horizon: d.horizon,
            t_min_fraction: d.t_min_fraction,
            nodes_per_doubling: d.nodes_per_doubling,
            picard_tol: d.picard_tol,
            max_picard: d.max_picard,
            tau_min_fraction: d.tau_min_fraction,
            divergence_factor: d.divergence_factor,
            contraction_guard: d.contraction_guard,
            integrator: Integrator::default(),
            r: None,
        }
    }
}

/// Lorentz index for the `lorentz` command; `q` unset means `q = inf`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorentzSection {
    /// Defaults to the critical index of the model.
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub seminorm: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub block: usize,
    pub max_work: f64,
    /// `N + k` coordinates, `x` first; the origin when empty.
    pub start: Vec<f64>,
}

impl Default for McSection {
    fn default() -> Self {
        Self { paths: 100_000, dt: 0.01, seed: 20240611, block: 1024, max_work: 1e9, start: Vec::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub kernel: KernelQuadrature,
    pub semigroup: SemigroupMethod,
    pub solver: SolverSection,
    pub datum: Datum,
    pub lorentz: LorentzSection,
    pub mc: McSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            grid: GridSection::default(),
            kernel: KernelQuadrature::default(),
            semigroup: SemigroupMethod::default(),
            solver: SolverSection::default(),
            datum: Datum::Homogeneous { epsilon: 0.1 },
            lorentz: LorentzSection::default(),
            mc: McSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.model.n, self.model.k, self.model.rho)
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.build(&self.params()?)
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            horizon: s.horizon,
            t_min_fraction: s.t_min_fraction,
            nodes_per_doubling: s.nodes_per_doubling,
            picard_tol: s.picard_tol,
            max_picard: s.max_picard,
            tau_min_fraction: s.tau_min_fraction,
            divergence_factor: s.divergence_factor,
            contraction_guard: s.contraction_guard,
            method: self.semigroup,
            quadrature: self.kernel,
        }
    }

    pub fn decay_index(&self) -> Result<f64> {
        Ok(self.solver.r.unwrap_or(4.0 * self.params()?.p_critical()))
    }

    pub fn lorentz_index(&self) -> Result<LorentzIndex> {
        let p = match self.lorentz.p {
            Some(p) => p,
            None => self.params()?.p_critical(),
        };
        LorentzIndex::new(p, self.lorentz.q.unwrap_or(f64::INFINITY))
    }

    pub fn mc_config(&self) -> Result<MCConfig> {
        let params = self.params()?;
        let d = params.n() + params.k();
        let start = match self.mc.start.len() {
            0 => vec![0.0; d],
            l if l == d => self.mc.start.clone(),
            l => return Err(invalid(format!("mc.start has {l} coordinates, the model needs {d}"))),
        };
        let (x, y) = start.split_at(params.n());
        let mut cfg = MCConfig::new(self.mc.paths, self.mc.dt, self.mc.seed, Point::new(x.to_vec(), y.to_vec())?);
        cfg.block = self.mc.block;
        cfg.max_work = self.mc.max_work;
        Ok(cfg)
    }

    /// Checks every section without running anything.
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        self.kernel.validate()?;
        self.semigroup.validate(&grid)?;
        let s = &self.solver;
        if !(s.horizon > 0.0 && s.horizon.is_finite()) {
            return Err(invalid("solver.horizon must be positive"));
        }
        if s.nodes_per_doubling == 0 {
            return Err(invalid("solver.nodes_per_doubling must be at least 1"));
        }
        self.solver_config().validate()?;
        self.solver_config().time_grid()?;
        let p = self.params()?.p_critical();
        let r = self.decay_index()?;
        if !(r > p && r.is_finite()) {
            return Err(invalid(format!("solver.r = {r} must be finite and exceed p = {p}")));
        }
        self.lorentz_index()?;
        let m = &self.mc;
        if m.paths < 1000 || !(m.dt > 0.0 && m.dt.is_finite()) || m.block == 0 || !(m.max_work > 0.0) {
            return Err(invalid("mc needs paths >= 1000 and positive dt, block and max_work"));
        }
        self.mc_config()?;
        Ok(())
    }

    /// Compact JSON of the effective configuration, echoed into artifacts.
    pub fn echo(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_reference_run() {
        let c = RunConfig::default();
        c.validate().unwrap();
        assert_eq!(c.params().unwrap(), ModelParams::reference());
        assert_eq!(c.grid().unwrap(), Grid::cube(1, 1, 8.0, 128).unwrap());
        assert_eq!(c.solver_config(), SolverConfig::default());
        assert_eq!(c.decay_index().unwrap(), 12.0);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let c = RunConfig::from_toml(
            "[model]\nrho = 2.0\nk = 2\n[semigroup]\nroute = \"direct\"\n[datum]\nkind = \"gaussian\"\namplitude = 1.0\nx_width = 1.0\ny_width = 2.0\n[lorentz]\nq = 2.0\n",
        )
        .unwrap();
        c.validate().unwrap();
        assert_eq!(c.model, ModelSection { n: 1, k: 2, rho: 2.0 });
        assert_eq!(c.semigroup, SemigroupMethod::Direct);
        assert_eq!(c.lorentz_index().unwrap().p(), 2.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in ["[model]\nm = 1\n", "[grids]\ncount = 4\n", "[solver]\nmethod = \"direct\"\n", "[kernel]\ntol = 1.0\n"] {
            assert!(matches!(RunConfig::from_toml(text), Err(Error::Parse(_))), "{text}");
        }
    }

    #[test]
    fn invalid_values_fail_validation() {
        let bad = |f: fn(&mut RunConfig)| {
            let mut c = RunConfig::default();
            f(&mut c);
            c.validate().is_err()
        };
        assert!(bad(|c| c.model.rho = 1.0));
        assert!(bad(|c| c.grid.count = 0));
        assert!(bad(|c| c.semigroup = SemigroupMethod::Spectral { padding: 0 }));
        assert!(bad(|c| c.kernel.abs_tol = 0.0));
        assert!(bad(|c| c.solver.horizon = -1.0));
        assert!(bad(|c| c.solver.r = Some(2.0)));
        assert!(bad(|c| c.lorentz.p = Some(0.5)));
        assert!(bad(|c| c.mc.paths = 10));
        assert!(bad(|c| c.mc.start = vec![0.0; 3]));
    }

    #[test]
    fn grid_spec_parses_both_forms() {
        assert_eq!(GridSection::parse("8:128").unwrap(), GridSection::default());
        let g = GridSection::parse("4:32, 6:64").unwrap();
        assert_eq!((g.y_half_width, g.y_count), (Some(6.0), Some(64)));
        assert!(GridSection::parse("8").is_err());
        assert!(GridSection::parse("a:3").is_err());
    }

    #[test]
    fn echo_round_trips() {
        let mut c = RunConfig::default();
        c.mc.start = vec![0.5, -0.25];
        let back: RunConfig = serde_json::from_str(&c.echo()).unwrap();
        assert_eq!(back, c);
    }
}
