//! The heat semigroup `S(t) phi = ∫ K(x, w, y - z; t) phi(w, z) dw dz` on
//! grid functions, by two independent routes.

mod diagnostics;
mod direct;
mod spectral;
mod symmetry;

use std::collections::VecDeque;
use std::sync::Arc;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelQuadrature;
use crate::model::{Grid, GridFunction, ModelParams};

pub use diagnostics::{
    chapman_kolmogorov_defect, duality_defect, mass_report, smoothing_fit, yamazaki_diagnostic,
    MassReport, NormKind, SmoothingReport, YamazakiReport,
};

pub(crate) use diagnostics::linear_fit;
use direct::DirectTable;
use spectral::SpectralOperator;
use symmetry::SymmetryClass;

/// How `S(t)` is discretised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "route", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemigroupMethod {
    /// Dense quadrature against point samples of the kernel.
    Direct,
    /// DFT along `y` (box zero-padded by `padding` per axis) and per-frequency
    /// Mehler matrices in `x`.
    Spectral { padding: usize },
}

impl Default for SemigroupMethod {
    fn default() -> Self {
        SemigroupMethod::Spectral { padding: 2 }
    }
}

impl SemigroupMethod {
    /// Checks the padding against the `y` axes of `grid`.
    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if let SemigroupMethod::Spectral { padding } = *self {
            if padding == 0 {
                return Err(invalid("spectral padding must be at least 1"));
            }
            for a in grid.y_axes() {
                let freq = padding * a.count;
                if freq % 2 != 0 || freq < 8 {
                    return Err(invalid(format!(
                        "spectral frequency count must be even and >= 8, got {freq}"
                    )));
                }
            }
        }
        Ok(())
    }
}

enum Operator {
    Spectral(SpectralOperator),
    Direct(DirectTable),
}

impl Operator {
    fn bytes(&self) -> usize {
        match self {
            Operator::Spectral(s) => s.bytes(),
            Operator::Direct(d) => d.bytes(),
        }
    }

    fn apply(&self, phi: &[f64]) -> Vec<f64> {
        match self {
            Operator::Spectral(s) => s.apply(phi),
            Operator::Direct(d) => d.apply(phi),
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
struct CacheKey {
    t: i64,
    grid: Vec<u64>,
}

struct Cache {
    entries: VecDeque<(CacheKey, Arc<Operator>)>,
    bytes: usize,
}

/// Default memory budget for cached operators.
pub const DEFAULT_CACHE_BYTES: usize = 512 << 20;

/// `S(t)` for a fixed model, method and kernel quadrature, with a cache of
/// assembled operators keyed by `(t, grid)`.
pub struct Semigroup {
    params: ModelParams,
    method: SemigroupMethod,
    quadrature: KernelQuadrature,
    budget: usize,
    cache: Mutex<Cache>,
}

impl std::fmt::Debug for Semigroup {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Semigroup")
            .field("params", &self.params)
            .field("method", &self.method)
            .field("quadrature", &self.quadrature)
            .finish()
    }
}

impl Semigroup {
    pub fn new(params: ModelParams, method: SemigroupMethod, quadrature: KernelQuadrature) -> Result<Self> {
        quadrature.validate()?;
        if method == SemigroupMethod::Direct && !(1..=2).contains(&params.k()) {
            return Err(invalid("the direct route supports k in {1, 2}"));
        }
        if params.k() > 2 {
            return Err(invalid("the spectral route supports k in {1, 2}"));
        }
        Ok(Self {
            params,
            method,
            quadrature,
            budget: DEFAULT_CACHE_BYTES,
            cache: Mutex::new(Cache { entries: VecDeque::new(), bytes: 0 }),
        })
    }

    pub fn spectral(params: ModelParams) -> Self {
        Self::new(params, SemigroupMethod::default(), KernelQuadrature::default())
            .expect("default configuration is valid")
    }

    pub fn direct(params: ModelParams) -> Self {
        Self::new(params, SemigroupMethod::Direct, KernelQuadrature::default())
            .expect("default configuration is valid")
    }

    pub fn with_cache_budget(mut self, bytes: usize) -> Self {
        self.budget = bytes;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn method(&self) -> SemigroupMethod {
        self.method
    }

    pub fn quadrature(&self) -> &KernelQuadrature {
        &self.quadrature
    }

    pub fn clear_cache(&self) {
        let mut c = self.cache.lock();
        c.entries.clear();
        c.bytes = 0;
    }

    /// `S(t) phi`.
    pub fn apply(&self, t: f64, phi: &GridFunction) -> Result<GridFunction> {
        self.apply_with(t, phi, true)
    }

    /// `S(t) phi` without inserting a newly built operator into the cache,
    /// for times that are used once.
    pub fn apply_transient(&self, t: f64, phi: &GridFunction) -> Result<GridFunction> {
        self.apply_with(t, phi, false)
    }

    fn apply_with(&self, t: f64, phi: &GridFunction, keep: bool) -> Result<GridFunction> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::NonPositiveTime(t));
        }
        let grid = phi.grid();
        if grid.n() != self.params.n() || grid.k() != self.params.k() {
            return Err(Error::ShapeMismatch("grid dimensions do not match the model".into()));
        }
        self.method.validate(grid)?;
        if phi.values().iter().all(|v| *v == 0.0) {
            return Ok(phi.clone());
        }
        let op = self.operator(t, grid, keep);
        let mut out = op.apply(phi.values());
        SymmetryClass::detect(phi).enforce(grid, &mut out);
        GridFunction::new(grid.clone(), out)
    }

    fn operator(&self, t: f64, grid: &Grid, keep: bool) -> Arc<Operator> {
        let key = CacheKey { t: (t.ln() * 1e12).round() as i64, grid: grid.cache_key() };
        {
            let mut c = self.cache.lock();
            if let Some(pos) = c.entries.iter().position(|(k, _)| *k == key) {
                let entry = c.entries.remove(pos).expect("position is valid");
                let op = entry.1.clone();
                c.entries.push_back(entry);
                return op;
            }
        }
        let op = Arc::new(match self.method {
            SemigroupMethod::Spectral { padding } => Operator::Spectral(SpectralOperator::build(
                grid,
                t,
                &self.params,
                padding,
                self.quadrature.small_arg_threshold,
            )),
            SemigroupMethod::Direct => Operator::Direct(DirectTable::build(grid, t, &self.params, &self.quadrature)),
        });
        let size = op.bytes();
        if keep && size <= self.budget {
            let mut c = self.cache.lock();
            while c.bytes + size > self.budget {
                match c.entries.pop_front() {
                    Some((_, old)) => c.bytes -= old.bytes(),
                    None => break,
                }
            }
            c.bytes += size;
            c.entries.push_back((key, op.clone()));
        }
        op
    }
}

/// One-shot `S(t) phi` without a persistent cache.
pub fn apply(
    t: f64,
    phi: &GridFunction,
    method: SemigroupMethod,
    params: &ModelParams,
    q: &KernelQuadrature,
) -> Result<GridFunction> {
    Semigroup::new(*params, method, *q)?.apply(t, phi)
}

#[cfg(test)]
mod tests;
