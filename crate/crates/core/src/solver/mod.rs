//! Mild solutions of `u_t = Δ_G u + |u|^(ρ-1) u` on a finite horizon by the
//! Picard sequence `u_1 = S(t) u0`, `u_(j+1) = u_1 + B(u_j)`, together with an
//! explicit time-marching oracle and the diagnostics built on trajectories.

mod diagnostics;
mod march;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::kernel::KernelQuadrature;
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::model::{GridFunction, ModelParams};
use crate::semigroup::{Semigroup, SemigroupMethod};

pub use diagnostics::{
    cylindrical_defect, decay_fit, energy, energy_series, energy_with_weight, initial_trace, profile,
    profile_agreement, profile_residual, self_similarity_defect, symmetry_preserved, DecayReport,
    ProfileResidual, ProfileWindow, SelfSimilarityReport, SimilarityWindow,
};
pub use march::{blowup_probe, BlowupConfig, BlowupReport, MarchScheme};

/// Strictly increasing positive times with consecutive ratios in `(1, 2]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Geometric nodes from `t_min` to `horizon`, `per_doubling` per factor 2.
    pub fn geometric(t_min: f64, horizon: f64, per_doubling: usize) -> Result<Self> {
        if !(t_min > 0.0 && horizon > t_min && horizon.is_finite()) {
            return Err(invalid(format!("need 0 < t_min < horizon, got {t_min}, {horizon}")));
        }
        if per_doubling == 0 {
            return Err(invalid("nodes per doubling must be positive"));
        }
        let steps = ((horizon / t_min).log2() * per_doubling as f64 - 1e-9).ceil().max(1.0) as usize;
        let ratio = (horizon / t_min).powf(1.0 / steps as f64);
        let mut nodes: Vec<f64> = (0..steps).map(|i| t_min * ratio.powi(i as i32)).collect();
        nodes.push(horizon);
        Self::from_nodes(nodes)
    }

    /// `dt, 2 dt, ..., horizon`.
    pub fn uniform(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0 && horizon >= dt) {
            return Err(invalid(format!("need 0 < dt <= horizon, got {dt}, {horizon}")));
        }
        let m = (horizon / dt - 1e-9).ceil() as usize;
        Self::from_nodes((1..=m).map(|i| (i as f64 * dt).min(horizon)).collect())
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() || !(nodes[0] > 0.0) || nodes.iter().any(|t| !t.is_finite()) {
            return Err(invalid("time nodes must be finite and positive"));
        }
        for w in nodes.windows(2) {
            let r = w[1] / w[0];
            if !(r > 1.0 && r <= 2.0 + 1e-12) {
                return Err(invalid(format!("consecutive time ratio {r} outside (1, 2]")));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn t_min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// `t_n - t_(n-1)`, with `t_(-1) = 0`.
    pub fn step(&self, n: usize) -> f64 {
        if n == 0 {
            self.nodes[0]
        } else {
            self.nodes[n] - self.nodes[n - 1]
        }
    }

    /// Index of the node equal to `t` up to relative `1e-9`.
    pub fn find(&self, t: f64) -> Option<usize> {
        self.nodes.iter().position(|s| (s - t).abs() <= 1e-9 * t.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub horizon: f64,
    /// `t_min = t_min_fraction * horizon`.
    pub t_min_fraction: f64,
    pub nodes_per_doubling: usize,
    /// Sup-node `L^inf` increment at which the iteration stops.
    pub picard_tol: f64,
    pub max_picard: usize,
    /// `S(tau)` is replaced by the identity inside the Duhamel sum for
    /// `tau < tau_min_fraction * horizon`.
    pub tau_min_fraction: f64,
    /// Iterates beyond this multiple of the initial sup norm count as divergent.
    pub divergence_factor: f64,
    /// Contraction ratios at or above this value are flagged in the report.
    pub contraction_guard: f64,
    pub method: SemigroupMethod,
    pub quadrature: KernelQuadrature,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            horizon: 8.0,
            t_min_fraction: 2f64.powi(-10),
            nodes_per_doubling: 4,
            picard_tol: 1e-8,
            max_picard: 50,
            tau_min_fraction: 1e-3,
            divergence_factor: 1e3,
            contraction_guard: 1.0,
            method: SemigroupMethod::default(),
            quadrature: KernelQuadrature::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.picard_tol > 0.0) {
            return Err(invalid("picard_tol must be positive"));
        }
        if self.max_picard == 0 {
            return Err(invalid("max_picard must be at least 1"));
        }
        if !(self.t_min_fraction > 0.0 && self.t_min_fraction < 1.0) {
            return Err(invalid("t_min_fraction must lie in (0, 1)"));
        }
        if !(self.tau_min_fraction >= 0.0 && self.divergence_factor > 1.0) {
            return Err(invalid("need tau_min_fraction >= 0 and divergence_factor > 1"));
        }
        self.quadrature.validate()
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::geometric(self.t_min_fraction * self.horizon, self.horizon, self.nodes_per_doubling)
    }

    pub fn tau_min(&self) -> f64 {
        self.tau_min_fraction * self.horizon
    }
}

/// States at every node of a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub time_grid: TimeGrid,
    pub states: Vec<GridFunction>,
    /// `||u(t_n)||_(p,inf)` at the critical `p`.
    pub weak_norms: Vec<f64>,
    pub p: f64,
}

impl Trajectory {
    pub fn new(time_grid: TimeGrid, states: Vec<GridFunction>, p: f64) -> Result<Self> {
        if states.len() != time_grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} states for {} time nodes",
                states.len(),
                time_grid.len()
            )));
        }
        if states.windows(2).any(|w| w[0].grid() != w[1].grid()) {
            return Err(Error::ShapeMismatch("states live on different grids".into()));
        }
        let idx = LorentzIndex::weak(p)?;
        let weak_norms = states.iter().map(|u| lorentz_norm(u, idx)).collect();
        Ok(Self { time_grid, states, weak_norms, p })
    }

    pub fn times(&self) -> &[f64] {
        self.time_grid.nodes()
    }

    pub fn state(&self, n: usize) -> &GridFunction {
        &self.states[n]
    }

    /// `sup_n ||u(t_n)||_(p,inf)`, the discrete norm of the solution space.
    pub fn sup_weak_norm(&self) -> f64 {
        self.weak_norms.iter().copied().fold(0.0, f64::max)
    }

    pub fn sup_abs(&self) -> f64 {
        self.states.iter().map(GridFunction::max_abs).fold(0.0, f64::max)
    }

    /// Recomputes the cached norms and compares them bitwise.
    pub fn norms_consistent(&self) -> bool {
        let idx = LorentzIndex::weak(self.p).expect("p was validated on construction");
        self.states.iter().zip(&self.weak_norms).all(|(u, n)| lorentz_norm(u, idx) == *n)
    }

    /// Largest sup-node `L^inf` distance to another trajectory on the same nodes.
    pub fn distance(&self, other: &Trajectory) -> Result<f64> {
        if self.times() != other.times() {
            return Err(Error::ShapeMismatch("trajectories use different time grids".into()));
        }
        let mut d: f64 = 0.0;
        for (a, b) in self.states.iter().zip(&other.states) {
            d = d.max(a.sub(b)?.max_abs());
        }
        Ok(d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub status: ConvergenceStatus,
    /// Number of Picard maps applied.
    pub iterations: usize,
    /// Sup-node `L^inf` distance between consecutive iterates.
    pub increments: Vec<f64>,
    /// `increments[j] / increments[j - 1]`.
    pub ratios: Vec<f64>,
    /// Every ratio below the contraction guard.
    pub contracting: bool,
    /// `||u0||_(p,inf)` at the critical `p`.
    pub initial_weak_norm: f64,
    pub initial_sup: f64,
}

fn nonlinear(u: &GridFunction, params: &ModelParams) -> GridFunction {
    u.map(|w| params.nonlinearity(w)).expect("pointwise map keeps the shape")
}

/// A model, a configuration and a semigroup whose operator cache is shared
/// by every run.
#[derive(Debug)]
pub struct Solver {
    params: ModelParams,
    cfg: SolverConfig,
    time_grid: TimeGrid,
    sg: Semigroup,
}

impl Solver {
    pub fn new(params: ModelParams, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        let sg = Semigroup::new(params, cfg.method, cfg.quadrature)?;
        Ok(Self { params, cfg, time_grid: cfg.time_grid()?, sg })
    }

    /// Uses a different time grid than the configuration's geometric one.
    pub fn with_time_grid(mut self, time_grid: TimeGrid) -> Self {
        self.time_grid = time_grid;
        self
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn time_grid(&self) -> &TimeGrid {
        &self.time_grid
    }

    pub fn semigroup(&self) -> &Semigroup {
        &self.sg
    }

    fn check(&self, u0: &GridFunction) -> Result<()> {
        let g = u0.grid();
        if g.n() != self.params.n() || g.k() != self.params.k() {
            return Err(Error::ShapeMismatch("datum grid does not match the model".into()));
        }
        Ok(())
    }

    /// `S(tau)`, or the identity below `tau_min`.
    fn propagate(&self, tau: f64, phi: &GridFunction) -> Result<GridFunction> {
        if tau < self.cfg.tau_min() {
            Ok(phi.clone())
        } else {
            self.sg.apply(tau, phi)
        }
    }

    /// `S(t_n) u0` at every node.
    pub fn linear(&self, u0: &GridFunction) -> Result<Vec<GridFunction>> {
        self.check(u0)?;
        self.time_grid.nodes().iter().map(|&t| self.sg.apply_transient(t, u0)).collect()
    }

    /// `∫_0^t0 S(t0 - s) f(S(s) u0) ds` by Simpson's rule.
    fn head(&self, u0: &GridFunction, linear0: &GridFunction) -> Result<GridFunction> {
        let t0 = self.time_grid.t_min();
        let mid = self.sg.apply_transient(0.5 * t0, u0)?;
        let a = if t0 < self.cfg.tau_min() {
            nonlinear(u0, &self.params)
        } else {
            self.sg.apply_transient(t0, &nonlinear(u0, &self.params))?
        };
        let b = if 0.5 * t0 < self.cfg.tau_min() {
            nonlinear(&mid, &self.params)
        } else {
            self.sg.apply_transient(0.5 * t0, &nonlinear(&mid, &self.params))?
        };
        let c = nonlinear(linear0, &self.params);
        Ok(a.axpy(4.0, &b)?.add(&c)?.scale(t0 / 6.0))
    }

    /// `B(u)(t_n)` for every node: trapezoid in `s` on each interval,
    /// accumulated through `B_n = S(Δ_n)[B_(n-1) + (Δ_n/2) f_(n-1)] + (Δ_n/2) f_n`.
    fn duhamel_all(&self, states: &[GridFunction], head: &GridFunction) -> Result<Vec<GridFunction>> {
        let mut out = Vec::with_capacity(states.len());
        let mut prev_f = nonlinear(&states[0], &self.params);
        out.push(head.clone());
        for n in 1..states.len() {
            let dt = self.time_grid.step(n);
            let f = nonlinear(&states[n], &self.params);
            let carried = self.propagate(dt, &out[n - 1].axpy(0.5 * dt, &prev_f)?)?;
            out.push(carried.axpy(0.5 * dt, &f)?);
            prev_f = f;
        }
        Ok(out)
    }

    /// `B(u)(t_n)` for a trajectory populated up to node `n`.
    pub fn duhamel(&self, u0: &GridFunction, states: &[GridFunction], n: usize) -> Result<GridFunction> {
        self.check(u0)?;
        if n >= self.time_grid.len() || states.len() <= n {
            return Err(Error::Unpopulated(n));
        }
        let linear0 = self.sg.apply_transient(self.time_grid.t_min(), u0)?;
        let head = self.head(u0, &linear0)?;
        Ok(self.duhamel_all(&states[..=n], &head)?.pop().expect("at least one node"))
    }

    /// The Picard iteration over the whole trajectory.
    pub fn picard(&self, u0: &GridFunction) -> Result<(Trajectory, ConvergenceReport)> {
        self.check(u0)?;
        let p = self.params.p_critical();
        let initial_weak_norm = lorentz_norm(u0, LorentzIndex::weak(p)?);
        let lin = self.linear(u0)?;
        let head = self.head(u0, &lin[0])?;
        let initial_sup = lin.iter().map(GridFunction::max_abs).fold(u0.max_abs(), f64::max);
        let limit = self.cfg.divergence_factor * initial_sup;

        let mut u = lin.clone();
        let mut increments = Vec::new();
        let mut status = ConvergenceStatus::MaxIterations;
        for _ in 0..self.cfg.max_picard {
            let b = self.duhamel_all(&u, &head)?;
            let next: Vec<GridFunction> =
                lin.iter().zip(&b).map(|(l, b)| l.add(b)).collect::<Result<_>>()?;
            let mut inc: f64 = 0.0;
            let mut sup: f64 = 0.0;
            for (a, b) in next.iter().zip(&u) {
                inc = inc.max(a.sub(b)?.max_abs());
                sup = sup.max(a.max_abs());
            }
            u = next;
            increments.push(inc);
            if !(sup <= limit) {
                status = ConvergenceStatus::Diverged;
                break;
            }
            if inc < self.cfg.picard_tol {
                status = ConvergenceStatus::Converged;
                break;
            }
        }
        let ratios: Vec<f64> = increments.windows(2).map(|w| w[1] / w[0]).collect();
        let contracting = ratios.iter().all(|r| *r < self.cfg.contraction_guard);
        let report = ConvergenceReport {
            status,
            iterations: increments.len(),
            increments,
            ratios,
            contracting,
            initial_weak_norm,
            initial_sup,
        };
        let traj = if status == ConvergenceStatus::Diverged {
            // Non-finite iterates cannot be stored; keep the finite prefix.
            let finite: Vec<GridFunction> = u.into_iter().take_while(|s| s.values().iter().all(|v| v.is_finite())).collect();
            let nodes = self.time_grid.nodes()[..finite.len().max(1)].to_vec();
            let states = if finite.is_empty() { vec![lin[0].clone()] } else { finite };
            Trajectory::new(TimeGrid::from_nodes(nodes)?, states, p)?
        } else {
            Trajectory::new(self.time_grid.clone(), u, p)?
        };
        Ok((traj, report))
    }

    /// `max_n ||u_n - S(t_n) u0 - B(u)(t_n)||_inf`.
    pub fn fixed_point_residual(&self, u0: &GridFunction, traj: &Trajectory) -> Result<f64> {
        if traj.times() != self.time_grid.nodes() {
            return Err(invalid("trajectory does not use the solver's time grid"));
        }
        let lin = self.linear(u0)?;
        let head = self.head(u0, &lin[0])?;
        let b = self.duhamel_all(&traj.states, &head)?;
        let mut r: f64 = 0.0;
        for ((u, l), b) in traj.states.iter().zip(&lin).zip(&b) {
            r = r.max(u.sub(l)?.sub(b)?.max_abs());
        }
        Ok(r)
    }
}

/// One-shot Picard solve with a fresh operator cache.
pub fn picard_solve(
    u0: &GridFunction,
    params: &ModelParams,
    cfg: &SolverConfig,
) -> Result<(Trajectory, ConvergenceReport)> {
    Solver::new(*params, *cfg)?.picard(u0)
}

#[cfg(test)]
mod tests;
