//! Explicit exponential time stepping, used as an independent oracle for the
//! Picard solution and as the blow-up probe.

use serde::{Deserialize, Serialize};

use super::{diagnostics::energy, nonlinear, Solver, TimeGrid, Trajectory};
use crate::error::{invalid, Result};
use crate::model::{GridFunction, ModelParams};
use crate::semigroup::Semigroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarchScheme {
    /// `u_n = S(Δ)(u_(n-1) + Δ f(u_(n-1)))`
    #[default]
    Euler,
    /// Euler predictor, trapezoid corrector on the nonlinear term.
    Heun,
}

fn step(sg: &Semigroup, params: &ModelParams, scheme: MarchScheme, dt: f64, u: &GridFunction) -> Result<GridFunction> {
    let fu = nonlinear(u, params);
    let euler = sg.apply(dt, &u.axpy(dt, &fu)?)?;
    match scheme {
        MarchScheme::Euler => Ok(euler),
        MarchScheme::Heun => {
            let half = sg.apply(dt, &u.axpy(0.5 * dt, &fu)?)?;
            half.axpy(0.5 * dt, &nonlinear(&euler, params))
        }
    }
}

impl Solver {
    /// Steps from `t = 0` through every node of the time grid. The linear
    /// part `S(t_n) u0` is applied in one go and only the remainder
    /// `w = u - S(t) u0` is marched, so sub-cell steps do not compound the
    /// quadrature diffusion of short-time operators:
    /// `w_n = S(Δ)(w_(n-1) + Δ f(u_(n-1)))` for Euler.
    pub fn march(&self, u0: &GridFunction, scheme: MarchScheme) -> Result<Trajectory> {
        self.check(u0)?;
        let tg = self.time_grid();
        let sg = self.semigroup();
        let params = self.params();
        let mut states = Vec::with_capacity(tg.len());
        let mut u = u0.clone();
        let mut w = GridFunction::zeros(u0.grid().clone());
        for n in 0..tg.len() {
            let dt = tg.step(n);
            let lin = sg.apply_transient(tg.nodes()[n], u0)?;
            let fu = nonlinear(&u, params);
            let euler = sg.apply(dt, &w.axpy(dt, &fu)?)?;
            w = match scheme {
                MarchScheme::Euler => euler,
                MarchScheme::Heun => {
                    let pred = lin.add(&euler)?;
                    sg.apply(dt, &w.axpy(0.5 * dt, &fu)?)?.axpy(0.5 * dt, &nonlinear(&pred, params))?
                }
            };
            u = lin.add(&w)?;
            states.push(u.clone());
        }
        Trajectory::new(tg.clone(), states, params.p_critical())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub dt: f64,
    pub horizon: f64,
    /// Stop once the sup norm exceeds this multiple of its initial value.
    pub growth_cap: f64,
    pub scheme: MarchScheme,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        Self { dt: 0.01, horizon: 2.0, growth_cap: 10.0, scheme: MarchScheme::Euler }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupReport {
    pub times: Vec<f64>,
    pub sup_norms: Vec<f64>,
    pub energies: Vec<f64>,
    pub initial_sup: f64,
    pub initial_energy: f64,
    /// `max sup / initial sup`
    pub growth: f64,
    /// The sup norm passed `growth_cap * initial_sup` within the horizon.
    pub blew_up: bool,
    /// The sup norm never decreased between steps.
    pub monotone: bool,
}

/// Marches with a uniform step until the horizon, the growth cap, or a
/// non-finite state.
pub fn blowup_probe(
    sg: &Semigroup,
    u0: &GridFunction,
    cfg: &BlowupConfig,
) -> Result<BlowupReport> {
    if !(cfg.growth_cap > 1.0) {
        return Err(invalid("growth cap must exceed 1"));
    }
    let params = *sg.params();
    let tg = TimeGrid::uniform(cfg.dt, cfg.horizon)?;
    let initial_sup = u0.max_abs();
    let initial_energy = energy(u0, &params)?;
    let (mut times, mut sup_norms, mut energies) = (Vec::new(), Vec::new(), Vec::new());
    let mut u = u0.clone();
    let mut blew_up = false;
    for n in 0..tg.len() {
        u = step(sg, &params, cfg.scheme, tg.step(n), &u)?;
        let s = u.max_abs();
        if !s.is_finite() {
            blew_up = true;
            break;
        }
        times.push(tg.nodes()[n]);
        sup_norms.push(s);
        energies.push(energy(&u, &params)?);
        if s > cfg.growth_cap * initial_sup {
            blew_up = true;
            break;
        }
    }
    let growth = sup_norms.iter().copied().fold(0.0, f64::max) / initial_sup;
    let monotone = sup_norms.windows(2).all(|w| w[1] >= w[0]);
    Ok(BlowupReport { times, sup_norms, energies, initial_sup, initial_energy, growth, blew_up, monotone })
}
