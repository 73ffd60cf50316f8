use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{invalid, Error, Result};
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::model::{
    is_grid_symmetric_under, rotate, Axis, Grid, GridFunction, ModelParams, ScalingMap, SignedPermutation,
    TimeConvention,
};
use crate::semigroup::linear_fit;

/// Centred first and second differences along one axis, one-sided at the ends.
fn differences(u: &GridFunction, axis: usize) -> (Vec<f64>, Vec<f64>) {
    let grid = u.grid();
    let shape = grid.shape();
    let stride: usize = shape[axis + 1..].iter().product();
    let len = shape[axis];
    let h = grid.axes().nth(axis).expect("axis in range").spacing();
    let v = u.values();
    let mut d1 = vec![0.0; v.len()];
    let mut d2 = vec![0.0; v.len()];
    for i in 0..v.len() {
        let j = (i / stride) % len;
        let (lo, mid, hi) = if j == 0 {
            (i, i + stride, i + 2 * stride)
        } else if j == len - 1 {
            (i - 2 * stride, i - stride, i)
        } else {
            (i - stride, i, i + stride)
        };
        d1[i] = if j == 0 {
            (v[mid] - v[lo]) / h
        } else if j == len - 1 {
            (v[hi] - v[mid]) / h
        } else {
            (v[hi] - v[lo]) / (2.0 * h)
        };
        d2[i] = (v[hi] - 2.0 * v[mid] + v[lo]) / (h * h);
    }
    (d1, d2)
}

fn x_norm_sq(grid: &Grid, flat: usize) -> f64 {
    let m = grid.multi_index(flat);
    grid.x_axes().iter().zip(&m).map(|(a, &i)| a.node(i).powi(2)).sum()
}

/// `w ∫|∇_G u|^2 - (1/(ρ+1)) ∫|u|^(ρ+1)` with `∇_G = (∇_x, |x| ∇_y)`.
pub fn energy_with_weight(u: &GridFunction, params: &ModelParams, weight: f64) -> Result<f64> {
    let grid = u.grid();
    if grid.n() != params.n() || grid.k() != params.k() {
        return Err(Error::ShapeMismatch("grid does not match the model".into()));
    }
    let mut grad = vec![0.0; grid.len()];
    for a in 0..grid.n() + grid.k() {
        let (d1, _) = differences(u, a);
        for (i, d) in d1.iter().enumerate() {
            grad[i] += if a < grid.n() { d * d } else { x_norm_sq(grid, i) * d * d };
        }
    }
    let rho = params.rho();
    let potential: f64 = u.values().iter().map(|w| w.abs().powf(rho + 1.0)).sum();
    Ok(grid.cell_volume() * (weight * grad.iter().sum::<f64>() - potential / (rho + 1.0)))
}

/// Energy with gradient weight 1/2.
pub fn energy(u: &GridFunction, params: &ModelParams) -> Result<f64> {
    energy_with_weight(u, params, 0.5)
}

pub fn energy_series(traj: &Trajectory, params: &ModelParams) -> Result<Vec<f64>> {
    traj.states.iter().map(|u| energy(u, params)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarityReport {
    pub lambda: f64,
    pub convention: TimeConvention,
    /// Largest per-time defect.
    pub defect: f64,
    /// `(t, max |u_lambda - u| / ||u||_inf)` over compared nodes.
    pub per_time: Vec<(f64, f64)>,
    /// Nodes skipped because their dilated preimage left the trusted box.
    pub masked: usize,
}

/// Where a self-similarity comparison is trusted: nodes within `interior`
/// times the box half-width along every axis (for the node and its dilated
/// preimage), and times in `t_range` (for the time and its source time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityWindow {
    pub interior: f64,
    pub t_range: (f64, f64),
}

impl SimilarityWindow {
    /// Quarter of the box; times from four `y` cells (the `y` scale of the
    /// solution is `t`) up to half the smallest `y` half-width.
    pub fn for_grid(grid: &Grid) -> Self {
        let hy = grid.y_axes().iter().map(Axis::spacing).fold(0.0, f64::max);
        let half = grid.y_axes().iter().map(|a| 0.5 * (a.max - a.min)).fold(f64::INFINITY, f64::min);
        Self { interior: 0.25, t_range: (4.0 * hy, 0.5 * half) }
    }

    /// Every node and time.
    pub fn everything() -> Self {
        Self { interior: 1.0, t_range: (0.0, f64::INFINITY) }
    }
}

/// Compares `u(t)` with `u_lambda(t)` built from the snapshot at the
/// matching source time, inside `window`.
pub fn self_similarity_defect(
    traj: &Trajectory,
    lambda: f64,
    params: &ModelParams,
    convention: TimeConvention,
    window: SimilarityWindow,
) -> Result<SelfSimilarityReport> {
    let SimilarityWindow { interior, t_range: (t_lo, t_hi) } = window;
    if !(interior > 0.0 && interior <= 1.0) {
        return Err(invalid(format!("interior fraction must lie in (0, 1], got {interior}")));
    }
    let map = ScalingMap::new(lambda, params.rho())?;
    let grid = traj.states[0].grid();
    let axes: Vec<Axis> = grid.axes().copied().collect();
    let n = grid.n();
    let trusted = |a: &Axis, v: f64| {
        let c = 0.5 * (a.min + a.max);
        (v - c).abs() <= interior * 0.5 * (a.max - a.min)
    };
    let mask: Vec<bool> = (0..grid.len())
        .map(|f| {
            grid.multi_index(f).iter().enumerate().all(|(a, &i)| {
                let v = axes[a].node(i);
                let s = if a < n { lambda } else { lambda * lambda };
                trusted(&axes[a], v) && trusted(&axes[a], s * v)
            })
        })
        .collect();
    let masked = mask.iter().filter(|m| !**m).count();
    let mut per_time = Vec::new();
    for (i, &t) in traj.times().iter().enumerate() {
        let source = map.source_time(t, convention);
        let inside = |s: f64| s >= t_lo * (1.0 - 1e-9) && s <= t_hi * (1.0 + 1e-9);
        if !inside(t) || !inside(source) {
            continue;
        }
        let Some(j) = traj.time_grid.find(source) else { continue };
        let scaled = map.apply(&traj.states[j]).function;
        let u = &traj.states[i];
        let scale = u.max_abs();
        let mut d: f64 = 0.0;
        for ((a, b), m) in scaled.values().iter().zip(u.values()).zip(&mask) {
            if *m {
                d = d.max((a - b).abs());
            }
        }
        per_time.push((t, if scale > 0.0 { d / scale } else { 0.0 }));
    }
    if per_time.is_empty() {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let defect = per_time.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(SelfSimilarityReport { lambda, convention, defect, per_time, masked })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub r: f64,
    /// Fitted slope of `ln ||u(t)||_(r,inf)` over the upper half of the nodes.
    pub slope: f64,
    /// `(Q/2)(1/p - 1/r)`
    pub sigma: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
}

pub fn decay_fit(traj: &Trajectory, r: f64, params: &ModelParams) -> Result<DecayReport> {
    let idx = LorentzIndex::weak(r)?;
    let m = traj.states.len();
    let start = m / 2;
    if m - start < 3 {
        return Err(Error::InsufficientSamples { need: 6, got: m });
    }
    let times: Vec<f64> = traj.times()[start..].to_vec();
    let norms: Vec<f64> = traj.states[start..].iter().map(|u| lorentz_norm(u, idx)).collect();
    if norms.iter().any(|v| !(*v > 0.0)) {
        return Err(invalid("decay fit needs nonzero states"));
    }
    let lx: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
    let (slope, _) = linear_fit(&lx, &ly);
    let q = params.q() as f64;
    Ok(DecayReport { r, slope, sigma: 0.5 * q * (1.0 / traj.p - 1.0 / r), times, norms })
}

/// `v(ξ, η) = t^(1/(ρ-1)) u(t^(1/2) ξ, t η, t)` on the grid of `u(t)` scaled
/// by `(t^(-1/2), t^(-1))`.
pub fn profile(traj: &Trajectory, n: usize, params: &ModelParams) -> Result<GridFunction> {
    let t = *traj.times().get(n).ok_or(Error::Unpopulated(n))?;
    let u = &traj.states[n];
    let scale = |a: &Axis, s: f64| Axis { min: a.min * s, max: a.max * s, count: a.count };
    let g = u.grid();
    let grid = Grid::new(
        g.x_axes().iter().map(|a| scale(a, t.sqrt().recip())).collect(),
        g.y_axes().iter().map(|a| scale(a, t.recip())).collect(),
    )?;
    GridFunction::new(grid, u.values().iter().map(|w| t.powf(1.0 / (params.rho() - 1.0)) * w).collect())
}

/// Box in profile variables where the residual is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileWindow {
    pub xi: f64,
    pub eta: f64,
}

impl Default for ProfileWindow {
    fn default() -> Self {
        Self { xi: 2.0, eta: 2.0 }
    }
}

impl ProfileWindow {
    fn contains(&self, grid: &Grid, multi: &[usize]) -> bool {
        let n = grid.n();
        grid.axes().zip(multi).enumerate().all(|(a, (axis, &i))| {
            let lim = if a < n { self.xi } else { self.eta };
            i > 0 && i + 1 < axis.count && axis.node(i).abs() <= lim
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileResidual {
    pub profile: GridFunction,
    /// `Δ_G v + ∇v · (ξ/2, η) + v/(ρ-1) + |v|^(ρ-1) v`, zero outside the window.
    pub field: GridFunction,
    /// Root mean square of the field over window nodes.
    pub interior_mean: f64,
    /// Root mean square of `v/(ρ-1)` over the same nodes.
    pub scale: f64,
}

pub fn profile_residual(
    traj: &Trajectory,
    n: usize,
    params: &ModelParams,
    window: ProfileWindow,
) -> Result<ProfileResidual> {
    let v = profile(traj, n, params)?;
    let grid = v.grid().clone();
    let dims = grid.n() + grid.k();
    let alpha = 1.0 / (params.rho() - 1.0);
    let diffs: Vec<(Vec<f64>, Vec<f64>)> = (0..dims).map(|a| differences(&v, a)).collect();
    let mut field = vec![0.0; grid.len()];
    let (mut sum, mut ref_sum, mut count) = (0.0, 0.0, 0usize);
    for (f, out) in field.iter_mut().enumerate() {
        let m = grid.multi_index(f);
        if !window.contains(&grid, &m) {
            continue;
        }
        let xi2 = x_norm_sq(&grid, f);
        let w = v.values()[f];
        let mut r = alpha * w + params.nonlinearity(w);
        for (a, (d1, d2)) in diffs.iter().enumerate() {
            let c = grid.axes().nth(a).expect("axis in range").node(m[a]);
            if a < grid.n() {
                r += 0.5 * d2[f] + 0.5 * c * d1[f];
            } else {
                r += 0.5 * xi2 * d2[f] + c * d1[f];
            }
        }
        *out = r;
        sum += r * r;
        ref_sum += (alpha * w).powi(2);
        count += 1;
    }
    if count == 0 {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    let c = count as f64;
    Ok(ProfileResidual {
        profile: v,
        field: GridFunction::new(grid, field)?,
        interior_mean: (sum / c).sqrt(),
        scale: (ref_sum / c).sqrt(),
    })
}

/// `max |v_a - v_b| / max |v_a|` over window nodes of the profile at node `a`,
/// with `v_b` interpolated.
pub fn profile_agreement(
    traj: &Trajectory,
    a: usize,
    b: usize,
    params: &ModelParams,
    window: ProfileWindow,
) -> Result<f64> {
    let va = profile(traj, a, params)?;
    let vb = profile(traj, b, params)?;
    let grid = va.grid();
    let (mut diff, mut scale): (f64, f64) = (0.0, 0.0);
    let mut pts = 0;
    let (mut x, mut y) = (vec![0.0; grid.n()], vec![0.0; grid.k()]);
    for f in 0..grid.len() {
        let m = grid.multi_index(f);
        if !window.contains(grid, &m) {
            continue;
        }
        for (d, axis) in grid.x_axes().iter().enumerate() {
            x[d] = axis.node(m[d]);
        }
        for (d, axis) in grid.y_axes().iter().enumerate() {
            y[d] = axis.node(m[grid.n() + d]);
        }
        let Some(w) = vb.sample(&x, &y) else { continue };
        let v = va.values()[f];
        diff = diff.max((v - w).abs());
        scale = scale.max(v.abs());
        pts += 1;
    }
    if pts == 0 {
        return Err(Error::InsufficientSamples { need: 1, got: 0 });
    }
    Ok(if scale > 0.0 { diff / scale } else { 0.0 })
}

/// `max |u(x, y) - u(|x| e_1, |y| e_1)| / max |u|` over nodes.
pub fn cylindrical_defect(u: &GridFunction) -> f64 {
    let grid = u.grid();
    let scale = u.max_abs();
    if scale == 0.0 {
        return 0.0;
    }
    let (n, k) = (grid.n(), grid.k());
    let mut d: f64 = 0.0;
    for f in 0..grid.len() {
        let m = grid.multi_index(f);
        let mut x = vec![0.0; n];
        let mut y = vec![0.0; k];
        x[0] = grid.x_axes().iter().zip(&m).map(|(a, &i)| a.node(i).powi(2)).sum::<f64>().sqrt();
        y[0] = grid.y_axes().iter().zip(&m[n..]).map(|(a, &i)| a.node(i).powi(2)).sum::<f64>().sqrt();
        if let Some(w) = u.sample(&x, &y) {
            d = d.max((w - u.values()[f]).abs());
        }
    }
    d / scale
}

/// Whether every state is bitwise invariant under `(p1, p2)`. Errors when the
/// grid does not admit the exact remapping.
pub fn symmetry_preserved(traj: &Trajectory, p1: &SignedPermutation, p2: &SignedPermutation) -> Result<bool> {
    let grid = traj.states[0].grid();
    if !is_grid_symmetric_under(grid, p1, p2) {
        return Err(invalid("grid is not mapped onto itself by the permutation"));
    }
    let (m1, m2) = (p1.to_matrix(), p2.to_matrix());
    for u in &traj.states {
        let r = rotate(u, &m1, &m2)?;
        if r.values().iter().zip(u.values()).any(|(a, b)| a.to_bits() != b.to_bits()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `(t_n, |<u(t_n) - u0, phi>|)` for every node.
pub fn initial_trace(traj: &Trajectory, u0: &GridFunction, phi: &GridFunction) -> Result<Vec<(f64, f64)>> {
    traj.times()
        .iter()
        .zip(&traj.states)
        .map(|(&t, u)| Ok((t, u.sub(u0)?.inner(phi)?.abs())))
        .collect()
}
