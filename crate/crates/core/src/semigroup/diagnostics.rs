use serde::{Deserialize, Serialize};

use super::Semigroup;
use crate::error::{invalid, Error, Result};
use crate::lorentz::{lorentz_norm, LorentzIndex};
use crate::model::{Axis, Grid, GridFunction};

/// `||S(t) S(s) phi - S(t+s) phi||_inf / ||S(t+s) phi||_inf`, or 0 when the
/// denominator vanishes.
pub fn chapman_kolmogorov_defect(sg: &Semigroup, t: f64, s: f64, phi: &GridFunction) -> Result<f64> {
    let two_step = sg.apply(t, &sg.apply(s, phi)?)?;
    let one_step = sg.apply(t + s, phi)?;
    let scale = one_step.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok(two_step.sub(&one_step)?.max_abs() / scale)
}

/// Relative gap between `<S(t) v, phi>` and `<v, S(t) phi>`.
pub fn duality_defect(sg: &Semigroup, t: f64, v: &GridFunction, phi: &GridFunction) -> Result<f64> {
    let a = sg.apply(t, v)?.inner(phi)?;
    let b = v.inner(&sg.apply(t, phi)?)?;
    let scale = a.abs().max(b.abs());
    Ok(if scale == 0.0 { 0.0 } else { (a - b).abs() / scale })
}

/// Mass bookkeeping for one application of `S(t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassReport {
    pub initial: f64,
    pub evolved: f64,
    /// `|evolved - initial|`
    pub defect: f64,
    /// Mass that lands outside the box when `S(t)` is applied on the box
    /// padded by half its width on every side.
    pub leakage_estimate: f64,
}

pub fn mass_report(sg: &Semigroup, t: f64, phi: &GridFunction) -> Result<MassReport> {
    let out = sg.apply(t, phi)?;
    let grid = phi.grid();
    let pad_axis = |a: &Axis| -> (Axis, usize) {
        let pad = a.count.div_ceil(2);
        let h = a.spacing();
        (Axis { min: a.min - pad as f64 * h, max: a.max + pad as f64 * h, count: a.count + 2 * pad }, pad)
    };
    let (xa, x_off): (Vec<Axis>, Vec<usize>) = grid.x_axes().iter().map(pad_axis).unzip();
    let (ya, y_off): (Vec<Axis>, Vec<usize>) = grid.y_axes().iter().map(pad_axis).unzip();
    let offsets: Vec<usize> = x_off.into_iter().chain(y_off).collect();
    let big = Grid::new(xa, ya)?;
    let mut values = vec![0.0; big.len()];
    let mut inside = vec![false; big.len()];
    for (f, v) in phi.values().iter().enumerate() {
        let m: Vec<usize> = grid.multi_index(f).iter().zip(&offsets).map(|(i, o)| i + o).collect();
        let g = big.flat_index(&m);
        values[g] = *v;
        inside[g] = true;
    }
    let wide = sg.apply(t, &GridFunction::new(big.clone(), values)?)?;
    let outside: f64 =
        wide.values().iter().zip(&inside).filter(|(_, i)| !**i).map(|(v, _)| *v).sum::<f64>() * big.cell_volume();
    let initial = phi.integral();
    let evolved = out.integral();
    Ok(MassReport { initial, evolved, defect: (evolved - initial).abs(), leakage_estimate: outside.abs() })
}

/// Which norm a smoothing fit tracks. `r = inf` always uses the grid max.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Lebesgue,
    Weak,
}

fn norm_of(f: &GridFunction, r: f64, kind: NormKind) -> Result<f64> {
    if r.is_infinite() {
        return Ok(f.max_abs());
    }
    Ok(match kind {
        NormKind::Lebesgue => f.lebesgue_norm(r),
        NormKind::Weak => lorentz_norm(f, LorentzIndex::weak(r)?),
    })
}

/// Log-log fit of `||S(t) phi||_r` against `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingReport {
    pub p: f64,
    pub r: f64,
    pub kind: NormKind,
    /// Fitted slope over the larger-`t` half of the samples.
    pub exponent_fit: f64,
    /// `-(Q/2)(1/p - 1/r)`
    pub exponent_expected: f64,
    /// `e^intercept / ||phi||_p`
    pub constant_fit: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    /// `[t_first, t_last]` of the fitted half.
    pub fit_range: (f64, f64),
}

/// Least-squares slope and intercept of `ys` against `xs`.
pub(crate) fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

pub fn smoothing_fit(
    sg: &Semigroup,
    phi: &GridFunction,
    p: f64,
    r: f64,
    times: &[f64],
    kind: NormKind,
) -> Result<SmoothingReport> {
    if !(p >= 1.0 && r >= p) {
        return Err(invalid(format!("smoothing fit needs 1 <= p <= r, got p = {p}, r = {r}")));
    }
    let mut ts = Vec::new();
    let mut ns = Vec::new();
    for &t in times {
        if !(t > 0.0) {
            continue;
        }
        let v = norm_of(&sg.apply(t, phi)?, r, kind)?;
        if v > 0.0 && v.is_finite() {
            ts.push(t);
            ns.push(v);
        }
    }
    if ts.len() < 5 {
        return Err(Error::InsufficientSamples { need: 5, got: ts.len() });
    }
    let mut order: Vec<usize> = (0..ts.len()).collect();
    order.sort_by(|&a, &b| ts[a].total_cmp(&ts[b]));
    let half: Vec<usize> = order[ts.len() / 2..].to_vec();
    let lx: Vec<f64> = half.iter().map(|&i| ts[i].ln()).collect();
    let ly: Vec<f64> = half.iter().map(|&i| ns[i].ln()).collect();
    let (slope, intercept) = linear_fit(&lx, &ly);
    let phi_norm = if p == 1.0 { phi.lebesgue_norm(1.0) } else { norm_of(phi, p, kind)? };
    let q = sg.params().q() as f64;
    let inv_r = if r.is_infinite() { 0.0 } else { 1.0 / r };
    Ok(SmoothingReport {
        p,
        r,
        kind,
        exponent_fit: slope,
        exponent_expected: -0.5 * q * (1.0 / p - inv_r),
        constant_fit: if phi_norm > 0.0 { intercept.exp() / phi_norm } else { f64::NAN },
        times: ts,
        norms: ns,
        fit_range: (lx[0].exp(), lx[lx.len() - 1].exp()),
    })
}

/// Finite-horizon evaluation of `∫_0^inf t^(sigma - 1) ||S(t) phi||_(r,1) dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct YamazakiReport {
    /// `(Q/2)(1/p - 1/r)`
    pub sigma: f64,
    pub times: Vec<f64>,
    /// `t^sigma ||S(t) phi||_(r,1)`, the integrand against `d ln t`.
    pub integrand: Vec<f64>,
    /// Trapezoid rule in `ln t` over the sampled window.
    pub body: f64,
    /// `integrand(t_0) / sigma`: the head as a pure `t^sigma` law.
    pub head: f64,
    /// Power-law extrapolation beyond the last time from the last two samples.
    pub tail: f64,
    pub integral: f64,
}

pub fn yamazaki_diagnostic(sg: &Semigroup, phi: &GridFunction, p: f64, r: f64, times: &[f64]) -> Result<YamazakiReport> {
    if !(p > 1.0 && p < r && r.is_finite()) {
        return Err(Error::IndexConstraint(format!("need 1 < p < r < inf, got p = {p}, r = {r}")));
    }
    if times.len() < 3 || times.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
        return Err(invalid("need at least 3 increasing positive times"));
    }
    let q = sg.params().q() as f64;
    let sigma = 0.5 * q * (1.0 / p - 1.0 / r);
    let idx = LorentzIndex::new(r, 1.0)?;
    let mut integrand = Vec::with_capacity(times.len());
    for &t in times {
        integrand.push(t.powf(sigma) * lorentz_norm(&sg.apply(t, phi)?, idx));
    }
    let mut body = 0.0;
    for i in 1..times.len() {
        body += 0.5 * (integrand[i] + integrand[i - 1]) * (times[i] / times[i - 1]).ln();
    }
    let head = integrand[0] / sigma;
    let m = times.len();
    let beta = -(integrand[m - 1] / integrand[m - 2]).ln() / (times[m - 1] / times[m - 2]).ln();
    let tail = if integrand[m - 1] == 0.0 {
        0.0
    } else if beta > 0.0 {
        integrand[m - 1] / beta
    } else {
        f64::INFINITY
    };
    Ok(YamazakiReport {
        sigma,
        times: times.to_vec(),
        integrand,
        body,
        head,
        tail,
        integral: head + body + tail,
    })
}
