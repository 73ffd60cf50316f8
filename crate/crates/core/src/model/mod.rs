//! Model parameters, tensor grids, grid functions, canonical initial data and
//! the scaling/rotation maps shared by every other module.

mod datum;
mod grid;
mod transform;

pub use datum::{homogeneous_power, make_homogeneous_datum, make_singular_datum, Datum};
pub use grid::{Axis, Grid, GridFunction};
pub use transform::{is_grid_symmetric_under, rotate, Resampled, ScalingMap, SignedPermutation, TimeConvention};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Dimensions `N` (x), `k` (y) and the nonlinearity exponent `rho`.
///
/// The homogeneous dimension `Q = N + 2k` and the critical Marcinkiewicz
/// index `p = Q (rho - 1) / 2` are derived on construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct ModelParams {
    n: usize,
    k: usize,
    rho: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    n: usize,
    k: usize,
    rho: f64,
}

impl TryFrom<RawParams> for ModelParams {
    type Error = crate::Error;
    fn try_from(r: RawParams) -> Result<Self> {
        ModelParams::new(r.n, r.k, r.rho)
    }
}

impl From<ModelParams> for RawParams {
    fn from(p: ModelParams) -> Self {
        RawParams { n: p.n, k: p.k, rho: p.rho }
    }
}

impl ModelParams {
    pub fn new(n: usize, k: usize, rho: f64) -> Result<Self> {
        if n < 1 || k < 1 {
            return Err(invalid(format!("dimensions must be >= 1, got N={n}, k={k}")));
        }
        if !(rho.is_finite() && rho > 1.0) {
            return Err(invalid(format!("rho must be > 1, got {rho}")));
        }
        let p = Self { n, k, rho };
        if p.p_critical() <= 1.0 {
            return Err(invalid(format!(
                "critical index Q(rho-1)/2 = {} must exceed 1",
                p.p_critical()
            )));
        }
        Ok(p)
    }

    /// `N = 1, k = 1, rho = 3`: `Q = 3`, `p = 3`.
    pub fn reference() -> Self {
        Self { n: 1, k: 1, rho: 3.0 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Homogeneous dimension `N + 2k`.
    pub fn q(&self) -> usize {
        self.n + 2 * self.k
    }

    pub fn p_critical(&self) -> f64 {
        self.q() as f64 * (self.rho - 1.0) / 2.0
    }

    /// Pointwise nonlinearity `|w|^(rho-1) w`.
    #[inline]
    pub fn nonlinearity(&self, w: f64) -> f64 {
        if self.rho == 3.0 {
            w * w * w
        } else {
            w.abs().powf(self.rho - 1.0) * w
        }
    }

    /// Decay exponent `(Q/2)(1/p - 1/r)` of the smoothing estimate.
    pub fn smoothing_exponent(&self, p: f64, r: f64) -> f64 {
        0.5 * self.q() as f64 * (1.0 / p - 1.0 / r)
    }
}

/// A point `(x, y)` of `R^N x R^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Point {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(invalid("point coordinates must be finite"));
        }
        Ok(Self { x, y })
    }

    pub fn check_dims(&self, params: &ModelParams) -> Result<()> {
        if self.x.len() != params.n() || self.y.len() != params.k() {
            return Err(crate::Error::ShapeMismatch(format!(
                "point has dims ({}, {}), model expects ({}, {})",
                self.x.len(),
                self.y.len(),
                params.n(),
                params.k()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_quantities() {
        let p = ModelParams::reference();
        assert_eq!(p.q(), 3);
        assert_eq!(p.p_critical(), 3.0);
        let p = ModelParams::new(2, 1, 2.0).unwrap();
        assert_eq!(p.q(), 4);
        assert_eq!(p.p_critical(), 2.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(ModelParams::new(0, 1, 3.0).is_err());
        assert!(ModelParams::new(1, 0, 3.0).is_err());
        assert!(ModelParams::new(1, 1, 1.0).is_err());
        assert!(ModelParams::new(1, 1, f64::NAN).is_err());
        // Q = 3, rho = 1.5 gives p = 0.75 <= 1.
        assert!(ModelParams::new(1, 1, 1.5).is_err());
    }

    #[test]
    fn nonlinearity_keeps_sign() {
        let p = ModelParams::new(1, 1, 2.5).unwrap();
        assert!((p.nonlinearity(-2.0) + 2f64.powf(2.5)).abs() < 1e-12);
        assert_eq!(ModelParams::reference().nonlinearity(-2.0), -8.0);
    }

    #[test]
    fn params_serde_validates() {
        let ok: ModelParams = serde_json::from_str(r#"{"n":1,"k":1,"rho":3.0}"#).unwrap();
        assert_eq!(ok, ModelParams::reference());
        assert!(serde_json::from_str::<ModelParams>(r#"{"n":1,"k":1,"rho":0.5}"#).is_err());
        assert!(serde_json::from_str::<ModelParams>(r#"{"n":1,"k":1,"rho":3.0,"x":1}"#).is_err());
    }
}
