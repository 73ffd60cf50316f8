//! Heat kernel, semigroup and semilinear solver for the Grushin operator
//! `Delta_G = (Delta_x + |x|^2 Delta_y) / 2` on `R^N x R^k`.

pub mod config;
pub mod error;
pub mod io;
pub mod kernel;
pub mod lorentz;
pub mod mc;
pub mod model;
pub mod plot;
pub mod semigroup;
pub mod solver;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use model::{Axis, Grid, GridFunction, ModelParams, Point};
