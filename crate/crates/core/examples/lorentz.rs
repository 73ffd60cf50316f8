//! Lorentz quasi-norms of a power of the gauge and of an indicator.

use grushin::lorentz::{lorentz_norm, rearrange, LorentzIndex};
use grushin::model::homogeneous_power;
use grushin::{Grid, GridFunction};

fn main() -> grushin::Result<()> {
    let grid = Grid::cube(1, 1, 4.0, 128)?;
    let indicator = GridFunction::from_fn(grid.clone(), |x, y| if x[0].abs() <= 1.0 && y[0].abs() <= 1.0 { 1.0 } else { 0.0 })?;
    let m = rearrange(&indicator).total_measure();
    for (p, q) in [(3.0, f64::INFINITY), (3.0, 3.0), (2.0, 1.0)] {
        let idx = LorentzIndex::new(p, q)?;
        println!("indicator ({p}, {q}): {:.6}  m^(1/p) = {:.6}", lorentz_norm(&indicator, idx), m.powf(1.0 / p));
    }
    // A gauge power of degree -Q/p sits in the weak space L^(p, inf).
    let h = homogeneous_power(&grid, 1.0, -1.0)?;
    println!("||rho^-1||_(3, inf) on the box: {:.6}", lorentz_norm(&h, LorentzIndex::weak(3.0)?));
    Ok(())
}
