//! Applies S(t) to a Gaussian with both semigroup routes and compares them.

use grushin::model::Datum;
use grushin::semigroup::{mass_report, Semigroup};
use grushin::{Grid, ModelParams};

fn main() -> grushin::Result<()> {
    let params = ModelParams::reference();
    let grid = Grid::cube(1, 1, 6.0, 64)?;
    let phi = Datum::Gaussian { amplitude: 1.0, x_width: 0.8, y_width: 0.8 }.sample(&params, &grid)?;
    let spectral = Semigroup::spectral(params);
    let direct = Semigroup::direct(params);
    for t in [0.5, 1.0, 2.0] {
        let a = spectral.apply(t, &phi)?;
        let b = direct.apply(t, &phi)?;
        let gap = a.sub(&b)?.max_abs() / b.max_abs();
        let mass = mass_report(&spectral, t, &phi)?;
        println!(
            "t = {t:<5} max {:.6} min {:+.2e} mass {:.6} (leakage {:.1e}) spectral/direct gap {gap:.2e}",
            a.max(),
            a.min(),
            mass.evolved,
            mass.leakage_estimate
        );
    }
    Ok(())
}
