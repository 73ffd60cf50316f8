//! Picard solution from a small gauge-homogeneous datum: contraction,
//! decay of the weak `L^12` norm and the energy along the run.

use grushin::model::make_homogeneous_datum;
use grushin::solver::{decay_fit, energy_series, Solver, SolverConfig};
use grushin::{Grid, ModelParams};

fn main() -> grushin::Result<()> {
    let params = ModelParams::reference();
    let grid = Grid::cube(1, 1, 8.0, 64)?;
    let u0 = make_homogeneous_datum(&params, 0.1, &grid)?;
    let solver = Solver::new(params, SolverConfig::default())?;
    let (traj, report) = solver.picard(&u0)?;
    println!("{:?} after {} iterations, ratios {:.3?}", report.status, report.iterations, report.ratios);
    println!("fixed point residual {:.2e}", solver.fixed_point_residual(&u0, &traj)?);
    let decay = decay_fit(&traj, 12.0, &params)?;
    println!("weak L^12 decay slope {:.4} (self-similar rate {:.4})", decay.slope, -decay.sigma);
    let energies = energy_series(&traj, &params)?;
    for (n, t) in traj.times().iter().enumerate().step_by(8) {
        println!("t = {t:>9.5}  ||u||_(3,inf) = {:.5}  E = {:+.5e}", traj.weak_norms[n], energies[n]);
    }
    Ok(())
}
