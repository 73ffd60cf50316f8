//! Euler–Maruyama estimate of `S(t) phi` at a point against the semigroup,
//! and the endpoint histogram against the Gaussian law of `X_t`.

use grushin::kernel::KernelQuadrature;
use grushin::mc::{compare_with_kernel, density_histogram, simulate_expectation, x_marginal_chi_square, MCConfig};
use grushin::semigroup::Semigroup;
use grushin::{Grid, GridFunction, ModelParams, Point};

fn main() -> grushin::Result<()> {
    let params = ModelParams::reference();
    let grid = Grid::cube(1, 1, 6.0, 128)?;
    let cfg = MCConfig::new(50_000, 0.01, 7, Point::new(vec![0.5], vec![0.25])?);
    let t = 0.5;
    let phi = |x: &[f64], y: &[f64]| (-(x[0] * x[0] + y[0] * y[0])).exp();
    let est = simulate_expectation(&phi, t, &cfg, &params)?;
    let sampled = GridFunction::from_fn(grid.clone(), phi)?;
    let exact = Semigroup::spectral(params).apply(t, &sampled)?.sample(&[0.5], &[0.25]).expect("inside the box");
    println!("MC {:.5} +- {:.5}, semigroup {exact:.5}", est.mean, est.stderr);

    let hist = density_histogram(t, &cfg, &params, &grid)?;
    let chi = x_marginal_chi_square(&hist)?;
    println!("histogram mass {:.5}, x-marginal chi-square p = {:.3}", hist.mass(), chi.p_value);
    let cmp = compare_with_kernel(&hist, &params, &KernelQuadrature::default(), 50, 0.05)?;
    println!("{} of {} well-populated cells outside 3 sigma of the kernel", cmp.violations, cmp.cells);
    Ok(())
}
