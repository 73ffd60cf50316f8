//! Heat kernel values along a y-slice, with the Gaussian x-marginal as a check.

use grushin::kernel::{gaussian_marginal, kernel_eval, KernelQuadrature};
use grushin::ModelParams;

fn main() -> grushin::Result<()> {
    let params = ModelParams::reference();
    let q = KernelQuadrature::default();
    let (x, x0, t) = ([0.5], [-0.25], 1.0);
    println!("{:>6} {:>14}", "y", "K(x, x0, y; t)");
    let mut integral = 0.0;
    let h = 0.05;
    for i in -400..=400 {
        let y = i as f64 * h;
        let k = kernel_eval(&x, &x0, &[y], t, &params, &q)?;
        integral += k * h;
        if i % 50 == 0 {
            println!("{y:>6.2} {k:>14.6e}");
        }
    }
    println!("integral over y: {integral:.8}");
    println!("Gaussian marginal: {:.8}", gaussian_marginal(&x, &x0, t));
    Ok(())
}
