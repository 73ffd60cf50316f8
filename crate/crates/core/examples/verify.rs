//! Runs a reduced verification suite on a coarse grid and prints the report.

use grushin::verify::{run_suite, Suite};

const SUITE: &str = r#"
[reference]
count = 32

[[check]]
name = "kernel_scaling"
tag = "kernel"
tolerance = 1e-6
params = { points = 20, abs_tol = 1e-12 }

[[check]]
name = "positivity_symmetry"
tag = "solver"
tolerance = 1e-12

[[check]]
name = "picard_convergence"
tag = "solver"
tolerance = 1e-8
"#;

fn main() -> grushin::Result<()> {
    let report = run_suite(&Suite::from_toml(SUITE)?)?;
    for c in &report.checks {
        println!("{:<20} {:?} measured {:?}", c.name, c.status, c.measured);
    }
    print!("{}", report.canonical().to_json()?);
    Ok(())
}
