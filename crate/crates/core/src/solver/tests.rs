use super::*;
use crate::model::{Datum, Grid, SignedPermutation, TimeConvention};

fn small_solver(horizon: f64) -> Solver {
    let cfg = SolverConfig { horizon, t_min_fraction: 1.0 / 16.0, nodes_per_doubling: 2, ..SolverConfig::default() };
    Solver::new(ModelParams::reference(), cfg).unwrap()
}

fn gaussian(grid: &Grid, amplitude: f64) -> GridFunction {
    Datum::Gaussian { amplitude, x_width: 0.8, y_width: 0.8 }.sample(&ModelParams::reference(), grid).unwrap()
}

#[test]
fn time_grid_invariants() {
    let tg = TimeGrid::geometric(8.0 / 1024.0, 8.0, 4).unwrap();
    assert_eq!(tg.len(), 41);
    assert_eq!(tg.horizon(), 8.0);
    assert!(tg.find(4.0 * tg.nodes()[3]).is_some());
    assert!(TimeGrid::from_nodes(vec![1.0, 2.5]).is_err());
    assert!(TimeGrid::from_nodes(vec![1.0, 1.0]).is_err());
    assert!(TimeGrid::from_nodes(vec![0.0, 1.0]).is_err());
    let u = TimeGrid::uniform(0.25, 1.0).unwrap();
    assert_eq!(u.nodes(), &[0.25, 0.5, 0.75, 1.0]);
    assert_eq!(u.step(0), 0.25);
}

#[test]
fn config_validation() {
    let bad = SolverConfig { picard_tol: 0.0, ..SolverConfig::default() };
    assert!(bad.validate().is_err());
    let bad = SolverConfig { max_picard: 0, ..SolverConfig::default() };
    assert!(bad.validate().is_err());
    let s: SolverConfig = serde_json::from_str(r#"{"picard_tol": 1e-6}"#).unwrap();
    assert_eq!(s.max_picard, 50);
    assert!(serde_json::from_str::<SolverConfig>(r#"{"tolerance": 1}"#).is_err());
}

#[test]
fn zero_datum_is_a_fixed_point() {
    let solver = small_solver(1.0);
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let (traj, rep) = solver.picard(&GridFunction::zeros(g)).unwrap();
    assert_eq!(rep.status, ConvergenceStatus::Converged);
    assert_eq!(rep.iterations, 1);
    assert!(traj.states.iter().all(|u| u.values().iter().all(|v| *v == 0.0)));
}

#[test]
fn small_data_converge_and_stay_positive() {
    let solver = small_solver(2.0);
    let g = Grid::cube(1, 1, 6.0, 24).unwrap();
    let u0 = gaussian(&g, 0.3);
    let (traj, rep) = solver.picard(&u0).unwrap();
    assert_eq!(rep.status, ConvergenceStatus::Converged, "{rep:?}");
    assert!(rep.contracting);
    assert!(rep.ratios.iter().all(|r| *r < 1.0));
    assert!(traj.norms_consistent());
    assert!(traj.states.iter().all(|u| u.min() >= -1e-12 * u.max_abs()));
    let res = solver.fixed_point_residual(&u0, &traj).unwrap();
    assert!(res <= 1e-8, "{res}");
    // The last node agrees with the standalone Duhamel evaluation.
    let n = traj.states.len() - 1;
    let b = solver.duhamel(&u0, &traj.states, n).unwrap();
    let lin = solver.semigroup().apply(solver.time_grid().horizon(), &u0).unwrap();
    assert!(lin.add(&b).unwrap().sub(&traj.states[n]).unwrap().max_abs() < 1e-8);
    assert!(matches!(solver.duhamel(&u0, &traj.states[..2], 5), Err(Error::Unpopulated(5))));
}

#[test]
fn nonlinear_correction_scales_like_rho() {
    let solver = small_solver(1.0);
    let g = Grid::cube(1, 1, 6.0, 24).unwrap();
    let defect = |eps: f64| {
        let u0 = gaussian(&g, eps);
        let (traj, _) = solver.picard(&u0).unwrap();
        let lin = solver.linear(&u0).unwrap();
        traj.states.iter().zip(&lin).map(|(u, l)| u.sub(l).unwrap().max_abs()).fold(0.0, f64::max)
    };
    let ratio = defect(0.2) / defect(0.1);
    assert!((ratio / 8.0 - 1.0).abs() < 0.05, "{ratio}");
}

#[test]
fn large_data_diverge() {
    let cfg = SolverConfig { horizon: 4.0, t_min_fraction: 1.0 / 16.0, nodes_per_doubling: 2, ..SolverConfig::default() };
    let solver = Solver::new(ModelParams::reference(), cfg).unwrap();
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let (_, rep) = solver.picard(&gaussian(&g, 6.0)).unwrap();
    assert_eq!(rep.status, ConvergenceStatus::Diverged, "{rep:?}");
}

#[test]
fn marching_tracks_picard() {
    let solver = small_solver(1.0);
    let g = Grid::cube(1, 1, 8.0, 64).unwrap();
    let u0 = gaussian(&g, 0.3);
    let (traj, _) = solver.picard(&u0).unwrap();
    let euler = solver.march(&u0, MarchScheme::Euler).unwrap();
    let heun = solver.march(&u0, MarchScheme::Heun).unwrap();
    let de = traj.distance(&euler).unwrap();
    let dh = traj.distance(&heun).unwrap();
    assert!(dh < de, "{dh} vs {de}");
    assert!(de < 2e-3, "{de}");
}

#[test]
fn symmetry_and_cylindrical_states() {
    let solver = small_solver(1.0);
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let u0 = gaussian(&g, 0.5);
    let (traj, _) = solver.picard(&u0).unwrap();
    let flip = SignedPermutation { perm: vec![0], sign: vec![-1.0] };
    assert!(symmetry_preserved(&traj, &flip, &SignedPermutation::identity(1)).unwrap());
    assert!(symmetry_preserved(&traj, &flip, &flip).unwrap());
    assert!(traj.states.iter().all(|u| cylindrical_defect(u) < 1e-12));
    let skew = GridFunction::from_fn(g, |x, y| (x[0] - 0.5).powi(2) + y[0]).unwrap();
    assert!(cylindrical_defect(&skew) > 0.1);
}

#[test]
fn energy_of_simple_fields() {
    let params = ModelParams::reference();
    let g = Grid::cube(1, 1, 1.0, 8).unwrap();
    assert_eq!(energy(&GridFunction::zeros(g.clone()), &params).unwrap(), 0.0);
    // u = x is linear, so every difference is exact: E = (1/2) * area - ∫x^4/4.
    let u = GridFunction::from_fn(g.clone(), |x, _| x[0]).unwrap();
    let quartic: f64 = u.values().iter().map(|v| v.powi(4)).sum::<f64>() * g.cell_volume();
    let e = energy(&u, &params).unwrap();
    assert!((e - (0.5 * 4.0 - 0.25 * quartic)).abs() < 1e-12, "{e}");
    assert!((energy_with_weight(&u, &params, 0.25).unwrap() - (1.0 - 0.25 * quartic)).abs() < 1e-12);
}

#[test]
fn profile_of_zero_and_window() {
    let params = ModelParams::reference();
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let tg = TimeGrid::from_nodes(vec![1.0, 2.0]).unwrap();
    let traj = Trajectory::new(tg, vec![GridFunction::zeros(g.clone()), GridFunction::zeros(g)], 3.0).unwrap();
    let r = profile_residual(&traj, 1, &params, ProfileWindow::default()).unwrap();
    assert_eq!(r.interior_mean, 0.0);
    assert_eq!(r.profile.grid().x_axes()[0].max, 4.0 / 2f64.sqrt());
    assert_eq!(r.profile.grid().y_axes()[0].max, 2.0);
    assert!(profile(&traj, 4, &params).is_err());
}

#[test]
fn self_similarity_identity_and_decay_errors() {
    let solver = small_solver(1.0);
    let params = *solver.params();
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let (traj, _) = solver.picard(&gaussian(&g, 0.5)).unwrap();
    let r = self_similarity_defect(&traj, 1.0, &params, TimeConvention::Parabolic, SimilarityWindow::everything()).unwrap();
    assert_eq!(r.defect, 0.0);
    let r = self_similarity_defect(&traj, 2.0f64.sqrt(), &params, TimeConvention::Parabolic, SimilarityWindow::everything()).unwrap();
    assert!(r.defect > 0.2, "{r:?}");
    let short = Trajectory::new(TimeGrid::from_nodes(vec![1.0, 2.0]).unwrap(), traj.states[..2].to_vec(), 3.0).unwrap();
    assert!(matches!(decay_fit(&short, 12.0, &params), Err(Error::InsufficientSamples { .. })));
}

#[test]
fn initial_trace_shrinks() {
    let solver = small_solver(1.0);
    let g = Grid::cube(1, 1, 6.0, 32).unwrap();
    let u0 = gaussian(&g, 0.3);
    let (traj, _) = solver.picard(&u0).unwrap();
    let phi = Datum::Bump { amplitude: 1.0, x_radius: 2.0, y_radius: 2.0 }.sample(solver.params(), &g).unwrap();
    let tr = initial_trace(&traj, &u0, &phi).unwrap();
    assert!(tr.windows(2).all(|w| w[0].1 < w[1].1), "{tr:?}");
}

#[test]
fn blowup_probe_separates_large_and_small() {
    let params = ModelParams::reference();
    let sg = Semigroup::spectral(params);
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let big = gaussian(&g, 4.0);
    assert!(energy(&big, &params).unwrap() < 0.0);
    let cfg = BlowupConfig { dt: 0.01, horizon: 1.0, ..BlowupConfig::default() };
    let rep = blowup_probe(&sg, &big, &cfg).unwrap();
    assert!(rep.blew_up && rep.growth >= 10.0 && rep.monotone, "{rep:?}");
    let small = blowup_probe(&sg, &gaussian(&g, 0.2), &cfg).unwrap();
    assert!(!small.blew_up && small.growth <= 1.0);
    let zero = blowup_probe(&sg, &GridFunction::zeros(g), &cfg).unwrap();
    assert!(zero.sup_norms.iter().all(|v| *v == 0.0));
}
