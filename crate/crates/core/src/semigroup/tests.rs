use super::*;
use crate::kernel::kernel_eval;
use crate::model::{rotate, Datum};

fn reference() -> ModelParams {
    ModelParams::reference()
}

fn gaussian(grid: &Grid, xw: f64, yw: f64) -> GridFunction {
    GridFunction::from_fn(grid.clone(), |x, y| {
        let rx: f64 = x.iter().map(|a| a * a).sum();
        let ry: f64 = y.iter().map(|a| a * a).sum();
        (-rx / (2.0 * xw * xw) - ry / (2.0 * yw * yw)).exp()
    })
    .unwrap()
}

#[test]
fn rejects_bad_input() {
    let sg = Semigroup::spectral(reference());
    let g = Grid::cube(1, 1, 4.0, 16).unwrap();
    let phi = gaussian(&g, 1.0, 1.0);
    assert!(matches!(sg.apply(0.0, &phi), Err(Error::NonPositiveTime(_))));
    let g2 = Grid::cube(2, 1, 4.0, 8).unwrap();
    assert!(sg.apply(1.0, &gaussian(&g2, 1.0, 1.0)).is_err());
    let odd = Semigroup::new(reference(), SemigroupMethod::Spectral { padding: 1 }, KernelQuadrature::default()).unwrap();
    let g3 = Grid::cube(1, 1, 4.0, 7).unwrap();
    assert!(odd.apply(1.0, &gaussian(&g3, 1.0, 1.0)).is_err());
}

#[test]
fn spectral_matches_pointwise_kernel_sum() {
    // A single nonzero node turns S(t) into one kernel column.
    let params = reference();
    // Fine enough that neither cell averaging applies.
    let g = Grid::cube(1, 1, 4.0, 32).unwrap();
    let mut v = vec![0.0; g.len()];
    let src = g.flat_index(&[18, 13]);
    v[src] = 1.0;
    let phi = GridFunction::new(g.clone(), v).unwrap();
    let t = 0.8;
    let out = Semigroup::spectral(params).apply(t, &phi).unwrap();
    let q = KernelQuadrature::default();
    let (w, z) = (g.x_axes()[0].node(18), g.y_axes()[0].node(13));
    for f in (0..g.len()).step_by(5) {
        let m = g.multi_index(f);
        let (x, y) = (g.x_axes()[0].node(m[0]), g.y_axes()[0].node(m[1]));
        let k = kernel_eval(&[x], &[w], &[y - z], t, &params, &q).unwrap() * g.cell_volume();
        assert!((out.values()[f] - k).abs() < 1e-9, "{f}: {} vs {k}", out.values()[f]);
    }
}

#[test]
fn direct_and_spectral_agree() {
    let params = reference();
    let g = Grid::cube(1, 1, 8.0, 64).unwrap();
    let phi = gaussian(&g, 0.8, 1.0);
    let a = Semigroup::direct(params).apply(1.0, &phi).unwrap();
    let b = Semigroup::spectral(params).apply(1.0, &phi).unwrap();
    let scale = b.max_abs();
    let worst = a.sub(&b).unwrap().max_abs() / scale;
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn positivity_and_strong_continuity() {
    let sg = Semigroup::spectral(reference());
    let g = Grid::cube(1, 1, 6.0, 64).unwrap();
    let phi = gaussian(&g, 0.8, 0.8);
    let mut prev = f64::INFINITY;
    for &t in &[0.1, 0.01, 0.001] {
        let out = sg.apply(t, &phi).unwrap();
        assert!(out.min() >= -1e-12 * phi.max_abs());
        let err = out.sub(&phi).unwrap().max_abs();
        assert!(err < prev, "t = {t}: {err} >= {prev}");
        prev = err;
    }
    assert!(prev < 5e-3);
}

#[test]
fn small_time_rows_conserve_y_mass() {
    // Below one squared cell both x and y are cell averaged: a y-constant
    // datum sees the Gaussian marginal integrated over each x cell.
    let sg = Semigroup::spectral(reference());
    let g = Grid::cube(1, 1, 4.0, 32).unwrap();
    let t = 0.02;
    let h = g.x_axes()[0].spacing();
    let phi = GridFunction::from_fn(g.clone(), |x, _| (-x[0] * x[0]).exp()).unwrap();
    let out = sg.apply(t, &phi).unwrap();
    let iy = g.y_len() / 2;
    let s = (2.0 * t).sqrt();
    for ix in 0..g.x_len() {
        let x = g.x_axes()[0].node(ix);
        if x.abs() > 3.0 {
            continue;
        }
        let v = out.value_at_node(&[ix, iy]);
        let expect: f64 = (0..g.x_len())
            .map(|l| {
                let w = g.x_axes()[0].node(l);
                let cell = 0.5 * (statrs::function::erf::erf((w - x + 0.5 * h) / s)
                    - statrs::function::erf::erf((w - x - 0.5 * h) / s));
                cell * (-w * w).exp()
            })
            .sum();
        assert!((v - expect).abs() < 1e-9, "{x}: {v} vs {expect}");
    }
}

#[test]
fn rotation_equivariance() {
    let params = ModelParams::new(2, 1, 3.0).unwrap();
    let sg = Semigroup::spectral(params);
    let g = Grid::cube(2, 1, 4.0, 12).unwrap();
    let phi = GridFunction::from_fn(g.clone(), |x, y| {
        (-(x[0] - 0.5).powi(2) - 2.0 * (x[1] + 0.3).powi(2) - (y[0] - 0.4).powi(2)).exp()
    })
    .unwrap();
    let t1 = [0.0, -1.0, 1.0, 0.0];
    let t2 = [-1.0];
    let lhs = sg.apply(0.7, &rotate(&phi, &t1, &t2).unwrap()).unwrap();
    let rhs = rotate(&sg.apply(0.7, &phi).unwrap(), &t1, &t2).unwrap();
    assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-10 * rhs.max_abs());
}

#[test]
fn semigroup_property_and_refinement() {
    let params = reference();
    let mut prev = f64::INFINITY;
    for &n in &[64usize, 128] {
        let g = Grid::cube(1, 1, 8.0, n).unwrap();
        let phi = gaussian(&g, 0.7, 0.7);
        let sg = Semigroup::spectral(params);
        let d = chapman_kolmogorov_defect(&sg, 0.5, 0.5, &phi).unwrap();
        assert!(d < prev);
        prev = d;
    }
    assert!(prev <= 1e-3, "{prev}");
    let g = Grid::cube(1, 1, 8.0, 16).unwrap();
    let zero = GridFunction::zeros(g);
    assert_eq!(chapman_kolmogorov_defect(&Semigroup::spectral(params), 0.5, 0.5, &zero).unwrap(), 0.0);
}

#[test]
fn duality_and_mass() {
    let params = reference();
    let g = Grid::cube(1, 1, 6.0, 64).unwrap();
    let v = gaussian(&g, 0.6, 1.2);
    let phi = GridFunction::from_fn(g.clone(), |x, y| (x[0] - 0.3 * y[0]).cos().powi(2) * (-0.1 * y[0] * y[0]).exp())
        .unwrap();
    for sg in [Semigroup::spectral(params), Semigroup::direct(params)] {
        assert!(duality_defect(&sg, 0.8, &v, &phi).unwrap() < 1e-6);
        // Leakage plus the quadrature error of the point-sampled kernel.
        let m = mass_report(&sg, 0.5, &v).unwrap();
        assert!(m.defect <= m.leakage_estimate + 1e-4 * m.initial, "{m:?}");
    }
}

#[test]
fn smoothing_exponent_invariants() {
    let params = reference();
    let g = Grid::cube(1, 1, 8.0, 48).unwrap();
    let phi = gaussian(&g, 0.5, 0.5);
    let sg = Semigroup::spectral(params);
    let times = [0.5, 0.7, 1.0, 1.4, 2.0, 2.8];
    // p = r = 1 on nonnegative data tracks the mass.
    let a = smoothing_fit(&sg, &phi, 1.0, 1.0, &times, NormKind::Lebesgue).unwrap();
    let b = smoothing_fit(&sg, &phi.scale(3.0), 1.0, 1.0, &times, NormKind::Lebesgue).unwrap();
    assert!((a.exponent_fit - b.exponent_fit).abs() < 1e-12);
    assert!(a.exponent_fit.abs() <= 0.05, "{}", a.exponent_fit);
    assert_eq!(a.exponent_expected, 0.0);
    assert!(matches!(
        smoothing_fit(&sg, &phi, 2.0, 4.0, &times[..4], NormKind::Lebesgue),
        Err(Error::InsufficientSamples { .. })
    ));
    assert!(smoothing_fit(&sg, &phi, 4.0, 2.0, &times, NormKind::Lebesgue).is_err());
}

#[test]
fn yamazaki_homogeneity() {
    let params = reference();
    let g = Grid::cube(1, 1, 6.0, 32).unwrap();
    let phi = Datum::Gaussian { amplitude: 1.0, x_width: 0.6, y_width: 0.6 }.sample(&params, &g).unwrap();
    let sg = Semigroup::spectral(params);
    let times = [0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4];
    let a = yamazaki_diagnostic(&sg, &phi, 1.5, 6.0, &times).unwrap();
    let b = yamazaki_diagnostic(&sg, &phi.scale(2.5), 1.5, 6.0, &times).unwrap();
    assert!(a.integral.is_finite(), "{a:?}");
    assert!((b.integral / a.integral - 2.5).abs() < 1e-12);
    assert!(yamazaki_diagnostic(&sg, &phi, 6.0, 6.0, &times).is_err());
}

#[test]
fn exact_symmetries_survive_rounding() {
    let params = reference();
    let g = Grid::cube(1, 1, 4.0, 24).unwrap();
    let phi = GridFunction::from_fn(g.clone(), |x, y| x[0] * (-x[0] * x[0] - 0.5 * y[0] * y[0]).exp()).unwrap();
    for sg in [Semigroup::spectral(params), Semigroup::direct(params)] {
        let out = sg.apply(0.6, &phi).unwrap();
        let n = g.x_len();
        for ix in 0..n {
            for iy in 0..g.y_len() {
                let a = out.value_at_node(&[ix, iy]);
                let b = out.value_at_node(&[n - 1 - ix, g.y_len() - 1 - iy]);
                assert_eq!(a.to_bits(), (-b).to_bits());
            }
        }
    }
}
