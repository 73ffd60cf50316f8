use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction, ModelParams};
use crate::error::{invalid, Error, Result};

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum()
}

/// `eps |x|^(-2/(rho-1)) |y|^(-1/(rho-1))`, sampled at the grid nodes.
///
/// The closed form blows up on `{x = 0} ∪ {y = 0}`; grids with a node on
/// either hyperplane are rejected.
pub fn make_singular_datum(params: &ModelParams, epsilon: f64, grid: &Grid) -> Result<GridFunction> {
    check_dims(params, grid)?;
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let a = 2.0 / (params.rho() - 1.0);
    let mut x = vec![0.0; grid.n()];
    let mut y = vec![0.0; grid.k()];
    let mut values = Vec::with_capacity(grid.len());
    for ix in 0..grid.x_len() {
        grid.x_coords(ix, &mut x);
        let rx = norm2(&x);
        for iy in 0..grid.y_len() {
            grid.y_coords(iy, &mut y);
            let ry = norm2(&y);
            if rx == 0.0 || ry == 0.0 {
                return Err(Error::NodeOnSingularSet(ix * grid.y_len() + iy));
            }
            values.push(epsilon * rx.powf(-0.5 * a) * ry.powf(-0.25 * a));
        }
    }
    GridFunction::new(grid.clone(), values)
}

/// `eps (|x|^4 + |y|^2)^(-1/(2(rho-1)))`: positive, cylindrical, and
/// homogeneous of degree `-2/(rho-1)` under `(x, y) -> (l x, l^2 y)`.
///
/// Unlike [`make_singular_datum`] it is locally integrable and lies in the
/// critical Marcinkiewicz space for every `(N, k)`.
pub fn make_homogeneous_datum(
    params: &ModelParams,
    epsilon: f64,
    grid: &Grid,
) -> Result<GridFunction> {
    check_dims(params, grid)?;
    homogeneous_power(grid, epsilon, -2.0 / (params.rho() - 1.0))
}

/// `eps (|x|^4 + |y|^2)^(degree/4)`, homogeneous of the given degree.
///
/// Cells touching the origin hold the cell average of the closed form
/// instead of the node value, which keeps their mass under refinement.
pub fn homogeneous_power(grid: &Grid, epsilon: f64, degree: f64) -> Result<GridFunction> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let q = (grid.n() + 2 * grid.k()) as f64;
    if !(degree > -q) {
        return Err(invalid(format!("degree {degree} is not locally integrable (need > -{q})")));
    }
    let n = grid.n();
    let f = |z: &[f64]| {
        let rx = norm2(&z[..n]);
        epsilon * (rx * rx + norm2(&z[n..])).powf(0.25 * degree)
    };
    let axes: Vec<_> = grid.axes().copied().collect();
    let mut values = Vec::with_capacity(grid.len());
    let mut z = vec![0.0; axes.len()];
    for flat in 0..grid.len() {
        let m = grid.multi_index(flat);
        for (a, axis) in axes.iter().enumerate() {
            z[a] = axis.node(m[a]);
        }
        let touches = axes.iter().zip(&z).all(|(a, v)| v.abs() <= 0.5 * a.spacing() * (1.0 + 1e-12));
        if touches {
            let lo: Vec<f64> = axes.iter().zip(&z).map(|(a, v)| v - 0.5 * a.spacing()).collect();
            let hi: Vec<f64> = axes.iter().zip(&z).map(|(a, v)| v + 0.5 * a.spacing()).collect();
            values.push(box_mean(&f, &lo, &hi, 24));
        } else {
            values.push(f(&z));
        }
    }
    GridFunction::new(grid.clone(), values)
}

const GL4: [(f64, f64); 4] = [
    (-0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
    (-0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.339_981_043_584_856_3, 0.652_145_154_862_546_1),
    (0.861_136_311_594_052_6, 0.347_854_845_137_453_9),
];

/// Mean of `f` over a box, refined toward the origin when the box touches it.
fn box_mean(f: &impl Fn(&[f64]) -> f64, lo: &[f64], hi: &[f64], depth: usize) -> f64 {
    let d = lo.len();
    let touches = lo.iter().zip(hi).all(|(l, h)| *l <= 0.0 && *h >= 0.0);
    if touches && depth > 0 {
        let mut sum = 0.0;
        for corner in 0..1usize << d {
            let (mut l, mut h) = (lo.to_vec(), hi.to_vec());
            for a in 0..d {
                let mid = 0.5 * (lo[a] + hi[a]);
                if (corner >> a) & 1 == 0 {
                    h[a] = mid;
                } else {
                    l[a] = mid;
                }
            }
            sum += box_mean(f, &l, &h, depth - 1);
        }
        return sum / (1usize << d) as f64;
    }
    let mut z = vec![0.0; d];
    let mut sum = 0.0;
    for idx in 0..4usize.pow(d as u32) {
        let mut w = 1.0;
        let mut r = idx;
        for a in 0..d {
            let (node, weight) = GL4[r % 4];
            r /= 4;
            z[a] = 0.5 * (lo[a] + hi[a]) + 0.5 * (hi[a] - lo[a]) * node;
            w *= 0.5 * weight;
        }
        sum += w * f(&z);
    }
    sum
}

fn check_dims(params: &ModelParams, grid: &Grid) -> Result<()> {
    if grid.n() != params.n() || grid.k() != params.k() {
        return Err(Error::ShapeMismatch(format!(
            "grid dims ({}, {}) do not match model ({}, {})",
            grid.n(),
            grid.k(),
            params.n(),
            params.k()
        )));
    }
    Ok(())
}

/// Named initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Datum {
    /// `amplitude * exp(-|x|^2/(2 sx^2) - |y|^2/(2 sy^2))`.
    Gaussian { amplitude: f64, x_width: f64, y_width: f64 },
    /// `eps |x|^(-2/(rho-1)) |y|^(-1/(rho-1))`.
    Singular { epsilon: f64 },
    /// The admissible gauge-homogeneous datum.
    Homogeneous { epsilon: f64 },
    /// `amplitude` on the box `|x_i| <= x_half`, `|y_j| <= y_half`.
    Indicator { amplitude: f64, x_half: f64, y_half: f64 },
    /// Smooth compactly supported bump `amplitude * exp(1 - 1/(1 - s^2))`,
    /// `s^2 = |x|^2/rx^2 + |y|^2/ry^2`.
    Bump { amplitude: f64, x_radius: f64, y_radius: f64 },
}

impl Datum {
    pub fn sample(&self, params: &ModelParams, grid: &Grid) -> Result<GridFunction> {
        check_dims(params, grid)?;
        match *self {
            Datum::Gaussian { amplitude, x_width, y_width } => {
                if !(x_width > 0.0 && y_width > 0.0) {
                    return Err(invalid("gaussian widths must be positive"));
                }
                GridFunction::from_fn(grid.clone(), |x, y| {
                    amplitude
                        * (-norm2(x) / (2.0 * x_width * x_width)
                            - norm2(y) / (2.0 * y_width * y_width))
                            .exp()
                })
            }
            Datum::Singular { epsilon } => make_singular_datum(params, epsilon, grid),
            Datum::Homogeneous { epsilon } => make_homogeneous_datum(params, epsilon, grid),
            Datum::Indicator { amplitude, x_half, y_half } => {
                GridFunction::from_fn(grid.clone(), |x, y| {
                    let inside = x.iter().all(|v| v.abs() <= x_half)
                        && y.iter().all(|v| v.abs() <= y_half);
                    if inside {
                        amplitude
                    } else {
                        0.0
                    }
                })
            }
            Datum::Bump { amplitude, x_radius, y_radius } => {
                if !(x_radius > 0.0 && y_radius > 0.0) {
                    return Err(invalid("bump radii must be positive"));
                }
                GridFunction::from_fn(grid.clone(), |x, y| {
                    let s2 = norm2(x) / (x_radius * x_radius) + norm2(y) / (y_radius * y_radius);
                    if s2 < 1.0 {
                        amplitude * (1.0 - 1.0 / (1.0 - s2)).exp()
                    } else {
                        0.0
                    }
                })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_cells_hold_scaling_consistent_averages() {
        let a = Grid::cube(1, 1, 2.0, 16).unwrap();
        let b = Grid::boxed(1, 1, 4.0, 16, 8.0, 16).unwrap();
        let ua = homogeneous_power(&a, 1.0, -1.0).unwrap();
        let ub = homogeneous_power(&b, 1.0, -1.0).unwrap();
        let va = ua.value_at_node(&[8, 8]);
        assert!((ub.value_at_node(&[8, 8]) - 0.5 * va).abs() < 1e-6 * va);
        // The average exceeds the centre value of a convex singular profile.
        let centre = (0.125f64.powi(4) + 0.125f64.powi(2)).powf(-0.25);
        assert!(va > centre);
        let expect = (0.125f64.powi(4) + 0.625f64.powi(2)).powf(-0.25);
        assert!((ua.value_at_node(&[8, 10]) - expect).abs() < 1e-15);
        assert!(homogeneous_power(&a, 1.0, -3.0).is_err());
    }

    #[test]
    fn singular_datum_closed_form_values() {
        let p = ModelParams::reference();
        let g = Grid::cube(1, 1, 2.0, 2).unwrap(); // nodes at +-1
        let u = make_singular_datum(&p, 1.0, &g).unwrap();
        assert!(u.values().iter().all(|v| (*v - 1.0).abs() < 1e-15));

        // Nodes at x = 2 and y = 4: 0.1 * 2^-1 * 4^-1/2 = 0.025.
        let g = Grid::boxed(1, 1, 4.0, 2, 8.0, 2).unwrap();
        let u = make_singular_datum(&p, 0.1, &g).unwrap();
        let v = u.value_at_node(&[1, 1]);
        assert!((v - 0.025).abs() < 1e-15, "{v}");
    }

    #[test]
    fn singular_datum_rejects_nodes_on_axes() {
        let p = ModelParams::reference();
        let g = Grid::new(
            vec![super::super::Axis::new(-1.5, 1.5, 3).unwrap()],
            vec![super::super::Axis::new(-1.0, 1.0, 2).unwrap()],
        )
        .unwrap();
        assert!(matches!(make_singular_datum(&p, 1.0, &g), Err(Error::NodeOnSingularSet(_))));
    }

    #[test]
    fn homogeneity_of_generators() {
        let p = ModelParams::new(1, 1, 3.0).unwrap();
        let lam: f64 = 2.0;
        let a = 2.0 / (p.rho() - 1.0);
        let f = |x: f64, y: f64| (x.abs().powf(-a)) * y.abs().powf(-0.5 * a);
        let g = |x: f64, y: f64| (x.powi(4) + y * y).powf(-0.5 / (p.rho() - 1.0));
        for &(x, y) in &[(0.3, 0.7), (1.1, -2.0), (-0.05, 0.4)] {
            // The product form picks up lambda^-a from each factor.
            let lhs = f(lam * x, lam * lam * y);
            assert!((lhs - lam.powf(-2.0 * a) * f(x, y)).abs() <= 1e-13 * lhs);
            let lhs = g(lam * x, lam * lam * y);
            assert!((lhs - lam.powf(-a) * g(x, y)).abs() <= 1e-13 * lhs);
        }
    }

    #[test]
    fn datum_kinds_sample() {
        let p = ModelParams::reference();
        let g = Grid::cube(1, 1, 4.0, 16).unwrap();
        let d: Datum = serde_json::from_str(r#"{"kind":"bump","amplitude":2.0,"x_radius":1.0,"y_radius":2.0}"#).unwrap();
        let u = d.sample(&p, &g).unwrap();
        assert!(u.min() >= 0.0 && u.max() <= 2.0);
        let ind = Datum::Indicator { amplitude: 3.0, x_half: 1.0, y_half: 1.0 }.sample(&p, &g).unwrap();
        assert!((ind.integral() - 3.0 * 4.0).abs() < 1e-12);
    }
}
