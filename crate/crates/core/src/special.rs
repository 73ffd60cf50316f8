//! Small special-function kit: Gauss–Legendre rules, the Bessel function
//! `J0`, and overflow-safe hyperbolic logarithms.

use std::f64::consts::{FRAC_PI_4, LN_2, PI};

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi initial guess, refined by Newton on P_n.
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Bessel function of the first kind, order zero.
///
/// Power series for `|x| <= 12` (absolute error ~1e-12 after cancellation),
/// Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> f64 {
    let x = x.abs();
    if x <= 12.0 {
        let q = 0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut m = 1.0;
        loop {
            term *= -q / (m * m);
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) && m > q.sqrt() {
                break;
            }
            m += 1.0;
            if m > 200.0 {
                break;
            }
        }
        sum
    } else {
        // a_k = prod_{j=1..k} (2j-1)^2 / (k! 8^k)
        let mut p = 0.0;
        let mut q = 0.0;
        let mut a = 1.0;
        let mut xk = 1.0;
        let mut prev = f64::INFINITY;
        for k in 0..40 {
            if k > 0 {
                let kf = k as f64;
                a *= (2.0 * kf - 1.0) * (2.0 * kf - 1.0) / (8.0 * kf);
                xk *= x;
            }
            let term = a / xk;
            if term > prev {
                break;
            }
            prev = term;
            match k % 4 {
                0 => p += term,
                1 => q -= term,
                2 => p -= term,
                _ => q += term,
            }
            if term < 1e-17 {
                break;
            }
        }
        let phase = x - FRAC_PI_4;
        (2.0 / (PI * x)).sqrt() * (p * phase.cos() - q * phase.sin())
    }
}

/// `ln sinh(x)` for `x > 0`, stable for large arguments.
pub fn ln_sinh(x: f64) -> f64 {
    if x > 30.0 {
        x - LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

/// Surface area of the unit sphere `S^{k-1}` in `R^k`.
pub fn sphere_surface(k: usize) -> f64 {
    match k {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => {
            let half = k as f64 / 2.0;
            2.0 * PI.powf(half) / gamma(half)
        }
    }
}

/// Volume of the unit ball in `R^d`.
pub fn unit_ball_volume(d: usize) -> f64 {
    let half = d as f64 / 2.0;
    PI.powf(half) / gamma(half + 1.0)
}

fn gamma(x: f64) -> f64 {
    // Half-integer and integer arguments only are needed here.
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|v| v as f64).product()
    } else {
        let mut v = PI.sqrt();
        let mut a = 0.5;
        while a < x - 0.25 {
            v *= a;
            a += 1.0;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let sum_w: f64 = w.iter().sum();
        assert!((sum_w - 2.0).abs() < 1e-14);
        // degree 30 monomial
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((i - 2.0 / 31.0).abs() < 1e-14);
        let (x5, _) = gauss_legendre(5);
        assert!(x5[2].abs() < 1e-15);
    }

    #[test]
    fn j0_matches_trapezoid_integral_representation() {
        // J0(x) = (1/pi) int_0^pi cos(x sin th) dth; the periodic trapezoid
        // rule converges geometrically once the node count exceeds x.
        for &x in &[0.0, 0.3, 1.0, 2.404_825_557_695_773, 5.5, 11.9, 12.1, 20.0, 47.3, 150.0] {
            let n = 400;
            let h = PI / n as f64;
            let s: f64 = (0..n)
                .map(|i| (x * ((i as f64 + 0.5) * h).sin()).cos())
                .sum::<f64>()
                * h
                / PI;
            assert!((bessel_j0(x) - s).abs() < 5e-12, "x={x}: {} vs {s}", bessel_j0(x));
        }
    }

    #[test]
    fn ln_sinh_branches_agree() {
        for &x in &[1e-6f64, 0.5, 10.0, 29.9, 30.1, 80.0] {
            let direct = x.sinh().ln();
            assert!((ln_sinh(x) - direct).abs() < 1e-13 * direct.abs().max(1.0));
        }
        assert!(ln_sinh(1000.0).is_finite());
    }

    #[test]
    fn ball_and_sphere_constants() {
        assert!((unit_ball_volume(3) - 4.0 * PI / 3.0).abs() < 1e-14);
        assert!((unit_ball_volume(2) - PI).abs() < 1e-14);
        assert!((sphere_surface(4) - 2.0 * PI * PI).abs() < 1e-12);
    }
}
