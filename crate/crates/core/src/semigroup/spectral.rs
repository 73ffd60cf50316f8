//! Partial Fourier route: DFT along `y`, one real symmetric `x`-matrix per
//! frequency, inverse DFT.
//!
//! The matrix for frequency `xi` is the Poisson (alias) sum
//! `sum_m (2 pi)^(-N/2) m(|xi + m Xi|)` over the dual lattice `Xi = 2 pi / h_y`,
//! which makes the result the circular convolution with the exactly
//! point-sampled kernel. For `(x, x0)` pairs whose `y`-spread is below one
//! cell the samples are replaced by the kernel averaged against the hat
//! function of the cell, which keeps the `y`-mass of those rows exact. For
//! `t` below the squared `x` cell width the `x` samples are likewise replaced
//! by cell integrals, so that `S(t) -> I` as `t -> 0`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;

use statrs::function::erf::{erf, erfc};

use crate::kernel::MehlerPair;
use crate::model::{Grid, ModelParams};
use crate::special::ln_sinh;

/// Pairs with `|x - x0|^2 / (2t)` beyond this contribute below `e^-50`.
const PAIR_CUTOFF: f64 = 50.0;
/// Alias terms are summed until the envelope drops below this fraction of
/// the zero-frequency peak.
const ALIAS_REL: f64 = 1e-17;
/// Relative size of the first `y` alias image above which rows are hat averaged.
const Y_ALIAS_REL: f64 = 1e-4;

pub(crate) struct SpectralOperator {
    y_counts: Vec<usize>,
    padded: Vec<usize>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    class_of: Vec<u32>,
    /// Class-major: `values[c * nnz + e]`.
    values: Vec<f64>,
}

fn sinc2(u: f64) -> f64 {
    if u.abs() < 1e-8 {
        1.0
    } else {
        let s = u.sin() / u;
        s * s
    }
}

impl SpectralOperator {
    pub fn build(grid: &Grid, t: f64, params: &ModelParams, padding: usize, small: f64) -> Self {
        let xs = grid.x_points();
        let x_len = xs.len();
        let y_axes = grid.y_axes();
        let y_counts: Vec<usize> = y_axes.iter().map(|a| a.count).collect();
        let padded: Vec<usize> = y_counts.iter().map(|c| c * padding).collect();
        let h: Vec<f64> = y_axes.iter().map(|a| a.spacing()).collect();
        let hx: Vec<f64> = grid.x_axes().iter().map(|a| a.spacing()).collect();

        // Sparsity pattern shared by all frequency classes.
        let mut pairs = Vec::new();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); x_len];
        for i in 0..x_len {
            for l in i..x_len {
                // Distance to the nearest point of the other cell, so that
                // cell-integrated entries are cut off consistently.
                let gap2: f64 = xs[i]
                    .iter()
                    .zip(&xs[l])
                    .zip(&hx)
                    .map(|((a, b), hd)| ((a - b).abs() - 0.5 * hd).max(0.0).powi(2))
                    .sum();
                if gap2 / (2.0 * t) <= PAIR_CUTOFF {
                    pairs.push((i, l));
                    rows[i].push(l as u32);
                    if l != i {
                        rows[l].push(i as u32);
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(x_len + 1);
        let mut cols = Vec::new();
        row_ptr.push(0);
        for r in &mut rows {
            r.sort_unstable();
            cols.extend_from_slice(r);
            row_ptr.push(cols.len());
        }
        let nnz = cols.len();

        // Frequency classes: |f_d| per axis, mixed radix.
        let class_dims: Vec<usize> = padded.iter().map(|l| l / 2 + 1).collect();
        let n_classes: usize = class_dims.iter().product();
        let class_xi: Vec<Vec<f64>> = (0..n_classes)
            .map(|c| {
                let mut rem = c;
                let mut xi = vec![0.0; class_dims.len()];
                for d in (0..class_dims.len()).rev() {
                    let f = rem % class_dims[d];
                    rem /= class_dims[d];
                    xi[d] = 2.0 * PI * f as f64 / (padded[d] as f64 * h[d]);
                }
                xi
            })
            .collect();
        let total: usize = padded.iter().product();
        let class_of: Vec<u32> = (0..total)
            .map(|flat| {
                let mut rem = flat;
                let mut c = 0;
                let mut stride = 1;
                for d in (0..padded.len()).rev() {
                    let l = rem % padded[d];
                    rem /= padded[d];
                    let f = l.min(padded[d] - l);
                    c += f * stride;
                    stride *= class_dims[d];
                }
                c as u32
            })
            .collect();

        let dual: Vec<f64> = h.iter().map(|hd| 2.0 * PI / hd).collect();
        let n = params.n() as f64;
        let norm = (2.0 * PI).powf(-0.5 * n);
        let log_thr = ALIAS_REL.ln() - 0.5 * n * t.ln();

        let pair_values: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&(i, l)| {
                let term = PairTerm::new(&xs[i], &xs[l], &hx, &h, t, small);
                class_xi
                    .iter()
                    .map(|xi| norm * alias_sum(&term, xi, &dual, log_thr))
                    .collect()
            })
            .collect();

        let mut values = vec![0.0; n_classes * nnz];
        let find = |row: usize, col: usize| -> usize {
            let s = &cols[row_ptr[row]..row_ptr[row + 1]];
            row_ptr[row] + s.binary_search(&(col as u32)).expect("pattern holds the pair")
        };
        for (&(i, l), pv) in pairs.iter().zip(&pair_values) {
            let e1 = find(i, l);
            let e2 = find(l, i);
            for (c, v) in pv.iter().enumerate() {
                values[c * nnz + e1] = *v;
                values[c * nnz + e2] = *v;
            }
        }

        Self { y_counts, padded, row_ptr, cols, class_of, values }
    }

    pub fn bytes(&self) -> usize {
        8 * self.values.len() + 4 * (self.cols.len() + self.class_of.len()) + 8 * self.row_ptr.len()
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let x_len = self.row_ptr.len() - 1;
        let y_len: usize = self.y_counts.iter().product();
        let total: usize = self.padded.iter().product();
        let nnz = self.cols.len();
        let mut planner = FftPlanner::<f64>::new();
        let fwd: Vec<_> = self.padded.iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let inv: Vec<_> = self.padded.iter().map(|&l| planner.plan_fft_inverse(l)).collect();

        // Forward transforms, one padded y-block per x node.
        let spectra: Vec<Vec<Complex<f64>>> = (0..x_len)
            .into_par_iter()
            .map(|ix| {
                let mut buf = vec![Complex::new(0.0, 0.0); total];
                for iy in 0..y_len {
                    buf[self.padded_index(iy)] = Complex::new(phi[ix * y_len + iy], 0.0);
                }
                fft_nd(&mut buf, &self.padded, &fwd);
                buf
            })
            .collect();

        // Per-frequency matrix-vector products.
        let mixed: Vec<Vec<Complex<f64>>> = (0..total)
            .into_par_iter()
            .map(|f| {
                let c = self.class_of[f] as usize;
                let vals = &self.values[c * nnz..(c + 1) * nnz];
                (0..x_len)
                    .map(|i| {
                        let mut acc = Complex::new(0.0, 0.0);
                        for e in self.row_ptr[i]..self.row_ptr[i + 1] {
                            acc += spectra[self.cols[e] as usize][f] * vals[e];
                        }
                        acc
                    })
                    .collect()
            })
            .collect();

        let norm = 1.0 / total as f64;
        let blocks: Vec<Vec<f64>> = (0..x_len)
            .into_par_iter()
            .map(|i| {
                let mut buf: Vec<Complex<f64>> = (0..total).map(|f| mixed[f][i]).collect();
                fft_nd(&mut buf, &self.padded, &inv);
                (0..y_len).map(|iy| buf[self.padded_index(iy)].re * norm).collect()
            })
            .collect();
        blocks.into_iter().flatten().collect()
    }

    fn padded_index(&self, iy: usize) -> usize {
        let mut rem = iy;
        let mut flat = 0;
        let mut stride = 1;
        for d in (0..self.y_counts.len()).rev() {
            let i = rem % self.y_counts[d];
            rem /= self.y_counts[d];
            flat += i * stride;
            stride *= self.padded[d];
        }
        flat
    }
}

/// One `(x, x0)` entry as a function of the frequency radius.
///
/// In `x` the kernel is point sampled times the cell volume, or, once `t`
/// drops below the squared cell width, integrated exactly over the cells
/// (symmetrised over the two cells of the pair).
/// The `y` hat average applies when the `y`-variance of the kernel is below
/// one squared cell, or when the first alias image is no longer negligible.
struct PairTerm {
    pair: MehlerPair,
    /// `(x_a, x0_a, h_a)` per axis.
    axes: Vec<(f64, f64, f64)>,
    x_integrated: bool,
    h_y: Vec<f64>,
    y_avg: bool,
    t: f64,
    small: f64,
}

impl PairTerm {
    fn new(x: &[f64], x0: &[f64], hx: &[f64], hy: &[f64], t: f64, small: f64) -> Self {
        let pair = MehlerPair::new(x, x0);
        let axes: Vec<(f64, f64, f64)> = x.iter().zip(x0).zip(hx).map(|((a, b), h)| (*a, *b, *h)).collect();
        let h_min = hx.iter().copied().fold(f64::INFINITY, f64::min);
        // Integrated in x once the heat Gaussian itself is narrower than a cell.
        let x_integrated = t < h_min * h_min;
        let n = x.len() as f64;
        let var_y = t * (pair.a_sum + pair.dot()) / 3.0 + n * t * t / 6.0;
        let h_min_y = hy.iter().copied().fold(f64::INFINITY, f64::min);
        let image = pair.log_m(2.0 * PI / h_min_y, t, small) - pair.log_m(0.0, t, small);
        let y_avg = var_y < h_min_y * h_min_y || image > Y_ALIAS_REL.ln();
        Self { pair, axes, x_integrated, h_y: hy.to_vec(), y_avg, t, small }
    }

    fn eval(&self, comp: &[f64]) -> f64 {
        let r = comp.iter().map(|c| c * c).sum::<f64>().sqrt();
        let mut v = if !self.x_integrated {
            let cell: f64 = self.axes.iter().map(|a| a.2).product();
            cell * self.pair.log_m(r, self.t, self.small).exp()
        } else {
            self.axes.iter().map(|&(x, x0, h)| self.axis_factor(r, x, x0, h)).product()
        };
        if self.y_avg {
            for (c, hd) in comp.iter().zip(&self.h_y) {
                v *= sinc2(0.5 * c * hd);
            }
        }
        v
    }

    fn axis_factor(&self, r: f64, x: f64, x0: f64, h: f64) -> f64 {
        let t = self.t;
        let s = r * t;
        // (r / sinh s), r tanh s, r coth s and sech s.
        let (log_ratio, r_tanh, r_coth, sech) = if s < self.small {
            (-t.ln() - s * s / 6.0, r * s, (1.0 + s * s / 3.0) / t, 1.0 - 0.5 * s * s)
        } else {
            let th = s.tanh();
            (r.ln() - ln_sinh(s), r * th, r / th, 1.0 / s.cosh())
        };
        let alpha = 0.5 * r_coth;
        let one_sided = |from: f64, to: f64| -> f64 {
            let c = from * sech;
            let sa = alpha.sqrt();
            let mass = 0.5 * (PI / alpha).sqrt() * erf_diff(sa * (to - 0.5 * h - c), sa * (to + 0.5 * h - c));
            (-0.5 * r_tanh * from * from).exp() * mass
        };
        (0.5 * log_ratio).exp() * 0.5 * (one_sided(x, x0) + one_sided(x0, x))
    }
}

/// `erf(b) - erf(a)` for `a <= b` without cancellation in the tails.
fn erf_diff(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        erfc(a) - erfc(b)
    } else if b <= 0.0 {
        erfc(-b) - erfc(-a)
    } else {
        erf(b) - erf(a)
    }
}

fn alias_sum(term: &PairTerm, xi: &[f64], dual: &[f64], log_thr: f64) -> f64 {
    let (pair, t) = (&term.pair, term.t);
    match xi.len() {
        1 => {
            let mut sum = term.eval(&[xi[0]]);
            for side in [1.0, -1.0] {
                let mut m = 1.0;
                loop {
                    let c = xi[0] + side * m * dual[0];
                    if pair.log_envelope(c.abs(), t) < log_thr {
                        break;
                    }
                    sum += term.eval(&[c]);
                    m += 1.0;
                }
            }
            sum
        }
        _ => {
            let mut sum = term.eval(&[xi[0], xi[1]]);
            let min_dual = dual[0].min(dual[1]);
            let mut s: i64 = 1;
            loop {
                // Every lattice point of shell s lies at radius >= (s - 1/2) min_dual.
                if pair.log_envelope((s as f64 - 0.5) * min_dual, t) < log_thr {
                    break;
                }
                for m1 in -s..=s {
                    for m2 in -s..=s {
                        if m1.abs().max(m2.abs()) != s {
                            continue;
                        }
                        let c = [xi[0] + m1 as f64 * dual[0], xi[1] + m2 as f64 * dual[1]];
                        let r = (c[0] * c[0] + c[1] * c[1]).sqrt();
                        if pair.log_envelope(r, t) >= log_thr {
                            sum += term.eval(&c);
                        }
                    }
                }
                s += 1;
            }
            sum
        }
    }
}

fn fft_nd(buf: &mut [Complex<f64>], dims: &[usize], plans: &[std::sync::Arc<dyn rustfft::Fft<f64>>]) {
    let total = buf.len();
    let mut stride = total;
    let mut scratch = Vec::new();
    for (d, &len) in dims.iter().enumerate() {
        stride /= len;
        let plan = &plans[d];
        if stride == 1 {
            plan.process(buf);
            continue;
        }
        // Gather each strided line, transform, scatter back.
        let outer = total / (len * stride);
        scratch.resize(len, Complex::new(0.0, 0.0));
        for o in 0..outer {
            for s in 0..stride {
                let base = o * len * stride + s;
                for j in 0..len {
                    scratch[j] = buf[base + j * stride];
                }
                plan.process(&mut scratch);
                for j in 0..len {
                    buf[base + j * stride] = scratch[j];
                }
            }
        }
    }
}
