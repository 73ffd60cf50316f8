//! Direct route: dense quadrature against point samples of `K`, with the
//! datum extended by zero outside the box.

use rayon::prelude::*;

use crate::kernel::{KernelQuadrature, MehlerPair, RadialPlan};
use crate::model::{Grid, ModelParams};

const PAIR_CUTOFF: f64 = 50.0;
const NONE: u32 = u32::MAX;

/// `K(x_i, x_l, y-offset; t)` for every `(i <= l)` pair and every
/// nonnegative `y`-offset multi-index.
pub(crate) struct DirectTable {
    x_len: usize,
    y_counts: Vec<usize>,
    slot: Vec<u32>,
    table: Vec<f64>,
    n_off: usize,
    volume: f64,
}

impl DirectTable {
    pub fn build(grid: &Grid, t: f64, params: &ModelParams, q: &KernelQuadrature) -> Self {
        let xs = grid.x_points();
        let x_len = xs.len();
        let y_axes = grid.y_axes();
        let y_counts: Vec<usize> = y_axes.iter().map(|a| a.count).collect();
        let h: Vec<f64> = y_axes.iter().map(|a| a.spacing()).collect();
        let n_off: usize = y_counts.iter().product();
        let y_cap = y_counts
            .iter()
            .zip(&h)
            .map(|(c, hd)| ((c - 1) as f64 * hd).powi(2))
            .sum::<f64>()
            .sqrt();

        let mut slot = vec![NONE; x_len * x_len];
        let mut pairs = Vec::new();
        for i in 0..x_len {
            for l in i..x_len {
                let d2: f64 = xs[i].iter().zip(&xs[l]).map(|(a, b)| (a - b) * (a - b)).sum();
                if d2 / (2.0 * t) <= PAIR_CUTOFF {
                    let s = pairs.len() as u32;
                    slot[i * x_len + l] = s;
                    slot[l * x_len + i] = s;
                    pairs.push((i, l));
                }
            }
        }

        let offsets: Vec<f64> = (0..n_off)
            .map(|o| {
                let mut rem = o;
                let mut r2 = 0.0;
                for d in (0..y_counts.len()).rev() {
                    let j = rem % y_counts[d];
                    rem /= y_counts[d];
                    r2 += (j as f64 * h[d]).powi(2);
                }
                r2.sqrt()
            })
            .collect();

        let rows: Vec<Vec<f64>> = pairs
            .par_iter()
            .map(|&(i, l)| {
                let plan = RadialPlan::build(MehlerPair::new(&xs[i], &xs[l]), t, y_cap, params, q);
                if y_counts.len() == 1 {
                    cosine_row(&plan, h[0], n_off)
                } else {
                    offsets.iter().map(|&r| plan.eval(r)).collect()
                }
            })
            .collect();
        let table = rows.into_iter().flatten().collect();
        Self { x_len, y_counts, slot, table, n_off, volume: grid.cell_volume() }
    }

    pub fn bytes(&self) -> usize {
        8 * self.table.len() + 4 * self.slot.len()
    }

    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let y_len = self.n_off;
        let k = self.y_counts.len();
        let out: Vec<Vec<f64>> = (0..self.x_len)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; y_len];
                for l in 0..self.x_len {
                    let s = self.slot[i * self.x_len + l];
                    if s == NONE {
                        continue;
                    }
                    let kern = &self.table[s as usize * self.n_off..(s as usize + 1) * self.n_off];
                    let src = &phi[l * y_len..(l + 1) * y_len];
                    if k == 1 {
                        for (a, o) in row.iter_mut().enumerate() {
                            let mut acc = 0.0;
                            for (b, v) in src.iter().enumerate() {
                                acc += kern[a.abs_diff(b)] * v;
                            }
                            *o += acc;
                        }
                    } else {
                        let (n1, n2) = (self.y_counts[0], self.y_counts[1]);
                        for a1 in 0..n1 {
                            for a2 in 0..n2 {
                                let mut acc = 0.0;
                                for b1 in 0..n1 {
                                    let base = a1.abs_diff(b1) * n2;
                                    for b2 in 0..n2 {
                                        acc += kern[base + a2.abs_diff(b2)] * src[b1 * n2 + b2];
                                    }
                                }
                                row[a1 * n2 + a2] += acc;
                            }
                        }
                    }
                }
                row.iter_mut().for_each(|v| *v *= self.volume);
                row
            })
            .collect();
        out.into_iter().flatten().collect()
    }
}

/// `sum_i w_i cos(r_i j h)` for `j = 0..count` via the Chebyshev recurrence.
fn cosine_row(plan: &RadialPlan, h: f64, count: usize) -> Vec<f64> {
    let mut row = vec![0.0; count];
    for (&r, &w) in plan.nodes().iter().zip(plan.weights()) {
        let c1 = (r * h).cos();
        let (mut prev, mut cur) = (1.0, c1);
        row[0] += w;
        for v in row.iter_mut().skip(1) {
            *v += w * cur;
            let next = 2.0 * c1 * cur - prev;
            prev = cur;
            cur = next;
        }
    }
    row
}
