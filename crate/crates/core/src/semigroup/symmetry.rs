//! Exact symmetry classes of grid functions under axis reflections and
//! permutations of interchangeable axes.
//!
//! `S(t)` commutes with every signed permutation of `x` and of `y`. When the
//! input is exactly (bitwise) even or odd along a mirror-symmetric axis, or
//! exactly invariant under swapping identical axes, the output is evaluated
//! on the fundamental domain and extended, so the symmetry survives rounding.

use crate::model::{Grid, GridFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct SymmetryClass {
    /// Per axis (x axes first).
    parity: Vec<Option<Parity>>,
    /// Blocks of axes under whose permutations the function is invariant.
    blocks: Vec<Vec<usize>>,
}

impl SymmetryClass {
    pub fn is_trivial(&self) -> bool {
        self.parity.iter().all(Option::is_none) && self.blocks.is_empty()
    }

    /// The exact symmetries of `f`.
    pub fn detect(f: &GridFunction) -> Self {
        let grid = f.grid();
        let shape = grid.shape();
        let axes: Vec<_> = grid.axes().copied().collect();
        let v = f.values();
        let strides = strides(&shape);
        let parity = (0..axes.len())
            .map(|a| {
                if !axes[a].is_mirror_of(&axes[a]) {
                    return None;
                }
                let (mut even, mut odd) = (true, true);
                for (i, &x) in v.iter().enumerate() {
                    let idx = (i / strides[a]) % shape[a];
                    if 2 * idx + 1 >= shape[a] {
                        continue;
                    }
                    let m = v[i + (shape[a] - 1 - 2 * idx) * strides[a]];
                    even &= x == m;
                    odd &= x == -m;
                    if !even && !odd {
                        return None;
                    }
                }
                // Centre nodes of odd-length axes must vanish for odd parity.
                if odd && shape[a] % 2 == 1 {
                    let c = shape[a] / 2;
                    odd = v.iter().enumerate().all(|(i, x)| (i / strides[a]) % shape[a] != c || *x == 0.0);
                }
                match (even, odd) {
                    (true, _) => Some(Parity::Even),
                    (false, true) => Some(Parity::Odd),
                    _ => None,
                }
            })
            .collect();
        let mut blocks = Vec::new();
        for range in [0..grid.n(), grid.n()..grid.n() + grid.k()] {
            let ids: Vec<usize> = range.collect();
            if ids.len() < 2 || ids.iter().any(|&a| axes[a] != axes[ids[0]]) {
                continue;
            }
            let invariant = ids.windows(2).all(|w| {
                v.iter().enumerate().all(|(i, x)| {
                    let mut m = unflatten(i, &shape);
                    m.swap(w[0], w[1]);
                    *x == v[flatten(&m, &strides)]
                })
            });
            if invariant {
                blocks.push(ids);
            }
        }
        Self { parity, blocks }
    }

    /// Rewrites `values` (laid out on `grid`) so that every node takes the
    /// value of its fundamental-domain representative.
    pub fn enforce(&self, grid: &Grid, values: &mut [f64]) {
        if self.is_trivial() {
            return;
        }
        let shape = grid.shape();
        let strides = strides(&shape);
        for i in 0..values.len() {
            let mut m = unflatten(i, &shape);
            let mut sign = 1.0;
            let mut zero = false;
            for (a, p) in self.parity.iter().enumerate() {
                let Some(p) = p else { continue };
                let len = shape[a];
                if 2 * m[a] + 1 == len && *p == Parity::Odd {
                    zero = true;
                }
                if 2 * m[a] + 1 < len {
                    m[a] = len - 1 - m[a];
                    if *p == Parity::Odd {
                        sign = -sign;
                    }
                }
            }
            for b in &self.blocks {
                let mut idx: Vec<usize> = b.iter().map(|&a| m[a]).collect();
                idx.sort_unstable();
                for (&a, v) in b.iter().zip(idx) {
                    m[a] = v;
                }
            }
            let j = flatten(&m, &strides);
            values[i] = if zero { 0.0 } else if j == i { values[i] } else { sign * values[j] };
        }
    }
}

fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for d in (0..shape.len().saturating_sub(1)).rev() {
        s[d] = s[d + 1] * shape[d + 1];
    }
    s
}

fn unflatten(mut i: usize, shape: &[usize]) -> Vec<usize> {
    let mut m = vec![0; shape.len()];
    for d in (0..shape.len()).rev() {
        m[d] = i % shape[d];
        i /= shape[d];
    }
    m
}

fn flatten(m: &[usize], strides: &[usize]) -> usize {
    m.iter().zip(strides).map(|(a, b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detects_and_enforces() {
        let g = Grid::cube(1, 1, 3.0, 6).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x, y| x[0] * (1.0 + y[0] * y[0])).unwrap();
        let c = SymmetryClass::detect(&f);
        assert_eq!(c.parity, vec![Some(Parity::Odd), Some(Parity::Even)]);
        let mut v: Vec<f64> = f.values().iter().enumerate().map(|(i, x)| x + 1e-3 * i as f64).collect();
        c.enforce(&g, &mut v);
        assert_eq!(SymmetryClass::detect(&GridFunction::new(g.clone(), v).unwrap()), c);
        let plain = GridFunction::from_fn(g, |x, y| x[0] + y[0]).unwrap();
        assert!(SymmetryClass::detect(&plain).is_trivial());
    }

    #[test]
    fn permutation_blocks() {
        let g = Grid::cube(2, 1, 2.0, 4).unwrap();
        let f = GridFunction::from_fn(g.clone(), |x, y| (x[0] * x[1]).sin() + (x[0] + x[1]) + y[0]).unwrap();
        let c = SymmetryClass::detect(&f);
        assert_eq!(c.blocks, vec![vec![0, 1]]);
        assert!(c.parity.iter().all(Option::is_none));
    }
}
