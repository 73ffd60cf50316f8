use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One cell-centred axis: `count` cells of equal width tiling `[min, max]`,
/// with nodes at the cell centres `min + (i + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(invalid(format!("axis needs at least 2 cells, got {count}")));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(invalid(format!("axis bounds must satisfy min < max, got [{min}, {max}]")));
        }
        Ok(Self { min, max, count })
    }

    /// Symmetric axis `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, count: usize) -> Result<Self> {
        Self::new(-half_width, half_width, count)
    }

    pub fn spacing(&self) -> f64 {
        (self.max - self.min) / self.count as f64
    }

    /// Measured from the centre, so mirrored nodes of a symmetric axis are
    /// exact negatives of each other.
    pub fn node(&self, i: usize) -> f64 {
        0.5 * (self.min + self.max) + (i as f64 + 0.5 - 0.5 * self.count as f64) * self.spacing()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.node(i)).collect()
    }

    /// True when `other` holds the mirror image `-v` of every node.
    pub fn is_mirror_of(&self, other: &Axis) -> bool {
        self.count == other.count && self.min == -other.max && self.max == -other.min
    }

    /// Lower interpolation index and weight for coordinate `v`, or `None`
    /// outside the box. Points between the box edge and the outermost node
    /// take the edge node value.
    pub(crate) fn locate(&self, v: f64) -> Option<(usize, f64)> {
        if !(v >= self.min && v <= self.max) {
            return None;
        }
        let s = ((v - self.min) / self.spacing() - 0.5).clamp(0.0, (self.count - 1) as f64);
        let i = (s.floor() as usize).min(self.count - 2);
        Some((i, s - i as f64))
    }
}

/// Tensor-product cell-centred grid over a box in `R^N x R^k`.
///
/// Values are stored row-major over the axes `x_1..x_N, y_1..y_k`, so each
/// x-node owns a contiguous block of `y_len()` values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    x_axes: Vec<Axis>,
    y_axes: Vec<Axis>,
}

impl Grid {
    pub fn new(x_axes: Vec<Axis>, y_axes: Vec<Axis>) -> Result<Self> {
        if x_axes.is_empty() || y_axes.is_empty() {
            return Err(invalid("grid needs at least one x-axis and one y-axis"));
        }
        for a in x_axes.iter().chain(&y_axes) {
            Axis::new(a.min, a.max, a.count)?;
        }
        Ok(Self { x_axes, y_axes })
    }

    /// Cube grid with `count` cells on `[-half_width, half_width]` per axis.
    pub fn cube(n: usize, k: usize, half_width: f64, count: usize) -> Result<Self> {
        let a = Axis::symmetric(half_width, count)?;
        Self::new(vec![a; n], vec![a; k])
    }

    /// Box grid with separate x and y extents.
    pub fn boxed(
        n: usize,
        k: usize,
        x_half: f64,
        x_count: usize,
        y_half: f64,
        y_count: usize,
    ) -> Result<Self> {
        Self::new(
            vec![Axis::symmetric(x_half, x_count)?; n],
            vec![Axis::symmetric(y_half, y_count)?; k],
        )
    }

    pub fn x_axes(&self) -> &[Axis] {
        &self.x_axes
    }

    pub fn y_axes(&self) -> &[Axis] {
        &self.y_axes
    }

    pub fn n(&self) -> usize {
        self.x_axes.len()
    }

    pub fn k(&self) -> usize {
        self.y_axes.len()
    }

    pub fn axes(&self) -> impl Iterator<Item = &Axis> {
        self.x_axes.iter().chain(&self.y_axes)
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes().map(|a| a.count).collect()
    }

    pub fn x_len(&self) -> usize {
        self.x_axes.iter().map(|a| a.count).product()
    }

    pub fn y_len(&self) -> usize {
        self.y_axes.iter().map(|a| a.count).product()
    }

    pub fn len(&self) -> usize {
        self.x_len() * self.y_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x_cell_volume(&self) -> f64 {
        self.x_axes.iter().map(Axis::spacing).product()
    }

    pub fn y_cell_volume(&self) -> f64 {
        self.y_axes.iter().map(Axis::spacing).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.x_cell_volume() * self.y_cell_volume()
    }

    /// Box volume.
    pub fn volume(&self) -> f64 {
        self.axes().map(|a| a.max - a.min).product()
    }

    /// Coordinates of x-node `ix` (flat over the x-axes).
    pub fn x_coords(&self, ix: usize, out: &mut [f64]) {
        unflatten(&self.x_axes, ix, out);
    }

    pub fn y_coords(&self, iy: usize, out: &mut [f64]) {
        unflatten(&self.y_axes, iy, out);
    }

    /// All x-node coordinates, one vector per node.
    pub fn x_points(&self) -> Vec<Vec<f64>> {
        (0..self.x_len())
            .map(|ix| {
                let mut v = vec![0.0; self.n()];
                self.x_coords(ix, &mut v);
                v
            })
            .collect()
    }

    pub fn y_points(&self) -> Vec<Vec<f64>> {
        (0..self.y_len())
            .map(|iy| {
                let mut v = vec![0.0; self.k()];
                self.y_coords(iy, &mut v);
                v
            })
            .collect()
    }

    /// Per-axis multi-index of a flat index.
    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut idx = vec![0; shape.len()];
        let mut rem = flat;
        for d in (0..shape.len()).rev() {
            idx[d] = rem % shape[d];
            rem /= shape[d];
        }
        idx
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        self.axes()
            .zip(multi)
            .fold(0, |acc, (a, &i)| acc * a.count + i)
    }

    /// Stable key for caches.
    pub(crate) fn cache_key(&self) -> Vec<u64> {
        self.axes()
            .flat_map(|a| [a.min.to_bits(), a.max.to_bits(), a.count as u64])
            .collect()
    }

    pub(crate) fn same_as(&self, other: &Grid) -> Result<()> {
        if self != other {
            return Err(Error::ShapeMismatch("grid functions live on different grids".into()));
        }
        Ok(())
    }
}

fn unflatten(axes: &[Axis], mut flat: usize, out: &mut [f64]) {
    for d in (0..axes.len()).rev() {
        let c = axes[d].count;
        out[d] = axes[d].node(flat % c);
        flat /= c;
    }
}

/// A real function sampled at the nodes of a [`Grid`]; all values finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        Self { grid, values: vec![0.0; n] }
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        let n = grid.len();
        Self { grid, values: vec![c; n] }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: Grid, mut f: impl FnMut(&[f64], &[f64]) -> f64) -> Result<Self> {
        let mut x = vec![0.0; grid.n()];
        let mut y = vec![0.0; grid.k()];
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.x_len() {
            grid.x_coords(ix, &mut x);
            for iy in 0..grid.y_len() {
                grid.y_coords(iy, &mut y);
                values.push(f(&x, &y));
            }
        }
        Self::new(grid, values)
    }

    /// Internal constructor for values already known to be finite.
    pub(crate) fn from_parts(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, c: f64) -> Self {
        Self::from_parts(self.grid.clone(), self.values.iter().map(|v| c * v).collect())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self::from_parts(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        ))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self::from_parts(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        ))
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Self::new(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        )
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.grid.same_as(&other.grid)?;
        Ok(Self::from_parts(
            self.grid.clone(),
            self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect(),
        ))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `sum(values) * cell volume`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Discrete `L^r` norm; `r = inf` gives the grid maximum of `|f|`.
    pub fn lebesgue_norm(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return self.max_abs();
        }
        let s: f64 = self.values.iter().map(|v| v.abs().powf(r)).sum();
        (s * self.grid.cell_volume()).powf(1.0 / r)
    }

    /// Discrete `L^2` inner product.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.grid.same_as(&other.grid)?;
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            * self.grid.cell_volume())
    }

    /// Multilinear interpolation at `(x, y)`; `None` outside the box.
    pub fn sample(&self, x: &[f64], y: &[f64]) -> Option<f64> {
        let d = self.grid.n() + self.grid.k();
        let mut base = [0usize; 8];
        let mut frac = [0f64; 8];
        for (a, (axis, &v)) in self.grid.axes().zip(x.iter().chain(y)).enumerate() {
            let (i, f) = axis.locate(v)?;
            base[a] = i;
            frac[a] = f;
        }
        let shape = self.grid.shape();
        let mut acc = 0.0;
        for corner in 0..(1usize << d) {
            let mut w = 1.0;
            let mut flat = 0;
            for a in 0..d {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
                flat = flat * shape[a] + base[a] + bit;
            }
            if w != 0.0 {
                acc += w * self.values[flat];
            }
        }
        Some(acc)
    }

    /// Value at a node given by its per-axis multi-index.
    pub fn value_at_node(&self, multi: &[usize]) -> f64 {
        self.values[self.grid.flat_index(multi)]
    }
}
