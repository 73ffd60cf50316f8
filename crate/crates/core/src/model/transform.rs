use serde::{Deserialize, Serialize};

use super::{Grid, GridFunction};
use crate::error::{invalid, Error, Result};

/// Which time argument the scaling map pairs with a spatial dilation by
/// `lambda`: `lambda^2 t` (parabolic) or `lambda t` (the alternative reading).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeConvention {
    Parabolic,
    LinearTime,
}

/// `u_lambda(x, y, t) = lambda^(2/(rho-1)) u(lambda x, lambda^2 y, lambda^2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingMap {
    lambda: f64,
    rho: f64,
}

/// Output of a resampling operation.
#[derive(Debug, Clone)]
pub struct Resampled {
    pub function: GridFunction,
    /// Number of nodes whose dilated preimage fell outside the box (set to 0).
    pub out_of_box: usize,
}

impl ScalingMap {
    pub fn new(lambda: f64, rho: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be positive, got {lambda}")));
        }
        if !(rho > 1.0) {
            return Err(invalid(format!("rho must exceed 1, got {rho}")));
        }
        Ok(Self { lambda, rho })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Amplitude factor `lambda^(2/(rho-1))`.
    pub fn amplitude(&self) -> f64 {
        self.lambda.powf(2.0 / (self.rho - 1.0))
    }

    /// Time at which `u` must be read to build `u_lambda(., t)`.
    pub fn source_time(&self, t: f64, convention: TimeConvention) -> f64 {
        match convention {
            TimeConvention::Parabolic => self.lambda * self.lambda * t,
            TimeConvention::LinearTime => self.lambda * t,
        }
    }

    /// `lambda^(2/(rho-1)) u(lambda x, lambda^2 y)` on `u`'s own grid, where
    /// `u` is the snapshot at [`ScalingMap::source_time`].
    pub fn apply(&self, u: &GridFunction) -> Resampled {
        if self.lambda == 1.0 {
            return Resampled { function: u.clone(), out_of_box: 0 };
        }
        dilate(u, self.lambda, self.amplitude())
    }
}

/// `amp * u(l x, l^2 y)` resampled onto `u`'s grid.
pub(crate) fn dilate(u: &GridFunction, lambda: f64, amp: f64) -> Resampled {
    let grid = u.grid();
    let mut x = vec![0.0; grid.n()];
    let mut y = vec![0.0; grid.k()];
    let mut out_of_box = 0;
    let mut values = Vec::with_capacity(grid.len());
    for ix in 0..grid.x_len() {
        grid.x_coords(ix, &mut x);
        x.iter_mut().for_each(|v| *v *= lambda);
        for iy in 0..grid.y_len() {
            grid.y_coords(iy, &mut y);
            y.iter_mut().for_each(|v| *v *= lambda * lambda);
            match u.sample(&x, &y) {
                Some(v) => values.push(amp * v),
                None => {
                    out_of_box += 1;
                    values.push(0.0);
                }
            }
        }
    }
    Resampled { function: GridFunction::from_parts(grid.clone(), values), out_of_box }
}

/// A signed permutation `(T v)_b = sign_b v_{perm_b}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    pub perm: Vec<usize>,
    pub sign: Vec<f64>,
}

impl SignedPermutation {
    pub fn identity(dim: usize) -> Self {
        Self { perm: (0..dim).collect(), sign: vec![1.0; dim] }
    }

    /// Row-major matrix form.
    pub fn to_matrix(&self) -> Vec<f64> {
        let d = self.perm.len();
        let mut m = vec![0.0; d * d];
        for b in 0..d {
            m[b * d + self.perm[b]] = self.sign[b];
        }
        m
    }

    /// Recognises a signed permutation matrix exactly.
    pub fn from_matrix(m: &[f64], dim: usize) -> Option<Self> {
        let mut perm = vec![0; dim];
        let mut sign = vec![0.0; dim];
        let mut used = vec![false; dim];
        for b in 0..dim {
            let row = &m[b * dim..(b + 1) * dim];
            let nz: Vec<usize> = (0..dim).filter(|&a| row[a] != 0.0).collect();
            if nz.len() != 1 || row[nz[0]].abs() != 1.0 || used[nz[0]] {
                return None;
            }
            used[nz[0]] = true;
            perm[b] = nz[0];
            sign[b] = row[nz[0]];
        }
        Some(Self { perm, sign })
    }
}

fn orthogonality_defect(m: &[f64], d: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            let dot: f64 = (0..d).map(|r| m[r * d + i] * m[r * d + j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst.max((determinant(m, d).abs() - 1.0).abs())
}

fn determinant(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => {
            // Gaussian elimination with partial pivoting.
            let mut a = m.to_vec();
            let mut det = 1.0;
            for c in 0..d {
                let p = (c..d)
                    .max_by(|&i, &j| a[i * d + c].abs().total_cmp(&a[j * d + c].abs()))
                    .unwrap();
                if a[p * d + c] == 0.0 {
                    return 0.0;
                }
                if p != c {
                    for k in 0..d {
                        a.swap(p * d + k, c * d + k);
                    }
                    det = -det;
                }
                det *= a[c * d + c];
                for r in c + 1..d {
                    let f = a[r * d + c] / a[c * d + c];
                    for k in c..d {
                        a[r * d + k] -= f * a[c * d + k];
                    }
                }
            }
            det
        }
    }
}

/// `u o T` for `T = (T1, T2)` in `O(N) x O(k)`, matrices row-major.
///
/// Signed permutations that map the grid onto itself are applied by exact
/// index remapping; anything else is resampled by multilinear interpolation
/// (nodes whose image leaves the box get 0).
pub fn rotate(u: &GridFunction, t1: &[f64], t2: &[f64]) -> Result<GridFunction> {
    let grid = u.grid();
    let (n, k) = (grid.n(), grid.k());
    if t1.len() != n * n || t2.len() != k * k {
        return Err(Error::ShapeMismatch("rotation matrix size does not match grid".into()));
    }
    let defect = orthogonality_defect(t1, n).max(orthogonality_defect(t2, k));
    if defect > 1e-12 {
        return Err(Error::NotOrthogonal(defect));
    }
    if let (Some(p1), Some(p2)) = (SignedPermutation::from_matrix(t1, n), SignedPermutation::from_matrix(t2, k)) {
        if let Some(f) = permute_exact(u, &p1, &p2) {
            return Ok(f);
        }
    }
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; k];
    let mut tx = vec![0.0; n];
    let mut ty = vec![0.0; k];
    let mut values = Vec::with_capacity(grid.len());
    for ix in 0..grid.x_len() {
        grid.x_coords(ix, &mut x);
        matvec(t1, &x, &mut tx);
        for iy in 0..grid.y_len() {
            grid.y_coords(iy, &mut y);
            matvec(t2, &y, &mut ty);
            values.push(u.sample(&tx, &ty).unwrap_or(0.0));
        }
    }
    Ok(GridFunction::from_parts(grid.clone(), values))
}

fn matvec(m: &[f64], v: &[f64], out: &mut [f64]) {
    let d = v.len();
    for (b, o) in out.iter_mut().enumerate() {
        *o = (0..d).map(|a| m[b * d + a] * v[a]).sum();
    }
}

fn permute_exact(u: &GridFunction, p1: &SignedPermutation, p2: &SignedPermutation) -> Option<GridFunction> {
    let grid = u.grid();
    let n = grid.n();
    let axes: Vec<_> = grid.axes().copied().collect();
    // Global permutation over all axes: target axis b reads source axis perm[b].
    let perm: Vec<usize> = p1.perm.iter().copied().chain(p2.perm.iter().map(|a| a + n)).collect();
    let sign: Vec<f64> = p1.sign.iter().chain(&p2.sign).copied().collect();
    for b in 0..axes.len() {
        let a = perm[b];
        let ok = if sign[b] > 0.0 { axes[a] == axes[b] } else { axes[a].is_mirror_of(&axes[b]) };
        if !ok {
            return None;
        }
    }
    let mut values = Vec::with_capacity(grid.len());
    let mut src = vec![0; axes.len()];
    for flat in 0..grid.len() {
        let idx = grid.multi_index(flat);
        // (u o T)(z) = u(T z), and (T z)_b = sign_b z_{perm_b}.
        for b in 0..axes.len() {
            let i = idx[perm[b]];
            src[b] = if sign[b] > 0.0 { i } else { axes[b].count - 1 - i };
        }
        values.push(u.values()[grid.flat_index(&src)]);
    }
    Some(GridFunction::from_parts(grid.clone(), values))
}

/// Checks that `grid` is compatible with the exact application of `p`.
pub fn is_grid_symmetric_under(grid: &Grid, p1: &SignedPermutation, p2: &SignedPermutation) -> bool {
    let u = GridFunction::zeros(grid.clone());
    permute_exact(&u, p1, p2).is_some()
}
