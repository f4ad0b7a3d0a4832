//! B-spline Kolmogorov-Arnold layer.
//!
//! Every edge (i, j) carries `phi_ij(x) = w_ij * silu(x) + sum_k c_ijk B_k(x)`
//! on a shared uniform B-spline grid; node `i` sums its incoming edges. No
//! bias, no per-edge output scaler — the coefficient tensor and the base
//! weights are the only parameters, giving `n_out * n_in * (1 + g)` of them.

use super::{coef_bound, fan_in_bound, uniform_fill, LayerGrads};
use crate::basis::{silu, silu_dx, BsplineGrid};
use crate::error::Result;
use crate::mat::Mat;
use rand_chacha::ChaCha8Rng;

/// KAN layer with spline edge functions plus a SiLU base path.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficientKanLayer {
    n_in: usize,
    n_out: usize,
    grid: BsplineGrid,
    /// `n_out x n_in` base-path weights.
    base_weight: Vec<f64>,
    /// `n_out x n_in x g` spline coefficients, `g = grid.count()`.
    spline_coef: Vec<f64>,
}

/// Forward-pass values needed by the backward pass.
#[derive(Debug, Clone)]
pub struct EfficientKanCache {
    x: Mat,
    silu_x: Mat,
    /// `batch x n_in x g` basis values.
    bases: Vec<f64>,
}

impl EfficientKanLayer {
    /// Fan-in base weights, small-uniform spline coefficients.
    pub fn init(
        n_in: usize,
        n_out: usize,
        grid_size: usize,
        order: usize,
        range: (f64, f64),
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let grid = BsplineGrid::new(grid_size, order, range.0, range.1)?;
        let g = grid.count();
        let mut base_weight = vec![0.0; n_out * n_in];
        uniform_fill(rng, &mut base_weight, fan_in_bound(n_in));
        let mut spline_coef = vec![0.0; n_out * n_in * g];
        uniform_fill(rng, &mut spline_coef, coef_bound(g));
        Ok(EfficientKanLayer { n_in, n_out, grid, base_weight, spline_coef })
    }

    #[must_use]
    pub fn n_in(&self) -> usize {
        self.n_in
    }

    #[must_use]
    pub fn n_out(&self) -> usize {
        self.n_out
    }

    /// Shared B-spline grid.
    #[must_use]
    pub fn grid(&self) -> &BsplineGrid {
        &self.grid
    }

    /// Basis count `g` per edge.
    #[must_use]
    pub fn basis_count(&self) -> usize {
        self.grid.count()
    }

    /// Spline coefficient tensor, flat `n_out x n_in x g`.
    #[must_use]
    pub fn spline_coef(&self) -> &[f64] {
        &self.spline_coef
    }

    pub(super) fn forward(&self, x: &Mat) -> (Mat, EfficientKanCache) {
        let batch = x.rows();
        let g = self.grid.count();
        let mut silu_x = Mat::zeros(batch, self.n_in);
        let mut bases = vec![0.0; batch * self.n_in * g];
        let mut scratch = Vec::new();
        for b in 0..batch {
            let xb = x.row(b);
            let sb = silu_x.row_mut(b);
            for j in 0..self.n_in {
                sb[j] = silu(xb[j]);
                let off = (b * self.n_in + j) * g;
                self.grid.eval_into(xb[j], &mut scratch, &mut bases[off..off + g]);
            }
        }
        let mut y = Mat::zeros(batch, self.n_out);
        for b in 0..batch {
            let sb = silu_x.row(b);
            let yb = y.row_mut(b);
            for i in 0..self.n_out {
                let mut acc = 0.0;
                let wrow = &self.base_weight[i * self.n_in..(i + 1) * self.n_in];
                for j in 0..self.n_in {
                    acc += wrow[j] * sb[j];
                    let coef = &self.spline_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    let basis = &bases[(b * self.n_in + j) * g..(b * self.n_in + j + 1) * g];
                    for (c, v) in coef.iter().zip(basis) {
                        acc += c * v;
                    }
                }
                yb[i] = acc;
            }
        }
        (y, EfficientKanCache { x: x.clone(), silu_x, bases })
    }

    pub(super) fn backward(&self, cache: &EfficientKanCache, grad_out: &Mat) -> LayerGrads {
        let batch = cache.x.rows();
        let g = self.grid.count();
        let mut d_base = vec![0.0; self.base_weight.len()];
        let mut d_coef = vec![0.0; self.spline_coef.len()];
        let mut d_input = Mat::zeros(batch, self.n_in);
        let mut scratch = Vec::new();
        let mut basis_dx = vec![0.0; g];
        let mut basis_tmp = vec![0.0; g];
        for b in 0..batch {
            let xb = cache.x.row(b);
            let sb = cache.silu_x.row(b);
            let gb = grad_out.row(b);
            let dxb = d_input.row_mut(b);
            for j in 0..self.n_in {
                self.grid
                    .eval_with_dx_into(xb[j], &mut scratch, &mut basis_tmp, &mut basis_dx);
                let basis = &cache.bases[(b * self.n_in + j) * g..(b * self.n_in + j + 1) * g];
                let silu_d = silu_dx(xb[j]);
                let mut dx = 0.0;
                for i in 0..self.n_out {
                    let gi = gb[i];
                    if gi == 0.0 {
                        continue;
                    }
                    d_base[i * self.n_in + j] += gi * sb[j];
                    dx += gi * self.base_weight[i * self.n_in + j] * silu_d;
                    let coef = &self.spline_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    let dc = &mut d_coef[(i * self.n_in + j) * g..(i * self.n_in + j + 1) * g];
                    for k in 0..g {
                        dc[k] += gi * basis[k];
                        dx += gi * coef[k] * basis_dx[k];
                    }
                }
                dxb[j] = dx;
            }
        }
        LayerGrads { params: vec![d_base, d_coef], input: d_input }
    }

    pub(super) fn param_arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![("base_weight", &self.base_weight), ("spline_coef", &self.spline_coef)]
    }

    pub(super) fn param_arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![("base_weight", &mut self.base_weight), ("spline_coef", &mut self.spline_coef)]
    }
}
