//! Regularization penalties added to the reconstruction loss.
//!
//! * Latent orthogonality `||Z^T Z - I||_F^2` (un-normalized, per mini-batch)
//!   pushes the baseline autoencoder toward decorrelated latent units.
//! * An L1 + entropy pair over the B-spline coefficient magnitudes
//!   sparsifies the spline layer's edge functions.

use crate::layers::EfficientKanLayer;
use crate::mat::Mat;

/// `||Z^T Z - I||_F^2` for a latent batch `Z` (rows = samples).
#[must_use]
pub fn orthogonality(z: &Mat) -> f64 {
    let gram = z.gram();
    let n = z.cols();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = gram[(i, j)] - f64::from(u8::from(i == j));
            acc += d * d;
        }
    }
    acc
}

/// Penalty value plus its gradient `4 Z (Z^T Z - I)` w.r.t. `Z`.
#[must_use]
pub fn orthogonality_with_grad(z: &Mat) -> (f64, Mat) {
    let mut gram = z.gram();
    let n = z.cols();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..n {
            let d = gram[(i, j)] - f64::from(u8::from(i == j));
            value += d * d;
            gram[(i, j)] = d; // reuse storage for (G - I)
        }
    }
    let mut grad = Mat::zeros(z.rows(), n);
    for b in 0..z.rows() {
        let zb = z.row(b);
        let gb = grad.row_mut(b);
        for j in 0..n {
            let mut acc = 0.0;
            for (k, &zk) in zb.iter().enumerate() {
                acc += zk * gram[(k, j)];
            }
            gb[j] = 4.0 * acc;
        }
    }
    (value, grad)
}

/// L1 and entropy penalties over mean absolute spline coefficients.
///
/// With `m_ij = mean_k |c_ijk|` and `M = sum_ij m_ij`: the L1 term is `M`,
/// and the entropy term is `-sum_ij p_ij ln p_ij` for `p_ij = m_ij / M`
/// (zero when `M` is zero).
#[must_use]
pub fn l1_entropy(layer: &EfficientKanLayer) -> (f64, f64) {
    let (l1, entropy, _, _) = l1_entropy_impl(layer, false);
    (l1, entropy)
}

/// Penalty values plus their gradients w.r.t. the spline coefficients.
///
/// Gradients use the subgradient convention `sign(0) = 0`; edges whose mean
/// magnitude is exactly zero contribute no entropy gradient.
#[must_use]
pub fn l1_entropy_with_grad(layer: &EfficientKanLayer) -> (f64, f64, Vec<f64>, Vec<f64>) {
    l1_entropy_impl(layer, true)
}

fn l1_entropy_impl(
    layer: &EfficientKanLayer,
    with_grad: bool,
) -> (f64, f64, Vec<f64>, Vec<f64>) {
    let g = layer.basis_count();
    let coef = layer.spline_coef();
    let edges = layer.n_out() * layer.n_in();
    let inv_g = 1.0 / g as f64;

    let mut mean_abs = vec![0.0; edges];
    for (e, m) in mean_abs.iter_mut().enumerate() {
        let c = &coef[e * g..(e + 1) * g];
        *m = c.iter().map(|v| v.abs()).sum::<f64>() * inv_g;
    }
    let total: f64 = mean_abs.iter().sum();

    let mut entropy = 0.0;
    if total > 0.0 {
        for &m in &mean_abs {
            if m > 0.0 {
                let p = m / total;
                entropy -= p * p.ln();
            }
        }
    }

    if !with_grad {
        return (total, entropy, Vec::new(), Vec::new());
    }

    let mut grad_l1 = vec![0.0; coef.len()];
    let mut grad_entropy = vec![0.0; coef.len()];
    for e in 0..edges {
        // dS/dm_e = -(ln p_e + S) / M, chained with dm_e/dc = sign(c)/g.
        let ds_dm = if total > 0.0 && mean_abs[e] > 0.0 {
            let p = mean_abs[e] / total;
            -(p.ln() + entropy) / total
        } else {
            0.0
        };
        for k in 0..g {
            let sign = signum_zero(coef[e * g + k]);
            grad_l1[e * g + k] = sign * inv_g;
            grad_entropy[e * g + k] = ds_dm * sign * inv_g;
        }
    }
    (total, entropy, grad_l1, grad_entropy)
}

fn signum_zero(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}
