//! Univariate basis families for the learnable edge functions.
//!
//! Each Kolmogorov-Arnold layer kind expands its scalar inputs in one of four
//! families:
//!
//! * uniform B-splines on an extended knot vector ([`BsplineGrid`]),
//! * equally spaced Gaussian radial bumps ([`RbfGrid`]),
//! * truncated Fourier features ([`fourier_features`]),
//! * a single derivative-of-Gaussian wavelet ([`dog`]) shifted and scaled
//!   per edge.
//!
//! Everything here is pure scalar math with analytic derivatives; the layer
//! code composes these into per-edge functions and owns the coefficients.

use crate::error::{Error, Result};

/// Numerically stable logistic sigmoid.
#[must_use]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// SiLU activation `x * sigmoid(x)`, the base path on every KAN edge.
#[must_use]
pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

/// Derivative of [`silu`]: `sigmoid(x) * (1 + x * (1 - sigmoid(x)))`.
#[must_use]
pub fn silu_dx(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Derivative-of-Gaussian mother wavelet `psi(x) = -x * exp(-x^2 / 2)`.
#[must_use]
pub fn dog(x: f64) -> f64 {
    -x * (-0.5 * x * x).exp()
}

/// Derivative of [`dog`]: `(x^2 - 1) * exp(-x^2 / 2)`.
#[must_use]
pub fn dog_dx(x: f64) -> f64 {
    (x * x - 1.0) * (-0.5 * x * x).exp()
}

/// Uniform B-spline basis on `[lo, hi]` with `order`-fold knot extension.
///
/// `grid_size` interior intervals of width `(hi - lo) / grid_size` are
/// extended by `order` extra intervals on each side, giving
/// `grid_size + 2 * order + 1` knots and `grid_size + order` basis functions.
/// Inputs outside the extended knot span simply evaluate to an all-zero
/// basis vector (no clamping).
#[derive(Debug, Clone, PartialEq)]
pub struct BsplineGrid {
    grid_size: usize,
    order: usize,
    knots: Vec<f64>,
}

impl BsplineGrid {
    /// Builds the extended uniform knot vector.
    pub fn new(grid_size: usize, order: usize, lo: f64, hi: f64) -> Result<Self> {
        if grid_size == 0 {
            return Err(Error::config("B-spline grid needs at least one interval"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!("invalid B-spline range [{lo}, {hi}]")));
        }
        let h = (hi - lo) / grid_size as f64;
        let n_knots = grid_size + 2 * order + 1;
        let knots = (0..n_knots)
            .map(|i| lo + (i as f64 - order as f64) * h)
            .collect();
        Ok(BsplineGrid { grid_size, order, knots })
    }

    /// Number of basis functions: `grid_size + order`.
    #[must_use]
    pub fn count(&self) -> usize {
        self.grid_size + self.order
    }

    /// Spline order (polynomial degree).
    #[must_use]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of interior grid intervals.
    #[must_use]
    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Extended knot vector.
    #[must_use]
    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Scratch length required by [`Self::eval_into`].
    #[must_use]
    pub fn scratch_len(&self) -> usize {
        self.knots.len() - 1
    }

    /// Evaluates all basis functions at `x` into `out` (`len == count()`).
    ///
    /// `scratch` is resized as needed; reuse it across calls to avoid
    /// per-sample allocation in hot loops.
    pub fn eval_into(&self, x: f64, scratch: &mut Vec<f64>, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count());
        self.raise_to(self.order, x, scratch);
        out.copy_from_slice(&scratch[..self.count()]);
    }

    /// Evaluates basis values and their first derivatives at `x`.
    pub fn eval_with_dx_into(
        &self,
        x: f64,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
        dout: &mut [f64],
    ) {
        debug_assert_eq!(out.len(), self.count());
        debug_assert_eq!(dout.len(), self.count());
        if self.order == 0 {
            // Piecewise-constant basis: derivative is zero almost everywhere.
            self.eval_into(x, scratch, out);
            dout.fill(0.0);
            return;
        }
        // d/dx B[i,p] = p * (B[i,p-1]/(t[i+p]-t[i]) - B[i+1,p-1]/(t[i+p+1]-t[i+1]))
        self.raise_to(self.order - 1, x, scratch);
        let t = &self.knots;
        let p = self.order as f64;
        let pi = self.order;
        for i in 0..self.count() {
            let left = scratch[i] / (t[i + pi] - t[i]);
            let right = scratch[i + 1] / (t[i + pi + 1] - t[i + 1]);
            dout[i] = p * (left - right);
        }
        self.raise_step(self.order, x, scratch);
        out.copy_from_slice(&scratch[..self.count()]);
    }

    /// Convenience allocation-heavy wrapper around [`Self::eval_into`].
    #[must_use]
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut scratch = Vec::new();
        let mut out = vec![0.0; self.count()];
        self.eval_into(x, &mut scratch, &mut out);
        out
    }

    /// Fills `scratch[..n-1-p]` with all degree-`p` basis values at `x`
    /// via the Cox-de Boor pyramid.
    fn raise_to(&self, degree: usize, x: f64, scratch: &mut Vec<f64>) {
        let n = self.knots.len();
        scratch.clear();
        scratch.resize(n - 1, 0.0);
        for i in 0..n - 1 {
            scratch[i] = f64::from(u8::from(self.knots[i] <= x && x < self.knots[i + 1]));
        }
        for p in 1..=degree {
            self.raise_step(p, x, scratch);
        }
    }

    /// One Cox-de Boor elevation step from degree `p - 1` to `p`, in place.
    fn raise_step(&self, p: usize, x: f64, scratch: &mut [f64]) {
        let t = &self.knots;
        let m = t.len() - 1 - p;
        for i in 0..m {
            let left = (x - t[i]) / (t[i + p] - t[i]) * scratch[i];
            let right = (t[i + p + 1] - x) / (t[i + p + 1] - t[i + 1]) * scratch[i + 1];
            scratch[i] = left + right;
        }
    }
}

/// Equally spaced Gaussian radial basis on `[lo, hi]`.
///
/// Centers sit at `linspace(lo, hi, count)`; the shared width equals the
/// center spacing, so each bump drops to `exp(-1)` exactly one spacing away
/// from its center.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfGrid {
    centers: Vec<f64>,
    width: f64,
}

impl RbfGrid {
    /// Builds `count >= 2` centers spanning `[lo, hi]`.
    pub fn new(count: usize, lo: f64, hi: f64) -> Result<Self> {
        if count < 2 {
            return Err(Error::config("RBF grid needs at least two centers"));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::config(format!("invalid RBF range [{lo}, {hi}]")));
        }
        let width = (hi - lo) / (count - 1) as f64;
        let centers = (0..count).map(|i| lo + i as f64 * width).collect();
        Ok(RbfGrid { centers, width })
    }

    /// Number of radial bumps.
    #[must_use]
    pub fn count(&self) -> usize {
        self.centers.len()
    }

    /// Shared kernel width (= center spacing).
    #[must_use]
    pub fn width(&self) -> f64 {
        self.width
    }

    /// Center locations.
    #[must_use]
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    /// Evaluates `exp(-((x - c_k) / width)^2)` for every center.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count());
        for (o, &c) in out.iter_mut().zip(&self.centers) {
            let z = (x - c) / self.width;
            *o = (-z * z).exp();
        }
    }

    /// Evaluates bump values and their derivatives in `x`.
    pub fn eval_with_dx_into(&self, x: f64, out: &mut [f64], dout: &mut [f64]) {
        debug_assert_eq!(out.len(), self.count());
        debug_assert_eq!(dout.len(), self.count());
        for k in 0..self.centers.len() {
            let z = (x - self.centers[k]) / self.width;
            let v = (-z * z).exp();
            out[k] = v;
            dout[k] = v * (-2.0 * z / self.width);
        }
    }

    /// Convenience wrapper returning a fresh vector.
    #[must_use]
    pub fn eval(&self, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.count()];
        self.eval_into(x, &mut out);
        out
    }
}

/// Number of Fourier features for `modes` frequencies (cos + sin per mode).
#[must_use]
pub fn fourier_len(modes: usize) -> usize {
    2 * modes
}

/// Truncated Fourier features `[cos(x), sin(x), cos(2x), sin(2x), ...]`.
pub fn fourier_features(x: f64, modes: usize, out: &mut [f64]) {
    debug_assert_eq!(out.len(), fourier_len(modes));
    for k in 1..=modes {
        let kx = k as f64 * x;
        out[2 * (k - 1)] = kx.cos();
        out[2 * (k - 1) + 1] = kx.sin();
    }
}

/// Derivatives in `x` of [`fourier_features`], same layout.
pub fn fourier_features_dx(x: f64, modes: usize, dout: &mut [f64]) {
    debug_assert_eq!(dout.len(), fourier_len(modes));
    for k in 1..=modes {
        let kf = k as f64;
        let kx = kf * x;
        dout[2 * (k - 1)] = -kf * kx.sin();
        dout[2 * (k - 1) + 1] = kf * kx.cos();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Textbook Cox-de Boor recursion, written independently of the
    /// iterative pyramid above, as the reference oracle.
    fn cox_de_boor(t: &[f64], i: usize, p: usize, x: f64) -> f64 {
        if p == 0 {
            return f64::from(u8::from(t[i] <= x && x < t[i + 1]));
        }
        let mut v = 0.0;
        let dl = t[i + p] - t[i];
        if dl > 0.0 {
            v += (x - t[i]) / dl * cox_de_boor(t, i, p - 1, x);
        }
        let dr = t[i + p + 1] - t[i + 1];
        if dr > 0.0 {
            v += (t[i + p + 1] - x) / dr * cox_de_boor(t, i + 1, p - 1, x);
        }
        v
    }

    fn central_diff(f: impl Fn(f64) -> f64, x: f64, eps: f64) -> f64 {
        (f(x + eps) - f(x - eps)) / (2.0 * eps)
    }

    fn detection_grid() -> BsplineGrid {
        BsplineGrid::new(3, 3, -1.0, 1.0).unwrap()
    }

    #[test]
    fn knot_vector_matches_uniform_extension() {
        let g = detection_grid();
        assert_eq!(g.count(), 6);
        assert_eq!(g.knots().len(), 10);
        assert_abs_diff_eq!(g.knots()[0], -3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.knots()[9], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(g.knots()[4] - g.knots()[3], 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_direct_recursion_oracle() {
        let g = detection_grid();
        // Includes the explicit reference point x = 0.3 plus random points,
        // some outside the knot span.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut points = vec![0.3, -1.0, 0.0, 1.0 - 1e-9, 2.9, -3.5];
        points.extend((0..200).map(|_| rng.random_range(-3.5..3.5)));
        for &x in &points {
            let got = g.eval(x);
            for (i, &v) in got.iter().enumerate() {
                let want = cox_de_boor(g.knots(), i, 3, x);
                assert_abs_diff_eq!(v, want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn partition_of_unity_inside_range() {
        let g = detection_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = rng.random_range(-1.0..1.0);
            let sum: f64 = g.eval(x).iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "sum {sum} at x={x}");
        }
    }

    #[test]
    fn basis_values_are_nonnegative_everywhere() {
        let g = detection_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let x = rng.random_range(-4.0..4.0);
            assert!(g.eval(x).iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn derivatives_match_finite_differences_and_sum_to_zero() {
        let g = detection_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut scratch = Vec::new();
        let mut vals = vec![0.0; g.count()];
        let mut derivs = vec![0.0; g.count()];
        for _ in 0..200 {
            let x = rng.random_range(-0.95..0.95);
            g.eval_with_dx_into(x, &mut scratch, &mut vals, &mut derivs);
            assert_abs_diff_eq!(vals.as_slice(), g.eval(x).as_slice(), epsilon = 1e-14);
            for i in 0..g.count() {
                let fd = central_diff(|t| g.eval(t)[i], x, 1e-6);
                assert_abs_diff_eq!(derivs[i], fd, epsilon = 1e-7);
            }
            // Inside the range the basis sums to 1, so derivatives cancel.
            let dsum: f64 = derivs.iter().sum();
            assert_abs_diff_eq!(dsum, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn order_one_gives_hat_functions() {
        let g = BsplineGrid::new(2, 1, 0.0, 2.0).unwrap();
        assert_eq!(g.count(), 3);
        let v = g.eval(0.5);
        assert_abs_diff_eq!(v[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(v[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn bspline_rejects_bad_config() {
        assert!(BsplineGrid::new(0, 3, -1.0, 1.0).is_err());
        assert!(BsplineGrid::new(3, 3, 1.0, -1.0).is_err());
        assert!(BsplineGrid::new(3, 3, 0.0, f64::NAN).is_err());
    }

    #[test]
    fn rbf_peaks_at_centers_and_decays_to_inv_e() {
        let g = RbfGrid::new(5, -2.0, 2.0).unwrap();
        assert_abs_diff_eq!(g.width(), 1.0, epsilon = 1e-12);
        assert_eq!(g.centers(), &[-2.0, -1.0, 0.0, 1.0, 2.0]);
        for (k, &c) in g.centers().iter().enumerate() {
            let at_center = g.eval(c);
            assert_abs_diff_eq!(at_center[k], 1.0, epsilon = 1e-12);
            let one_width_off = g.eval(c + g.width());
            assert_abs_diff_eq!(one_width_off[k], (-1.0f64).exp(), epsilon = 1e-12);
            // Symmetric around the center.
            let left = g.eval(c - 0.37)[k];
            let right = g.eval(c + 0.37)[k];
            assert_abs_diff_eq!(left, right, epsilon = 1e-14);
        }
    }

    #[test]
    fn rbf_derivative_matches_finite_difference() {
        let g = RbfGrid::new(5, -2.0, 2.0).unwrap();
        let mut vals = vec![0.0; 5];
        let mut derivs = vec![0.0; 5];
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let x = rng.random_range(-3.0..3.0);
            g.eval_with_dx_into(x, &mut vals, &mut derivs);
            for k in 0..5 {
                let fd = central_diff(|t| g.eval(t)[k], x, 1e-6);
                assert_abs_diff_eq!(derivs[k], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn fourier_features_at_reference_angles() {
        let mut out = vec![0.0; fourier_len(3)];
        fourier_features(0.0, 3, &mut out);
        assert_eq!(out, vec![1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        fourier_features(std::f64::consts::FRAC_PI_2, 3, &mut out);
        // cos(pi/2), sin(pi/2), cos(pi), sin(pi), cos(3pi/2), sin(3pi/2)
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[2], -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[3], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[4], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[5], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn fourier_features_are_two_pi_periodic() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut a = vec![0.0; fourier_len(3)];
        let mut b = vec![0.0; fourier_len(3)];
        for _ in 0..500 {
            let x = rng.random_range(-10.0..10.0);
            fourier_features(x, 3, &mut a);
            fourier_features(x + std::f64::consts::TAU, 3, &mut b);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12, "periodicity broken: {u} vs {v}");
            }
        }
    }

    #[test]
    fn fourier_derivative_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut derivs = vec![0.0; fourier_len(3)];
        for _ in 0..100 {
            let x = rng.random_range(-4.0..4.0);
            fourier_features_dx(x, 3, &mut derivs);
            for k in 0..fourier_len(3) {
                let fd = central_diff(
                    |t| {
                        let mut out = vec![0.0; fourier_len(3)];
                        fourier_features(t, 3, &mut out);
                        out[k]
                    },
                    x,
                    1e-6,
                );
                assert_abs_diff_eq!(derivs[k], fd, epsilon = 1e-8);
            }
        }
    }

    #[test]
    fn silu_and_sigmoid_reference_values() {
        assert_abs_diff_eq!(sigmoid(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(silu(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(silu_dx(0.0), 0.5, epsilon = 1e-15);
        // Stable in the far tails: no NaN/inf from exp overflow.
        assert!(sigmoid(800.0) == 1.0 && sigmoid(-800.0) == 0.0);
        assert!(silu(-800.0).abs() < 1e-300);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..200 {
            let x = rng.random_range(-6.0..6.0);
            let fd = central_diff(silu, x, 1e-6);
            assert_abs_diff_eq!(silu_dx(x), fd, epsilon = 1e-8);
        }
    }

    #[test]
    fn dog_wavelet_is_odd_with_known_extrema() {
        assert_eq!(dog(0.0), 0.0);
        assert_abs_diff_eq!(dog(1.0), -(-0.5f64).exp(), epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..500 {
            let x = rng.random_range(-5.0..5.0);
            assert_eq!(dog(-x), -dog(x), "oddness must hold bitwise");
            let fd = central_diff(dog, x, 1e-6);
            assert_abs_diff_eq!(dog_dx(x), fd, epsilon = 1e-8);
        }
        // Stationary points of psi at x = +/-1.
        assert_abs_diff_eq!(dog_dx(1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(dog_dx(-1.0), 0.0, epsilon = 1e-15);
    }
}
