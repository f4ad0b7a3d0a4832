//! Autoencoder assembly: architecture description, model construction,
//! full-network loss with penalties, and hand-chained backpropagation.
//!
//! The five variants share one symmetric-autoencoder skeleton: a list of
//! layer widths whose first and last entries equal the number of process
//! variables, with the narrowest interior width acting as the latent
//! bottleneck. The dense baseline penalizes latent correlation; the B-spline
//! variant penalizes spline-coefficient magnitude and spread. Reconstruction
//! error is the batch-mean squared L2 norm.

use crate::error::{Error, Result};
use crate::layers::{
    l1_entropy_with_grad, orthogonality_with_grad, Activation, DenseLayer, EfficientKanLayer,
    FastKanLayer, FourierKanLayer, Layer, LayerCache, LayerGrads, Phase, WavKanLayer,
};
use crate::mat::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The five autoencoder variants under comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Dense orthogonal autoencoder (ReLU hidden layers, latent decorrelation).
    Oae,
    /// B-spline KAN autoencoder.
    EfficientKan,
    /// Gaussian-RBF KAN autoencoder.
    FastKan,
    /// Fourier KAN autoencoder.
    FourierKan,
    /// Wavelet KAN autoencoder.
    WavKan,
}

impl Variant {
    /// All variants, in the canonical reporting order.
    pub const ALL: [Variant; 5] = [
        Variant::Oae,
        Variant::EfficientKan,
        Variant::FastKan,
        Variant::FourierKan,
        Variant::WavKan,
    ];

    /// Stable lowercase name used in filenames, reports, and flags.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            Variant::Oae => "oae",
            Variant::EfficientKan => "efficientkan",
            Variant::FastKan => "fastkan",
            Variant::FourierKan => "fourierkan",
            Variant::WavKan => "wavkan",
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oae" => Ok(Variant::Oae),
            "efficientkan" | "efficient_kan" | "efficient-kan" => Ok(Variant::EfficientKan),
            "fastkan" | "fast_kan" | "fast-kan" => Ok(Variant::FastKan),
            "fourierkan" | "fourier_kan" | "fourier-kan" => Ok(Variant::FourierKan),
            "wavkan" | "wav_kan" | "wav-kan" => Ok(Variant::WavKan),
            other => Err(Error::config(format!(
                "unknown variant '{other}' (expected one of: oae, efficientkan, fastkan, fourierkan, wavkan)"
            ))),
        }
    }
}

/// Widths and basis settings for one autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct AeArchitecture {
    variant: Variant,
    layer_sizes: Vec<usize>,
    spline_grid: usize,
    spline_order: usize,
    spline_range: (f64, f64),
    rbf_centers: usize,
    rbf_range: (f64, f64),
    fourier_modes: usize,
}

impl AeArchitecture {
    /// Builds an architecture from explicit layer widths.
    ///
    /// Requires at least three widths with `first == last` (the process
    /// variable count) and every width positive. Basis settings start from
    /// the benchmark defaults and can be overridden with the `with_*`
    /// builders.
    pub fn new(variant: Variant, layer_sizes: Vec<usize>) -> Result<Self> {
        if layer_sizes.len() < 3 {
            return Err(Error::config(
                "architecture needs at least [input, hidden, output] widths",
            ));
        }
        if layer_sizes.first() != layer_sizes.last() {
            return Err(Error::config(
                "autoencoder input and output widths must match",
            ));
        }
        if layer_sizes.iter().any(|&s| s == 0) {
            return Err(Error::config("layer widths must be positive"));
        }
        Ok(AeArchitecture {
            variant,
            layer_sizes,
            spline_grid: 3,
            spline_order: 3,
            spline_range: (-1.0, 1.0),
            rbf_centers: 5,
            rbf_range: (-2.0, 2.0),
            fourier_modes: 3,
        })
    }

    /// The benchmark configuration for 33 process variables: the dense
    /// baseline uses widths `[33, 85, 25, 85, 33]`, every KAN variant uses
    /// `[33, 25, 33]`.
    #[must_use]
    pub fn tep_default(variant: Variant) -> Self {
        let sizes = match variant {
            Variant::Oae => vec![33, 85, 25, 85, 33],
            _ => vec![33, 25, 33],
        };
        AeArchitecture::new(variant, sizes).expect("benchmark defaults are valid")
    }

    /// A size-proportional architecture for `n_vars` process variables:
    /// the 33-variable benchmark widths when they apply, otherwise hidden
    /// width `2·V` (dense baseline) and latent width `max(2, V/2)`.
    pub fn scaled_default(variant: Variant, n_vars: usize) -> Result<Self> {
        if n_vars == 33 {
            return Ok(AeArchitecture::tep_default(variant));
        }
        if n_vars < 2 {
            return Err(Error::config("autoencoder needs at least 2 variables"));
        }
        let latent = (n_vars / 2).max(2);
        let sizes = match variant {
            Variant::Oae => vec![n_vars, 2 * n_vars, latent, 2 * n_vars, n_vars],
            _ => vec![n_vars, latent, n_vars],
        };
        AeArchitecture::new(variant, sizes)
    }

    /// Overrides the B-spline grid (interval count, order, input range).
    pub fn with_spline(mut self, grid: usize, order: usize, range: (f64, f64)) -> Self {
        self.spline_grid = grid;
        self.spline_order = order;
        self.spline_range = range;
        self
    }

    /// Overrides the RBF grid (center count, center range).
    pub fn with_rbf(mut self, centers: usize, range: (f64, f64)) -> Self {
        self.rbf_centers = centers;
        self.rbf_range = range;
        self
    }

    /// Overrides the Fourier mode count.
    pub fn with_fourier_modes(mut self, modes: usize) -> Self {
        self.fourier_modes = modes;
        self
    }

    #[must_use]
    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Layer widths including input and output.
    #[must_use]
    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    /// Process-variable count (input and output width).
    #[must_use]
    pub fn n_vars(&self) -> usize {
        self.layer_sizes[0]
    }

    /// Number of layers (consecutive width pairs).
    #[must_use]
    pub fn n_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    /// Index of the layer whose output is the latent code: the first
    /// narrowest interior width. Encoder = layers `0..=latent_layer()`.
    #[must_use]
    pub fn latent_layer(&self) -> usize {
        let interior = &self.layer_sizes[1..self.layer_sizes.len() - 1];
        let mut best = 0;
        for (i, &w) in interior.iter().enumerate() {
            if w < interior[best] {
                best = i;
            }
        }
        best // output of layer `best` is layer_sizes[best + 1]
    }

    pub(crate) fn spline_settings(&self) -> (usize, usize, (f64, f64)) {
        (self.spline_grid, self.spline_order, self.spline_range)
    }

    pub(crate) fn rbf_settings(&self) -> (usize, (f64, f64)) {
        (self.rbf_centers, self.rbf_range)
    }

    pub(crate) fn fourier_settings(&self) -> usize {
        self.fourier_modes
    }
}

/// Penalty weights added to the reconstruction loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyWeights {
    /// Weight on `||Z^T Z - I||_F^2` over the latent batch.
    pub orthogonality: f64,
    /// Weight on the spline-coefficient L1 penalty.
    pub l1: f64,
    /// Weight on the spline-coefficient entropy penalty.
    pub entropy: f64,
}

impl PenaltyWeights {
    /// No penalties: plain reconstruction loss.
    #[must_use]
    pub fn none() -> Self {
        PenaltyWeights { orthogonality: 0.0, l1: 0.0, entropy: 0.0 }
    }
}

/// Loss terms from one batch. Penalty fields hold the *raw* values; `total`
/// applies the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub mse: f64,
    pub orthogonality: f64,
    pub l1: f64,
    pub entropy: f64,
}

/// A built autoencoder: architecture plus live layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    arch: AeArchitecture,
    layers: Vec<Layer>,
    seed: u64,
}

/// Builds a model with deterministic seed-derived initialization.
pub fn build_model(arch: &AeArchitecture, seed: u64) -> Result<Model> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sizes = arch.layer_sizes();
    let n_layers = arch.n_layers();
    let mut layers = Vec::with_capacity(n_layers);
    for l in 0..n_layers {
        let (n_in, n_out) = (sizes[l], sizes[l + 1]);
        let layer = match arch.variant() {
            Variant::Oae => {
                // Linear bottleneck and output: the latent decorrelation
                // penalty needs signed latent coordinates (a rectified code
                // could only decorrelate by disjoint activation supports).
                let act = if l + 1 == n_layers || l == arch.latent_layer() {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::Dense(DenseLayer::init(n_in, n_out, act, &mut rng))
            }
            Variant::EfficientKan => {
                let (grid, order, range) = arch.spline_settings();
                Layer::EfficientKan(EfficientKanLayer::init(n_in, n_out, grid, order, range, &mut rng)?)
            }
            Variant::FastKan => {
                let (centers, range) = arch.rbf_settings();
                Layer::FastKan(FastKanLayer::init(n_in, n_out, centers, range, &mut rng)?)
            }
            Variant::FourierKan => {
                Layer::FourierKan(FourierKanLayer::init(n_in, n_out, arch.fourier_settings(), &mut rng))
            }
            Variant::WavKan => Layer::WavKan(WavKanLayer::init(n_in, n_out, &mut rng)),
        };
        layers.push(layer);
    }
    Ok(Model { arch: arch.clone(), layers, seed })
}

impl Model {
    /// Architecture this model was built from.
    #[must_use]
    pub fn arch(&self) -> &AeArchitecture {
        &self.arch
    }

    /// Seed used for initialization.
    #[must_use]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Layers in forward order.
    #[must_use]
    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access to the layers, e.g. for custom optimizers or
    /// finite-difference diagnostics.
    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    /// Total trainable parameter count.
    #[must_use]
    pub fn count_parameters(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Full forward pass returning the reconstruction.
    pub fn reconstruct(&self, x: &Mat, phase: Phase) -> Result<Mat> {
        let (recon, _, _) = self.forward_full(x, phase)?;
        Ok(recon)
    }

    /// Encoder-only forward pass returning the latent batch.
    pub fn latent(&self, x: &Mat, phase: Phase) -> Result<Mat> {
        let (_, latent, _) = self.forward_full(x, phase)?;
        Ok(latent)
    }

    /// Forward pass returning reconstruction, latent batch, and layer caches.
    pub(crate) fn forward_full(
        &self,
        x: &Mat,
        phase: Phase,
    ) -> Result<(Mat, Mat, Vec<LayerCache>)> {
        let latent_layer = self.arch.latent_layer();
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        let mut latent = None;
        for (l, layer) in self.layers.iter().enumerate() {
            let (next, cache) = layer.forward(&current, phase)?;
            caches.push(cache);
            current = next;
            if l == latent_layer {
                latent = Some(current.clone());
            }
        }
        let latent = latent.expect("latent layer index within layer count");
        Ok((current, latent, caches))
    }

    /// Batch-mean squared reconstruction error `mean_b ||x_b - xhat_b||^2`.
    #[must_use]
    pub fn mse(x: &Mat, recon: &Mat) -> f64 {
        let n = x.rows() as f64;
        x.data()
            .iter()
            .zip(recon.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / n
    }

    /// Loss terms for a batch without gradients.
    pub fn loss(&self, x: &Mat, penalties: &PenaltyWeights, phase: Phase) -> Result<LossBreakdown> {
        let (recon, latent, _) = self.forward_full(x, phase)?;
        Ok(self.assemble_loss(x, &recon, &latent, penalties).0)
    }

    /// Loss terms plus per-layer gradients (training phase).
    ///
    /// Also returns the forward caches so a trainer can commit batch
    /// statistics after the step.
    pub fn loss_and_grads(
        &self,
        x: &Mat,
        penalties: &PenaltyWeights,
    ) -> Result<(LossBreakdown, Vec<LayerGrads>, Vec<LayerCache>)> {
        let (recon, latent, caches) = self.forward_full(x, Phase::Train)?;
        let (breakdown, orth_grad) = self.assemble_loss(x, &recon, &latent, penalties);

        // d(mse)/d(recon) = 2/N (recon - x)
        let n = x.rows() as f64;
        let mut upstream = Mat::zeros(recon.rows(), recon.cols());
        for (u, (r, t)) in upstream
            .data_mut()
            .iter_mut()
            .zip(recon.data().iter().zip(x.data()))
        {
            *u = 2.0 / n * (r - t);
        }

        let latent_layer = self.arch.latent_layer();
        let mut grads: Vec<Option<LayerGrads>> = (0..self.layers.len()).map(|_| None).collect();
        for l in (0..self.layers.len()).rev() {
            let g = self.layers[l].backward(&caches[l], &upstream)?;
            upstream = g.input.clone();
            grads[l] = Some(g);
            // The orthogonality penalty injects gradient at the latent batch,
            // i.e. at the *input* of the first decoder layer.
            if l == latent_layer + 1 {
                if let Some(og) = &orth_grad {
                    for (u, o) in upstream.data_mut().iter_mut().zip(og.data()) {
                        *u += penalties.orthogonality * o;
                    }
                }
            }
        }
        let mut grads: Vec<LayerGrads> = grads.into_iter().map(Option::unwrap).collect();

        // Spline sparsity penalties act directly on coefficient tensors.
        if penalties.l1 != 0.0 || penalties.entropy != 0.0 {
            for (l, layer) in self.layers.iter().enumerate() {
                if let Layer::EfficientKan(ek) = layer {
                    let (_, _, g_l1, g_ent) = l1_entropy_with_grad(ek);
                    let coef_slot = layer
                        .param_arrays()
                        .iter()
                        .position(|(name, _)| *name == "spline_coef")
                        .expect("spline layer exposes spline_coef");
                    for (t, (a, b)) in grads[l].params[coef_slot]
                        .iter_mut()
                        .zip(g_l1.iter().zip(&g_ent))
                    {
                        *t += penalties.l1 * a + penalties.entropy * b;
                    }
                }
            }
        }
        Ok((breakdown, grads, caches))
    }

    /// Folds batch statistics from a training forward into running stats.
    pub fn commit_batch_stats(&mut self, caches: &[LayerCache]) {
        for (layer, cache) in self.layers.iter_mut().zip(caches) {
            layer.commit_batch_stats(cache);
        }
    }

    fn assemble_loss(
        &self,
        x: &Mat,
        recon: &Mat,
        latent: &Mat,
        penalties: &PenaltyWeights,
    ) -> (LossBreakdown, Option<Mat>) {
        let mse = Model::mse(x, recon);
        let mut total = mse;
        let mut orth = 0.0;
        let mut orth_grad = None;
        if penalties.orthogonality != 0.0 {
            let (value, grad) = orthogonality_with_grad(latent);
            orth = value;
            total += penalties.orthogonality * value;
            orth_grad = Some(grad);
        }
        let mut l1 = 0.0;
        let mut entropy = 0.0;
        if penalties.l1 != 0.0 || penalties.entropy != 0.0 {
            for layer in &self.layers {
                if let Layer::EfficientKan(ek) = layer {
                    let (v1, ve) = crate::layers::l1_entropy(ek);
                    l1 += v1;
                    entropy += ve;
                }
            }
            total += penalties.l1 * l1 + penalties.entropy * entropy;
        }
        (LossBreakdown { total, mse, orthogonality: orth, l1, entropy }, orth_grad)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    fn random_batch(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = Mat::zeros(rows, cols);
        for v in x.data_mut() {
            *v = rng.random_range(-1.2..1.2);
        }
        x
    }

    #[test]
    fn scaled_default_tracks_variable_count() {
        let oae = AeArchitecture::scaled_default(Variant::Oae, 8).unwrap();
        assert_eq!(oae.layer_sizes(), &[8, 16, 4, 16, 8]);
        let kan = AeArchitecture::scaled_default(Variant::FastKan, 8).unwrap();
        assert_eq!(kan.layer_sizes(), &[8, 4, 8]);
        // At 33 variables the benchmark widths apply unchanged.
        let bench = AeArchitecture::scaled_default(Variant::Oae, 33).unwrap();
        assert_eq!(bench.layer_sizes(), &[33, 85, 25, 85, 33]);
        let tiny = AeArchitecture::scaled_default(Variant::WavKan, 3).unwrap();
        assert_eq!(tiny.layer_sizes(), &[3, 2, 3]);
        assert!(AeArchitecture::scaled_default(Variant::Oae, 1).is_err());
    }

    #[test]
    fn benchmark_parameter_counts_are_exact() {
        let expected = [
            (Variant::Oae, 10_088),
            (Variant::EfficientKan, 11_550),
            (Variant::FastKan, 10_074),
            (Variant::FourierKan, 9_958),
            (Variant::WavKan, 6_716),
        ];
        for (variant, count) in expected {
            let model = build_model(&AeArchitecture::tep_default(variant), 0).unwrap();
            assert_eq!(model.count_parameters(), count, "{variant}");
        }
    }

    #[test]
    fn architecture_validation() {
        assert!(AeArchitecture::new(Variant::Oae, vec![4, 4]).is_err());
        assert!(AeArchitecture::new(Variant::Oae, vec![4, 2, 5]).is_err());
        assert!(AeArchitecture::new(Variant::Oae, vec![4, 0, 4]).is_err());
        assert!(AeArchitecture::new(Variant::Oae, vec![4, 2, 4]).is_ok());
    }

    #[test]
    fn latent_layer_is_first_narrowest_interior() {
        let kan = AeArchitecture::new(Variant::WavKan, vec![8, 4, 8]).unwrap();
        assert_eq!(kan.latent_layer(), 0);
        let deep = AeArchitecture::new(Variant::Oae, vec![33, 85, 25, 85, 33]).unwrap();
        assert_eq!(deep.latent_layer(), 1);
    }

    #[test]
    fn variant_parsing_round_trips() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("mlp".parse::<Variant>().is_err());
    }

    #[test]
    fn build_is_deterministic_in_seed() {
        for variant in Variant::ALL {
            let arch = AeArchitecture::new(variant, vec![6, 4, 6]).unwrap();
            let a = build_model(&arch, 42).unwrap();
            let b = build_model(&arch, 42).unwrap();
            let c = build_model(&arch, 43).unwrap();
            assert_eq!(a, b, "{variant}");
            assert_ne!(a, c, "{variant}");
        }
    }

    #[test]
    fn zeroed_model_reconstructs_zero_and_unit_mse() {
        // x = (1, 0) against a zero reconstruction: mse = ||x||^2 = 1.
        let arch = AeArchitecture::new(Variant::Oae, vec![2, 2, 2]).unwrap();
        let mut model = build_model(&arch, 0).unwrap();
        for layer in model.layers_mut() {
            for (_, arr) in layer.param_arrays_mut() {
                arr.fill(0.0);
            }
        }
        let x = Mat::from_vec(1, 2, vec![1.0, 0.0]).unwrap();
        let recon = model.reconstruct(&x, Phase::Eval).unwrap();
        assert_eq!(recon.data(), &[0.0, 0.0]);
        let loss = model.loss(&x, &PenaltyWeights::none(), Phase::Eval).unwrap();
        assert_abs_diff_eq!(loss.mse, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(loss.total, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn total_loss_composes_weighted_penalties() {
        let arch = AeArchitecture::new(Variant::EfficientKan, vec![5, 3, 5]).unwrap();
        let model = build_model(&arch, 7).unwrap();
        let x = random_batch(4, 5, 70);
        let penalties = PenaltyWeights { orthogonality: 0.5, l1: 0.1, entropy: 0.2 };
        let loss = model.loss(&x, &penalties, Phase::Eval).unwrap();
        let expected =
            loss.mse + 0.5 * loss.orthogonality + 0.1 * loss.l1 + 0.2 * loss.entropy;
        assert_abs_diff_eq!(loss.total, expected, epsilon = 1e-12);
        assert!(loss.orthogonality > 0.0 && loss.l1 > 0.0 && loss.entropy > 0.0);
    }

    #[test]
    fn eval_reconstruction_is_batch_independent() {
        for variant in Variant::ALL {
            let arch = AeArchitecture::new(variant, vec![6, 4, 6]).unwrap();
            let model = build_model(&arch, 11).unwrap();
            let x = random_batch(5, 6, 110);
            let full = model.reconstruct(&x, Phase::Eval).unwrap();
            for b in 0..x.rows() {
                let one = model.reconstruct(&x.gather_rows(&[b]), Phase::Eval).unwrap();
                assert_eq!(one.row(0), full.row(b), "{variant} row {b}");
            }
        }
    }

    /// Full-network gradient check: every parameter of every variant against
    /// central finite differences of the total loss (penalties included).
    #[test]
    fn full_model_gradients_match_finite_differences() {
        for variant in Variant::ALL {
            let arch = AeArchitecture::new(variant, vec![6, 4, 6]).unwrap();
            let mut model = build_model(&arch, 13).unwrap();
            let x = random_batch(5, 6, 130);
            let penalties = match variant {
                Variant::Oae => PenaltyWeights { orthogonality: 0.7, l1: 0.0, entropy: 0.0 },
                Variant::EfficientKan => {
                    PenaltyWeights { orthogonality: 0.0, l1: 0.05, entropy: 0.1 }
                }
                _ => PenaltyWeights::none(),
            };
            // Keep spline coefficients away from zero: |.| kinks break FD.
            if variant == Variant::EfficientKan {
                let mut rng = ChaCha8Rng::seed_from_u64(131);
                for layer in model.layers_mut() {
                    for (name, arr) in layer.param_arrays_mut() {
                        if name == "spline_coef" {
                            for v in arr.iter_mut() {
                                let mag = rng.random_range(0.05..0.4);
                                *v = if rng.random::<bool>() { mag } else { -mag };
                            }
                        }
                    }
                }
            }
            let (_, grads, _) = model.loss_and_grads(&x, &penalties).unwrap();
            for l in 0..model.layers().len() {
                let n_arrays = model.layers()[l].param_arrays().len();
                for a in 0..n_arrays {
                    let len = model.layers()[l].param_arrays()[a].1.len();
                    for k in 0..len {
                        let orig = model.layers()[l].param_arrays()[a].1[k];
                        let eps = 1e-6 * orig.abs().max(1.0);
                        model.layers_mut()[l].param_arrays_mut()[a].1[k] = orig + eps;
                        let up = model.loss(&x, &penalties, Phase::Train).unwrap().total;
                        model.layers_mut()[l].param_arrays_mut()[a].1[k] = orig - eps;
                        let down = model.loss(&x, &penalties, Phase::Train).unwrap().total;
                        model.layers_mut()[l].param_arrays_mut()[a].1[k] = orig;
                        let fd = (up - down) / (2.0 * eps);
                        let got = grads[l].params[a][k];
                        let denom = got.abs().max(fd.abs()).max(1e-3);
                        assert!(
                            (got - fd).abs() / denom < 1e-5,
                            "{variant} layer {l} array {a} [{k}]: {got:.10e} vs {fd:.10e}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn orthogonality_gradient_reaches_encoder_parameters() {
        // With identical reconstructions, the only gradient difference between
        // penalized and unpenalized losses must flow from the latent batch.
        let arch = AeArchitecture::new(Variant::Oae, vec![4, 6, 2, 6, 4]).unwrap();
        let model = build_model(&arch, 17).unwrap();
        let x = random_batch(3, 4, 170);
        let (_, plain, _) = model.loss_and_grads(&x, &PenaltyWeights::none()).unwrap();
        let penalties = PenaltyWeights { orthogonality: 1.0, l1: 0.0, entropy: 0.0 };
        let (_, penalized, _) = model.loss_and_grads(&x, &penalties).unwrap();
        // Encoder layers (0 and 1) must see different gradients...
        let differs = |a: &LayerGrads, b: &LayerGrads| {
            a.params
                .iter()
                .zip(&b.params)
                .any(|(x, y)| x.iter().zip(y).any(|(u, v)| (u - v).abs() > 1e-12))
        };
        assert!(differs(&plain[0], &penalized[0]));
        assert!(differs(&plain[1], &penalized[1]));
        // ...while decoder layers see identical ones (penalty is upstream).
        assert!(!differs(&plain[2], &penalized[2]));
        assert!(!differs(&plain[3], &penalized[3]));
    }
}
