use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use stylebench_neural::{mse, Activation, AdamConfig, Mlp, MlpOptimizer, NeuralError, WeightFile};

use super::transition::{TransitionVector, TRANSITION_LEN};
use crate::error::{Error, Result};

pub const LATENT_DIM: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AeConfig {
    /// Encoder widths between the input and the latent layer.
    pub hidden: Vec<usize>,
    pub latent: usize,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Seeded subsample of the training vectors; `None` trains on all.
    pub max_train_samples: Option<usize>,
}

impl Default for AeConfig {
    fn default() -> Self {
        AeConfig {
            hidden: vec![1024, 512, 256],
            latent: LATENT_DIM,
            lr: 1e-3,
            epochs: 10,
            batch_size: 1024,
            seed: 0,
            max_train_samples: None,
        }
    }
}

/// Mirror-symmetric dense autoencoder stored as one stack: the first
/// `hidden.len() + 1` layers are the encoder (linear latent layer), the
/// rest the decoder (identity output).
#[derive(Clone, Debug, PartialEq)]
pub struct AutoEncoder {
    pub net: Mlp,
    pub encoder_layers: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AeTrainReport {
    pub epoch_loss: Vec<f64>,
    pub samples_used: usize,
}

fn dense_batch(vectors: &[&TransitionVector]) -> Array2<f64> {
    let mut x = Array2::zeros((vectors.len(), TRANSITION_LEN));
    for (row, v) in x.axis_iter_mut(Axis(0)).zip(vectors) {
        v.write_dense(row.into_slice().unwrap());
    }
    x
}

impl AutoEncoder {
    pub fn new(cfg: &AeConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut dims = vec![TRANSITION_LEN];
        dims.extend(&cfg.hidden);
        dims.push(cfg.latent);
        dims.extend(cfg.hidden.iter().rev());
        dims.push(TRANSITION_LEN);
        let mut net = Mlp::new(&dims, Activation::Relu, Activation::Identity, &mut rng);
        let encoder_layers = cfg.hidden.len() + 1;
        net.layers[encoder_layers - 1].activation = Activation::Identity;
        AutoEncoder {
            net,
            encoder_layers,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.net.layers[self.encoder_layers - 1].output_dim()
    }

    pub fn encoder(&self) -> &[stylebench_neural::Dense] {
        &self.net.layers[..self.encoder_layers]
    }

    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != TRANSITION_LEN {
            return Err(NeuralError::ShapeMismatch {
                expected: format!("{TRANSITION_LEN} columns"),
                found: x.ncols().to_string(),
            }
            .into());
        }
        let mut h = self.encoder()[0].forward(x);
        for layer in &self.encoder()[1..] {
            h = layer.forward(h.view());
        }
        Ok(h)
    }

    /// Encoder forward pass on one dense 2304-value input.
    pub fn encode_latent(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != TRANSITION_LEN {
            return Err(NeuralError::ShapeMismatch {
                expected: TRANSITION_LEN.to_string(),
                found: input.len().to_string(),
            }
            .into());
        }
        let mut h = input.to_vec();
        for layer in self.encoder() {
            h = layer.forward_one(&h);
        }
        Ok(h)
    }

    /// Latents for many transitions, one row each. Chunks run in parallel;
    /// each row depends only on its own input.
    pub fn encode_transitions(&self, vectors: &[TransitionVector]) -> Result<Array2<f64>> {
        let chunks: Vec<Array2<f64>> = vectors
            .par_chunks(256)
            .map(|c| {
                let refs: Vec<&TransitionVector> = c.iter().collect();
                self.encode_batch(dense_batch(&refs).view())
            })
            .collect::<Result<_>>()?;
        let views: Vec<_> = chunks.iter().map(|c| c.view()).collect();
        if views.is_empty() {
            return Ok(Array2::zeros((0, self.latent_dim())));
        }
        Ok(ndarray::concatenate(Axis(0), &views).expect("equal widths"))
    }

    pub fn reconstruction_mse(&self, vectors: &[TransitionVector]) -> Result<f64> {
        if vectors.is_empty() {
            return Err(Error::Empty("no transitions".into()));
        }
        let mut total = 0.0;
        for c in vectors.chunks(512) {
            let refs: Vec<&TransitionVector> = c.iter().collect();
            let x = dense_batch(&refs);
            let y = self.net.forward(x.view())?;
            let (l, _) = mse(y.as_slice().unwrap(), x.as_slice().unwrap())?;
            total += l * c.len() as f64;
        }
        Ok(total / vectors.len() as f64)
    }

    pub fn to_weight_file(&self) -> WeightFile {
        let mut wf = WeightFile::new();
        wf.push_mlp("ae", &self.net);
        wf
    }

    pub fn from_weight_file(wf: &WeightFile) -> Result<Self> {
        let n = wf
            .names()
            .filter(|n| n.starts_with("ae/") && n.ends_with("/weight"))
            .count();
        if n < 2 || n % 2 != 0 {
            return Err(NeuralError::Format(format!("autoencoder needs an even layer count, found {n}")).into());
        }
        let encoder_layers = n / 2;
        let mut acts = vec![Activation::Relu; n];
        acts[encoder_layers - 1] = Activation::Identity;
        acts[n - 1] = Activation::Identity;
        let net = wf.read_mlp("ae", &acts)?;
        if net.input_dim() != TRANSITION_LEN || net.output_dim() != TRANSITION_LEN {
            return Err(NeuralError::Format("autoencoder must map 2304 -> 2304".into()).into());
        }
        Ok(AutoEncoder {
            net,
            encoder_layers,
        })
    }
}

/// Trains with MSE reconstruction loss and Adam. Returns the per-epoch mean
/// training loss.
pub fn train_autoencoder(
    vectors: &[TransitionVector],
    cfg: &AeConfig,
) -> Result<(AutoEncoder, AeTrainReport)> {
    if vectors.is_empty() {
        return Err(Error::Empty("autoencoder needs at least one transition".into()));
    }
    if cfg.batch_size == 0 || !(cfg.lr > 0.0) {
        return Err(Error::InvalidArgument("autoencoder batch >= 1 and lr > 0 required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xae_5eed);
    let mut pool: Vec<usize> = match cfg.max_train_samples {
        Some(k) if k < vectors.len() => sample(&mut rng, vectors.len(), k).into_vec(),
        _ => (0..vectors.len()).collect(),
    };
    pool.sort_unstable();

    let mut ae = AutoEncoder::new(cfg);
    let mut opt = MlpOptimizer::new(&ae.net, AdamConfig::with_lr(cfg.lr));
    let mut report = AeTrainReport {
        epoch_loss: Vec::new(),
        samples_used: pool.len(),
    };
    for epoch in 0..cfg.epochs {
        pool.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in pool.chunks(cfg.batch_size) {
            let refs: Vec<&TransitionVector> = chunk.iter().map(|&i| &vectors[i]).collect();
            let x = dense_batch(&refs);
            let cache = ae.net.forward_cached(x.clone())?;
            let out = cache.output();
            let (loss, g) = mse(out.as_slice().unwrap(), x.as_slice().unwrap())?;
            if !loss.is_finite() {
                return Err(NeuralError::NonFiniteLoss(loss).into());
            }
            total += loss * chunk.len() as f64;
            let g = Array2::from_shape_vec(out.raw_dim(), g).expect("output shape");
            let grads = ae.net.backward(&cache, g, true, None);
            opt.step(&mut ae.net, &grads)?;
        }
        let mean = total / pool.len() as f64;
        log::debug!("autoencoder epoch {}: mse {mean:.6}", epoch + 1);
        report.epoch_loss.push(mean);
    }
    Ok((ae, report))
}
