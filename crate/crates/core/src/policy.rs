//! Player-conditioned policy/value network.
//!
//! The backbone sees the 1152-value board encoding concatenated with a
//! player embedding and produces a context vector. Each move label owns a
//! row of the move table; its logit is the dot product of that row with the
//! context. A tanh value head reads the same context.
//!
//! Pretraining fits every shared tensor plus the generic embedding.
//! Fine-tuning starts from a copy of the generic embedding and updates only
//! those values; the model is borrowed immutably, so the shared tensors
//! cannot change.

use std::collections::BTreeMap;
use std::ops::Range;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stylebench_chess::{legal_moves, BoardState, EncodedPosition, Move, ENCODED_LEN, encode_position};
use stylebench_neural::{
    adam_step, softmax, softmax_cross_entropy, Activation, AdamConfig, AdamState, Dense, DenseGrad,
    Differentiable, Mlp, MlpGrads, MlpOptimizer, NamedTensor, NeuralError, WeightFile,
};

use crate::dataset::StateActionPair;
use crate::error::{Error, Result};
use crate::labels::{label_move, move_label, LABEL_SPACE};

pub const EMBED_DIM: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PolicyArch {
    pub embed_dim: usize,
    /// Backbone widths after the input; the last one is the context size.
    pub hidden: Vec<usize>,
}

impl Default for PolicyArch {
    fn default() -> Self {
        PolicyArch {
            embed_dim: EMBED_DIM,
            hidden: vec![512, 256],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub seed: u64,
    pub freeze_backbone: bool,
    /// Pretraining only: probability that a sample is fed the generic
    /// embedding rather than its population's auxiliary embedding.
    pub generic_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::pretrain()
    }
}

impl TrainConfig {
    /// Desk-scale pretraining defaults. Few epochs: longer runs memorize
    /// the training positions and leave the embedding nothing to explain.
    pub fn pretrain() -> Self {
        TrainConfig {
            epochs: 3,
            lr: 5e-4,
            batch_size: 256,
            seed: 0,
            freeze_backbone: false,
            generic_rate: 0.5,
        }
    }

    /// Desk-scale per-player fine-tuning defaults (only the embedding moves).
    pub fn finetune() -> Self {
        TrainConfig {
            epochs: 10,
            lr: 1e-2,
            freeze_backbone: true,
            ..Self::pretrain()
        }
    }

    /// The full-scale setting: 100 epochs, lr 5e-4, batch 2048.
    pub fn full_scale_finetune() -> Self {
        TrainConfig {
            epochs: 100,
            lr: 5e-4,
            batch_size: 2048,
            seed: 0,
            freeze_backbone: true,
            generic_rate: 0.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr <= 0.0 || !self.lr.is_finite() {
            return Err(Error::InvalidArgument(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.generic_rate) {
            return Err(Error::InvalidArgument(format!(
                "generic rate must lie in [0, 1], got {}",
                self.generic_rate
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    GenericCopy,
    FineTuned,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerEmbedding {
    pub player: String,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl PlayerEmbedding {
    pub fn tensor_name(player: &str) -> String {
        format!("embedding/{player}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Legal moves in `(from, to, promotion)` order.
    pub moves: Vec<Move>,
    pub probs: Vec<f64>,
    pub value: f64,
}

impl Prediction {
    /// Highest-probability move; ties go to the lowest label.
    pub fn argmax(&self) -> Move {
        let mut best = 0;
        for i in 1..self.probs.len() {
            if self.probs[i] > self.probs[best] {
                best = i;
            }
        }
        self.moves[best]
    }
}

/// Per-epoch mean losses of a training run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_policy_loss: Vec<f64>,
    pub epoch_value_loss: Vec<f64>,
}

impl TrainReport {
    pub fn epoch_total(&self) -> Vec<f64> {
        self.epoch_policy_loss
            .iter()
            .zip(self.epoch_value_loss.iter().chain(std::iter::repeat(&0.0)))
            .map(|(p, v)| p + v)
            .collect()
    }
}

/// Training sample with the encoding and legal labels precomputed.
#[derive(Clone, Debug)]
pub struct PreparedSample {
    pub position: EncodedPosition,
    pub legal: Vec<u16>,
    pub target: usize,
    pub outcome: f64,
}

impl PreparedSample {
    pub fn new(state: &BoardState, mv: Move, outcome: f64) -> Result<Self> {
        let moves = legal_moves(state);
        let target = moves
            .binary_search(&mv)
            .map_err(|_| Error::Chess(stylebench_chess::ChessError::IllegalMove(mv.to_string())))?;
        Ok(PreparedSample {
            position: encode_position(state),
            legal: moves.iter().map(|&m| move_label(m).0).collect(),
            target,
            outcome,
        })
    }

    pub fn from_pair(p: &StateActionPair) -> Result<Self> {
        Self::new(&p.state, p.mv, p.outcome as f64)
    }
}

pub fn prepare(pairs: &[StateActionPair]) -> Result<Vec<PreparedSample>> {
    use rayon::prelude::*;
    pairs.par_iter().map(PreparedSample::from_pair).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel {
    pub backbone: Mlp,
    /// `LABEL_SPACE x context` rows.
    pub move_table: Array2<f64>,
    pub value_head: Dense,
    pub generic: Vec<f64>,
}

struct BatchOutput {
    policy_loss: f64,
    value_loss: f64,
    backbone: Option<MlpGrads>,
    value: Option<DenseGrad>,
    move_rows: BTreeMap<u16, Array1<f64>>,
    embedding: Vec<f64>,
    /// Per-sample embedding gradients, `batch x embed_dim`.
    embedding_rows: Option<Array2<f64>>,
}

impl PolicyModel {
    pub fn new(arch: &PolicyArch, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dims = vec![ENCODED_LEN + arch.embed_dim];
        dims.extend(&arch.hidden);
        let backbone = Mlp::new(&dims, Activation::Relu, Activation::Relu, &mut rng);
        let ctx = *arch.hidden.last().expect("at least one hidden layer");
        let limit = 1.0 / (ctx as f64).sqrt();
        let move_table =
            Array2::from_shape_simple_fn((LABEL_SPACE, ctx), || rng.gen_range(-limit..limit));
        let value_head = Dense::new(ctx, 1, Activation::Tanh, &mut rng);
        PolicyModel {
            backbone,
            move_table,
            value_head,
            generic: vec![0.0; arch.embed_dim],
        }
    }

    pub fn zeros(arch: &PolicyArch) -> Self {
        let mut m = Self::new(arch, 0);
        for l in &mut m.backbone.layers {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
        }
        m.move_table.fill(0.0);
        m.value_head.weight.fill(0.0);
        m.value_head.bias.fill(0.0);
        m
    }

    pub fn embed_dim(&self) -> usize {
        self.generic.len()
    }

    pub fn context_dim(&self) -> usize {
        self.move_table.ncols()
    }

    pub fn arch(&self) -> PolicyArch {
        PolicyArch {
            embed_dim: self.embed_dim(),
            hidden: self.backbone.dims()[1..].to_vec(),
        }
    }

    pub fn generic_embedding(&self) -> PlayerEmbedding {
        PlayerEmbedding {
            player: "generic".into(),
            values: self.generic.clone(),
            provenance: Provenance::GenericCopy,
        }
    }

    fn check_embedding(&self, embedding: &[f64]) -> Result<()> {
        if embedding.len() != self.embed_dim() {
            return Err(NeuralError::ShapeMismatch {
                expected: format!("{} embedding values", self.embed_dim()),
                found: embedding.len().to_string(),
            }
            .into());
        }
        Ok(())
    }

    fn input_row(&self, position: &EncodedPosition, embedding: &[f64], out: &mut [f64]) {
        position.write_dense(&mut out[..ENCODED_LEN]);
        out[ENCODED_LEN..].copy_from_slice(embedding);
    }

    /// Move distribution over the legal moves of `state` and the value of the
    /// position for the side to move.
    pub fn predict(&self, embedding: &[f64], state: &BoardState) -> Result<Prediction> {
        self.check_embedding(embedding)?;
        let moves = legal_moves(state);
        if moves.is_empty() {
            return Err(Error::NoLegalMoves(state.to_fen()));
        }
        let mut x = vec![0.0; ENCODED_LEN + self.embed_dim()];
        self.input_row(&encode_position(state), embedding, &mut x);
        let ctx = self.backbone.forward_one(&x)?;
        let ctx = Array1::from_vec(ctx);
        let logits: Vec<f64> = moves
            .iter()
            .map(|&m| self.move_table.row(move_label(m).index()).dot(&ctx))
            .collect();
        let value = self.value_head.forward_one(ctx.as_slice().unwrap())[0];
        Ok(Prediction {
            moves,
            probs: softmax(&logits),
            value,
        })
    }

    /// Mean cross-entropy of the played moves under `embedding`.
    pub fn cross_entropy(&self, embedding: &[f64], samples: &[PreparedSample]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::Empty("no samples".into()));
        }
        let refs: Vec<&PreparedSample> = samples.iter().collect();
        let mut total = 0.0;
        for chunk in refs.chunks(512) {
            let out = self.forward_backward(embedding, chunk, false, false)?;
            total += out.policy_loss * chunk.len() as f64;
        }
        Ok(total / samples.len() as f64)
    }

    /// Forward pass over a batch and, when `grads` is set, backprop of the
    /// mean loss. `full` adds the value loss and parameter gradients;
    /// otherwise only the policy loss and the embedding gradient are formed.
    fn forward_backward(
        &self,
        embedding: &[f64],
        batch: &[&PreparedSample],
        full: bool,
        grads: bool,
    ) -> Result<BatchOutput> {
        self.forward_backward_mixed(&[embedding], batch, full, grads)
    }

    /// As `forward_backward`, with `embeddings` either one shared row or one
    /// row per sample.
    fn forward_backward_mixed(
        &self,
        embeddings: &[&[f64]],
        batch: &[&PreparedSample],
        full: bool,
        grads: bool,
    ) -> Result<BatchOutput> {
        let b = batch.len();
        debug_assert!(embeddings.len() == 1 || embeddings.len() == b);
        let in_dim = ENCODED_LEN + self.embed_dim();
        let mut x = Array2::zeros((b, in_dim));
        for (i, (row, s)) in x.axis_iter_mut(Axis(0)).zip(batch).enumerate() {
            let e = embeddings[if embeddings.len() == 1 { 0 } else { i }];
            self.input_row(&s.position, e, row.into_slice().unwrap());
        }
        let cache = self.backbone.forward_cached(x)?;
        let ctx = cache.output();
        let scale = 1.0 / b as f64;

        let mut d_ctx = Array2::<f64>::zeros(ctx.raw_dim());
        let mut move_rows: BTreeMap<u16, Array1<f64>> = BTreeMap::new();
        let mut policy_loss = 0.0;
        for (i, s) in batch.iter().enumerate() {
            let c = ctx.row(i);
            let logits: Vec<f64> = s
                .legal
                .iter()
                .map(|&l| self.move_table.row(l as usize).dot(&c))
                .collect();
            let (loss, g) = softmax_cross_entropy(&logits, s.target);
            policy_loss += loss;
            if !grads {
                continue;
            }
            let mut dc = d_ctx.row_mut(i);
            for (&l, &gl) in s.legal.iter().zip(&g) {
                let gl = gl * scale;
                dc.scaled_add(gl, &self.move_table.row(l as usize));
                if full {
                    move_rows
                        .entry(l)
                        .or_insert_with(|| Array1::zeros(c.len()))
                        .scaled_add(gl, &c);
                }
            }
        }

        let mut value_loss = 0.0;
        let mut value_grad = None;
        if full {
            let v = self.value_head.forward(ctx.view());
            let mut dv = Array2::zeros(v.raw_dim());
            for (i, s) in batch.iter().enumerate() {
                let diff = v[[i, 0]] - s.outcome;
                value_loss += diff * diff;
                dv[[i, 0]] = 2.0 * diff * scale;
            }
            if grads {
                let (g, d) = self.value_head.backward(
                    ctx.view(),
                    v.view(),
                    dv.view(),
                    true,
                    Some(0..ctx.ncols()),
                );
                d_ctx += &d.expect("input grad requested");
                value_grad = g;
            }
        }

        let mut backbone = None;
        let mut embedding_grad = vec![0.0; self.embed_dim()];
        let mut embedding_rows = None;
        if grads {
            let mut g = self.backbone.backward(&cache, d_ctx, full, Some(ENCODED_LEN..in_dim));
            let rows = g.input.take().expect("input grad requested");
            embedding_grad = rows.sum_axis(Axis(0)).to_vec();
            embedding_rows = Some(rows);
            if full {
                backbone = Some(g);
            }
        }

        Ok(BatchOutput {
            policy_loss: policy_loss * scale,
            value_loss: value_loss * scale,
            backbone,
            value: value_grad,
            move_rows,
            embedding: embedding_grad,
            embedding_rows,
        })
    }

    /// Checksum over the shared tensors (backbone, move table, value head).
    pub fn frozen_checksum(&self) -> String {
        let mut h = Sha256::new();
        for v in self.frozen_params() {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Shared parameters in a fixed order.
    pub fn frozen_params(&self) -> impl Iterator<Item = f64> + '_ {
        self.backbone
            .flat_params()
            .into_iter()
            .chain(self.move_table.iter().copied())
            .chain(self.value_head.weight.iter().copied())
            .chain(self.value_head.bias.iter().copied())
    }

    pub fn to_weight_file(&self) -> WeightFile {
        let mut wf = WeightFile::new();
        wf.push_mlp("backbone", &self.backbone);
        wf.push(NamedTensor::from_array2("move_table", &self.move_table));
        wf.push(NamedTensor::from_array2("value/weight", &self.value_head.weight));
        wf.push(NamedTensor::from_array1("value/bias", &self.value_head.bias));
        wf.push(NamedTensor::from_slice(
            "embedding/generic",
            &[self.generic.len()],
            &self.generic,
        ));
        wf
    }

    pub fn from_weight_file(wf: &WeightFile) -> Result<Self> {
        let layers = wf
            .names()
            .filter(|n| n.starts_with("backbone/") && n.ends_with("/weight"))
            .count();
        let backbone = wf.read_mlp("backbone", &vec![Activation::Relu; layers])?;
        let move_table = wf.get("move_table")?.to_array2()?;
        let value_head = Dense {
            weight: wf.get("value/weight")?.to_array2()?,
            bias: wf.get("value/bias")?.to_array1()?,
            activation: Activation::Tanh,
        };
        let generic = wf.get("embedding/generic")?.to_vec();
        if move_table.nrows() != LABEL_SPACE
            || move_table.ncols() != backbone.output_dim()
            || value_head.input_dim() != backbone.output_dim()
            || backbone.input_dim() != ENCODED_LEN + generic.len()
        {
            return Err(Error::Neural(NeuralError::Format(
                "policy tensors have inconsistent shapes".into(),
            )));
        }
        Ok(PolicyModel {
            backbone,
            move_table,
            value_head,
            generic,
        })
    }

    /// Model weights after an f32 round trip, as they would be after a
    /// save/load cycle.
    pub fn quantized(&self) -> Self {
        Self::from_weight_file(&self.to_weight_file()).expect("own weight file is consistent")
    }
}

pub fn embeddings_to_weight_file(embeddings: &[PlayerEmbedding]) -> WeightFile {
    let mut wf = WeightFile::new();
    for e in embeddings {
        wf.push(NamedTensor::from_slice(
            PlayerEmbedding::tensor_name(&e.player),
            &[e.values.len()],
            &e.values,
        ));
    }
    wf
}

pub fn embedding_from_weight_file(wf: &WeightFile, player: &str) -> Result<PlayerEmbedding> {
    Ok(PlayerEmbedding {
        player: player.to_string(),
        values: wf.get(&PlayerEmbedding::tensor_name(player))?.to_vec(),
        provenance: Provenance::FineTuned,
    })
}

fn epoch_batches(n: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch).map(|c| c.to_vec()).collect()
}

/// Joint training of backbone, move table, value head and the generic
/// embedding. Loss = masked cross-entropy + value MSE.
///
/// Each population also owns an auxiliary embedding, trained alongside and
/// then discarded. A sample is fed the generic embedding with probability
/// `generic_rate` and its population's embedding otherwise, so the generic
/// embedding fits the pooled data while the backbone learns to respond to
/// the embedding input.
pub fn pretrain_backbone(
    arch: &PolicyArch,
    populations: &[Vec<PreparedSample>],
    cfg: &TrainConfig,
) -> Result<(PolicyModel, TrainReport)> {
    let index: Vec<(usize, usize)> = populations
        .iter()
        .enumerate()
        .flat_map(|(p, s)| (0..s.len()).map(move |i| (p, i)))
        .collect();
    if index.is_empty() {
        return Err(Error::Empty("pretraining needs at least one pair".into()));
    }
    cfg.validate()?;
    let mut model = PolicyModel::new(arch, cfg.seed);
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut backbone_opt = MlpOptimizer::new(&model.backbone, adam);
    let mut value_opt = MlpOptimizer::new(
        &Mlp {
            layers: vec![model.value_head.clone()],
        },
        adam,
    );
    let mut table_state = AdamState::new(model.move_table.len());
    let mut table_grad = Array2::<f64>::zeros(model.move_table.raw_dim());
    let dim = model.embed_dim();
    let mut emb_state = AdamState::new(dim);
    let mut aux = vec![vec![0.0; dim]; populations.len()];
    let mut aux_state: Vec<AdamState> = (0..populations.len()).map(|_| AdamState::new(dim)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_ba7c);
    let mut report = TrainReport::default();

    for _ in 0..cfg.epochs {
        let (mut pl, mut vl) = (0.0, 0.0);
        for idx in epoch_batches(index.len(), cfg.batch_size, &mut rng) {
            let picks: Vec<(usize, usize)> = idx.iter().map(|&k| index[k]).collect();
            let batch: Vec<&PreparedSample> = picks.iter().map(|&(p, i)| &populations[p][i]).collect();
            // None = generic, Some(p) = auxiliary embedding of population p.
            let source: Vec<Option<usize>> = picks
                .iter()
                .map(|&(p, _)| (rng.gen::<f64>() >= cfg.generic_rate).then_some(p))
                .collect();
            let rows: Vec<&[f64]> = source
                .iter()
                .map(|s| match s {
                    None => model.generic.as_slice(),
                    Some(p) => aux[*p].as_slice(),
                })
                .collect();
            let out = model.forward_backward_mixed(&rows, &batch, true, true)?;
            pl += out.policy_loss * batch.len() as f64;
            vl += out.value_loss * batch.len() as f64;

            let mut generic_grad = vec![0.0; dim];
            let mut aux_grad = vec![vec![0.0; dim]; populations.len()];
            for (s, g) in source.iter().zip(out.embedding_rows.as_ref().unwrap().rows()) {
                let acc = match s {
                    None => &mut generic_grad,
                    Some(p) => &mut aux_grad[*p],
                };
                acc.iter_mut().zip(g).for_each(|(a, v)| *a += v);
            }

            backbone_opt.step(&mut model.backbone, out.backbone.as_ref().unwrap())?;
            let mut head = Mlp {
                layers: vec![model.value_head.clone()],
            };
            value_opt.step(
                &mut head,
                &MlpGrads {
                    layers: vec![out.value.unwrap()],
                    input: None,
                },
            )?;
            model.value_head = head.layers.pop().unwrap();
            for (&l, g) in &out.move_rows {
                table_grad.row_mut(l as usize).assign(g);
            }
            adam_step(
                model.move_table.as_slice_mut().unwrap(),
                table_grad.as_slice().unwrap(),
                &mut table_state,
                &adam,
            )?;
            for &l in out.move_rows.keys() {
                table_grad.row_mut(l as usize).fill(0.0);
            }
            adam_step(&mut model.generic, &generic_grad, &mut emb_state, &adam)?;
            for ((e, st), g) in aux.iter_mut().zip(&mut aux_state).zip(&aux_grad) {
                adam_step(e, g, st, &adam)?;
            }
        }
        let n = index.len() as f64;
        report.epoch_policy_loss.push(pl / n);
        report.epoch_value_loss.push(vl / n);
        log::debug!("pretrain epoch: policy {:.4} value {:.4}", pl / n, vl / n);
    }
    Ok((model, report))
}

/// Fits a player embedding with every shared tensor frozen. Starts from the
/// generic embedding and minimizes masked cross-entropy only.
pub fn finetune_embedding(
    model: &PolicyModel,
    player: &str,
    samples: &[PreparedSample],
    cfg: &TrainConfig,
) -> Result<(PlayerEmbedding, TrainReport)> {
    if samples.is_empty() {
        return Err(Error::Empty(format!("no training pairs for `{player}`")));
    }
    if !cfg.freeze_backbone {
        return Err(Error::InvalidArgument(
            "embedding fine-tuning requires freeze_backbone = true".into(),
        ));
    }
    cfg.validate()?;
    let adam = AdamConfig::with_lr(cfg.lr);
    let mut values = model.generic.clone();
    let mut state = AdamState::new(values.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf1e7_0e3d);
    let mut report = TrainReport::default();
    for _ in 0..cfg.epochs {
        let mut pl = 0.0;
        for idx in epoch_batches(samples.len(), cfg.batch_size, &mut rng) {
            let batch: Vec<&PreparedSample> = idx.iter().map(|&i| &samples[i]).collect();
            let out = model.forward_backward(&values, &batch, false, true)?;
            pl += out.policy_loss * batch.len() as f64;
            adam_step(&mut values, &out.embedding, &mut state, &adam)?;
        }
        report.epoch_policy_loss.push(pl / samples.len() as f64);
    }
    let provenance = if cfg.epochs == 0 {
        Provenance::GenericCopy
    } else {
        Provenance::FineTuned
    };
    Ok((
        PlayerEmbedding {
            player: player.to_string(),
            values,
            provenance,
        },
        report,
    ))
}

/// Gradient-check view of the full pretraining loss on a fixed batch.
///
/// The parameter vector covers the backbone, the value head, the move-table
/// rows of labels legal in the batch (all other rows have zero gradient)
/// and the embedding.
pub struct PolicyGradProbe<'a> {
    pub model: &'a mut PolicyModel,
    pub embedding: Vec<f64>,
    pub samples: Vec<PreparedSample>,
    rows: Vec<u16>,
}

impl<'a> PolicyGradProbe<'a> {
    pub fn new(model: &'a mut PolicyModel, embedding: Vec<f64>, samples: Vec<PreparedSample>) -> Self {
        let mut rows: Vec<u16> = samples.iter().flat_map(|s| s.legal.iter().copied()).collect();
        rows.sort_unstable();
        rows.dedup();
        PolicyGradProbe {
            model,
            embedding,
            samples,
            rows,
        }
    }

    fn sizes(&self) -> (usize, usize, usize, usize) {
        let backbone = self.model.backbone.param_count();
        let value = self.model.value_head.param_count();
        let table = self.rows.len() * self.model.context_dim();
        (backbone, value, table, self.embedding.len())
    }

    fn slot(&mut self, i: usize) -> &mut f64 {
        let (bb, val, table, _) = self.sizes();
        let ctx = self.model.context_dim();
        if i < bb {
            unreachable!("backbone handled through Mlp accessors")
        } else if i < bb + val {
            let k = i - bb;
            let w = self.model.value_head.weight.len();
            if k < w {
                &mut self.model.value_head.weight.as_slice_mut().unwrap()[k]
            } else {
                &mut self.model.value_head.bias[k - w]
            }
        } else if i < bb + val + table {
            let k = i - bb - val;
            let row = self.rows[k / ctx] as usize;
            &mut self.model.move_table[[row, k % ctx]]
        } else {
            &mut self.embedding[i - bb - val - table]
        }
    }
}

impl Differentiable for PolicyGradProbe<'_> {
    fn num_params(&self) -> usize {
        let (a, b, c, d) = self.sizes();
        a + b + c + d
    }

    fn param(&self, i: usize) -> f64 {
        let (bb, val, table, _) = self.sizes();
        let ctx = self.model.context_dim();
        if i < bb {
            self.model.backbone.param(i)
        } else if i < bb + val {
            let k = i - bb;
            let w = self.model.value_head.weight.len();
            if k < w {
                self.model.value_head.weight.as_slice().unwrap()[k]
            } else {
                self.model.value_head.bias[k - w]
            }
        } else if i < bb + val + table {
            let k = i - bb - val;
            self.model.move_table[[self.rows[k / ctx] as usize, k % ctx]]
        } else {
            self.embedding[i - bb - val - table]
        }
    }

    fn set_param(&mut self, i: usize, v: f64) {
        if i < self.model.backbone.param_count() {
            self.model.backbone.set_param(i, v);
        } else {
            *self.slot(i) = v;
        }
    }

    fn loss(&self) -> Result<f64, NeuralError> {
        let refs: Vec<&PreparedSample> = self.samples.iter().collect();
        let out = self
            .model
            .forward_backward(&self.embedding, &refs, true, false)
            .map_err(|e| NeuralError::Format(e.to_string()))?;
        Ok(out.policy_loss + out.value_loss)
    }

    fn gradient(&self) -> Result<Vec<f64>, NeuralError> {
        let refs: Vec<&PreparedSample> = self.samples.iter().collect();
        let out = self
            .model
            .forward_backward(&self.embedding, &refs, true, true)
            .map_err(|e| NeuralError::Format(e.to_string()))?;
        let mut g = out.backbone.unwrap().flatten();
        let v = out.value.unwrap();
        g.extend(v.weight.iter());
        g.extend(v.bias.iter());
        let ctx = self.model.context_dim();
        for r in &self.rows {
            match out.move_rows.get(r) {
                Some(row) => g.extend(row.iter()),
                None => g.extend(std::iter::repeat(0.0).take(ctx)),
            }
        }
        g.extend(out.embedding);
        Ok(g)
    }

    fn param_groups(&self) -> Vec<Range<usize>> {
        let (bb, val, table, emb) = self.sizes();
        let mut groups = self.model.backbone.param_ranges();
        let w = self.model.value_head.weight.len();
        groups.push(bb..bb + w);
        groups.push(bb + w..bb + val);
        groups.push(bb + val..bb + val + table);
        groups.push(bb + val + table..bb + val + table + emb);
        groups
    }
}

/// Move chosen by the highest policy probability.
pub fn argmax_move(model: &PolicyModel, embedding: &[f64], state: &BoardState) -> Result<Move> {
    Ok(model.predict(embedding, state)?.argmax())
}

/// Decodes a label back into a move; exposed for report tooling.
pub fn label_to_move(label: u16) -> Result<Move> {
    label_move(label as u32)
}
