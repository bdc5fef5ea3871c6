//! Central finite-difference validation of backprop gradients.

use std::ops::Range;

use ndarray::Array2;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::NeuralError;
use crate::loss::mse;
use crate::mlp::Mlp;

pub const FD_STEP: f64 = 1e-5;
const REL_FLOOR: f64 = 1e-8;

/// A scalar loss over a flat parameter vector, with its analytic gradient.
pub trait Differentiable {
    fn num_params(&self) -> usize;
    fn param(&self, i: usize) -> f64;
    fn set_param(&mut self, i: usize, v: f64);
    fn loss(&self) -> Result<f64, NeuralError>;
    /// Full analytic gradient, `num_params()` entries.
    fn gradient(&self) -> Result<Vec<f64>, NeuralError>;

    /// Parameter groups sampled evenly so that small tensors (biases, heads)
    /// are always checked.
    fn param_groups(&self) -> Vec<Range<usize>> {
        vec![0..self.num_params()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_param: usize,
    pub checked: usize,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares backprop against central differences on at least `samples`
/// parameters drawn (seeded) evenly across [`Differentiable::param_groups`].
pub fn gradient_check<D: Differentiable>(
    model: &mut D,
    samples: usize,
    seed: u64,
) -> Result<GradCheckReport, NeuralError> {
    let base = model.loss()?;
    if !base.is_finite() {
        return Err(NeuralError::NonFiniteLoss(base));
    }
    let analytic = model.gradient()?;
    if analytic.len() != model.num_params() {
        return Err(NeuralError::shape(model.num_params(), analytic.len()));
    }

    let groups: Vec<Range<usize>> = model
        .param_groups()
        .into_iter()
        .filter(|r| !r.is_empty())
        .collect();
    let per_group = samples.div_ceil(groups.len().max(1)).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices = Vec::new();
    for g in &groups {
        let n = per_group.min(g.len());
        indices.extend(sample(&mut rng, g.len(), n).into_iter().map(|k| g.start + k));
    }
    // top up when small groups could not supply their share
    while indices.len() < samples.min(model.num_params()) {
        indices.push(rng.gen_range(0..model.num_params()));
    }

    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_param: 0,
        checked: 0,
    };
    for i in indices {
        let orig = model.param(i);
        model.set_param(i, orig + FD_STEP);
        let plus = model.loss()?;
        model.set_param(i, orig - FD_STEP);
        let minus = model.loss()?;
        model.set_param(i, orig);
        if !plus.is_finite() || !minus.is_finite() {
            return Err(NeuralError::NonFiniteLoss(if plus.is_finite() { minus } else { plus }));
        }
        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let err = relative_error(analytic[i], numeric);
        if err > report.max_relative_error {
            report.max_relative_error = err;
            report.worst_param = i;
        }
        report.checked += 1;
    }
    Ok(report)
}

/// An [`Mlp`] with a mean-squared-error loss on a fixed batch.
pub struct MlpMseProbe<'a> {
    pub net: &'a mut Mlp,
    pub input: Array2<f64>,
    pub target: Array2<f64>,
}

impl Differentiable for MlpMseProbe<'_> {
    fn num_params(&self) -> usize {
        self.net.param_count()
    }

    fn param(&self, i: usize) -> f64 {
        self.net.param(i)
    }

    fn set_param(&mut self, i: usize, v: f64) {
        self.net.set_param(i, v);
    }

    fn loss(&self) -> Result<f64, NeuralError> {
        let out = self.net.forward(self.input.view())?;
        let (l, _) = mse(out.as_slice().unwrap(), self.target.as_slice().unwrap())?;
        Ok(l)
    }

    fn gradient(&self) -> Result<Vec<f64>, NeuralError> {
        let cache = self.net.forward_cached(self.input.clone())?;
        let out = cache.output();
        let (_, g) = mse(out.as_slice().unwrap(), self.target.as_slice().unwrap())?;
        let g = Array2::from_shape_vec(out.raw_dim(), g).expect("same shape");
        Ok(self.net.backward(&cache, g, true, None).flatten())
    }

    fn param_groups(&self) -> Vec<Range<usize>> {
        self.net.param_ranges()
    }
}
