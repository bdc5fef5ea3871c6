use std::ops::Range;

use ndarray::{Array2, ArrayView2};
use rand::Rng;

use crate::error::NeuralError;
use crate::layer::{Activation, Dense, DenseGrad};

/// A stack of dense layers.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Activations recorded by [`Mlp::forward_cached`]: `activations[0]` is the
/// input, `activations[i + 1]` the output of layer `i`.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("at least the input")
    }
}

#[derive(Clone, Debug)]
pub struct MlpGrads {
    /// Per-layer parameter gradients; empty when parameter gradients were
    /// not requested.
    pub layers: Vec<DenseGrad>,
    /// dL/d(input) over the requested column range.
    pub input: Option<Array2<f64>>,
}

impl MlpGrads {
    /// Flattened in the same order as [`Mlp::param`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.layers {
            out.extend(g.weight.iter());
            out.extend(g.bias.iter());
        }
        out
    }
}

impl Mlp {
    /// Builds `dims[0] -> dims[1] -> ... -> dims[n]` with `hidden` activations
    /// between layers and `output` on the last one.
    pub fn new<R: Rng + ?Sized>(
        dims: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(dims.len() >= 2, "an MLP needs at least one layer");
        let n = dims.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::new(dims[i], dims[i + 1], act, rng)
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").output_dim()
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(Dense::output_dim))
            .collect()
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>, NeuralError> {
        self.layers[0].check_input(x.ncols())?;
        let mut cur = self.layers[0].forward(x);
        for layer in &self.layers[1..] {
            cur = layer.forward(cur.view());
        }
        Ok(cur)
    }

    pub fn forward_cached(&self, x: Array2<f64>) -> Result<ForwardCache, NeuralError> {
        self.layers[0].check_input(x.ncols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x);
        for layer in &self.layers {
            let next = layer.forward(activations.last().unwrap().view());
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Single-sample forward with zero-skipping on the first layer.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>, NeuralError> {
        self.layers[0].check_input(x.len())?;
        let mut cur = self.layers[0].forward_one(x);
        for layer in &self.layers[1..] {
            cur = layer.forward_one(&cur);
        }
        Ok(cur)
    }

    /// Backpropagates `grad_output` (dL/d(output), one row per sample).
    ///
    /// With `param_grads = false` only the input gradient is propagated, which
    /// is what frozen-network fine-tuning needs.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_output: Array2<f64>,
        param_grads: bool,
        input_cols: Option<Range<usize>>,
    ) -> MlpGrads {
        let n = self.layers.len();
        let mut grads: Vec<DenseGrad> = Vec::with_capacity(if param_grads { n } else { 0 });
        let mut upstream = grad_output;
        let mut input = None;
        for i in (0..n).rev() {
            let cols = if i == 0 {
                input_cols.clone()
            } else {
                Some(0..self.layers[i].input_dim())
            };
            let (g, down) = self.layers[i].backward(
                cache.activations[i].view(),
                cache.activations[i + 1].view(),
                upstream.view(),
                param_grads,
                cols,
            );
            if let Some(g) = g {
                grads.push(g);
            }
            match down {
                Some(d) if i > 0 => upstream = d,
                d => {
                    input = d;
                    break;
                }
            }
        }
        grads.reverse();
        MlpGrads {
            layers: grads,
            input,
        }
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    fn locate(&self, mut i: usize) -> (usize, bool, usize) {
        for (l, layer) in self.layers.iter().enumerate() {
            if i < layer.weight.len() {
                return (l, true, i);
            }
            i -= layer.weight.len();
            if i < layer.bias.len() {
                return (l, false, i);
            }
            i -= layer.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat parameter access: per layer, weights (row-major) then biases.
    pub fn param(&self, i: usize) -> f64 {
        let (l, is_weight, k) = self.locate(i);
        let layer = &self.layers[l];
        if is_weight {
            layer.weight.as_slice().unwrap()[k]
        } else {
            layer.bias[k]
        }
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        let (l, is_weight, k) = self.locate(i);
        let layer = &mut self.layers[l];
        if is_weight {
            layer.weight.as_slice_mut().unwrap()[k] = v;
        } else {
            layer.bias[k] = v;
        }
    }

    /// Index ranges of each weight matrix and bias vector in flat order.
    pub fn param_ranges(&self) -> Vec<Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for layer in &self.layers {
            for len in [layer.weight.len(), layer.bias.len()] {
                out.push(start..start + len);
                start += len;
            }
        }
        out
    }

    /// All parameter values, for checksums and equality tests.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for layer in &self.layers {
            out.extend(layer.weight.iter());
            out.extend(layer.bias.iter());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_param_access_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut net = Mlp::new(&[3, 4, 2], Activation::Relu, Activation::Identity, &mut rng);
        assert_eq!(net.param_count(), 3 * 4 + 4 + 4 * 2 + 2);
        let flat = net.flat_params();
        for (i, v) in flat.iter().enumerate() {
            assert_eq!(net.param(i), *v);
        }
        net.set_param(17, 42.0);
        assert_eq!(net.layers[1].weight[[0, 1]], 42.0);
        let ranges = net.param_ranges();
        assert_eq!(ranges.last().unwrap().end, net.param_count());
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let net = Mlp::new(&[3, 2], Activation::Relu, Activation::Identity, &mut rng);
        assert!(net.forward(Array2::zeros((1, 4)).view()).is_err());
        assert!(net.forward_one(&[0.0; 2]).is_err());
    }
}
