use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng;

use crate::error::NeuralError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Identity => z,
        }
    }

    /// Derivative expressed through the activation output `a = f(z)`.
    #[inline]
    pub fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - a * a,
            Activation::Identity => 1.0,
        }
    }
}

/// Fully connected layer `a = f(W x + b)` with `W` stored `out x in`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

#[derive(Clone, Debug)]
pub struct DenseGrad {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// He-uniform init for ReLU layers, Xavier-uniform otherwise; zero bias.
    pub fn new<R: Rng + ?Sized>(
        input: usize,
        output: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let limit = match activation {
            Activation::Relu => (6.0 / input as f64).sqrt(),
            _ => (6.0 / (input + output) as f64).sqrt(),
        };
        let weight = Array2::from_shape_simple_fn((output, input), || rng.gen_range(-limit..limit));
        Dense {
            weight,
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Dense {
            weight: Array2::zeros((output, input)),
            bias: Array1::zeros(output),
            activation,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    /// Batch forward pass; rows of `x` are samples.
    pub fn forward(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut z = x.dot(&self.weight.t());
        z += &self.bias;
        let act = self.activation;
        z.mapv_inplace(|v| act.apply(v));
        z
    }

    /// Single-sample forward pass that skips zero inputs. Faster than the
    /// batch path for sparse binary encodings.
    pub fn forward_one(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input_dim());
        let active: Vec<(usize, f64)> = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let w = self.weight.as_slice().expect("standard layout");
        let cols = self.input_dim();
        (0..self.output_dim())
            .map(|i| {
                let row = &w[i * cols..(i + 1) * cols];
                let z = active
                    .iter()
                    .fold(self.bias[i], |acc, &(j, v)| acc + row[j] * v);
                self.activation.apply(z)
            })
            .collect()
    }

    /// Backward pass for a batch.
    ///
    /// `input` and `output` are the layer's cached input and activation
    /// output, `grad_output` is dL/d(output). Returns the parameter gradient
    /// (when `param_grads`) and dL/d(input) restricted to the columns in
    /// `input_cols` (when given).
    pub fn backward(
        &self,
        input: ArrayView2<f64>,
        output: ArrayView2<f64>,
        grad_output: ArrayView2<f64>,
        param_grads: bool,
        input_cols: Option<Range<usize>>,
    ) -> (Option<DenseGrad>, Option<Array2<f64>>) {
        let act = self.activation;
        let mut delta = grad_output.to_owned();
        if act != Activation::Identity {
            delta.zip_mut_with(&output, |d, &a| *d *= act.derivative_from_output(a));
        }
        let grads = param_grads.then(|| DenseGrad {
            weight: delta.t().dot(&input),
            bias: delta.sum_axis(Axis(0)),
        });
        let input_grad = input_cols.map(|cols| delta.dot(&self.weight.slice(s![.., cols])));
        (grads, input_grad)
    }

    pub(crate) fn check_input(&self, cols: usize) -> Result<(), NeuralError> {
        if cols != self.input_dim() {
            return Err(NeuralError::shape(
                format!("{} input columns", self.input_dim()),
                cols,
            ));
        }
        Ok(())
    }
}
