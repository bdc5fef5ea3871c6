//! Minimal dense neural-network stack with hand-written backprop.
//!
//! Layers work on row-major batches (`samples x features`). Training code
//! drives [`Mlp::forward_cached`] and [`Mlp::backward`] directly and applies
//! [`adam_step`] per parameter tensor.

mod adam;
mod error;
mod gradcheck;
mod layer;
mod loss;
mod mlp;
mod weights;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use error::NeuralError;
pub use gradcheck::{gradient_check, relative_error, Differentiable, GradCheckReport, MlpMseProbe, FD_STEP};
pub use layer::{Activation, Dense, DenseGrad};
pub use loss::{masked_cross_entropy, masked_softmax, mse, softmax, softmax_cross_entropy};
pub use mlp::{ForwardCache, Mlp, MlpGrads};
pub use weights::{NamedTensor, WeightFile};

/// Adam state for each weight and bias tensor of an [`Mlp`], in layer order.
#[derive(Clone, Debug)]
pub struct MlpOptimizer {
    pub states: Vec<AdamState>,
    pub config: AdamConfig,
}

impl MlpOptimizer {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let states = net
            .layers
            .iter()
            .flat_map(|l| [AdamState::new(l.weight.len()), AdamState::new(l.bias.len())])
            .collect();
        MlpOptimizer { states, config }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &MlpGrads) -> Result<(), NeuralError> {
        if grads.layers.len() != net.layers.len() {
            return Err(NeuralError::ShapeMismatch {
                expected: format!("{} layer grads", net.layers.len()),
                found: grads.layers.len().to_string(),
            });
        }
        for (i, (layer, g)) in net.layers.iter_mut().zip(&grads.layers).enumerate() {
            adam_step(
                layer.weight.as_slice_mut().expect("standard layout"),
                g.weight.as_standard_layout().as_slice().expect("standard layout"),
                &mut self.states[2 * i],
                &self.config,
            )?;
            adam_step(
                layer.bias.as_slice_mut().expect("contiguous"),
                g.bias.as_slice().expect("contiguous"),
                &mut self.states[2 * i + 1],
                &self.config,
            )?;
        }
        Ok(())
    }
}
