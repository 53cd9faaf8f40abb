//! Spike tensors, 8-bit weights, 16-bit synaptic integration and LIF neurons.

mod integration;
pub mod lif;
mod matrix;
mod quant;
mod spike;

pub use integration::{saturate_i16, spike_matmul, synaptic_integration, IntegrationTensor, MatmulOutput};
pub use lif::{lif_run, lif_step, LifParams, PotentialState};
pub use matrix::Matrix;
pub use quant::{quantize_weights, QuantWeightMatrix};
pub use spike::{Layout, SpikeTensor};
