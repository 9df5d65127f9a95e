//! Spiking demapper: distance-coded input spikes, one hidden LIF layer and a
//! leaky-integrator readout decoded by its maximum membrane voltage.

mod bptt;
mod dump;
mod dynamics;
mod encode;
mod model;
mod params;

pub use bptt::snn_bptt;
pub use dump::write_symbol_csv;
pub use dynamics::{
    li_layer_step, lif_layer_step, snn_forward, snn_scores, LayerState, LayerTrace, SnnTrace,
};
pub use encode::{encode_spikes, SpikeRaster};
pub use model::{
    decode_max_over_time, hidden_silent_fraction, snn_batch_gradients, snn_eval_loss, snn_loss,
    snn_record, snn_train_epoch, SnnGraph, SnnModel,
};
pub use params::{Dynamics, Integrator, SnnParams};

pub use crate::neural::superspike;

/// SuperSpike pseudo-derivative `(β·|v − ϑ| + 1)⁻²` with the model constants.
pub fn superspike_surrogate(v: f64, params: &SnnParams) -> f64 {
    superspike(v, params.threshold, params.surrogate_beta)
}
