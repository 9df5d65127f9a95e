//! Classical reference demappers: LMMSE linear equalization and Volterra
//! nonlinear equalization, each followed by a BER-optimized threshold demapper.

mod features;
mod lstsq;
mod models;
mod thresholds;

pub use features::{
    binomial, build_le_features, build_volterra_features, volterra_block_widths,
    volterra_feature_count, VolterraBasis,
};
pub use lstsq::{fit_least_squares, LstsqSolution};
pub use models::{
    fit_linear, fit_volterra, load_classical, save_classical, ClassicalDemapper, Equalizer,
    LinearModel, VolterraModel,
};
pub use thresholds::{fit_boundary, fit_thresholds, ThresholdDemapper};
