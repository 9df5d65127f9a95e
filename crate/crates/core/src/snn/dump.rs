use std::io::Write;

use super::{SnnTrace, SpikeRaster};
use crate::neural::Tensor;
use crate::Result;

/// Writes one symbol's raster and traces as `series,neuron,step,value` rows.
///
/// Series are `input_spike`, `hidden_spike`, `hidden_v`, `hidden_i`,
/// `output_v` and `output_i`. Spike series list only the spikes.
pub fn write_symbol_csv<W: Write>(out: W, raster: &SpikeRaster, trace: &SnnTrace) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["series", "neuron", "step", "value"])?;
    for (n, s) in raster.events() {
        w.serialize(("input_spike", n, s, 1.0))?;
    }
    let mut dense = |name: &str, t: &Tensor, sparse: bool| -> Result<()> {
        for n in 0..t.rows() {
            for (s, &v) in t.row(n).iter().enumerate() {
                if !sparse || v != 0.0 {
                    w.serialize((name, n, s, v))?;
                }
            }
        }
        Ok(())
    };
    if let Some(z) = &trace.hidden.spikes {
        dense("hidden_spike", z, true)?;
    }
    dense("hidden_v", &trace.hidden.v, false)?;
    dense("hidden_i", &trace.hidden.i, false)?;
    dense("output_v", &trace.output.v, false)?;
    dense("output_i", &trace.output.i, false)?;
    w.flush().map_err(|e| crate::Error::io("<csv writer>", e))?;
    Ok(())
}
