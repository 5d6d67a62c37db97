use ndarray::Array2;

use super::engine::predict;
use super::params::NetworkParams;
use super::spec::NetworkSpec;
use crate::dataset::{target_to_channel, Preprocessing};
use crate::error::{Error, Result};
use crate::numerics::CMat;

/// Network output row back to a complex channel: undo the target scale, then
/// split real and imaginary halves and unvec.
pub fn decode_output(output: &[f64], prep: &Preprocessing, shape: (usize, usize)) -> Result<CMat> {
    let mut t = output.to_vec();
    prep.unscale_target(&mut t);
    target_to_channel(&t, shape.0, shape.1)
}

/// Estimates one channel from a raw (unstandardized) observation vector.
pub fn infer_channel(
    spec: &NetworkSpec,
    params: &NetworkParams,
    raw_input: &[f64],
    prep: &Preprocessing,
    shape: (usize, usize),
) -> Result<CMat> {
    infer_channels(spec, params, &[raw_input], prep, shape).map(|mut v| v.remove(0))
}

/// Batched [`infer_channel`].
pub fn infer_channels(
    spec: &NetworkSpec,
    params: &NetworkParams,
    raw_inputs: &[&[f64]],
    prep: &Preprocessing,
    shape: (usize, usize),
) -> Result<Vec<CMat>> {
    let width = spec.input_width();
    if spec.output_len() != 2 * shape.0 * shape.1 {
        return Err(Error::shape(format!(
            "network output {} cannot encode a {}x{} channel",
            spec.output_len(),
            shape.0,
            shape.1
        )));
    }
    let mut batch = Array2::zeros((raw_inputs.len(), width));
    for (mut row, raw) in batch.outer_iter_mut().zip(raw_inputs) {
        let mut x = raw.to_vec();
        prep.standardize(&mut x)?;
        if x.len() != width {
            return Err(Error::shape("input length does not match the network"));
        }
        row.assign(&ndarray::aview1(&x));
    }
    let out = predict(spec, params, &batch)?;
    out.outer_iter()
        .map(|row| decode_output(row.as_slice().expect("standard layout"), prep, shape))
        .collect()
}
