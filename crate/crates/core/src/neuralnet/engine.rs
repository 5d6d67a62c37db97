//! Batched forward and backward passes.
//!
//! A batch is an `n x width` matrix, one sample per row. Convolutions lower to
//! a single matrix product: with position-major activations, the receptive
//! field of output position `t` is the contiguous slice
//! `[t * ch, (t + kernel) * ch)` of the input row.

use ndarray::{s, Array2, ArrayView2, Axis};

use super::params::{NetworkParams, ParamTensors};
use super::spec::{Activation, Layer, NetworkSpec};
use crate::error::{Error, Result};

/// Intermediate values of one forward pass, consumed by [`backward`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    fingerprint: String,
    version: u64,
    /// `activations[0]` is the input batch, `activations[i + 1]` the output of
    /// layer `i`.
    activations: Vec<Array2<f64>>,
    /// Lowered receptive fields for convolution layers.
    patches: Vec<Option<Array2<f64>>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds the input at least")
    }
}

pub type Gradients = Vec<Option<ParamTensors>>;

fn activate(z: &mut Array2<f64>, act: Activation) {
    if act == Activation::Tanh {
        z.mapv_inplace(f64::tanh);
    }
}

/// Multiplies `grad` by the activation derivative, expressed through the
/// layer output.
fn activation_backward(grad: &mut Array2<f64>, out: &Array2<f64>, act: Activation) {
    if act == Activation::Tanh {
        grad.zip_mut_with(out, |g, y| *g *= 1.0 - y * y);
    }
}

fn lower_patches(input: ArrayView2<'_, f64>, channels: usize, kernel: usize, out_len: usize) -> Array2<f64> {
    let n = input.nrows();
    let field = kernel * channels;
    let mut patches = Array2::zeros((n * out_len, field));
    for (b, row) in input.outer_iter().enumerate() {
        for t in 0..out_len {
            patches
                .row_mut(b * out_len + t)
                .assign(&row.slice(s![t * channels..t * channels + field]));
        }
    }
    patches
}

pub fn forward(spec: &NetworkSpec, params: &NetworkParams, batch: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
    if batch.ncols() != spec.input_width() {
        return Err(Error::shape(format!(
            "batch has {} features, network expects {}",
            batch.ncols(),
            spec.input_width()
        )));
    }
    if !params.matches(spec) {
        return Err(Error::shape("parameters do not match the network spec"));
    }
    let shapes = spec.shapes()?;
    let n = batch.nrows();
    let mut activations = Vec::with_capacity(spec.layers.len() + 1);
    let mut patches = Vec::with_capacity(spec.layers.len());
    activations.push(batch.to_owned());

    for (i, layer) in spec.layers.iter().enumerate() {
        let input = activations.last().expect("pushed above");
        let (out, lowered) = match (*layer, &params.layers()[i]) {
            (Layer::Dense { activation, .. }, Some(t)) => {
                let mut z = input.dot(&t.weight.t());
                z += &t.bias;
                activate(&mut z, activation);
                (z, None)
            }
            (Layer::Conv1d { filters, kernel, activation }, Some(t)) => {
                let in_shape = shapes[i];
                let out_len = shapes[i + 1].len;
                let lowered = lower_patches(input.view(), in_shape.channels, kernel, out_len);
                let mut z = lowered.dot(&t.weight.t());
                z += &t.bias;
                activate(&mut z, activation);
                let z = z
                    .into_shape_with_order((n, out_len * filters))
                    .expect("contiguous product");
                (z, Some(lowered))
            }
            (Layer::Flatten, None) => (input.clone(), None),
            _ => return Err(Error::shape(format!("layer {i} has mismatched parameters"))),
        };
        activations.push(out);
        patches.push(lowered);
    }
    let output = activations.last().expect("non-empty").clone();
    Ok((
        output,
        ForwardCache {
            fingerprint: spec.fingerprint(),
            version: params.version(),
            activations,
            patches,
        },
    ))
}

/// Forward pass without keeping the cache.
pub fn predict(spec: &NetworkSpec, params: &NetworkParams, batch: &Array2<f64>) -> Result<Array2<f64>> {
    forward(spec, params, batch).map(|(out, _)| out)
}

/// Exact gradients of the loss with respect to every parameter, given the
/// gradient with respect to the network output.
pub fn backward(
    spec: &NetworkSpec,
    params: &NetworkParams,
    cache: &ForwardCache,
    output_grad: &Array2<f64>,
) -> Result<Gradients> {
    if cache.version != params.version() || cache.fingerprint != spec.fingerprint() {
        return Err(Error::StaleCache);
    }
    if output_grad.dim() != cache.output().dim() {
        return Err(Error::shape(format!(
            "output gradient {:?} against output {:?}",
            output_grad.dim(),
            cache.output().dim()
        )));
    }
    let shapes = spec.shapes()?;
    let n = output_grad.nrows();
    let mut grads: Gradients = vec![None; spec.layers.len()];
    let mut grad = output_grad.clone();

    for i in (0..spec.layers.len()).rev() {
        let input = &cache.activations[i];
        let output = &cache.activations[i + 1];
        let need_input_grad = i > 0;
        match (spec.layers[i], &params.layers()[i]) {
            (Layer::Dense { activation, .. }, Some(t)) => {
                activation_backward(&mut grad, output, activation);
                let weight = grad.t().dot(input);
                let bias = grad.sum_axis(Axis(0));
                let next = need_input_grad.then(|| grad.dot(&t.weight));
                grads[i] = Some(ParamTensors { weight, bias });
                if let Some(g) = next {
                    grad = g;
                }
            }
            (Layer::Conv1d { filters, kernel, activation }, Some(t)) => {
                activation_backward(&mut grad, output, activation);
                let out_len = shapes[i + 1].len;
                let channels = shapes[i].channels;
                let dz = grad
                    .into_shape_with_order((n * out_len, filters))
                    .expect("contiguous gradient");
                let lowered = cache.patches[i].as_ref().ok_or(Error::StaleCache)?;
                let weight = dz.t().dot(lowered);
                let bias = dz.sum_axis(Axis(0));
                grads[i] = Some(ParamTensors { weight, bias });
                if !need_input_grad {
                    break;
                }
                let d_patches = dz.dot(&t.weight);
                let field = kernel * channels;
                let mut d_input = Array2::zeros((n, shapes[i].width()));
                for b in 0..n {
                    let mut row = d_input.row_mut(b);
                    for tpos in 0..out_len {
                        let mut window = row.slice_mut(s![tpos * channels..tpos * channels + field]);
                        window += &d_patches.row(b * out_len + tpos);
                    }
                }
                grad = d_input;
            }
            (Layer::Flatten, None) => {}
            _ => return Err(Error::shape(format!("layer {i} has mismatched parameters"))),
        }
    }
    Ok(grads)
}
