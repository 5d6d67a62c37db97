//! Test oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use irs_isac::neuralnet::{backward, forward, mse_loss, predict, Gradients, NetworkParams, NetworkSpec};
use ndarray::Array2;

/// Loss of `params` on `(x, y)`; used as the scalar function for finite
/// differences.
fn loss(spec: &NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) -> f64 {
    mse_loss(&predict(spec, params, x).unwrap(), y).unwrap().0
}

/// Gradient of the MSE loss by central differences with step `h`, perturbing
/// one parameter at a time.
pub fn finite_difference_grads(
    spec: &NetworkSpec,
    params: &NetworkParams,
    x: &Array2<f64>,
    y: &Array2<f64>,
    h: f64,
) -> Gradients {
    let mut work = params.clone();
    let mut out: Gradients = params.layers().to_vec();
    for (li, layer) in out.iter_mut().enumerate() {
        let Some(t) = layer else { continue };
        for ((r, c), g) in t.weight.indexed_iter_mut() {
            let orig = params.layers()[li].as_ref().unwrap().weight[[r, c]];
            work.layers_mut()[li].as_mut().unwrap().weight[[r, c]] = orig + h;
            let plus = loss(spec, &work, x, y);
            work.layers_mut()[li].as_mut().unwrap().weight[[r, c]] = orig - h;
            let minus = loss(spec, &work, x, y);
            work.layers_mut()[li].as_mut().unwrap().weight[[r, c]] = orig;
            *g = (plus - minus) / (2.0 * h);
        }
        for (i, g) in t.bias.indexed_iter_mut() {
            let orig = params.layers()[li].as_ref().unwrap().bias[i];
            work.layers_mut()[li].as_mut().unwrap().bias[i] = orig + h;
            let plus = loss(spec, &work, x, y);
            work.layers_mut()[li].as_mut().unwrap().bias[i] = orig - h;
            let minus = loss(spec, &work, x, y);
            work.layers_mut()[li].as_mut().unwrap().bias[i] = orig;
            *g = (plus - minus) / (2.0 * h);
        }
    }
    out
}

pub fn analytic_grads(spec: &NetworkSpec, params: &NetworkParams, x: &Array2<f64>, y: &Array2<f64>) -> Gradients {
    let (out, cache) = forward(spec, params, x).unwrap();
    let (_, g) = mse_loss(&out, y).unwrap();
    backward(spec, params, &cache, &g).unwrap()
}

/// Per-layer `max_i |a_i − n_i| / max_i max(|a_i|, |n_i|)`: the worst
/// deviation relative to the layer's gradient scale. Elementwise ratios are
/// meaningless for entries near zero, where finite-difference roundoff
/// (about 1e-10 here) dominates.
pub fn max_relative_error(a: &Gradients, n: &Gradients) -> Vec<Option<f64>> {
    a.iter()
        .zip(n)
        .map(|(a, n)| match (a, n) {
            (Some(a), Some(n)) => {
                let pairs = || {
                    a.weight
                        .iter()
                        .chain(a.bias.iter())
                        .zip(n.weight.iter().chain(n.bias.iter()))
                };
                let scale = pairs().map(|(x, y)| x.abs().max(y.abs())).fold(0.0, f64::max);
                let dev = pairs().map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                Some(if scale == 0.0 { dev } else { dev / scale })
            }
            _ => None,
        })
        .collect()
}
