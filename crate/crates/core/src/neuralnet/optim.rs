use ndarray::{Array2, Zip};

use super::engine::Gradients;
use super::params::{NetworkParams, ParamTensors};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 2e-4,
            batch_size: 200,
            max_epochs: 300,
            patience: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = self.learning_rate > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.patience > 0
            && self.beta1 > 0.0
            && self.beta2 > 0.0
            && self.epsilon > 0.0;
        if !positive {
            return Err(Error::config("training hyperparameters must be positive"));
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::config("Adam decay rates must be below 1"));
        }
        if self.patience > self.max_epochs {
            return Err(Error::config("patience cannot exceed the epoch cap"));
        }
        Ok(())
    }
}

/// Mean squared error over every sample and output element, with its
/// gradient `2 (pred − target) / count`.
pub fn mse_loss(pred: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::shape(format!(
            "prediction {:?} against target {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    let count = pred.len().max(1) as f64;
    let diff = pred - target;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / count;
    Ok((loss, diff * (2.0 / count)))
}

/// First and second moment estimates for every parameter.
#[derive(Clone, Debug)]
pub struct AdamState {
    m: Vec<Option<ParamTensors>>,
    v: Vec<Option<ParamTensors>>,
    t: u64,
}

impl AdamState {
    pub fn new(params: &NetworkParams) -> Self {
        let zeros: Vec<Option<ParamTensors>> = params
            .layers()
            .iter()
            .map(|t| {
                t.as_ref()
                    .map(|t| ParamTensors::zeros(t.weight.nrows(), t.weight.ncols(), t.bias.len()))
            })
            .collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut NetworkParams, grads: &Gradients, state: &mut AdamState, cfg: &TrainConfig) -> Result<()> {
    if grads.len() != params.layers().len() || state.m.len() != grads.len() {
        return Err(Error::shape("gradient layout does not match the parameters"));
    }
    state.t += 1;
    let t = state.t as i32;
    let step = cfg.learning_rate;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let (b1, b2, eps) = (cfg.beta1, cfg.beta2, cfg.epsilon);

    let update = |p: &mut f64, g: &f64, m: &mut f64, v: &mut f64| {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= step * m_hat / (v_hat.sqrt() + eps);
    };

    let layers = params.layers_mut();
    for (((p, g), m), v) in layers
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        match (p, g, m, v) {
            (Some(p), Some(g), Some(m), Some(v)) => {
                if p.weight.dim() != g.weight.dim() || p.bias.len() != g.bias.len() {
                    return Err(Error::shape("gradient tensor shape mismatch"));
                }
                Zip::from(&mut p.weight)
                    .and(&g.weight)
                    .and(&mut m.weight)
                    .and(&mut v.weight)
                    .for_each(update);
                Zip::from(&mut p.bias)
                    .and(&g.bias)
                    .and(&mut m.bias)
                    .and(&mut v.bias)
                    .for_each(update);
            }
            (None, None, None, None) => {}
            _ => return Err(Error::shape("gradient layout does not match the parameters")),
        }
    }
    Ok(())
}
