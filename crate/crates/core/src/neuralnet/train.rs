use std::fmt;

use ndarray::{s, Array2, Axis};

use super::engine::{backward, forward, predict};
use super::optim::{adam_step, mse_loss, AdamState, TrainConfig};
use super::params::NetworkParams;
use super::spec::NetworkSpec;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    /// Validation loss did not improve for `patience` consecutive epochs.
    Patience,
    /// Reached `max_epochs`.
    Cap,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StopReason::Patience => "patience",
            StopReason::Cap => "cap",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were retained.
    pub best_epoch: usize,
    pub stop: StopReason,
}

impl TrainHistory {
    pub fn best_val_loss(&self) -> f64 {
        self.epochs[self.best_epoch - 1].val_loss
    }
}

/// Patience counter over a validation-loss stream. An epoch improves only
/// if its loss is strictly below the best seen so far.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    since_best: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since_best: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> Verdict {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since_best = 0;
            Verdict::Improved
        } else {
            self.since_best += 1;
            if self.since_best >= self.patience {
                Verdict::Stop
            } else {
                Verdict::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Stacks dataset inputs and targets into `n x width` matrices.
pub fn dataset_arrays(ds: &Dataset) -> Result<(Array2<f64>, Array2<f64>)> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let (il, tl) = (ds.samples[0].input.len(), ds.samples[0].target.len());
    let mut x = Array2::zeros((ds.len(), il));
    let mut y = Array2::zeros((ds.len(), tl));
    for (i, s) in ds.samples.iter().enumerate() {
        if s.input.len() != il || s.target.len() != tl {
            return Err(Error::shape("ragged dataset"));
        }
        x.row_mut(i).assign(&ndarray::aview1(&s.input));
        y.row_mut(i).assign(&ndarray::aview1(&s.target));
    }
    Ok((x, y))
}

/// Sample-weighted mean loss, evaluated in chunks of `chunk` rows.
pub fn evaluate_loss(
    spec: &NetworkSpec,
    params: &NetworkParams,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    chunk: usize,
) -> Result<f64> {
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let end = (start + chunk.max(1)).min(n);
        let pred = predict(spec, params, &inputs.slice(s![start..end, ..]).to_owned())?;
        let (loss, _) = mse_loss(&pred, &targets.slice(s![start..end, ..]).to_owned())?;
        total += loss * (end - start) as f64;
        start = end;
    }
    Ok(total / n as f64)
}

/// Minibatch Adam training with early stopping on `validation`. Returns the
/// parameters of the best validation epoch.
pub fn train(
    spec: &NetworkSpec,
    init: NetworkParams,
    train_set: &Dataset,
    validation: &Dataset,
    cfg: &TrainConfig,
) -> Result<(NetworkParams, TrainHistory)> {
    let (x, y) = dataset_arrays(train_set)?;
    let (vx, vy) = dataset_arrays(validation)?;
    train_arrays(spec, init, &x, &y, cfg, |_, p| {
        evaluate_loss(spec, p, &vx, &vy, cfg.batch_size)
    })
}

/// Training loop with a caller-supplied validation monitor, called once per
/// epoch with the 1-based epoch index and the current parameters.
pub fn train_arrays(
    spec: &NetworkSpec,
    init: NetworkParams,
    inputs: &Array2<f64>,
    targets: &Array2<f64>,
    cfg: &TrainConfig,
    mut monitor: impl FnMut(usize, &NetworkParams) -> Result<f64>,
) -> Result<(NetworkParams, TrainHistory)> {
    cfg.validate()?;
    let n = inputs.nrows();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if targets.nrows() != n || targets.ncols() != spec.output_len() {
        return Err(Error::shape("targets do not match inputs or network output"));
    }
    let mut params = init;
    let mut best = params.clone();
    let mut adam = AdamState::new(&params);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut order: Vec<usize> = (0..n).collect();
    let shuffle_root = RngStream::new(cfg.seed, 0x74_7261_696e);
    let mut epochs = Vec::new();
    let mut stop = StopReason::Cap;

    for epoch in 1..=cfg.max_epochs {
        shuffle_root.derive(epoch as u64).shuffle(&mut order);
        let mut weighted = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let bx = inputs.select(Axis(0), batch);
            let by = targets.select(Axis(0), batch);
            let (pred, cache) = forward(spec, &params, &bx)?;
            let (loss, grad) = mse_loss(&pred, &by)?;
            let grads = backward(spec, &params, &cache, &grad)?;
            adam_step(&mut params, &grads, &mut adam, cfg)?;
            weighted += loss * batch.len() as f64;
        }
        let train_loss = weighted / n as f64;
        let val_loss = monitor(epoch, &params)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        match stopper.observe(epoch, val_loss) {
            Verdict::Improved => best = params.clone(),
            Verdict::Continue => {}
            Verdict::Stop => {
                stop = StopReason::Patience;
                break;
            }
        }
    }
    if !best.is_finite() {
        return Err(Error::config("training diverged to non-finite parameters"));
    }
    Ok((
        best,
        TrainHistory {
            epochs,
            best_epoch: stopper.best_epoch().max(1),
            stop,
        },
    ))
}
