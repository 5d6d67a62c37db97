//! Building blocks shared by the commands: dataset generation, fitting a
//! network end to end, and per-sample NMSE evaluation.

use rand::RngCore;
use rayon::prelude::*;

use super::config::ExperimentConfig;
use crate::channel::SystemConfig;
use crate::dataset::{
    generate_dataset, preprocess, sensing_frames_from_input, split, target_to_channel, user_frames_from_input,
    ChannelKind, Dataset, GenerationPlan, Preprocessing, Role,
};
use crate::error::{Error, Result};
use crate::estimators::{ls_comm, ls_sense, nmse};
use crate::neuralnet::{
    build_ce_dnn_with, build_se_dnn_with, infer_channels, train, NetworkParams, NetworkSpec, TrainConfig,
    TrainHistory,
};
use crate::numerics::{CMat, RngStream};
use crate::protocol::build_pilots;

/// Stream tags under the master seed.
pub(crate) mod tags {
    pub const TRAIN_DATA: u64 = 1;
    pub const TEST_DATA: u64 = 2;
    pub const SPLIT: u64 = 3;
    pub const INIT: u64 = 4;
    pub const SHUFFLE: u64 = 5;
    pub const SWEEP_L: u64 = 6;
    pub const SWEEP_M: u64 = 7;
}

/// Tag that separates the sensing stream from each user's stream.
pub fn kind_tag(kind: ChannelKind) -> u64 {
    match kind {
        ChannelKind::Sensing => 0,
        ChannelKind::User(k) => 1 + k as u64,
    }
}

/// Training data pooled over `snrs_db`, with augmentation.
pub fn training_set(
    exp: &ExperimentConfig,
    system: &SystemConfig,
    kind: ChannelKind,
    snrs_db: &[f64],
    root: &RngStream,
) -> Result<Dataset> {
    let plan = GenerationPlan {
        kind,
        originals: exp.originals,
        copies: exp.copies,
        snrs_db,
        snr_ch_db: exp.snr_ch_db,
        role: Role::Train,
    };
    generate_dataset(system, &plan, &root.derive(tags::TRAIN_DATA).derive(kind_tag(kind)))
}

/// `T_on` fresh, unaugmented realizations at one SNR. `index` keeps the
/// streams of different test SNRs apart.
pub fn test_set(
    exp: &ExperimentConfig,
    system: &SystemConfig,
    kind: ChannelKind,
    snr_db: f64,
    index: usize,
    root: &RngStream,
) -> Result<Dataset> {
    let snrs = [snr_db];
    let plan = GenerationPlan {
        kind,
        originals: exp.test_samples,
        copies: 1,
        snrs_db: &snrs,
        snr_ch_db: exp.snr_ch_db,
        role: Role::Test,
    };
    let stream = root.derive(tags::TEST_DATA).derive(kind_tag(kind)).derive(index as u64);
    generate_dataset(system, &plan, &stream)
}

/// Network architecture for a channel kind under the configured widths.
pub fn network_for(exp: &ExperimentConfig, system: &SystemConfig, kind: ChannelKind) -> Result<NetworkSpec> {
    match kind {
        ChannelKind::Sensing => build_se_dnn_with(system.m, system.p, system.c, exp.se_hidden),
        ChannelKind::User(_) => build_ce_dnn_with(system.p, system.c, system.m, system.l, exp.ce_widths),
    }
}

/// A trained estimator with everything needed to apply it to raw inputs.
#[derive(Clone, Debug)]
pub struct TrainedNetwork {
    pub spec: NetworkSpec,
    pub params: NetworkParams,
    pub prep: Preprocessing,
    pub history: TrainHistory,
}

/// Splits raw training data, standardizes it, and trains a freshly
/// initialized network. `stream` seeds the split, the initialization and
/// the minibatch order.
pub fn fit_network(
    exp: &ExperimentConfig,
    spec: NetworkSpec,
    raw: Dataset,
    stream: &RngStream,
) -> Result<TrainedNetwork> {
    if raw.preprocessing.is_some() {
        return Err(Error::config("training data must be raw"));
    }
    if raw.input_len() != spec.input_width() || raw.target_len() != spec.output_len() {
        return Err(Error::shape(format!(
            "dataset {}->{} does not fit network {}->{}",
            raw.input_len(),
            raw.target_len(),
            spec.input_width(),
            spec.output_len()
        )));
    }
    let (mut train_set, mut val, _) = split(raw, 0.9, 0.1, &mut stream.derive(tags::SPLIT))?;
    let prep = preprocess(&mut train_set, &mut [&mut val], exp.rho)?;
    let init = NetworkParams::init_scaled(&spec, exp.init_gain, &mut stream.derive(tags::INIT));
    let cfg = TrainConfig {
        seed: stream.derive(tags::SHUFFLE).next_u64(),
        ..exp.train.clone()
    };
    let (params, history) = train(&spec, init, &train_set, &val, &cfg)?;
    Ok(TrainedNetwork {
        spec,
        params,
        prep,
        history,
    })
}

fn truths(test: &Dataset) -> Result<Vec<CMat>> {
    let (rows, cols) = test.target_shape();
    test.samples
        .iter()
        .map(|s| target_to_channel(&s.target, rows, cols))
        .collect()
}

fn require_raw(test: &Dataset) -> Result<()> {
    if test.preprocessing.is_some() {
        return Err(Error::config("evaluation expects a raw test set"));
    }
    if test.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// Per-sample LS NMSE on a raw test set.
pub fn ls_nmse(system: &SystemConfig, test: &Dataset) -> Result<Vec<f64>> {
    require_raw(test)?;
    let pilots = build_pilots(system)?;
    let dims = test.dims;
    test.samples
        .par_iter()
        .map(|s| {
            let (rows, cols) = test.target_shape();
            let truth = target_to_channel(&s.target, rows, cols)?;
            let estimate = match test.kind {
                ChannelKind::Sensing => ls_sense(&sensing_frames_from_input(&s.input, dims, 0.0)?, &pilots)?,
                ChannelKind::User(k) => ls_comm(&user_frames_from_input(&s.input, dims, k, 0.0)?, &pilots)?,
            };
            nmse(&estimate, &truth)
        })
        .collect()
}

/// Per-sample DNN NMSE on a raw test set.
pub fn dnn_nmse(net: &TrainedNetwork, test: &Dataset) -> Result<Vec<f64>> {
    require_raw(test)?;
    let inputs: Vec<&[f64]> = test.samples.iter().map(|s| s.input.as_slice()).collect();
    let mut out = Vec::with_capacity(test.len());
    let truth = truths(test)?;
    for (chunk, truth) in inputs.chunks(500).zip(truth.chunks(500)) {
        let estimates = infer_channels(&net.spec, &net.params, chunk, &net.prep, test.target_shape())?;
        for (e, t) in estimates.iter().zip(truth) {
            out.push(nmse(e, t)?);
        }
    }
    Ok(out)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len().max(1) as f64
}
