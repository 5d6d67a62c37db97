//! Experiment commands: dataset generation, training, evaluation over an SNR
//! grid, and the L and M sweeps. Every command is a function of the config
//! and its master seed; outputs go to `out_dir`.

pub mod config;
pub mod pipeline;
pub mod results;

use std::fs;
use std::path::{Path, PathBuf};

use log::info;

pub use config::{Channels, ExperimentConfig, Profile};
pub use pipeline::{
    dnn_nmse, fit_network, kind_tag, ls_nmse, mean, network_for, test_set, training_set, TrainedNetwork,
};
pub use results::{history_csv, ChannelFamily, SweepResult, SweepRow};

use crate::channel::SystemConfig;
use crate::dataset::{ChannelKind, Dataset, Preprocessing};
use crate::error::{Error, Result};
use crate::estimators::Method;
use crate::neuralnet::{NetworkParams, NetworkSpec};
use crate::numerics::RngStream;
use pipeline::tags;

const FIT: u64 = 8;

fn root(exp: &ExperimentConfig) -> RngStream {
    RngStream::new(exp.seed, 0)
}

fn out_path(exp: &ExperimentConfig, name: &str) -> PathBuf {
    exp.out_dir.join(name)
}

fn ensure_out_dir(exp: &ExperimentConfig) -> Result<()> {
    fs::create_dir_all(&exp.out_dir)?;
    Ok(())
}

fn require(path: PathBuf) -> Result<PathBuf> {
    if path.exists() {
        Ok(path)
    } else {
        Err(Error::Missing(path))
    }
}

pub fn train_file(kind: ChannelKind) -> String {
    format!("train_{kind}.ds")
}

pub fn test_file(kind: ChannelKind, snr_db: f64) -> String {
    format!("test_{kind}_{snr_db}dB.ds")
}

/// Base name of the parameter and statistics files of a network.
pub fn network_name(kind: ChannelKind, per_user: bool) -> String {
    match kind {
        ChannelKind::Sensing => "se_dnn".to_string(),
        ChannelKind::User(k) if per_user => format!("ce_dnn_user{k}"),
        ChannelKind::User(_) => "ce_dnn".to_string(),
    }
}

/// Users whose data trains a CE-DNN: all of them with `ce_per_user`, else
/// user 0 for the shared network.
fn trained_users(exp: &ExperimentConfig) -> Vec<usize> {
    if exp.ce_per_user {
        (0..exp.system.k).collect()
    } else {
        vec![0]
    }
}

/// Writes the pooled training sets and the unaugmented test sets, plus the
/// resolved config as `config.txt`.
pub fn cmd_generate(exp: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    exp.validate()?;
    ensure_out_dir(exp)?;
    let root = root(exp);
    let mut kinds = Vec::new();
    if exp.channels.sensing() {
        kinds.push(ChannelKind::Sensing);
    }
    if exp.channels.communication() {
        kinds.extend((0..exp.system.k).map(ChannelKind::User));
    }
    let mut written = Vec::new();
    let config_path = out_path(exp, "config.txt");
    fs::write(&config_path, exp.to_text())?;
    written.push(config_path);
    for &kind in &kinds {
        let ds = training_set(exp, &exp.system, kind, &exp.train_snrs_db, &root)?;
        let path = out_path(exp, &train_file(kind));
        info!("{}: {} training samples", path.display(), ds.len());
        ds.save(&path)?;
        written.push(path);
        for (i, &snr) in exp.test_snrs_db.iter().enumerate() {
            let ds = test_set(exp, &exp.system, kind, snr, i, &root)?;
            let path = out_path(exp, &test_file(kind, snr));
            ds.save(&path)?;
            written.push(path);
        }
    }
    Ok(written)
}

fn fit_and_log(exp: &ExperimentConfig, system: &SystemConfig, kind: ChannelKind, raw: Dataset, stream: &RngStream) -> Result<TrainedNetwork> {
    let spec = network_for(exp, system, kind)?;
    info!(
        "training {} for {kind} on {} samples ({} parameters)",
        match kind {
            ChannelKind::Sensing => Method::SeDnn,
            ChannelKind::User(_) => Method::CeDnn,
        },
        raw.len(),
        spec.param_count()
    );
    let net = fit_network(exp, spec, raw, stream)?;
    info!(
        "stopped after {} epochs ({}), best epoch {} with validation loss {:.4e}",
        net.history.epochs.len(),
        net.history.stop,
        net.history.best_epoch,
        net.history.best_val_loss()
    );
    Ok(net)
}

fn fit_stream(root: &RngStream, kind: ChannelKind) -> RngStream {
    root.derive(FIT).derive(kind_tag(kind))
}

/// Trains the SE-DNN and CE-DNN(s) on the generated training sets and
/// writes `<name>.params`, `<name>.stats` and `<name>_history.csv`.
pub fn cmd_train(exp: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    exp.validate()?;
    ensure_out_dir(exp)?;
    let root = root(exp);
    let mut kinds = Vec::new();
    if exp.channels.sensing() {
        kinds.push(ChannelKind::Sensing);
    }
    if exp.channels.communication() {
        kinds.extend(trained_users(exp).into_iter().map(ChannelKind::User));
    }
    let mut written = Vec::new();
    for kind in kinds {
        let raw = Dataset::load(&require(out_path(exp, &train_file(kind)))?)?;
        if raw.dims != crate::dataset::Dims::of(&exp.system) {
            return Err(Error::shape(format!(
                "{} was generated for different system dimensions",
                train_file(kind)
            )));
        }
        let net = fit_and_log(exp, &exp.system, kind, raw, &fit_stream(&root, kind))?;
        let name = network_name(kind, exp.ce_per_user);
        let params = out_path(exp, &format!("{name}.params"));
        let stats = out_path(exp, &format!("{name}.stats"));
        let history = out_path(exp, &format!("{name}_history.csv"));
        net.params.save(&net.spec, &params)?;
        net.prep.save(&stats)?;
        fs::write(&history, history_csv(&net.history))?;
        written.extend([params, stats, history]);
    }
    Ok(written)
}

/// Loads a network saved by [`cmd_train`].
pub fn load_network(exp: &ExperimentConfig, kind: ChannelKind) -> Result<(NetworkSpec, NetworkParams, Preprocessing)> {
    let spec = network_for(exp, &exp.system, kind)?;
    let name = network_name(kind, exp.ce_per_user);
    let params = NetworkParams::load(&spec, &require(out_path(exp, &format!("{name}.params")))?)?;
    let prep = Preprocessing::load(&require(out_path(exp, &format!("{name}.stats")))?)?;
    Ok((spec, params, prep))
}

fn as_trained(loaded: (NetworkSpec, NetworkParams, Preprocessing)) -> TrainedNetwork {
    let (spec, params, prep) = loaded;
    TrainedNetwork {
        spec,
        params,
        prep,
        history: crate::neuralnet::TrainHistory {
            epochs: Vec::new(),
            best_epoch: 0,
            stop: crate::neuralnet::StopReason::Cap,
        },
    }
}

fn push_row(
    result: &mut SweepResult,
    point: Option<usize>,
    snr_db: f64,
    channel: ChannelFamily,
    method: Method,
    values: &[f64],
) {
    result.rows.push(SweepRow {
        point,
        snr_db,
        channel,
        method,
        nmse: mean(values),
        n: values.len(),
    });
}

fn finish(exp: &ExperimentConfig, result: &SweepResult, stem: &str, title: &str) -> Result<()> {
    ensure_out_dir(exp)?;
    result.write_csv(&out_path(exp, &format!("{stem}.csv")))?;
    if exp.plot {
        fs::write(out_path(exp, &format!("{stem}.svg")), result.to_svg(title))?;
    }
    Ok(())
}

/// NMSE of LS and the trained networks on the stored test sets, one row per
/// test SNR, channel family and method. Writes `eval.csv`.
pub fn cmd_eval(exp: &ExperimentConfig, skip_dnn: bool) -> Result<SweepResult> {
    exp.validate()?;
    let se = if exp.channels.sensing() && !skip_dnn {
        Some(as_trained(load_network(exp, ChannelKind::Sensing)?))
    } else {
        None
    };
    let ce: Vec<TrainedNetwork> = if exp.channels.communication() && !skip_dnn {
        trained_users(exp)
            .into_iter()
            .map(|k| load_network(exp, ChannelKind::User(k)).map(as_trained))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    let mut result = SweepResult::new(None);
    for &snr in &exp.test_snrs_db {
        if exp.channels.sensing() {
            let test = Dataset::load(&require(out_path(exp, &test_file(ChannelKind::Sensing, snr)))?)?;
            push_row(&mut result, None, snr, ChannelFamily::Sensing, Method::Ls, &ls_nmse(&exp.system, &test)?);
            if let Some(net) = &se {
                push_row(&mut result, None, snr, ChannelFamily::Sensing, Method::SeDnn, &dnn_nmse(net, &test)?);
            }
        }
        if exp.channels.communication() {
            let mut ls = Vec::new();
            let mut dnn = Vec::new();
            for k in 0..exp.system.k {
                let test = Dataset::load(&require(out_path(exp, &test_file(ChannelKind::User(k), snr)))?)?;
                ls.extend(ls_nmse(&exp.system, &test)?);
                if !ce.is_empty() {
                    let idx = if exp.ce_per_user { k } else { 0 };
                    dnn.extend(dnn_nmse(&ce[idx], &test)?);
                }
            }
            push_row(&mut result, None, snr, ChannelFamily::Communication, Method::Ls, &ls);
            if !ce.is_empty() {
                push_row(&mut result, None, snr, ChannelFamily::Communication, Method::CeDnn, &dnn);
            }
        }
        info!("evaluated SNR {snr} dB");
    }
    finish(exp, &result, "eval", "NMSE versus SNR")?;
    Ok(result)
}

/// Trains fresh networks for one sweep point on the pooled training SNRs and
/// tests them at every sweep SNR.
fn sweep_point(
    exp: &ExperimentConfig,
    system: &SystemConfig,
    point_root: &RngStream,
    point: usize,
    skip_dnn: bool,
    result: &mut SweepResult,
) -> Result<()> {
    let fit = |kind: ChannelKind| -> Result<TrainedNetwork> {
        let raw = training_set(exp, system, kind, &exp.train_snrs_db, point_root)?;
        fit_and_log(exp, system, kind, raw, &fit_stream(point_root, kind))
    };
    let se = if exp.channels.sensing() && !skip_dnn {
        Some(fit(ChannelKind::Sensing)?)
    } else {
        None
    };
    let ce: Vec<TrainedNetwork> = if exp.channels.communication() && !skip_dnn {
        trained_users(exp)
            .into_iter()
            .map(|k| fit(ChannelKind::User(k)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };

    for (j, &snr_db) in exp.sweep_snrs_db.iter().enumerate() {
        if exp.channels.sensing() {
            let test = test_set(exp, system, ChannelKind::Sensing, snr_db, j, point_root)?;
            push_row(result, Some(point), snr_db, ChannelFamily::Sensing, Method::Ls, &ls_nmse(system, &test)?);
            if let Some(net) = &se {
                push_row(result, Some(point), snr_db, ChannelFamily::Sensing, Method::SeDnn, &dnn_nmse(net, &test)?);
            }
        }
        if exp.channels.communication() {
            let mut ls = Vec::new();
            let mut dnn = Vec::new();
            for k in 0..system.k {
                let test = test_set(exp, system, ChannelKind::User(k), snr_db, j, point_root)?;
                ls.extend(ls_nmse(system, &test)?);
                if !ce.is_empty() {
                    let idx = if exp.ce_per_user { k } else { 0 };
                    dnn.extend(dnn_nmse(&ce[idx], &test)?);
                }
            }
            push_row(result, Some(point), snr_db, ChannelFamily::Communication, Method::Ls, &ls);
            if !ce.is_empty() {
                push_row(result, Some(point), snr_db, ChannelFamily::Communication, Method::CeDnn, &dnn);
            }
        }
    }
    Ok(())
}

/// Communication NMSE against the IRS size. Writes `sweep_l.csv`.
pub fn cmd_sweep_l(exp: &ExperimentConfig, skip_dnn: bool) -> Result<SweepResult> {
    exp.validate()?;
    let comm_only = ExperimentConfig {
        channels: Channels::Communication,
        ..exp.clone()
    };
    let root = root(exp).derive(tags::SWEEP_L);
    let mut result = SweepResult::new(Some("l"));
    for &l in &exp.sweep_l {
        info!("sweep L = {l}");
        let system = exp.system.with_dims(exp.system.m, l);
        sweep_point(&comm_only, &system, &root.derive(l as u64), l, skip_dnn, &mut result)?;
    }
    finish(exp, &result, "sweep_l", "Communication NMSE versus L")?;
    Ok(result)
}

/// Sensing and communication NMSE against the antenna count, with the IRS
/// size fixed at `sweep_m_l`. Writes `sweep_m.csv`.
pub fn cmd_sweep_m(exp: &ExperimentConfig, skip_dnn: bool) -> Result<SweepResult> {
    exp.validate()?;
    let root = root(exp).derive(tags::SWEEP_M);
    let mut result = SweepResult::new(Some("m"));
    for &m in &exp.sweep_m {
        info!("sweep M = {m}");
        let system = exp.system.with_dims(m, exp.sweep_m_l);
        sweep_point(exp, &system, &root.derive(m as u64), m, skip_dnn, &mut result)?;
    }
    finish(exp, &result, "sweep_m", "NMSE versus M")?;
    Ok(result)
}

/// Path of a result file under the configured output directory.
pub fn output_file(exp: &ExperimentConfig, name: impl AsRef<Path>) -> PathBuf {
    exp.out_dir.join(name)
}
