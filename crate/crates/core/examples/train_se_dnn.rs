//! Trains the desk-scale SE-DNN on pooled 10/15/20 dB data and compares it
//! with LS on fresh test realizations, including noiseless ones.

use irs_isac::dataset::ChannelKind;
use irs_isac::experiment::{dnn_nmse, fit_network, ls_nmse, mean, network_for, test_set, training_set, ExperimentConfig};
use irs_isac::numerics::RngStream;

fn main() -> irs_isac::Result<()> {
    let exp = ExperimentConfig::desk();
    let system = &exp.system;
    let root = RngStream::new(exp.seed, 0);
    let kind = ChannelKind::Sensing;

    let raw = training_set(&exp, system, kind, &exp.train_snrs_db, &root)?;
    let spec = network_for(&exp, system, kind)?;
    println!("{} training samples, {} parameters", raw.len(), spec.param_count());
    let net = fit_network(&exp, spec, raw, &root.derive(100))?;
    println!(
        "stopped after {} epochs ({}), best epoch {}",
        net.history.epochs.len(),
        net.history.stop,
        net.history.best_epoch
    );

    println!("snr_db  LS         SE-DNN");
    for (i, snr_db) in [-10.0, 0.0, 5.0, 10.0, 20.0, f64::INFINITY].into_iter().enumerate() {
        let test = test_set(&exp, system, kind, snr_db, i, &root)?;
        let ls = mean(&ls_nmse(system, &test)?);
        let dnn = mean(&dnn_nmse(&net, &test)?);
        println!("{snr_db:>6}  {ls:.3e}  {dnn:.3e}");
    }
    Ok(())
}
