//! Trains a reduced-width CE-DNN for user 0 and applies the shared network
//! to every user's test data.

use irs_isac::dataset::ChannelKind;
use irs_isac::experiment::{dnn_nmse, fit_network, ls_nmse, mean, network_for, test_set, training_set, ExperimentConfig};
use irs_isac::neuralnet::CeDnnWidths;
use irs_isac::numerics::RngStream;

fn main() -> irs_isac::Result<()> {
    let mut exp = ExperimentConfig::desk();
    exp.apply_text("l = 8\nv = 300\nmax_epochs = 40\n")?;
    exp.ce_widths = CeDnnWidths { filters1: 16, filters2: 8, dense: 128 };
    let system = &exp.system;
    let root = RngStream::new(exp.seed, 0);

    let raw = training_set(&exp, system, ChannelKind::User(0), &exp.train_snrs_db, &root)?;
    let spec = network_for(&exp, system, ChannelKind::User(0))?;
    println!("{}", spec.describe());
    let net = fit_network(&exp, spec, raw, &root.derive(100))?;
    println!("best validation loss {:.4e} at epoch {}", net.history.best_val_loss(), net.history.best_epoch);

    for snr_db in [0.0, 10.0] {
        for k in 0..system.k {
            let test = test_set(&exp, system, ChannelKind::User(k), snr_db, 0, &root)?;
            let ls = mean(&ls_nmse(system, &test)?);
            let dnn = mean(&dnn_nmse(&net, &test)?);
            println!("{snr_db:>4} dB user {k}: LS {ls:.3e}  CE-DNN {dnn:.3e}");
        }
    }
    Ok(())
}
