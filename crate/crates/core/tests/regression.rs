use irs_isac::dataset::ChannelKind;
use irs_isac::experiment::{dnn_nmse, fit_network, mean, network_for, test_set, training_set, ExperimentConfig};
use irs_isac::numerics::RngStream;

#[test]
fn se_dnn_on_noiseless_desk_data() {
    let exp = ExperimentConfig::desk();
    let root = RngStream::new(exp.seed, 0);
    let kind = ChannelKind::Sensing;
    let noiseless = [f64::INFINITY];
    let raw = training_set(&exp, &exp.system, kind, &noiseless, &root).unwrap();
    assert_eq!(raw.len(), 500 * 4);
    let spec = network_for(&exp, &exp.system, kind).unwrap();
    let net = fit_network(&exp, spec, raw, &root.derive(100)).unwrap();
    let test = test_set(&exp, &exp.system, kind, f64::INFINITY, 0, &root).unwrap();
    let nmse = mean(&dnn_nmse(&net, &test).unwrap());
    println!("noiseless SE-DNN NMSE {nmse:.4e} after {} epochs", net.history.epochs.len());
    assert!(nmse < 1e-2, "NMSE {nmse:e}");
}
