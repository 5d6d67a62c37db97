//! Generates a small augmented dataset, splits and standardizes it, and
//! round-trips it through the binary file format.

use irs_isac::channel::SystemConfig;
use irs_isac::dataset::{
    generate_dataset, preprocess, split, target_to_channel, ChannelKind, Dataset, GenerationPlan, Role, DEFAULT_RHO,
};
use irs_isac::numerics::RngStream;

fn main() -> irs_isac::Result<()> {
    let cfg = SystemConfig::default().with_dims(4, 16);
    let snrs = [10.0, 15.0, 20.0];
    let plan = GenerationPlan {
        kind: ChannelKind::User(0),
        originals: 50,
        copies: 4,
        snrs_db: &snrs,
        snr_ch_db: 30.0,
        role: Role::Train,
    };
    let raw = generate_dataset(&cfg, &plan, &RngStream::new(11, 0))?;
    println!(
        "{} samples, input {} -> target {} ({:?} complex)",
        raw.len(),
        raw.input_len(),
        raw.target_len(),
        raw.target_shape()
    );
    let first = &raw.samples[0];
    println!("first sample: snr {} dB, v = {}, u = {}", first.snr_db, first.v, first.u);

    let (mut train, mut val, mut test) = split(raw, 0.9, 0.1, &mut RngStream::new(11, 1))?;
    let prep = preprocess(&mut train, &mut [&mut val, &mut test], DEFAULT_RHO)?;
    println!("split {} / {} / {}, target scale rho = {}", train.len(), val.len(), test.len(), prep.rho);

    let dir = std::env::temp_dir().join("irs_isac_dataset_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("train_user0.ds");
    train.save(&path)?;
    let back = Dataset::load(&path)?;
    println!("reloaded {} bytes, identical: {}", std::fs::metadata(&path)?.len(), back == train);

    let mut target = back.samples[0].target.clone();
    prep.unscale_target(&mut target);
    let (rows, cols) = back.target_shape();
    let b = target_to_channel(&target, rows, cols)?;
    println!("decoded channel {:?}, B[0,0] = {:.4e}", b.shape(), b[(0, 0)]);
    Ok(())
}
