//! Draws one realization of every channel and prints its structure.

use irs_isac::channel::{draw_realization, linear_to_db, SystemConfig};
use irs_isac::numerics::{fro_norm_sq, RngStream};

fn main() -> irs_isac::Result<()> {
    let cfg = SystemConfig::default();
    let mut rng = RngStream::new(7, 0);
    let r = draw_realization(&cfg, &mut rng)?;

    println!("M = {}, L = {}, K = {}", cfg.m, cfg.l, cfg.k);
    println!(
        "path loss: sensing {:.1} dB, BS-IRS {:.1} dB, IRS-user {:.1} dB",
        linear_to_db(cfg.zeta_s()),
        linear_to_db(cfg.zeta_bi()),
        linear_to_db(cfg.zeta_iu())
    );
    println!("alpha_S = {:.4} (|alpha_S| = {:.4})", r.alpha_s, r.alpha_s.norm());
    println!("A is {:?}, ||A||_F^2 = {:.3e}", r.a.shape(), fro_norm_sq(&r.a));
    println!("G is {:?}, ||G||_F^2 / (ML) = {:.3e}", r.g.shape(), fro_norm_sq(&r.g) / (cfg.m * cfg.l) as f64);
    for (k, b) in r.b.iter().enumerate() {
        println!("B_{k} is {:?}, ||B_{k}||_F^2 / (ML) = {:.3e}", b.shape(), fro_norm_sq(b) / (cfg.m * cfg.l) as f64);
    }
    Ok(())
}
