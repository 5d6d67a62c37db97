//! Monte-Carlo LS NMSE against its closed forms.

use irs_isac::channel::{db_to_linear, draw_realization, SystemConfig};
use irs_isac::estimators::{ls_comm, ls_sense, nmse};
use irs_isac::numerics::RngStream;
use irs_isac::protocol::{build_pilots, receive_sensing, receive_user, sensing_noise_var, user_noise_var};

fn main() -> irs_isac::Result<()> {
    let cfg = SystemConfig::default();
    let pilots = build_pilots(&cfg)?;
    let trials = 2000;
    let root = RngStream::new(3, 0);

    println!("snr_db  sensing    1/(C snr)  comm       1/((L-1) snr)");
    for (i, snr_db) in [0.0, 5.0, 10.0, 20.0].into_iter().enumerate() {
        let mut rng = root.derive(i as u64);
        let (mut s, mut c) = (0.0, 0.0);
        for _ in 0..trials {
            let r = draw_realization(&cfg, &mut rng)?;
            let y = receive_sensing(&r.a, &pilots, sensing_noise_var(&cfg, snr_db), &mut rng)?;
            s += nmse(&ls_sense(&y, &pilots)?, &r.a)?;
            let z = receive_user(&r.b[0], 0, &pilots, user_noise_var(&cfg, snr_db), &mut rng)?;
            c += nmse(&ls_comm(&z, &pilots)?, &r.b[0])?;
        }
        let snr = db_to_linear(snr_db);
        println!(
            "{snr_db:>6}  {:.3e}  {:.3e}  {:.3e}  {:.3e}",
            s / trials as f64,
            1.0 / (cfg.c as f64 * snr),
            c / trials as f64,
            1.0 / ((cfg.l - 1) as f64 * snr)
        );
    }
    Ok(())
}
