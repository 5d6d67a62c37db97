//! Communication LS NMSE versus IRS size against `1/((L-1) snr)`.

use irs_isac::channel::db_to_linear;
use irs_isac::experiment::{cmd_sweep_l, ExperimentConfig};

fn main() -> irs_isac::Result<()> {
    let mut exp = ExperimentConfig::desk();
    exp.apply_text("t_on = 1000\n")?;
    exp.out_dir = std::env::temp_dir().join("irs_isac_sweep_l");
    let result = cmd_sweep_l(&exp, true)?;
    for row in &result.rows {
        let l = row.point.unwrap_or(0);
        let oracle = 1.0 / ((l as f64 - 1.0) * db_to_linear(row.snr_db));
        println!("L = {l:>2}, {:>4} dB: LS {:.4e}, closed form {:.4e}", row.snr_db, row.nmse, oracle);
    }
    Ok(())
}
