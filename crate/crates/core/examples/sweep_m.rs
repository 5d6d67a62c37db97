//! LS NMSE versus the number of BS antennas. Sensing LS does not depend on
//! M; pass `--dnn` to also train an SE-DNN and CE-DNN per grid point.

use irs_isac::experiment::{cmd_sweep_m, ExperimentConfig};

fn main() -> irs_isac::Result<()> {
    let with_dnn = std::env::args().any(|a| a == "--dnn");
    let mut exp = ExperimentConfig::desk();
    exp.apply_text("sweep_m = 2, 4, 8\nsweep_m_l = 8\nt_on = 500\nv = 200\nmax_epochs = 30\n")?;
    exp.out_dir = std::env::temp_dir().join("irs_isac_sweep_m");
    let result = cmd_sweep_m(&exp, !with_dnn)?;
    print!("{}", result.to_csv());
    Ok(())
}
