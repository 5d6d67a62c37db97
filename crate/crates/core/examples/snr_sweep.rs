//! The full generate / train / eval pipeline on a reduced configuration,
//! writing files to a temporary directory and printing the result CSV.

use irs_isac::experiment::{cmd_eval, cmd_generate, cmd_train, ExperimentConfig};
use irs_isac::neuralnet::CeDnnWidths;

fn main() -> irs_isac::Result<()> {
    let mut exp = ExperimentConfig::desk();
    exp.apply_text(
        "l = 8\n\
         v = 200\n\
         max_epochs = 60\n\
         t_on = 200\n\
         test_snrs_db = -5, 0, 5, 10, 15\n\
         plot = true\n",
    )?;
    exp.ce_widths = CeDnnWidths { filters1: 16, filters2: 8, dense: 128 };
    exp.out_dir = std::env::temp_dir().join("irs_isac_snr_sweep");

    let files = cmd_generate(&exp)?;
    println!("generated {} files in {}", files.len(), exp.out_dir.display());
    cmd_train(&exp)?;
    let result = cmd_eval(&exp, false)?;
    print!("{}", result.to_csv());
    Ok(())
}
