use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use irs_isac::experiment::{cmd_eval, cmd_generate, cmd_sweep_l, cmd_sweep_m, cmd_train, ExperimentConfig, Profile};

#[derive(Parser)]
#[command(version, about = "Channel estimation experiments for IRS-assisted ISAC")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file applied on top of the profile.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, default_value = "desk")]
    profile: Profile,

    /// Only compute the LS baseline.
    #[arg(long, global = true)]
    skip_dnn: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Write training and test datasets.
    Generate,
    /// Train the SE-DNN and CE-DNN on generated data.
    Train,
    /// NMSE versus SNR for LS and the trained networks.
    Eval,
    /// Communication NMSE versus IRS size.
    SweepL,
    /// Sensing and communication NMSE versus antenna count.
    SweepM,
}

fn run(cli: Cli) -> irs_isac::Result<()> {
    let mut exp = ExperimentConfig::profile(cli.profile);
    if let Some(path) = &cli.config {
        exp.apply_file(path)?;
    }
    if let Some(seed) = cli.seed {
        exp.seed = seed;
    }
    if let Some(out) = cli.out {
        exp.out_dir = out;
    }
    let threads = std::env::var("IRS_ISAC_THREADS")
        .ok()
        .map(|v| v.parse::<usize>())
        .transpose()
        .map_err(|_| irs_isac::Error::Config("IRS_ISAC_THREADS must be a positive integer".into()))?
        .unwrap_or(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build_global()
        .map_err(|e| irs_isac::Error::Config(e.to_string()))?;

    match cli.command {
        Command::Generate => {
            let files = cmd_generate(&exp)?;
            println!("wrote {} files to {}", files.len(), exp.out_dir.display());
        }
        Command::Train => {
            if cli.skip_dnn {
                log::warn!("--skip-dnn has no effect on train");
            }
            for f in cmd_train(&exp)? {
                println!("{}", f.display());
            }
        }
        Command::Eval => print!("{}", cmd_eval(&exp, cli.skip_dnn)?.to_csv()),
        Command::SweepL => print!("{}", cmd_sweep_l(&exp, cli.skip_dnn)?.to_csv()),
        Command::SweepM => print!("{}", cmd_sweep_m(&exp, cli.skip_dnn)?.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
