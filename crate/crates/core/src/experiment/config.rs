//! Flat `key = value` experiment configuration.
//!
//! Lines starting with `#` and blank lines are ignored. Lists are comma
//! separated. Unknown keys are an error. A file is applied on top of a
//! profile, so it only needs the keys it changes.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::channel::SystemConfig;
use crate::error::{Error, Result};
use crate::neuralnet::{CeDnnWidths, TrainConfig, SE_HIDDEN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Profile {
    /// Reduced sizes that train on a laptop CPU in minutes.
    Desk,
    /// Full sizes from the reference setup.
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::config(format!("unknown profile `{other}` (expected desk or paper)"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

/// Which channel families a command works on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Channels {
    Both,
    Sensing,
    Communication,
}

impl Channels {
    pub fn sensing(self) -> bool {
        self != Channels::Communication
    }

    pub fn communication(self) -> bool {
        self != Channels::Sensing
    }
}

impl FromStr for Channels {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "both" => Ok(Channels::Both),
            "sensing" => Ok(Channels::Sensing),
            "communication" => Ok(Channels::Communication),
            other => Err(Error::config(format!(
                "unknown channel selection `{other}` (expected both, sensing or communication)"
            ))),
        }
    }
}

impl fmt::Display for Channels {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channels::Both => "both",
            Channels::Sensing => "sensing",
            Channels::Communication => "communication",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub train: TrainConfig,
    pub train_snrs_db: Vec<f64>,
    pub test_snrs_db: Vec<f64>,
    /// Original channel draws per training SNR (V).
    pub originals: usize,
    /// Samples per original including augmented copies (U).
    pub copies: usize,
    pub snr_ch_db: f64,
    /// Test realizations per test SNR (T_on).
    pub test_samples: usize,
    pub sweep_l: Vec<usize>,
    pub sweep_m: Vec<usize>,
    /// Test SNRs of the L and M sweeps. Each sweep point trains on the
    /// training SNR grid and is tested at every sweep SNR.
    pub sweep_snrs_db: Vec<f64>,
    /// IRS size held fixed during the M sweep.
    pub sweep_m_l: usize,
    pub rho: f64,
    pub se_hidden: usize,
    /// Multiplier on the Glorot-uniform limit used to initialize weights.
    pub init_gain: f64,
    pub ce_widths: CeDnnWidths,
    /// Train one CE-DNN per user instead of sharing the user-0 network.
    pub ce_per_user: bool,
    pub channels: Channels,
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Also write an SVG chart next to every result CSV.
    pub plot: bool,
}

/// Full-size Glorot weights project the many noise-dominated input
/// directions straight into the output, and Adam at the reference learning
/// rate removes them too slowly; starting ten times smaller trains to a
/// far lower noise floor.
pub const DEFAULT_INIT_GAIN: f64 = 0.1;

fn snr_range(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

impl ExperimentConfig {
    pub fn paper() -> Self {
        ExperimentConfig {
            system: SystemConfig::default(),
            train: TrainConfig::default(),
            train_snrs_db: snr_range(10.0, 20.0, 5.0),
            test_snrs_db: snr_range(-10.0, 20.0, 2.5),
            originals: 1000,
            copies: 10,
            snr_ch_db: 30.0,
            test_samples: 1000,
            sweep_l: vec![10, 15, 20, 25, 30],
            sweep_m: vec![2, 4, 6, 8],
            sweep_snrs_db: vec![5.0, 15.0],
            sweep_m_l: 15,
            rho: crate::dataset::DEFAULT_RHO,
            se_hidden: SE_HIDDEN,
            init_gain: DEFAULT_INIT_GAIN,
            ce_widths: CeDnnWidths::default(),
            ce_per_user: false,
            channels: Channels::Both,
            seed: 1,
            out_dir: PathBuf::from("out"),
            plot: false,
        }
    }

    pub fn desk() -> Self {
        let paper = ExperimentConfig::paper();
        ExperimentConfig {
            system: paper.system.with_dims(4, 16),
            train: TrainConfig {
                max_epochs: 100,
                ..paper.train.clone()
            },
            originals: 500,
            copies: 4,
            ce_widths: CeDnnWidths {
                filters1: 32,
                filters2: 16,
                dense: 256,
            },
            ..paper
        }
    }

    pub fn profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => ExperimentConfig::desk(),
            Profile::Paper => ExperimentConfig::paper(),
        }
    }

    /// Applies a config file on top of `self`.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut p_set = false;
        let mut c_set = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            p_set |= key == "p";
            c_set |= key == "c";
            self.set(key, value)
                .map_err(|e| Error::config(format!("line {}: {e}", lineno + 1)))?;
        }
        if !p_set {
            self.system.p = self.system.m;
        }
        if !c_set {
            self.system.c = self.system.l;
        }
        self.validate()
    }

    /// Sets one key. `p` and `c` are not re-derived here; see [`apply_text`].
    ///
    /// [`apply_text`]: ExperimentConfig::apply_text
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let s = &mut self.system;
        let t = &mut self.train;
        match key {
            "m" => s.m = parse(key, value)?,
            "l" => s.l = parse(key, value)?,
            "k" => s.k = parse(key, value)?,
            "p" => s.p = parse(key, value)?,
            "c" => s.c = parse(key, value)?,
            "theta_s" => s.theta_s = parse(key, value)?,
            "theta_b" => s.theta_b = parse(key, value)?,
            "theta_i" => s.theta_i = parse(key, value)?,
            "k_bi" => s.k_bi = parse(key, value)?,
            "k_iu" => s.k_iu = parse(key, value)?,
            "d_s" => s.d_s = parse(key, value)?,
            "d_bi" => s.d_bi = parse(key, value)?,
            "d_iu" => s.d_iu = parse(key, value)?,
            "gamma_s" => s.gamma_s = parse(key, value)?,
            "gamma_bi" => s.gamma_bi = parse(key, value)?,
            "gamma_iu" => s.gamma_iu = parse(key, value)?,
            "zeta0_db" => s.zeta0_db = parse(key, value)?,
            "d0" => s.d0 = parse(key, value)?,
            "p0_dbm" => s.p0_dbm = parse(key, value)?,
            "spacing_ratio" => s.spacing_ratio = parse(key, value)?,
            "learning_rate" => t.learning_rate = parse(key, value)?,
            "batch_size" => t.batch_size = parse(key, value)?,
            "max_epochs" => t.max_epochs = parse(key, value)?,
            "patience" => t.patience = parse(key, value)?,
            "beta1" => t.beta1 = parse(key, value)?,
            "beta2" => t.beta2 = parse(key, value)?,
            "epsilon" => t.epsilon = parse(key, value)?,
            "train_snrs_db" => self.train_snrs_db = parse_list(key, value)?,
            "test_snrs_db" => self.test_snrs_db = parse_list(key, value)?,
            "v" => self.originals = parse(key, value)?,
            "u" => self.copies = parse(key, value)?,
            "snr_ch_db" => self.snr_ch_db = parse(key, value)?,
            "t_on" => self.test_samples = parse(key, value)?,
            "sweep_l" => self.sweep_l = parse_list(key, value)?,
            "sweep_m" => self.sweep_m = parse_list(key, value)?,
            "sweep_snrs_db" => self.sweep_snrs_db = parse_list(key, value)?,
            "sweep_m_l" => self.sweep_m_l = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "se_hidden" => self.se_hidden = parse(key, value)?,
            "init_gain" => self.init_gain = parse(key, value)?,
            "ce_filters1" => self.ce_widths.filters1 = parse(key, value)?,
            "ce_filters2" => self.ce_widths.filters2 = parse(key, value)?,
            "ce_dense" => self.ce_widths.dense = parse(key, value)?,
            "ce_per_user" => self.ce_per_user = parse(key, value)?,
            "channels" => self.channels = value.parse()?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "plot" => self.plot = parse(key, value)?,
            _ => return Err(Error::config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.train.validate()?;
        let grids = [
            ("train_snrs_db", self.train_snrs_db.is_empty()),
            ("test_snrs_db", self.test_snrs_db.is_empty()),
            ("sweep_l", self.sweep_l.is_empty()),
            ("sweep_m", self.sweep_m.is_empty()),
            ("sweep_snrs_db", self.sweep_snrs_db.is_empty()),
        ];
        if let Some((name, _)) = grids.iter().find(|(_, empty)| *empty) {
            return Err(Error::config(format!("{name} must not be empty")));
        }
        let all_snrs = self
            .train_snrs_db
            .iter()
            .chain(&self.test_snrs_db)
            .chain(&self.sweep_snrs_db)
            .chain(std::iter::once(&self.snr_ch_db));
        if all_snrs.clone().any(|x| !x.is_finite()) {
            return Err(Error::config("SNR values must be finite"));
        }
        if self.originals == 0 || self.copies == 0 || self.test_samples == 0 {
            return Err(Error::config("V, U and T_on must be at least 1"));
        }
        if self.originals * self.copies < self.train.batch_size {
            return Err(Error::config(format!(
                "V*U = {} is smaller than the batch size {}",
                self.originals * self.copies,
                self.train.batch_size
            )));
        }
        if self.sweep_l.contains(&0) || self.sweep_m.contains(&0) || self.sweep_m_l == 0 {
            return Err(Error::config("sweep dimensions must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config("rho must be positive"));
        }
        if !(self.init_gain > 0.0 && self.init_gain.is_finite()) {
            return Err(Error::config("init_gain must be positive"));
        }
        if self.se_hidden == 0 || self.ce_widths.filters1 == 0 || self.ce_widths.filters2 == 0 || self.ce_widths.dense == 0 {
            return Err(Error::config("layer widths must be at least 1"));
        }
        Ok(())
    }

    /// Every key with its current value, in a form [`apply_text`] accepts.
    ///
    /// [`apply_text`]: ExperimentConfig::apply_text
    pub fn to_text(&self) -> String {
        let s = &self.system;
        let t = &self.train;
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let ulist = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let lines = [
            format!("m = {}", s.m),
            format!("l = {}", s.l),
            format!("k = {}", s.k),
            format!("p = {}", s.p),
            format!("c = {}", s.c),
            format!("theta_s = {}", s.theta_s),
            format!("theta_b = {}", s.theta_b),
            format!("theta_i = {}", s.theta_i),
            format!("k_bi = {}", s.k_bi),
            format!("k_iu = {}", s.k_iu),
            format!("d_s = {}", s.d_s),
            format!("d_bi = {}", s.d_bi),
            format!("d_iu = {}", s.d_iu),
            format!("gamma_s = {}", s.gamma_s),
            format!("gamma_bi = {}", s.gamma_bi),
            format!("gamma_iu = {}", s.gamma_iu),
            format!("zeta0_db = {}", s.zeta0_db),
            format!("d0 = {}", s.d0),
            format!("p0_dbm = {}", s.p0_dbm),
            format!("spacing_ratio = {}", s.spacing_ratio),
            format!("learning_rate = {}", t.learning_rate),
            format!("batch_size = {}", t.batch_size),
            format!("max_epochs = {}", t.max_epochs),
            format!("patience = {}", t.patience),
            format!("beta1 = {}", t.beta1),
            format!("beta2 = {}", t.beta2),
            format!("epsilon = {}", t.epsilon),
            format!("train_snrs_db = {}", list(&self.train_snrs_db)),
            format!("test_snrs_db = {}", list(&self.test_snrs_db)),
            format!("v = {}", self.originals),
            format!("u = {}", self.copies),
            format!("snr_ch_db = {}", self.snr_ch_db),
            format!("t_on = {}", self.test_samples),
            format!("sweep_l = {}", ulist(&self.sweep_l)),
            format!("sweep_m = {}", ulist(&self.sweep_m)),
            format!("sweep_snrs_db = {}", list(&self.sweep_snrs_db)),
            format!("sweep_m_l = {}", self.sweep_m_l),
            format!("rho = {}", self.rho),
            format!("se_hidden = {}", self.se_hidden),
            format!("init_gain = {}", self.init_gain),
            format!("ce_filters1 = {}", self.ce_widths.filters1),
            format!("ce_filters2 = {}", self.ce_widths.filters2),
            format!("ce_dense = {}", self.ce_widths.dense),
            format!("ce_per_user = {}", self.ce_per_user),
            format!("channels = {}", self.channels),
            format!("seed = {}", self.seed),
            format!("out = {}", self.out_dir.display()),
            format!("plot = {}", self.plot),
        ];
        let mut text = lines.join("\n");
        text.push('\n');
        text
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::config(format!("cannot parse `{value}` for key `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}
