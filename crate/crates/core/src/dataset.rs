//! Training data for the estimation networks.
//!
//! A sample pairs the received pilot observations (flattened into a real
//! vector, real parts first, then imaginary parts) with the flattened
//! ground-truth channel. Augmented copies re-simulate the pilots through a
//! noise-corrupted channel but keep the clean channel as their label.

use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::channel::{db_to_linear, draw_comm_channels, draw_sensing_channel, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{fro_norm_sq, randn_complex, unvec, vec, CMat, RngStream};
use crate::protocol::{
    build_pilots, receive_sensing, receive_user, sensing_noise_var, user_noise_var, PilotConfig,
    SensingFrames, UserFrames,
};

/// Output scaling applied to network targets.
pub const DEFAULT_RHO: f64 = 1e4;
/// Standard deviations below this are treated as constant features.
pub const STD_FLOOR: f64 = 1e-12;

const DATASET_MAGIC: &str = "IRSISAC-DS1";
const STATS_MAGIC: &str = "IRSISAC-ST1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    Sensing,
    User(usize),
}

impl ChannelKind {
    fn parse(s: &str) -> Option<Self> {
        if s == "sensing" {
            return Some(ChannelKind::Sensing);
        }
        s.strip_prefix("user")?.parse().ok().map(ChannelKind::User)
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelKind::Sensing => f.write_str("sensing"),
            ChannelKind::User(k) => write!(f, "user{k}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    fn code(self) -> u8 {
        match self {
            Role::Train => 0,
            Role::Validation => 1,
            Role::Test => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(Role::Train),
            1 => Some(Role::Validation),
            2 => Some(Role::Test),
            _ => None,
        }
    }
}

/// Array dimensions a dataset was generated for.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dims {
    pub m: usize,
    pub p: usize,
    pub c: usize,
    pub l: usize,
}

impl Dims {
    pub fn of(cfg: &SystemConfig) -> Self {
        Dims {
            m: cfg.m,
            p: cfg.p,
            c: cfg.c,
            l: cfg.l,
        }
    }

    pub fn input_len(&self, kind: ChannelKind) -> usize {
        match kind {
            ChannelKind::Sensing => 2 * self.m * self.p * self.c,
            ChannelKind::User(_) => 2 * self.p * self.c,
        }
    }

    pub fn target_len(&self, kind: ChannelKind) -> usize {
        let (r, c) = self.target_shape(kind);
        2 * r * c
    }

    /// Shape of the complex channel a target vector encodes.
    pub fn target_shape(&self, kind: ChannelKind) -> (usize, usize) {
        match kind {
            ChannelKind::Sensing => (self.m, self.m),
            ChannelKind::User(_) => (self.m, self.l),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    pub snr_db: f64,
    /// 1-based index of the original channel draw.
    pub v: u64,
    /// 1-based copy index; `u == 1` is the unaugmented original.
    pub u: u64,
}

/// Training-set statistics plus the target scale, reused verbatim at
/// inference time.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessing {
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    pub rho: f64,
}

impl Preprocessing {
    pub fn fit(samples: &[Sample], rho: f64) -> Result<Self> {
        let first = samples.first().ok_or(Error::EmptyDataset)?;
        let width = first.input.len();
        let n = samples.len() as f64;
        let mut mean = vec![0.0; width];
        for s in samples {
            for (m, x) in mean.iter_mut().zip(&s.input) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; width];
        for s in samples {
            for ((v, x), m) in var.iter_mut().zip(&s.input).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Preprocessing {
            feature_mean: mean,
            feature_std: std,
            rho,
        })
    }

    /// z-scores `input` in place; floored features map to 0.
    pub fn standardize(&self, input: &mut [f64]) -> Result<()> {
        if input.len() != self.feature_mean.len() {
            return Err(Error::shape(format!(
                "input of length {} against statistics of length {}",
                input.len(),
                self.feature_mean.len()
            )));
        }
        for ((x, m), s) in input.iter_mut().zip(&self.feature_mean).zip(&self.feature_std) {
            *x = if *s <= STD_FLOOR { 0.0 } else { (*x - m) / s };
        }
        Ok(())
    }

    pub fn scale_target(&self, target: &mut [f64]) {
        target.iter_mut().for_each(|t| *t *= self.rho);
    }

    pub fn unscale_target(&self, target: &mut [f64]) {
        target.iter_mut().for_each(|t| *t /= self.rho);
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        writeln!(w, "{STATS_MAGIC},{}", self.feature_mean.len())?;
        put_f64(w, self.rho)?;
        put_f64s(w, &self.feature_mean)?;
        put_f64s(w, &self.feature_std)?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        let mut r = BufReader::new(bytes.as_slice());
        let header = read_header(&mut r, path)?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() != 2 || fields[0] != STATS_MAGIC {
            return Err(Error::format(path, "not a statistics file"));
        }
        let len: usize = parse_field(fields[1], path)?;
        let rho = get_f64(&mut r, path)?;
        let feature_mean = get_f64s(&mut r, len, path)?;
        let feature_std = get_f64s(&mut r, len, path)?;
        expect_eof(&mut r, path)?;
        Ok(Preprocessing {
            feature_mean,
            feature_std,
            rho,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub kind: ChannelKind,
    pub dims: Dims,
    pub role: Role,
    pub samples: Vec<Sample>,
    /// Set once the inputs are standardized and the targets scaled.
    pub preprocessing: Option<Preprocessing>,
}

impl Dataset {
    pub fn new(kind: ChannelKind, dims: Dims, role: Role) -> Self {
        Dataset {
            kind,
            dims,
            role,
            samples: Vec::new(),
            preprocessing: None,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn input_len(&self) -> usize {
        self.dims.input_len(self.kind)
    }

    pub fn target_len(&self) -> usize {
        self.dims.target_len(self.kind)
    }

    pub fn target_shape(&self) -> (usize, usize) {
        self.dims.target_shape(self.kind)
    }

    /// Concatenates datasets of the same kind and dimensions.
    pub fn concat(parts: Vec<Dataset>) -> Result<Dataset> {
        let mut iter = parts.into_iter();
        let mut out = iter.next().ok_or(Error::EmptyDataset)?;
        for part in iter {
            if part.dims != out.dims || part.kind != out.kind {
                return Err(Error::shape("cannot concatenate datasets of different shapes"));
            }
            if part.preprocessing != out.preprocessing {
                return Err(Error::shape("cannot concatenate differently preprocessed datasets"));
            }
            out.samples.extend(part.samples);
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    /// Text header, sample-major `f64` payload, `(snr, v, u)` metadata, then
    /// the role and optional preprocessing block. All numbers little-endian.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let (il, tl) = (self.input_len(), self.target_len());
        writeln!(
            w,
            "{DATASET_MAGIC},{},{},{},{},{},{},{il},{tl}",
            self.kind, self.dims.m, self.dims.p, self.dims.c, self.dims.l,
            self.samples.len()
        )?;
        for s in &self.samples {
            if s.input.len() != il || s.target.len() != tl {
                return Err(Error::shape("sample length disagrees with dataset dimensions"));
            }
            put_f64s(w, &s.input)?;
            put_f64s(w, &s.target)?;
        }
        for s in &self.samples {
            put_f64(w, s.snr_db)?;
            w.write_all(&s.v.to_le_bytes())?;
            w.write_all(&s.u.to_le_bytes())?;
        }
        w.write_all(&[self.role.code()])?;
        match &self.preprocessing {
            None => w.write_all(&[0])?,
            Some(p) => {
                w.write_all(&[1])?;
                put_f64(w, p.rho)?;
                put_f64s(w, &p.feature_mean)?;
                put_f64s(w, &p.feature_std)?;
            }
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Dataset> {
        let bytes = read_file(path)?;
        Dataset::from_bytes(&bytes, path)
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Dataset> {
        let mut r = BufReader::new(bytes);
        let header = read_header(&mut r, origin)?;
        let f: Vec<&str> = header.split(',').collect();
        if f.len() != 9 || f[0] != DATASET_MAGIC {
            return Err(Error::format(origin, "not a dataset file"));
        }
        let kind = ChannelKind::parse(f[1])
            .ok_or_else(|| Error::format(origin, format!("unknown channel kind {}", f[1])))?;
        let dims = Dims {
            m: parse_field(f[2], origin)?,
            p: parse_field(f[3], origin)?,
            c: parse_field(f[4], origin)?,
            l: parse_field(f[5], origin)?,
        };
        let count: usize = parse_field(f[6], origin)?;
        let il: usize = parse_field(f[7], origin)?;
        let tl: usize = parse_field(f[8], origin)?;
        if il != dims.input_len(kind) || tl != dims.target_len(kind) {
            return Err(Error::format(origin, "vector lengths disagree with dimensions"));
        }
        let mut samples = Vec::with_capacity(count);
        for _ in 0..count {
            let input = get_f64s(&mut r, il, origin)?;
            let target = get_f64s(&mut r, tl, origin)?;
            samples.push(Sample {
                input,
                target,
                snr_db: 0.0,
                v: 0,
                u: 0,
            });
        }
        for s in &mut samples {
            s.snr_db = get_f64(&mut r, origin)?;
            s.v = get_u64(&mut r, origin)?;
            s.u = get_u64(&mut r, origin)?;
        }
        let role = Role::from_code(get_u8(&mut r, origin)?)
            .ok_or_else(|| Error::format(origin, "bad role tag"))?;
        let preprocessing = match get_u8(&mut r, origin)? {
            0 => None,
            1 => {
                let rho = get_f64(&mut r, origin)?;
                let feature_mean = get_f64s(&mut r, il, origin)?;
                let feature_std = get_f64s(&mut r, il, origin)?;
                Some(Preprocessing {
                    feature_mean,
                    feature_std,
                    rho,
                })
            }
            _ => return Err(Error::format(origin, "bad preprocessing flag")),
        };
        expect_eof(&mut r, origin)?;
        Ok(Dataset {
            kind,
            dims,
            role,
            samples,
            preprocessing,
        })
    }
}

/// `[Re(vec H); Im(vec H)]`.
pub fn channel_to_target(h: &CMat) -> Vec<f64> {
    split_re_im(&vec(h))
}

/// Inverse of [`channel_to_target`].
pub fn target_to_channel(target: &[f64], rows: usize, cols: usize) -> Result<CMat> {
    if target.len() != 2 * rows * cols {
        return Err(Error::shape(format!(
            "target of length {} cannot encode a {rows}x{cols} channel",
            target.len()
        )));
    }
    unvec(&join_re_im(target), rows, cols)
}

fn split_re_im(v: &[Complex64]) -> Vec<f64> {
    v.iter().map(|z| z.re).chain(v.iter().map(|z| z.im)).collect()
}

fn join_re_im(x: &[f64]) -> Vec<Complex64> {
    let half = x.len() / 2;
    x[..half]
        .iter()
        .zip(&x[half..])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect()
}

/// Input from `[Re vec[Y_1..Y_C]; Im vec[Y_1..Y_C]]`, target from `vec A`.
pub fn build_sensing_pair(frames: &SensingFrames, a: &CMat) -> Result<Sample> {
    let stacked = CMat::hcat(&frames.y)?;
    Ok(Sample {
        input: split_re_im(&vec(&stacked)),
        target: channel_to_target(a),
        snr_db: 0.0,
        v: 1,
        u: 1,
    })
}

/// Input from `[Re [z_1..z_C]; Im [z_1..z_C]]`, target from `vec B_k`.
pub fn build_user_pair(frames: &UserFrames, b: &CMat) -> Result<Sample> {
    let row: Vec<Complex64> = frames.z.iter().flatten().copied().collect();
    Ok(Sample {
        input: split_re_im(&row),
        target: channel_to_target(b),
        snr_db: 0.0,
        v: 1,
        u: 1,
    })
}

/// Recovers the sensing frames encoded in a raw (unstandardized) input.
pub fn sensing_frames_from_input(input: &[f64], dims: Dims, sigma2: f64) -> Result<SensingFrames> {
    if input.len() != dims.input_len(ChannelKind::Sensing) {
        return Err(Error::shape("sensing input length mismatch"));
    }
    let stacked = unvec(&join_re_im(input), dims.m, dims.p * dims.c)?;
    crate::estimators::split_sensing_blocks(&stacked, dims.p, sigma2)
}

/// Recovers the user frames encoded in a raw (unstandardized) input.
pub fn user_frames_from_input(
    input: &[f64],
    dims: Dims,
    user: usize,
    varsigma2: f64,
) -> Result<UserFrames> {
    if input.len() != dims.input_len(ChannelKind::User(user)) {
        return Err(Error::shape("user input length mismatch"));
    }
    let z = join_re_im(input)
        .chunks(dims.p)
        .map(<[Complex64]>::to_vec)
        .collect();
    Ok(UserFrames {
        z,
        varsigma2,
        user,
    })
}

/// `H + N` with `N ~ CN(0, σ_ch²)`, `σ_ch² = P_ch / SNR_ch` and `P_ch` the mean
/// per-entry power of `H`.
pub fn augment_channel(h: &CMat, snr_ch_db: f64, rng: &mut RngStream) -> Result<CMat> {
    let energy = fro_norm_sq(h);
    if energy <= 0.0 {
        return Err(Error::ZeroChannel);
    }
    let p_ch = energy / (h.rows() * h.cols()) as f64;
    let var = p_ch / db_to_linear(snr_ch_db);
    Ok(h + &randn_complex(h.rows(), h.cols(), var, rng))
}

/// Size and SNR schedule of a generated dataset.
#[derive(Clone, Debug)]
pub struct GenerationPlan<'a> {
    pub kind: ChannelKind,
    /// Original channel draws per SNR.
    pub originals: usize,
    /// Samples per original, counting the original itself.
    pub copies: usize,
    pub snrs_db: &'a [f64],
    pub snr_ch_db: f64,
    pub role: Role,
}

/// Generates `originals * copies` samples per SNR.
///
/// Sample `(v, u)` at SNR index `i` draws from the stream
/// `rng.derive(i).derive(v)`, so the result does not depend on how many
/// threads rayon uses.
pub fn generate_dataset(cfg: &SystemConfig, plan: &GenerationPlan<'_>, rng: &RngStream) -> Result<Dataset> {
    if plan.originals == 0 || plan.copies == 0 {
        return Err(Error::config("V and U must be at least 1"));
    }
    if let ChannelKind::User(k) = plan.kind {
        if k >= cfg.k {
            return Err(Error::config(format!("user {k} out of range for K = {}", cfg.k)));
        }
    }
    let pilots = build_pilots(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..plan.snrs_db.len())
        .flat_map(|i| (0..plan.originals).map(move |v| (i, v)))
        .collect();
    let groups: Vec<Vec<Sample>> = jobs
        .par_iter()
        .map(|&(i, v)| {
            let mut stream = rng.derive(i as u64).derive(v as u64);
            draw_sample_group(cfg, &pilots, plan, plan.snrs_db[i], v, &mut stream)
        })
        .collect::<Result<_>>()?;
    let mut ds = Dataset::new(plan.kind, Dims::of(cfg), plan.role);
    ds.samples = groups.into_iter().flatten().collect();
    Ok(ds)
}

fn draw_sample_group(
    cfg: &SystemConfig,
    pilots: &PilotConfig,
    plan: &GenerationPlan<'_>,
    snr_db: f64,
    v: usize,
    rng: &mut RngStream,
) -> Result<Vec<Sample>> {
    let truth = match plan.kind {
        ChannelKind::Sensing => draw_sensing_channel(cfg, rng).0,
        ChannelKind::User(k) => draw_comm_channels(cfg, rng)?.b.swap_remove(k),
    };
    let mut out = Vec::with_capacity(plan.copies);
    for u in 0..plan.copies {
        let through = if u == 0 {
            truth.clone()
        } else {
            augment_channel(&truth, plan.snr_ch_db, rng)?
        };
        let mut sample = match plan.kind {
            ChannelKind::Sensing => {
                let frames = receive_sensing(&through, pilots, sensing_noise_var(cfg, snr_db), rng)?;
                build_sensing_pair(&frames, &truth)?
            }
            ChannelKind::User(k) => {
                let frames = receive_user(&through, k, pilots, user_noise_var(cfg, snr_db), rng)?;
                build_user_pair(&frames, &truth)?
            }
        };
        sample.snr_db = snr_db;
        sample.v = v as u64 + 1;
        sample.u = u as u64 + 1;
        out.push(sample);
    }
    Ok(out)
}

/// Standardizes every dataset with statistics fitted on `train` alone and
/// scales all targets by `rho`.
pub fn preprocess(train: &mut Dataset, others: &mut [&mut Dataset], rho: f64) -> Result<Preprocessing> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let prep = Preprocessing::fit(&train.samples, rho)?;
    apply_preprocessing(train, &prep)?;
    for ds in others.iter_mut() {
        apply_preprocessing(ds, &prep)?;
    }
    Ok(prep)
}

/// Applies previously fitted statistics to a raw dataset.
pub fn apply_preprocessing(ds: &mut Dataset, prep: &Preprocessing) -> Result<()> {
    if ds.preprocessing.is_some() {
        return Err(Error::config("dataset is already preprocessed"));
    }
    for s in &mut ds.samples {
        prep.standardize(&mut s.input)?;
        prep.scale_target(&mut s.target);
    }
    ds.preprocessing = Some(prep.clone());
    Ok(())
}

/// Shuffled partition into `(train, validation, test)`. The validation set is
/// carved out of the training share.
pub fn split(
    ds: Dataset,
    train_frac: f64,
    val_frac_of_train: f64,
    rng: &mut RngStream,
) -> Result<(Dataset, Dataset, Dataset)> {
    let in_unit = |x: f64| x > 0.0 && x < 1.0;
    if !in_unit(train_frac) || !in_unit(val_frac_of_train) {
        return Err(Error::config("split fractions must lie in (0, 1)"));
    }
    let n = ds.len();
    let n_train_total = (n as f64 * train_frac).round() as usize;
    let n_val = (n_train_total as f64 * val_frac_of_train).round() as usize;
    let n_train = n_train_total - n_val;

    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut slots: Vec<Option<Sample>> = ds.samples.into_iter().map(Some).collect();
    let mut take = |idx: &[usize]| -> Vec<Sample> {
        idx.iter()
            .map(|&i| slots[i].take().expect("index used twice"))
            .collect()
    };
    let part = |role: Role, samples: Vec<Sample>| Dataset {
        kind: ds.kind,
        dims: ds.dims,
        role,
        samples,
        preprocessing: ds.preprocessing.clone(),
    };
    let train = take(&order[..n_train]);
    let val = take(&order[n_train..n_train_total]);
    let test = take(&order[n_train_total..]);
    Ok((
        part(Role::Train, train),
        part(Role::Validation, val),
        part(Role::Test, test),
    ))
}

// Binary helpers shared with the parameter file format.

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(Error::Missing(path.to_path_buf())),
        Err(e) => Err(e.into()),
    }
}

pub(crate) fn read_header(r: &mut impl BufRead, path: &Path) -> Result<String> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    if line.pop() != Some(b'\n') {
        return Err(Error::format(path, "missing header line"));
    }
    String::from_utf8(line).map_err(|_| Error::format(path, "header is not UTF-8"))
}

pub(crate) fn parse_field<T: std::str::FromStr>(s: &str, path: &Path) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::format(path, format!("bad header field {s:?}")))
}

pub(crate) fn put_f64(w: &mut impl Write, x: f64) -> Result<()> {
    w.write_all(&x.to_le_bytes())?;
    Ok(())
}

pub(crate) fn put_f64s(w: &mut impl Write, xs: &[f64]) -> Result<()> {
    let mut buf = Vec::with_capacity(xs.len() * 8);
    for x in xs {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_exact_or_truncated(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::format(path, "truncated file")
        } else {
            e.into()
        }
    })
}

pub(crate) fn get_f64(r: &mut impl Read, path: &Path) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b, path)?;
    Ok(f64::from_le_bytes(b))
}

fn get_u64(r: &mut impl Read, path: &Path) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact_or_truncated(r, &mut b, path)?;
    Ok(u64::from_le_bytes(b))
}

fn get_u8(r: &mut impl Read, path: &Path) -> Result<u8> {
    let mut b = [0u8; 1];
    read_exact_or_truncated(r, &mut b, path)?;
    Ok(b[0])
}

pub(crate) fn get_f64s(r: &mut impl Read, n: usize, path: &Path) -> Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 8];
    read_exact_or_truncated(r, &mut buf, path)?;
    Ok(buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub(crate) fn expect_eof(r: &mut impl Read, path: &Path) -> Result<()> {
    let mut extra = [0u8; 1];
    match r.read(&mut extra)? {
        0 => Ok(()),
        _ => Err(Error::format(path, "trailing bytes after payload")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::sensing_channel;
    use std::path::PathBuf;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn small_cfg() -> SystemConfig {
        SystemConfig::default().with_dims(2, 3)
    }

    fn plan(kind: ChannelKind, v: usize, u: usize, snrs: &[f64]) -> GenerationPlan<'_> {
        GenerationPlan {
            kind,
            originals: v,
            copies: u,
            snrs_db: snrs,
            snr_ch_db: 30.0,
            role: Role::Train,
        }
    }

    #[test]
    fn scalar_sensing_pair() {
        let frames = SensingFrames {
            y: vec![CMat::from_rows(&[vec![c(3.0, 4.0)]])],
            sigma2: 0.0,
        };
        let a = CMat::from_rows(&[vec![c(1.0, -1.0)]]);
        let s = build_sensing_pair(&frames, &a).unwrap();
        assert_eq!(s.input, vec![3.0, 4.0]);
        assert_eq!(s.target, vec![1.0, -1.0]);
    }

    #[test]
    fn scalar_user_pair() {
        let frames = UserFrames {
            z: vec![vec![c(2.0, -1.0)]],
            varsigma2: 0.0,
            user: 0,
        };
        let s = build_user_pair(&frames, &CMat::from_rows(&[vec![c(0.5, 0.25)]])).unwrap();
        assert_eq!(s.input, vec![2.0, -1.0]);
        assert_eq!(s.target, vec![0.5, 0.25]);
    }

    #[test]
    fn table_lengths() {
        let dims = Dims {
            m: 4,
            p: 4,
            c: 30,
            l: 30,
        };
        assert_eq!(dims.input_len(ChannelKind::Sensing), 960);
        assert_eq!(dims.target_len(ChannelKind::Sensing), 32);
        assert_eq!(dims.input_len(ChannelKind::User(0)), 240);
        assert_eq!(dims.target_len(ChannelKind::User(0)), 240);
    }

    #[test]
    fn sensing_input_matches_stacked_signal() {
        let cfg = small_cfg();
        let pilots = build_pilots(&cfg).unwrap();
        let mut rng = RngStream::new(1, 0);
        let (a, _) = draw_sensing_channel(&cfg, &mut rng);
        let frames = receive_sensing(&a, &pilots, sensing_noise_var(&cfg, 5.0), &mut rng).unwrap();
        let s = build_sensing_pair(&frames, &a).unwrap();
        let stacked = CMat::hcat(&frames.y).unwrap();
        let n = stacked.as_slice().len();
        for (i, z) in stacked.as_slice().iter().enumerate() {
            assert_eq!(s.input[i], z.re);
            assert_eq!(s.input[n + i], z.im);
        }
        let back = sensing_frames_from_input(&s.input, Dims::of(&cfg), frames.sigma2).unwrap();
        assert_eq!(back.y, frames.y);
    }

    #[test]
    fn user_input_roundtrip() {
        let cfg = small_cfg();
        let pilots = build_pilots(&cfg).unwrap();
        let mut rng = RngStream::new(2, 0);
        let ch = draw_comm_channels(&cfg, &mut rng).unwrap();
        let frames = receive_user(&ch.b[2], 2, &pilots, user_noise_var(&cfg, 5.0), &mut rng).unwrap();
        let s = build_user_pair(&frames, &ch.b[2]).unwrap();
        assert_eq!(s.input.len(), 2 * cfg.p * cfg.c);
        let back = user_frames_from_input(&s.input, Dims::of(&cfg), 2, 0.0).unwrap();
        assert_eq!(back.z, frames.z);
    }

    #[test]
    fn target_codec_roundtrip() {
        let h = randn_complex(3, 5, 1.0, &mut RngStream::new(0, 3));
        let t = channel_to_target(&h);
        assert_eq!(target_to_channel(&t, 3, 5).unwrap(), h);
        assert!(target_to_channel(&t, 5, 5).is_err());
    }

    #[test]
    fn augmentation_limits() {
        let cfg = small_cfg();
        let h = sensing_channel(&cfg, c(0.6, 0.8));
        let p_ch = fro_norm_sq(&h) / 4.0;
        let mut rng = RngStream::new(3, 3);
        let same = augment_channel(&h, 400.0, &mut rng).unwrap();
        assert!(fro_norm_sq(&(&same - &h)) / 4.0 < 1e-12 * p_ch);
        assert!(matches!(
            augment_channel(&CMat::zeros(2, 2), 30.0, &mut rng),
            Err(Error::ZeroChannel)
        ));
    }

    #[test]
    fn augmentation_noise_power() {
        let h = randn_complex(4, 8, 2.0, &mut RngStream::new(0, 0));
        let energy = fro_norm_sq(&h);
        for (snr, expected) in [(0.0, 1.0), (30.0, 1e-3)] {
            let mut rng = RngStream::new(4, snr as u64);
            let draws = 10_000;
            let mut acc = 0.0;
            for _ in 0..draws {
                acc += fro_norm_sq(&(&augment_channel(&h, snr, &mut rng).unwrap() - &h));
            }
            let ratio = acc / draws as f64 / energy;
            assert!((ratio / expected - 1.0).abs() < 0.05, "snr {snr}: ratio {ratio}");
        }
    }

    #[test]
    fn generation_counts_and_labels() {
        let cfg = small_cfg();
        let root = RngStream::new(5, 0);
        let snrs = [10.0, 20.0];
        let ds = generate_dataset(&cfg, &plan(ChannelKind::Sensing, 7, 1, &snrs), &root).unwrap();
        assert_eq!(ds.len(), 14);

        let ds = generate_dataset(&cfg, &plan(ChannelKind::User(1), 5, 4, &snrs[..1]), &root).unwrap();
        assert_eq!(ds.len(), 20);
        for group in ds.samples.chunks(4) {
            let v = group[0].v;
            assert_eq!(group[0].u, 1);
            for s in group {
                assert_eq!(s.v, v);
                assert_eq!(s.target, group[0].target);
            }
            for s in &group[1..] {
                assert_ne!(s.input, group[0].input);
            }
        }
        assert!(generate_dataset(&cfg, &plan(ChannelKind::User(3), 1, 1, &snrs), &root).is_err());
    }

    #[test]
    fn paper_scale_sample_count() {
        let cfg = SystemConfig::default().with_dims(1, 1);
        let ds = generate_dataset(
            &cfg,
            &plan(ChannelKind::Sensing, 1000, 10, &[10.0]),
            &RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(ds.len(), 10_000);
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_cfg();
        let snrs = [0.0, 5.0];
        let p = plan(ChannelKind::Sensing, 6, 3, &snrs);
        let a = generate_dataset(&cfg, &p, &RngStream::new(9, 1)).unwrap();
        let b = generate_dataset(&cfg, &p, &RngStream::new(9, 1)).unwrap();
        assert_eq!(a.to_bytes().unwrap(), b.to_bytes().unwrap());
    }

    #[test]
    fn preprocessing_statistics() {
        let cfg = small_cfg();
        let snrs = [10.0, 15.0, 20.0];
        let root = RngStream::new(6, 0);
        let mut train = generate_dataset(&cfg, &plan(ChannelKind::Sensing, 50, 2, &snrs), &root).unwrap();
        let mut other = generate_dataset(&cfg, &plan(ChannelKind::Sensing, 5, 1, &snrs), &root.derive(1)).unwrap();
        let raw_target = train.samples[0].target.clone();
        let prep = preprocess(&mut train, &mut [&mut other], DEFAULT_RHO).unwrap();
        let n = train.len() as f64;
        for j in 0..train.input_len() {
            let mean: f64 = train.samples.iter().map(|s| s.input[j]).sum::<f64>() / n;
            let var: f64 = train.samples.iter().map(|s| (s.input[j] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-9);
            assert!((var - 1.0).abs() < 1e-9);
        }
        for (t, raw) in train.samples[0].target.iter().zip(&raw_target) {
            assert_eq!(*t, raw * 1e4);
        }
        assert_eq!(other.preprocessing.as_ref(), Some(&prep));
        assert!(apply_preprocessing(&mut other, &prep).is_err());
    }

    #[test]
    fn sensing_target_scale() {
        let cfg = SystemConfig::default();
        let h = sensing_channel(&cfg, c(1.0, 0.0));
        let mut t = channel_to_target(&h);
        let prep = Preprocessing {
            feature_mean: vec![],
            feature_std: vec![],
            rho: DEFAULT_RHO,
        };
        prep.scale_target(&mut t);
        // |A_00| = √ζ_S ≈ 1.909e-5
        assert!((t[0] - 0.1909).abs() < 1e-3, "{}", t[0]);
    }

    #[test]
    fn constant_feature_standardizes_to_zero() {
        let samples: Vec<Sample> = (0..10)
            .map(|i| Sample {
                input: vec![3.25, i as f64],
                target: vec![0.0],
                snr_db: 0.0,
                v: 1,
                u: 1,
            })
            .collect();
        let prep = Preprocessing::fit(&samples, 1.0).unwrap();
        assert_eq!(prep.feature_std[0], STD_FLOOR);
        let mut x = samples[4].input.clone();
        prep.standardize(&mut x).unwrap();
        assert_eq!(x[0], 0.0);
        assert!(Preprocessing::fit(&[], 1.0).is_err());
    }

    #[test]
    fn split_sizes_and_partition() {
        let dims = Dims { m: 1, p: 1, c: 1, l: 1 };
        let mut ds = Dataset::new(ChannelKind::Sensing, dims, Role::Train);
        ds.samples = (0..10_000)
            .map(|i| Sample {
                input: vec![i as f64, 0.0],
                target: vec![0.0, 0.0],
                snr_db: 0.0,
                v: i + 1,
                u: 1,
            })
            .collect();
        let (tr, va, te) = split(ds.clone(), 0.9, 0.1, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!((tr.len(), va.len(), te.len()), (8100, 900, 1000));
        assert_eq!((tr.role, va.role, te.role), (Role::Train, Role::Validation, Role::Test));
        let mut ids: Vec<u64> = tr.samples.iter().chain(&va.samples).chain(&te.samples).map(|s| s.v).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=10_000).collect::<Vec<_>>());

        let (tr2, _, _) = split(ds.clone(), 0.9, 0.1, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(tr, tr2);
        assert!(split(ds, 1.0, 0.1, &mut RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn file_roundtrip_and_corruption() {
        let cfg = small_cfg();
        let mut ds = generate_dataset(
            &cfg,
            &plan(ChannelKind::User(0), 4, 2, &[5.0, 15.0]),
            &RngStream::new(2, 2),
        )
        .unwrap();
        preprocess(&mut ds, &mut [], DEFAULT_RHO).unwrap();
        let bytes = ds.to_bytes().unwrap();
        let origin = PathBuf::from("mem");
        let back = Dataset::from_bytes(&bytes, &origin).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_bytes().unwrap(), bytes);

        assert!(matches!(
            Dataset::from_bytes(&bytes[..bytes.len() - 3], &origin),
            Err(Error::Format { .. })
        ));
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(Dataset::from_bytes(&extra, &origin).is_err());
        assert!(Dataset::from_bytes(b"garbage\n", &origin).is_err());
    }

    #[test]
    fn stats_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.stats");
        let prep = Preprocessing {
            feature_mean: vec![1.0, -2.5, 3e-9],
            feature_std: vec![0.5, STD_FLOOR, 7.0],
            rho: 1e4,
        };
        prep.save(&path).unwrap();
        assert_eq!(Preprocessing::load(&path).unwrap(), prep);
        assert!(matches!(
            Preprocessing::load(&dir.path().join("nope")),
            Err(Error::Missing(_))
        ));
    }
}
