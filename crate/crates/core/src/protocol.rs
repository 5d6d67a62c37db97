//! Pilot transmission: DFT pilots at the BS, DFT phase-shift patterns at the
//! IRS, and the frames observed by the BS (echo) and by each user.
//!
//! The transmit power lives entirely in the pilot matrix: every column of `X`
//! has squared norm `P_0`. Receiver noise variances follow from the received
//! signal powers `P_0 ζ_S` (BS) and `P_0 ζ_BI ζ_IU` (users).

use num_complex::Complex64;

use crate::channel::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{dft_matrix, randn_complex, CMat, RngStream};

#[derive(Clone, Debug)]
pub struct PilotConfig {
    /// `M x P` pilot matrix, `X X^H = P_0 I`.
    pub x: CMat,
    /// `L x C` IRS phase-shift matrix with unit-modulus entries.
    pub v: CMat,
    pub p0_linear: f64,
}

impl PilotConfig {
    /// Phase-shift vector applied in sub-frame `c`.
    pub fn phase_shifts(&self, c: usize) -> &[Complex64] {
        self.v.col(c)
    }
}

/// Received echo frames `Y_c`, one `M x P` matrix per sub-frame.
#[derive(Clone, Debug)]
pub struct SensingFrames {
    pub y: Vec<CMat>,
    pub sigma2: f64,
}

/// Received pilot rows `z_{k,c}`, one length-`P` row per sub-frame.
#[derive(Clone, Debug)]
pub struct UserFrames {
    pub z: Vec<Vec<Complex64>>,
    pub varsigma2: f64,
    pub user: usize,
}

pub fn build_pilots(cfg: &SystemConfig) -> Result<PilotConfig> {
    cfg.validate()?;
    let p0 = cfg.p0_linear_mw();
    Ok(PilotConfig {
        x: dft_matrix(cfg.m, true).scale_re(p0.sqrt()),
        v: dft_matrix(cfg.l, false),
        p0_linear: p0,
    })
}

/// BS noise variance (mW) giving `snr_db` relative to `P_0 ζ_S`.
pub fn sensing_noise_var(cfg: &SystemConfig, snr_db: f64) -> f64 {
    cfg.p0_linear_mw() * cfg.zeta_s() / db_to_linear(snr_db)
}

/// User noise variance (mW) giving `snr_db` relative to `P_0 ζ_BI ζ_IU`.
pub fn user_noise_var(cfg: &SystemConfig, snr_db: f64) -> f64 {
    cfg.p0_linear_mw() * cfg.zeta_bi() * cfg.zeta_iu() / db_to_linear(snr_db)
}

/// `Y_c = A^H X + N_c` for every sub-frame; residual self-interference is
/// assumed compensated.
pub fn receive_sensing(
    a: &CMat,
    pilots: &PilotConfig,
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<SensingFrames> {
    receive_sensing_with_si(a, None, pilots, sigma2, rng)
}

/// As [`receive_sensing`], optionally adding an uncompensated residual
/// self-interference term `S^H X`.
pub fn receive_sensing_with_si(
    a: &CMat,
    residual_si: Option<&CMat>,
    pilots: &PilotConfig,
    sigma2: f64,
    rng: &mut RngStream,
) -> Result<SensingFrames> {
    let (m, p) = pilots.x.shape();
    if a.shape() != (m, m) {
        return Err(Error::shape(format!(
            "sensing channel is {:?}, pilots need {m}x{m}",
            a.shape()
        )));
    }
    let mut clean = a.adjoint().matmul(&pilots.x)?;
    if let Some(s) = residual_si {
        if s.shape() != (m, m) {
            return Err(Error::shape("residual SI must be M x M"));
        }
        clean = &clean + &s.adjoint().matmul(&pilots.x)?;
    }
    let y = (0..pilots.v.cols())
        .map(|_| &clean + &randn_complex(m, p, sigma2, rng))
        .collect();
    Ok(SensingFrames { y, sigma2 })
}

/// `z_{k,c} = v_c^H B_k^H X + w_{k,c}` for every sub-frame.
pub fn receive_user(
    b: &CMat,
    user: usize,
    pilots: &PilotConfig,
    varsigma2: f64,
    rng: &mut RngStream,
) -> Result<UserFrames> {
    let (m, p) = pilots.x.shape();
    let (l, c) = pilots.v.shape();
    if b.shape() != (m, l) {
        return Err(Error::shape(format!(
            "cascaded channel is {:?}, pilots need {m}x{l}",
            b.shape()
        )));
    }
    let mut z = Vec::with_capacity(c);
    for sub in 0..c {
        // v_c^H B^H = (B v_c)^H
        let bv = b.matmul(&CMat::column(pilots.phase_shifts(sub)))?;
        let noise = randn_complex(1, p, varsigma2, rng);
        let row = (0..p)
            .map(|q| {
                let clean: Complex64 = bv
                    .as_slice()
                    .iter()
                    .zip(pilots.x.col(q))
                    .map(|(h, x)| h.conj() * x)
                    .sum();
                clean + noise.as_slice()[q]
            })
            .collect();
        z.push(row);
    }
    Ok(UserFrames {
        z,
        varsigma2,
        user,
    })
}
