//! Ground-truth sensing and communication channels.
//!
//! Path-loss amplitudes are folded into the channel coefficients: `A` carries
//! `√ζ_S`, `G` carries `√ζ_BI` and every `f_k` carries `√ζ_IU`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{randn_complex, CMat, RngStream};

/// Physical and geometric parameters of one IRS-assisted ISAC deployment.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// BS antennas (transmit and receive).
    pub m: usize,
    /// IRS elements.
    pub l: usize,
    /// Downlink users.
    pub k: usize,
    /// Pilot slots per sub-frame; must equal `m`.
    pub p: usize,
    /// Sub-frames; must equal `l`.
    pub c: usize,
    pub theta_s: f64,
    pub theta_b: f64,
    pub theta_i: f64,
    pub k_bi: f64,
    pub k_iu: f64,
    pub d_s: f64,
    pub d_bi: f64,
    pub d_iu: f64,
    pub gamma_s: f64,
    pub gamma_bi: f64,
    pub gamma_iu: f64,
    pub zeta0_db: f64,
    pub d0: f64,
    pub p0_dbm: f64,
    /// Element spacing over wavelength, shared by the BS array and the IRS.
    pub spacing_ratio: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            m: 4,
            l: 30,
            k: 3,
            p: 4,
            c: 30,
            theta_s: -2.0 * PI / 3.0,
            theta_b: PI / 3.0,
            theta_i: PI / 3.0,
            k_bi: 10.0,
            k_iu: 0.0,
            d_s: 140.0,
            d_bi: 50.0,
            d_iu: 2.0,
            gamma_s: 3.0,
            gamma_bi: 2.3,
            gamma_iu: 2.0,
            zeta0_db: -30.0,
            d0: 1.0,
            p0_dbm: 20.0,
            spacing_ratio: 0.5,
        }
    }
}

impl SystemConfig {
    /// Same geometry with `m` antennas and `l` IRS elements; keeps `P = M`
    /// and `C = L`.
    pub fn with_dims(&self, m: usize, l: usize) -> SystemConfig {
        SystemConfig {
            m,
            l,
            p: m,
            c: l,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.l == 0 || self.k == 0 {
            return Err(Error::config("M, L and K must be at least 1"));
        }
        if self.p != self.m {
            return Err(Error::config(format!(
                "pilot length P = {} must equal M = {}",
                self.p, self.m
            )));
        }
        if self.c != self.l {
            return Err(Error::config(format!(
                "sub-frame count C = {} must equal L = {}",
                self.c, self.l
            )));
        }
        if !(self.k_bi >= 0.0 && self.k_iu >= 0.0) {
            return Err(Error::config("Rician factors must be non-negative"));
        }
        if !(self.d_s > 0.0 && self.d_bi > 0.0 && self.d_iu > 0.0 && self.d0 > 0.0) {
            return Err(Error::config("distances must be positive"));
        }
        if !(self.spacing_ratio > 0.0) {
            return Err(Error::config("antenna spacing ratio must be positive"));
        }
        Ok(())
    }

    pub fn p0_linear_mw(&self) -> f64 {
        db_to_linear(self.p0_dbm)
    }

    pub fn zeta_s(&self) -> f64 {
        path_loss_linear(self.zeta0_db, self.d_s, self.d0, self.gamma_s)
    }

    pub fn zeta_bi(&self) -> f64 {
        path_loss_linear(self.zeta0_db, self.d_bi, self.d0, self.gamma_bi)
    }

    pub fn zeta_iu(&self) -> f64 {
        path_loss_linear(self.zeta0_db, self.d_iu, self.d0, self.gamma_iu)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// One draw of every channel in the system.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// BS-target-BS sensing channel, `M x M`.
    pub a: CMat,
    pub alpha_s: Complex64,
    /// BS-IRS channel, `M x L`.
    pub g: CMat,
    /// IRS-user channels, one length-`L` vector per user.
    pub f: Vec<Vec<Complex64>>,
    /// Cascaded channels `G diag(f_k)`.
    pub b: Vec<CMat>,
}

/// Cascaded communication channels of one realization.
#[derive(Clone, Debug)]
pub struct CommChannels {
    pub g: CMat,
    pub f: Vec<Vec<Complex64>>,
    pub b: Vec<CMat>,
}

/// Uniform linear array response; element `m` is `exp(j 2π s m sin θ)`.
pub fn steering_vector(theta: f64, n: usize, spacing_ratio: f64) -> Vec<Complex64> {
    let step = 2.0 * PI * spacing_ratio * theta.sin();
    (0..n)
        .map(|m| Complex64::from_polar(1.0, step * m as f64))
        .collect()
}

/// Log-distance path loss `ζ_0 (d/d_0)^{-γ}` on a linear scale.
pub fn path_loss_linear(zeta0_db: f64, d: f64, d0: f64, gamma: f64) -> f64 {
    db_to_linear(zeta0_db) * (d / d0).powf(-gamma)
}

/// Draws `A = √ζ_S α_S a(θ_S) a(θ_S)^T` with `|α_S| = 1` and a uniform phase.
pub fn draw_sensing_channel(cfg: &SystemConfig, rng: &mut RngStream) -> (CMat, Complex64) {
    let alpha = Complex64::from_polar(1.0, 2.0 * PI * rng.uniform());
    let a = sensing_channel(cfg, alpha);
    (a, alpha)
}

/// Deterministic sensing channel for a given reflection coefficient.
pub fn sensing_channel(cfg: &SystemConfig, alpha: Complex64) -> CMat {
    let steer = steering_vector(cfg.theta_s, cfg.m, cfg.spacing_ratio);
    let gain = alpha * cfg.zeta_s().sqrt();
    // pairwise product first so the result is exactly symmetric
    CMat::from_fn(cfg.m, cfg.m, |r, c| gain * (steer[r] * steer[c]))
}

/// Rician fading matrix `√ζ (√(K/(K+1)) LoS + √(1/(K+1)) NLoS)` with
/// `NLoS ~ CN(0, 1)` entrywise.
pub fn draw_rician(
    rows: usize,
    cols: usize,
    k_factor: f64,
    los: &CMat,
    zeta: f64,
    rng: &mut RngStream,
) -> Result<CMat> {
    if los.shape() != (rows, cols) {
        return Err(Error::shape(format!(
            "LoS component is {:?}, expected {rows}x{cols}",
            los.shape()
        )));
    }
    if !(k_factor >= 0.0) || !(zeta > 0.0) {
        return Err(Error::config("Rician factor must be >= 0 and power > 0"));
    }
    let nlos = randn_complex(rows, cols, 1.0, rng);
    let w_los = (k_factor / (k_factor + 1.0)).sqrt();
    let w_nlos = (1.0 / (k_factor + 1.0)).sqrt();
    let amp = zeta.sqrt();
    let mut out = CMat::zeros(rows, cols);
    for ((o, l), n) in out
        .as_mut_slice()
        .iter_mut()
        .zip(los.as_slice())
        .zip(nlos.as_slice())
    {
        *o = (l * w_los + n * w_nlos) * amp;
    }
    Ok(out)
}

/// Draws `G` and every `f_k`, and forms `B_k = G diag(f_k)`.
pub fn draw_comm_channels(cfg: &SystemConfig, rng: &mut RngStream) -> Result<CommChannels> {
    let a_b = steering_vector(cfg.theta_b, cfg.m, cfg.spacing_ratio);
    let a_i = steering_vector(cfg.theta_i, cfg.l, cfg.spacing_ratio);
    let g_los = CMat::from_fn(cfg.m, cfg.l, |r, c| a_b[r] * a_i[c].conj());
    let g = draw_rician(cfg.m, cfg.l, cfg.k_bi, &g_los, cfg.zeta_bi(), rng)?;

    let f_los = CMat::from_fn(cfg.l, 1, |_, _| Complex64::new(1.0, 0.0));
    let mut f = Vec::with_capacity(cfg.k);
    let mut b = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let fk = draw_rician(cfg.l, 1, cfg.k_iu, &f_los, cfg.zeta_iu(), rng)?;
        let fk = fk.as_slice().to_vec();
        b.push(g.mul_diag(&fk)?);
        f.push(fk);
    }
    Ok(CommChannels { g, f, b })
}

/// Sensing channel first, then the communication channels, from one stream.
pub fn draw_realization(cfg: &SystemConfig, rng: &mut RngStream) -> Result<ChannelRealization> {
    let (a, alpha_s) = draw_sensing_channel(cfg, rng);
    let CommChannels { g, f, b } = draw_comm_channels(cfg, rng)?;
    Ok(ChannelRealization {
        a,
        alpha_s,
        g,
        f,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fro_norm_sq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn steering_examples() {
        let v = steering_vector(0.0, 4, 0.5);
        assert!(v.iter().all(|z| (z - c(1.0, 0.0)).norm() < 1e-15));

        let v = steering_vector(PI / 2.0, 2, 0.5);
        assert!((v[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - c(-1.0, 0.0)).norm() < 1e-15);

        for theta in [-2.0, -0.3, 0.7, 1.9, 12.0] {
            let v = steering_vector(theta, 8, 0.5);
            let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn path_loss_examples() {
        assert!((path_loss_linear(-30.0, 1.0, 1.0, 3.0) - 1e-3).abs() < 1e-18);
        let pl = path_loss_linear(-30.0, 140.0, 1.0, 3.0);
        assert!((linear_to_db(pl) + 94.384).abs() < 0.01);
        assert!((pl - 3.645e-10).abs() / 3.645e-10 < 1e-3);
        let pl = path_loss_linear(-30.0, 2.0, 1.0, 2.0);
        assert!((linear_to_db(pl) + 36.021).abs() < 0.01);
    }

    #[test]
    fn path_loss_is_monotone() {
        let ds = [1.5, 2.0, 10.0, 50.0, 140.0, 500.0];
        let gammas = [1.5, 2.0, 2.3, 3.0, 3.5];
        for &g in &gammas {
            for w in ds.windows(2) {
                assert!(path_loss_linear(-30.0, w[1], 1.0, g) < path_loss_linear(-30.0, w[0], 1.0, g));
            }
        }
        for &d in &ds {
            for w in gammas.windows(2) {
                assert!(path_loss_linear(-30.0, d, 1.0, w[1]) < path_loss_linear(-30.0, d, 1.0, w[0]));
            }
        }
    }

    #[test]
    fn sensing_channel_structure() {
        let cfg = SystemConfig::default();
        let zeta = cfg.zeta_s();
        let mut rng = RngStream::new(5, 0);
        for _ in 0..20 {
            let (a, alpha) = draw_sensing_channel(&cfg, &mut rng);
            assert!((alpha.norm() - 1.0).abs() < 1e-15);
            assert_eq!(a, a.transpose());
            for z in a.as_slice() {
                assert!((z.norm() - zeta.sqrt()).abs() < 1e-12 * zeta.sqrt());
            }
            let m2 = (cfg.m * cfg.m) as f64;
            assert!((fro_norm_sq(&a) - zeta * m2).abs() < 1e-12 * zeta * m2);
            // rank one: every column is a multiple of the first
            let col0 = a.col(0).to_vec();
            for cc in 1..cfg.m {
                let ratio = a[(0, cc)] / col0[0];
                for r in 0..cfg.m {
                    assert!((a[(r, cc)] - col0[r] * ratio).norm() < 1e-10 * zeta.sqrt());
                }
            }
        }
    }

    #[test]
    fn rician_limits() {
        let mut rng = RngStream::new(8, 1);
        let los = CMat::from_fn(3, 2, |r, cc| Complex64::from_polar(1.0, (r + 2 * cc) as f64));
        let g = draw_rician(3, 2, 1e12, &los, 4.0, &mut rng).unwrap();
        assert!(g.max_abs_diff(&los.scale_re(2.0)) < 1e-5 * 2.0);

        let rows = 200;
        let cols = 500;
        let los = CMat::zeros(rows, cols);
        let g = draw_rician(rows, cols, 0.0, &los, 3.0, &mut rng).unwrap();
        let p = fro_norm_sq(&g) / (rows * cols) as f64;
        assert!((p - 3.0).abs() < 0.05 * 3.0);
    }

    #[test]
    fn rician_preserves_power_for_any_k() {
        let rows = 100;
        let cols = 1000;
        let los = CMat::from_fn(rows, cols, |r, cc| Complex64::from_polar(1.0, 0.1 * (r * cc) as f64));
        for (i, k) in [0.0, 0.5, 1.0, 10.0, 100.0].into_iter().enumerate() {
            let mut rng = RngStream::new(21, i as u64);
            let g = draw_rician(rows, cols, k, &los, 2.5, &mut rng).unwrap();
            let ratio = fro_norm_sq(&g) / (2.5 * (rows * cols) as f64);
            assert!((ratio - 1.0).abs() < 0.05, "K = {k}: ratio {ratio}");
        }
    }

    #[test]
    fn rician_rejects_bad_inputs() {
        let mut rng = RngStream::new(0, 0);
        let los = CMat::zeros(2, 2);
        assert!(draw_rician(2, 3, 1.0, &los, 1.0, &mut rng).is_err());
        assert!(draw_rician(2, 2, -1.0, &los, 1.0, &mut rng).is_err());
        assert!(draw_rician(2, 2, 1.0, &los, 0.0, &mut rng).is_err());
    }

    #[test]
    fn comm_channel_dims_and_cascade() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(3, 3);
        let ch = draw_comm_channels(&cfg, &mut rng).unwrap();
        assert_eq!(ch.g.shape(), (4, 30));
        assert_eq!(ch.f.len(), 3);
        for (fk, bk) in ch.f.iter().zip(&ch.b) {
            assert_eq!(fk.len(), 30);
            assert_eq!(bk.shape(), (4, 30));
            for r in 0..4 {
                for l in 0..30 {
                    assert!((bk[(r, l)] - ch.g[(r, l)] * fk[l]).norm() <= 1e-12 * bk[(r, l)].norm().max(1e-30));
                }
            }
        }
        let ones = vec![c(1.0, 0.0); 30];
        assert_eq!(ch.g.mul_diag(&ones).unwrap(), ch.g);
    }

    #[test]
    fn cascaded_power_matches_product_of_path_losses() {
        let cfg = SystemConfig::default().with_dims(4, 8);
        let rng = RngStream::new(17, 0);
        let draws = 10_000;
        let mut acc = 0.0;
        for i in 0..draws {
            let mut s = rng.derive(i);
            let ch = draw_comm_channels(&cfg, &mut s).unwrap();
            acc += fro_norm_sq(&ch.b[0]);
        }
        let expected = (cfg.m * cfg.l) as f64 * cfg.zeta_bi() * cfg.zeta_iu();
        let ratio = acc / draws as f64 / expected;
        assert!((ratio - 1.0).abs() < 0.05, "ratio {ratio}");
    }

    #[test]
    fn config_validation() {
        let cfg = SystemConfig::default();
        assert!(cfg.validate().is_ok());
        assert!(SystemConfig { p: 5, ..cfg.clone() }.validate().is_err());
        assert!(SystemConfig { c: 3, ..cfg.clone() }.validate().is_err());
        assert!(SystemConfig { d_s: 0.0, ..cfg.clone() }.validate().is_err());
        assert!(SystemConfig { k_bi: -1.0, ..cfg.clone() }.validate().is_err());
        assert!(cfg.with_dims(8, 12).validate().is_ok());
    }
}
