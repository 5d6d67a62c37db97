//! Least-squares baselines and the NMSE metric.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::{fro_norm_sq, pinv_square, CMat};
use crate::protocol::{PilotConfig, SensingFrames, UserFrames};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Ls,
    SeDnn,
    CeDnn,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ls => "LS",
            Method::SeDnn => "SE-DNN",
            Method::CeDnn => "CE-DNN",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct EstimationReport {
    pub estimate: CMat,
    pub truth: CMat,
    pub nmse: f64,
    pub method: Method,
}

impl EstimationReport {
    pub fn new(estimate: CMat, truth: CMat, method: Method) -> Result<Self> {
        let nmse = nmse(&estimate, &truth)?;
        Ok(EstimationReport {
            estimate,
            truth,
            nmse,
            method,
        })
    }
}

/// `‖estimate − truth‖_F² / ‖truth‖_F²` for a single realization.
pub fn nmse(estimate: &CMat, truth: &CMat) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::shape(format!(
            "estimate {:?} vs truth {:?}",
            estimate.shape(),
            truth.shape()
        )));
    }
    let energy = fro_norm_sq(truth);
    if energy <= 0.0 {
        return Err(Error::ZeroTruth);
    }
    Ok(fro_norm_sq(&(estimate - truth)) / energy)
}

/// Sensing-channel LS estimate: the sub-frame average of `(Y_c X^†)^H`.
pub fn ls_sense(frames: &SensingFrames, pilots: &PilotConfig) -> Result<CMat> {
    if frames.y.is_empty() {
        return Err(Error::shape("no sensing frames"));
    }
    let x_pinv = pinv_square(&pilots.x)?;
    let (m, _) = pilots.x.shape();
    let mut acc = CMat::zeros(m, m);
    for y in &frames.y {
        acc = &acc + &y.matmul(&x_pinv)?;
    }
    Ok(acc.scale_re(1.0 / frames.y.len() as f64).adjoint())
}

/// Cascaded-channel LS estimate `Z̃^H V^†` with `z̃_c = z_c X^†`.
pub fn ls_comm(frames: &UserFrames, pilots: &PilotConfig) -> Result<CMat> {
    let (l, c) = pilots.v.shape();
    if frames.z.len() != c || c != l {
        return Err(Error::shape(format!(
            "{} sub-frames against a {l}x{c} phase-shift matrix",
            frames.z.len()
        )));
    }
    let x_pinv = pinv_square(&pilots.x)?;
    let v_pinv = pinv_square(&pilots.v)?;
    let m = x_pinv.cols();
    let mut z_tilde = CMat::zeros(c, m);
    for (sub, row) in frames.z.iter().enumerate() {
        let zt = CMat::row(row).matmul(&x_pinv)?;
        for (j, val) in zt.as_slice().iter().enumerate() {
            z_tilde[(sub, j)] = *val;
        }
    }
    z_tilde.adjoint().matmul(&v_pinv)
}

/// Sensing frames recovered from their stacked form `[Y_1, ..., Y_C]`.
pub fn split_sensing_blocks(stacked: &CMat, p: usize, sigma2: f64) -> Result<SensingFrames> {
    if p == 0 || !stacked.cols().is_multiple_of(p) {
        return Err(Error::shape("stacked frame width is not a multiple of P"));
    }
    let m = stacked.rows();
    let y = (0..stacked.cols() / p)
        .map(|c| {
            let data: Vec<Complex64> = (c * p..(c + 1) * p)
                .flat_map(|col| stacked.col(col).iter().copied())
                .collect();
            CMat::from_col_major(m, p, data)
        })
        .collect::<Result<_>>()?;
    Ok(SensingFrames { y, sigma2 })
}
