//! The exponent test: with `c = eps` on `2..N` and `b = d = N^{-1/2}` on `1..N`,
//! `sum_l c_l^2 (sum_j b_j d_{l-j})^2 <= C (sum_l c_l^2 (l - 1))^r` forces `r >= 1/2`.

use serde::Serialize;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SharpnessRecord {
    pub n: u64,
    pub eps: f64,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, of order `N^{1 - 2r}`.
    pub ratio: f64,
}

pub fn sharpness_exponent_test(n: u64, eps: f64, r: f64) -> Result<SharpnessRecord> {
    if n == 0 {
        return Err(LabError::InvalidParameter("N must be at least 1".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) || !(r > 0.0 && r.is_finite()) {
        return Err(LabError::InvalidParameter(format!("need eps > 0 and r > 0, got {eps}, {r}")));
    }
    let nf = n as f64;
    // sum_j b_j d_{l-j} = (l - 1) / N for 2 <= l <= N + 1
    let (mut lhs, mut mass) = (0.0, 0.0);
    for l in 2..=n.max(2) {
        let c = if l <= n { eps } else { 0.0 };
        let w = (l - 1) as f64 / nf;
        lhs += c * c * w * w;
        mass += c * c * (l - 1) as f64;
    }
    let rhs = mass.powf(r);
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };
    Ok(SharpnessRecord { n, eps, r, lhs, rhs, ratio })
}
