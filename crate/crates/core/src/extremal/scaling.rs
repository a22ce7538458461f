//! Dilation experiment for the number of derivatives needed on `m`.
//!
//! `m_lambda = m(2^lambda .)` with `m = prod psi(xi_j) psi(eta_j)`, tested on
//! `f_lambda = g_lambda = 2^{-n lambda/2} prod phi(2^{-lambda} x_j)`. The
//! `L^1` norm of the output stays fixed while `||m_lambda||_q` shrinks like
//! `2^{-2n lambda/q}` and `C_0` grows like `2^{lambda M}`.

use num_complex::Complex64;
use serde::Serialize;

use crate::bilinear::{apply_bilinear, BoundInputs};
use crate::error::{LabError, Result};
use crate::lattice::{lp_norm, FreqLattice, SpectralFunction};
use crate::multiplier::{multiplier_lq_norm, Multiplier, NormDomain};
use crate::profile::{BumpProfile, ProfileKind};
use crate::quadrature::GaussLegendre;

/// `psi` flat on `[-1/20, 1/20]`, supported in `[-1/10, 1/10]`.
pub const PSI_RADII: (f64, f64) = (0.05, 0.1);
/// `phi^` inside the flat part of `psi`.
pub const PHI_RADII: (f64, f64) = (0.025, 0.05);
/// Frequency step `2^{-13}` of the one-dimensional test lattice (period 8192).
pub const SPACING: f64 = 1.0 / 8192.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRecord {
    pub lambda: u32,
    pub q: f64,
    pub dim: usize,
    /// `||T_{m_lambda}(f_lambda, g_lambda)||_1`.
    pub l1_norm: f64,
    pub f_l2: f64,
    pub lq_norm: f64,
    /// `||m_lambda||_q 2^{2 n lambda / q}`, independent of `lambda`.
    pub lq_rescaled: f64,
    /// Number of derivatives in `C_0`: `floor(2n / (4 - q)) + 1`.
    pub derivatives: usize,
    pub c0: f64,
    /// `C_0^{1 - q/4} ||m_lambda||_q^{q/4}`.
    pub predicted: f64,
}

fn profiles() -> Result<(BumpProfile, BumpProfile)> {
    Ok((
        BumpProfile::new(ProfileKind::FourierCompact, PSI_RADII.0, PSI_RADII.1)?,
        BumpProfile::new(ProfileKind::FourierCompact, PHI_RADII.0, PHI_RADII.1)?,
    ))
}

/// Runs one dilation. The operator norm part is evaluated in one dimension
/// and raised to the power `n`, since `m`, `f` and `g` are tensor products.
pub fn derivative_count_test(lambda: u32, q: f64, dim: usize) -> Result<ScalingRecord> {
    if !(1.0..4.0).contains(&q) {
        return Err(LabError::InvalidExponent(q));
    }
    if dim == 0 || dim > 2 {
        return Err(LabError::InvalidParameter(format!("dimension {dim} outside 1..=2")));
    }
    let s = 2f64.powi(lambda as i32);
    let (psi, phi) = profiles()?;
    // f_lambda needs 2^lambda / phi-width << period
    if s / PHI_RADII.0 > 0.25 / SPACING {
        return Err(LabError::MeshTooCoarse(format!(
            "2^-{lambda} frequencies need a step below {}",
            SPACING
        )));
    }
    let lat = FreqLattice::new(1, (PHI_RADII.1 / SPACING).ceil() as usize + 1, 1)?.with_spacing(SPACING)?;
    let amp = s.sqrt();
    let f = SpectralFunction::from_transform(&lat, |xi| Complex64::new(amp * phi.eval(s * xi[0]), 0.0));
    // ||f_lambda||_2^2 = int 2^lambda phi^(2^lambda xi)^2 d xi on nodes scaled by 2^-lambda
    let rule = GaussLegendre::new(32);
    let f_l2 = rule
        .composite(-PHI_RADII.1 / s, PHI_RADII.1 / s, 16, |xi| s * phi.eval(s * xi).powi(2))
        .sqrt();
    let m1 = Multiplier::bump_product(1, psi.clone()).dilate(s);
    let l1 = lp_norm(&apply_bilinear(&m1, &f, &f)?, 1.0)?;

    let m = Multiplier::bump_product(dim, psi).dilate(s);
    let cells_per_axis = if dim == 1 { 400.0 } else { 50.0 };
    let half = PSI_RADII.1 / s;
    let est = multiplier_lq_norm(&m, q, &NormDomain::Cube { lower: -half, upper: half }, 2.0 * half / cells_per_axis)?;
    let derivatives = (2.0 * dim as f64 / (4.0 - q)).floor() as usize + 1;
    let c0 = m
        .derivative_bounds()
        .map(|b| b.iter().take(derivatives + 1).copied().fold(0.0, f64::max))
        .unwrap_or(f64::NAN);
    let predicted = BoundInputs { q, lq_norm: est.norm, c0 }.predicted();
    Ok(ScalingRecord {
        lambda,
        q,
        dim,
        l1_norm: l1.powi(dim as i32),
        f_l2: f_l2.powi(dim as i32),
        lq_norm: est.norm,
        lq_rescaled: est.norm * 2f64.powf(2.0 * dim as f64 * lambda as f64 / q),
        derivatives,
        c0,
        predicted,
    })
}
