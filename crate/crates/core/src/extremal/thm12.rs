//! The block family behind the `N^{1/2}` blow-up for `m` in every `L^q`, `q > 4`.
//!
//! `f^N = g^N` have spectra `sum_j b_j phi^(xi - j)` with `b_j = 2^{-N/2}` on
//! `[2^N, 2^{N+1})`, and `m = sum_{j,k} s_{j+k} c_{j+k} psi(xi - j) psi(eta - k)`.
//! Since `psi = 1` on the support of `phi^`, the output is exactly
//! `sum_l s_l c_l w_l e^{2 pi i l x} phi(x)^2` with `w_l = sum_j b_j d_{l-j}`.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use super::signs::SignSequence;
use crate::bilinear::{apply_bilinear, bilinear_spectrum};
use crate::error::{LabError, Result};
use crate::lattice::{lp_norm, FreqLattice, SpectralFunction};
use crate::multiplier::Multiplier;
use crate::profile::{BumpProfile, ProfileKind};

/// Half-widths of `phi^`: flat on `[-0.005, 0.005]`, supported in `[-0.01, 0.01]`.
pub const PHI_RADII: (f64, f64) = (0.005, 0.01);
/// Half-widths of `psi`: flat on `[-1/20, 1/20]`, supported in `[-1/10, 1/10]`.
pub const PSI_RADII: (f64, f64) = (0.05, 0.1);

/// `c_l = (l-1)^{-1/2} (1 + ln(l-1))^{1/2}`, zero below `l = 2`.
pub fn thm12_c(l: u64) -> f64 {
    if l < 2 {
        return 0.0;
    }
    let t = (l - 1) as f64;
    ((1.0 + t.ln()) / t).sqrt()
}

/// `sum_j b_j d_{l-j}` for the block sequences, exactly.
pub fn conv_weight(l: u64, block: u32) -> Ratio<u64> {
    let lo = 1u64 << block;
    let hi = (1u64 << (block + 1)) - 1;
    // j and l - j both in [lo, hi]
    let start = lo.max(l.saturating_sub(hi));
    let end = hi.min(l.saturating_sub(lo));
    let count = if l >= lo && end >= start { end - start + 1 } else { 0 };
    Ratio::new(count, lo)
}

/// `(sum_l c_l^2 (sum_j b_j d_{l-j})^2)^{1/2} * mass^n`.
///
/// Sequences are indexed from 0; `profile_mass` is `int |phi|^2` of one factor.
pub fn khintchine_l1(c: &[f64], b: &[f64], d: &[f64], profile_mass: f64, dim: usize) -> f64 {
    let sum: f64 = c
        .iter()
        .enumerate()
        .filter(|(_, cl)| **cl != 0.0)
        .map(|(l, cl)| {
            let w: f64 = (0..=l)
                .filter_map(|j| Some(b.get(j)? * d.get(l - j)?))
                .sum();
            cl * cl * w * w
        })
        .sum();
    sum.sqrt() * profile_mass.powi(dim as i32)
}

/// `(sum_{l=2}^L c_l^q (l-1))^{1/q}`.
pub fn counterexample_lq_partial(q: f64, upto: u64) -> Result<f64> {
    if !(q >= 1.0) || !q.is_finite() {
        return Err(LabError::InvalidExponent(q));
    }
    if upto < 2 {
        return Err(LabError::InvalidParameter(format!("partial sum needs L >= 2, got {upto}")));
    }
    // pairwise summation keeps the 2^20-term sums accurate
    let terms: Vec<f64> = (2..=upto).map(|l| thm12_c(l).powf(q) * (l - 1) as f64).collect();
    Ok(pairwise_sum(&terms).powf(1.0 / q))
}

fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 64 {
        return v.iter().sum();
    }
    let (a, b) = v.split_at(v.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

/// One member `N` of the family, in dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm12Family {
    dim: usize,
    block: u32,
    phi_hat: BumpProfile,
    psi: BumpProfile,
}

impl Thm12Family {
    pub fn new(block: u32) -> Result<Self> {
        if !(2..=24).contains(&block) {
            return Err(LabError::InvalidParameter(format!("block parameter N = {block} outside 2..=24")));
        }
        Ok(Self {
            dim: 1,
            block,
            phi_hat: BumpProfile::new(ProfileKind::FourierCompact, PHI_RADII.0, PHI_RADII.1)?,
            psi: BumpProfile::new(ProfileKind::FourierCompact, PSI_RADII.0, PSI_RADII.1)?,
        })
    }

    pub fn with_dim(mut self, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidParameter("dimension must be positive".into()));
        }
        self.dim = dim;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn block(&self) -> u32 {
        self.block
    }

    pub fn phi_hat(&self) -> &BumpProfile {
        &self.phi_hat
    }

    pub fn psi(&self) -> &BumpProfile {
        &self.psi
    }

    /// The sites `[2^N, 2^{N+1} - 1]` carrying `b` and `d`.
    pub fn sites(&self) -> RangeInclusive<u64> {
        (1u64 << self.block)..=(1u64 << (self.block + 1)) - 1
    }

    /// `b_j` (equal to `d_j`).
    pub fn b(&self, j: i64) -> f64 {
        if j >= 0 && self.sites().contains(&(j as u64)) {
            2f64.powf(-(self.block as f64) / 2.0)
        } else {
            0.0
        }
    }

    /// `b_0, ..., b_{2^{N+1}-1}`.
    pub fn b_sequence(&self) -> Vec<f64> {
        (0..=*self.sites().end() as i64).map(|j| self.b(j)).collect()
    }

    /// `c_0, ..., c_{2^{N+2}}`, enough for every `l = j + k`.
    pub fn c_sequence(&self) -> Vec<f64> {
        (0..=1u64 << (self.block + 2)).map(thm12_c).collect()
    }

    /// `int |phi|^2` of one factor as the lattice sees it: `h sum_k phi^(kh)^2`.
    pub fn profile_mass(&self, lat: &FreqLattice) -> f64 {
        let h = lat.spacing();
        let r = lat.radius() as i64;
        h * (-r..=r).map(|k| self.phi_hat.eval(k as f64 * h).powi(2)).sum::<f64>()
    }

    /// The square-function value for this member on `lat`.
    pub fn khintchine_value(&self, lat: &FreqLattice) -> f64 {
        let b = self.b_sequence();
        khintchine_l1(&self.c_sequence(), &b, &b, self.profile_mass(lat), self.dim)
    }

    /// Smallest radius with `R h >= 2^{N+1}`, which covers the last bump.
    pub fn required_radius(&self, spacing: f64) -> usize {
        ((1u64 << (self.block + 1)) as f64 / spacing).ceil() as usize
    }

    pub fn lattice(&self, spacing: f64) -> Result<FreqLattice> {
        FreqLattice::new(self.dim, self.required_radius(spacing), 1)?.with_spacing(spacing)
    }
}

fn check_lattice(fam: &Thm12Family, lat: &FreqLattice) -> Result<()> {
    if lat.dim() != fam.dim() {
        return Err(LabError::LatticeMismatch(format!(
            "family in dimension {} on a {}-dimensional lattice",
            fam.dim(),
            lat.dim()
        )));
    }
    let per = lat.period();
    if (per - per.round()).abs() > 1e-9 * per {
        return Err(LabError::InvalidLattice(format!(
            "integer sites need an integer period, got {per}"
        )));
    }
    let top = (1u64 << (fam.block() + 1)) as f64;
    if lat.max_frequency() < top {
        return Err(LabError::LatticeTooSmall(format!(
            "N = {} needs frequencies up to {top}, lattice reaches {}",
            fam.block(),
            lat.max_frequency()
        )));
    }
    Ok(())
}

/// `f^N = g^N` with `f^(xi) = sum_j b_j phi^(xi_1 - j) prod_{r >= 2} phi^(xi_r)`.
pub fn build_thm12_pair(fam: &Thm12Family, lat: &FreqLattice) -> Result<(SpectralFunction, SpectralFunction)> {
    check_lattice(fam, lat)?;
    let phi = fam.phi_hat().clone();
    let fam = fam.clone();
    let f = SpectralFunction::from_transform(lat, |xi| {
        let j = xi[0].round();
        let bj = fam.b(j as i64);
        if bj == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let rest: f64 = xi[1..].iter().map(|&t| phi.eval(t)).product();
        Complex64::new(bj * phi.eval(xi[0] - j) * rest, 0.0)
    });
    Ok((f.clone(), f))
}

/// `m(xi, eta) = sum_{j,k >= 1} s_{j+k} c_{j+k} psi(xi_1 - j) psi(eta_1 - k) prod_{r >= 2} psi(xi_r) psi(eta_r)`.
pub fn thm12_multiplier(fam: &Thm12Family, signs: SignSequence) -> Multiplier {
    let n = fam.dim();
    let psi = fam.psi().clone();
    let top = 1i64 << (fam.block() + 3);
    let table: Vec<f64> = (0..=top).map(|l| signs.draw(&[l])).collect();
    let sign = move |l: i64| table.get(l as usize).copied().unwrap_or_else(|| signs.draw(&[l]));
    let label = match signs.seed() {
        Some(seed) => format!("block family N = {} signs seed {seed}", fam.block()),
        None => format!("block family N = {} unsigned", fam.block()),
    };
    let bounds = Multiplier::bump_product(n, psi.clone())
        .derivative_bounds()
        .map(<[f64]>::to_vec)
        .unwrap_or_default();
    Multiplier::from_rule(n, label, move |z| {
        let (j, k) = (z[0].round(), z[n].round());
        if j < 1.0 || k < 1.0 {
            return Complex64::new(0.0, 0.0);
        }
        let mut v = psi.eval(z[0] - j) * psi.eval(z[n] - k);
        for r in 1..n {
            v *= psi.eval(z[r]) * psi.eval(z[n + r]);
        }
        if v == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let l = j as i64 + k as i64;
        Complex64::new(sign(l) * thm12_c(l as u64) * v, 0.0)
    })
    .with_derivative_bounds(bounds)
    .with_feature_scale(PSI_RADII.1 - PSI_RADII.0)
}

/// Monte-Carlo estimate of `E_t ||T_{m_t}(f^N, g^N)||_1` against the square function.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomizedReport {
    pub block: u32,
    pub dim: usize,
    pub trials: usize,
    pub seed: Option<u64>,
    pub average: f64,
    pub std_error: f64,
    pub khintchine: f64,
    /// `average / khintchine`.
    pub ratio: f64,
    pub best: f64,
    pub best_trial: usize,
    /// One direct evaluation with the best trial's signs frozen.
    pub frozen: f64,
    pub f_l2: f64,
    pub values: Vec<f64>,
}

/// Averages the `L^1` norm over `trials` sign draws derived from `signs`.
///
/// The unsigned output spectrum is computed once. Every output frequency
/// lies within `2 * 0.01` of a single integer `l`, and the signed operator
/// multiplies exactly that cluster by `s_l`, so each trial is a modulation
/// followed by one synthesis.
pub fn randomized_l1_average(
    fam: &Thm12Family,
    lat: &FreqLattice,
    trials: usize,
    signs: SignSequence,
) -> Result<RandomizedReport> {
    if trials == 0 {
        return Err(LabError::InvalidParameter("need at least one trial".into()));
    }
    let (f, g) = build_thm12_pair(fam, lat)?;
    let spectrum = bilinear_spectrum(&thm12_multiplier(fam, SignSequence::Ones), &f, &g)?;
    let h = spectrum.spacing();
    let nonzero: Vec<(usize, i64)> = spectrum
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
        .map(|(i, _)| (i, (spectrum.point(i)[0] as f64 * h).round() as i64))
        .collect();
    let mut sites: Vec<i64> = nonzero.iter().map(|&(_, l)| l).collect();
    sites.sort_unstable();
    sites.dedup();
    let values: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let s = signs.trial(t as u64);
            let table: HashMap<i64, f64> = sites.iter().map(|&l| (l, s.draw(&[l]))).collect();
            let mut out = spectrum.clone();
            let coeffs = out.coeffs_mut();
            for &(i, l) in &nonzero {
                coeffs[i] *= table[&l];
            }
            lp_norm(&out.synthesize(), 1.0)
        })
        .collect::<Result<_>>()?;
    let mean = values.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    let (best_trial, best) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let frozen_m = thm12_multiplier(fam, signs.trial(best_trial as u64));
    let frozen = lp_norm(&apply_bilinear(&frozen_m, &f, &g)?, 1.0)?;
    let khintchine = fam.khintchine_value(lat);
    Ok(RandomizedReport {
        block: fam.block(),
        dim: fam.dim(),
        trials,
        seed: signs.seed(),
        average: mean,
        std_error: (var / trials as f64).sqrt(),
        khintchine,
        ratio: mean / khintchine,
        best,
        best_trial,
        frozen,
        f_l2: f.l2_norm(),
        values,
    })
}
