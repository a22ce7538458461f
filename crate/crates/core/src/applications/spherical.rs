//! The bilinear dyadic spherical maximal operator and its `d sigma = phi + mu`
//! decomposition.

use std::f64::consts::PI;
use std::ops::RangeInclusive;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::sphere::{radial_ft, sphere_area, MAX_FT_RADIUS};
use crate::bilinear::apply_bilinear;
use crate::error::{LabError, Result};
use crate::extremal::SignSequence;
use crate::lattice::{lp_norm, synthesize_on, GridFunction, SpectralFunction};
use crate::multiplier::Multiplier;

/// Surface measure of `S^{2n-1}`, the Gaussian `phi = psi (x) psi` of equal
/// mass and the signed measure `mu = d sigma - phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphericalMeasure {
    dim: usize,
    area: f64,
}

impl SphericalMeasure {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidParameter("dimension must be positive".into()));
        }
        Ok(Self {
            dim,
            area: sphere_area(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// `psi^(xi) = |S|^{1/2} e^{-pi |xi|^2}` on `R^n`.
    pub fn psi_hat(&self, xi: &[f64]) -> f64 {
        self.area.sqrt() * (-PI * xi.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    pub fn sigma_hat(&self, zeta: &[f64]) -> f64 {
        let r = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > MAX_FT_RADIUS {
            f64::NAN
        } else {
            radial_ft(self.dim, r)
        }
    }

    pub fn phi_hat(&self, zeta: &[f64]) -> f64 {
        self.area * (-PI * zeta.iter().map(|v| v * v).sum::<f64>()).exp()
    }

    pub fn mu_hat(&self, zeta: &[f64]) -> f64 {
        self.sigma_hat(zeta) - self.phi_hat(zeta)
    }

    fn scaled(&self, k: i32, label: &str, part: fn(&Self, &[f64]) -> f64) -> Multiplier {
        let me = *self;
        let s = 2f64.powi(k);
        Multiplier::from_rule(self.dim, format!("{label}(2^{k} .)"), move |z: &[f64]| {
            let w: Vec<f64> = z.iter().map(|v| v * s).collect();
            Complex64::new(part(&me, &w), 0.0)
        })
    }

    /// `d sigma^(2^k zeta)`, the symbol of `A_{2^k}`.
    pub fn sigma_multiplier(&self, k: i32) -> Multiplier {
        self.scaled(k, "dsigma", Self::sigma_hat)
    }

    pub fn phi_multiplier(&self, k: i32) -> Multiplier {
        self.scaled(k, "phi", Self::phi_hat)
    }

    /// `mu^(2^k zeta)`, the symbol of `A_{mu,k}`.
    pub fn mu_multiplier(&self, k: i32) -> Multiplier {
        self.scaled(k, "mu", Self::mu_hat)
    }
}

/// Maximum over centred cubes of every integer half-width (down to a single
/// sample) of the sample average of `|u|`, on the torus.
pub fn hl_maximal(u: &GridFunction) -> Result<GridFunction> {
    let side = u.side();
    let half = (side - 1) / 2;
    let abs: Vec<f64> = u.samples().iter().map(|z| z.norm()).collect();
    let out: Vec<f64> = match u.dim() {
        1 => {
            let mut prefix = vec![0.0; 3 * side + 1];
            for i in 0..3 * side {
                prefix[i + 1] = prefix[i] + abs[i % side];
            }
            (0..side)
                .into_par_iter()
                .map(|x| {
                    let c = x + side;
                    (0..=half)
                        .map(|w| (prefix[c + w + 1] - prefix[c - w]) / (2 * w + 1) as f64)
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        2 => {
            let ext = 3 * side;
            let mut prefix = vec![0.0; (ext + 1) * (ext + 1)];
            for i in 0..ext {
                for j in 0..ext {
                    prefix[(i + 1) * (ext + 1) + j + 1] = abs[(i % side) * side + j % side]
                        + prefix[i * (ext + 1) + j + 1]
                        + prefix[(i + 1) * (ext + 1) + j]
                        - prefix[i * (ext + 1) + j];
                }
            }
            let rect = |i0: usize, i1: usize, j0: usize, j1: usize| {
                prefix[i1 * (ext + 1) + j1] - prefix[i0 * (ext + 1) + j1] - prefix[i1 * (ext + 1) + j0]
                    + prefix[i0 * (ext + 1) + j0]
            };
            (0..side * side)
                .into_par_iter()
                .map(|idx| {
                    let (ci, cj) = (idx / side + side, idx % side + side);
                    (0..=half)
                        .map(|w| {
                            rect(ci - w, ci + w + 1, cj - w, cj + w + 1) / ((2 * w + 1) * (2 * w + 1)) as f64
                        })
                        .fold(0.0, f64::max)
                })
                .collect()
        }
        d => {
            return Err(LabError::InvalidParameter(format!(
                "maximal function implemented for n <= 2, got {d}"
            )))
        }
    };
    GridFunction::new(
        u.dim(),
        side,
        u.period(),
        out.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
    )
}

#[derive(Debug, Clone)]
pub struct SphericalMax {
    pub ks: Vec<i32>,
    /// `sup_k |A_{2^k}(f, g)|`.
    pub sup: GridFunction,
    /// `A_{2^k}(f, g)` per scale.
    pub averages: Vec<GridFunction>,
    /// `A_{mu,k}(f, g)` per scale.
    pub mu_parts: Vec<GridFunction>,
    pub maximal_f: GridFunction,
    pub maximal_g: GridFunction,
    /// `M_mu(f, g) = sup_k |A_{mu,k}(f, g)|`.
    pub mu_max: GridFunction,
    /// `|S^{2n-1}| M(f) M(g) + M_mu(f, g)`.
    pub dominator: GridFunction,
}

impl SphericalMax {
    /// Grid points where `sup > dominator (1 + tol)`.
    pub fn violations(&self, tol: f64) -> Vec<usize> {
        self.sup
            .samples()
            .iter()
            .zip(self.dominator.samples())
            .enumerate()
            .filter(|(_, (a, d))| a.re > d.re * (1.0 + tol) + tol * f64::MIN_POSITIVE)
            .map(|(i, _)| i)
            .collect()
    }
}

fn scale_list(sm: &SphericalMeasure, f: &SpectralFunction, ks: &RangeInclusive<i32>) -> Result<Vec<i32>> {
    let ks: Vec<i32> = ks.clone().collect();
    if ks.is_empty() {
        return Err(LabError::Empty("scale range".into()));
    }
    if f.lattice().dim() != sm.dim() {
        return Err(LabError::LatticeMismatch(format!(
            "lattice dimension {} for the sphere in R^{}",
            f.lattice().dim(),
            2 * sm.dim()
        )));
    }
    let top = *ks.last().unwrap();
    let reach = 2f64.powi(top) * f.lattice().max_frequency() * (2.0 * sm.dim() as f64).sqrt();
    if reach > MAX_FT_RADIUS {
        return Err(LabError::LatticeTooSmall(format!(
            "scale 2^{top} probes |zeta| = {reach:.1} beyond {MAX_FT_RADIUS}"
        )));
    }
    Ok(ks)
}

fn real_abs(u: &GridFunction) -> GridFunction {
    u.map(|z| Complex64::new(z.norm(), 0.0))
}

fn pointwise_max(parts: &[GridFunction]) -> Result<GridFunction> {
    let first = real_abs(&parts[0]);
    parts[1..]
        .iter()
        .try_fold(first, |acc, p| acc.zip_with(p, |a, b| Complex64::new(a.re.max(b.norm()), 0.0)))
}

fn on_product_grid(f: &SpectralFunction) -> GridFunction {
    let lat = f.lattice();
    synthesize_on(lat.dim(), lat.radius(), f.coeffs(), lat.product_grid_side(), lat.period())
}

pub fn dyadic_spherical_max(
    f: &SpectralFunction,
    g: &SpectralFunction,
    sm: &SphericalMeasure,
    ks: RangeInclusive<i32>,
) -> Result<SphericalMax> {
    let ks = scale_list(sm, f, &ks)?;
    let pieces: Vec<(GridFunction, GridFunction)> = ks
        .iter()
        .map(|&k| {
            Ok((
                apply_bilinear(&sm.sigma_multiplier(k), f, g)?,
                apply_bilinear(&sm.mu_multiplier(k), f, g)?,
            ))
        })
        .collect::<Result<_>>()?;
    let (averages, mu_parts): (Vec<_>, Vec<_>) = pieces.into_iter().unzip();
    let sup = pointwise_max(&averages)?;
    let mu_max = pointwise_max(&mu_parts)?;
    let maximal_f = hl_maximal(&on_product_grid(f))?;
    let maximal_g = hl_maximal(&on_product_grid(g))?;
    let area = sm.area();
    let dominator = maximal_f
        .zip_with(&maximal_g, |a, b| a * b * area)?
        .zip_with(&mu_max, |a, b| a + b)?;
    Ok(SphericalMax {
        ks,
        sup,
        averages,
        mu_parts,
        maximal_f,
        maximal_g,
        mu_max,
        dominator,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareFunctionReport {
    pub ks: Vec<i32>,
    pub p: f64,
    pub trials: u64,
    pub seed: Option<u64>,
    /// `|| (sum_k |A_{mu,k}|^2)^{1/2} ||_p`.
    pub square_function: f64,
    /// `(E_t || sum_k r_k(t) A_{mu,k} ||_p^p)^{1/p}` over the trials.
    pub randomized: f64,
    pub ratio: f64,
}

pub fn khintchine_square_function(
    f: &SpectralFunction,
    g: &SpectralFunction,
    sm: &SphericalMeasure,
    ks: RangeInclusive<i32>,
    trials: u64,
    signs: SignSequence,
    p: f64,
) -> Result<SquareFunctionReport> {
    if trials == 0 {
        return Err(LabError::InvalidParameter("at least one trial is required".into()));
    }
    let ks = scale_list(sm, f, &ks)?;
    let parts: Vec<GridFunction> = ks
        .iter()
        .map(|&k| apply_bilinear(&sm.mu_multiplier(k), f, g))
        .collect::<Result<_>>()?;
    let square = parts[1..].iter().try_fold(parts[0].map(|z| Complex64::new(z.norm_sqr(), 0.0)), |acc, u| {
        acc.zip_with(u, |a, b| a + b.norm_sqr())
    })?;
    let square = square.map(|z| Complex64::new(z.re.sqrt(), 0.0));
    let square_function = lp_norm(&square, p)?;
    let powers: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let draw = signs.trial(t);
            let mut sum = parts[0].map(|z| z * draw.draw(&[ks[0] as i64]));
            for (u, &k) in parts[1..].iter().zip(&ks[1..]) {
                let s = draw.draw(&[k as i64]);
                sum = sum.zip_with(u, |a, b| a + b * s)?;
            }
            Ok(lp_norm(&sum, p)?.powf(p))
        })
        .collect::<Result<_>>()?;
    let randomized = (powers.iter().sum::<f64>() / trials as f64).powf(1.0 / p);
    let ratio = if square_function > 0.0 {
        randomized / square_function
    } else {
        1.0
    };
    Ok(SquareFunctionReport {
        ks,
        p,
        trials,
        seed: signs.seed(),
        square_function,
        randomized,
        ratio,
    })
}
