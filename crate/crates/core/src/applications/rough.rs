//! Multipliers of rough homogeneous kernels `Omega(x') |x|^{-2n}` cut to an annulus,
//! and the per-scale pieces `M_k` of Fefferman-type kernels `rho(|x|) Omega(x') |x|^{-2n}`.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use serde::Serialize;

use super::sphere::SphereSymbol;
use crate::error::{LabError, Result};
use crate::fit::relative_spread;
use crate::lattice::forward_fft_nd;
use crate::multiplier::{Multiplier, Table};
use crate::profile::{BumpProfile, ProfileKind};
use crate::quadrature::GaussLegendre;

/// `psi(x) = beta(|x|) - beta(2|x|)` with `beta = 1` on `[0, 1/2]` and `0` beyond 1.
///
/// Supported in `1/4 <= |x| <= 1`, and `sum_k psi(2^{-k} x) = 1` away from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Annulus {
    beta: BumpProfile,
}

impl Annulus {
    pub fn standard() -> Self {
        Self {
            beta: BumpProfile::new(ProfileKind::SpaceCompact, 0.5, 1.0).expect("fixed radii are valid"),
        }
    }

    pub fn inner(&self) -> f64 {
        0.5 * self.beta.inner()
    }

    pub fn outer(&self) -> f64 {
        self.beta.outer()
    }

    pub fn eval(&self, radius: f64) -> f64 {
        self.beta.eval(radius) - self.beta.eval(2.0 * radius)
    }
}

impl Default for Annulus {
    fn default() -> Self {
        Self::standard()
    }
}

/// Radial factors with `int_0^R |rho|^2 <= C_rho R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RadialFactor {
    One,
    /// `sgn sin(pi log_2 r)`.
    LogSquareWave,
    /// `cos(theta ln r)`, the real part of `r^{i theta}`.
    LogOscillation { theta: f64 },
}

impl RadialFactor {
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "one" => Ok(Self::One),
            "log-square-wave" => Ok(Self::LogSquareWave),
            "log-oscillation" => Ok(Self::LogOscillation { theta: 3.0 }),
            _ => Err(LabError::InvalidParameter(format!("unknown radial factor '{name}'"))),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match *self {
            Self::One => 1.0,
            Self::LogSquareWave => {
                let s = (std::f64::consts::PI * r.log2()).sin();
                if s > 0.0 {
                    1.0
                } else if s < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            Self::LogOscillation { theta } => (theta * r.ln()).cos(),
        }
    }

    /// The recorded constant; `|rho| <= 1` for every catalogue entry.
    pub fn c_rho(&self) -> f64 {
        1.0
    }

    /// `max_R R^{-1} int_0^R |rho|^2` over `R = 2^{-10}, ..., 2^{10}`.
    pub fn average_bound(&self) -> f64 {
        let rule = GaussLegendre::new(16);
        // dyadic pieces [2^m, 2^{m+1}] hold no sign change of the square wave
        let piece = |m: i32| {
            let (a, b) = (2f64.powi(m), 2f64.powi(m + 1));
            rule.composite(a, b, 16, |r| self.eval(r).powi(2))
        };
        let mut acc: f64 = (-60..-10).map(piece).sum();
        let mut worst = 0.0f64;
        for m in -10..10 {
            acc += piece(m);
            worst = worst.max(acc / 2f64.powi(m + 1));
        }
        worst
    }

    /// Checks the average bound against [`Self::c_rho`].
    pub fn verify(&self) -> Result<f64> {
        let b = self.average_bound();
        if b > self.c_rho() * (1.0 + 1e-9) {
            return Err(LabError::BoundViolation(format!(
                "{self:?}: R^-1 int_0^R |rho|^2 reaches {b} > C_rho = {}",
                self.c_rho()
            )));
        }
        Ok(b)
    }
}

/// Spatial grid on `[-1, 1]^2` and the zero-padding of its FFT.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelMesh {
    /// Samples per axis; even, so the grid is symmetric about 0.
    pub side: usize,
    pub pad: usize,
}

impl Default for KernelMesh {
    fn default() -> Self {
        Self { side: 256, pad: 2 }
    }
}

impl KernelMesh {
    pub fn step(&self) -> f64 {
        2.0 / self.side as f64
    }
}

/// `m = K^` for a tabulated kernel, with the norms entering Hausdorff-Young.
#[derive(Debug, Clone)]
pub struct RoughKernel {
    pub multiplier: Multiplier,
    pub r: f64,
    pub kernel_norm: f64,
    /// `||m||_{L^{r'}}` over the full period cell of the tabulated transform.
    pub multiplier_norm: f64,
    pub hausdorff_young_ratio: f64,
    pub at_origin: Complex64,
    pub mesh: KernelMesh,
    /// Grid cells across the inner radius of the annulus.
    pub inner_cells: f64,
}

const MIN_INNER_CELLS: f64 = 8.0;

fn tabulate(
    omega: &SphereSymbol,
    radial: impl Fn(f64) -> f64,
    annulus: &Annulus,
    mesh: KernelMesh,
    label: String,
) -> Result<RoughKernel> {
    if omega.dim() != 1 {
        return Err(LabError::InvalidParameter(format!(
            "kernels are tabulated on R^2 only, got n = {}",
            omega.dim()
        )));
    }
    if mesh.side < 4 || mesh.side % 2 != 0 || mesh.pad == 0 {
        return Err(LabError::InvalidParameter(format!("mesh {mesh:?}")));
    }
    let dx = mesh.step();
    let inner_cells = annulus.inner() / dx;
    if inner_cells < MIN_INNER_CELLS {
        return Err(LabError::MeshTooCoarse(format!(
            "{inner_cells} cells across the inner radius {}, need {MIN_INNER_CELLS}",
            annulus.inner()
        )));
    }
    let side = mesh.side;
    let big = side * mesh.pad;
    let half = (side / 2) as i64;
    let mut data = vec![Complex64::new(0.0, 0.0); big * big];
    let r = omega.r();
    let mut kernel_sum = 0.0;
    for i in 0..=side as i64 {
        for j in 0..=side as i64 {
            let (x, y) = ((i - half) as f64 * dx, (j - half) as f64 * dx);
            let rad = x.hypot(y);
            let a = annulus.eval(rad);
            if a == 0.0 {
                continue;
            }
            let k = omega.eval(&[x / rad, y / rad]) * radial(rad) * a / (rad * rad);
            kernel_sum += k.abs().powf(r);
            let (bi, bj) = ((i - half).rem_euclid(big as i64) as usize, (j - half).rem_euclid(big as i64) as usize);
            data[bi * big + bj] = Complex64::new(k * dx * dx, 0.0);
        }
    }
    forward_fft_nd(&mut data, big, 2);
    let dz = 1.0 / (big as f64 * dx);
    let centre = big / 2;
    // reorder so that table index 0 is frequency -big/2
    let mut values = vec![Complex64::new(0.0, 0.0); big * big];
    for a in 0..big {
        for b in 0..big {
            let (sa, sb) = ((a + centre) % big, (b + centre) % big);
            values[a * big + b] = data[sa * big + sb];
        }
    }
    let r_prime = if r == 1.0 { f64::INFINITY } else { r / (r - 1.0) };
    let multiplier_norm = if r_prime.is_infinite() {
        values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    } else {
        (values.iter().map(|v| v.norm().powf(r_prime)).sum::<f64>() * dz * dz).powf(1.0 / r_prime)
    };
    let kernel_norm = (kernel_sum * dx * dx).powf(1.0 / r);
    let at_origin = data[0];
    let lower = -(centre as f64) * dz;
    let table = Table::new(vec![lower, lower], dz, vec![big, big], values)?;
    let multiplier = Multiplier::from_table(1, label, table)?;
    Ok(RoughKernel {
        multiplier,
        r,
        kernel_norm,
        multiplier_norm,
        hausdorff_young_ratio: if kernel_norm > 0.0 { multiplier_norm / kernel_norm } else { 0.0 },
        at_origin,
        mesh,
        inner_cells,
    })
}

/// `m = (Omega(x') |x|^{-2} psi(x))^` on the frequency box of the mesh, for `n = 1`.
pub fn rough_kernel_multiplier(omega: &SphereSymbol, annulus: &Annulus, mesh: KernelMesh) -> Result<RoughKernel> {
    tabulate(omega, |_| 1.0, annulus, mesh, format!("rough kernel symbol {}", omega.label()))
}

/// The family `M_k = (K psi_k)^` for `k` in a range, with `K = rho(|x|) Omega(x') |x|^{-2}`.
#[derive(Debug, Clone)]
pub struct FeffermanFamily {
    pub ks: Vec<i32>,
    /// `M_k(2^{-k} .)`, the transform of `rho(2^k |y|) Omega(y') |y|^{-2} psi(y)`.
    pub rescaled: Vec<RoughKernel>,
    /// `M_k` itself.
    pub members: Vec<Multiplier>,
    pub omega_norm: f64,
    /// `sup_k ||M_k(2^{-k} .)||_{L^q}` with `q = r'`.
    pub sup_norm: f64,
    /// `||M_k(2^{-k} .)||_q / ||Omega||_r` per scale.
    pub ratios: Vec<f64>,
    pub spread: f64,
    pub c_rho: f64,
}

pub fn fefferman_scale_multipliers(
    omega: &SphereSymbol,
    rho: RadialFactor,
    ks: RangeInclusive<i32>,
    annulus: &Annulus,
    mesh: KernelMesh,
) -> Result<FeffermanFamily> {
    if ks.is_empty() {
        return Err(LabError::Empty("empty scale range".into()));
    }
    rho.verify()?;
    let omega_norm = omega.lp_norm(omega.r())?;
    let ks: Vec<i32> = ks.collect();
    let rescaled = ks
        .iter()
        .map(|&k| {
            let s = 2f64.powi(k);
            tabulate(omega, move |t| rho.eval(s * t), annulus, mesh, format!("M_{k} rescaled, {rho:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let members = ks
        .iter()
        .zip(&rescaled)
        .map(|(&k, m)| m.multiplier.dilate(2f64.powi(k)).with_label(format!("M_{k}, {rho:?}")))
        .collect();
    let ratios: Vec<f64> = rescaled
        .iter()
        .map(|m| if omega_norm > 0.0 { m.multiplier_norm / omega_norm } else { 0.0 })
        .collect();
    let sup_norm = rescaled.iter().map(|m| m.multiplier_norm).fold(0.0, f64::max);
    let spread = if ratios.iter().all(|&v| v == 0.0) { 0.0 } else { relative_spread(&ratios) };
    Ok(FeffermanFamily {
        ks,
        rescaled,
        members,
        omega_norm,
        sup_norm,
        ratios,
        spread,
        c_rho: rho.c_rho(),
    })
}
