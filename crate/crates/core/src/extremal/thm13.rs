//! The multi-scale family showing that `L^4`-type integrability of `m` does
//! not survive summation over dyadic dilations.
//!
//! Blocks `I_N = {5 2^{N-2} + 1, ..., 6 2^{N-2} - 1}^n` carry
//! `m_t = sum_N sum_{j,k in I_N} a_{j+k} prod_r c_{j_r+k_r} psi^(xi_r - j_r) psi^(eta_r - k_r)`
//! and `T^S = sum_{K in S} T_{m_t(2^K .)}` is tested on `F = G` with
//! `F^ = 1` on `[5/4, 3/2]^n`.

use std::ops::RangeInclusive;

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use super::signs::SignSequence;
use crate::bilinear::DilatedSum;
use crate::error::{LabError, Result};
use crate::lattice::{FreqLattice, SpectralFunction};
use crate::multiplier::Multiplier;
use crate::profile::{BumpProfile, ProfileKind};
use crate::quadrature::GaussLegendre;

/// `psi^` is flat on `[-1/20, 1/20]` and supported in `[-1/10, 1/10]`.
pub const PSI_HAT_RADII: (f64, f64) = (0.05, 0.1);
/// `F^` is a bump centred here, flat on `[5/4, 3/2]` and supported in `(1, 2)`.
pub const F_HAT_CENTRE: f64 = 1.375;
pub const F_HAT_RADII: (f64, f64) = (0.125, 0.37);

/// `c_l = l^{-1/2} (ln l)^{-1/n}`.
pub fn thm13_c(l: u64, dim: usize) -> f64 {
    if l < 2 {
        return 0.0;
    }
    let t = l as f64;
    t.powf(-0.5) * t.ln().powf(-1.0 / dim as f64)
}

fn i_block(k: u32) -> RangeInclusive<i64> {
    (5i64 << (k - 2)) + 1..=(6i64 << (k - 2)) - 1
}

fn j_block(k: u32) -> RangeInclusive<i64> {
    (5i64 << (k - 1)) + 2..=(6i64 << (k - 1)) - 2
}

fn l_block(k: u32) -> RangeInclusive<i64> {
    (41i64 << k) / 16 + 1..=(43i64 << k) / 16
}

/// Number of `(j, k) in I_K^2` with `j + k = p`, i.e. `min(p - 5 2^{K-1} - 1, 6 2^{K-1} - 1 - p)`.
fn pair_count(p: i64, k: u32) -> i64 {
    ((p - (5i64 << (k - 1)) - 1).min((6i64 << (k - 1)) - 1 - p)).max(0)
}

/// The family restricted to the consecutive scales of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Thm13Family {
    dim: usize,
    scales: RangeInclusive<u32>,
    signs: SignSequence,
    psi_hat: BumpProfile,
    f_hat: BumpProfile,
}

/// Builds the family for the scales `K in scales`, all `>= 4`.
pub fn build_thm13_family(scales: RangeInclusive<u32>, dim: usize, signs: SignSequence) -> Result<Thm13Family> {
    if scales.is_empty() || *scales.start() < 4 || *scales.end() > 40 {
        return Err(LabError::InvalidParameter(format!(
            "scales {scales:?} must be a nonempty range inside 4..=40"
        )));
    }
    if dim == 0 {
        return Err(LabError::InvalidParameter("dimension must be positive".into()));
    }
    Ok(Thm13Family {
        dim,
        scales,
        signs,
        psi_hat: BumpProfile::new(ProfileKind::FourierCompact, PSI_HAT_RADII.0, PSI_HAT_RADII.1)?,
        f_hat: BumpProfile::new(ProfileKind::FourierCompact, F_HAT_RADII.0, F_HAT_RADII.1)?,
    })
}

impl Thm13Family {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scales(&self) -> RangeInclusive<u32> {
        self.scales.clone()
    }

    pub fn signs(&self) -> SignSequence {
        self.signs
    }

    pub fn psi_hat(&self) -> &BumpProfile {
        &self.psi_hat
    }

    pub fn i_block(&self, k: u32) -> RangeInclusive<i64> {
        i_block(k)
    }

    pub fn j_block(&self, k: u32) -> RangeInclusive<i64> {
        j_block(k)
    }

    pub fn l_block(&self, k: u32) -> RangeInclusive<i64> {
        l_block(k)
    }

    /// `A_K = sum_{p in J_K} c_p^2 w_p^2` with `w_p` the pair count.
    pub fn block_mass(&self, k: u32) -> f64 {
        j_block(k)
            .map(|p| {
                let c = thm13_c(p as u64, self.dim);
                let w = pair_count(p, k) as f64;
                c * c * w * w
            })
            .sum()
    }

    /// `m_t` with the blocks `N` of the experiment's scales.
    pub fn multiplier(&self) -> Multiplier {
        let n = self.dim;
        let psi = self.psi_hat.clone();
        let signs = self.signs;
        let blocks: Vec<(u32, RangeInclusive<i64>)> = self.scales.clone().map(|k| (k, i_block(k))).collect();
        let bounds = Multiplier::bump_product(n, psi.clone())
            .derivative_bounds()
            .map(<[f64]>::to_vec)
            .unwrap_or_default();
        Multiplier::from_rule(n, format!("multi-scale blocks {:?}", self.scales), move |z| {
            let zero = Complex64::new(0.0, 0.0);
            let sites: Vec<i64> = z.iter().map(|v| v.round() as i64).collect();
            let Some((_, block)) = blocks.iter().find(|(_, b)| b.contains(&sites[0])) else {
                return zero;
            };
            if !sites.iter().all(|s| block.contains(s)) {
                return zero;
            }
            let mut v = 1.0;
            for (t, s) in z.iter().zip(&sites) {
                v *= psi.eval(t - *s as f64);
                if v == 0.0 {
                    return zero;
                }
            }
            let l: Vec<i64> = (0..n).map(|r| sites[r] + sites[n + r]).collect();
            let c: f64 = l.iter().map(|&lr| thm13_c(lr as u64, n)).product();
            Complex64::new(signs.draw(&l) * c * v, 0.0)
        })
        .with_derivative_bounds(bounds)
        .with_feature_scale(PSI_HAT_RADII.1 - PSI_HAT_RADII.0)
    }

    /// `T^S = sum_{K in S} T_{m_t(2^K .)}`.
    pub fn operator(&self) -> Result<DilatedSum> {
        let m = self.multiplier();
        let members = self.scales.clone().map(|k| m.dilate(2f64.powi(k as i32))).collect();
        DilatedSum::family(*self.scales.start() as i32, members)
    }

    /// `F = G`, with `F^(xi) = prod_r f^(xi_r)`.
    pub fn test_function(&self, lat: &FreqLattice) -> Result<SpectralFunction> {
        if lat.dim() != self.dim {
            return Err(LabError::LatticeMismatch("family and lattice dimensions differ".into()));
        }
        if lat.max_frequency() < F_HAT_CENTRE + F_HAT_RADII.1 {
            return Err(LabError::LatticeTooSmall(format!(
                "F^ reaches {}, lattice only {}",
                F_HAT_CENTRE + F_HAT_RADII.1,
                lat.max_frequency()
            )));
        }
        let f = self.f_hat.clone();
        Ok(SpectralFunction::from_transform(lat, |xi| {
            Complex64::new(xi.iter().map(|&t| f.eval(t - F_HAT_CENTRE)).product(), 0.0)
        }))
    }

    /// `T^S(F, G)(x)` from the localisation identity:
    /// `sum_K sum_{l in J_K^n} a_l prod_r c_{l_r} w_{l_r} 2^{-2K} psi(x_r / 2^K)^2 e^{2 pi i x_r l_r / 2^K}`.
    pub fn closed_form(&self, x: &[f64]) -> Complex64 {
        let n = self.dim;
        let mut total = Complex64::new(0.0, 0.0);
        for k in self.scales.clone() {
            let s = 2f64.powi(k as i32);
            let envelope: f64 = x
                .iter()
                .map(|&xr| self.psi_hat.inverse_transform(xr / s).powi(2) / (s * s))
                .product();
            let block: Vec<i64> = j_block(k).collect();
            let mut idx = vec![0usize; n];
            loop {
                let l: Vec<i64> = idx.iter().map(|&i| block[i]).collect();
                let mut term = Complex64::new(self.signs.draw(&l) * envelope, 0.0);
                for r in 0..n {
                    term *= thm13_c(l[r] as u64, n) * pair_count(l[r], k) as f64;
                    term *= Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x[r] * l[r] as f64 / s);
                }
                total += term;
                let mut a = 0;
                while a < n {
                    idx[a] += 1;
                    if idx[a] < block.len() {
                        break;
                    }
                    idx[a] = 0;
                    a += 1;
                }
                if a == n {
                    break;
                }
            }
        }
        total
    }
}

/// Exact-arithmetic audit of the block structure and the localisation identity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizationReport {
    pub scales: Vec<u32>,
    /// Integers `j` with `|2^K xi - j| <= 1/10` for some `xi in (1, 2)`.
    pub candidates: usize,
    /// Candidates lying in some block `I_N`.
    pub in_blocks: usize,
    pub violations: Vec<String>,
}

impl LocalizationReport {
    pub fn holds(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `J_K = I_K + I_K`, `L_K in J_K`, disjointness of the `J_K`, and that a
/// block index active against `F^` at scale `K` lies in `I_K` with
/// `[j - 1/10, j + 1/10] / 2^K` inside the flat part `[5/4, 3/2]`.
pub fn localization_check(scales: RangeInclusive<u32>) -> LocalizationReport {
    type Q = Ratio<i64>;
    let tenth = Q::new(1, 10);
    let (flat_lo, flat_hi) = (Q::new(5, 4), Q::new(3, 2));
    let mut violations = Vec::new();
    let mut candidates = 0;
    let mut in_blocks = 0;
    let all_blocks: Vec<u32> = (4..=scales.end() + 3).collect();
    for k in scales.clone() {
        let (i, j, l) = (i_block(k), j_block(k), l_block(k));
        if (2 * i.start(), 2 * i.end()) != (*j.start(), *j.end()) {
            violations.push(format!("K = {k}: I + I = [{}, {}] differs from J", 2 * i.start(), 2 * i.end()));
        }
        if l.start() < j.start() || l.end() > j.end() {
            violations.push(format!("K = {k}: L not inside J"));
        }
        if j.end() >= j_block(k + 1).start() {
            violations.push(format!("K = {k}: J_K meets J_(K+1)"));
        }
        let scale = Q::from_integer(1i64 << k);
        // |2^K xi - j| <= 1/10 with 1 < xi < 2 iff 2^K - 1/10 < j < 2^(K+1) + 1/10
        let lo = (scale - tenth).floor().to_integer() + 1;
        let hi = (scale * 2 + tenth).ceil().to_integer() - 1;
        for jr in lo..=hi {
            let q = Q::from_integer(jr);
            if q - tenth >= scale * 2 || q + tenth <= scale {
                continue;
            }
            candidates += 1;
            let owners: Vec<u32> = all_blocks.iter().copied().filter(|&b| i_block(b).contains(&jr)).collect();
            if owners.is_empty() {
                continue;
            }
            in_blocks += 1;
            if owners != [k] {
                violations.push(format!("K = {k}: j = {jr} lies in blocks {owners:?}"));
                continue;
            }
            let (a, b) = ((q - tenth) / scale, (q + tenth) / scale);
            if a < flat_lo || b > flat_hi {
                violations.push(format!("K = {k}: j = {jr} reaches [{a}, {b}] outside the flat part"));
            }
        }
    }
    LocalizationReport {
        scales: scales.collect(),
        candidates,
        in_blocks,
        violations,
    }
}

/// A dyadic `A` maximising `int_A^{2A} |psi|^2`, with that integral.
pub fn locate_a(psi_hat: &BumpProfile) -> (f64, f64) {
    let rule = GaussLegendre::new(24);
    (-8..=24)
        .map(|e| {
            let a = 2f64.powf(e as f64 / 4.0);
            let mass = rule.composite(a, 2.0 * a, 8 + (a * 0.4).ceil() as usize, |y| {
                psi_hat.inverse_transform(y).powi(2)
            });
            (a, mass)
        })
        .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
}

/// Outermost `y` at which `psi(y)` is kept; beyond it `|psi|` is below `1e-12 psi(0)`.
const PSI_CUTOFF: f64 = 400.0;

/// `int_{R^n} (sum_K A_K^n prod_r 2^{-4K} |psi(x_r / 2^K)|^4)^{1/2} dx`, for `n <= 2`.
///
/// Quadrature is Gauss-Legendre on `[0, 1]` and in `ln x` beyond, using the
/// evenness of the integrand in every coordinate.
pub fn square_function_value(fam: &Thm13Family) -> Result<f64> {
    let n = fam.dim();
    if n > 2 {
        return Err(LabError::InvalidParameter(format!("square-function quadrature supports n <= 2, got {n}")));
    }
    let rule = GaussLegendre::new(8);
    let mut nodes = Vec::new();
    let mut push = |a: f64, b: f64, log: bool| {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (&t, &w) in rule.nodes().iter().zip(rule.weights()) {
            let u = mid + half * t;
            if log {
                nodes.push((u.exp(), w * half * u.exp()));
            } else {
                nodes.push((u, w * half));
            }
        }
    };
    for p in 0..16 {
        push(p as f64 / 16.0, (p + 1) as f64 / 16.0, false);
    }
    let top = (PSI_CUTOFF * 2f64.powi(*fam.scales().end() as i32)).ln();
    let panels = (top / 0.01).ceil() as usize;
    for p in 0..panels {
        push(p as f64 * top / panels as f64, (p + 1) as f64 * top / panels as f64, true);
    }
    let psi = fam.psi_hat();
    let scales: Vec<u32> = fam.scales().collect();
    let mass: Vec<f64> = scales.iter().map(|&k| fam.block_mass(k).powi(n as i32)).collect();
    // P[K][i] = 2^{-4K} |psi(x_i / 2^K)|^4
    let factors: Vec<Vec<f64>> = scales
        .iter()
        .map(|&k| {
            let s = 2f64.powi(k as i32);
            nodes
                .par_iter()
                .map(|&(x, _)| {
                    let y = x / s;
                    if y > PSI_CUTOFF {
                        0.0
                    } else {
                        psi.inverse_transform(y).powi(4) / s.powi(4)
                    }
                })
                .collect()
        })
        .collect();
    let half_line: f64 = match n {
        1 => (0..nodes.len())
            .map(|i| nodes[i].1 * mass.iter().zip(&factors).map(|(a, p)| a * p[i]).sum::<f64>().sqrt())
            .sum(),
        _ => (0..nodes.len())
            .into_par_iter()
            .map(|i| {
                (0..nodes.len())
                    .map(|j| {
                        let s: f64 = mass.iter().zip(&factors).map(|(a, p)| a * p[i] * p[j]).sum();
                        nodes[i].1 * nodes[j].1 * s.sqrt()
                    })
                    .sum::<f64>()
            })
            .sum(),
    };
    Ok(2f64.powi(n as i32) * half_line)
}
