//! Tabulated scaling function and wavelet on a dyadic mesh.

use serde::Serialize;

use super::filters::{daubechies, quadrature_mirror, required_genus};
use crate::error::{LabError, Result};

/// Default dyadic tabulation depth (`2^-16` spacing).
pub const DEFAULT_DEPTH: usize = 16;

/// Scaling function `psi_F` or wavelet `psi_M` factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Gender {
    F,
    M,
}

/// Compactly supported orthonormal pair with values on `2^-depth Z`.
///
/// Both functions are supported in `[0, 2N - 1]` for the genus `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveletSystem {
    smoothness: usize,
    moments: usize,
    genus: usize,
    low: Vec<f64>,
    high: Vec<f64>,
    depth: usize,
    phi: Vec<f64>,
    psi: Vec<f64>,
}

/// Summary of a system for reports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SystemInfo {
    pub smoothness: usize,
    pub moments: usize,
    pub genus: usize,
    pub depth: usize,
    pub support: f64,
}

pub fn build_wavelet_system(smoothness: usize, moments: usize) -> Result<WaveletSystem> {
    WaveletSystem::build(smoothness, moments, DEFAULT_DEPTH)
}

impl WaveletSystem {
    /// `dbN` with the smallest `N` meeting both requirements, tabulated to `depth`.
    pub fn build(smoothness: usize, moments: usize, depth: usize) -> Result<Self> {
        if depth < 10 || depth > 22 {
            return Err(LabError::InvalidParameter(format!("tabulation depth {depth} outside 10..=22")));
        }
        let genus = required_genus(smoothness, moments)?;
        let low = daubechies(genus)?;
        let high = quadrature_mirror(&low);
        let phi = cascade(&low, depth)?;
        let psi = wavelet_from_scaling(&phi, &high, depth);
        Ok(Self {
            smoothness,
            moments,
            genus,
            low,
            high,
            depth,
            phi,
            psi,
        })
    }

    pub fn info(&self) -> SystemInfo {
        SystemInfo {
            smoothness: self.smoothness,
            moments: self.moments,
            genus: self.genus,
            depth: self.depth,
            support: self.support(),
        }
    }

    pub fn smoothness(&self) -> usize {
        self.smoothness
    }

    pub fn moments(&self) -> usize {
        self.moments
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn low_pass(&self) -> &[f64] {
        &self.low
    }

    pub fn high_pass(&self) -> &[f64] {
        &self.high
    }

    /// Right end of the common support `[0, 2N - 1]`.
    pub fn support(&self) -> f64 {
        (2 * self.genus - 1) as f64
    }

    /// Integer length of the support.
    pub fn support_len(&self) -> i64 {
        2 * self.genus as i64 - 1
    }

    pub fn table(&self, gender: Gender) -> &[f64] {
        match gender {
            Gender::F => &self.phi,
            Gender::M => &self.psi,
        }
    }

    /// Value at `i / 2^res` for `res <= depth`; zero off the support.
    pub fn dyadic(&self, gender: Gender, i: i64, res: usize) -> f64 {
        debug_assert!(res <= self.depth);
        let idx = i << (self.depth - res);
        let t = self.table(gender);
        if idx < 0 || idx as usize >= t.len() {
            0.0
        } else {
            t[idx as usize]
        }
    }

    /// Value at arbitrary `x` by linear interpolation of the table.
    pub fn eval(&self, gender: Gender, x: f64) -> f64 {
        let t = self.table(gender);
        let s = x * (1u64 << self.depth) as f64;
        if !(s >= 0.0) || s >= (t.len() - 1) as f64 {
            return 0.0;
        }
        let i = s.floor() as usize;
        let w = s - i as f64;
        t[i] * (1.0 - w) + t[i + 1] * w
    }

    /// Rectangle-rule `int x^p theta(x) dx` on the tabulation mesh.
    pub fn moment(&self, gender: Gender, p: usize) -> f64 {
        let step = 1.0 / (1u64 << self.depth) as f64;
        self.table(gender)
            .iter()
            .enumerate()
            .map(|(i, v)| (i as f64 * step).powi(p as i32) * v)
            .sum::<f64>()
            * step
    }

    /// `<theta_a(. - shift_a), theta_b(. - shift_b)>` at integer shifts.
    pub fn inner_product(&self, a: Gender, shift_a: i64, b: Gender, shift_b: i64) -> f64 {
        self.scaled_inner_product((a, 0, shift_a), (b, 0, shift_b))
    }

    /// `<2^{l/2} theta_a(2^l x - mu), 2^{l'/2} theta_b(2^{l'} x - mu')>` for `(gender, l, mu)` pairs.
    ///
    /// Rectangle sums on the three finest meshes, combined by Aitken
    /// extrapolation; the rough low-genus members converge only algebraically.
    pub fn scaled_inner_product(&self, a: (Gender, u32, i64), b: (Gender, u32, i64)) -> f64 {
        let sums: Vec<f64> = (0..3).map(|c| self.rectangle_product(a, b, c)).collect();
        let (d1, d2) = (sums[0] - sums[1], sums[1] - sums[2]);
        let denom = d1 - d2;
        if denom.abs() <= 1e-3 * d2.abs() || d1 * d2 <= 0.0 || d1.abs() >= d2.abs() {
            return sums[0];
        }
        sums[0] - d1 * d1 / denom
    }

    /// Rectangle rule on the mesh `2^-(depth - coarsen)`.
    fn rectangle_product(&self, a: (Gender, u32, i64), b: (Gender, u32, i64), coarsen: usize) -> f64 {
        let d = self.depth;
        let len = self.support_len();
        // x = i 2^-depth lies in the support when i in [mu, mu + len] 2^{depth - l}
        let span = |(_, l, mu): (Gender, u32, i64)| (mu << (d - l as usize), (mu + len) << (d - l as usize));
        let (lo_a, hi_a) = span(a);
        let (lo_b, hi_b) = span(b);
        let (lo, hi) = (lo_a.max(lo_b), hi_a.min(hi_b));
        let stride = 1i64 << coarsen;
        let value = |(g, l, mu): (Gender, u32, i64), i: i64| {
            let t = self.table(g);
            let idx = (i << l) - (mu << d);
            if idx < 0 || idx as usize >= t.len() { 0.0 } else { t[idx as usize] }
        };
        let first = lo.div_euclid(stride) * stride;
        let total: f64 = (first..=hi)
            .step_by(stride as usize)
            .map(|i| value(a, i) * value(b, i))
            .sum();
        total * stride as f64 / (1u64 << d) as f64 * 2f64.powf((a.1 + b.1) as f64 / 2.0)
    }
}

/// Cascade algorithm: integer values from the refinement eigenvector, then dyadic refinement.
fn cascade(h: &[f64], depth: usize) -> Result<Vec<f64>> {
    let len = h.len();
    let last = len - 1;
    let s2 = std::f64::consts::SQRT_2;
    let tap = |k: i64| if k >= 0 && (k as usize) < len { h[k as usize] } else { 0.0 };
    // (A - I) v = 0 with A_ij = sqrt2 h_{2i-j} on 0..=last, closed by sum v = 1
    let size = last + 1;
    let mut a = vec![vec![0.0; size + 1]; size];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(size).enumerate() {
            *cell = s2 * tap(2 * i as i64 - j as i64) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for cell in a[0].iter_mut() {
        *cell = 1.0;
    }
    let v = solve(a)?;
    let mut values = v;
    for level in 0..depth {
        let step = 1usize << level;
        let count = last * (step << 1) + 1;
        let next: Vec<f64> = (0..count)
            .map(|m| {
                (0..len)
                    .filter_map(|k| {
                        // phi(m / 2^{l+1}) = sqrt2 sum_k h_k phi((m - k 2^l) / 2^l)
                        let idx = m as i64 - (k * step) as i64;
                        (idx >= 0 && (idx as usize) < values.len()).then(|| h[k] * values[idx as usize])
                    })
                    .sum::<f64>()
                    * s2
            })
            .collect();
        values = next;
    }
    Ok(values)
}

fn wavelet_from_scaling(phi: &[f64], g: &[f64], depth: usize) -> Vec<f64> {
    let s2 = std::f64::consts::SQRT_2;
    let unit = 1usize << depth;
    (0..phi.len())
        .map(|m| {
            // psi(m / 2^d) = sqrt2 sum_k g_k phi((2m - k 2^d) / 2^d)
            g.iter()
                .enumerate()
                .filter_map(|(k, gk)| {
                    let idx = 2 * m as i64 - (k * unit) as i64;
                    (idx >= 0 && (idx as usize) < phi.len()).then(|| gk * phi[idx as usize])
                })
                .sum::<f64>()
                * s2
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve(mut a: Vec<Vec<f64>>) -> Result<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[piv][col].abs() < 1e-14 {
            return Err(LabError::NonConvergence("singular refinement system".into()));
        }
        a.swap(col, piv);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        a[row][k] -= f * a[col][k];
                    }
                }
            }
        }
    }
    Ok((0..n).map(|i| a[i][n] / a[i][i]).collect())
}
