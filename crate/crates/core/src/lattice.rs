//! Frequency lattices, spectral and sampled functions on the torus.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};

/// The integer box `[-R, R]^n` scaled by a frequency spacing `h`.
///
/// A lattice models functions on the torus of period `1/h` in every
/// coordinate. Synthesis samples `oversample * (2R + 1)` points per axis.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqLattice {
    dim: usize,
    radius: usize,
    oversample: usize,
    spacing: f64,
}

impl FreqLattice {
    pub fn new(dim: usize, radius: usize, oversample: usize) -> Result<Self> {
        if dim == 0 {
            return Err(LabError::InvalidLattice("dimension must be positive".into()));
        }
        if radius == 0 {
            return Err(LabError::InvalidLattice("radius must be at least 1".into()));
        }
        if oversample == 0 {
            return Err(LabError::InvalidLattice("oversample must be at least 1".into()));
        }
        let side = 2 * radius + 1;
        if side.checked_pow(dim as u32).is_none() {
            return Err(LabError::InvalidLattice(format!(
                "(2R+1)^n overflows for R = {radius}, n = {dim}"
            )));
        }
        Ok(Self {
            dim,
            radius,
            oversample,
            spacing: 1.0,
        })
    }

    /// Same lattice with frequency step `h` (torus period `1/h`).
    pub fn with_spacing(mut self, spacing: f64) -> Result<Self> {
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(LabError::InvalidLattice(format!("spacing {spacing} must be positive")));
        }
        self.spacing = spacing;
        Ok(self)
    }

    pub fn with_oversample(mut self, oversample: usize) -> Result<Self> {
        if oversample == 0 {
            return Err(LabError::InvalidLattice("oversample must be at least 1".into()));
        }
        self.oversample = oversample;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn period(&self) -> f64 {
        1.0 / self.spacing
    }

    /// Points per axis, `2R + 1`.
    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Total number of lattice points `(2R+1)^n`.
    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spatial samples per axis used by [`synthesize`].
    pub fn grid_side(&self) -> usize {
        self.oversample * self.side()
    }

    /// Spatial samples per axis for bilinear output, whose frequencies reach `2R`.
    pub fn product_grid_side(&self) -> usize {
        self.oversample.max(2) * self.side()
    }

    /// Largest represented frequency along one axis.
    pub fn max_frequency(&self) -> f64 {
        self.radius as f64 * self.spacing
    }

    /// Flat index of an integer multi-index in `[-R, R]^n`.
    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        debug_assert_eq!(k.len(), self.dim);
        let r = self.radius as i64;
        let side = self.side();
        let mut idx = 0usize;
        for &ki in k {
            if ki < -r || ki > r {
                return None;
            }
            idx = idx * side + (ki + r) as usize;
        }
        Some(idx)
    }

    /// Integer multi-index of a flat index.
    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let r = self.radius as i64;
        let mut k = vec![0i64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (idx % side) as i64 - r;
            idx /= side;
        }
        k
    }

    /// Frequency vector `h * k` of a flat index.
    pub fn frequency(&self, idx: usize) -> Vec<f64> {
        self.point(idx)
            .into_iter()
            .map(|k| k as f64 * self.spacing)
            .collect()
    }

    /// Nearest lattice multi-index of a frequency, if it lies on the lattice.
    pub fn snap(&self, xi: &[f64]) -> Option<Vec<i64>> {
        let mut out = Vec::with_capacity(xi.len());
        for &x in xi {
            let k = (x / self.spacing).round();
            if ((k * self.spacing) - x).abs() > 1e-9 * self.spacing.max(x.abs()) {
                return None;
            }
            out.push(k as i64);
        }
        self.index_of(&out).map(|_| out)
    }

    fn check_same(&self, other: &FreqLattice) -> Result<()> {
        if self != other {
            return Err(LabError::LatticeMismatch(format!("{self:?} vs {other:?}")));
        }
        Ok(())
    }
}

/// Fourier coefficients of a trigonometric polynomial on a [`FreqLattice`].
///
/// The function is `f(x) = sum_xi coeffs(xi) e^{2 pi i x.xi}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralFunction {
    lattice: FreqLattice,
    coeffs: Vec<Complex64>,
}

impl SpectralFunction {
    pub fn zeros(lattice: &FreqLattice) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); lattice.len()],
            lattice: lattice.clone(),
        }
    }

    pub fn from_coeffs(lattice: &FreqLattice, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(LabError::LatticeMismatch(format!(
                "{} coefficients for a lattice of {} points",
                coeffs.len(),
                lattice.len()
            )));
        }
        Ok(Self {
            lattice: lattice.clone(),
            coeffs,
        })
    }

    /// Coefficients `h^n * fhat(xi)` from a continuum Fourier transform.
    pub fn from_transform<F>(lattice: &FreqLattice, fhat: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64,
    {
        let weight = lattice.spacing().powi(lattice.dim() as i32);
        let coeffs = (0..lattice.len())
            .map(|i| fhat(&lattice.frequency(i)) * weight)
            .collect();
        Self {
            lattice: lattice.clone(),
            coeffs,
        }
    }

    /// A single mode `e^{2 pi i x.xi_0}` at integer multi-index `k`.
    pub fn single_mode(lattice: &FreqLattice, k: &[i64]) -> Result<Self> {
        let idx = lattice
            .index_of(k)
            .ok_or_else(|| LabError::LatticeTooSmall(format!("mode {k:?} outside lattice")))?;
        let mut f = Self::zeros(lattice);
        f.coeffs[idx] = Complex64::new(1.0, 0.0);
        Ok(f)
    }

    pub fn lattice(&self) -> &FreqLattice {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn get(&self, k: &[i64]) -> Complex64 {
        self.lattice
            .index_of(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_default()
    }

    /// `L^2` norm over the period cell computed from the coefficients.
    pub fn l2_norm(&self) -> f64 {
        let cell = self.lattice.period().powi(self.lattice.dim() as i32);
        (cell * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()).sqrt()
    }

    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| c.re != 0.0 || c.im != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// `alpha * self + beta * other`.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        self.lattice.check_same(&other.lattice)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self {
            lattice: self.lattice.clone(),
            coeffs,
        })
    }

    /// Multiply every coefficient by `e^{-2 pi i a.xi}`, i.e. translate by `a`.
    pub fn translate(&self, shift: &[f64]) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let xi = self.lattice.frequency(i);
            let phase: f64 = xi.iter().zip(shift).map(|(x, a)| x * a).sum();
            *c *= Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase);
        }
        out
    }

    pub(crate) fn same_lattice(&self, other: &Self) -> Result<()> {
        self.lattice.check_same(&other.lattice)
    }
}

/// Samples of a function on the uniform grid of a period cell `[0, L)^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    dim: usize,
    side: usize,
    period: f64,
    samples: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(dim: usize, side: usize, period: f64, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != side.pow(dim as u32) {
            return Err(LabError::InvalidParameter(format!(
                "{} samples for a {side}^{dim} grid",
                samples.len()
            )));
        }
        Ok(Self {
            dim,
            side,
            period,
            samples,
        })
    }

    pub fn zeros(dim: usize, side: usize, period: f64) -> Self {
        Self {
            dim,
            side,
            period,
            samples: vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    /// Sampling interval per axis.
    pub fn step(&self) -> f64 {
        self.period / self.side as f64
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    /// Spatial coordinates of a flat sample index.
    pub fn position(&self, mut idx: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for slot in x.iter_mut().rev() {
            *slot = (idx % self.side) as f64 * self.step();
            idx /= self.side;
        }
        x
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.side == other.side && self.period == other.period
    }

    /// Pointwise map into a new grid function of the same shape.
    pub fn map<F: Fn(Complex64) -> Complex64>(&self, f: F) -> Self {
        Self {
            samples: self.samples.iter().map(|&z| f(z)).collect(),
            ..self.clone()
        }
    }

    /// Pointwise combination of two grids of the same shape.
    pub fn zip_with<F>(&self, other: &Self, f: F) -> Result<Self>
    where
        F: Fn(Complex64, Complex64) -> Complex64,
    {
        if !self.same_shape(other) {
            return Err(LabError::LatticeMismatch("grid shapes differ".into()));
        }
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            ..self.clone()
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Rectangle-rule `L^p` norm over the period cell; `p = inf` gives the max.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        lp_norm(self, p)
    }
}

/// Rectangle-rule `L^p` norm of `u` over its period cell.
pub fn lp_norm(u: &GridFunction, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(LabError::InvalidExponent(p));
    }
    if p.is_infinite() {
        return Ok(u.max_abs());
    }
    let cell = u.step().powi(u.dim as i32);
    let sum: f64 = if p == 1.0 {
        u.samples.iter().map(|z| z.norm()).sum()
    } else if p == 2.0 {
        u.samples.iter().map(|z| z.norm_sqr()).sum()
    } else {
        u.samples.iter().map(|z| z.norm().powf(p)).sum()
    };
    Ok((sum * cell).powf(1.0 / p))
}

/// Inverse synthesis `x -> sum_xi coeffs(xi) e^{2 pi i x.xi}` on the lattice grid.
pub fn synthesize(f: &SpectralFunction) -> GridFunction {
    let lat = f.lattice();
    synthesize_on(lat.dim(), lat.radius(), f.coeffs(), lat.grid_side(), lat.period())
}

/// Places coefficients indexed by `[-radius, radius]^dim` on a `side^dim`
/// FFT grid and applies the unnormalised inverse transform.
pub(crate) fn synthesize_on(
    dim: usize,
    radius: usize,
    coeffs: &[Complex64],
    side: usize,
    period: f64,
) -> GridFunction {
    assert!(side > 2 * radius, "grid too coarse for alias-free synthesis");
    let cside = 2 * radius + 1;
    let mut data = vec![Complex64::new(0.0, 0.0); side.pow(dim as u32)];
    for (ci, &c) in coeffs.iter().enumerate() {
        if c.re == 0.0 && c.im == 0.0 {
            continue;
        }
        let mut rem = ci;
        let mut target = 0usize;
        let mut stride = 1usize;
        for _ in 0..dim {
            let k = (rem % cside) as i64 - radius as i64;
            rem /= cside;
            let wrapped = k.rem_euclid(side as i64) as usize;
            target += wrapped * stride;
            stride *= side;
        }
        data[target] = c;
    }
    inverse_fft_nd(&mut data, side, dim);
    GridFunction {
        dim,
        side,
        period,
        samples: data,
    }
}

/// In-place unnormalised inverse DFT along every axis of a row-major cube.
pub(crate) fn inverse_fft_nd(data: &mut [Complex64], side: usize, dim: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(side);
    transform_axes(data, side, dim, &fft);
}

/// In-place unnormalised forward DFT along every axis of a row-major cube.
pub(crate) fn forward_fft_nd(data: &mut [Complex64], side: usize, dim: usize) {
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(side);
    transform_axes(data, side, dim, &fft);
}

fn transform_axes(data: &mut [Complex64], side: usize, dim: usize, fft: &Arc<dyn Fft<f64>>) {
    let total = data.len();
    let mut line = vec![Complex64::new(0.0, 0.0); side];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for outer in (0..total).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}
