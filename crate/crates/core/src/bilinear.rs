//! The bilinear operator `T_m`, dilated sums, adjoints and witnessed norms.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::lattice::{lp_norm, synthesize_on, GridFunction, SpectralFunction};
use crate::multiplier::Multiplier;

/// Fourier coefficients of `T_m(f, g)` on the doubled box `[-2R, 2R]^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpectrum {
    dim: usize,
    radius: usize,
    spacing: f64,
    grid_side: usize,
    coeffs: Vec<Complex64>,
}

impl OutputSpectrum {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half-width `2R` of the output box.
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Integer multi-index of a flat coefficient index.
    pub fn point(&self, mut idx: usize) -> Vec<i64> {
        let side = 2 * self.radius + 1;
        let mut k = vec![0i64; self.dim];
        for slot in k.iter_mut().rev() {
            *slot = (idx % side) as i64 - self.radius as i64;
            idx /= side;
        }
        k
    }

    pub fn index_of(&self, k: &[i64]) -> Option<usize> {
        let side = 2 * self.radius + 1;
        let r = self.radius as i64;
        k.iter().try_fold(0usize, |acc, &ki| {
            (ki.abs() <= r).then(|| acc * side + (ki + r) as usize)
        })
    }

    pub fn synthesize(&self) -> GridFunction {
        synthesize_on(
            self.dim,
            self.radius,
            &self.coeffs,
            self.grid_side,
            1.0 / self.spacing,
        )
    }
}

/// Accumulates `sum_{xi + eta = tau} m(xi, eta) f^(xi) g^(eta)` for every `tau`.
pub fn bilinear_spectrum(m: &Multiplier, f: &SpectralFunction, g: &SpectralFunction) -> Result<OutputSpectrum> {
    f.same_lattice(g)?;
    let lat = f.lattice();
    if m.dim() != lat.dim() {
        return Err(LabError::LatticeMismatch(format!(
            "multiplier on R^{} x R^{} applied on a {}-dimensional lattice",
            m.dim(),
            m.dim(),
            lat.dim()
        )));
    }
    let n = lat.dim();
    let radius = 2 * lat.radius();
    let out_side = 2 * radius + 1;
    let out_len = out_side.pow(n as u32);
    let supp_f = f.support();
    let g_terms: Vec<(Vec<i64>, Vec<f64>, Complex64)> = g
        .support()
        .into_iter()
        .map(|i| (lat.point(i), lat.frequency(i), g.coeffs()[i]))
        .collect();
    // fixed chunking keeps the reduction order independent of the thread count
    let chunk = supp_f.len().div_ceil(32).max(1);
    let partials: Vec<Vec<Complex64>> = supp_f
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![Complex64::new(0.0, 0.0); out_len];
            let mut z = vec![0.0; 2 * n];
            for &i in block {
                let k = lat.point(i);
                z[..n].copy_from_slice(&lat.frequency(i));
                let fv = f.coeffs()[i];
                for (l, eta, gv) in &g_terms {
                    z[n..].copy_from_slice(eta);
                    let mv = m.eval_joint(&z);
                    if !(mv.re.is_finite() && mv.im.is_finite()) {
                        return Err(LabError::NonFinite(z.clone()));
                    }
                    let mut idx = 0usize;
                    for a in 0..n {
                        idx = idx * out_side + (k[a] + l[a] + radius as i64) as usize;
                    }
                    acc[idx] += mv * fv * gv;
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); out_len];
    for p in &partials {
        for (c, v) in coeffs.iter_mut().zip(p) {
            *c += v;
        }
    }
    Ok(OutputSpectrum {
        dim: n,
        radius,
        spacing: lat.spacing(),
        grid_side: lat.product_grid_side(),
        coeffs,
    })
}

/// `T_m(f, g)` on the product grid by output-frequency accumulation and one inverse FFT.
pub fn apply_bilinear(m: &Multiplier, f: &SpectralFunction, g: &SpectralFunction) -> Result<GridFunction> {
    Ok(bilinear_spectrum(m, f, g)?.synthesize())
}

/// `T_m(f, g)` by the literal double sum at every grid point.
///
/// Quadratic in the lattice size per sample; meant as a reference for small lattices.
pub fn apply_bilinear_direct(m: &Multiplier, f: &SpectralFunction, g: &SpectralFunction) -> Result<GridFunction> {
    f.same_lattice(g)?;
    let lat = f.lattice();
    let n = lat.dim();
    if m.dim() != n {
        return Err(LabError::LatticeMismatch("multiplier and lattice dimensions differ".into()));
    }
    let side = lat.product_grid_side();
    let mut terms = Vec::new();
    let mut z = vec![0.0; 2 * n];
    for i in f.support() {
        for j in g.support() {
            z[..n].copy_from_slice(&lat.frequency(i));
            z[n..].copy_from_slice(&lat.frequency(j));
            let mv = m.eval_joint(&z);
            if !(mv.re.is_finite() && mv.im.is_finite()) {
                return Err(LabError::NonFinite(z.clone()));
            }
            let (k, l) = (lat.point(i), lat.point(j));
            let tau: Vec<i64> = k.iter().zip(&l).map(|(a, b)| a + b).collect();
            terms.push((tau, mv * f.coeffs()[i] * g.coeffs()[j]));
        }
    }
    // x_j . tau_freq = (j L / P)(tau h) = j tau / P exactly
    let twiddle: Vec<Complex64> = (0..side)
        .map(|t| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t as f64 / side as f64))
        .collect();
    let total = side.pow(n as u32);
    let samples: Vec<Complex64> = (0..total)
        .into_par_iter()
        .map(|p| {
            let mut jj = vec![0i64; n];
            let mut r = p;
            for slot in jj.iter_mut().rev() {
                *slot = (r % side) as i64;
                r /= side;
            }
            terms
                .iter()
                .map(|(tau, w)| {
                    let phase: i64 = jj.iter().zip(tau).map(|(a, b)| a * b).sum();
                    w * twiddle[phase.rem_euclid(side as i64) as usize]
                })
                .sum()
        })
        .collect();
    GridFunction::new(n, side, lat.period(), samples)
}

/// Per-scale content of a dilated sum.
#[derive(Debug, Clone)]
pub enum DilatedTerms {
    /// `r_k m(2^k .)` for one base multiplier.
    Signs { base: Multiplier, signs: Vec<f64> },
    /// An arbitrary family `M_k`, one multiplier per scale.
    Family(Vec<Multiplier>),
}

/// `sum_{k = k_min}^{k_max} r_k T_{m(2^k .)}` or `sum_k T_{M_k}`.
#[derive(Debug, Clone)]
pub struct DilatedSum {
    k_min: i32,
    terms: DilatedTerms,
}

/// Default dyadic range for truncated sums.
pub const DEFAULT_K_RANGE: (i32, i32) = (-12, 12);

impl DilatedSum {
    pub fn new(base: Multiplier, k_min: i32, signs: Vec<f64>) -> Result<Self> {
        if signs.is_empty() {
            return Err(LabError::Empty("dilated sum with empty k-range".into()));
        }
        if let Some(bad) = signs.iter().find(|r| !(r.abs() <= 1.0)) {
            return Err(LabError::InvalidParameter(format!("|r_k| = {bad} exceeds 1")));
        }
        Ok(Self {
            k_min,
            terms: DilatedTerms::Signs { base, signs },
        })
    }

    pub fn family(k_min: i32, members: Vec<Multiplier>) -> Result<Self> {
        if members.is_empty() {
            return Err(LabError::Empty("dilated sum with empty k-range".into()));
        }
        Ok(Self {
            k_min,
            terms: DilatedTerms::Family(members),
        })
    }

    pub fn k_range(&self) -> (i32, i32) {
        let len = match &self.terms {
            DilatedTerms::Signs { signs, .. } => signs.len(),
            DilatedTerms::Family(m) => m.len(),
        };
        (self.k_min, self.k_min + len as i32 - 1)
    }

    pub fn terms(&self) -> &DilatedTerms {
        &self.terms
    }

    /// The single multiplier `sum_k r_k m(2^k z)`.
    pub fn combined(&self) -> Multiplier {
        let k_min = self.k_min;
        match &self.terms {
            DilatedTerms::Signs { base, signs } => {
                let rule = base.rule();
                let active: Vec<(f64, f64)> = signs
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r != 0.0)
                    .map(|(i, &r)| (r, 2f64.powi(k_min + i as i32)))
                    .collect();
                Multiplier::from_rule(base.dim(), format!("dilated sum of {}", base.label()), move |z| {
                    let mut scaled = vec![0.0; z.len()];
                    active
                        .iter()
                        .map(|&(r, s)| {
                            for (d, v) in scaled.iter_mut().zip(z) {
                                *d = v * s;
                            }
                            rule(&scaled) * r
                        })
                        .sum()
                })
            }
            DilatedTerms::Family(members) => {
                let rules: Vec<_> = members.iter().map(Multiplier::rule).collect();
                Multiplier::from_rule(members[0].dim(), "dilated family", move |z| {
                    rules.iter().map(|r| r(z)).sum()
                })
            }
        }
    }

    /// Sup-norm bound on the scales left out of the truncated range, from the decay record.
    pub fn tail_bound(&self, f: &SpectralFunction, g: &SpectralFunction) -> Option<f64> {
        let DilatedTerms::Signs { base, .. } = &self.terms else {
            return None;
        };
        let decay = base.decay()?;
        let lat = f.lattice();
        let (k_min, k_max) = self.k_range();
        let rho_min = lat.spacing();
        let rho_max = (2.0 * lat.dim() as f64).sqrt() * lat.max_frequency();
        let high = decay.c_prime * rho_min.powf(-decay.delta) * 2f64.powf(-decay.delta * (k_max + 1) as f64)
            / (1.0 - 2f64.powf(-decay.delta));
        let low = decay.c_prime * rho_max * 2f64.powi(k_min);
        let l1 = |s: &SpectralFunction| s.coeffs().iter().map(|c| c.norm()).sum::<f64>();
        Some((high + low) * l1(f) * l1(g))
    }
}

/// Output of [`apply_dilated_sum`] with the truncation report.
#[derive(Debug, Clone)]
pub struct DilatedOutput {
    pub grid: GridFunction,
    pub k_range: (i32, i32),
    pub tail_bound: Option<f64>,
}

pub fn apply_dilated_sum(t: &DilatedSum, f: &SpectralFunction, g: &SpectralFunction) -> Result<DilatedOutput> {
    Ok(DilatedOutput {
        grid: apply_bilinear(&t.combined(), f, g)?,
        k_range: t.k_range(),
        tail_bound: t.tail_bound(f, g),
    })
}

/// Multipliers of the two adjoints: `m(-(xi+eta), eta)` and `m(xi, -(xi+eta))`.
pub fn adjoint_multipliers(m: &Multiplier) -> (Multiplier, Multiplier) {
    let n = m.dim();
    let r1 = m.rule();
    let r2 = m.rule();
    let m1 = Multiplier::from_rule(n, format!("first adjoint of {}", m.label()), move |z| {
        let mut w = z.to_vec();
        for a in 0..n {
            w[a] = -(z[a] + z[n + a]);
        }
        r1(&w)
    });
    let m2 = Multiplier::from_rule(n, format!("second adjoint of {}", m.label()), move |z| {
        let mut w = z.to_vec();
        for a in 0..n {
            w[n + a] = -(z[a] + z[n + a]);
        }
        r2(&w)
    });
    (m1, m2)
}

/// Inputs for the predicted bound `C_0^{1 - q/4} ||m||_q^{q/4}` (constant taken as 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundInputs {
    pub q: f64,
    pub lq_norm: f64,
    pub c0: f64,
}

impl BoundInputs {
    pub fn predicted(&self) -> f64 {
        self.c0.powf(1.0 - self.q / 4.0) * self.lq_norm.powf(self.q / 4.0)
    }
}

/// Witnessed lower bound on `||T_m||_{L^2 x L^2 -> L^1}` and the predicted upper bound.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormReport {
    pub multiplier: String,
    pub q: Option<f64>,
    pub lq_norm: Option<f64>,
    pub c0: Option<f64>,
    pub predicted: Option<f64>,
    pub witnessed: f64,
    pub best_pair: usize,
    pub ratios: Vec<f64>,
    pub lattice_radius: usize,
    pub lattice_dim: usize,
    pub spacing: f64,
    pub method: String,
}

pub fn witness_norm(
    m: &Multiplier,
    pairs: &[(SpectralFunction, SpectralFunction)],
    bound: Option<BoundInputs>,
) -> Result<NormReport> {
    let first = pairs
        .first()
        .ok_or_else(|| LabError::Empty("witness set is empty".into()))?;
    let ratios = pairs
        .iter()
        .enumerate()
        .map(|(i, (f, g))| {
            let denom = f.l2_norm() * g.l2_norm();
            if denom == 0.0 {
                return Err(LabError::ZeroNormPair(i));
            }
            Ok(lp_norm(&apply_bilinear(m, f, g)?, 1.0)? / denom)
        })
        .collect::<Result<Vec<f64>>>()?;
    let (best_pair, witnessed) = ratios
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let lat = first.0.lattice();
    Ok(NormReport {
        multiplier: m.label().to_string(),
        q: bound.map(|b| b.q),
        lq_norm: bound.map(|b| b.lq_norm),
        c0: bound.map(|b| b.c0),
        predicted: bound.map(|b| b.predicted()),
        witnessed,
        best_pair,
        ratios,
        lattice_radius: lat.radius(),
        lattice_dim: lat.dim(),
        spacing: lat.spacing(),
        method: "witness lower bound: maximum over supplied test pairs, not a convergent norm iteration".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{synthesize, FreqLattice};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spectral(lat: &FreqLattice, rng: &mut ChaCha8Rng) -> SpectralFunction {
        let c = (0..lat.len())
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        SpectralFunction::from_coeffs(lat, c).unwrap()
    }

    fn random_multiplier(dim: usize, rng: &mut ChaCha8Rng) -> Multiplier {
        let waves: Vec<(Vec<f64>, Complex64)> = (0..6)
            .map(|_| {
                let k = (0..2 * dim).map(|_| rng.gen_range(-0.5..0.5)).collect();
                (k, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            })
            .collect();
        Multiplier::from_rule(dim, "random waves", move |z| {
            waves
                .iter()
                .map(|(k, a)| {
                    let ph: f64 = k.iter().zip(z).map(|(u, v)| u * v).sum();
                    a * Complex64::from_polar(1.0, ph)
                })
                .sum()
        })
    }

    fn max_rel(a: &GridFunction, b: &GridFunction) -> f64 {
        let scale = b.max_abs().max(1e-300);
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn constant_one_gives_product() {
        let lat = FreqLattice::new(1, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = random_spectral(&lat, &mut rng);
        let g = random_spectral(&lat, &mut rng);
        let t = apply_bilinear(&Multiplier::constant(1, Complex64::new(1.0, 0.0)), &f, &g).unwrap();
        let fine = lat.clone().with_oversample(2).unwrap();
        let fs = synthesize(&SpectralFunction::from_coeffs(&fine, f.coeffs().to_vec()).unwrap());
        let gs = synthesize(&SpectralFunction::from_coeffs(&fine, g.coeffs().to_vec()).unwrap());
        let prod = fs.zip_with(&gs, |a, b| a * b).unwrap();
        assert!(max_rel(&t, &prod) < 1e-12);
    }

    #[test]
    fn single_modes() {
        let lat = FreqLattice::new(1, 4, 1).unwrap();
        let m = Multiplier::from_rule(1, "lin", |z| Complex64::new(1.0 + z[0], -z[1]));
        let f = SpectralFunction::single_mode(&lat, &[2]).unwrap();
        let g = SpectralFunction::single_mode(&lat, &[-3]).unwrap();
        let t = apply_bilinear(&m, &f, &g).unwrap();
        let expect = Complex64::new(3.0, 3.0);
        for (j, v) in t.samples().iter().enumerate() {
            let x = t.position(j)[0];
            let e = expect * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * (-x));
            assert!((v - e).norm() < 1e-12);
        }
    }

    #[test]
    fn fast_equals_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for (dim, r) in [(1, 8), (2, 2)] {
            let lat = FreqLattice::new(dim, r, 1).unwrap();
            for _ in 0..5 {
                let m = random_multiplier(dim, &mut rng);
                let f = random_spectral(&lat, &mut rng);
                let g = random_spectral(&lat, &mut rng);
                let fast = apply_bilinear(&m, &f, &g).unwrap();
                let direct = apply_bilinear_direct(&m, &f, &g).unwrap();
                assert!(max_rel(&fast, &direct) < 1e-10);
            }
        }
    }

    #[test]
    fn lattice_mismatch_and_non_finite() {
        let a = FreqLattice::new(1, 3, 1).unwrap();
        let b = FreqLattice::new(1, 4, 1).unwrap();
        let one = Multiplier::constant(1, Complex64::new(1.0, 0.0));
        let f = SpectralFunction::single_mode(&a, &[0]).unwrap();
        let g = SpectralFunction::single_mode(&b, &[0]).unwrap();
        assert!(matches!(apply_bilinear(&one, &f, &g), Err(LabError::LatticeMismatch(_))));
        let bad = Multiplier::from_rule(1, "nan", |_| Complex64::new(f64::NAN, 0.0));
        assert!(matches!(apply_bilinear(&bad, &f, &f), Err(LabError::NonFinite(_))));
    }

    #[test]
    fn translation_covariance() {
        let lat = FreqLattice::new(1, 5, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = random_multiplier(1, &mut rng);
        let f = random_spectral(&lat, &mut rng);
        let g = random_spectral(&lat, &mut rng);
        let t = apply_bilinear(&m, &f, &g).unwrap();
        let shift = 4.0 * t.step();
        let ts = apply_bilinear(&m, &f.translate(&[shift]), &g.translate(&[shift])).unwrap();
        let side = t.side();
        for j in 0..side {
            let back = (j + side - 4) % side;
            assert!((ts.samples()[j] - t.samples()[back]).norm() < 1e-10 * t.max_abs());
        }
    }

    fn pairing(a: &GridFunction, b: &GridFunction) -> Complex64 {
        let w = a.step().powi(a.dim() as i32);
        a.samples().iter().zip(b.samples()).map(|(x, y)| x * y).sum::<Complex64>() * w
    }

    #[test]
    fn adjoint_substitution() {
        let m = Multiplier::from_rule(1, "xi", |z| Complex64::new(z[0], 0.0));
        let (m1, m2) = adjoint_multipliers(&m);
        assert_eq!(m1.eval(&[2.0], &[3.0]).re, -5.0);
        assert_eq!(m2.eval(&[2.0], &[3.0]).re, 2.0);
        let one = Multiplier::constant(1, Complex64::new(1.0, 0.0));
        let (a, b) = adjoint_multipliers(&one);
        assert_eq!(a.eval(&[1.0], &[7.0]).re, 1.0);
        assert_eq!(b.eval(&[1.0], &[7.0]).re, 1.0);
    }

    #[test]
    fn duality_for_all_pairings() {
        let lat = FreqLattice::new(1, 8, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_multiplier(1, &mut rng);
        let (m1, m2) = adjoint_multipliers(&m);
        let f = random_spectral(&lat, &mut rng);
        let g = random_spectral(&lat, &mut rng);
        let h = random_spectral(&lat, &mut rng);
        let on_product_grid = |s: &SpectralFunction| {
            let fine = lat.clone().with_oversample(2).unwrap();
            synthesize(&SpectralFunction::from_coeffs(&fine, s.coeffs().to_vec()).unwrap())
        };
        let (fx, gx, hx) = (on_product_grid(&f), on_product_grid(&g), on_product_grid(&h));
        let base = pairing(&apply_bilinear(&m, &f, &g).unwrap(), &hx);
        let first = pairing(&apply_bilinear(&m1, &h, &g).unwrap(), &fx);
        let second = pairing(&apply_bilinear(&m2, &f, &h).unwrap(), &gx);
        assert!((base - first).norm() < 1e-10 * base.norm());
        assert!((base - second).norm() < 1e-10 * base.norm());
    }

    #[test]
    fn dilated_sum_trivial_cases() {
        let lat = FreqLattice::new(1, 4, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_multiplier(1, &mut rng);
        let f = random_spectral(&lat, &mut rng);
        let g = random_spectral(&lat, &mut rng);
        let single = DilatedSum::new(m.clone(), 0, vec![1.0]).unwrap();
        let a = apply_dilated_sum(&single, &f, &g).unwrap();
        let b = apply_bilinear(&m, &f, &g).unwrap();
        assert!(max_rel(&a.grid, &b) < 1e-14);
        let zero = DilatedSum::new(m.clone(), -3, vec![0.0; 7]).unwrap();
        assert_eq!(apply_dilated_sum(&zero, &f, &g).unwrap().grid.max_abs(), 0.0);
        assert!(DilatedSum::new(m.clone(), 0, vec![]).is_err());
        assert!(DilatedSum::new(m, 0, vec![1.5]).is_err());
    }

    #[test]
    fn annulus_sum_stabilises() {
        use crate::profile::{BumpProfile, ProfileKind};
        // m supported in 1/2 <= |z| <= 2
        let outer = BumpProfile::new(ProfileKind::FourierCompact, 1.0, 2.0).unwrap();
        let m = Multiplier::from_rule(1, "annulus", move |z| {
            let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
            Complex64::new(outer.eval(r) - outer.eval(2.0 * r), 0.0)
        });
        let lat = FreqLattice::new(1, 6, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let f = random_spectral(&lat, &mut rng);
        let g = random_spectral(&lat, &mut rng);
        let signs = |len: usize| (0..len).map(|i| if i % 3 == 0 { -1.0 } else { 1.0 }).collect::<Vec<_>>();
        // |z| ranges over [1, 6 sqrt 2]; only k in [-4, 1] can contribute
        let narrow = DilatedSum::new(m.clone(), -6, signs(9)).unwrap();
        let mut wide_signs = vec![1.0; 6];
        wide_signs.extend(signs(9));
        wide_signs.extend(vec![-1.0; 6]);
        let wide = DilatedSum::new(m, -12, wide_signs).unwrap();
        let a = apply_dilated_sum(&narrow, &f, &g).unwrap().grid;
        let b = apply_dilated_sum(&wide, &f, &g).unwrap().grid;
        assert!(a.max_abs() > 0.0);
        assert!(max_rel(&a, &b) < 1e-14);
    }

    #[test]
    fn tail_bound_shrinks_with_range() {
        use crate::multiplier::DecayRecord;
        let m = Multiplier::from_rule(1, "r", |z| {
            let r = (z[0] * z[0] + z[1] * z[1]).sqrt();
            Complex64::new(r.min(1.0 / r), 0.0)
        })
        .with_decay(DecayRecord { c_prime: 1.0, delta: 1.0 });
        let lat = FreqLattice::new(1, 4, 1).unwrap();
        let f = SpectralFunction::single_mode(&lat, &[1]).unwrap();
        let narrow = DilatedSum::new(m.clone(), -2, vec![1.0; 5]).unwrap();
        let wide = DilatedSum::new(m, -8, vec![1.0; 17]).unwrap();
        let a = narrow.tail_bound(&f, &f).unwrap();
        let b = wide.tail_bound(&f, &f).unwrap();
        assert!(b < a / 32.0);
    }

    #[test]
    fn witness_trivial_values() {
        let lat = FreqLattice::new(1, 4, 1).unwrap();
        let f = SpectralFunction::single_mode(&lat, &[2]).unwrap();
        let one = Multiplier::constant(1, Complex64::new(1.0, 0.0));
        let rep = witness_norm(&one, &[(f.clone(), f.clone())], None).unwrap();
        assert!((rep.witnessed - 1.0).abs() < 1e-12);
        let rep0 = witness_norm(&Multiplier::zero(1), &[(f.clone(), f.clone())], None).unwrap();
        assert_eq!(rep0.witnessed, 0.0);
        let z = SpectralFunction::zeros(&lat);
        assert_eq!(
            witness_norm(&one, &[(f.clone(), f.clone()), (z, f)], None),
            Err(LabError::ZeroNormPair(1))
        );
        assert!(matches!(witness_norm(&one, &[], None), Err(LabError::Empty(_))));
    }

    #[test]
    fn predicted_bound_formula() {
        let b = BoundInputs { q: 2.0, lq_norm: 4.0, c0: 9.0 };
        assert!((b.predicted() - 6.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bilinear_in_each_argument(seed in 0u64..1000, a in -2.0f64..2.0, b in -2.0f64..2.0) {
            let lat = FreqLattice::new(1, 4, 1).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_multiplier(1, &mut rng);
            let f1 = random_spectral(&lat, &mut rng);
            let f2 = random_spectral(&lat, &mut rng);
            let g = random_spectral(&lat, &mut rng);
            let (ca, cb) = (Complex64::new(a, 0.0), Complex64::new(0.0, b));
            let lhs = apply_bilinear(&m, &f1.combine(ca, &f2, cb).unwrap(), &g).unwrap();
            let t1 = apply_bilinear(&m, &f1, &g).unwrap();
            let t2 = apply_bilinear(&m, &f2, &g).unwrap();
            let rhs = t1.zip_with(&t2, |x, y| ca * x + cb * y).unwrap();
            let scale = t1.max_abs() + t2.max_abs();
            for (x, y) in lhs.samples().iter().zip(rhs.samples()) {
                prop_assert!((x - y).norm() <= 1e-12 * scale * 4.0);
            }
            let lhs2 = apply_bilinear(&m, &g, &f1.combine(ca, &f2, cb).unwrap()).unwrap();
            let s1 = apply_bilinear(&m, &g, &f1).unwrap();
            let s2 = apply_bilinear(&m, &g, &f2).unwrap();
            let rhs2 = s1.zip_with(&s2, |x, y| ca * x + cb * y).unwrap();
            for (x, y) in lhs2.samples().iter().zip(rhs2.samples()) {
                prop_assert!((x - y).norm() <= 1e-12 * scale * 4.0);
            }
        }
    }
}
