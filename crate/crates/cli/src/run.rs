//! Dispatch from a validated config to the core experiments.

use std::f64::consts::PI;
use std::sync::Arc;

use bilab_core::applications::{
    decay_check, dyadic_spherical_max, fefferman_scale_multipliers, khintchine_square_function,
    rough_kernel_multiplier, surface_measure_ft, Annulus, DecayProbe, KernelMesh, RadialFactor, SphereSymbol,
    SphericalMeasure,
};
use bilab_core::bilinear::{apply_bilinear, apply_bilinear_direct};
use bilab_core::extremal::{
    build_thm13_family, derivative_count_test, randomized_l1_average, sharpness_exponent_test,
    square_function_value, SignSequence, Thm12Family,
};
use bilab_core::fit::{fit_line, fit_log2, relative_spread};
use bilab_core::lattice::{FreqLattice, SpectralFunction};
use bilab_core::multiplier::Multiplier;
use bilab_core::profile::{BumpProfile, ProfileKind};
use bilab_core::wavelet::{analyze, split_decay_sweep, AnalysisBox, Gender, WaveletSystem};
use bilab_core::{Complex64, LabError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::config::{ConfigError, ExperimentConfig, Kind};
use crate::report::{Record, RunReport, Series};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Lab(#[from] LabError),
}

type Outcome = Result<(Vec<Record>, Vec<Series>), RunError>;

pub fn run(config: &ExperimentConfig) -> Result<RunReport, RunError> {
    config.validate()?;
    let (records, series) = match config.kind() {
        Kind::Apply => apply(config),
        Kind::Wavelet => wavelet(config),
        Kind::Levelsplit => levelsplit(config),
        Kind::Thm12 => thm12(config),
        Kind::Thm13 => thm13(config),
        Kind::Sharpness => sharpness(config),
        Kind::Scaling => scaling(config),
        Kind::Rough => rough(config),
        Kind::Fefferman => fefferman(config),
        Kind::Spherical => spherical(config),
    }?;
    Ok(RunReport::new(config.clone(), records, series))
}

fn seed(config: &ExperimentConfig) -> u64 {
    config.parameters.seed.expect("validated: randomized kinds carry a seed")
}

fn not_for(field: &'static str, reason: impl Into<String>) -> RunError {
    RunError::Config(ConfigError::Invalid {
        field,
        reason: reason.into(),
    })
}

/// Smooth test data with fixed phases.
fn smooth_data(lat: &FreqLattice, shift: f64) -> SpectralFunction {
    let r = lat.radius() as f64;
    let mut f = SpectralFunction::zeros(lat);
    for i in 0..lat.len() {
        let k = lat.point(i);
        let s2: f64 = k.iter().map(|&v| (v as f64).powi(2)).sum();
        let phase: f64 = k.iter().map(|&v| v as f64 * shift).sum();
        f.coeffs_mut()[i] = Complex64::from_polar((-s2 / r).exp(), phase);
    }
    f
}

fn apply(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let dim = config.experiment.dim;
    let radius = p.lattice_radius.unwrap_or(8);
    let symbol = p.symbol.as_deref().unwrap_or("one");
    let m = match symbol {
        "one" => Multiplier::constant(dim, Complex64::new(1.0, 0.0)),
        "bump" => Multiplier::bump_product(dim, BumpProfile::new(ProfileKind::FourierCompact, 0.0, radius as f64)?),
        other => return Err(not_for("symbol", format!("unknown multiplier '{other}' (one, bump)"))),
    };
    let lat = FreqLattice::new(dim, radius, 2)?;
    let (f, g) = (smooth_data(&lat, 0.7), smooth_data(&lat, -1.3));
    let fast = apply_bilinear(&m, &f, &g)?;
    let direct = apply_bilinear_direct(&m, &f, &g)?;
    let scale = direct.max_abs().max(f64::MIN_POSITIVE);
    let err = fast
        .samples()
        .iter()
        .zip(direct.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    let tol = config.tolerances.oracle;
    let mut records = vec![Record::at_most("fast_vs_direct_relative_error", err, tol, 0.0)];
    if symbol == "one" {
        // T_1(f, g) = f g pointwise
        let eval = |u: &SpectralFunction, x: &[f64]| -> Complex64 {
            (0..lat.len())
                .map(|i| {
                    let xi = lat.frequency(i);
                    let t: f64 = xi.iter().zip(x).map(|(a, b)| a * b).sum();
                    u.coeffs()[i] * Complex64::from_polar(1.0, 2.0 * PI * t)
                })
                .sum()
        };
        let err = (0..fast.samples().len())
            .into_par_iter()
            .map(|i| {
                let x = fast.position(i);
                (fast.samples()[i] - eval(&f, &x) * eval(&g, &x)).norm()
            })
            .reduce(|| 0.0, f64::max)
            / scale;
        records.push(Record::at_most("product_identity_relative_error", err, tol, 0.0));
    }
    Ok((records, Vec::new()))
}

fn wavelet(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let lambda_max = p.lambda_max.unwrap_or(4);
    let moments = p.moments.clone().unwrap_or_else(|| vec![2, 3]);
    let n = config.experiment.dim;
    if n != 1 {
        return Err(not_for("dim", "the wavelet sweep runs at n = 1"));
    }
    let m = Multiplier::bump_product(1, BumpProfile::new(ProfileKind::FourierCompact, 0.0, 6.0)?);
    let mut records = Vec::new();
    let mut series = Vec::new();
    for &mm in &moments {
        let system = Arc::new(WaveletSystem::build(1, mm, 16)?);
        let worst = (0..=mm).map(|q| system.moment(Gender::M, q).abs()).fold(0.0, f64::max);
        records.push(Record::at_most(format!("vanishing_moments_M{mm}"), worst, 1e-6, 0.0));
        let c = analyze(&m, system, lambda_max, AnalysisBox { half_width: 8.0 })?;
        let per = c.max_per_scale(false);
        let xs: Vec<f64> = (0..per.len()).map(|l| l as f64).collect();
        let fit = fit_log2(&xs, &per)?;
        let reference = -((mm + 1 + n) as f64);
        records.push(Record::at_most(
            format!("coefficient_decay_slope_M{mm}"),
            fit.slope,
            reference + config.tolerances.decay_slope,
            0.0,
        ));
        let base = per[0].log2();
        series.push(Series {
            quantity: format!("log2_max_coefficient_M{mm}"),
            parameter: "lambda".into(),
            unit: "log2".into(),
            predicted_label: format!("reference slope {reference}"),
            points: xs.iter().zip(&per).map(|(&x, &v)| (x, v.log2(), base + reference * x)).collect(),
        });
    }
    Ok((records, series))
}

fn levelsplit(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let levels = p.lambda_max.unwrap_or(6);
    let q = p.q.unwrap_or(2.0);
    let system = Arc::new(WaveletSystem::build(0, 1, 12)?);
    let pts = split_decay_sweep(system, levels, q, seed(config))?;
    let xs: Vec<f64> = pts.iter().map(|pt| pt.r as f64).collect();
    let ys: Vec<f64> = pts.iter().map(|pt| pt.witnessed).collect();
    let slope = fit_log2(&xs, &ys)?.slope;
    let mut records = vec![Record::absolute("witnessed_log2_slope", slope, q / 4.0 - 1.0, 0.15)];
    let worst = pts.iter().map(|pt| pt.card_ratio).fold(0.0, f64::max);
    records.push(Record::at_most("row_cardinality_ratio", worst, 2f64.powf(q), 0.0));
    let series = vec![Series {
        quantity: "split_witnessed_norm".into(),
        parameter: "r".into(),
        unit: "ratio".into(),
        predicted_label: "witnessed(r0) 2^{(q/4 - 1)(r - r0)}".into(),
        points: pts
            .iter()
            .map(|pt| (pt.r as f64, pt.witnessed, ys[0] * pt.predicted_factor / pts[0].predicted_factor))
            .collect(),
    }];
    Ok((records, series))
}

fn n_values(config: &ExperimentConfig, default: [u64; 2]) -> Vec<u64> {
    let p = &config.parameters;
    p.n_values.clone().unwrap_or_else(|| {
        let [a, b] = p.n_range.unwrap_or(default);
        (a..=b).collect()
    })
}

fn thm12(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let t = &config.tolerances;
    let ns = n_values(config, [4, 10]);
    if ns.is_empty() {
        return Ok((Vec::new(), vec![thm12_series(Vec::new())]));
    }
    let radius = p.lattice_radius.unwrap_or(1 << 13);
    let top = *ns.iter().max().unwrap();
    let fams: Vec<Thm12Family> = ns
        .iter()
        .map(|&n| Thm12Family::new(n as u32)?.with_dim(config.experiment.dim))
        .collect::<Result<_, _>>()?;
    let need = fams.last().map(|f| f.required_radius(1.0)).unwrap_or(0);
    if radius < need {
        return Err(LabError::LatticeTooSmall(format!("N = {top} needs lattice radius {need}, got {radius}")).into());
    }
    let lat = FreqLattice::new(config.experiment.dim, radius, 1)?;
    let values: Vec<f64> = fams.iter().map(|f| f.khintchine_value(&lat)).collect();
    let kappa: Vec<f64> = ns.iter().zip(&values).map(|(&n, v)| v / (n as f64).sqrt()).collect();
    let spread = relative_spread(&kappa);
    let k_mean = kappa.iter().sum::<f64>() / kappa.len() as f64;
    let mut records = vec![Record::at_most("kappa_spread", spread, t.growth_spread, 0.0)];
    let trials = p.trials.unwrap_or(200) as usize;
    let signs = SignSequence::new(seed(config));
    for fam in &fams {
        let r = randomized_l1_average(fam, &lat, trials, signs)?;
        records.push(Record::within(
            format!("randomized_ratio_N{}", fam.block()),
            r.ratio,
            t.khintchine_low,
            t.khintchine_high,
        ));
    }
    let points = ns
        .iter()
        .zip(&values)
        .map(|(&n, &v)| (n as f64, v, k_mean * (n as f64).sqrt()))
        .collect();
    Ok((records, vec![thm12_series(points)]))
}

fn thm12_series(points: Vec<(f64, f64, f64)>) -> Series {
    Series {
        quantity: "khintchine_l1".into(),
        parameter: "N".into(),
        unit: "L1".into(),
        predicted_label: "kappa N^{1/2}, kappa the mean ratio".into(),
        points,
    }
}

fn thm13(config: &ExperimentConfig) -> Outcome {
    let ds = n_values(config, [6, 10]);
    if config.experiment.dim > 2 {
        return Err(not_for("dim", "the square-function quadrature supports n <= 2"));
    }
    let ratios: Vec<(u64, f64, f64)> = ds
        .par_iter()
        .map(|&d| {
            let fam = build_thm13_family(4..=d as u32, config.experiment.dim, SignSequence::Ones)?;
            let harmonic: f64 = (4..=d).map(|k| 1.0 / k as f64).sum();
            Ok((d, square_function_value(&fam)?, harmonic))
        })
        .collect::<Result<_, LabError>>()?;
    let rs: Vec<f64> = ratios.iter().map(|(_, v, h)| v / h).collect();
    let mean = if rs.is_empty() { 0.0 } else { rs.iter().sum::<f64>() / rs.len() as f64 };
    let records = vec![Record::at_most(
        "harmonic_ratio_spread",
        relative_spread(&rs),
        config.tolerances.harmonic_spread,
        0.0,
    )];
    let series = vec![Series {
        quantity: "square_function".into(),
        parameter: "D".into(),
        unit: "L1".into(),
        predicted_label: "kappa sum_{K=4}^D 1/K".into(),
        points: ratios.iter().map(|&(d, v, h)| (d as f64, v, mean * h)).collect(),
    }];
    Ok((records, series))
}

fn sharpness(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let t = &config.tolerances;
    let r = p.r.unwrap_or(0.5);
    let eps = p.eps.unwrap_or(0.1);
    let ns = p.n_values.clone().unwrap_or_else(|| vec![10, 100, 1000, 10000]);
    let recs = ns
        .iter()
        .map(|&n| sharpness_exponent_test(n, eps, r))
        .collect::<Result<Vec<_>, _>>()?;
    let ratios: Vec<f64> = recs.iter().map(|s| s.ratio).collect();
    let mut records = Vec::new();
    let predicted = 1.0 - 2.0 * r;
    if recs.len() >= 2 {
        let xs: Vec<f64> = recs.iter().map(|s| (s.n as f64).ln()).collect();
        let ys: Vec<f64> = ratios.iter().map(|v| v.ln()).collect();
        let slope = fit_line(&xs, &ys)?.slope;
        records.push(Record::absolute("ratio_log_slope", slope, predicted, t.sharpness_slope));
        if (r - 0.5).abs() < 1e-12 {
            records.push(Record::at_most(
                "ratio_spread_at_critical_r",
                relative_spread(&ratios),
                t.sharpness_constant,
                0.0,
            ));
        }
    }
    let c = ratios.first().copied().unwrap_or(0.0) / (ns.first().copied().unwrap_or(1) as f64).powf(predicted);
    let series = vec![Series {
        quantity: "sharpness_ratio".into(),
        parameter: "N".into(),
        unit: "ratio".into(),
        predicted_label: format!("C N^{{{predicted}}}"),
        points: recs.iter().map(|s| (s.n as f64, s.ratio, c * (s.n as f64).powf(predicted))).collect(),
    }];
    Ok((records, series))
}

fn scaling(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let t = &config.tolerances;
    let q = p.q.unwrap_or(2.0);
    let lambda_max = p.lambda_max.unwrap_or(5);
    let recs = (0..=lambda_max)
        .into_par_iter()
        .map(|l| derivative_count_test(l, q, config.experiment.dim))
        .collect::<Result<Vec<_>, _>>()?;
    let base = recs[0].lq_rescaled;
    let dev = recs.iter().map(|s| (s.lq_rescaled / base - 1.0).abs()).fold(0.0, f64::max);
    let l1: Vec<f64> = recs.iter().map(|s| s.l1_norm).collect();
    let records = vec![
        Record::at_most("lq_rescaled_deviation", dev, t.scaling_identity, 0.0),
        Record::at_most("l1_norm_spread", relative_spread(&l1), t.scaling_flat, 0.0),
    ];
    let series = vec![Series {
        quantity: "scaling_l1_norm".into(),
        parameter: "lambda".into(),
        unit: "L1".into(),
        predicted_label: "C_0^{1-q/4} ||m_lambda||_q^{q/4}".into(),
        points: recs.iter().map(|s| (s.lambda as f64, s.l1_norm, s.predicted)).collect(),
    }];
    Ok((records, series))
}

fn kernel_mesh(config: &ExperimentConfig) -> KernelMesh {
    KernelMesh {
        side: config.parameters.mesh.unwrap_or(256),
        pad: 2,
    }
}

fn rough(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let r = p.r.unwrap_or(2.0);
    let omega = SphereSymbol::named(p.symbol.as_deref().unwrap_or("sign"), config.experiment.dim, r)?;
    let k = rough_kernel_multiplier(&omega, &Annulus::standard(), kernel_mesh(config))?;
    let records = vec![
        Record::at_most("hausdorff_young_ratio", k.hausdorff_young_ratio, 1.0, config.tolerances.hausdorff_young),
        Record::at_most("symbol_at_origin", k.at_origin.norm(), 1e-12, 0.0),
    ];
    Ok((records, Vec::new()))
}

fn fefferman(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let r = p.r.unwrap_or(2.0);
    let omega = SphereSymbol::named(p.symbol.as_deref().unwrap_or("rough"), config.experiment.dim, r)?;
    let rho = RadialFactor::named(p.radial.as_deref().unwrap_or("log-square-wave"))?;
    let [a, b] = p.k_range.unwrap_or([-4, 4]);
    let mesh = KernelMesh {
        side: p.mesh.unwrap_or(128),
        pad: 2,
    };
    let fam = fefferman_scale_multipliers(&omega, rho, a..=b, &Annulus::standard(), mesh)?;
    let records = vec![
        Record::at_most("scale_ratio_spread", fam.spread, config.tolerances.fefferman_spread, 0.0),
        Record::flag("radial_average_bound", rho.verify().is_ok()),
    ];
    let mean = fam.ratios.iter().sum::<f64>() / fam.ratios.len() as f64;
    let series = vec![Series {
        quantity: "rescaled_lq_over_omega".into(),
        parameter: "k".into(),
        unit: "ratio".into(),
        predicted_label: "mean over k".into(),
        points: fam.ks.iter().zip(&fam.ratios).map(|(&k, &v)| (k as f64, v, mean)).collect(),
    }];
    Ok((records, series))
}

/// Real band-limited data: Hermitian-symmetric random coefficients.
fn random_real(lat: &FreqLattice, rng: &mut ChaCha8Rng) -> SpectralFunction {
    let mut f = SpectralFunction::zeros(lat);
    for i in 0..lat.len() {
        let k = lat.point(i);
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        let j = lat.index_of(&neg).expect("the lattice is symmetric");
        if j < i {
            continue;
        }
        let c = if j == i {
            Complex64::new(rng.gen_range(-1.0..1.0), 0.0)
        } else {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        };
        f.coeffs_mut()[i] = c;
        f.coeffs_mut()[j] = c.conj();
    }
    f
}

fn spherical(config: &ExperimentConfig) -> Outcome {
    let p = &config.parameters;
    let t = &config.tolerances;
    let dim = config.experiment.dim;
    if dim > 2 {
        return Err(not_for("dim", "the maximal surrogate supports n <= 2"));
    }
    let sm = SphericalMeasure::new(dim)?;
    let mut records = vec![Record::absolute(
        "surface_measure_total_mass",
        surface_measure_ft(dim, &vec![0.0; 2 * dim])?,
        sm.area(),
        1e-8,
    )];
    let fit = decay_check(&sm.sigma_multiplier(0), Some((2 * dim - 1) as f64 / 2.0), &DecayProbe::along_axis(dim))?;
    let tol = if dim == 1 { t.decay_exponent } else { 2.0 * t.decay_exponent };
    records.push(Record::absolute("decay_exponent", fit.exponent, fit.expected.unwrap_or(0.0), tol));
    let mu_fit = decay_check(&sm.mu_multiplier(0), None, &DecayProbe::along_axis(dim))?;
    records.push(Record::flag("mu_linear_near_origin", mu_fit.near_origin_bounded));

    let radius = p.lattice_radius.unwrap_or(if dim == 1 { 8 } else { 3 });
    let [a, b] = p.k_range.unwrap_or([-4, 2]);
    let lat = FreqLattice::new(dim, radius, 4)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed(config));
    let pairs = p.pairs.unwrap_or(20);
    let mut violations = 0usize;
    let mut data = Vec::with_capacity(pairs);
    for _ in 0..pairs {
        data.push((random_real(&lat, &mut rng), random_real(&lat, &mut rng)));
    }
    for (f, g) in &data {
        violations += dyadic_spherical_max(f, g, &sm, a..=b)?.violations(t.domination).len();
    }
    records.push(Record::at_most("domination_violations", violations as f64, 0.0, 0.0));
    if let Some((f, g)) = data.first() {
        let trials = p.trials.unwrap_or(200);
        let sq = khintchine_square_function(f, g, &sm, a..=b, trials, SignSequence::new(seed(config)), 1.0)?;
        records.push(Record::within("square_function_ratio", sq.ratio, t.khintchine_low, t.khintchine_high));
    }
    Ok((records, Vec::new()))
}
