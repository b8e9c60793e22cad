//! Monte-Carlo learning-curve experiments: seeded data generation, grid and
//! repeat orchestration, slope fitting, and comparison against the
//! predicted exponents.

use crate::gpr::{self, Dataset, GprError};
use crate::kernels::{AngularPoint, KernelSpec};
use crate::numerics::{mean_std, ols};
use crate::spectral::{
    builtin_expansion, mercer_spectrum, sample_target_from_prior, theory_curves, RatePrediction,
    SpectralError, Spectrum, TargetExpansion,
};
use crate::targets::BuiltinTarget;
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("solver failure at n={n}, repeat={repeat}: {source}")]
    Solver {
        n: usize,
        repeat: usize,
        source: GprError,
    },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Gpr(#[from] GprError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Full description of one experiment: kernel, target, grid, repeats, noise
/// levels, and the master seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kernel: String,
    #[serde(default)]
    pub bias: bool,
    pub target: String,
    #[serde(default = "default_n_grid")]
    pub n_grid: Vec<usize>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default = "default_sigma")]
    pub sigma_true: f64,
    #[serde(default = "default_sigma")]
    pub sigma_model: f64,
    /// Exponent of the sample-size-dependent model noise σ² = σ₀²·n^t.
    #[serde(default)]
    pub t: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    /// Include σ_model² in the predictive variance of the KL (default on).
    #[serde(default = "default_true")]
    pub predictive_noise: bool,
}

fn default_n_grid() -> Vec<usize> {
    (4..=10).map(|k| 1usize << k).collect() // {16, 32, …, 1024}
}
fn default_repeats() -> usize {
    20
}
fn default_sigma() -> f64 {
    0.1
}
fn default_seed() -> u64 {
    1
}
fn default_quad_nodes() -> usize {
    2048
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), LabError> {
        if self.n_grid.is_empty() {
            return Err(LabError::Config("n_grid must be nonempty".into()));
        }
        if !self.n_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(LabError::Config("n_grid must be strictly increasing".into()));
        }
        if self.repeats < 1 {
            return Err(LabError::Config("repeats must be ≥ 1".into()));
        }
        if self.sigma_true < 0.0 || self.sigma_model < 0.0 {
            return Err(LabError::Config("noise levels must be ≥ 0".into()));
        }
        parse_kernel(&self.kernel)?;
        Ok(())
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec, LabError> {
        let order = parse_kernel(&self.kernel)?;
        KernelSpec::new(order, self.bias).map_err(|e| LabError::Config(e.to_string()))
    }
}

fn parse_kernel(name: &str) -> Result<u8, LabError> {
    match name {
        "arccos0" => Ok(0),
        "arccos1" => Ok(1),
        "arccos2" => Ok(2),
        other => Err(LabError::Config(format!(
            "unknown kernel {other:?} (expected arccos0|arccos1|arccos2)"
        ))),
    }
}

/// The four targets of the reference table for a kernel. The no-bias
/// kernels of orders 0 and 2 annihilate one parity class, so their tables
/// use the discontinuous pair (sign, triangle); the rest share the smooth
/// quartet.
pub fn targets_for(spec: KernelSpec) -> [BuiltinTarget; 4] {
    if !spec.bias() && spec.order() != 1 {
        [
            BuiltinTarget::CosTwoTheta,
            BuiltinTarget::Sign,
            BuiltinTarget::Tent,
            BuiltinTarget::Sawtooth,
        ]
    } else {
        [
            BuiltinTarget::CosTwoTheta,
            BuiltinTarget::ThetaSquared,
            BuiltinTarget::ShiftedSquare,
            BuiltinTarget::Sawtooth,
        ]
    }
}

/// A target resolved to something evaluable: a built-in or a prior sample.
pub enum ResolvedTarget {
    Builtin(BuiltinTarget),
    Prior {
        spectrum: Spectrum,
        expansion: TargetExpansion,
    },
}

impl ResolvedTarget {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            ResolvedTarget::Builtin(t) => t.eval(theta),
            ResolvedTarget::Prior {
                spectrum,
                expansion,
            } => crate::spectral::expansion_value(spectrum, expansion, theta),
        }
    }

    /// Expansion in the eigenbasis of `spectrum` (which may differ from the
    /// spectrum the prior sample was drawn on; built-ins expand exactly).
    pub fn expansion(&self, spectrum: &Spectrum) -> TargetExpansion {
        match self {
            ResolvedTarget::Builtin(t) => builtin_expansion(*t, spectrum),
            ResolvedTarget::Prior { expansion, .. } => expansion.clone(),
        }
    }
}

/// Resolves a target identifier (`f1`…`f4` per the kernel's table, or
/// `prior`) against a kernel.
pub fn resolve_target(
    id: &str,
    spec: KernelSpec,
    spectrum: &Spectrum,
    seed: u64,
) -> Result<ResolvedTarget, LabError> {
    match id {
        "f1" | "f2" | "f3" | "f4" => {
            let idx = (id.as_bytes()[1] - b'1') as usize;
            Ok(ResolvedTarget::Builtin(targets_for(spec)[idx]))
        }
        "prior" => {
            let expansion =
                sample_target_from_prior(spectrum, spectrum.positive_count(), mix(seed, 0x9e37, 0));
            Ok(ResolvedTarget::Prior {
                spectrum: spectrum.clone(),
                expansion,
            })
        }
        other => Err(LabError::Config(format!(
            "unknown target {other:?} (expected f1..f4 or prior)"
        ))),
    }
}

/// SplitMix64 step, used to mix cell keys into independent stream seeds.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn mix(seed: u64, n: u64, repeat: u64) -> u64 {
    let mut s = seed;
    let a = splitmix64(&mut s);
    s ^= n;
    let b = splitmix64(&mut s);
    s ^= repeat;
    let c = splitmix64(&mut s);
    a ^ b.rotate_left(17) ^ c.rotate_left(34)
}

/// Counter-based per-cell generator keyed on (seed, n, repeat): the stream
/// is a pure function of the key, so scheduling and thread count never
/// change the data.
pub fn cell_rng(seed: u64, n: usize, repeat: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix(seed, n as u64, repeat as u64))
}

/// Draws the dataset of cell (n, repeat): θᵢ ~ U[−π, π),
/// yᵢ = f(θᵢ) + N(0, σ_true²).
pub fn generate_dataset(
    config: &ExperimentConfig,
    target: &ResolvedTarget,
    n: usize,
    repeat: usize,
) -> Dataset {
    let mut rng = cell_rng(config.seed, n, repeat);
    let points: Vec<AngularPoint> = (0..n)
        .map(|_| AngularPoint::new(rng.gen_range(-PI..PI)))
        .collect();
    let sigma = config.sigma_true;
    let y = DVector::from_iterator(
        n,
        points.iter().map(|p| {
            let eps: f64 = rng.sample(StandardNormal);
            target.eval(p.theta()) + sigma * eps
        }),
    );
    Dataset {
        points,
        y,
        sigma_true_sq: sigma * sigma,
    }
}

/// Per-n Monte-Carlo statistics with the deterministic theory overlay.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearningCurveResult {
    pub n_grid: Vec<usize>,
    pub f0_mean: Vec<f64>,
    pub f0_std: Vec<f64>,
    pub g_mean: Vec<f64>,
    pub g_std: Vec<f64>,
    pub m_mean: Vec<f64>,
    pub m_std: Vec<f64>,
    pub f0_det: Vec<f64>,
    pub g_det: Vec<f64>,
    pub m_det: Vec<f64>,
}

/// Per-kernel spectral resolution for the theory overlay: flatter spectra
/// need more modes before the deterministic sums converge on the n-range of
/// interest (order 0 populates ~√(n/σ²) ≈ 10³ modes at the top of the
/// acceptance grid).
pub fn theory_budget(spec: KernelSpec) -> (u32, usize) {
    match spec.order() {
        0 => (4096, 16384),
        1 => (1024, 4096),
        _ => (512, 2048),
    }
}

/// Runs the full experiment: for every (n, repeat) cell generate, fit, and
/// evaluate the three functionals; aggregate means and standard deviations;
/// attach the theory overlay. Cells run in parallel (capped by the
/// GP_LAB_THREADS environment variable) with a deterministic reduction.
pub fn run_learning_curve(config: &ExperimentConfig) -> Result<LearningCurveResult, LabError> {
    config.validate()?;
    let spec = config.kernel_spec()?;
    let (max_freq, quad) = theory_budget(spec);
    let spectrum = mercer_spectrum(spec, max_freq, quad)?;
    let target = resolve_target(&config.target, spec, &spectrum, config.seed)?;

    let cells: Vec<(usize, usize)> = config
        .n_grid
        .iter()
        .flat_map(|&n| (0..config.repeats).map(move |r| (n, r)))
        .collect();

    let pool = thread_pool()?;
    let evaluated: Result<Vec<(f64, f64, f64)>, LabError> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(n, repeat)| evaluate_cell(config, spec, &target, n, repeat))
            .collect()
    });
    let evaluated = evaluated?;

    let mut result = LearningCurveResult {
        n_grid: config.n_grid.clone(),
        f0_mean: vec![],
        f0_std: vec![],
        g_mean: vec![],
        g_std: vec![],
        m_mean: vec![],
        m_std: vec![],
        f0_det: vec![],
        g_det: vec![],
        m_det: vec![],
    };
    let expansion = target.expansion(&spectrum);
    for (i, &n) in config.n_grid.iter().enumerate() {
        let chunk = &evaluated[i * config.repeats..(i + 1) * config.repeats];
        let (f0m, f0s) = mean_std(&chunk.iter().map(|c| c.0).collect::<Vec<_>>());
        let (gm, gs) = mean_std(&chunk.iter().map(|c| c.1).collect::<Vec<_>>());
        let (mm, ms) = mean_std(&chunk.iter().map(|c| c.2).collect::<Vec<_>>());
        result.f0_mean.push(f0m);
        result.f0_std.push(f0s);
        result.g_mean.push(gm);
        result.g_std.push(gs);
        result.m_mean.push(mm);
        result.m_std.push(ms);

        let sm2 = config.sigma_model.powi(2) * (n as f64).powf(config.t);
        let st2 = config.sigma_true.powi(2);
        let th = theory_curves(&spectrum, &expansion, sm2, st2, &[n as f64], 1e-3)?;
        result.f0_det.push(th.f0_det[0]);
        result.g_det.push(th.g_det[0]);
        result.m_det.push(th.m_det[0]);
    }
    Ok(result)
}

fn evaluate_cell(
    config: &ExperimentConfig,
    spec: KernelSpec,
    target: &ResolvedTarget,
    n: usize,
    repeat: usize,
) -> Result<(f64, f64, f64), LabError> {
    let ds = generate_dataset(config, target, n, repeat);
    let sm2 = config.sigma_model.powi(2) * (n as f64).powf(config.t);
    let state = gpr::fit(spec, &ds.points, &ds.y, sm2).map_err(|e| LabError::Solver {
        n,
        repeat,
        source: e,
    })?;
    let f_values = DVector::from_iterator(n, ds.points.iter().map(|p| target.eval(p.theta())));
    // F⁰ is defined under matched noise; report NaN when σ_model ≠ σ_true.
    let f0 = if (sm2 - ds.sigma_true_sq).abs() <= 1e-15 && sm2 > 0.0 {
        gpr::nsc(&state, &ds.y, &f_values).map_err(|e| LabError::Solver {
            n,
            repeat,
            source: e,
        })?
    } else {
        f64::NAN
    };
    let g = if ds.sigma_true_sq > 0.0 {
        gpr::bayes_gen_error(
            &state,
            |t| target.eval(t),
            ds.sigma_true_sq,
            config.quad_nodes,
            config.predictive_noise,
        )
        .map_err(|e| LabError::Solver {
            n,
            repeat,
            source: e,
        })?
    } else {
        f64::NAN
    };
    let m = gpr::excess_mse(&state, |t| target.eval(t), config.quad_nodes);
    Ok((f0, g, m))
}

fn thread_pool() -> Result<rayon::ThreadPool, LabError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("GP_LAB_THREADS") {
        let threads: usize = v
            .parse()
            .map_err(|_| LabError::Config(format!("GP_LAB_THREADS={v:?} is not a number")))?;
        builder = builder.num_threads(threads);
    }
    builder
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))
}

/// OLS power-law fit on (log n, log y) after dropping the `drop_head`
/// smallest n (the asymptotics only bind at larger n). Returns
/// (slope, stderr, R²).
pub fn fit_slope(xs: &[f64], ys: &[f64], drop_head: usize) -> Result<(f64, f64, f64), LabError> {
    if xs.len() != ys.len() {
        return Err(LabError::Config("fit_slope: length mismatch".into()));
    }
    if xs.len() < drop_head + 3 {
        return Err(LabError::Config(format!(
            "fit_slope needs ≥ {} points, got {}",
            drop_head + 3,
            xs.len()
        )));
    }
    let xs = &xs[drop_head..];
    let ys = &ys[drop_head..];
    if ys.iter().any(|&y| y <= 0.0 || !y.is_finite()) {
        return Err(LabError::Config(
            "fit_slope needs positive finite values".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let (_, slope, stderr, r2) = ols(&lx, &ly);
    Ok((slope, stderr, r2))
}

/// One fitted-vs-predicted comparison row.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SlopeRow {
    pub quantity: String,
    pub fitted: f64,
    pub stderr: f64,
    pub r2: f64,
    pub predicted: f64,
    pub theta1: bool,
    pub level: Option<f64>,
    pub predicted_level: Option<f64>,
    pub pass: bool,
}

/// Fitted slopes with standard errors against the predicted exponents.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RateReport {
    pub tolerance: f64,
    pub rows: Vec<SlopeRow>,
    pub pass: bool,
}

/// Compares the Monte-Carlo means against a rate prediction. Power-law rows
/// fail iff |fitted − predicted| > tolerance or R² < 0.9; Θ(1) rows pass
/// iff |fitted| ≤ 0.1.
pub fn compare_to_theory(
    result: &LearningCurveResult,
    prediction: &RatePrediction,
    tolerance: f64,
) -> Result<RateReport, LabError> {
    let ns: Vec<f64> = result.n_grid.iter().map(|&n| n as f64).collect();
    let mut rows = Vec::new();
    let mut add_row = |quantity: &str,
                       ys: &[f64],
                       predicted: f64,
                       predicted_level: Option<f64>|
     -> Result<(), LabError> {
        let theta1 = predicted == 0.0;
        let (fitted, stderr, r2) = fit_slope(&ns, ys, 2)?;
        let level = if theta1 {
            Some(*ys.last().expect("nonempty grid"))
        } else {
            None
        };
        let pass = if theta1 {
            fitted.abs() <= 0.1
        } else {
            (fitted - predicted).abs() <= tolerance && r2 >= 0.9
        };
        rows.push(SlopeRow {
            quantity: quantity.into(),
            fitted,
            stderr,
            r2,
            predicted,
            theta1,
            level,
            predicted_level,
            pass,
        });
        Ok(())
    };
    if result.f0_mean.iter().all(|v| v.is_finite()) {
        add_row("nsc", &result.f0_mean, prediction.exp_nsc, None)?;
    }
    if result.g_mean.iter().all(|v| v.is_finite()) {
        add_row("gen", &result.g_mean, prediction.exp_gen, prediction.constant_gen)?;
    }
    add_row("mse", &result.m_mean, prediction.exp_mse, prediction.constant_mse)?;
    let pass = rows.iter().all(|r| r.pass);
    Ok(RateReport {
        tolerance,
        rows,
        pass,
    })
}

/// Writes the curve CSV with the stable column contract
/// `n,f0_mean,f0_std,g_mean,g_std,m_mean,m_std,f0_det,g_det,m_det`.
pub fn write_curve_csv<W: Write>(result: &LearningCurveResult, mut w: W) -> Result<(), LabError> {
    writeln!(
        w,
        "n,f0_mean,f0_std,g_mean,g_std,m_mean,m_std,f0_det,g_det,m_det"
    )?;
    for i in 0..result.n_grid.len() {
        writeln!(
            w,
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            result.n_grid[i],
            result.f0_mean[i],
            result.f0_std[i],
            result.g_mean[i],
            result.g_std[i],
            result.m_mean[i],
            result.m_std[i],
            result.f0_det[i],
            result.g_det[i],
            result.m_det[i],
        )?;
    }
    Ok(())
}

/// Reads back a curve CSV written by [`write_curve_csv`].
pub fn read_curve_csv<R: std::io::Read>(r: R) -> Result<LearningCurveResult, LabError> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut result = LearningCurveResult {
        n_grid: vec![],
        f0_mean: vec![],
        f0_std: vec![],
        g_mean: vec![],
        g_std: vec![],
        m_mean: vec![],
        m_std: vec![],
        f0_det: vec![],
        g_det: vec![],
        m_det: vec![],
    };
    for record in rdr.records() {
        let rec = record.map_err(|e| LabError::Config(format!("bad curve CSV: {e}")))?;
        let field = |i: usize| -> Result<f64, LabError> {
            rec.get(i)
                .ok_or_else(|| LabError::Config("short curve CSV row".into()))?
                .parse()
                .map_err(|e| LabError::Config(format!("bad curve CSV number: {e}")))
        };
        result.n_grid.push(field(0)? as usize);
        result.f0_mean.push(field(1)?);
        result.f0_std.push(field(2)?);
        result.g_mean.push(field(3)?);
        result.g_std.push(field(4)?);
        result.m_mean.push(field(5)?);
        result.m_std.push(field(6)?);
        result.f0_det.push(field(7)?);
        result.g_det.push(field(8)?);
        result.m_det.push(field(9)?);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            kernel: "arccos1".into(),
            bias: false,
            target: "f1".into(),
            n_grid: vec![16, 32, 64, 128],
            repeats: 4,
            sigma_true: 0.1,
            sigma_model: 0.1,
            t: 0.0,
            seed: 7,
            quad_nodes: 512,
            predictive_noise: true,
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config();
        c.n_grid.clear();
        assert!(matches!(c.validate(), Err(LabError::Config(_))));
        let mut c = small_config();
        c.kernel = "bogus".into();
        assert!(c.validate().is_err());
        let mut c = small_config();
        c.n_grid = vec![16, 16];
        assert!(c.validate().is_err());
    }

    #[test]
    fn dataset_deterministic_and_noiseless() {
        let c = small_config();
        let spec = c.kernel_spec().unwrap();
        let spectrum = mercer_spectrum(spec, 64, 256).unwrap();
        let t = resolve_target("f1", spec, &spectrum, c.seed).unwrap();
        let a = generate_dataset(&c, &t, 32, 3);
        let b = generate_dataset(&c, &t, 32, 3);
        assert_eq!(a.y, b.y);
        assert_eq!(
            a.points.iter().map(|p| p.theta()).collect::<Vec<_>>(),
            b.points.iter().map(|p| p.theta()).collect::<Vec<_>>()
        );
        let mut c0 = c.clone();
        c0.sigma_true = 0.0;
        let d = generate_dataset(&c0, &t, 16, 0);
        for (p, &y) in d.points.iter().zip(d.y.iter()) {
            assert_eq!(y, t.eval(p.theta()));
        }
    }

    #[test]
    fn theta_distribution_uniform_ks() {
        // Kolmogorov–Smirnov against U[−π, π) at level 0.01 over 10⁵ draws.
        let c = small_config();
        let spec = c.kernel_spec().unwrap();
        let spectrum = mercer_spectrum(spec, 64, 256).unwrap();
        let t = resolve_target("f1", spec, &spectrum, c.seed).unwrap();
        let mut thetas = Vec::new();
        for repeat in 0..100 {
            let d = generate_dataset(&c, &t, 1000, repeat);
            thetas.extend(d.points.iter().map(|p| p.theta()));
        }
        thetas.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = thetas.len() as f64;
        let mut dstat: f64 = 0.0;
        for (i, &t) in thetas.iter().enumerate() {
            let cdf = (t + PI) / (2.0 * PI);
            let emp_hi = (i + 1) as f64 / n;
            let emp_lo = i as f64 / n;
            dstat = dstat.max((cdf - emp_lo).abs()).max((cdf - emp_hi).abs());
        }
        // critical value at level 0.01: 1.628/√n
        assert!(dstat < 1.628 / n.sqrt(), "KS statistic {dstat}");
    }

    #[test]
    fn fit_slope_exact_and_degenerate() {
        let ns: Vec<f64> = (4..=10).map(|k| (1u32 << k) as f64).collect();
        let ys: Vec<f64> = ns.iter().map(|n| 3.0 * n.powf(-0.75)).collect();
        let (s, _, r2) = fit_slope(&ns, &ys, 2).unwrap();
        assert_relative_eq!(s, -0.75, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
        let flat: Vec<f64> = ns.iter().map(|_| 2.5).collect();
        let (s, _, _) = fit_slope(&ns, &flat, 2).unwrap();
        assert!(s.abs() < 1e-12);
        let wiggly: Vec<f64> = ns
            .iter()
            .enumerate()
            .map(|(i, n)| n.powf(-0.5) * (1.0 + 0.01 * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .collect();
        let (s, _, _) = fit_slope(&ns, &wiggly, 2).unwrap();
        assert!((s + 0.5).abs() <= 0.01);
        assert!(fit_slope(&ns[..4], &ys[..4], 2).is_err());
        let bad = vec![1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0];
        assert!(fit_slope(&ns, &bad, 2).is_err());
    }

    #[test]
    fn zero_target_zero_error_columns() {
        // σ_true = 0 and the zero function: M ≡ 0.
        let spec = KernelSpec::new(1, false).unwrap();
        let spectrum = mercer_spectrum(spec, 64, 256).unwrap();
        let mut c = small_config();
        c.sigma_true = 0.0;
        c.repeats = 1;
        c.n_grid = vec![8, 16, 32];
        // zero function as a prior sample with zero coefficients
        let t = ResolvedTarget::Prior {
            spectrum: spectrum.clone(),
            expansion: TargetExpansion {
                mu: vec![0.0; spectrum.positive_count()],
                mu0: 0.0,
                l2_norm: 0.0,
                inspan_tail_sq: 0.0,
            },
        };
        for &n in &c.n_grid {
            let (_, _, m) = evaluate_cell(&c, spec, &t, n, 0).unwrap();
            assert!(m.abs() < 1e-18, "m = {m}");
        }
    }

    #[test]
    fn learning_curve_runs_and_overlays() {
        let c = small_config();
        let r = run_learning_curve(&c).unwrap();
        assert_eq!(r.n_grid.len(), 4);
        for v in r.g_mean.iter().chain(r.g_det.iter()) {
            assert!(v.is_finite() && *v >= 0.0);
        }
        // G decreases along the grid for the in-span target (3σ slack)
        for i in 1..r.n_grid.len() {
            let slack = 3.0 * (r.g_std[i] + r.g_std[i - 1]) / (c.repeats as f64).sqrt();
            assert!(
                r.g_mean[i] <= r.g_mean[i - 1] + slack,
                "G not decreasing at {i}"
            );
        }
    }

    #[test]
    fn csv_roundtrip_and_byte_stability() {
        let c = small_config();
        let r = run_learning_curve(&c).unwrap();
        let mut buf = Vec::new();
        write_curve_csv(&r, &mut buf).unwrap();
        let parsed = read_curve_csv(&buf[..]).unwrap();
        assert_eq!(parsed.n_grid, r.n_grid);
        for (a, b) in parsed.g_mean.iter().zip(r.g_mean.iter()) {
            assert_eq!(a, b);
        }
        let r2 = run_learning_curve(&c).unwrap();
        let mut buf2 = Vec::new();
        write_curve_csv(&r2, &mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn compare_to_theory_rows() {
        let ns: Vec<usize> = (4..=10).map(|k| 1usize << k).collect();
        let mk = |exp: f64| -> Vec<f64> { ns.iter().map(|&n| (n as f64).powf(exp)).collect() };
        let result = LearningCurveResult {
            n_grid: ns.clone(),
            f0_mean: mk(0.25),
            f0_std: vec![0.0; ns.len()],
            g_mean: mk(-0.75),
            g_std: vec![0.0; ns.len()],
            m_mean: mk(-0.75),
            m_std: vec![0.0; ns.len()],
            f0_det: mk(0.25),
            g_det: mk(-0.75),
            m_det: mk(-0.75),
        };
        let pred = crate::spectral::predict_rates(4.0, f64::INFINITY, 0.0, 0.01, 0.0, false).unwrap();
        let report = compare_to_theory(&result, &pred, 0.15).unwrap();
        assert!(report.pass);
        // an off-prediction fails
        let pred = crate::spectral::predict_rates(4.0, 1.0, 0.0, 0.01, 0.0, false).unwrap();
        let report = compare_to_theory(&result, &pred, 0.15).unwrap();
        assert!(!report.pass);
    }
}
