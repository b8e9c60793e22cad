//! `gp-lab`: spectra, rate predictions, learning-curve experiments, and
//! reports as reproducible file-emitting commands.
//!
//! Exit codes: 0 success, 1 numeric/report failure, 2 invalid flags or
//! config, 3 solver failure during a run.

use clap::{Args, Parser, Subcommand};
use gp_lab_core::gpr;
use gp_lab_core::kernels::KernelSpec;
use gp_lab_core::lab::{
    self, compare_to_theory, run_learning_curve, write_curve_csv, ExperimentConfig, LabError,
};
use gp_lab_core::spectral::{
    builtin_expansion, estimate_alpha, estimate_beta, mercer_spectrum, predict_rates,
    theory_curves, Parity, RatePrediction,
};
use gp_lab_core::targets::BuiltinTarget;
use gp_lab_core::AngularPoint;
use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use std::f64::consts::PI;
use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "gp-lab", version, about = "GP regression learning-curve lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel family
    #[arg(long, value_parser = ["arccos0", "arccos1", "arccos2"])]
    kernel: String,
    /// Bias term in the kernel
    #[arg(long, value_parser = ["on", "off"], default_value = "off")]
    bias: String,
}

impl KernelArgs {
    fn spec(&self) -> KernelSpec {
        let order = match self.kernel.as_str() {
            "arccos0" => 0,
            "arccos1" => 1,
            _ => 2,
        };
        KernelSpec::new(order, self.bias == "on").expect("validated by clap")
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compute the Mercer spectrum of a kernel and fit its capacity exponent
    Spectrum {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Highest retained frequency
        #[arg(long, default_value_t = 512)]
        max_freq: u32,
        /// Quadrature nodes (must be ≥ 4·max-freq)
        #[arg(long, default_value_t = 8192)]
        quad: usize,
        /// Output CSV path (rank,frequency,parity,eigenvalue)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Expand a built-in target in a kernel's eigenbasis
    Targets {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Target identifier from the kernel's table
        #[arg(long, value_parser = ["f1", "f2", "f3", "f4"])]
        target: String,
        /// Output CSV path (rank,mu)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Predict learning-curve exponents for a kernel/target pair
    Rates {
        #[command(flatten)]
        kernel: KernelArgs,
        /// Target identifier, or `prior` for a kernel-prior sample
        #[arg(long, value_parser = ["f1", "f2", "f3", "f4", "prior"])]
        target: String,
        /// Exponent of σ² = σ₀²·n^t
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Noise standard deviation (sets the Θ(1) constants)
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        /// Also write the prediction JSON here (consumed by `report`)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the deterministic leading-order learning curves
    Theory {
        #[command(flatten)]
        kernel: KernelArgs,
        #[arg(long, value_parser = ["f1", "f2", "f3", "f4"])]
        target: String,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 256)]
        n_min: usize,
        #[arg(long, default_value_t = 65536)]
        n_max: usize,
        /// Number of log-spaced grid points
        #[arg(long, default_value_t = 17)]
        points: usize,
        /// Output CSV path (n,f0_det,g_det,m_det)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a Monte-Carlo learning-curve experiment from a JSON config
    Run {
        /// ExperimentConfig JSON file
        #[arg(long)]
        config: PathBuf,
        /// Output curve CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare a curve CSV against a rate prediction JSON
    Report {
        /// Curve CSV from `run`
        #[arg(long)]
        curve: PathBuf,
        /// Prediction JSON from `rates --out`
        #[arg(long)]
        rates: PathBuf,
        /// Slope tolerance
        #[arg(long, default_value_t = 0.15)]
        tol: f64,
        /// Output report JSON path (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify the test-point increment identity for the generalization error
    IdentityCheck {
        #[arg(long, default_value_t = 8)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        sigma: f64,
        #[arg(long, default_value_t = 512)]
        quad: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Lab(#[from] LabError),
    #[error("{0}")]
    Numeric(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn exit_code(e: &CliError) -> u8 {
    match e {
        CliError::Lab(LabError::Config(_)) | CliError::Invalid(_) => 2,
        CliError::Lab(LabError::Solver { .. }) => 3,
        _ => 1,
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::Spectrum {
            kernel,
            max_freq,
            quad,
            out,
        } => cmd_spectrum(kernel.spec(), max_freq, quad, out),
        Command::Targets {
            kernel,
            target,
            out,
        } => cmd_targets(kernel.spec(), &target, out),
        Command::Rates {
            kernel,
            target,
            t,
            sigma,
            out,
        } => cmd_rates(kernel.spec(), &target, t, sigma, out),
        Command::Theory {
            kernel,
            target,
            sigma,
            n_min,
            n_max,
            points,
            out,
        } => cmd_theory(kernel.spec(), &target, sigma, n_min, n_max, points, out),
        Command::Run { config, out } => cmd_run(&config, &out),
        Command::Report {
            curve,
            rates,
            tol,
            out,
        } => cmd_report(&curve, &rates, tol, out),
        Command::IdentityCheck { n, seed, sigma, quad } => cmd_identity_check(n, seed, sigma, quad),
    }
}

fn numeric<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Numeric(e.to_string())
}

fn parity_name(p: Parity) -> &'static str {
    match p {
        Parity::Constant => "constant",
        Parity::Cosine => "cosine",
        Parity::Sine => "sine",
    }
}

fn write_out(path: Option<PathBuf>, contents: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            File::create(p)?.write_all(contents.as_bytes())?;
        }
        None => print!("{contents}"),
    }
    Ok(())
}

fn cmd_spectrum(
    spec: KernelSpec,
    max_freq: u32,
    quad: usize,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let s = mercer_spectrum(spec, max_freq, quad).map_err(numeric)?;
    let mut csv = String::from("rank,frequency,parity,eigenvalue\n");
    for (i, m) in s.modes.iter().enumerate() {
        csv.push_str(&format!(
            "{},{},{},{:e}\n",
            i + 1,
            m.frequency,
            parity_name(m.parity),
            m.eigenvalue
        ));
    }
    write_out(out, &csv)?;
    let alpha = estimate_alpha(&s, None).map_err(numeric)?;
    println!("alpha≈{alpha:.4}");
    Ok(ExitCode::SUCCESS)
}

/// Resolves f1..f4 against the kernel's target table.
fn builtin(spec: KernelSpec, id: &str) -> BuiltinTarget {
    let idx = (id.as_bytes()[1] - b'1') as usize;
    lab::targets_for(spec)[idx]
}

fn cmd_targets(spec: KernelSpec, target: &str, out: Option<PathBuf>) -> Result<ExitCode, CliError> {
    let (max_freq, quad) = lab::theory_budget(spec);
    let s = mercer_spectrum(spec, max_freq, quad).map_err(numeric)?;
    let e = builtin_expansion(builtin(spec, target), &s);
    let mut csv = String::from("rank,mu\n");
    for (i, mu) in e.mu.iter().enumerate() {
        csv.push_str(&format!("{},{:e}\n", i + 1, mu));
    }
    write_out(out, &csv)?;
    println!("beta≈{}", format_beta(estimate_beta(&e)));
    println!("mu0={:.6}", e.mu0);
    Ok(ExitCode::SUCCESS)
}

fn format_beta(beta: f64) -> String {
    if beta.is_infinite() {
        "inf".into()
    } else {
        format!("{beta:.4}")
    }
}

/// Nominal capacity exponent of each kernel family: α = 2·order + 2.
fn nominal_alpha(spec: KernelSpec) -> f64 {
    2.0 * spec.order() as f64 + 2.0
}

fn cmd_rates(
    spec: KernelSpec,
    target: &str,
    t: f64,
    sigma: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let alpha = nominal_alpha(spec);
    let (beta, mu0) = if target == "prior" {
        (alpha / 2.0, 0.0)
    } else {
        let (max_freq, quad) = lab::theory_budget(spec);
        let s = mercer_spectrum(spec, max_freq, quad).map_err(numeric)?;
        let e = builtin_expansion(builtin(spec, target), &s);
        let mu0 = if e.mu0_positive() { e.mu0 } else { 0.0 };
        (builtin(spec, target).nominal_beta(), mu0)
    };
    let p = predict_rates(alpha, beta, mu0, sigma * sigma, t, false).map_err(numeric)?;
    let doc = prediction_to_json(&p);
    let text = serde_json::to_string_pretty(&doc).map_err(numeric)?;
    println!("{text}");
    if let Some(path) = out {
        File::create(path)?.write_all(text.as_bytes())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn prediction_to_json(p: &RatePrediction) -> Value {
    json!({
        "alpha": p.alpha,
        "beta": if p.beta.is_infinite() { json!("inf") } else { json!(p.beta) },
        "mu0_positive": p.mu0_positive,
        "t": p.t,
        "exp_nsc": p.exp_nsc,
        "exp_gen": p.exp_gen,
        "exp_mse": p.exp_mse,
        "constant_gen": p.constant_gen,
        "constant_mse": p.constant_mse,
    })
}

fn prediction_from_json(doc: &Value) -> Result<RatePrediction, CliError> {
    let get = |k: &str| -> Result<f64, CliError> {
        doc.get(k)
            .and_then(Value::as_f64)
            .ok_or_else(|| CliError::Invalid(format!("rates JSON missing numeric field {k:?}")))
    };
    let beta = match doc.get("beta") {
        Some(Value::String(s)) if s == "inf" => f64::INFINITY,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| CliError::Invalid("rates JSON: bad beta".into()))?,
        None => return Err(CliError::Invalid("rates JSON missing beta".into())),
    };
    Ok(RatePrediction {
        alpha: get("alpha")?,
        beta,
        mu0_positive: doc
            .get("mu0_positive")
            .and_then(Value::as_bool)
            .unwrap_or(false),
        t: get("t")?,
        exp_nsc: get("exp_nsc")?,
        exp_gen: get("exp_gen")?,
        exp_mse: get("exp_mse")?,
        constant_gen: doc.get("constant_gen").and_then(Value::as_f64),
        constant_mse: doc.get("constant_mse").and_then(Value::as_f64),
    })
}

fn cmd_theory(
    spec: KernelSpec,
    target: &str,
    sigma: f64,
    n_min: usize,
    n_max: usize,
    points: usize,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    if n_min < 1 || n_max <= n_min || points < 2 {
        return Err(CliError::Invalid(
            "need 1 ≤ n-min < n-max and points ≥ 2".into(),
        ));
    }
    let (max_freq, quad) = lab::theory_budget(spec);
    let s = mercer_spectrum(spec, max_freq, quad).map_err(numeric)?;
    let e = builtin_expansion(builtin(spec, target), &s);
    let ratio = (n_max as f64 / n_min as f64).powf(1.0 / (points - 1) as f64);
    let grid: Vec<f64> = (0..points)
        .map(|i| n_min as f64 * ratio.powi(i as i32))
        .collect();
    let sig_sq = sigma * sigma;
    let curve = theory_curves(&s, &e, sig_sq, sig_sq, &grid, 1e-3).map_err(numeric)?;
    let mut csv = String::from("n,f0_det,g_det,m_det\n");
    for i in 0..grid.len() {
        csv.push_str(&format!(
            "{:.3},{:e},{:e},{:e}\n",
            grid[i], curve.f0_det[i], curve.g_det[i], curve.m_det[i]
        ));
    }
    write_out(out, &csv)?;
    for (name, ys) in [("f0", &curve.f0_det), ("g", &curve.g_det), ("m", &curve.m_det)] {
        match lab::fit_slope(&grid, ys, 0) {
            Ok((slope, _, _)) => println!("{name}_slope={slope:.4}"),
            Err(_) => println!("{name}_slope=undefined"),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(config_path: &PathBuf, out: &PathBuf) -> Result<ExitCode, CliError> {
    let text = std::fs::read_to_string(config_path)?;
    let config: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("config: {e}")))?;
    config.validate()?;
    let result = run_learning_curve(&config)?;
    let mut buf = Vec::new();
    write_curve_csv(&result, &mut buf)?;
    File::create(out)?.write_all(&buf)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_report(
    curve: &PathBuf,
    rates: &PathBuf,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<ExitCode, CliError> {
    let result = lab::read_curve_csv(File::open(curve)?)?;
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(rates)?)
        .map_err(|e| CliError::Invalid(format!("rates JSON: {e}")))?;
    let prediction = prediction_from_json(&doc)?;
    let report = compare_to_theory(&result, &prediction, tol).map_err(numeric)?;
    let text = serde_json::to_string_pretty(&report).map_err(numeric)?;
    write_out(out, &format!("{text}\n"))?;
    if report.pass {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}

fn cmd_identity_check(n: usize, seed: u64, sigma: f64, quad: usize) -> Result<ExitCode, CliError> {
    if n < 1 || sigma <= 0.0 {
        return Err(CliError::Invalid("need n ≥ 1 and sigma > 0".into()));
    }
    let spec = KernelSpec::new(1, false).expect("static spec");
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<AngularPoint> = (0..n)
        .map(|_| AngularPoint::new(rng.gen_range(-PI..PI)))
        .collect();
    let target = |t: f64| (2.0 * t).cos();
    let (lhs, rhs) =
        gpr::expected_identity_check(spec, &points, target, sigma * sigma, quad).map_err(numeric)?;
    let diff = (lhs - rhs).abs();
    println!("lhs={lhs:.12e} rhs={rhs:.12e} diff={diff:.3e}");
    if diff <= 1e-8 * lhs.abs().max(1.0) {
        println!("identity holds");
        Ok(ExitCode::SUCCESS)
    } else {
        println!("identity violated");
        Ok(ExitCode::from(1))
    }
}
