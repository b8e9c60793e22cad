//! Deterministic leading-order learning curves evaluated from the Mercer
//! spectrum, plus the power-law sum evaluator and its regime classifier.

use super::{SpectralError, Spectrum, TargetExpansion};
use serde::{Deserialize, Serialize};

/// Deterministic leading-order values of the three learning-curve
/// quantities on a grid of sample sizes.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoryCurve {
    pub n_grid: Vec<f64>,
    pub f0_det: Vec<f64>,
    pub g_det: Vec<f64>,
    pub m_det: Vec<f64>,
    pub p_used: usize,
    pub tail_bound: f64,
}

/// Evaluates the deterministic curves
///   f0_det(n) = ½Σ[log(1+nλ/σ²) − (nλ/σ²)/(1+nλ/σ²)]
///             + (n/2σ²)[Σμ²/(1+nλ/σ²) + μ0²],
///   g_det(n) = (1/2σ²)[Σλ/(1+nλ/σ²) − Σλ/(1+nλ/σ²)² + Σμ²/(1+nλ/σ²)²]
///            + μ0²/(2σ²),
///   m_det(n) = (σ_t²/σ_m²)[Σλ/(1+nλ/σ_m²) − Σλ/(1+nλ/σ_m²)²]
///            + Σμ²/(1+nλ/σ_m²)² + μ0².
///
/// The spectrum must carry enough modes that the eigenvalue tail above the
/// truncation (estimated from the fitted power law) is below
/// `tail_tol`·λ_max.
pub fn theory_curves(
    spectrum: &Spectrum,
    expansion: &TargetExpansion,
    sigma_model_sq: f64,
    sigma_true_sq: f64,
    n_grid: &[f64],
    tail_tol: f64,
) -> Result<TheoryCurve, SpectralError> {
    if sigma_model_sq <= 0.0 {
        return Err(SpectralError::Domain(
            "sigma_model² must be positive for the deterministic curves".into(),
        ));
    }
    let tail = eigenvalue_tail_bound(spectrum);
    if tail > tail_tol * spectrum.lambda_max() {
        return Err(SpectralError::TailBound { tail, tol: tail_tol });
    }

    let p = spectrum.positive_count().min(expansion.mu.len());
    let lam: Vec<f64> = spectrum.modes[..p].iter().map(|m| m.eigenvalue).collect();
    let mu: Vec<f64> = expansion.mu[..p].to_vec();
    let mu0_sq = expansion.mu0 * expansion.mu0;

    let sm2 = sigma_model_sq;
    let mut f0 = Vec::with_capacity(n_grid.len());
    let mut g = Vec::with_capacity(n_grid.len());
    let mut m_ = Vec::with_capacity(n_grid.len());
    for &n in n_grid {
        let mut log_term = 0.0;
        let mut trace_term = 0.0;
        let mut mu_d1 = 0.0;
        let mut lam_d1 = 0.0;
        let mut lam_d2 = 0.0;
        let mut mu_d2 = 0.0;
        for (&l, &u) in lam.iter().zip(mu.iter()) {
            let r = n * l / sm2;
            let d = 1.0 + r;
            log_term += d.ln();
            trace_term += r / d;
            mu_d1 += u * u / d;
            lam_d1 += l / d;
            lam_d2 += l / (d * d);
            mu_d2 += u * u / (d * d);
        }
        f0.push(0.5 * (log_term - trace_term) + n / (2.0 * sm2) * (mu_d1 + mu0_sq));
        g.push((lam_d1 - lam_d2 + mu_d2) / (2.0 * sm2) + mu0_sq / (2.0 * sm2));
        m_.push((sigma_true_sq / sm2) * (lam_d1 - lam_d2) + mu_d2 + mu0_sq);
    }
    Ok(TheoryCurve {
        n_grid: n_grid.to_vec(),
        f0_det: f0,
        g_det: g,
        m_det: m_,
        p_used: p,
        tail_bound: tail,
    })
}

/// Σ_{p>P} λ_p estimated by extrapolating the power law of the last decade
/// of retained eigenvalues past the truncation frequency.
pub fn eigenvalue_tail_bound(spectrum: &Spectrum) -> f64 {
    let m_max = spectrum.max_frequency as f64;
    // smallest retained positive frequency coefficient and the decade below
    let mut pts: Vec<(f64, f64)> = spectrum
        .modes
        .iter()
        .filter(|m| m.parity == super::Parity::Cosine && m.frequency as f64 >= m_max / 8.0)
        .map(|m| ((m.frequency as f64).ln(), m.eigenvalue.ln()))
        .collect();
    if pts.len() < 2 {
        return 0.0;
    }
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (intercept, slope, _, _) = crate::numerics::ols(&xs, &ys);
    let alpha = -slope;
    if alpha <= 1.0 {
        return f64::INFINITY;
    }
    let c = intercept.exp();
    // two modes per frequency: Σ_{m>M} 2·c·m^{−α} ≤ 2c·M^{1−α}/(α−1)
    2.0 * c * m_max.powf(1.0 - alpha) / (alpha - 1.0)
}

/// Asymptotic regime of the power-law sum in `powerlaw_sum` as m → ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// s₂s₃ > s₁−1: Θ(m^{(1−s₁)/s₂}).
    HeadLimited,
    /// s₂s₃ = s₁−1: Θ(m^{−s₃}·log m).
    Critical,
    /// s₂s₃ < s₁−1: Θ(m^{−s₃}).
    TailLimited,
}

impl Regime {
    /// Exponent of the predicted scaling (log factor excluded in the
    /// critical case).
    pub fn exponent(&self, s1: f64, s2: f64, s3: f64) -> f64 {
        match self {
            Regime::HeadLimited => (1.0 - s1) / s2,
            Regime::Critical | Regime::TailLimited => -s3,
        }
    }
}

/// Three-way regime split by comparing s₂·s₃ against s₁−1.
pub fn classify_regime(s1: f64, s2: f64, s3: f64) -> Result<Regime, SpectralError> {
    if s1 <= 1.0 || s2 <= 0.0 || s3 <= 0.0 {
        return Err(SpectralError::Domain(format!(
            "classify_regime needs s1 > 1, s2 > 0, s3 > 0 (got {s1}, {s2}, {s3})"
        )));
    }
    let lhs = s2 * s3;
    let rhs = s1 - 1.0;
    Ok(if (lhs - rhs).abs() < 1e-12 {
        Regime::Critical
    } else if lhs > rhs {
        Regime::HeadLimited
    } else {
        Regime::TailLimited
    })
}

/// Direct evaluation of Σ_{i=1}^{R} a₁·i^{−s₁} / (1 + a₂·m·i^{−s₂})^{s₃}.
pub fn powerlaw_sum(
    a1: f64,
    a2: f64,
    s1: f64,
    s2: f64,
    s3: f64,
    m: f64,
    r: u64,
) -> Result<f64, SpectralError> {
    if a1 <= 0.0 || a2 <= 0.0 || s1 <= 0.0 || s2 <= 0.0 {
        return Err(SpectralError::Domain(
            "powerlaw_sum constants must be positive".into(),
        ));
    }
    if r > 100_000_000 {
        return Err(SpectralError::SumTooLong(r));
    }
    let mut acc = 0.0;
    for i in 1..=r {
        let x = i as f64;
        acc += a1 * x.powf(-s1) / (1.0 + a2 * m * x.powf(-s2)).powf(s3);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::spectral::{builtin_expansion, mercer_spectrum};
    use crate::targets::BuiltinTarget;

    #[test]
    fn zero_target_zero_mse() {
        let s = mercer_spectrum(KernelSpec::new(1, false).unwrap(), 128, 1024).unwrap();
        let e = TargetExpansion {
            mu: vec![0.0; s.positive_count()],
            mu0: 0.0,
            l2_norm: 0.0,
            inspan_tail_sq: 0.0,
        };
        let t = theory_curves(&s, &e, 0.01, 0.0, &[16.0, 256.0, 4096.0], 1.0).unwrap();
        for v in t.m_det {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn plateau_at_mu0_level() {
        let s = mercer_spectrum(KernelSpec::new(1, false).unwrap(), 256, 2048).unwrap();
        let e = builtin_expansion(BuiltinTarget::ThetaSquared, &s);
        assert!(e.mu0 > 0.0);
        let sigma_sq = 0.01;
        let t = theory_curves(&s, &e, sigma_sq, sigma_sq, &[1e7, 1e9], 1.0).unwrap();
        let level = e.mu0 * e.mu0 / (2.0 * sigma_sq);
        // g_det decreases toward the plateau from above
        assert!(t.g_det[0] > level && t.g_det[1] > level);
        assert!((t.g_det[1] - level) / level < 0.05);
    }

    #[test]
    fn gen_error_slope_well_specified_row() {
        // (order 1, no bias, cos 2θ, σ=0.1): log g_det slope over n ∈ [2⁸,2¹⁶]
        // is −3/4 within 0.05.
        let s = mercer_spectrum(KernelSpec::new(1, false).unwrap(), 1024, 4096).unwrap();
        let e = builtin_expansion(BuiltinTarget::CosTwoTheta, &s);
        let grid: Vec<f64> = (0..17)
            .map(|i| 2f64.powf(8.0 + 8.0 * i as f64 / 16.0))
            .collect();
        let t = theory_curves(&s, &e, 0.01, 0.01, &grid, 1.0).unwrap();
        let xs: Vec<f64> = grid.iter().map(|n| n.ln()).collect();
        let ys: Vec<f64> = t.g_det.iter().map(|v| v.ln()).collect();
        let (_, slope, _, _) = crate::numerics::ols(&xs, &ys);
        assert!((slope + 0.75).abs() <= 0.05, "slope {slope}");
    }

    #[test]
    fn monotone_decreasing_when_in_span() {
        let s = mercer_spectrum(KernelSpec::new(1, true).unwrap(), 256, 2048).unwrap();
        for t in [BuiltinTarget::CosTwoTheta, BuiltinTarget::Sawtooth] {
            let e = builtin_expansion(t, &s);
            let grid: Vec<f64> = (4..14).map(|k| 2f64.powi(k)).collect();
            let c = theory_curves(&s, &e, 0.01, 0.01, &grid, 1.0).unwrap();
            for w in c.g_det.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
            for w in c.m_det.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn tail_bound_enforced() {
        let s = mercer_spectrum(KernelSpec::new(0, false).unwrap(), 64, 512).unwrap();
        let e = builtin_expansion(BuiltinTarget::CosTwoTheta, &s);
        // order 0 decays like m⁻², so a 64-mode truncation has a fat tail
        assert!(matches!(
            theory_curves(&s, &e, 0.01, 0.01, &[16.0], 1e-9),
            Err(SpectralError::TailBound { .. })
        ));
    }

    #[test]
    fn regime_classifier_cases() {
        assert_eq!(classify_regime(3.0, 2.0, 2.0).unwrap(), Regime::HeadLimited);
        assert_eq!(classify_regime(2.0, 1.0, 1.0).unwrap(), Regime::Critical);
        assert_eq!(classify_regime(4.0, 1.0, 1.0).unwrap(), Regime::TailLimited);
        assert!(classify_regime(0.5, 1.0, 1.0).is_err());
    }

    #[test]
    fn powerlaw_sum_matches_predicted_scaling() {
        // s1=3, s2=2, s3=2: head-limited, Θ(m⁻¹); the ratio sum/m⁻¹ should be
        // stable within ×1.5 across three decades of m.
        let mut ratios = Vec::new();
        for m in [1e3, 1e4, 1e5] {
            let v = powerlaw_sum(1.0, 1.0, 3.0, 2.0, 2.0, m, 1_000_000).unwrap();
            ratios.push(v * m);
        }
        let (min, max) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        assert!(max / min < 1.5, "ratios {ratios:?}");
    }

    #[test]
    fn powerlaw_sum_guard() {
        assert!(matches!(
            powerlaw_sum(1.0, 1.0, 3.0, 2.0, 2.0, 10.0, 200_000_000),
            Err(SpectralError::SumTooLong(_))
        ));
        assert!(powerlaw_sum(-1.0, 1.0, 3.0, 2.0, 2.0, 10.0, 100).is_err());
    }
}
