//! Expansion of target functions in the eigenbasis of a kernel spectrum:
//! coefficients μ_p, out-of-span mass μ₀, and the source-exponent estimator.

use super::{Mode, Parity, Spectrum};
use crate::numerics::{ols, periodic_cosine_coeff, periodic_sine_coeff, CosTable};
use crate::targets::BuiltinTarget;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Target coefficients aligned to a [`Spectrum`]'s mode order.
///
/// `mu[p]` is ⟨f, φ_p⟩ for the p-th retained mode; `mu0` is the mass of the
/// component orthogonal to every eigenfunction with positive eigenvalue;
/// `inspan_tail_sq` is the squared mass sitting on in-span frequencies above
/// the spectrum's truncation — neither learnable at the retained resolution
/// nor out-of-span, and tracked separately so Parseval closes:
/// Σμ² + μ0² + tail = ‖f‖².
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TargetExpansion {
    pub mu: Vec<f64>,
    pub mu0: f64,
    pub l2_norm: f64,
    pub inspan_tail_sq: f64,
}

impl TargetExpansion {
    /// Parseval defect |Σμ² + μ0² + tail − ‖f‖²|.
    pub fn parseval_defect(&self) -> f64 {
        let total: f64 =
            self.mu.iter().map(|m| m * m).sum::<f64>() + self.mu0 * self.mu0 + self.inspan_tail_sq;
        (total - self.l2_norm * self.l2_norm).abs()
    }

    /// Whether the out-of-span mass is materially positive (relative to the
    /// target's own norm, so quadrature residue never flips the answer).
    pub fn mu0_positive(&self) -> bool {
        self.mu0 * self.mu0 > 1e-6 * self.l2_norm * self.l2_norm
    }
}

/// Exact expansion of a built-in target: coefficients from the closed-form
/// Fourier series, μ₀ from the kernel's null parity classes, and the in-span
/// tail above max_frequency in closed form.
pub fn builtin_expansion(target: BuiltinTarget, spectrum: &Spectrum) -> TargetExpansion {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mu: Vec<f64> = spectrum
        .modes
        .iter()
        .map(|mode| match mode.parity {
            Parity::Constant => target.mean(),
            Parity::Cosine => target.cosine_coeff(mode.frequency) / sqrt2,
            Parity::Sine => target.sine_coeff(mode.frequency) / sqrt2,
        })
        .collect();

    let (odd_start, even_start) = spectrum.null_class_starts();
    let mut mu0_sq = 0.0;
    if spectrum.constant_null() {
        mu0_sq += target.mean().powi(2);
    }
    for start in [odd_start, even_start].into_iter().flatten() {
        mu0_sq += target.class_mass_sq(start);
    }

    // Mass of each live parity class that the spectrum does not retain:
    // everything from the first dropped frequency upward, whether dropped by
    // the truncation at max_frequency or by the relative eigenvalue floor
    // (fast-decaying kernels cross it well inside the span). Monotone decay
    // makes the dropped set a suffix of the class, so one closed-form class
    // sum covers it.
    let m_max = spectrum.max_frequency;
    let mut tail = 0.0;
    for parity_bit in [1u32, 0u32] {
        let class_null = if parity_bit == 1 { odd_start } else { even_start };
        if class_null.is_none() {
            let first_above = if (m_max + 1) % 2 == parity_bit {
                m_max + 1
            } else {
                m_max + 2
            };
            let first_dropped = spectrum
                .null_frequencies
                .iter()
                .filter(|(m, p)| *p == Parity::Cosine && *m >= 1 && m % 2 == parity_bit)
                .map(|(m, _)| *m)
                .min()
                .unwrap_or(first_above)
                .min(first_above);
            tail += target.class_mass_sq(first_dropped);
        }
    }

    TargetExpansion {
        mu,
        mu0: mu0_sq.max(0.0).sqrt(),
        l2_norm: target.l2_norm_sq().sqrt(),
        inspan_tail_sq: tail,
    }
}

/// Numeric expansion of an arbitrary bounded target by periodic trapezoid
/// quadrature. μ₀ here is bounded by the quadrature residual: everything not
/// captured by the retained modes, including any in-span tail, so it is an
/// upper bound rather than the exact out-of-span mass.
pub fn target_expansion<F: Fn(f64) -> f64>(
    target: F,
    spectrum: &Spectrum,
    quad_nodes: usize,
) -> TargetExpansion {
    let n = quad_nodes;
    // Midpoint offsets keep jump discontinuities off the grid.
    let samples: Vec<f64> = (0..n)
        .map(|j| target(-PI + 2.0 * PI * (j as f64 + 0.5) / n as f64))
        .collect();
    let l2_sq = samples.iter().map(|v| v * v).sum::<f64>() / n as f64;

    // The midpoint grid θ_j = −π + 2π(j+½)/N equals u_j = 2πj/N + (π/N − π);
    // express the inner products directly instead of via the shared table.
    let mu: Vec<f64> = spectrum
        .modes
        .iter()
        .map(|mode| {
            let mf = mode.frequency as f64;
            let mut acc = 0.0;
            for (j, &g) in samples.iter().enumerate() {
                let theta = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
                acc += g * match mode.parity {
                    Parity::Constant => 1.0,
                    Parity::Cosine => std::f64::consts::SQRT_2 * (mf * theta).cos(),
                    Parity::Sine => std::f64::consts::SQRT_2 * (mf * theta).sin(),
                };
            }
            acc / n as f64
        })
        .collect();

    let captured: f64 = mu.iter().map(|m| m * m).sum();
    let mu0 = (l2_sq - captured).max(0.0).sqrt();
    TargetExpansion {
        mu,
        mu0,
        l2_norm: l2_sq.sqrt(),
        inspan_tail_sq: 0.0,
    }
}

/// Convenience: Fourier analysis of arbitrary samples on the canonical grid
/// (used by tests to cross-check the closed forms).
pub fn fourier_coeffs(samples: &[f64], m: u32) -> (f64, f64) {
    let table = CosTable::new(samples.len());
    (
        2.0 * periodic_cosine_coeff(samples, m as usize, &table),
        2.0 * periodic_sine_coeff(samples, m as usize, &table),
    )
}

/// OLS estimate of the source exponent β: slope of log|μ_p| against log p
/// over the nonzero coefficients (gaps allowed), negated. Returns +∞ when
/// the expansion is effectively finite (fewer than 3 nonzero coefficients
/// beyond rank 3).
pub fn estimate_beta(expansion: &TargetExpansion) -> f64 {
    let pts: Vec<(f64, f64)> = expansion
        .mu
        .iter()
        .enumerate()
        .filter(|(_, &m)| m.abs() > 1e-10)
        .map(|(i, &m)| ((i + 1) as f64, m.abs()))
        .collect();
    let beyond = pts.iter().filter(|(p, _)| *p > 3.0).count();
    if beyond < 3 {
        return f64::INFINITY;
    }
    let xs: Vec<f64> = pts.iter().map(|(p, _)| p.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, m)| m.ln()).collect();
    let (_, slope, _, _) = ols(&xs, &ys);
    -slope
}

/// Draws a random target from the kernel's own prior via the Karhunen–Loève
/// expansion: μ_p = √λ_p·ω_p with ω_p i.i.d. standard normal. μ₀ = 0 by
/// construction (well-specified case).
pub fn sample_target_from_prior(
    spectrum: &Spectrum,
    truncation: usize,
    seed: u64,
) -> TargetExpansion {
    let p = truncation.min(spectrum.positive_count());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mu: Vec<f64> = spectrum.modes[..p]
        .iter()
        .map(|mode| {
            let w: f64 = StandardNormal.sample(&mut rng);
            mode.eigenvalue.sqrt() * w
        })
        .collect();
    let l2_sq: f64 = mu.iter().map(|m| m * m).sum();
    TargetExpansion {
        mu,
        mu0: 0.0,
        l2_norm: l2_sq.sqrt(),
        inspan_tail_sq: 0.0,
    }
}

/// Pointwise evaluation of an expansion-backed function
/// f(θ) = Σ μ_p φ_p(θ).
pub fn expansion_value(spectrum: &Spectrum, expansion: &TargetExpansion, theta: f64) -> f64 {
    spectrum
        .modes
        .iter()
        .zip(expansion.mu.iter())
        .map(|(mode, &mu)| mu * super::eigenfunction_value(mode, theta))
        .sum()
}

#[allow(dead_code)]
fn _mode_type_check(_: &Mode) {}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelSpec;
    use crate::spectral::mercer_spectrum;
    use approx::assert_relative_eq;

    fn spectrum(order: u8, bias: bool) -> Spectrum {
        mercer_spectrum(KernelSpec::new(order, bias).unwrap(), 512, 4096).unwrap()
    }

    #[test]
    fn cos2_single_harmonic() {
        let s = spectrum(1, false);
        let e = builtin_expansion(BuiltinTarget::CosTwoTheta, &s);
        let mut nonzero = 0;
        for (mode, &mu) in s.modes.iter().zip(&e.mu) {
            if mu.abs() > 1e-12 {
                nonzero += 1;
                assert_eq!((mode.frequency, mode.parity), (2, Parity::Cosine));
                assert_relative_eq!(mu, 1.0 / std::f64::consts::SQRT_2);
            }
        }
        assert_eq!(nonzero, 1);
        assert_eq!(e.mu0, 0.0);
        assert!(estimate_beta(&e).is_infinite());
    }

    #[test]
    fn theta_squared_out_of_span_mass() {
        // Odd frequencies ≥ 3 are null for order 1 without bias, so θ²'s odd
        // coefficients beyond m=1 are unlearnable: μ0² = Σ_{odd m≥3}(4/m²)²/2.
        let s = spectrum(1, false);
        let e = builtin_expansion(BuiltinTarget::ThetaSquared, &s);
        let expect = (8.0 * (PI.powi(4) / 96.0 - 1.0)).sqrt();
        assert_relative_eq!(e.mu0, expect, max_relative = 1e-9);
        assert!(e.mu0_positive());
        // With bias every frequency is in-span.
        let sb = spectrum(1, true);
        let eb = builtin_expansion(BuiltinTarget::ThetaSquared, &sb);
        assert_eq!(eb.mu0, 0.0);
        assert!(!eb.mu0_positive());
    }

    #[test]
    fn frozen_mu0_values() {
        // Oracle values for every (kernel, target) pair with μ0 > 0.
        let s0 = spectrum(0, false);
        let e = builtin_expansion(BuiltinTarget::CosTwoTheta, &s0);
        assert_relative_eq!(e.mu0, 0.5f64.sqrt(), max_relative = 1e-9);
        let e = builtin_expansion(BuiltinTarget::Sawtooth, &s0);
        assert_relative_eq!(e.mu0, (PI * PI / 12.0).sqrt(), max_relative = 1e-9);
        let s2 = spectrum(2, false);
        let e = builtin_expansion(BuiltinTarget::Sawtooth, &s2);
        assert_relative_eq!(
            e.mu0,
            (2.0 * (PI * PI / 24.0 - 0.25)).sqrt(),
            max_relative = 1e-9
        );
        // Sign on order 2 is fully in-span (odd harmonics survive).
        let e = builtin_expansion(BuiltinTarget::Sign, &s2);
        assert_eq!(e.mu0, 0.0);
    }

    #[test]
    fn parseval_all_pairs() {
        for &(o, b) in &[(0u8, false), (0, true), (1, false), (1, true), (2, false), (2, true)] {
            let s = spectrum(o, b);
            for t in BuiltinTarget::ALL {
                let e = builtin_expansion(t, &s);
                assert!(
                    e.parseval_defect() <= 1e-6 * e.l2_norm * e.l2_norm,
                    "order {o} bias {b} {t:?}: defect {}",
                    e.parseval_defect()
                );
            }
        }
    }

    #[test]
    fn numeric_expansion_agrees_with_exact() {
        let s = spectrum(1, true);
        // Continuous targets: quadrature aliasing is O(N⁻²)-small. The
        // discontinuous ones (sawtooth, sign) alias at the 1e-3 level and are
        // exactly why the closed-form path exists.
        for t in [BuiltinTarget::ThetaSquared, BuiltinTarget::Tent] {
            let exact = builtin_expansion(t, &s);
            let numeric = target_expansion(|x| t.eval(x), &s, 8192);
            for (a, b) in exact.mu.iter().zip(numeric.mu.iter()) {
                assert!((a - b).abs() < 1e-4, "{t:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn beta_estimates_match_nominal() {
        let s = spectrum(1, false);
        let e = builtin_expansion(BuiltinTarget::Sawtooth, &s);
        let beta = estimate_beta(&e);
        assert!((beta - 1.0).abs() <= 0.1, "sawtooth beta {beta}");
        let e = builtin_expansion(BuiltinTarget::ShiftedSquare, &s);
        let beta = estimate_beta(&e);
        assert!((beta - 2.0).abs() <= 0.1, "shifted-square beta {beta}");
    }

    #[test]
    fn prior_sample_determinism_and_variance() {
        let s = spectrum(1, false);
        let a = sample_target_from_prior(&s, 64, 42);
        let b = sample_target_from_prior(&s, 64, 42);
        assert_eq!(a.mu, b.mu);
        assert_eq!(a.mu0, 0.0);
        // E[μ_p²] = λ_p within 5% over 10⁴ draws for the leading modes.
        let draws = 10_000;
        let mut acc = vec![0.0; 10];
        for seed in 0..draws {
            let e = sample_target_from_prior(&s, 10, seed);
            for (i, &m) in e.mu.iter().enumerate() {
                acc[i] += m * m;
            }
        }
        for (i, sum) in acc.iter().enumerate() {
            let mean = sum / draws as f64;
            let lambda = s.modes[i].eigenvalue;
            assert!(
                (mean - lambda).abs() <= 0.05 * lambda,
                "mode {i}: {mean} vs {lambda}"
            );
        }
    }

    #[test]
    fn prior_sample_beta_near_half_alpha() {
        let s = spectrum(1, false);
        let mut betas = Vec::new();
        for seed in 100..105 {
            let e = sample_target_from_prior(&s, s.positive_count(), seed);
            betas.push(estimate_beta(&e));
        }
        let mean = betas.iter().sum::<f64>() / betas.len() as f64;
        assert!((mean - 2.0).abs() <= 0.2, "mean beta {mean}");
    }
}
