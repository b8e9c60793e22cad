//! Mercer decomposition of zonal kernels on S¹ and everything built on top
//! of it: target expansions, exponent estimation, deterministic learning
//! curves, and the power-law sum evaluator.

mod expansion;
mod rates;
mod theory;

pub use expansion::{
    builtin_expansion, estimate_beta, expansion_value, fourier_coeffs, sample_target_from_prior,
    target_expansion, TargetExpansion,
};
pub use rates::{estimate_alpha, predict_rates, RatePrediction};
pub use theory::{
    classify_regime, eigenvalue_tail_bound, powerlaw_sum, theory_curves, Regime, TheoryCurve,
};

use crate::kernels::{zonal_profile, KernelSpec};
use crate::numerics::{periodic_cosine_coeff, CosTable};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SpectralError {
    #[error("quadrature resolution too low: need quad_nodes ≥ 4·max_frequency ({needed}), got {got}")]
    Aliasing { needed: usize, got: usize },
    #[error("max_frequency must be ≥ 1")]
    NoFrequencies,
    #[error("need at least {needed} positive eigenvalues in the fit window, found {found}")]
    InsufficientData { needed: usize, found: usize },
    #[error("eigenvalue tail bound {tail:.3e} exceeds tolerance {tol:.3e}·λ₁")]
    TailBound { tail: f64, tol: f64 },
    #[error("power-law sum range {0} exceeds the 10⁸ guard")]
    SumTooLong(u64),
    #[error("parameter out of domain: {0}")]
    Domain(String),
}

/// Parity of an eigenfunction of a zonal kernel on S¹.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Constant,
    Cosine,
    Sine,
}

/// One Mercer mode: eigenvalue λ with eigenfunction 1, √2·cos(mθ) or
/// √2·sin(mθ) (unit L² norm under the uniform density).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Mode {
    pub frequency: u32,
    pub parity: Parity,
    pub eigenvalue: f64,
}

/// Ordered Mercer spectrum of a zonal kernel.
///
/// `modes` holds the strictly positive eigenvalues sorted descending, ties
/// broken by lower frequency first, cosine before sine. Frequencies whose
/// coefficient falls below the zero threshold 10⁻¹²·κ(0) land in
/// `null_frequencies`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Spectrum {
    pub modes: Vec<Mode>,
    pub null_frequencies: Vec<(u32, Parity)>,
    pub max_frequency: u32,
    pub kappa0: f64,
}

/// Default quadrature grid size.
pub const DEFAULT_QUAD_NODES: usize = 8192;
/// Default truncation frequency.
pub const DEFAULT_MAX_FREQUENCY: u32 = 512;

impl Spectrum {
    /// Number of strictly positive eigenvalues retained.
    pub fn positive_count(&self) -> usize {
        self.modes.len()
    }

    /// Sum of retained eigenvalues (bounded by κ(0)).
    pub fn trace(&self) -> f64 {
        self.modes.iter().map(|m| m.eigenvalue).sum()
    }

    /// Largest eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        self.modes.first().map(|m| m.eigenvalue).unwrap_or(0.0)
    }

    /// Smallest frequency per parity class from which the whole class is
    /// null, detected on the low-frequency window m ≤ 64 where the kernel's
    /// power law sits far above the zero threshold. Returns
    /// (odd_class_start, even_class_start); `None` means the class is
    /// in-span. The constant mode is reported separately by
    /// [`Spectrum::constant_null`].
    ///
    /// This is deliberately not derived from `null_frequencies` directly:
    /// far above the window, genuinely positive eigenvalues eventually decay
    /// below the absolute threshold, and treating those frequencies as
    /// out-of-span would corrupt μ₀.
    pub fn null_class_starts(&self) -> (Option<u32>, Option<u32>) {
        let window = 64.min(self.max_frequency);
        let is_null = |m: u32| {
            self.null_frequencies
                .iter()
                .any(|&(f, p)| f == m && p == Parity::Cosine)
        };
        let mut result = [None, None];
        for (slot, parity_bit) in result.iter_mut().zip([1u32, 0u32]) {
            let members: Vec<u32> = (1..=window).filter(|m| m % 2 == parity_bit).collect();
            let mut start = None;
            for &m in members.iter().rev() {
                if is_null(m) {
                    start = Some(m);
                } else {
                    break;
                }
            }
            // Require a genuine suffix of at least 3 members so an isolated
            // zero crossing is not mistaken for a null class.
            if let Some(s) = start {
                let count = members.iter().filter(|&&m| m >= s).count();
                if count < 3 {
                    start = None;
                }
            }
            *slot = start;
        }
        (result[0], result[1])
    }

    /// Whether the constant (frequency-0) mode is null.
    pub fn constant_null(&self) -> bool {
        self.null_frequencies
            .iter()
            .any(|&(f, p)| f == 0 && p == Parity::Constant)
    }

    /// Positive eigenvalue of frequency m (cosine parity), if retained.
    pub fn eigenvalue_at(&self, frequency: u32, parity: Parity) -> Option<f64> {
        self.modes
            .iter()
            .find(|mode| mode.frequency == frequency && mode.parity == parity)
            .map(|mode| mode.eigenvalue)
    }
}

/// Computes the Mercer spectrum of a zonal kernel by periodic trapezoid
/// quadrature: the eigenvalue of frequency m is the Fourier cosine
/// coefficient c_m = (1/π)∫₀^π κ(u)cos(mu) du, and each m ≥ 1 carries a
/// cosine and a sine mode with equal eigenvalue.
pub fn mercer_spectrum(
    spec: KernelSpec,
    max_frequency: u32,
    quad_nodes: usize,
) -> Result<Spectrum, SpectralError> {
    if max_frequency < 1 {
        return Err(SpectralError::NoFrequencies);
    }
    if quad_nodes < 4 * max_frequency as usize {
        return Err(SpectralError::Aliasing {
            needed: 4 * max_frequency as usize,
            got: quad_nodes,
        });
    }
    let kappa0 = spec.kappa0();
    let threshold = 1e-12 * kappa0;

    // κ sampled on the full period; Δθ is folded into [0, π].
    let n = quad_nodes;
    let samples: Vec<f64> = (0..n)
        .map(|j| {
            let u = 2.0 * PI * j as f64 / n as f64;
            let delta = if u > PI { 2.0 * PI - u } else { u };
            zonal_profile(spec, delta).expect("delta folded into [0, π]")
        })
        .collect();
    let table = CosTable::new(n);

    let mut modes = Vec::new();
    let mut null_frequencies = Vec::new();
    let c0 = periodic_cosine_coeff(&samples, 0, &table);
    if c0 >= threshold {
        modes.push(Mode {
            frequency: 0,
            parity: Parity::Constant,
            eigenvalue: c0,
        });
    } else {
        null_frequencies.push((0, Parity::Constant));
    }
    for m in 1..=max_frequency {
        // Full-period average of κ·cos(mu): with the orthonormal pair
        // {√2cos(mθ), √2sin(mθ)} the reconstruction reads
        // κ(Δ) = λ₀ + Σ 2λ_m cos(mΔ), so λ_m is the average itself.
        let cm = periodic_cosine_coeff(&samples, m as usize, &table);
        if cm >= threshold {
            modes.push(Mode {
                frequency: m,
                parity: Parity::Cosine,
                eigenvalue: cm,
            });
            modes.push(Mode {
                frequency: m,
                parity: Parity::Sine,
                eigenvalue: cm,
            });
        } else {
            null_frequencies.push((m, Parity::Cosine));
            null_frequencies.push((m, Parity::Sine));
        }
    }

    modes.sort_by(|a, b| {
        b.eigenvalue
            .partial_cmp(&a.eigenvalue)
            .unwrap()
            .then(a.frequency.cmp(&b.frequency))
            .then(parity_rank(a.parity).cmp(&parity_rank(b.parity)))
    });

    Ok(Spectrum {
        modes,
        null_frequencies,
        max_frequency,
        kappa0,
    })
}

fn parity_rank(p: Parity) -> u8 {
    match p {
        Parity::Constant => 0,
        Parity::Cosine => 1,
        Parity::Sine => 2,
    }
}

/// Value of a mode's eigenfunction at θ: 1, √2·cos(mθ), or √2·sin(mθ).
pub fn eigenfunction_value(mode: &Mode, theta: f64) -> f64 {
    let sqrt2 = std::f64::consts::SQRT_2;
    match mode.parity {
        Parity::Constant => 1.0,
        Parity::Cosine => sqrt2 * (mode.frequency as f64 * theta).cos(),
        Parity::Sine => sqrt2 * (mode.frequency as f64 * theta).sin(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn spec(order: u8, bias: bool) -> KernelSpec {
        KernelSpec::new(order, bias).unwrap()
    }

    #[test]
    fn aliasing_precondition_enforced() {
        assert!(matches!(
            mercer_spectrum(spec(1, false), 512, 1024),
            Err(SpectralError::Aliasing { .. })
        ));
        assert!(matches!(
            mercer_spectrum(spec(1, false), 0, 1024),
            Err(SpectralError::NoFrequencies)
        ));
    }

    #[test]
    fn order1_no_bias_closed_form() {
        // High-resolution grid: the only systematic error is aliasing,
        // ~(m/N)⁴ relative, so N = 32768 leaves ample margin below 1e-10.
        let s = mercer_spectrum(spec(1, false), 64, 32768).unwrap();
        assert_relative_eq!(
            s.eigenvalue_at(0, Parity::Constant).unwrap(),
            4.0 / (PI * PI),
            max_relative = 1e-10
        );
        assert_relative_eq!(
            s.eigenvalue_at(1, Parity::Cosine).unwrap(),
            0.25,
            max_relative = 1e-10
        );
        for m in (2..=40).step_by(2) {
            let exact = 4.0 / (PI * PI * ((m * m - 1) as f64).powi(2));
            assert_relative_eq!(
                s.eigenvalue_at(m as u32, Parity::Cosine).unwrap(),
                exact,
                max_relative = 1e-10
            );
        }
        for m in (3..=63).step_by(2) {
            assert!(s
                .null_frequencies
                .iter()
                .any(|&(f, p)| f == m && p == Parity::Cosine));
        }
    }

    #[test]
    fn mode_ordering_and_trace_bound() {
        for &(o, b) in &[(0u8, false), (0, true), (1, false), (1, true), (2, false), (2, true)] {
            let s = mercer_spectrum(spec(o, b), 128, 1024).unwrap();
            for w in s.modes.windows(2) {
                assert!(w[0].eigenvalue >= w[1].eigenvalue);
                if w[0].eigenvalue == w[1].eigenvalue && w[0].frequency == w[1].frequency {
                    assert!(parity_rank(w[0].parity) < parity_rank(w[1].parity));
                }
            }
            for m in &s.modes {
                assert!(m.eigenvalue > 0.0);
            }
            assert!(s.trace() <= s.kappa0 + 1e-8, "order {o} bias {b}");
        }
    }

    #[test]
    fn null_classes_match_kernel_structure() {
        let cases: [(u8, bool, Option<u32>, Option<u32>); 6] = [
            (0, false, None, Some(2)),
            (0, true, None, None),
            (1, false, Some(3), None),
            (1, true, None, None),
            (2, false, None, Some(4)),
            (2, true, None, None),
        ];
        for (o, b, odd, even) in cases {
            let s = mercer_spectrum(spec(o, b), 512, 4096).unwrap();
            assert_eq!(s.null_class_starts(), (odd, even), "order {o} bias {b}");
            assert!(!s.constant_null());
        }
    }

    #[test]
    fn frozen_leading_eigenvalues() {
        // Quadrature oracle values, frozen; guards the profile formulas.
        let expect = [
            (0u8, false, 0.5, 0.202_642_367_905_557),
            (0, true, 0.693_564_355_519_460, 0.107_975_954_209_067),
            (1, false, 0.405_284_734_569_351, 0.25),
            (1, true, 0.633_361_761_775_351, 0.169_231_164_037_112),
            (2, false, 1.0, 0.720_506_194_789_958),
            (2, true, 1.581_299_171_392_446, 0.620_892_103_550_348),
        ];
        for (o, b, c0, c1) in expect {
            let s = mercer_spectrum(spec(o, b), 64, 32768).unwrap();
            assert_relative_eq!(
                s.eigenvalue_at(0, Parity::Constant).unwrap(),
                c0,
                max_relative = 1e-8
            );
            assert_relative_eq!(
                s.eigenvalue_at(1, Parity::Cosine).unwrap(),
                c1,
                max_relative = 1e-8
            );
        }
    }

    #[test]
    fn eigenfunctions_orthonormal_under_quadrature() {
        let s = mercer_spectrum(spec(1, true), 64, 1024).unwrap();
        let modes = &s.modes[..50.min(s.modes.len())];
        let n = 1024usize;
        for (i, mi) in modes.iter().enumerate() {
            for (j, mj) in modes.iter().enumerate() {
                let mut acc = 0.0;
                for k in 0..n {
                    let t = -PI + 2.0 * PI * k as f64 / n as f64;
                    acc += eigenfunction_value(mi, t) * eigenfunction_value(mj, t);
                }
                acc /= n as f64;
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (acc - expect).abs() < 1e-8,
                    "modes {i},{j}: {acc} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn mercer_reconstruction_bound() {
        for &(o, b) in &[(0u8, false), (1, false), (1, true), (2, true)] {
            let s = mercer_spectrum(spec(o, b), 256, 2048).unwrap();
            let alpha = estimate_alpha(&s, None).unwrap();
            // Tail bound from the fitted power law: Σ_{m>M} 2·C·m^{−α}.
            let m_max = s.max_frequency as f64;
            let c_at_max = s
                .modes
                .iter()
                .filter(|m| m.parity == Parity::Cosine)
                .map(|m| (m.frequency as f64, m.eigenvalue))
                .fold((0.0, 0.0), |best, (f, l)| if f > best.0 { (f, l) } else { best });
            let c_const = c_at_max.1 * c_at_max.0.powf(alpha);
            let tail = 2.0 * c_const * m_max.powf(1.0 - alpha) / (alpha - 1.0);
            let ks = spec(o, b);
            let mut sup: f64 = 0.0;
            for g in 0..1024 {
                let delta = PI * g as f64 / 1023.0;
                let mut recon = 0.0;
                for mode in &s.modes {
                    match mode.parity {
                        Parity::Constant => recon += mode.eigenvalue,
                        Parity::Cosine => {
                            recon += 2.0 * mode.eigenvalue * (mode.frequency as f64 * delta).cos()
                        }
                        Parity::Sine => {} // cos-parity term already counts both
                    }
                }
                sup = sup.max((zonal_profile(ks, delta).unwrap() - recon).abs());
            }
            assert!(sup <= tail + 1e-8, "order {o} bias {b}: sup {sup} tail {tail}");
        }
    }
}
