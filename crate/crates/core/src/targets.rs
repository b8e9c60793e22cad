//! Built-in target functions on S¹ together with their exact Fourier data.
//!
//! Each target's Fourier series is known in closed form, which lets the
//! expansion code compute out-of-span mass and in-span tails analytically
//! instead of relying on truncated quadrature.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// The four families of targets used across the experiment tables.
///
/// All are defined on the canonical angle θ ∈ [−π, π).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BuiltinTarget {
    /// cos 2θ — a single in-span harmonic.
    CosTwoTheta,
    /// θ² — smooth except the periodic seam; full cosine series 4(−1)^m/m².
    ThetaSquared,
    /// (|θ| − π/2)² — even-harmonic cosine series 4/m².
    ShiftedSquare,
    /// Period-π sawtooth: π/2 − θ on [0, π), −π/2 − θ on [−π, 0);
    /// even-harmonic sine series 2/m.
    Sawtooth,
    /// sign(θ) — odd-harmonic sine series 4/(πm).
    Sign,
    /// Triangle wave π/2 − |θ| — odd-harmonic cosine series 4/(πm²).
    Tent,
}

impl BuiltinTarget {
    pub const ALL: [BuiltinTarget; 6] = [
        BuiltinTarget::CosTwoTheta,
        BuiltinTarget::ThetaSquared,
        BuiltinTarget::ShiftedSquare,
        BuiltinTarget::Sawtooth,
        BuiltinTarget::Sign,
        BuiltinTarget::Tent,
    ];

    /// Pointwise value at canonical θ ∈ [−π, π); other inputs are wrapped.
    pub fn eval(&self, theta: f64) -> f64 {
        let t = crate::kernels::AngularPoint::new(theta).theta();
        match self {
            BuiltinTarget::CosTwoTheta => (2.0 * t).cos(),
            BuiltinTarget::ThetaSquared => t * t,
            BuiltinTarget::ShiftedSquare => (t.abs() - PI / 2.0).powi(2),
            BuiltinTarget::Sawtooth => {
                if t >= 0.0 {
                    PI / 2.0 - t
                } else {
                    -PI / 2.0 - t
                }
            }
            BuiltinTarget::Sign => {
                if t >= 0.0 {
                    1.0
                } else {
                    -1.0
                }
            }
            BuiltinTarget::Tent => PI / 2.0 - t.abs(),
        }
    }

    /// Mean under the uniform measure (the frequency-0 Fourier coefficient).
    pub fn mean(&self) -> f64 {
        match self {
            BuiltinTarget::ThetaSquared => PI * PI / 3.0,
            BuiltinTarget::ShiftedSquare => PI * PI / 12.0,
            _ => 0.0,
        }
    }

    /// Cosine coefficient a_m of f(θ) = mean + Σ_m a_m cos mθ + b_m sin mθ.
    pub fn cosine_coeff(&self, m: u32) -> f64 {
        debug_assert!(m >= 1);
        let mf = m as f64;
        match self {
            BuiltinTarget::CosTwoTheta => {
                if m == 2 {
                    1.0
                } else {
                    0.0
                }
            }
            BuiltinTarget::ThetaSquared => {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                4.0 * sign / (mf * mf)
            }
            BuiltinTarget::ShiftedSquare => {
                if m % 2 == 0 {
                    4.0 / (mf * mf)
                } else {
                    0.0
                }
            }
            BuiltinTarget::Tent => {
                if m % 2 == 1 {
                    4.0 / (PI * mf * mf)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Sine coefficient b_m.
    pub fn sine_coeff(&self, m: u32) -> f64 {
        debug_assert!(m >= 1);
        let mf = m as f64;
        match self {
            BuiltinTarget::Sawtooth => {
                if m % 2 == 0 {
                    2.0 / mf
                } else {
                    0.0
                }
            }
            BuiltinTarget::Sign => {
                if m % 2 == 1 {
                    4.0 / (PI * mf)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// Squared L² norm under the uniform measure.
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            BuiltinTarget::CosTwoTheta => 0.5,
            BuiltinTarget::ThetaSquared => PI.powi(4) / 5.0,
            BuiltinTarget::ShiftedSquare => PI.powi(4) / 80.0,
            BuiltinTarget::Sawtooth => PI * PI / 12.0,
            BuiltinTarget::Sign => 1.0,
            BuiltinTarget::Tent => PI * PI / 12.0,
        }
    }

    /// Nominal source exponent β of the coefficient decay (∞ for the single
    /// harmonic).
    pub fn nominal_beta(&self) -> f64 {
        match self {
            BuiltinTarget::CosTwoTheta => f64::INFINITY,
            BuiltinTarget::ThetaSquared | BuiltinTarget::ShiftedSquare | BuiltinTarget::Tent => 2.0,
            BuiltinTarget::Sawtooth | BuiltinTarget::Sign => 1.0,
        }
    }

    /// Σ_{m ≥ start, m ≡ start mod 2} (a_m² + b_m²)/2: the squared mass of
    /// one parity class from `start` upward (closed tail, summed to
    /// convergence with an Euler–Maclaurin remainder).
    pub fn class_mass_sq(&self, start: u32) -> f64 {
        if start < 1 {
            return 0.0;
        }
        // All coefficient families here are c/m or c/m², so the class mass
        // is c²/2 times Σ m^{−2} or Σ m^{−4} over the class.
        let mut total = 0.0;
        let mut m = start;
        let cutoff = start as u64 + 2_000_000;
        while (m as u64) < cutoff {
            let a = if m >= 1 { self.cosine_coeff(m) } else { 0.0 };
            let b = if m >= 1 { self.sine_coeff(m) } else { 0.0 };
            let term = 0.5 * (a * a + b * b);
            total += term;
            m += 2;
        }
        // Remainder for the slowest case (coefficients ~ c/m, terms ~ c²/2m²
        // over every second integer): ∫ correction keeps the absolute error
        // far below the 1e-6·‖f‖² Parseval budget.
        let l = m as f64;
        let a = self.cosine_coeff(m);
        let b = self.sine_coeff(m);
        let lead = 0.5 * (a * a + b * b);
        if lead > 0.0 {
            // terms decay like l^{−p}; estimate p from two consecutive terms
            let a2 = self.cosine_coeff(m + 2);
            let b2 = self.sine_coeff(m + 2);
            let next = 0.5 * (a2 * a2 + b2 * b2);
            if next > 0.0 {
                let p = (lead / next).ln() / ((l + 2.0) / l).ln();
                // step-2 arithmetic: half the density of an integer sum
                total += lead * l / (p - 1.0) / 2.0;
            }
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parseval_closed_forms() {
        // mean² + Σ (a² + b²)/2 over both parity classes must equal ‖f‖².
        for t in BuiltinTarget::ALL {
            let total = t.mean().powi(2) + t.class_mass_sq(1) + t.class_mass_sq(2);
            assert_relative_eq!(total, t.l2_norm_sq(), max_relative = 1e-9);
        }
    }

    #[test]
    fn coefficients_match_quadrature() {
        let n = 1 << 16;
        for t in BuiltinTarget::ALL {
            let mut mean = 0.0;
            for j in 0..n {
                // midpoints avoid sampling exactly on jump discontinuities
                let theta = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
                mean += t.eval(theta);
            }
            mean /= n as f64;
            assert!((mean - t.mean()).abs() < 1e-6, "{t:?} mean");
            for m in [1u32, 2, 3, 4, 5, 8] {
                let (mut am, mut bm) = (0.0, 0.0);
                for j in 0..n {
                    let theta = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
                    am += t.eval(theta) * (m as f64 * theta).cos();
                    bm += t.eval(theta) * (m as f64 * theta).sin();
                }
                am *= 2.0 / n as f64;
                bm *= 2.0 / n as f64;
                assert!(
                    (am - t.cosine_coeff(m)).abs() < 1e-5,
                    "{t:?} a_{m}: {am} vs {}",
                    t.cosine_coeff(m)
                );
                assert!(
                    (bm - t.sine_coeff(m)).abs() < 1e-5,
                    "{t:?} b_{m}: {bm} vs {}",
                    t.sine_coeff(m)
                );
            }
        }
    }

    #[test]
    fn known_class_masses() {
        // Sawtooth lives entirely on even sines: class mass from 2 is ‖f‖².
        assert_relative_eq!(
            BuiltinTarget::Sawtooth.class_mass_sq(2),
            PI * PI / 12.0,
            max_relative = 1e-9
        );
        assert_eq!(BuiltinTarget::Sawtooth.class_mass_sq(1), 0.0);
        // θ² beyond the odd class from 3: Σ_{odd m≥3} (4/m²)²/2 = 8(π⁴/96 − 1).
        assert_relative_eq!(
            BuiltinTarget::ThetaSquared.class_mass_sq(3),
            8.0 * (PI.powi(4) / 96.0 - 1.0),
            max_relative = 1e-9
        );
    }
}
