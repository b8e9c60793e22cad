//! Arc-cosine kernels on the unit circle S¹, represented as zonal profiles
//! κ(Δθ), plus Gram-matrix assembly with a jitter policy for near-singular
//! systems.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("angle {0} outside [0, π]")]
    AngleOutOfRange(f64),
    #[error("kernel order {0} unsupported (expected 0, 1, or 2)")]
    BadOrder(u8),
}

/// Point on S¹, stored as the canonical angle θ ∈ [−π, π).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngularPoint {
    theta: f64,
}

impl AngularPoint {
    /// Wraps any real angle into [−π, π).
    pub fn new(theta: f64) -> Self {
        let mut t = theta.rem_euclid(2.0 * PI);
        if t >= PI {
            t -= 2.0 * PI;
        }
        Self { theta: t }
    }

    #[inline]
    pub fn theta(&self) -> f64 {
        self.theta
    }
}

/// Which arc-cosine kernel: order n ∈ {0,1,2}, with or without the bias
/// construction that shifts the angle through ψ̄ = arccos(½(cos Δθ + 1)).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelSpec {
    order: u8,
    bias: bool,
}

impl KernelSpec {
    pub fn new(order: u8, bias: bool) -> Result<Self, KernelError> {
        if order > 2 {
            return Err(KernelError::BadOrder(order));
        }
        Ok(Self { order, bias })
    }

    #[inline]
    pub fn order(&self) -> u8 {
        self.order
    }

    #[inline]
    pub fn bias(&self) -> bool {
        self.bias
    }

    /// κ(0), the diagonal value of the kernel (1 for orders 0 and 1, 3 for
    /// order 2).
    pub fn kappa0(&self) -> f64 {
        zonal_profile(*self, 0.0).expect("0 is always in range")
    }
}

/// Angle between two points on S¹: arccos of their inner product, in [0, π].
pub fn angle_between(p1: AngularPoint, p2: AngularPoint) -> f64 {
    (p1.theta() - p2.theta()).cos().clamp(-1.0, 1.0).acos()
}

/// Zonal profile κ(Δθ) of the kernel.
///
/// With ψ the (possibly bias-shifted) angle:
/// order 0 → (π−ψ)/π, order 1 → (sin ψ + (π−ψ)cos ψ)/π,
/// order 2 → (3 sin ψ cos ψ + (π−ψ)(1 + 2cos²ψ))/π.
pub fn zonal_profile(spec: KernelSpec, delta: f64) -> Result<f64, KernelError> {
    if !(-1e-12..=PI + 1e-12).contains(&delta) {
        return Err(KernelError::AngleOutOfRange(delta));
    }
    let delta = delta.clamp(0.0, PI);
    let psi = if spec.bias() {
        (0.5 * (delta.cos() + 1.0)).clamp(-1.0, 1.0).acos()
    } else {
        delta
    };
    let value = match spec.order() {
        0 => (PI - psi) / PI,
        1 => (psi.sin() + (PI - psi) * psi.cos()) / PI,
        2 => {
            let (s, c) = psi.sin_cos();
            (3.0 * s * c + (PI - psi) * (1.0 + 2.0 * c * c)) / PI
        }
        _ => unreachable!("KernelSpec validates order"),
    };
    Ok(value)
}

/// Kernel value between two points.
#[inline]
pub fn kernel_value(spec: KernelSpec, p1: AngularPoint, p2: AngularPoint) -> f64 {
    zonal_profile(spec, angle_between(p1, p2)).expect("angle_between is in range")
}

/// Gram matrix K with a record of any diagonal jitter applied downstream.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    pub entries: DMatrix<f64>,
    pub jitter_used: f64,
}

/// Builds the Gram matrix K_ij = κ(Δθ_ij). The matrix itself carries no
/// jitter; factorization-time jitter is recorded by the solver (see
/// `gpr::fit`), starting from `jitter_floor(spec)`.
pub fn gram(spec: KernelSpec, points: &[AngularPoint]) -> GramMatrix {
    let n = points.len();
    let mut entries = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel_value(spec, points[i], points[j]);
            entries[(i, j)] = v;
            entries[(j, i)] = v;
        }
    }
    GramMatrix {
        entries,
        jitter_used: 0.0,
    }
}

/// Initial diagonal jitter for a failed factorization: 10⁻¹⁰·κ(0),
/// escalated ×10 by the solver up to 10⁻⁶·κ(0).
pub fn jitter_floor(spec: KernelSpec) -> f64 {
    1e-10 * spec.kappa0()
}

/// Ceiling of the jitter escalation.
pub fn jitter_ceiling(spec: KernelSpec) -> f64 {
    1e-6 * spec.kappa0()
}
