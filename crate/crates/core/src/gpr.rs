//! Exact Gaussian-process regression on S¹ and the per-dataset
//! learning-curve functionals: normalized stochastic complexity, Bayesian
//! generalization error, excess MSE, and the KRR equivalence.
//!
//! Every solve goes through one Cholesky factorization of K + σ²I; there is
//! no explicit matrix inversion anywhere (triangular solves only).

use crate::kernels::{
    gram, jitter_ceiling, jitter_floor, kernel_value, AngularPoint, KernelSpec,
};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GprError {
    #[error("Cholesky factorization failed even after jitter escalation to {0:.3e}")]
    Singular(f64),
    #[error("parameter out of domain: {0}")]
    Domain(String),
}

/// A training set: inputs on S¹, observed outputs, and the generating noise
/// level. The generating target is passed separately to the functionals that
/// need it.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub points: Vec<AngularPoint>,
    pub y: DVector<f64>,
    pub sigma_true_sq: f64,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.points.len()
    }
}

/// Trained GP: kernel, inputs, Cholesky factor of (K + σ²I + jitter), and
/// dual weights (K + σ²I)⁻¹y. Immutable after `fit`; safe to share across
/// threads for prediction.
pub struct PosteriorState {
    pub spec: KernelSpec,
    pub points: Vec<AngularPoint>,
    chol: Cholesky<f64, Dyn>,
    dual: DVector<f64>,
    pub sigma_model_sq: f64,
    pub jitter_used: f64,
}

/// Cholesky with the diagonal-jitter escalation policy: start at
/// 10⁻¹⁰·κ(0), multiply by 10 until 10⁻⁶·κ(0), then fail.
fn cholesky_with_jitter(
    spec: KernelSpec,
    a: &DMatrix<f64>,
) -> Result<(Cholesky<f64, Dyn>, f64), GprError> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Ok((c, 0.0));
    }
    let mut jitter = jitter_floor(spec);
    let ceiling = jitter_ceiling(spec);
    while jitter <= ceiling * (1.0 + 1e-12) {
        let mut aj = a.clone();
        for i in 0..aj.nrows() {
            aj[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(aj) {
            return Ok((c, jitter));
        }
        jitter *= 10.0;
    }
    Err(GprError::Singular(ceiling))
}

/// Fits the exact GP posterior.
pub fn fit(
    spec: KernelSpec,
    points: &[AngularPoint],
    y: &DVector<f64>,
    sigma_model_sq: f64,
) -> Result<PosteriorState, GprError> {
    if points.is_empty() || points.len() != y.len() {
        return Err(GprError::Domain(format!(
            "need n ≥ 1 points matching y (got {} points, {} outputs)",
            points.len(),
            y.len()
        )));
    }
    if sigma_model_sq < 0.0 {
        return Err(GprError::Domain("sigma_model² must be ≥ 0".into()));
    }
    let mut a = gram(spec, points).entries;
    for i in 0..a.nrows() {
        a[(i, i)] += sigma_model_sq;
    }
    let (chol, jitter_used) = cholesky_with_jitter(spec, &a)?;
    let dual = chol.solve(y);
    Ok(PosteriorState {
        spec,
        points: points.to_vec(),
        chol,
        dual,
        sigma_model_sq,
        jitter_used,
    })
}

impl PosteriorState {
    fn k_vector(&self, x: AngularPoint) -> DVector<f64> {
        DVector::from_iterator(
            self.points.len(),
            self.points.iter().map(|&p| kernel_value(self.spec, x, p)),
        )
    }

    /// Posterior mean m̄(x) = k(x,X)·(K+σ²I)⁻¹y.
    pub fn posterior_mean(&self, x: AngularPoint) -> f64 {
        self.k_vector(x).dot(&self.dual)
    }

    /// Posterior variance k̄(x,x) = κ(0) − k(x,X)(K+σ²I)⁻¹k(X,x), clamped
    /// at zero against roundoff.
    pub fn posterior_var(&self, x: AngularPoint) -> f64 {
        let k = self.k_vector(x);
        let v = self.spec.kappa0() - k.dot(&self.chol.solve(&k));
        v.max(0.0)
    }

    /// log det(K + σ²I + jitter) from the Cholesky diagonal.
    pub fn log_det(&self) -> f64 {
        self.chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum()
    }

    /// yᵀ(K+σ²I)⁻¹y for the stored outputs.
    fn y_quadratic(&self, y: &DVector<f64>) -> f64 {
        y.dot(&self.chol.solve(y))
    }
}

/// KL divergence between N(mean1, var1) and N(mean2, var2).
pub fn kl_gaussian(mean1: f64, var1: f64, mean2: f64, var2: f64) -> Result<f64, GprError> {
    if var1 <= 0.0 || var2 <= 0.0 {
        return Err(GprError::Domain(format!(
            "kl_gaussian needs positive variances (got {var1}, {var2})"
        )));
    }
    let d = mean1 - mean2;
    Ok(0.5 * ((var2 / var1).ln() + (var1 + d * d) / var2 - 1.0))
}

/// Normalized stochastic complexity of one dataset:
/// F⁰ = ½ log det(I+K/σ²) + (1/2σ²)yᵀ(I+K/σ²)⁻¹y − (1/2σ²)‖y−f‖².
///
/// Uses (I+K/σ²) = (K+σ²I)/σ², so the fitted state's Cholesky serves both
/// the determinant and the quadratic form. Requires σ_model = σ_true = σ > 0.
pub fn nsc(state: &PosteriorState, y: &DVector<f64>, f_values: &DVector<f64>) -> Result<f64, GprError> {
    let sigma_sq = state.sigma_model_sq;
    if sigma_sq <= 0.0 {
        return Err(GprError::Domain("nsc needs σ² > 0".into()));
    }
    let n = state.points.len() as f64;
    let log_det = state.log_det() - n * sigma_sq.ln();
    let quad = state.y_quadratic(y); // yᵀ(K+σ²I)⁻¹y = (1/σ²)yᵀ(I+K/σ²)⁻¹y
    let resid = (y - f_values).norm_squared();
    Ok(0.5 * log_det + 0.5 * quad - resid / (2.0 * sigma_sq))
}

/// Expected NSC over the noise:
/// E_ε F⁰ = ½ log det(I+K/σ²) − ½ tr(I − (I+K/σ²)⁻¹) + (1/2σ²)fᵀ(I+K/σ²)⁻¹f,
/// evaluated directly from a Gram matrix.
pub fn expected_nsc_gram(
    k: &DMatrix<f64>,
    f_values: &DVector<f64>,
    sigma_sq: f64,
) -> Result<f64, GprError> {
    if sigma_sq <= 0.0 {
        return Err(GprError::Domain("expected_nsc needs σ² > 0".into()));
    }
    let n = k.nrows();
    let mut a = k.clone();
    for i in 0..n {
        a[(i, i)] += sigma_sq;
    }
    let chol = Cholesky::new(a).ok_or(GprError::Singular(0.0))?;
    let log_det: f64 =
        chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>() - n as f64 * sigma_sq.ln();
    // tr((K+σ²I)⁻¹) = ‖L⁻¹‖²_F via a triangular solve of the identity
    let l_inv = chol
        .l_dirty()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .expect("triangular solve of a Cholesky factor");
    let mut trace_inv = 0.0;
    for i in 0..n {
        for j in 0..=i {
            trace_inv += l_inv[(i, j)] * l_inv[(i, j)];
        }
    }
    let trace_term = n as f64 - sigma_sq * trace_inv; // tr(I − (I+K/σ²)⁻¹)
    let quad = f_values.dot(&chol.solve(f_values)); // (1/σ²)fᵀ(I+K/σ²)⁻¹f
    Ok(0.5 * log_det - 0.5 * trace_term + 0.5 * quad)
}

/// Expected NSC for a kernel and point set.
pub fn expected_nsc(
    spec: KernelSpec,
    points: &[AngularPoint],
    f_values: &DVector<f64>,
    sigma_sq: f64,
) -> Result<f64, GprError> {
    expected_nsc_gram(&gram(spec, points).entries, f_values, sigma_sq)
}

/// Bayesian generalization error: mean KL from the true conditional
/// N(f(θ), σ_true²) to the predictive N(m̄(θ), k̄(θ) [+ σ_model²]) over a
/// uniform θ-quadrature grid.
///
/// `include_noise_in_predictive` defaults on in callers: the predictive
/// density integrates observation noise, and with it the test-point
/// increment identity for F⁰ holds exactly. Off reproduces the literal
/// variance-only protocol.
pub fn bayes_gen_error<F: Fn(f64) -> f64>(
    state: &PosteriorState,
    target: F,
    sigma_true_sq: f64,
    quad_nodes: usize,
    include_noise_in_predictive: bool,
) -> Result<f64, GprError> {
    if sigma_true_sq <= 0.0 {
        return Err(GprError::Domain("bayes_gen_error needs σ_true² > 0".into()));
    }
    let mut acc = 0.0;
    for j in 0..quad_nodes {
        let theta = -PI + 2.0 * PI * j as f64 / quad_nodes as f64;
        let x = AngularPoint::new(theta);
        let mut v = state.posterior_var(x);
        if include_noise_in_predictive {
            v += state.sigma_model_sq;
        }
        acc += kl_gaussian(target(theta), sigma_true_sq, state.posterior_mean(x), v)?;
    }
    Ok(acc / quad_nodes as f64)
}

/// Excess mean squared error: quadrature average of (m̄(θ) − f(θ))².
pub fn excess_mse<F: Fn(f64) -> f64>(state: &PosteriorState, target: F, quad_nodes: usize) -> f64 {
    let mut acc = 0.0;
    for j in 0..quad_nodes {
        let theta = -PI + 2.0 * PI * j as f64 / quad_nodes as f64;
        let d = state.posterior_mean(AngularPoint::new(theta)) - target(theta);
        acc += d * d;
    }
    acc / quad_nodes as f64
}

/// Kernel ridge regression prediction k(x,X)(K + nλI)⁻¹y. Coincides with
/// the GP posterior mean when σ_model² = nλ.
pub fn krr_predict(
    spec: KernelSpec,
    points: &[AngularPoint],
    y: &DVector<f64>,
    lambda_reg: f64,
    x: AngularPoint,
) -> Result<f64, GprError> {
    if lambda_reg <= 0.0 {
        return Err(GprError::Domain("krr needs λ > 0".into()));
    }
    let n = points.len();
    let mut a = gram(spec, points).entries;
    let ridge = n as f64 * lambda_reg;
    for i in 0..n {
        a[(i, i)] += ridge;
    }
    let (chol, _) = cholesky_with_jitter(spec, &a)?;
    let alpha = chol.solve(y);
    let k = DVector::from_iterator(n, points.iter().map(|&p| kernel_value(spec, x, p)));
    Ok(k.dot(&alpha))
}

/// Both sides of the test-point increment identity for one dataset:
/// lhs = G(D_n) (predictive variance including σ²), rhs =
/// E_{x',y'}[F⁰(D_{n+1})] − F⁰(D_n) with the x'-average over the quadrature
/// grid and the y'-average taken analytically (F⁰ is quadratic in y').
///
/// The right side builds and factorizes the full (n+1)-point system from
/// scratch for every test point — deliberately not a rank-one update of the
/// left side's factorization, so the two routes are independent.
pub fn gen_error_identity_check<F: Fn(f64) -> f64>(
    spec: KernelSpec,
    dataset: &Dataset,
    target: F,
    sigma_sq: f64,
    quad_nodes: usize,
) -> Result<(f64, f64), GprError> {
    let n = dataset.n();
    let f_values = DVector::from_iterator(n, dataset.points.iter().map(|p| target(p.theta())));
    let state = fit(spec, &dataset.points, &dataset.y, sigma_sq)?;
    let lhs = bayes_gen_error(&state, &target, sigma_sq, quad_nodes, true)?;

    let f0_n = nsc(&state, &dataset.y, &f_values)?;
    let resid_sq = (&dataset.y - &f_values).norm_squared();
    let mut acc = 0.0;
    for j in 0..quad_nodes {
        let theta = -PI + 2.0 * PI * j as f64 / quad_nodes as f64;
        let mut pts = dataset.points.clone();
        pts.push(AngularPoint::new(theta));
        let fj = target(theta);
        let mut a = gram(spec, &pts).entries;
        for i in 0..=n {
            a[(i, i)] += sigma_sq;
        }
        let (chol, _) = cholesky_with_jitter(spec, &a)?;
        let log_det: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum::<f64>()
            - (n as f64 + 1.0) * sigma_sq.ln();
        // ŷ = [y; f(x')]: E_{y'}[y₊ᵀA⁻¹y₊] = ŷᵀA⁻¹ŷ + σ²(A⁻¹)_{n+1,n+1}
        let mut y_hat = DVector::zeros(n + 1);
        y_hat.rows_mut(0, n).copy_from(&dataset.y);
        y_hat[n] = fj;
        let quad = y_hat.dot(&chol.solve(&y_hat));
        let mut e_last = DVector::zeros(n + 1);
        e_last[n] = 1.0;
        let w = chol
            .l_dirty()
            .solve_lower_triangular(&e_last)
            .expect("triangular solve of a Cholesky factor");
        let a_inv_last = w.norm_squared(); // (A⁻¹)_{n+1,n+1}
        // E_{y'}‖y₊ − f₊‖² = ‖y − f‖² + σ²
        let e_f0 = 0.5 * log_det + 0.5 * (quad + sigma_sq * a_inv_last)
            - (resid_sq + sigma_sq) / (2.0 * sigma_sq);
        acc += e_f0 - f0_n;
    }
    Ok((lhs, acc / quad_nodes as f64))
}

/// Noise-expected version of the same identity, fully deterministic:
/// lhs = E_ε[G(D_n)] with the ε-expectation of the posterior-mean error
/// taken analytically; rhs = E_x'[E_ε F⁰(D_{n+1}) − E_ε F⁰(D_n)] via
/// expected-NSC differences.
pub fn expected_identity_check<F: Fn(f64) -> f64>(
    spec: KernelSpec,
    points: &[AngularPoint],
    target: F,
    sigma_sq: f64,
    quad_nodes: usize,
) -> Result<(f64, f64), GprError> {
    let n = points.len();
    let f_values = DVector::from_iterator(n, points.iter().map(|p| target(p.theta())));
    let mut a = gram(spec, points).entries;
    for i in 0..n {
        a[(i, i)] += sigma_sq;
    }
    let (chol, _) = cholesky_with_jitter(spec, &a)?;
    let f_dual = chol.solve(&f_values);

    let mut lhs = 0.0;
    for j in 0..quad_nodes {
        let theta = -PI + 2.0 * PI * j as f64 / quad_nodes as f64;
        let x = AngularPoint::new(theta);
        let k = DVector::from_iterator(n, points.iter().map(|&p| kernel_value(spec, x, p)));
        let w = chol.solve(&k);
        let fj = target(theta);
        let kbar = (spec.kappa0() - k.dot(&w)).max(0.0);
        let v = kbar + sigma_sq;
        // E_ε (f_j − m̄_j)² = (f_j − w_jᵀf)² + σ²‖w_j‖² since m̄_j = w_jᵀ(f+ε)
        let bias = fj - k.dot(&f_dual);
        let e_sq = bias * bias + sigma_sq * w.norm_squared();
        lhs += 0.5 * ((v / sigma_sq).ln() + (sigma_sq + e_sq) / v - 1.0);
    }
    lhs /= quad_nodes as f64;

    let base = expected_nsc(spec, points, &f_values, sigma_sq)?;
    let mut rhs = 0.0;
    for j in 0..quad_nodes {
        let theta = -PI + 2.0 * PI * j as f64 / quad_nodes as f64;
        let mut pts = points.to_vec();
        pts.push(AngularPoint::new(theta));
        let mut f_plus = DVector::zeros(n + 1);
        f_plus.rows_mut(0, n).copy_from(&f_values);
        f_plus[n] = target(theta);
        rhs += expected_nsc(spec, &pts, &f_plus, sigma_sq)? - base;
    }
    rhs /= quad_nodes as f64;
    Ok((lhs, rhs))
}
