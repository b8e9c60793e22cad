//! Small numerical building blocks shared across the crate: compensated
//! summation, exact product splitting, periodic trapezoid quadrature, and
//! log-log least squares.
//!
//! The quadrature path is precision-critical: Fourier coefficients of smooth
//! zonal profiles decay fast, and the smallest ones we certify are ~1e-7 with
//! a 1e-10 relative tolerance. A naive f64 accumulation leaves ~1e-16 of
//! absolute noise, which is not good enough, so products are split exactly
//! with `mul_add` and accumulated with Neumaier's compensated sum.

/// Neumaier (improved Kahan) compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Exact product: returns (hi, lo) with hi + lo == a * b exactly.
#[inline]
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let hi = a * b;
    let lo = a.mul_add(b, -hi);
    (hi, lo)
}

/// Sum of products Σ aᵢ·bᵢ with compensated accumulation of both the rounded
/// products and their exact residuals.
pub fn dot_compensated(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = CompensatedSum::new();
    for (&x, &y) in a.iter().zip(b.iter()) {
        let (hi, lo) = two_prod(x, y);
        acc.add(hi);
        acc.add(lo);
    }
    acc.value()
}

/// Table of cos(2πk/N) for k in 0..N, shared by all Fourier coefficients of
/// one quadrature run. Arguments are reduced exactly in integer arithmetic,
/// so cos(m·u_j) never suffers argument-reduction error.
pub struct CosTable {
    values: Vec<f64>,
}

impl CosTable {
    pub fn new(n: usize) -> Self {
        let values = (0..n)
            .map(|k| (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos())
            .collect();
        Self { values }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// cos(2π·j·m/N) via exact index reduction.
    #[inline]
    pub fn cos_mj(&self, m: usize, j: usize) -> f64 {
        let n = self.values.len();
        self.values[(m * j) % n]
    }
}

/// Periodic-grid Fourier cosine coefficient of samples g(2πj/N):
/// (1/N)·Σ_j g_j·cos(2π m j / N). For m = 0 this is the plain average.
///
/// On a uniform periodic grid the trapezoid rule is exact up to aliasing,
/// so the only systematic error is the Σ_k c_{m±kN} tail of the true series.
pub fn periodic_cosine_coeff(samples: &[f64], m: usize, table: &CosTable) -> f64 {
    let n = samples.len();
    debug_assert_eq!(n, table.len());
    let mut acc = CompensatedSum::new();
    for (j, &g) in samples.iter().enumerate() {
        let (hi, lo) = two_prod(g, table.cos_mj(m, j));
        acc.add(hi);
        acc.add(lo);
    }
    acc.value() / n as f64
}

/// Same grid, sine coefficient: (1/N)·Σ_j g_j·sin(2π m j / N).
pub fn periodic_sine_coeff(samples: &[f64], m: usize, table: &CosTable) -> f64 {
    let n = samples.len();
    debug_assert_eq!(n, table.len());
    // sin x = cos(x − π/2); shift the index by N/4 when divisible, else fall
    // back to direct evaluation (quadrature grids here are powers of two).
    let mut acc = CompensatedSum::new();
    if n % 4 == 0 {
        let quarter = n / 4;
        for (j, &g) in samples.iter().enumerate() {
            let idx = (m * j) % n;
            let c = table.cos_mj(1, (idx + n - quarter) % n);
            let (hi, lo) = two_prod(g, c);
            acc.add(hi);
            acc.add(lo);
        }
    } else {
        for (j, &g) in samples.iter().enumerate() {
            let s = (2.0 * std::f64::consts::PI * (m * j % n) as f64 / n as f64).sin();
            let (hi, lo) = two_prod(g, s);
            acc.add(hi);
            acc.add(lo);
        }
    }
    acc.value() / n as f64
}

/// Ordinary least squares fit y ≈ a + b·x. Returns (intercept, slope,
/// stderr of slope, R²). R² is 1.0 for a perfect fit including the
/// degenerate two-point case.
pub fn ols(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2, "ols needs at least two points");
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|&x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(&x, &y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|&y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let stderr = if n > 2 {
        (ss_res / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    (intercept, slope, stderr, r2)
}

/// Mean and sample standard deviation (ddof = 1; zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1);
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, var.sqrt())
}
