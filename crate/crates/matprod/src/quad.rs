//! Panel quadrature: fixed-order Gauss-Legendre panels with dyadic
//! refinement until successive estimates agree to the requested relative
//! tolerance.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::sync::OnceLock;

/// Nodes and weights of an `order`-point Gauss-Legendre rule on [-1, 1],
/// computed by Newton iteration on the Legendre polynomial.
fn legendre_rule(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        // Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P'_n(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Cached 16-point rule used by every panel integrator in the crate.
pub fn panel_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| legendre_rule(16))
}

/// Cached rule of a given order (orders used: 12, 16, 24, 32, 48).
pub fn rule_of_order(order: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static RULES: OnceLock<std::sync::Mutex<std::collections::HashMap<usize, &'static (Vec<f64>, Vec<f64>)>>> =
        OnceLock::new();
    let map = RULES.get_or_init(|| std::sync::Mutex::new(std::collections::HashMap::new()));
    let mut guard = map.lock().unwrap();
    *guard
        .entry(order)
        .or_insert_with(|| Box::leak(Box::new(legendre_rule(order))))
}

/// Integrate `f` over [a, b] with a single fixed-order panel.
pub fn panel_complex<F: FnMut(f64) -> Complex64>(a: f64, b: f64, f: &mut F) -> Complex64 {
    let (nodes, weights) = panel_rule();
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = Complex64::new(0.0, 0.0);
    for (x, w) in nodes.iter().zip(weights) {
        acc += *w * f(mid + half * x);
    }
    half * acc
}

/// Adaptive dyadic refinement: the panel count doubles until two
/// successive composite estimates agree to relative `tol`.
pub fn adaptive_complex<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    tol: f64,
    mut f: F,
) -> Result<Complex64> {
    adaptive_complex_with(a, b, tol, 3, 15, &mut f)
}

pub fn adaptive_complex_with<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    tol: f64,
    min_level: u32,
    max_level: u32,
    f: &mut F,
) -> Result<Complex64> {
    adaptive_complex_floor(a, b, tol, f64::MIN_POSITIVE, min_level, max_level, f)
}

/// Like [`adaptive_complex_with`], but convergence also accepts an
/// absolute difference below `abs_floor`. Needed when the integral itself
/// can vanish (oscillatory integrands near a sign change) and a purely
/// relative criterion could never be met.
pub fn adaptive_complex_floor<F: FnMut(f64) -> Complex64>(
    a: f64,
    b: f64,
    tol: f64,
    abs_floor: f64,
    min_level: u32,
    max_level: u32,
    f: &mut F,
) -> Result<Complex64> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::QuadratureFailure(format!("bad interval [{a}, {b}]")));
    }
    let mut prev: Option<Complex64> = None;
    for level in min_level..=max_level {
        let panels = 1usize << level;
        let h = (b - a) / panels as f64;
        let mut total = Complex64::new(0.0, 0.0);
        for i in 0..panels {
            let lo = a + h * i as f64;
            total += panel_complex(lo, lo + h, f);
        }
        if let Some(p) = prev {
            let diff = (total - p).norm();
            if diff <= tol * total.norm() + abs_floor {
                return Ok(total);
            }
        }
        prev = Some(total);
    }
    Err(Error::NonConvergent(format!(
        "dyadic refinement stalled on [{a}, {b}] at tol {tol}"
    )))
}

/// Real-valued convenience wrapper.
pub fn adaptive_real<F: FnMut(f64) -> f64>(a: f64, b: f64, tol: f64, mut f: F) -> Result<f64> {
    adaptive_complex(a, b, tol, |x| Complex64::new(f(x), 0.0)).map(|v| v.re)
}

/// Cumulative distribution table of a one-dimensional density, built by
/// per-panel Gauss-Legendre integration and evaluated by monotone linear
/// interpolation. Cheap to query at many points, which is what the
/// Kolmogorov-Smirnov comparisons need.
#[derive(Debug, Clone)]
pub struct CdfTable {
    xs: Vec<f64>,
    cdf: Vec<f64>,
    total: f64,
}

impl CdfTable {
    /// Tabulate `density` on [lo, hi] split into `panels` sub-intervals,
    /// spaced logarithmically when `log_spacing` is set (requires lo > 0).
    pub fn build<F: FnMut(f64) -> f64>(
        lo: f64,
        hi: f64,
        panels: usize,
        log_spacing: bool,
        mut density: F,
    ) -> Result<Self> {
        if !(lo < hi) || panels < 2 {
            return Err(Error::QuadratureFailure("bad cdf table domain".into()));
        }
        let mut xs = Vec::with_capacity(panels + 1);
        for i in 0..=panels {
            let t = i as f64 / panels as f64;
            let x = if log_spacing {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            };
            xs.push(x);
        }
        let mut cdf = vec![0.0; panels + 1];
        let mut f = |x: f64| Complex64::new(density(x), 0.0);
        for i in 0..panels {
            let inc = panel_complex(xs[i], xs[i + 1], &mut f).re;
            cdf[i + 1] = cdf[i] + inc.max(0.0);
        }
        let total = cdf[panels];
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::QuadratureFailure("cdf table has no mass".into()));
        }
        Ok(Self { xs, cdf, total })
    }

    /// Total mass before normalization (useful to check ≈ 1).
    pub fn mass(&self) -> f64 {
        self.total
    }

    /// Normalized cdf value at `x`.
    pub fn eval(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return 0.0;
        }
        if x >= *self.xs.last().unwrap() {
            return 1.0;
        }
        let mut lo = 0;
        let mut hi = self.xs.len() - 1;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.xs[mid] <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = (x - self.xs[lo]) / (self.xs[hi] - self.xs[lo]);
        (self.cdf[lo] + t * (self.cdf[hi] - self.cdf[lo])) / self.total
    }
}
