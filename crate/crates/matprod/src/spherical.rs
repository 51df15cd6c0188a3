//! Spherical functions on GL(n, ℂ) and spherical transforms of polynomial
//! ensembles, with a direct-quadrature oracle for the symbolic formulas.

use crate::densities::{jpdf_sv, normalization_sv};
use crate::ensembles::{Ensemble, Kind};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;

/// The shift vector ρ′ with ρ′_j = (2j + n − 1)/2, j = 1..n.
pub fn rho_prime(n: usize) -> Vec<f64> {
    (1..=n).map(|j| (2 * j + n - 1) as f64 / 2.0).collect()
}

/// A spherical-transform argument together with its ambient data.
#[derive(Debug, Clone)]
pub struct SphericalPoint {
    pub n: usize,
    pub s: Vec<Complex64>,
    pub rho: Vec<f64>,
    /// Pairwise distinctness of s (the Vandermonde in the denominator).
    pub distinct: bool,
}

impl SphericalPoint {
    pub fn new(s: Vec<Complex64>) -> Self {
        let n = s.len();
        let mut distinct = true;
        for j in 0..n {
            for k in (j + 1)..n {
                if (s[k] - s[j]).norm() < 1e-12 {
                    distinct = false;
                }
            }
        }
        SphericalPoint {
            n,
            s,
            rho: rho_prime(n),
            distinct,
        }
    }

    /// ρ′ itself as a complex vector, the normalization point S(ρ′) = 1.
    pub fn at_rho(n: usize) -> Self {
        Self::new(rho_prime(n).into_iter().map(|r| Complex64::new(r, 0.0)).collect())
    }
}

fn vandermonde_complex(v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for j in 0..v.len() {
        for k in (j + 1)..v.len() {
            acc *= v[k] - v[j];
        }
    }
    acc
}

fn vandermonde_real(v: &[f64]) -> f64 {
    let mut acc = 1.0;
    for j in 0..v.len() {
        for k in (j + 1)..v.len() {
            acc *= v[k] - v[j];
        }
    }
    acc
}

/// Gelfand-Naimark spherical function φ_s(g) evaluated from the squared
/// singular values λ = λ(g*g):
///
/// ```text
///   φ_s(g) = Δ_n(ρ′)/Δ_n(s) · det[λ_j^{s_k + (n−1)/2}] / Δ_n(λ)
/// ```
///
/// Scalar matrices take the exact homogeneity path φ_s(c·1) = c^{2Σs_k};
/// nearly-degenerate spectra are Richardson-extrapolated through a
/// deterministic relative perturbation.
pub fn spherical_function(s: &[Complex64], lambda: &[f64]) -> Result<Complex64> {
    let n = s.len();
    if lambda.len() != n {
        return Err(Error::DimensionMismatch(lambda.len(), n));
    }
    if let Some(bad) = lambda.iter().find(|l| !(**l > 0.0)) {
        return Err(Error::DegenerateSpectrum(format!(
            "squared singular values must be positive, got {bad}"
        )));
    }
    if n == 1 {
        return Ok((s[0] * lambda[0].ln()).exp());
    }
    let max_l = lambda.iter().cloned().fold(f64::MIN, f64::max);
    let mut min_gap = f64::INFINITY;
    for j in 0..n {
        for k in (j + 1)..n {
            min_gap = min_gap.min((lambda[k] - lambda[j]).abs());
        }
    }
    if min_gap == 0.0 && lambda.iter().all(|l| *l == lambda[0]) {
        // Scalar matrix: exact homogeneity.
        let sum: Complex64 = s.iter().sum();
        return Ok((sum * lambda[0].ln()).exp());
    }
    if min_gap < 1e-9 * max_l {
        // Confluent spectrum: deterministic relative perturbation,
        // extrapolated over two sizes to cancel the leading error.
        log::warn!(
            "spherical_function: near-degenerate spectrum (gap {min_gap:.3e}); \
             using perturbation with Richardson extrapolation"
        );
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|a, b| lambda[*a].partial_cmp(&lambda[*b]).unwrap());
        let perturbed = |eps: f64| -> Result<Complex64> {
            let mut lp = lambda.to_vec();
            for (rank, idx) in order.iter().enumerate() {
                lp[*idx] *= 1.0 + eps * (rank as f64 + 1.0);
            }
            spherical_core(s, &lp)
        };
        let f1 = perturbed(1e-6)?;
        let f2 = perturbed(5e-7)?;
        return Ok(2.0 * f2 - f1);
    }
    spherical_core(s, lambda)
}

fn spherical_core(s: &[Complex64], lambda: &[f64]) -> Result<Complex64> {
    let n = s.len();
    let ds = vandermonde_complex(s);
    if ds.norm() < 1e-280 {
        return Err(Error::DegenerateParameter(
            "spherical parameter s has (nearly) coinciding components".into(),
        ));
    }
    let drho = vandermonde_real(&rho_prime(n));
    let shift = (n as f64 - 1.0) / 2.0;
    // Row-scaled determinant in log space: exponents s_k + (n−1)/2 can be
    // large, so factor exp(r_j) out of row j before the LU pass.
    let logs: Vec<f64> = lambda.iter().map(|l| l.ln()).collect();
    let mut row_scale = vec![0.0; n];
    let mut m = DMatrix::<Complex64>::zeros(n, n);
    for j in 0..n {
        let mut r = f64::MIN;
        for k in 0..n {
            r = r.max(((s[k] + shift) * logs[j]).re);
        }
        row_scale[j] = r;
        for k in 0..n {
            m[(j, k)] = ((s[k] + shift) * logs[j] - Complex64::new(r, 0.0)).exp();
        }
    }
    let det = m.lu().determinant();
    // Δ_n(λ) in log space with sign tracking.
    let mut log_dl = 0.0;
    let mut sign = 1.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let d = lambda[k] - lambda[j];
            log_dl += d.abs().ln();
            if d < 0.0 {
                sign = -sign;
            }
        }
    }
    let log_total = row_scale.iter().sum::<f64>() - log_dl;
    Ok(Complex64::new(drho * sign, 0.0) / ds * det * log_total.exp())
}

/// Spherical transform of a polynomial ensemble at the point s.
///
/// Derivative type factorizes into Π_k Mω(s_k − (n−1)/2)/Mω(k); general
/// ensembles use the determinant of Mellin transforms over Δ_n(s).
pub fn spherical_transform(ens: &Ensemble, s: &[Complex64]) -> Result<Complex64> {
    let n = ens.n();
    if s.len() != n {
        return Err(Error::DimensionMismatch(s.len(), n));
    }
    let shift = (n as f64 - 1.0) / 2.0;
    match ens.kind() {
        Kind::DerivativeType { symbol, .. } => {
            let mut acc = Complex64::new(1.0, 0.0);
            for (k, sk) in s.iter().enumerate() {
                let num = symbol.eval(sk - Complex64::new(shift, 0.0))?;
                let den = symbol.eval_real((k + 1) as f64)?;
                acc *= num / den;
            }
            Ok(acc)
        }
        Kind::General { .. } => {
            let ds = vandermonde_complex(s);
            if ds.norm() < 1e-280 {
                return Err(Error::DegenerateParameter(
                    "general spherical transform needs pairwise distinct s".into(),
                ));
            }
            let mut m = DMatrix::<Complex64>::zeros(n, n);
            for j in 0..n {
                for (k, sk) in s.iter().enumerate() {
                    m[(j, k)] = ens.mellin_weight(j, sk - Complex64::new(shift, 0.0))?;
                }
            }
            let det = m.lu().determinant();
            let c = normalization_sv(ens)?;
            let factorials: f64 = (0..=n).map(|j| (1..=j).map(|i| i as f64).product::<f64>()).product();
            Ok(Complex64::new(c * factorials, 0.0) * det / ds)
        }
    }
}

/// Quadrature options for the spherical-transform oracle.
#[derive(Debug, Clone, Copy)]
pub struct SphericalQuad {
    /// Upper integration bound per squared-singular-value axis.
    pub upper: f64,
    /// Dyadic panel levels toward zero.
    pub levels: u32,
    /// Gauss-Legendre order per panel (the convergence check repeats the
    /// integral at a lower order).
    pub order: usize,
    pub tol: f64,
}

impl Default for SphericalQuad {
    fn default() -> Self {
        SphericalQuad {
            upper: 60.0,
            levels: 18,
            order: 16,
            tol: 1e-4,
        }
    }
}

/// Direct quadrature of ∫ f_SV(a) φ_s(√a) (det a)^{−n} da over (0, ∞)^n —
/// the spherical transform before any determinantal identity is applied.
/// Kept independent of the symbolic route so it can falsify it. n ≤ 3.
pub fn spherical_transform_numeric(
    ens: &Ensemble,
    s: &[Complex64],
    opts: &SphericalQuad,
) -> Result<Complex64> {
    let n = ens.n();
    if s.len() != n {
        return Err(Error::DimensionMismatch(s.len(), n));
    }
    if n > 3 {
        return Err(Error::Unsupported(
            "numeric spherical transform is restricted to n ≤ 3".into(),
        ));
    }
    let coarse = integrate_spherical(ens, s, opts.upper, opts.levels, opts.order.saturating_sub(4))?;
    let fine = integrate_spherical(ens, s, opts.upper, opts.levels, opts.order)?;
    let diff = (fine - coarse).norm();
    if diff > opts.tol * fine.norm().max(1e-12) {
        return Err(Error::NonConvergent(format!(
            "order refinement changed the estimate by {diff:.3e}"
        )));
    }
    Ok(fine)
}

fn integrate_spherical(
    ens: &Ensemble,
    s: &[Complex64],
    upper: f64,
    levels: u32,
    order: usize,
) -> Result<Complex64> {
    let n = ens.n();
    // Slightly different orders per axis, so tensor nodes never collide and
    // the Vandermonde inside φ_s stays away from zero.
    let axes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|d| crate::densities::axis_nodes(upper, levels, order + d))
        .collect();
    let mut idx = vec![0usize; n];
    let mut total = Complex64::new(0.0, 0.0);
    loop {
        let mut wprod = 1.0;
        let mut pt = Vec::with_capacity(n);
        for d in 0..n {
            let (x, w) = axes[d][idx[d]];
            wprod *= w;
            pt.push(x);
        }
        let dens = jpdf_sv(ens, &pt)?.value;
        if dens != 0.0 {
            let phi = spherical_function(s, &pt)?;
            let det_a: f64 = pt.iter().product();
            total += wprod * dens * det_a.powi(-(n as i32)) * phi;
        }
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return Ok(total);
            }
        }
    }
}
