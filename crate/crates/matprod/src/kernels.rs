//! Determinantal kernels of the squared singular values and eigenvalues,
//! the bi-orthogonal polynomial system behind them, and the transfer of
//! that system under multiplication by a derivative-type ensemble.

use crate::ensembles::{closed_q_numerator, multiplicative_convolution, Ensemble};
use crate::error::{Error, Result};
use crate::quad::CdfTable;
use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::Arc;

type QFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;

/// Monic polynomials p₀..p_{n−1}, their bi-orthogonal weights q₀..q_{n−1},
/// and the Mellin moments that normalize them.
#[derive(Clone)]
pub struct BiorthogonalSystem {
    n: usize,
    /// coeffs[k][j] = a_{jk}, the coefficient of x^j in p_k (a_{kk} = 1).
    coeffs: Vec<Vec<f64>>,
    /// moments[i] = Mω(i+1); length n, or n+1 when the strip allows.
    moments: Vec<f64>,
    q_fns: Vec<QFn>,
}

impl std::fmt::Debug for BiorthogonalSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BiorthogonalSystem")
            .field("n", &self.n)
            .field("coeffs", &self.coeffs)
            .field("moments", &self.moments)
            .finish()
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Coefficients of Π_{i=1}^{l} (s − i), the polynomial that turns s^l·Mω
/// contours into the bi-orthogonal weight numerators.
fn falling_poly(l: usize) -> Vec<f64> {
    let mut poly = vec![1.0];
    for i in 1..=l {
        let mut next = vec![0.0; poly.len() + 1];
        for (d, c) in poly.iter().enumerate() {
            next[d + 1] += c;
            next[d] -= i as f64 * c;
        }
        poly = next;
    }
    poly
}

impl BiorthogonalSystem {
    /// Build the system of a derivative-type ensemble. Needs Mω on
    /// [1, n]; Mω(n+1) is kept when the strip reaches it.
    pub fn for_ensemble(ens: &Ensemble) -> Result<Self> {
        let n = ens.n();
        let symbol = ens
            .symbol()
            .ok_or_else(|| Error::Unsupported("kernels need a derivative-type ensemble".into()))?;
        let strip = symbol.strip();
        if !strip.covers(1.0 - 1e-12, n as f64) {
            return Err(Error::StripViolation {
                re: n as f64,
                lo: strip.lo,
                hi: strip.hi,
            });
        }
        let mut moments = Vec::with_capacity(n + 1);
        for i in 1..=n + 1 {
            if strip.contains(i as f64) {
                moments.push(symbol.eval_real(i as f64)?);
            }
        }
        let mut coeffs = Vec::with_capacity(n);
        for k in 0..n {
            let mut row = vec![0.0; k + 1];
            for (j, slot) in row.iter_mut().enumerate() {
                let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                *slot = sign * factorial(k) * moments[k]
                    / (factorial(j) * factorial(k - j) * moments[j]);
            }
            coeffs.push(row);
        }
        let mut q_fns: Vec<QFn> = Vec::with_capacity(n);
        for l in 0..n {
            let norm = factorial(l) * moments[l];
            if let Some(family) = ens.family() {
                if closed_q_numerator(family, l, 0.5).is_some() {
                    let family = family.clone();
                    q_fns.push(Arc::new(move |x| {
                        Ok(closed_q_numerator(&family, l, x).unwrap() / norm)
                    }));
                    continue;
                }
            }
            // Contour route: q_l is the inverse transform of
            // Π_{i=1}^{l}(s−i) · Mω(s) / (l! Mω(l+1)).
            let sym = symbol.with_extra_poly(&falling_poly(l)).scaled(1.0 / norm)?;
            q_fns.push(Arc::new(move |x| sym.inverse_mellin(x, 1e-8)));
        }
        Ok(BiorthogonalSystem {
            n,
            coeffs,
            moments,
            q_fns,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// a_{jk} for j ≤ k ≤ n−1.
    pub fn coeff(&self, j: usize, k: usize) -> f64 {
        self.coeffs[k][j]
    }

    /// Mω(i) for i = 1..=len (len is n or n+1).
    pub fn moment(&self, i: usize) -> Option<f64> {
        self.moments.get(i - 1).copied()
    }

    /// Monic polynomial p_k at x.
    pub fn poly(&self, k: usize, x: f64) -> f64 {
        self.coeffs[k].iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    /// Bi-orthogonal weight q_l at x.
    pub fn q(&self, l: usize, x: f64) -> Result<f64> {
        (self.q_fns[l])(x)
    }

    /// K_sv(x, y) = Σ_{j<n} p_j(x) q_j(y).
    pub fn kernel_sv(&self, x: f64, y: f64) -> Result<f64> {
        let mut acc = 0.0;
        for j in 0..self.n {
            acc += self.poly(j, x) * self.q(j, y)?;
        }
        Ok(acc)
    }

    /// One-point density K_sv(a, a)/n tabulated into a cdf for KS tests.
    pub fn marginal_cdf(&self, lo: f64, hi: f64, panels: usize) -> Result<CdfTable> {
        let nf = self.n as f64;
        CdfTable::build(lo, hi, panels, true, |a| {
            (self.kernel_sv(a, a).unwrap_or(0.0) / nf).max(0.0)
        })
    }

    /// System of ω ⊛ w under multiplication by the derivative-type
    /// ensemble of ω: coefficients rescale by moment ratios and weights
    /// convolve, so the transformed kernel is again Σ p_k q_k.
    pub fn transfer(&self, omega_ens: &Ensemble) -> Result<BiorthogonalSystem> {
        let n = self.n;
        if omega_ens.n() != n {
            return Err(Error::DimensionMismatch(omega_ens.n(), n));
        }
        let symbol = omega_ens
            .symbol()
            .ok_or_else(|| Error::Unsupported("transfer needs a derivative-type ω".into()))?;
        if !symbol.strip().covers(1.0 - 1e-12, n as f64) {
            return Err(Error::StripViolation {
                re: n as f64,
                lo: symbol.strip().lo,
                hi: symbol.strip().hi,
            });
        }
        let mut omega_moments = Vec::with_capacity(n + 1);
        for i in 1..=n + 1 {
            if symbol.strip().contains(i as f64) {
                omega_moments.push(symbol.eval_real(i as f64)?);
            }
        }
        let coeffs: Vec<Vec<f64>> = (0..n)
            .map(|k| {
                (0..=k)
                    .map(|j| omega_moments[k] * self.coeffs[k][j] / omega_moments[j])
                    .collect()
            })
            .collect();
        let count = self.moments.len().min(omega_moments.len());
        let moments: Vec<f64> = (0..count)
            .map(|i| self.moments[i] * omega_moments[i])
            .collect();
        let q_fns: Vec<QFn> = (0..n)
            .map(|k| {
                let omega = omega_ens.clone();
                let inner = self.q_fns[k].clone();
                let norm = omega_moments[k];
                let f: QFn = Arc::new(move |x| {
                    let v = multiplicative_convolution(
                        |t| omega.omega(t),
                        |t| inner(t),
                        x,
                        1e-7,
                    )?;
                    Ok(v / norm)
                });
                f
            })
            .collect();
        Ok(BiorthogonalSystem {
            n,
            coeffs,
            moments,
            q_fns,
        })
    }
}

/// Eigenvalue kernel K_ev(z, w̄) of a derivative-type ensemble.
pub fn kernel_ev(ens: &Ensemble, z: Complex64, w: Complex64) -> Result<Complex64> {
    let n = ens.n();
    let symbol = ens
        .symbol()
        .ok_or_else(|| Error::Unsupported("eigenvalue kernel needs a derivative-type ensemble".into()))?;
    if !symbol.strip().covers(1.0 - 1e-12, n as f64) {
        return Err(Error::StripViolation {
            re: n as f64,
            lo: symbol.strip().lo,
            hi: symbol.strip().hi,
        });
    }
    let oz = ens.weight(0, z.norm_sqr())?;
    let ow = ens.weight(0, w.norm_sqr())?;
    for (at, value) in [(z.norm_sqr(), oz), (w.norm_sqr(), ow)] {
        if value < 0.0 {
            return Err(Error::NegativeWeight { at, value });
        }
    }
    let zw = z * w.conj();
    let mut acc = Complex64::new(0.0, 0.0);
    let mut pw = Complex64::new(1.0, 0.0);
    for j in 0..n {
        let m = symbol.eval_real((j + 1) as f64)?;
        acc += pw / (PI * m);
        pw *= zw;
    }
    Ok((oz * ow).sqrt() * acc)
}

/// χ(x) = Σ_{j<n} x^j / Mω(j+1); the eigenvalue kernel on the diagonal,
/// divided by the weight.
pub fn chi(ens: &Ensemble, x: f64) -> Result<f64> {
    let n = ens.n();
    let symbol = ens
        .symbol()
        .ok_or_else(|| Error::Unsupported("chi needs a derivative-type ensemble".into()))?;
    let mut acc = 0.0;
    let mut pw = 1.0;
    for j in 0..n {
        acc += pw / symbol.eval_real((j + 1) as f64)?;
        pw *= x;
    }
    Ok(acc)
}
