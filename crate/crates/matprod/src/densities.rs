//! Joint densities of squared singular values and eigenvalues,
//! normalization constants, the interpolating parameter region, and the
//! signed-density scanner.

use crate::ensembles::{Ensemble, Kind};
use crate::error::{Error, Result};
use crate::quad;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::f64::consts::PI;

/// Value of a joint density together with its factors.
#[derive(Debug, Clone, Copy)]
pub struct DensityReport {
    pub value: f64,
    pub vandermonde: f64,
    pub weight_det: f64,
    pub normalization: f64,
    /// value ≥ 0 (signed densities can fail this).
    pub nonneg: bool,
    /// |value| fell below 1e-300 and was flushed to zero.
    pub underflow: bool,
}

impl DensityReport {
    fn assemble(normalization: f64, vandermonde: f64, weight_det: f64) -> Self {
        let mut value = normalization * vandermonde * weight_det;
        let underflow = value != 0.0 && value.abs() < 1e-300;
        if underflow {
            value = 0.0;
        }
        DensityReport {
            value,
            vandermonde,
            weight_det,
            normalization,
            nonneg: value >= 0.0,
            underflow,
        }
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|j| j as f64).product()
}

/// Vandermonde determinant Δ_n(a) = Π_{j<k} (a_k − a_j).
pub fn vandermonde(a: &[f64]) -> f64 {
    let mut v = 1.0;
    for j in 0..a.len() {
        for k in (j + 1)..a.len() {
            v *= a[k] - a[j];
        }
    }
    v
}

fn vandermonde_complex(z: &[Complex64]) -> Complex64 {
    let mut v = Complex64::new(1.0, 0.0);
    for j in 0..z.len() {
        for k in (j + 1)..z.len() {
            v *= z[k] - z[j];
        }
    }
    v
}

/// Normalizing constant of the squared-singular-value density.
///
/// Derivative type: 1 / (Π_{j=0}^{n} j! · Π_{j=1}^{n} Mω(j)). General
/// ensembles use the moment-matrix determinant.
pub fn normalization_sv(ens: &Ensemble) -> Result<f64> {
    let n = ens.n();
    match ens.kind() {
        Kind::DerivativeType { .. } => {
            let mut denom = 1.0;
            for j in 0..=n {
                denom *= factorial(j);
            }
            for j in 1..=n {
                denom *= ens.moment(j as f64)?;
            }
            Ok(1.0 / denom)
        }
        Kind::General { .. } => {
            let mut m = DMatrix::<f64>::zeros(n, n);
            for j in 0..n {
                for k in 0..n {
                    let v = ens.mellin_weight(j, Complex64::new((k + 1) as f64, 0.0))?;
                    if v.im.abs() > 1e-8 * (1.0 + v.re.abs()) {
                        return Err(Error::QuadratureFailure(format!(
                            "moment ({j}, {k}) has imaginary residue {}",
                            v.im
                        )));
                    }
                    m[(j, k)] = v.re;
                }
            }
            let det = m.lu().determinant();
            if det == 0.0 || !det.is_finite() {
                return Err(Error::QuadratureFailure(
                    "singular moment matrix in general normalization".into(),
                ));
            }
            Ok(1.0 / (factorial(n) * det))
        }
    }
}

/// Joint density of the squared singular values at the point `a`.
pub fn jpdf_sv(ens: &Ensemble, a: &[f64]) -> Result<DensityReport> {
    let n = ens.n();
    if a.len() != n {
        return Err(Error::DimensionMismatch(a.len(), n));
    }
    if let Some(bad) = a.iter().find(|x| !(**x > 0.0)) {
        return Err(Error::ParameterOutOfRange(format!(
            "squared singular values must be positive, got {bad}"
        )));
    }
    let c = normalization_sv(ens)?;
    let mut w = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        for (k, x) in a.iter().enumerate() {
            w[(j, k)] = ens.weight(j, *x)?;
        }
    }
    let det = if n == 1 { w[(0, 0)] } else { w.lu().determinant() };
    Ok(DensityReport::assemble(c, vandermonde(a), det))
}

/// Joint density of the eigenvalues at the point `z` (derivative type).
pub fn jpdf_ev(ens: &Ensemble, z: &[Complex64]) -> Result<DensityReport> {
    let n = ens.n();
    if z.len() != n {
        return Err(Error::DimensionMismatch(z.len(), n));
    }
    if let Some(bad) = z.iter().find(|v| v.norm() == 0.0 || !v.norm().is_finite()) {
        return Err(Error::ParameterOutOfRange(format!(
            "eigenvalues must be nonzero, got {bad}"
        )));
    }
    let c_sv = normalization_sv(ens)?;
    let c_ev = c_sv * (0..ens.n()).map(factorial).product::<f64>() / PI.powi(n as i32);
    let vdm = vandermonde_complex(z).norm_sqr();
    let mut prod = 1.0;
    for v in z {
        prod *= ens.weight(0, v.norm_sqr())?;
    }
    Ok(DensityReport::assemble(c_ev, vdm, prod))
}

fn is_nonneg_integer(v: f64) -> bool {
    v >= -1e-9 && (v - v.round()).abs() < 1e-9
}

/// Membership of (p, q) in the region W where the interpolating matrix
/// density is a probability density: each parameter is a non-negative
/// integer or exceeds n−1.
pub fn region_check(n: usize, p: f64, q: f64) -> Result<bool> {
    if !(p >= 0.0 && q >= 0.0 && p + q > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "need p, q >= 0 with p + q > 0, got p={p}, q={q}"
        )));
    }
    let ok = |v: f64| is_nonneg_integer(v) || v > n as f64 - 1.0;
    Ok(ok(p) && ok(q))
}

/// Scanner configuration; defaults mirror the asymptotic regime of the
/// negativity construction while staying bounded in cost.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub alphas: Vec<f64>,
    pub xn_range: (f64, f64),
    pub xn_points: usize,
    /// Per-axis point count of the coarse log-uniform lattice (0 disables).
    pub lattice_points: usize,
    pub lattice_range: (f64, f64),
    pub quad_tol: f64,
    /// A point only counts as a negativity witness when |det| exceeds this
    /// fraction of the permanent of |entries|, so quadrature noise in a
    /// cancellation-dominated determinant is never reported as negativity.
    pub det_guard: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            alphas: vec![5.0, 10.0, 20.0, 40.0],
            xn_range: (1e-4, 1e2),
            xn_points: 200,
            lattice_points: 12,
            lattice_range: (1e-4, 1e2),
            quad_tol: 1e-10,
            det_guard: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanVerdict {
    NegativeFound,
    NoneFound,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub verdict: ScanVerdict,
    /// Most negative point found, with its density value.
    pub witness: Option<(Vec<f64>, f64)>,
    pub min_value: f64,
    pub points_scanned: usize,
}

fn log_grid(range: (f64, f64), count: usize) -> Vec<f64> {
    let (lo, hi) = range;
    (0..count)
        .map(|i| {
            let t = if count == 1 { 0.5 } else { i as f64 / (count - 1) as f64 };
            (lo.ln() + t * (hi.ln() - lo.ln())).exp()
        })
        .collect()
}

/// Permanent of the absolute entries; the cancellation scale of the
/// determinant (n ≤ 10, so brute force over permutations is fine).
fn abs_permanent(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    loop {
        let mut prod = 1.0;
        for (r, c) in idx.iter().enumerate() {
            prod *= m[(r, *c)].abs();
        }
        total += prod;
        // next permutation
        let mut i = n as isize - 2;
        while i >= 0 && idx[i as usize] >= idx[i as usize + 1] {
            i -= 1;
        }
        if i < 0 {
            break;
        }
        let i = i as usize;
        let mut j = n - 1;
        while idx[j] <= idx[i] {
            j -= 1;
        }
        idx.swap(i, j);
        idx[i + 1..].reverse();
    }
    total
}

/// Search the interpolating squared-singular-value density for a sign
/// change: a coarse log-uniform lattice plus the family with most
/// coordinates collapsed toward zero (x_k = e^{−α/k}, x_n swept).
pub fn positivity_scan(n: usize, p: f64, q: f64, config: &ScanConfig) -> Result<ScanReport> {
    region_check(n, p, q)?; // validates the parameter ranges
    let ens = Ensemble::interpolating(n, p, q)?;

    // Collect scan points first so weights can be cached per coordinate.
    let mut points: Vec<Vec<f64>> = Vec::new();
    if config.lattice_points > 0 {
        let axis = log_grid(config.lattice_range, config.lattice_points);
        let mut idx = vec![0usize; n];
        loop {
            // strictly increasing tuples only; the density is symmetric
            if idx.windows(2).all(|w| w[0] < w[1]) {
                points.push(idx.iter().map(|i| axis[*i]).collect());
            }
            let mut d = n;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < config.lattice_points {
                    break;
                }
                idx[d] = 0;
                if d == 0 {
                    break;
                }
            }
            if idx.iter().all(|i| *i == 0) {
                break;
            }
        }
    }
    let sweep = log_grid(config.xn_range, config.xn_points);
    for alpha in &config.alphas {
        let head: Vec<f64> = (1..n).map(|k| (-alpha / k as f64).exp()).collect();
        for xn in &sweep {
            if head.iter().any(|h| (h - xn).abs() < 1e-300) {
                continue;
            }
            let mut pt = head.clone();
            pt.push(*xn);
            pt.sort_by(|a, b| a.partial_cmp(b).unwrap());
            points.push(pt);
        }
    }

    // Cache w_j at every distinct coordinate, in parallel.
    let mut coords: Vec<f64> = points.iter().flatten().copied().collect();
    coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
    coords.dedup();
    let weights: HashMap<u64, Vec<f64>> = coords
        .par_iter()
        .map(|x| {
            let ws: Result<Vec<f64>> = (0..n)
                .map(|j| ens.weight_with(j, *x, config.quad_tol))
                .collect();
            ws.map(|w| (x.to_bits(), w))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();

    // Deterministic reduction: evaluate in enumeration order, keep the min
    // (ties broken by lexicographically smaller point).
    let values: Vec<(f64, f64)> = points
        .iter()
        .map(|pt| {
            let mut m = DMatrix::<f64>::zeros(n, n);
            for (k, x) in pt.iter().enumerate() {
                let col = &weights[&x.to_bits()];
                for j in 0..n {
                    m[(j, k)] = col[j];
                }
            }
            let det = if n == 1 { m[(0, 0)] } else { m.clone().lu().determinant() };
            let scale = abs_permanent(&m);
            let vdm = vandermonde(pt);
            (vdm * det, vdm.abs() * scale)
        })
        .collect();

    let mut min_value = f64::INFINITY;
    let mut witness: Option<(Vec<f64>, f64)> = None;
    for (i, (val, scale)) in values.iter().enumerate() {
        if *val < min_value {
            min_value = *val;
        }
        // Witnesses must be negative beyond the cancellation guard.
        if *val < -config.det_guard * scale {
            let better = match &witness {
                None => true,
                Some((pt, best)) => {
                    *val < *best || (*val == *best && points[i] < *pt)
                }
            };
            if better {
                witness = Some((points[i].clone(), *val));
            }
        }
    }
    let c = normalization_sv(&ens)?;
    let witness = witness.map(|(pt, v)| (pt, c * v));
    Ok(ScanReport {
        verdict: if witness.is_some() {
            ScanVerdict::NegativeFound
        } else {
            ScanVerdict::NoneFound
        },
        witness,
        min_value: c * min_value,
        points_scanned: points.len(),
    })
}

/// Axis nodes for tensor quadrature on (0, upper]: dyadically refined
/// panels toward zero (integrable endpoint singularities converge), each
/// carrying a fixed Gauss-Legendre rule.
pub fn axis_nodes(upper: f64, levels: u32, order: usize) -> Vec<(f64, f64)> {
    let rule = quad::rule_of_order(order);
    let mut out = Vec::new();
    let mut hi = upper;
    for _ in 0..levels {
        let lo = hi * 0.5;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        for (x, w) in rule.0.iter().zip(&rule.1) {
            out.push((mid + half * x, half * w));
        }
        hi = lo;
    }
    out
}

/// ∫ jpdf_sv over (0, upper]^n by tensor quadrature; equals 1 for a
/// correctly normalized density once `upper` captures the mass.
pub fn integrate_jpdf_sv(ens: &Ensemble, upper: f64, levels: u32, order: usize) -> Result<f64> {
    let n = ens.n();
    let nodes = axis_nodes(upper, levels, order);
    let c = normalization_sv(ens)?;
    // Cache the weight columns per node.
    let cols: Vec<Vec<f64>> = nodes
        .par_iter()
        .map(|(x, _)| (0..n).map(|j| ens.weight(j, *x)).collect::<Result<Vec<f64>>>())
        .collect::<Result<Vec<_>>>()?;
    let m = nodes.len();
    let mut idx = vec![0usize; n];
    let mut total = 0.0;
    loop {
        let mut wprod = 1.0;
        for d in 0..n {
            wprod *= nodes[idx[d]].1;
        }
        let pt: Vec<f64> = idx.iter().map(|i| nodes[*i].0).collect();
        let mut mat = DMatrix::<f64>::zeros(n, n);
        for (k, i) in idx.iter().enumerate() {
            for j in 0..n {
                mat[(j, k)] = cols[*i][j];
            }
        }
        let det = if n == 1 { mat[(0, 0)] } else { mat.lu().determinant() };
        total += wprod * vandermonde(&pt) * det;
        // advance the tensor index
        let mut d = 0;
        loop {
            idx[d] += 1;
            if idx[d] < m {
                break;
            }
            idx[d] = 0;
            d += 1;
            if d == n {
                return Ok(c * total);
            }
        }
    }
}

/// ∫ jpdf_ev over ℂ^n in radial-angular coordinates. For n ≤ 2 the
/// relative angle is integrated numerically; for n = 3 the exact phase
/// average (a permanent) replaces the angular quadrature.
pub fn integrate_jpdf_ev(ens: &Ensemble, upper_radius: f64, levels: u32, order: usize) -> Result<f64> {
    let n = ens.n();
    let c_sv = normalization_sv(ens)?;
    let c_ev = c_sv * (0..n).map(factorial).product::<f64>() / PI.powi(n as i32);
    let nodes = axis_nodes(upper_radius, levels, order);
    let omega: Vec<f64> = nodes
        .par_iter()
        .map(|(r, _)| ens.weight(0, r * r))
        .collect::<Result<Vec<_>>>()?;
    match n {
        1 => {
            let mut total = 0.0;
            for ((r, w), om) in nodes.iter().zip(&omega) {
                total += w * 2.0 * PI * r * om;
            }
            Ok(c_ev * total)
        }
        2 => {
            // |z₂ − z₁|² averaged over the relative angle by quadrature.
            let rule = quad::rule_of_order(32);
            let mut total = 0.0;
            for (i, (r1, w1)) in nodes.iter().enumerate() {
                for (j, (r2, w2)) in nodes.iter().enumerate() {
                    let mut ang = 0.0;
                    for (x, w) in rule.0.iter().zip(&rule.1) {
                        let phi = PI * (x + 1.0); // (0, 2π)
                        ang += w * PI * (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * phi.cos());
                    }
                    total += w1 * w2 * (2.0 * PI) * r1 * r2 * ang * omega[i] * omega[j];
                }
            }
            Ok(c_ev * total)
        }
        3 => {
            // Exact phase average of |Δ₃(z)|²: perm[r_j^{2(k−1)}].
            let mut total = 0.0;
            for (i, (r1, w1)) in nodes.iter().enumerate() {
                for (j, (r2, w2)) in nodes.iter().enumerate() {
                    for (k, (r3, w3)) in nodes.iter().enumerate() {
                        let r = [r1, r2, r3];
                        let mut perm = DMatrix::<f64>::zeros(3, 3);
                        for (a, ra) in r.iter().enumerate() {
                            for b in 0..3 {
                                perm[(a, b)] = ra.powi(2 * b as i32);
                            }
                        }
                        let pval = abs_permanent(&perm);
                        total += w1 * w2 * w3
                            * (2.0 * PI).powi(3)
                            * r1 * r2 * r3
                            * pval
                            * omega[i] * omega[j] * omega[k];
                    }
                }
            }
            Ok(c_ev * total)
        }
        _ => Err(Error::Unsupported(
            "eigenvalue normalization quadrature implemented for n ≤ 3".into(),
        )),
    }
}
