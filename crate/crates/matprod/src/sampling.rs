//! Seeded samplers for matrix factors, numerically stable product chains,
//! spectral extraction, and empirical-distribution statistics.
//!
//! Long products have singular values spread over thousands of orders of
//! magnitude, far beyond f64. The chain therefore accumulates every
//! exterior power Λ^k of the product through per-step QR with scalar
//! rescaling: the largest singular value (and largest eigenvalue modulus)
//! of Λ^k is always well conditioned and equals σ₁···σ_k (resp.
//! |λ₁···λ_k|), which recovers each log-singular-value and log-radius
//! exactly by differencing.

use crate::densities::jpdf_sv;
use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use std::f64::consts::FRAC_1_SQRT_2;

pub type CMat = DMatrix<Complex64>;

/// Counter-style stream: one master seed, one stream per worker/run.
pub fn stream_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

/// Random-walk Metropolis settings for sampling a squared-singular-value
/// density as a diagonal matrix.
#[derive(Debug, Clone)]
pub struct McmcConfig {
    pub burn_in: usize,
    pub thinning: usize,
    pub target_acceptance: f64,
    pub initial_step: f64,
    /// Conjugate the diagonal by independent Haar factors U diag V.
    pub haar_conjugate: bool,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            burn_in: 10_000,
            thinning: 10,
            target_acceptance: 0.3,
            initial_step: 0.5,
            haar_conjugate: false,
        }
    }
}

/// What to draw for one factor of a product chain.
#[derive(Debug, Clone)]
pub enum FactorKind {
    /// i.i.d. complex Gaussian entries with unit complex variance.
    Ginibre,
    /// Inverse of a Ginibre draw (re-drawn while cond > 1e12).
    InverseGinibre,
    /// Top-left n×n block of an N-dimensional Haar unitary, N ≥ 2n.
    TruncatedUnitary { big_n: usize },
    HaarUnitary,
    /// diag(√a) with a ~ jpdf_sv of the ensemble, by Metropolis in log a.
    DiagonalFromJpdf { ensemble: Ensemble, mcmc: McmcConfig },
}

#[derive(Debug, Clone)]
pub struct FactorSpec {
    pub n: usize,
    pub kind: FactorKind,
}

impl FactorSpec {
    pub fn ginibre(n: usize) -> Self {
        FactorSpec { n, kind: FactorKind::Ginibre }
    }

    pub fn inverse_ginibre(n: usize) -> Self {
        FactorSpec { n, kind: FactorKind::InverseGinibre }
    }

    pub fn truncated_unitary(n: usize, big_n: usize) -> Self {
        FactorSpec { n, kind: FactorKind::TruncatedUnitary { big_n } }
    }

    pub fn haar_unitary(n: usize) -> Self {
        FactorSpec { n, kind: FactorKind::HaarUnitary }
    }

    pub fn diagonal_from_jpdf(ensemble: Ensemble, mcmc: McmcConfig) -> Self {
        FactorSpec {
            n: ensemble.n(),
            kind: FactorKind::DiagonalFromJpdf { ensemble, mcmc },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::ParameterOutOfRange("factor dimension must be ≥ 1".into()));
        }
        match &self.kind {
            FactorKind::TruncatedUnitary { big_n } => {
                if *big_n < 2 * self.n {
                    return Err(Error::ParameterOutOfRange(format!(
                        "truncated unitary needs N ≥ 2n, got N = {big_n}, n = {}",
                        self.n
                    )));
                }
            }
            FactorKind::DiagonalFromJpdf { ensemble, .. } => {
                if ensemble.n() != self.n {
                    return Err(Error::DimensionMismatch(ensemble.n(), self.n));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Spectral data of one realized product.
///
/// `sq_singular_values`, `eigenvalues` and `r_diag` describe the rescaled
/// product (multiply by exp(log_scale), resp. exp(2·log_scale), for the
/// raw matrix); the `log_*` fields carry the exact absolute logarithms,
/// which stay finite for arbitrarily long chains.
#[derive(Debug, Clone)]
pub struct SpectralSample {
    /// Squared singular values of the rescaled product, descending.
    pub sq_singular_values: Vec<f64>,
    /// Eigenvalues of the rescaled product, by descending modulus.
    pub eigenvalues: Vec<Complex64>,
    /// Diagonal of R in the QR decomposition of the rescaled product.
    pub r_diag: Vec<f64>,
    pub log_scale: f64,
    /// ln σ_k² of the raw product, descending.
    pub log_sq_singular_values: Vec<f64>,
    /// ln |λ_k| of the raw product, descending.
    pub log_ev_radii: Vec<f64>,
    /// ln R_jj of the raw product, in QR order.
    pub log_r_diag: Vec<f64>,
}

fn c_normal(rng: &mut impl Rng) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// n×n Ginibre matrix: unit-variance complex Gaussian entries.
pub fn ginibre(n: usize, rng: &mut impl Rng) -> CMat {
    CMat::from_fn(n, n, |_, _| c_normal(rng))
}

/// QR with the R_jj > 0 sign convention (which makes it unique).
pub fn qr_positive(m: &CMat) -> Result<(CMat, CMat)> {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    let n = r.nrows().min(r.ncols());
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() == 0.0 {
            return Err(Error::SingularDraw(1));
        }
        let phase = d / d.norm();
        for k in 0..r.ncols() {
            r[(j, k)] *= phase.conj();
        }
        for i in 0..q.nrows() {
            q[(i, j)] *= phase;
        }
    }
    Ok((q, r))
}

/// Haar-distributed unitary via QR of a Ginibre draw with the phase-fixed
/// diagonal.
pub fn haar_unitary(n: usize, rng: &mut impl Rng) -> Result<CMat> {
    Ok(qr_positive(&ginibre(n, rng))?.0)
}

struct McmcState {
    log_a: Vec<f64>,
    log_target: f64,
    step: f64,
}

/// Stateful sampler for one factor; Metropolis chains warm up once and
/// persist across draws.
pub struct FactorSampler {
    spec: FactorSpec,
    chain: Option<McmcState>,
}

impl FactorSampler {
    pub fn new(spec: FactorSpec) -> Result<Self> {
        spec.validate()?;
        Ok(FactorSampler { spec, chain: None })
    }

    pub fn spec(&self) -> &FactorSpec {
        &self.spec
    }

    pub fn draw(&mut self, rng: &mut ChaCha8Rng) -> Result<CMat> {
        let n = self.spec.n;
        match &self.spec.kind {
            FactorKind::Ginibre => Ok(ginibre(n, rng)),
            FactorKind::HaarUnitary => haar_unitary(n, rng),
            FactorKind::TruncatedUnitary { big_n } => {
                let u = haar_unitary(*big_n, rng)?;
                Ok(u.view((0, 0), (n, n)).into_owned())
            }
            FactorKind::InverseGinibre => {
                const RETRIES: usize = 64;
                for _ in 0..RETRIES {
                    let g = ginibre(n, rng);
                    let sv = g.clone().svd(false, false).singular_values;
                    let (mut smax, mut smin) = (f64::MIN, f64::MAX);
                    for v in sv.iter() {
                        smax = smax.max(*v);
                        smin = smin.min(*v);
                    }
                    if smin > 0.0 && smax / smin <= 1e12 {
                        if let Some(inv) = g.try_inverse() {
                            return Ok(inv);
                        }
                    }
                }
                Err(Error::SingularDraw(RETRIES))
            }
            FactorKind::DiagonalFromJpdf { ensemble, mcmc } => {
                let ensemble = ensemble.clone();
                let mcmc = mcmc.clone();
                if self.chain.is_none() {
                    self.chain = Some(warm_up(&ensemble, &mcmc, rng)?);
                }
                let state = self.chain.as_mut().unwrap();
                for _ in 0..mcmc.thinning {
                    metropolis_step(&ensemble, state, rng);
                }
                let mut d = CMat::zeros(n, n);
                for j in 0..n {
                    d[(j, j)] = Complex64::new((0.5 * state.log_a[j]).exp(), 0.0);
                }
                if mcmc.haar_conjugate {
                    let u = haar_unitary(n, rng)?;
                    let v = haar_unitary(n, rng)?;
                    Ok(u * d * v)
                } else {
                    Ok(d)
                }
            }
        }
    }
}

/// One-shot draw; chains warm up on every call, so prefer a persistent
/// [`FactorSampler`] (or [`ChainSampler`]) for repeated Metropolis draws.
pub fn sample_factor(spec: &FactorSpec, rng: &mut ChaCha8Rng) -> Result<CMat> {
    FactorSampler::new(spec.clone())?.draw(rng)
}

fn log_target(ens: &Ensemble, log_a: &[f64]) -> Option<f64> {
    let a: Vec<f64> = log_a.iter().map(|u| u.exp()).collect();
    let v = jpdf_sv(ens, &a).ok()?.value;
    if v <= 0.0 {
        return None;
    }
    Some(v.ln() + log_a.iter().sum::<f64>())
}

fn warm_up(ens: &Ensemble, cfg: &McmcConfig, rng: &mut ChaCha8Rng) -> Result<McmcState> {
    let n = ens.n();
    let mut start = None;
    for scale in [1.0 / (n as f64 + 1.0), 1.0, 0.1] {
        let log_a: Vec<f64> = (1..=n).map(|j| (scale * j as f64).ln()).collect();
        if let Some(t) = log_target(ens, &log_a) {
            start = Some((log_a, t));
            break;
        }
    }
    let (log_a, t) =
        start.ok_or_else(|| Error::McmcNotWarm("no positive-density starting point".into()))?;
    let mut state = McmcState {
        log_a,
        log_target: t,
        step: cfg.initial_step,
    };
    let mut accepted = 0usize;
    let mut window = 0usize;
    let mut total_accepted = 0usize;
    for i in 0..cfg.burn_in {
        if metropolis_step(ens, &mut state, rng) {
            accepted += 1;
            total_accepted += 1;
        }
        window += 1;
        if window == 100 {
            let rate = accepted as f64 / 100.0;
            if rate > cfg.target_acceptance + 0.05 {
                state.step *= 1.2;
            } else if rate < cfg.target_acceptance - 0.05 {
                state.step /= 1.2;
            }
            accepted = 0;
            window = 0;
        }
        let _ = i;
    }
    if (total_accepted as f64) < 0.01 * cfg.burn_in as f64 {
        return Err(Error::McmcNotWarm(format!(
            "acceptance rate {:.4} after burn-in",
            total_accepted as f64 / cfg.burn_in as f64
        )));
    }
    Ok(state)
}

fn metropolis_step(ens: &Ensemble, state: &mut McmcState, rng: &mut ChaCha8Rng) -> bool {
    let proposal: Vec<f64> = state
        .log_a
        .iter()
        .map(|u| u + state.step * rng.sample::<f64, _>(StandardNormal))
        .collect();
    if let Some(t) = log_target(ens, &proposal) {
        let accept = t >= state.log_target || {
            let u: f64 = rng.gen();
            u.ln() < t - state.log_target
        };
        if accept {
            state.log_a = proposal;
            state.log_target = t;
            return true;
        }
    }
    false
}

fn binomial(n: usize, k: usize) -> usize {
    let mut acc = 1usize;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn minor_det(m: &CMat, rows: &[usize], cols: &[usize]) -> Complex64 {
    let k = rows.len();
    match k {
        1 => m[(rows[0], cols[0])],
        2 => {
            m[(rows[0], cols[0])] * m[(rows[1], cols[1])]
                - m[(rows[0], cols[1])] * m[(rows[1], cols[0])]
        }
        _ => {
            let sub = CMat::from_fn(k, k, |i, j| m[(rows[i], cols[j])]);
            sub.lu().determinant()
        }
    }
}

/// k-th compound (exterior power) matrix: entries are k×k minors, indexed
/// by k-subsets in lexicographic order. Multiplicative: Λ^k(AB) = Λ^k(A)Λ^k(B).
pub fn compound_matrix(m: &CMat, _k: usize, subsets: &[Vec<usize>]) -> CMat {
    CMat::from_fn(subsets.len(), subsets.len(), |i, j| {
        minor_det(m, &subsets[i], &subsets[j])
    })
}

struct LevelState {
    subsets: Vec<Vec<usize>>,
    q_acc: CMat,
    r: CMat,
    log_scale: f64,
}

/// Accumulates a matrix product factor by factor, maintaining every
/// exterior power in QR form with scalar rescaling.
pub struct ProductAccumulator {
    n: usize,
    levels: Vec<LevelState>,
    steps: usize,
}

impl ProductAccumulator {
    pub fn new(n: usize) -> Self {
        let levels = (1..=n)
            .map(|k| {
                let subsets = k_subsets(n, k);
                let d = subsets.len();
                LevelState {
                    subsets,
                    q_acc: CMat::identity(d, d),
                    r: CMat::identity(d, d),
                    log_scale: 0.0,
                }
            })
            .collect();
        ProductAccumulator { n, levels, steps: 0 }
    }

    /// Multiply the running product by `x` on the right.
    pub fn push(&mut self, x: &CMat) -> Result<()> {
        if x.nrows() != self.n || x.ncols() != self.n {
            return Err(Error::DimensionMismatch(x.nrows(), self.n));
        }
        for level in &mut self.levels {
            let cx = if level.subsets.len() == self.n && level.subsets[0].len() == 1 {
                x.clone()
            } else {
                compound_matrix(x, level.subsets[0].len(), &level.subsets)
            };
            let (q, mut r) = qr_positive(&(&level.r * cx))?;
            level.q_acc = &level.q_acc * q;
            // Rescale by the geometric mean of the diagonal once entries
            // drift outside a safe band.
            let d = r.nrows();
            let mut max_abs = 0.0f64;
            for j in 0..d {
                max_abs = max_abs.max(r[(j, j)].norm());
            }
            if !(1e-8..=1e8).contains(&max_abs) {
                let mean_log: f64 =
                    (0..d).map(|j| r[(j, j)].norm().ln()).sum::<f64>() / d as f64;
                let scale = (-mean_log).exp();
                for v in r.iter_mut() {
                    *v *= scale;
                }
                level.log_scale += mean_log;
            }
            level.r = r;
        }
        self.steps += 1;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Extract the spectral data of the accumulated product.
    pub fn finish(self) -> Result<SpectralSample> {
        let n = self.n;
        let base = &self.levels[0];
        let log_scale = base.log_scale;
        let log_r_diag: Vec<f64> = (0..n)
            .map(|j| base.r[(j, j)].norm().ln() + log_scale)
            .collect();
        let r_diag: Vec<f64> = (0..n).map(|j| base.r[(j, j)].norm()).collect();

        // ln(σ₁···σ_k) and ln|λ₁···λ_k| from each exterior power.
        let mut log_sv_prod = Vec::with_capacity(n);
        let mut log_ev_prod = Vec::with_capacity(n);
        for level in &self.levels {
            let scaled = &level.q_acc * &level.r;
            let sv = scaled.clone().svd(false, false).singular_values;
            let smax = sv.iter().cloned().fold(f64::MIN, f64::max);
            log_sv_prod.push(smax.ln() + level.log_scale);
            let eig_max = if scaled.nrows() == 1 {
                scaled[(0, 0)].norm()
            } else {
                let (_, t) = scaled.clone().schur().unpack();
                (0..t.nrows()).map(|i| t[(i, i)].norm()).fold(f64::MIN, f64::max)
            };
            log_ev_prod.push(eig_max.ln() + level.log_scale);
        }
        let mut log_sq_singular_values = Vec::with_capacity(n);
        let mut log_ev_radii = Vec::with_capacity(n);
        for k in 0..n {
            let prev_sv = if k == 0 { 0.0 } else { log_sv_prod[k - 1] };
            let prev_ev = if k == 0 { 0.0 } else { log_ev_prod[k - 1] };
            log_sq_singular_values.push(2.0 * (log_sv_prod[k] - prev_sv));
            log_ev_radii.push(log_ev_prod[k] - prev_ev);
        }

        // Spectral data of the rescaled product itself.
        let scaled = &base.q_acc * &base.r;
        let sq_singular_values: Vec<f64> = log_sq_singular_values
            .iter()
            .map(|l| (l - 2.0 * log_scale).exp())
            .collect();
        let mut eigenvalues: Vec<Complex64> = if n == 1 {
            vec![scaled[(0, 0)]]
        } else {
            let (_, t) = scaled.schur().unpack();
            (0..n).map(|i| t[(i, i)]).collect()
        };
        eigenvalues.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        Ok(SpectralSample {
            sq_singular_values,
            eigenvalues,
            r_diag,
            log_scale,
            log_sq_singular_values,
            log_ev_radii,
            log_r_diag,
        })
    }
}

/// Persistent sampler for a whole factor chain.
pub struct ChainSampler {
    factors: Vec<FactorSampler>,
    n: usize,
}

impl ChainSampler {
    pub fn new(specs: &[FactorSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::ParameterOutOfRange("empty factor chain".into()));
        }
        let n = specs[0].n;
        for s in specs {
            if s.n != n {
                return Err(Error::DimensionMismatch(s.n, n));
            }
        }
        let factors = specs
            .iter()
            .map(|s| FactorSampler::new(s.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(ChainSampler { factors, n })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Draw the chain product (each factor once).
    pub fn draw_product(&mut self, rng: &mut ChaCha8Rng) -> Result<SpectralSample> {
        self.draw_power(1, rng)
    }

    /// Draw (chain)^m: the full factor cycle repeated m times.
    pub fn draw_power(&mut self, m: usize, rng: &mut ChaCha8Rng) -> Result<SpectralSample> {
        let mut acc = ProductAccumulator::new(self.n);
        for _ in 0..m {
            for f in &mut self.factors {
                let x = f.draw(rng)?;
                acc.push(&x)?;
            }
        }
        acc.finish()
    }
}

/// One realization of X = X₁ ⋯ X_M for the given factor list.
pub fn product_chain(specs: &[FactorSpec], seed: u64) -> Result<SpectralSample> {
    let mut rng = stream_rng(seed, 0);
    ChainSampler::new(specs)?.draw_product(&mut rng)
}

/// Split `total` draws over `workers` contiguous blocks, one RNG stream
/// per block, and concatenate in block order: the output is a pure
/// function of (seed, workers, total).
pub fn run_parallel<T, F>(total: usize, seed: u64, workers: usize, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize, usize) -> Result<Vec<T>> + Sync,
{
    let workers = workers.max(1).min(total.max(1));
    let base = total / workers;
    let extra = total % workers;
    let mut blocks = Vec::with_capacity(workers);
    let mut start = 0usize;
    for w in 0..workers {
        let count = base + usize::from(w < extra);
        blocks.push((w, start, count));
        start += count;
    }
    let mut results: Vec<Vec<T>> = blocks
        .par_iter()
        .map(|(w, first, count)| {
            let mut rng = stream_rng(seed, *w as u64);
            job(&mut rng, *count, *first)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(total);
    for block in results.drain(..) {
        out.extend(block);
    }
    Ok(out)
}

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a cdf.
pub fn ks_statistic<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> f64 {
    let n = sorted.len() as f64;
    let mut d = 0.0f64;
    for (i, x) in sorted.iter().enumerate() {
        let f = cdf(*x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

/// Two-sample Kolmogorov-Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Correlations of log R_jj plus per-component KS of R_jj² against the
/// marginal densities h_j predicted by the ensemble symbol.
#[derive(Debug, Clone)]
pub struct DiagIndependence {
    pub corr: Vec<Vec<f64>>,
    pub marginal_ks: Vec<f64>,
}

/// `samples` holds one r_diag vector (raw R_jj values) per realization.
pub fn independence_diag(ens: &Ensemble, samples: &[Vec<f64>]) -> Result<DiagIndependence> {
    let n = ens.n();
    if samples.len() < 1000 {
        return Err(Error::ParameterOutOfRange(format!(
            "need at least 1000 samples, got {}",
            samples.len()
        )));
    }
    let runs = samples.len() as f64;
    let mut mean = vec![0.0; n];
    let logs: Vec<Vec<f64>> = samples
        .iter()
        .map(|r| r.iter().map(|v| v.ln()).collect())
        .collect();
    for row in &logs {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= runs;
    }
    let mut cov = vec![vec![0.0; n]; n];
    for row in &logs {
        for a in 0..n {
            for b in 0..n {
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    for row in &mut cov {
        for v in row.iter_mut() {
            *v /= runs - 1.0;
        }
    }
    let corr: Vec<Vec<f64>> = (0..n)
        .map(|a| {
            (0..n)
                .map(|b| cov[a][b] / (cov[a][a] * cov[b][b]).sqrt())
                .collect()
        })
        .collect();
    let mut marginal_ks = Vec::with_capacity(n);
    for j in 1..=n {
        let cdf = crate::lyapunov::RdiagCdf::new(ens, j)?;
        let mut sq: Vec<f64> = samples.iter().map(|r| r[j - 1] * r[j - 1]).collect();
        sq.sort_by(|a, b| a.partial_cmp(b).unwrap());
        marginal_ks.push(ks_statistic(&sq, |x| cdf.eval(x)));
    }
    Ok(DiagIndependence { corr, marginal_ks })
}
