//! Symbolic and empirical central-limit parameters for the Lyapunov and
//! stability exponents of long matrix products.
//!
//! For a derivative-type ensemble the spherical transform factorizes, so
//! the mean vector and covariance of (ln R₁₁, …, ln R_nn) come from first
//! and second logarithmic derivatives of Mω at the integers — digamma and
//! trigamma terms, no finite differences anywhere.

use crate::ensembles::Ensemble;
use crate::error::{Error, Result};
use crate::quad::CdfTable;
use crate::sampling::{qr_positive, run_parallel, ChainSampler, FactorSampler, FactorSpec};
use crate::special::normal_cdf;

#[derive(Debug, Clone, PartialEq)]
pub enum CltSource {
    Symbolic,
    Empirical { runs: usize },
}

/// Mean vector m (descending) and covariance Σ of the log QR diagonal of
/// a single factor; the CLT parameters of the exponents.
#[derive(Debug, Clone)]
pub struct CltParameters {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub source: CltSource,
}

impl CltParameters {
    pub fn n(&self) -> usize {
        self.mean.len()
    }

    /// Largest absolute off-diagonal covariance entry.
    pub fn max_offdiag(&self) -> f64 {
        let n = self.n();
        let mut m = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    m = m.max(self.covariance[a][b].abs());
                }
            }
        }
        m
    }
}

/// m_j = ½ (d/ds log Mω)(n−j+1), Σ_jj = ¼ (d²/ds² log Mω)(n−j+1).
/// The covariance of a derivative-type ensemble is exactly diagonal.
pub fn clt_params_symbolic(ens: &Ensemble) -> Result<CltParameters> {
    let n = ens.n();
    let symbol = ens
        .symbol()
        .ok_or_else(|| Error::Unsupported("symbolic CLT parameters need a derivative-type ensemble".into()))?;
    // Two s-derivatives need a margin around [1, n].
    let eps = 1e-6;
    if !symbol.strip().covers(1.0 - eps, n as f64 + eps) {
        return Err(Error::StripViolation {
            re: n as f64 + eps,
            lo: symbol.strip().lo,
            hi: symbol.strip().hi,
        });
    }
    let mut mean = Vec::with_capacity(n);
    let mut covariance = vec![vec![0.0; n]; n];
    for j in 1..=n {
        let at = (n - j + 1) as f64;
        mean.push(0.5 * symbol.log_deriv1(at)?);
        covariance[j - 1][j - 1] = 0.25 * symbol.log_deriv2(at)?;
    }
    Ok(CltParameters {
        mean,
        covariance,
        source: CltSource::Symbolic,
    })
}

/// Sample mean and covariance of (ln R₁₁, …, ln R_nn) over single-factor
/// draws.
pub fn clt_params_empirical(
    spec: &FactorSpec,
    runs: usize,
    seed: u64,
    workers: usize,
) -> Result<CltParameters> {
    if runs < 1000 {
        return Err(Error::ParameterOutOfRange(format!(
            "empirical CLT parameters need ≥ 1000 runs, got {runs}"
        )));
    }
    let n = spec.n;
    let rows = run_parallel(runs, seed, workers, |rng, count, _first| {
        let mut sampler = FactorSampler::new(spec.clone())?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let x = sampler.draw(rng)?;
            let (_, r) = qr_positive(&x)?;
            out.push((0..n).map(|j| r[(j, j)].re.ln()).collect::<Vec<f64>>());
        }
        Ok(out)
    })?;
    let (mean, covariance) = mean_and_covariance(&rows);
    Ok(CltParameters {
        mean,
        covariance,
        source: CltSource::Empirical { runs },
    })
}

fn mean_and_covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows[0].len();
    let runs = rows.len() as f64;
    let mut mean = vec![0.0; n];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= runs;
    }
    let mut cov = vec![vec![0.0; n]; n];
    for row in rows {
        for a in 0..n {
            for b in 0..n {
                cov[a][b] += (row[a] - mean[a]) * (row[b] - mean[b]);
            }
        }
    }
    for r in &mut cov {
        for v in r.iter_mut() {
            *v /= runs - 1.0;
        }
    }
    (mean, cov)
}

/// Per-component statistics of one exponent family.
#[derive(Debug, Clone)]
pub struct ExponentStats {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// KS distance of each component against the normal cdf after
    /// empirical standardization (a shape/Gaussianity test).
    pub ks_normal: Vec<f64>,
    /// KS after √M-standardization around the reference (m, Σ), when a
    /// reference was supplied.
    pub ks_normal_ref: Option<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ExponentReport {
    pub m_factors: usize,
    pub runs: usize,
    pub seed: u64,
    pub lyapunov: ExponentStats,
    pub stability: ExponentStats,
}

fn component_stats(
    rows: &[Vec<f64>],
    m_factors: usize,
    reference: Option<&CltParameters>,
) -> ExponentStats {
    let n = rows[0].len();
    let runs = rows.len();
    let (mean, covariance) = mean_and_covariance(rows);
    let mut ks_normal = Vec::with_capacity(n);
    for k in 0..n {
        let sd = covariance[k][k].sqrt();
        let mut z: Vec<f64> = rows.iter().map(|r| (r[k] - mean[k]) / sd).collect();
        z.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks_normal.push(crate::sampling::ks_statistic(&z, normal_cdf));
    }
    let ks_normal_ref = reference.map(|p| {
        let sqrt_m = (m_factors as f64).sqrt();
        (0..n)
            .map(|k| {
                let sd = p.covariance[k][k].sqrt();
                let mut z: Vec<f64> = rows
                    .iter()
                    .map(|r| sqrt_m * (r[k] - p.mean[k]) / sd)
                    .collect();
                z.sort_by(|a, b| a.partial_cmp(b).unwrap());
                crate::sampling::ks_statistic(&z, normal_cdf)
            })
            .collect()
    });
    let _ = runs;
    ExponentStats {
        mean,
        covariance,
        ks_normal,
        ks_normal_ref,
    }
}

/// Monte Carlo over `runs` products of M = `m_factors` chain draws,
/// recording the finite Lyapunov exponents (1/M) ln σ_k and stability
/// exponents (1/M) ln |λ_k|, both in decreasing order.
pub fn exponent_mc(
    specs: &[FactorSpec],
    m_factors: usize,
    runs: usize,
    seed: u64,
    workers: usize,
    reference: Option<&CltParameters>,
) -> Result<ExponentReport> {
    if m_factors < 10 {
        return Err(Error::ParameterOutOfRange(format!(
            "need M ≥ 10 chain repetitions, got {m_factors}"
        )));
    }
    if runs < 1000 {
        return Err(Error::ParameterOutOfRange(format!(
            "need ≥ 1000 runs, got {runs}"
        )));
    }
    let samples = run_parallel(runs, seed, workers, |rng, count, _first| {
        let mut chain = ChainSampler::new(specs)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            let s = chain.draw_power(m_factors, rng)?;
            let m = m_factors as f64;
            let lyap: Vec<f64> = s
                .log_sq_singular_values
                .iter()
                .map(|l| 0.5 * l / m)
                .collect();
            let stab: Vec<f64> = s.log_ev_radii.iter().map(|l| l / m).collect();
            out.push((lyap, stab));
        }
        Ok(out)
    })?;
    let lyap_rows: Vec<Vec<f64>> = samples.iter().map(|(l, _)| l.clone()).collect();
    let stab_rows: Vec<Vec<f64>> = samples.iter().map(|(_, s)| s.clone()).collect();
    Ok(ExponentReport {
        m_factors,
        runs,
        seed,
        lyapunov: component_stats(&lyap_rows, m_factors, reference),
        stability: component_stats(&stab_rows, m_factors, reference),
    })
}

/// Cached cdf of R_jj², whose density is h_j(r) = r^{n−j} ω(r) / Mω(n−j+1).
#[derive(Debug, Clone)]
pub struct RdiagCdf {
    table: CdfTable,
    mass_error: f64,
}

impl RdiagCdf {
    pub fn new(ens: &Ensemble, j: usize) -> Result<Self> {
        let n = ens.n();
        if j == 0 || j > n {
            return Err(Error::ParameterOutOfRange(format!(
                "diagonal index must be in 1..=n, got {j}"
            )));
        }
        let power = (n - j) as f64;
        let norm = ens.moment(power + 1.0)?;
        // Find an upper cutoff where the density has died off.
        let density = |r: f64| -> f64 {
            let w = ens.weight(0, r).unwrap_or(0.0);
            r.powf(power) * w / norm
        };
        let mut hi = 8.0f64;
        while hi < 1e9 && density(hi) * hi > 1e-18 {
            hi *= 2.0;
        }
        let table = CdfTable::build(1e-12, hi, 4000, true, density)?;
        let mass_error = (table.mass() - 1.0).abs();
        Ok(RdiagCdf { table, mass_error })
    }

    /// |∫ h_j − 1|: how well the symbol-predicted normalization matched
    /// the quadrature.
    pub fn mass_error(&self) -> f64 {
        self.mass_error
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.table.eval(r)
    }
}

/// cdf of R_jj² at `r` (one-shot; build [`RdiagCdf`] for repeated queries).
pub fn rdiag_marginal_cdf(ens: &Ensemble, j: usize, r: f64) -> Result<f64> {
    Ok(RdiagCdf::new(ens, j)?.eval(r))
}
