//! Command-line front end: parse ensemble expressions, dispatch the
//! library computations, and emit deterministic JSON/CSV tables.

use clap::{Parser, Subcommand};
use matprod::densities::{jpdf_ev, jpdf_sv, positivity_scan, region_check, ScanConfig, ScanVerdict};
use matprod::ensembles::Ensemble;
use matprod::error::Error;
use matprod::expr::{parse_ensemble, parse_factor_chain};
use matprod::kernels::{kernel_ev, BiorthogonalSystem};
use matprod::lyapunov::{clt_params_symbolic, exponent_mc, CltParameters};
use matprod::report::{csv_num, read_sample_csv, write_sample_csv, JsonObject};
use matprod::sampling::{run_parallel, ChainSampler, FactorKind, FactorSpec, SpectralSample};
use matprod::spherical::{spherical_transform, spherical_transform_numeric, SphericalQuad};
use num_complex::Complex64;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "matprod",
    version,
    about = "Spectral statistics of products of bi-unitarily invariant random matrices"
)]
struct Cli {
    /// Worker threads for Monte Carlo fan-out; falls back to
    /// MATPROD_WORKERS, then to the available parallelism (capped at 8).
    /// Outputs are a pure function of (config, seed, workers).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the joint squared-singular-value density at given points (CSV).
    DensitySv {
        /// Ensemble expression, e.g. "laguerre(nu=0) * inv(jacobi(nu=0,mu=5))".
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        /// Points "a1,a2,..;b1,b2,.." with n coordinates each.
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the joint eigenvalue density at given complex points (CSV).
    DensityEv {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        /// Points "re1,im1,re2,im2;..." with n complex coordinates each.
        #[arg(long)]
        points: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the squared-singular-value kernel on a grid (CSV).
    KernelSv {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        /// Grid "lo:hi:count" (log-spaced) or "lo:hi:count:lin".
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the eigenvalue kernel intensity K_ev(r, r) on a radius grid (CSV).
    KernelEv {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan an interpolating density for negativity (JSON).
    InterpScan {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Comma-separated α values of the collapse family.
        #[arg(long, default_value = "5,10,20,40")]
        alphas: String,
        #[arg(long, default_value_t = 200)]
        xn_points: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw product-chain realizations and dump them as CSV.
    Sample {
        /// Factor chain, e.g. "ginibre * inv(ginibre)" or "truncated(n=6)".
        #[arg(long)]
        factors: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        draws: usize,
        /// Repeat the whole chain this many times per draw (X^(M)).
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// KS distance of a sample dump against the analytic marginal K_sv(a,a)/n (JSON).
    CompareSv {
        #[arg(long)]
        sample: PathBuf,
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Lyapunov/stability exponent Monte Carlo with CLT parameters (JSON).
    Lyapunov {
        #[arg(long)]
        factors: String,
        #[arg(long)]
        n: usize,
        /// Number of chain repetitions M per run.
        #[arg(long)]
        m: usize,
        #[arg(long)]
        runs: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Symbolic vs numeric spherical transform at one parameter point (JSON).
    SphericalCheck {
        #[arg(long)]
        expr: String,
        #[arg(long)]
        n: usize,
        /// Components "re,im;re,im;..." (n of them).
        #[arg(long)]
        s: String,
        /// Upper integration bound per axis for the quadrature oracle.
        #[arg(long, default_value_t = 60.0)]
        upper: f64,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .or_else(|| {
            std::env::var("MATPROD_WORKERS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|v| v.get().min(8))
                .unwrap_or(1)
        })
        .max(1);
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build_global();
    match run(cli.command, workers) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("matprod: {e}");
            std::process::exit(exit_code(&e));
        }
    }
}

/// 2 for configuration/parse problems, 3 for numeric failures.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. }
        | Error::Semantic(_)
        | Error::ParameterOutOfRange(_)
        | Error::DimensionMismatch(_, _)
        | Error::Unsupported(_)
        | Error::Io(_) => 2,
        _ => 3,
    }
}

fn write_output(out: Option<PathBuf>, content: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut f = BufWriter::new(File::create(path)?);
            f.write_all(content.as_bytes())?;
            Ok(())
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn parse_point_list(text: &str, per_point: usize) -> Result<Vec<Vec<f64>>, Error> {
    text.split(';')
        .map(|chunk| {
            let vals: Vec<f64> = chunk
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Semantic(format!("bad coordinate '{}'", v.trim())))
                })
                .collect::<Result<_, _>>()?;
            if vals.len() != per_point {
                return Err(Error::Semantic(format!(
                    "point '{chunk}' has {} coordinates, expected {per_point}",
                    vals.len()
                )));
            }
            Ok(vals)
        })
        .collect()
}

fn parse_grid(text: &str) -> Result<Vec<f64>, Error> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() < 3 || parts.len() > 4 {
        return Err(Error::Semantic(format!(
            "grid must be lo:hi:count[:lin|:log], got '{text}'"
        )));
    }
    let lo: f64 = parts[0]
        .parse()
        .map_err(|_| Error::Semantic(format!("bad grid bound '{}'", parts[0])))?;
    let hi: f64 = parts[1]
        .parse()
        .map_err(|_| Error::Semantic(format!("bad grid bound '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| Error::Semantic(format!("bad grid count '{}'", parts[2])))?;
    let log = match parts.get(3).copied().unwrap_or("log") {
        "log" => true,
        "lin" => false,
        other => return Err(Error::Semantic(format!("bad grid mode '{other}'"))),
    };
    if count < 1 || !(hi > lo) || (log && lo <= 0.0) {
        return Err(Error::Semantic(format!("bad grid '{text}'")));
    }
    Ok((0..count)
        .map(|i| {
            let t = if count == 1 {
                0.5
            } else {
                i as f64 / (count - 1) as f64
            };
            if log {
                (lo.ln() + t * (hi.ln() - lo.ln())).exp()
            } else {
                lo + t * (hi - lo)
            }
        })
        .collect())
}

/// Derivative-type ensemble matching a factor's squared-singular-value
/// density; Haar factors contribute nothing and are skipped.
fn factor_ensemble(spec: &FactorSpec) -> Result<Option<Ensemble>, Error> {
    let n = spec.n;
    Ok(match &spec.kind {
        FactorKind::Ginibre => Some(Ensemble::laguerre(n, 0.0)?),
        FactorKind::InverseGinibre => Some(Ensemble::laguerre(n, 0.0)?.invert()?),
        FactorKind::TruncatedUnitary { big_n } => {
            Some(Ensemble::jacobi(n, 0.0, (*big_n - n) as f64)?)
        }
        FactorKind::HaarUnitary => None,
        FactorKind::DiagonalFromJpdf { ensemble, .. } => Some(ensemble.clone()),
    })
}

fn chain_ensemble(specs: &[FactorSpec]) -> Result<Option<Ensemble>, Error> {
    let mut acc: Option<Ensemble> = None;
    for spec in specs {
        if let Some(e) = factor_ensemble(spec)? {
            acc = Some(match acc {
                None => e,
                Some(prev) => prev.compose(&e)?,
            });
        }
    }
    Ok(acc)
}

fn run(cmd: Command, workers: usize) -> Result<(), Error> {
    match cmd {
        Command::DensitySv {
            expr,
            n,
            points,
            tol: _,
            out,
        } => {
            let ens = parse_ensemble(&expr, n)?;
            let pts = parse_point_list(&points, n)?;
            let mut body = String::new();
            let mut header: Vec<String> = (1..=n).map(|j| format!("a_{j}")).collect();
            header.extend(
                ["value", "vandermonde", "weight_det", "normalization", "nonneg"].map(String::from),
            );
            body.push_str(&header.join(","));
            body.push('\n');
            for pt in &pts {
                let r = jpdf_sv(&ens, pt)?;
                let mut row: Vec<String> = pt.iter().map(|v| csv_num(*v)).collect();
                row.push(csv_num(r.value));
                row.push(csv_num(r.vandermonde));
                row.push(csv_num(r.weight_det));
                row.push(csv_num(r.normalization));
                row.push(if r.nonneg { "1".into() } else { "0".into() });
                body.push_str(&row.join(","));
                body.push('\n');
            }
            write_output(out, &body)
        }
        Command::DensityEv {
            expr,
            n,
            points,
            tol: _,
            out,
        } => {
            let ens = parse_ensemble(&expr, n)?;
            let pts = parse_point_list(&points, 2 * n)?;
            let mut body = String::new();
            let mut header = Vec::new();
            for j in 1..=n {
                header.push(format!("re_z{j}"));
                header.push(format!("im_z{j}"));
            }
            header.extend(["value", "nonneg"].map(String::from));
            body.push_str(&header.join(","));
            body.push('\n');
            for pt in &pts {
                let z: Vec<Complex64> = (0..n)
                    .map(|j| Complex64::new(pt[2 * j], pt[2 * j + 1]))
                    .collect();
                let r = jpdf_ev(&ens, &z)?;
                let mut row: Vec<String> = pt.iter().map(|v| csv_num(*v)).collect();
                row.push(csv_num(r.value));
                row.push(if r.nonneg { "1".into() } else { "0".into() });
                body.push_str(&row.join(","));
                body.push('\n');
            }
            write_output(out, &body)
        }
        Command::KernelSv {
            expr,
            n,
            grid,
            tol: _,
            out,
        } => {
            let ens = parse_ensemble(&expr, n)?;
            let sys = BiorthogonalSystem::for_ensemble(&ens)?;
            let xs = parse_grid(&grid)?;
            let mut body = String::from("x,y,kernel\n");
            for x in &xs {
                for y in &xs {
                    let k = sys.kernel_sv(*x, *y)?;
                    body.push_str(&format!("{},{},{}\n", csv_num(*x), csv_num(*y), csv_num(k)));
                }
            }
            write_output(out, &body)
        }
        Command::KernelEv {
            expr,
            n,
            grid,
            tol: _,
            out,
        } => {
            let ens = parse_ensemble(&expr, n)?;
            let rs = parse_grid(&grid)?;
            let mut body = String::from("r,intensity\n");
            for r in &rs {
                let z = Complex64::new(*r, 0.0);
                let k = kernel_ev(&ens, z, z)?;
                body.push_str(&format!("{},{}\n", csv_num(*r), csv_num(k.re)));
            }
            write_output(out, &body)
        }
        Command::InterpScan {
            n,
            p,
            q,
            alphas,
            xn_points,
            tol,
            out,
        } => {
            let alphas: Vec<f64> = alphas
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Semantic(format!("bad alpha '{v}'")))
                })
                .collect::<Result<_, _>>()?;
            let config = ScanConfig {
                alphas,
                xn_points,
                quad_tol: tol,
                ..Default::default()
            };
            let in_region = region_check(n, p, q)?;
            let report = positivity_scan(n, p, q, &config)?;
            let mut obj = JsonObject::new()
                .int("n", n as u64)
                .num("p", p)
                .num("q", q)
                .raw("in_region", in_region.to_string())
                .str(
                    "verdict",
                    match report.verdict {
                        ScanVerdict::NegativeFound => "negative_found",
                        ScanVerdict::NoneFound => "none_found",
                    },
                );
            obj = match &report.witness {
                Some((pt, value)) => obj.arr("witness", pt).num("witness_value", *value),
                None => obj.null("witness").null("witness_value"),
            };
            let json = obj
                .num("min_value", report.min_value)
                .int("points_scanned", report.points_scanned as u64)
                .finish();
            write_output(out, &json)
        }
        Command::Sample {
            factors,
            n,
            draws,
            repeat,
            seed,
            out,
        } => {
            let specs = parse_factor_chain(&factors, n)?;
            let samples: Vec<SpectralSample> =
                run_parallel(draws, seed, workers, |rng, count, _first| {
                    let mut chain = ChainSampler::new(&specs)?;
                    (0..count).map(|_| chain.draw_power(repeat, rng)).collect()
                })?;
            let mut buf = Vec::new();
            write_sample_csv(&mut buf, &samples)?;
            write_output(out, std::str::from_utf8(&buf).expect("csv is utf-8"))
        }
        Command::CompareSv {
            sample,
            expr,
            n,
            out,
        } => {
            let rows = read_sample_csv(BufReader::new(File::open(&sample)?))?;
            if rows.is_empty() {
                return Err(Error::Semantic("sample file has no rows".into()));
            }
            if rows[0].sq_singular_values.len() != n {
                return Err(Error::DimensionMismatch(
                    rows[0].sq_singular_values.len(),
                    n,
                ));
            }
            let mut pooled: Vec<f64> = rows
                .iter()
                .flat_map(|r| {
                    let scale = (2.0 * r.log_scale).exp();
                    r.sq_singular_values.iter().map(move |v| v * scale)
                })
                .collect();
            pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let ens = parse_ensemble(&expr, n)?;
            let ks = marginal_ks(&ens, &pooled)?;
            let json = JsonObject::new()
                .str("expr", &expr)
                .int("n", n as u64)
                .int("samples", pooled.len() as u64)
                .num("ks", ks)
                .finish();
            write_output(out, &json)
        }
        Command::Lyapunov {
            factors,
            n,
            m,
            runs,
            seed,
            out,
        } => {
            let specs = parse_factor_chain(&factors, n)?;
            let symbolic: Option<CltParameters> = match chain_ensemble(&specs)? {
                Some(ens) => Some(clt_params_symbolic(&ens)?),
                None => None,
            };
            let report = exponent_mc(&specs, m, runs, seed, workers, symbolic.as_ref())?;
            let obj = JsonObject::new();
            let obj = match &symbolic {
                Some(p) => obj
                    .arr("m_symbolic", &p.mean)
                    .mat("sigma_symbolic", &p.covariance),
                None => obj.null("m_symbolic").null("sigma_symbolic"),
            };
            let obj = obj
                .arr("m_empirical", &report.lyapunov.mean)
                .mat("sigma_empirical", &report.lyapunov.covariance)
                .arr("ks_normal", &report.lyapunov.ks_normal)
                .int("runs", runs as u64)
                .int("M", m as u64)
                .int("seed", seed)
                // Stability exponents and the reference-standardized KS,
                // beyond the base schema.
                .arr("m_stability", &report.stability.mean)
                .mat("sigma_stability", &report.stability.covariance)
                .arr("ks_normal_stability", &report.stability.ks_normal);
            let obj = match &report.lyapunov.ks_normal_ref {
                Some(k) => obj.arr("ks_normal_ref", k),
                None => obj.null("ks_normal_ref"),
            };
            write_output(out, &obj.finish())
        }
        Command::SphericalCheck {
            expr,
            n,
            s,
            upper,
            tol,
            out,
        } => {
            let ens = parse_ensemble(&expr, n)?;
            let comps = parse_point_list(&s, 2)?;
            if comps.len() != n {
                return Err(Error::Semantic(format!(
                    "need n = {n} components in --s, got {}",
                    comps.len()
                )));
            }
            let sv: Vec<Complex64> = comps.iter().map(|c| Complex64::new(c[0], c[1])).collect();
            let symbolic = spherical_transform(&ens, &sv)?;
            let opts = SphericalQuad {
                upper,
                tol,
                ..Default::default()
            };
            let numeric = spherical_transform_numeric(&ens, &sv, &opts)?;
            let abs_err = (symbolic - numeric).norm();
            let json = JsonObject::new()
                .str("expr", &expr)
                .int("n", n as u64)
                .mat("s", &comps)
                .arr("symbolic", &[symbolic.re, symbolic.im])
                .arr("numeric", &[numeric.re, numeric.im])
                .num("abs_err", abs_err)
                .num("rel_err", abs_err / symbolic.norm().max(1e-300))
                .finish();
            write_output(out, &json)
        }
    }
}

/// KS of pooled squared singular values against K_sv(a, a)/n.
fn marginal_ks(ens: &Ensemble, pooled_sorted: &[f64]) -> Result<f64, Error> {
    let sys = BiorthogonalSystem::for_ensemble(ens)?;
    let lo = pooled_sorted.first().copied().unwrap().max(1e-12) * 0.5;
    let hi = pooled_sorted.last().copied().unwrap() * 2.0;
    let cdf = sys.marginal_cdf(lo, hi, 4000)?;
    Ok(matprod::sampling::ks_statistic(pooled_sorted, |x| {
        cdf.eval(x)
    }))
}
