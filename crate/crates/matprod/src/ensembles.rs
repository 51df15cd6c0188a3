//! Catalog and algebra of polynomial ensembles of derivative type: the
//! named weight families, their Mellin symbols, composition under matrix
//! products, inversion, and pointwise weight evaluation.

use crate::error::{Error, Result};
use crate::mellin::{DecayClass, GammaFactor, GaussFactor, MellinSymbol, Strip};
use crate::quad;
use crate::special::gamma;
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Weight evaluator of a general polynomial ensemble.
pub type WeightFn = Arc<dyn Fn(f64) -> Result<f64> + Send + Sync>;
/// Mellin evaluator M w_j(s) of a general polynomial ensemble.
pub type MellinFn = Arc<dyn Fn(Complex64) -> Result<Complex64> + Send + Sync>;

/// Named weight family with parameters; kept for provenance, printing and
/// closed-form differentiation. The ensemble semantics live in the symbol.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// ω(a) = a^ν e^{−a}; the induced Laguerre (Ginibre for ν = 0) ensemble.
    Laguerre { nu: f64 },
    /// ω(a) = a^ν (1−a)^{μ−1} on (0, 1); induced Jacobi / truncated unitary.
    Jacobi { nu: f64, mu: f64 },
    /// ω(a) = a^ν (1+a)^{−μ−ν−1}.
    CauchyLorentz { nu: f64, mu: f64 },
    /// ω(a) = a^ν exp(−α a^θ).
    MuttalibBorodin { nu: f64, alpha: f64, theta: f64 },
    /// ω(a) = a^{ν′} exp(−α′ (ln a)²); Gaussian measure on GL(n, ℂ).
    LogNormal { nu: f64, alpha: f64 },
    /// Mellin transform Γ^p(s) Γ^q(1+n−s); interpolates Ginibre products.
    Interpolating { p: f64, q: f64 },
    Inverted(Box<Family>),
    Composite(Vec<Family>),
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Laguerre { nu } => write!(f, "laguerre(nu={nu})"),
            Family::Jacobi { nu, mu } => write!(f, "jacobi(nu={nu},mu={mu})"),
            Family::CauchyLorentz { nu, mu } => write!(f, "cauchy(nu={nu},mu={mu})"),
            Family::MuttalibBorodin { nu, alpha, theta } => {
                write!(f, "mb(nu={nu},alpha={alpha},theta={theta})")
            }
            Family::LogNormal { nu, alpha } => write!(f, "lognormal(nu={nu},alpha={alpha})"),
            Family::Interpolating { p, q } => write!(f, "interp(p={p},q={q})"),
            Family::Inverted(inner) => write!(f, "inv({inner})"),
            Family::Composite(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " * ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Weight description of an ensemble.
#[derive(Clone)]
pub enum Kind {
    /// All weights are iterated (−a d/da) derivatives of one ω with the
    /// given Mellin symbol.
    DerivativeType {
        symbol: MellinSymbol,
        family: Option<Family>,
    },
    /// n independent weight evaluators plus their Mellin evaluators.
    General {
        weights: Vec<WeightFn>,
        mellins: Vec<MellinFn>,
    },
}

impl fmt::Debug for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind::DerivativeType { symbol, family } => f
                .debug_struct("DerivativeType")
                .field("symbol", symbol)
                .field("family", family)
                .finish(),
            Kind::General { weights, .. } => f
                .debug_struct("General")
                .field("weights", &weights.len())
                .finish(),
        }
    }
}

/// A polynomial ensemble of n×n matrices.
#[derive(Debug, Clone)]
pub struct Ensemble {
    n: usize,
    kind: Kind,
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange(msg()))
    }
}

/// Mellin symbol of a family's base weight ω for ambient dimension n.
pub fn family_symbol(family: &Family, n: usize) -> Result<MellinSymbol> {
    let g = |weight: f64, scale: f64, shift: f64| GammaFactor { weight, scale, shift };
    match family {
        Family::Laguerre { nu } => {
            check(*nu > -1.0, || format!("laguerre needs nu > -1, got {nu}"))?;
            MellinSymbol::new(
                1.0,
                vec![g(1.0, 1.0, *nu)],
                vec![1.0],
                1.0,
                GaussFactor::default(),
                Strip::new(-nu, f64::INFINITY),
            )
        }
        Family::Jacobi { nu, mu } => {
            check(*nu > -1.0, || format!("jacobi needs nu > -1, got {nu}"))?;
            check(*mu > n as f64 - 1.0, || {
                format!("jacobi needs mu > n-1 = {}, got {mu}", n as f64 - 1.0)
            })?;
            MellinSymbol::new(
                gamma(*mu),
                vec![g(1.0, 1.0, *nu), g(-1.0, 1.0, nu + mu)],
                vec![1.0],
                1.0,
                GaussFactor::default(),
                Strip::new(-nu, f64::INFINITY),
            )
        }
        Family::CauchyLorentz { nu, mu } => {
            check(*nu > -1.0, || format!("cauchy needs nu > -1, got {nu}"))?;
            check(*mu > n as f64 - 1.0, || {
                format!("cauchy needs mu > n-1 = {}, got {mu}", n as f64 - 1.0)
            })?;
            MellinSymbol::new(
                1.0 / gamma(mu + nu + 1.0),
                vec![g(1.0, 1.0, *nu), g(1.0, -1.0, mu + 1.0)],
                vec![1.0],
                1.0,
                GaussFactor::default(),
                Strip::new(-nu, mu + 1.0),
            )
        }
        Family::MuttalibBorodin { nu, alpha, theta } => {
            check(*nu > -1.0, || format!("mb needs nu > -1, got {nu}"))?;
            check(*alpha > 0.0, || format!("mb needs alpha > 0, got {alpha}"))?;
            check(*theta > 0.0, || format!("mb needs theta > 0, got {theta}"))?;
            MellinSymbol::new(
                alpha.powf(-nu / theta) / theta,
                vec![g(1.0, 1.0 / theta, nu / theta)],
                vec![1.0],
                alpha.powf(-1.0 / theta),
                GaussFactor::default(),
                Strip::new(-nu, f64::INFINITY),
            )
        }
        Family::LogNormal { nu, alpha } => {
            check(*alpha > 0.0, || format!("lognormal needs alpha > 0, got {alpha}"))?;
            MellinSymbol::new(
                (std::f64::consts::PI / alpha).sqrt(),
                vec![],
                vec![1.0],
                1.0,
                GaussFactor {
                    quad: 1.0 / (4.0 * alpha),
                    lin: nu / (2.0 * alpha),
                    constant: nu * nu / (4.0 * alpha),
                },
                Strip::ALL,
            )
        }
        Family::Interpolating { p, q } => {
            check(*p >= 0.0 && *q >= 0.0 && p + q > 0.0, || {
                format!("interp needs p, q >= 0 and p+q > 0, got p={p}, q={q}")
            })?;
            let mut gammas = Vec::new();
            if *p > 0.0 {
                gammas.push(g(*p, 1.0, 0.0));
            }
            if *q > 0.0 {
                gammas.push(g(*q, -1.0, (n + 1) as f64));
            }
            // The strip is (0, n+1); a side opens up to ±∞ when the
            // corresponding Gamma block is absent.
            let lo = if *p > 0.0 { 0.0 } else { f64::NEG_INFINITY };
            let hi = if *q > 0.0 { (n + 1) as f64 } else { f64::INFINITY };
            MellinSymbol::new(1.0, gammas, vec![1.0], 1.0, GaussFactor::default(), Strip::new(lo, hi))
        }
        Family::Inverted(inner) => family_symbol(inner, n)?.reflect(n),
        Family::Composite(parts) => {
            check(!parts.is_empty(), || "empty composite".into())?;
            let mut acc = family_symbol(&parts[0], n)?;
            for p in &parts[1..] {
                acc = acc.convolve(&family_symbol(p, n)?)?;
            }
            Ok(acc)
        }
    }
}

impl Ensemble {
    /// Build the derivative-type ensemble of a named family.
    pub fn from_family(n: usize, family: Family) -> Result<Ensemble> {
        check(n >= 1, || "dimension must be >= 1".into())?;
        let symbol = family_symbol(&family, n)?;
        // Membership in the derivative-type class requires the transform
        // on a neighborhood of [1, n].
        if !symbol.strip().covers(1.0 - 1e-12, n as f64 + 1e-12) {
            return Err(Error::ParameterOutOfRange(format!(
                "symbol strip ({}, {}) does not cover [1, {n}]",
                symbol.strip().lo,
                symbol.strip().hi
            )));
        }
        Ok(Ensemble {
            n,
            kind: Kind::DerivativeType {
                symbol,
                family: Some(family),
            },
        })
    }

    pub fn laguerre(n: usize, nu: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::Laguerre { nu })
    }

    pub fn jacobi(n: usize, nu: f64, mu: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::Jacobi { nu, mu })
    }

    pub fn cauchy_lorentz(n: usize, nu: f64, mu: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::CauchyLorentz { nu, mu })
    }

    pub fn muttalib_borodin(n: usize, nu: f64, alpha: f64, theta: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::MuttalibBorodin { nu, alpha, theta })
    }

    pub fn log_normal(n: usize, nu: f64, alpha: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::LogNormal { nu, alpha })
    }

    pub fn interpolating(n: usize, p: f64, q: f64) -> Result<Ensemble> {
        Self::from_family(n, Family::Interpolating { p, q })
    }

    /// Derivative-type ensemble from a raw symbol (no closed forms).
    pub fn from_symbol(n: usize, symbol: MellinSymbol) -> Result<Ensemble> {
        check(n >= 1, || "dimension must be >= 1".into())?;
        if !symbol.strip().covers(1.0 - 1e-12, n as f64 + 1e-12) {
            return Err(Error::ParameterOutOfRange(
                "symbol strip must cover [1, n]".into(),
            ));
        }
        Ok(Ensemble {
            n,
            kind: Kind::DerivativeType { symbol, family: None },
        })
    }

    /// General polynomial ensemble from explicit weight and Mellin evaluators.
    pub fn general(n: usize, weights: Vec<WeightFn>, mellins: Vec<MellinFn>) -> Result<Ensemble> {
        check(weights.len() == n && mellins.len() == n, || {
            format!(
                "need n = {n} weights and mellins, got {} / {}",
                weights.len(),
                mellins.len()
            )
        })?;
        Ok(Ensemble {
            n,
            kind: Kind::General { weights, mellins },
        })
    }

    /// Re-wrap a derivative-type ensemble as a general one, forgetting the
    /// single-ω structure. Used to exercise the general-ensemble code paths
    /// against the structured ones.
    pub fn general_view(&self) -> Result<Ensemble> {
        if !self.is_derivative_type() {
            return Ok(self.clone());
        }
        let n = self.n;
        let mut weights: Vec<WeightFn> = Vec::with_capacity(n);
        let mut mellins: Vec<MellinFn> = Vec::with_capacity(n);
        for j in 0..n {
            let e = self.clone();
            weights.push(Arc::new(move |x| e.weight(j, x)));
            let e = self.clone();
            mellins.push(Arc::new(move |s| e.mellin_weight(j, s)));
        }
        Ensemble::general(n, weights, mellins)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    pub fn is_derivative_type(&self) -> bool {
        matches!(self.kind, Kind::DerivativeType { .. })
    }

    pub fn symbol(&self) -> Option<&MellinSymbol> {
        match &self.kind {
            Kind::DerivativeType { symbol, .. } => Some(symbol),
            Kind::General { .. } => None,
        }
    }

    pub fn family(&self) -> Option<&Family> {
        match &self.kind {
            Kind::DerivativeType { family, .. } => family.as_ref(),
            Kind::General { .. } => None,
        }
    }

    fn require_symbol(&self) -> Result<&MellinSymbol> {
        self.symbol()
            .ok_or_else(|| Error::Unsupported("operation needs a derivative-type ensemble".into()))
    }

    /// Mω(s) for derivative-type ensembles.
    pub fn mellin_omega(&self, s: Complex64) -> Result<Complex64> {
        self.require_symbol()?.eval(s)
    }

    /// Mω(j) at a real point.
    pub fn moment(&self, j: f64) -> Result<f64> {
        self.require_symbol()?.eval_real(j)
    }

    /// M w_k(s): s^k Mω(s) for derivative type, the stored evaluator otherwise.
    pub fn mellin_weight(&self, k: usize, s: Complex64) -> Result<Complex64> {
        match &self.kind {
            Kind::DerivativeType { symbol, .. } => Ok(symbol.eval(s)? * s.powu(k as u32)),
            Kind::General { mellins, .. } => {
                check(k < self.n, || format!("weight index {k} out of range"))?;
                mellins[k](s)
            }
        }
    }

    /// w_k(x) = (−x d/dx)^k ω(x), by exact closed-form differentiation when
    /// the family provides it, otherwise by contour inversion of s^k Mω(s).
    pub fn weight(&self, k: usize, x: f64) -> Result<f64> {
        self.weight_with(k, x, 1e-8)
    }

    pub fn weight_with(&self, k: usize, x: f64, tol: f64) -> Result<f64> {
        check(x >= 0.0, || format!("weights are defined on x ≥ 0, got {x}"))?;
        match &self.kind {
            Kind::General { weights, .. } => {
                check(k < self.n, || format!("weight index {k} out of range"))?;
                weights[k](x)
            }
            Kind::DerivativeType { symbol, family } => {
                if let Some(f) = family {
                    if let Some(v) = closed_weight(f, self.n, k, x) {
                        return Ok(v);
                    }
                }
                check(x > 0.0, || "contour inversion needs x > 0".to_string())?;
                symbol.derivative(k).inverse_mellin(x, tol)
            }
        }
    }

    /// The base weight ω itself.
    pub fn omega(&self, x: f64) -> Result<f64> {
        self.weight(0, x)
    }

    /// Ensemble of the product X₁X₂ of independent draws; both derivative
    /// type gives a derivative-type result with the convolved symbol, one
    /// general factor gives a general ensemble with weights ω ⊛ w_j.
    pub fn compose(&self, other: &Ensemble) -> Result<Ensemble> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch(self.n, other.n));
        }
        match (&self.kind, &other.kind) {
            (
                Kind::DerivativeType { symbol: s1, family: f1 },
                Kind::DerivativeType { symbol: s2, family: f2 },
            ) => Ok(Ensemble {
                n: self.n,
                kind: Kind::DerivativeType {
                    symbol: s1.convolve(s2)?,
                    family: merge_families(f1.as_ref(), f2.as_ref()),
                },
            }),
            (Kind::DerivativeType { .. }, Kind::General { .. }) => compose_mixed(self, other),
            (Kind::General { .. }, Kind::DerivativeType { .. }) => compose_mixed(other, self),
            (Kind::General { .. }, Kind::General { .. }) => Err(Error::Unsupported(
                "composition needs at least one derivative-type factor".into(),
            )),
        }
    }

    /// Ensemble of X^{−1}: the reflected symbol, weight ω̃(a) = ω(1/a) a^{−n−1}.
    pub fn invert(&self) -> Result<Ensemble> {
        let symbol = self.require_symbol()?.reflect(self.n)?;
        let family = match &self.kind {
            Kind::DerivativeType { family, .. } => family.as_ref().map(invert_family),
            _ => unreachable!(),
        };
        Ok(Ensemble {
            n: self.n,
            kind: Kind::DerivativeType { symbol, family },
        })
    }

    /// Strip coverage, decay class, contour feasibility and weight mass
    /// estimates: everything needed to predict whether the density and
    /// kernel formulas are usable for this ensemble.
    pub fn validate(&self, need: (f64, f64)) -> Diagnostics {
        let n = self.n;
        match &self.kind {
            Kind::General { weights, .. } => {
                let mass = weights
                    .iter()
                    .map(|w| weight_mass(|x| w(x).unwrap_or(f64::NAN)))
                    .collect();
                Diagnostics {
                    strip: None,
                    required: need,
                    strip_ok: true,
                    decay: None,
                    contour_ok: vec![true; n],
                    weight_mass: mass,
                    advice: None,
                }
            }
            Kind::DerivativeType { symbol, family } => {
                let strip = symbol.strip();
                let strip_ok = strip.covers(need.0, need.1);
                let c = 0.5 * (need.0 + need.1);
                let decay = symbol.decay_class(c);
                let contour_ok: Vec<bool> = (0..n)
                    .map(|k| symbol.derivative(k).truncation_width(c, 1e-8).is_ok())
                    .collect();
                let has_closed =
                    family.as_ref().is_some_and(|f| closed_weight(f, n, 0, 0.5).is_some());
                let advice = if contour_ok.iter().any(|ok| !ok) {
                    Some(if has_closed {
                        "contour inversion infeasible for some w_k; closed-form differentiation is used instead".to_string()
                    } else {
                        "contour inversion infeasible for some w_k and no closed form is available"
                            .to_string()
                    })
                } else {
                    None
                };
                let mass = (0..n)
                    .map(|k| weight_mass(|x| self.weight(k, x).unwrap_or(f64::NAN)))
                    .collect();
                Diagnostics {
                    strip: Some((strip.lo, strip.hi)),
                    required: need,
                    strip_ok,
                    decay: Some(decay),
                    contour_ok,
                    weight_mass: mass,
                    advice,
                }
            }
        }
    }
}

/// Validation report; informational only.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub strip: Option<(f64, f64)>,
    pub required: (f64, f64),
    pub strip_ok: bool,
    pub decay: Option<DecayClass>,
    /// Per-k feasibility of computing w_k by contour inversion.
    pub contour_ok: Vec<bool>,
    /// Quadrature estimates of ∫ |w_k|; None when the estimate failed.
    pub weight_mass: Vec<Option<f64>>,
    pub advice: Option<String>,
}

impl Diagnostics {
    pub fn pass(&self) -> bool {
        self.strip_ok && self.weight_mass.iter().all(|m| m.is_some())
    }
}

fn weight_mass<F: Fn(f64) -> f64>(w: F) -> Option<f64> {
    // ∫ |w| dx in log coordinates over a generous window.
    let v = quad::adaptive_complex_with(-20.0, 20.0, 1e-6, 5, 12, &mut |u: f64| {
        let x = u.exp();
        Complex64::new(w(x).abs() * x, 0.0)
    })
    .ok()?;
    v.re.is_finite().then_some(v.re)
}

fn merge_families(a: Option<&Family>, b: Option<&Family>) -> Option<Family> {
    let (a, b) = (a?, b?);
    if let (Family::Interpolating { p: p1, q: q1 }, Family::Interpolating { p: p2, q: q2 }) = (a, b)
    {
        return Some(Family::Interpolating {
            p: p1 + p2,
            q: q1 + q2,
        });
    }
    let mut parts = Vec::new();
    let mut push = |f: &Family| match f {
        Family::Composite(inner) => parts.extend(inner.iter().cloned()),
        other => parts.push(other.clone()),
    };
    push(a);
    push(b);
    Some(Family::Composite(parts))
}

fn invert_family(f: &Family) -> Family {
    match f {
        Family::Inverted(inner) => (**inner).clone(),
        Family::Interpolating { p, q } => Family::Interpolating { p: *q, q: *p },
        Family::Composite(parts) => Family::Composite(parts.iter().map(invert_family).collect()),
        other => Family::Inverted(Box::new(other.clone())),
    }
}

fn compose_mixed(deriv: &Ensemble, general: &Ensemble) -> Result<Ensemble> {
    let n = deriv.n();
    let (g_weights, g_mellins) = match general.kind() {
        Kind::General { weights, mellins } => (weights.clone(), mellins.clone()),
        _ => unreachable!(),
    };
    let mut weights: Vec<WeightFn> = Vec::with_capacity(n);
    let mut mellins: Vec<MellinFn> = Vec::with_capacity(n);
    for j in 0..n {
        let omega = deriv.clone();
        let wj = g_weights[j].clone();
        weights.push(Arc::new(move |x| {
            multiplicative_convolution(|t| omega.omega(t), |t| wj(t), x, 1e-7)
        }));
        let sym = deriv.require_symbol()?.clone();
        let mj = g_mellins[j].clone();
        mellins.push(Arc::new(move |s| Ok(sym.eval(s)? * mj(s)?)));
    }
    Ensemble::general(n, weights, mellins)
}

/// (f ⊛ g)(x) = ∫ f(t) g(x/t) dt/t by adaptive panels in log coordinates.
pub fn multiplicative_convolution<F, G>(f: F, g: G, x: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    check(x > 0.0, || format!("convolution needs x > 0, got {x}"))?;
    let v = quad::adaptive_complex_with(-46.0, 46.0, tol, 5, 13, &mut |u: f64| {
        let t = u.exp();
        let a = f(t).unwrap_or(0.0);
        if a == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let b = g(x / t).unwrap_or(0.0);
        Complex64::new(a * b, 0.0)
    })?;
    Ok(v.re)
}

/// g_q(y): density of the q-fold additive convolution of the Gumbel law,
/// via the vertical-line integral of Γ^q(1+s) e^{ys}.
pub fn gumbel_density(q: f64, y: f64, tol: f64) -> Result<f64> {
    check(q > 0.0, || format!("gumbel power must be positive, got {q}"))?;
    // With x = e^{−y} this is the inverse Mellin transform of Γ^q(1+s).
    let symbol = MellinSymbol::new(
        1.0,
        vec![GammaFactor {
            weight: q,
            scale: 1.0,
            shift: 1.0,
        }],
        vec![1.0],
        1.0,
        GaussFactor::default(),
        Strip::new(-1.0, f64::INFINITY),
    )?;
    symbol.inverse_mellin((-y).exp(), tol)
}

// ---------------------------------------------------------------------------
// Closed-form differentiation.
//
// For the three classical families the weights w_k = (−x d/dx)^k ω stay in
// a (polynomial × elementary) class, and the polynomial obeys an exact
// recurrence. This sidesteps the slowly decaying contours of the Jacobi
// family and provides oracle-grade values everywhere else.
// ---------------------------------------------------------------------------

fn closed_weight(family: &Family, n: usize, k: usize, x: f64) -> Option<f64> {
    match family {
        Family::Laguerre { nu } => Some(laguerre_weight(*nu, k, x)),
        Family::Jacobi { nu, mu } => Some(jacobi_weight(*nu, *mu, k, x)),
        Family::CauchyLorentz { nu, mu } => Some(cauchy_weight(*nu, *mu, k, x)),
        Family::Inverted(inner) => inverted_weight(inner, n, k, x),
        _ => None,
    }
}

/// w̃_k(a) = a^{−(n+1)} Σ_j C(k,j) (n+1)^{k−j} (−1)^j w_j(1/a), from
/// (−a d/da) acting on ω(1/a) a^{−n−1}.
fn inverted_weight(inner: &Family, n: usize, k: usize, x: f64) -> Option<f64> {
    let m = (n + 1) as f64;
    let mut acc = 0.0;
    let mut binom = 1.0;
    for j in 0..=k {
        let wj = closed_weight(inner, n, j, 1.0 / x)?;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        acc += binom * m.powi((k - j) as i32) * sign * wj;
        binom *= (k - j) as f64 / (j + 1) as f64;
    }
    Some(acc * x.powf(-m))
}

fn poly_val(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Laguerre: w_k = P_k(x) x^ν e^{−x}, P_{k+1} = xP − xP′ − νP.
fn laguerre_weight(nu: f64, k: usize, x: f64) -> f64 {
    let mut p = vec![1.0];
    for _ in 0..k {
        let mut next = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            next[i + 1] += c; // x·P
            next[i] -= i as f64 * c; // −x·P′
            next[i] -= nu * c; // −ν·P
        }
        p = next;
    }
    poly_val(&p, x) * x.powf(nu) * (-x).exp()
}

/// Jacobi: w_k = P_k(x) x^ν (1−x)^{μ−1−k} on (0, 1), with
/// P_{k+1} = (1−x)(−xP′ − νP) + (μ−1−k) x P.
fn jacobi_weight(nu: f64, mu: f64, k: usize, x: f64) -> f64 {
    if x >= 1.0 {
        return 0.0;
    }
    let mut p = vec![1.0];
    for step in 0..k {
        let m = mu - 1.0 - step as f64;
        let mut next = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            let a = -(i as f64) - nu;
            next[i] += a * c;
            next[i + 1] += (-a + m) * c;
        }
        p = next;
    }
    poly_val(&p, x) * x.powf(nu) * (1.0 - x).powf(mu - 1.0 - k as f64)
}

/// Cauchy-Lorentz: w_k = P_k(x) x^ν (1+x)^{−μ−ν−1−k}, with
/// P_{k+1} = (1+x)(−xP′ − νP) + (μ+ν+1+k) x P.
fn cauchy_weight(nu: f64, mu: f64, k: usize, x: f64) -> f64 {
    let mut p = vec![1.0];
    for step in 0..k {
        let m = mu + nu + 1.0 + step as f64;
        let mut next = vec![0.0; p.len() + 1];
        for (i, c) in p.iter().enumerate() {
            let a = -(i as f64) - nu;
            next[i] += a * c;
            next[i + 1] += (a + m) * c;
        }
        p = next;
    }
    poly_val(&p, x) * x.powf(nu) * (1.0 + x).powf(-mu - nu - 1.0 - k as f64)
}

/// l-th biorthogonal numerator ∂_x^l[(−x)^l ω(x)] in closed form, when the
/// family admits one. Shared with the kernels module.
pub(crate) fn closed_q_numerator(family: &Family, l: usize, x: f64) -> Option<f64> {
    match family {
        Family::Laguerre { nu } => {
            // f = P x^ν e^{−x}; d/dx: P ← P′ + νP/x − P, valuation stays ≥ 0.
            if x <= 0.0 {
                return Some(0.0);
            }
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let mut p = vec![0.0; l + 1];
            p[l] = sign;
            for _ in 0..l {
                let mut next = vec![0.0; p.len()];
                for i in 0..p.len() {
                    let hi = if i + 1 < p.len() { p[i + 1] } else { 0.0 };
                    next[i] = (i as f64 + 1.0) * hi + nu * hi - p[i];
                }
                p = next;
            }
            Some(poly_val(&p, x) * x.powf(*nu) * (-x).exp())
        }
        Family::Jacobi { nu, mu } => {
            // f = P x^κ (1−x)^m; d/dx lowers both exponents:
            // P ← [ (i+κ)P[i] − (i−1+κ+m)P[i−1] ].
            if x >= 1.0 || x <= 0.0 {
                return Some(0.0);
            }
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let mut p = vec![sign];
            let mut kappa = nu + l as f64;
            let mut m = mu - 1.0;
            for _ in 0..l {
                let mut next = vec![0.0; p.len() + 1];
                for (i, c) in p.iter().enumerate() {
                    next[i] += (i as f64 + kappa) * c;
                    next[i + 1] -= (i as f64 + kappa + m) * c;
                }
                kappa -= 1.0;
                m -= 1.0;
                p = next;
            }
            Some(poly_val(&p, x) * x.powf(kappa) * (1.0 - x).powf(m))
        }
        Family::CauchyLorentz { nu, mu } => {
            if x <= 0.0 {
                return Some(0.0);
            }
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let mut p = vec![sign];
            let mut kappa = nu + l as f64;
            let mut m = mu + nu + 1.0;
            for _ in 0..l {
                let mut next = vec![0.0; p.len() + 1];
                for (i, c) in p.iter().enumerate() {
                    next[i] += (i as f64 + kappa) * c;
                    next[i + 1] += (i as f64 + kappa - m) * c;
                }
                kappa -= 1.0;
                m += 1.0;
                p = next;
            }
            Some(poly_val(&p, x) * x.powf(kappa) * (1.0 + x).powf(-m))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const E_INV: f64 = 0.36787944117144233;

    #[test]
    fn muttalib_borodin_reduces_to_laguerre_at_theta_one() {
        let mb = Ensemble::muttalib_borodin(2, 0.5, 1.0, 1.0).unwrap();
        let lag = Ensemble::laguerre(2, 0.5).unwrap();
        assert!(mb.symbol().unwrap().approx_eq(lag.symbol().unwrap(), 1e-14));
    }

    #[test]
    fn interpolating_p1_is_exponential_weight() {
        let e = Ensemble::interpolating(3, 1.0, 0.0).unwrap();
        let v = e.weight(0, 1.0).unwrap();
        assert!((v - E_INV).abs() < 1e-8);
    }

    #[test]
    fn jacobi_symbol_value() {
        let e = Ensemble::jacobi(2, 0.0, 3.0).unwrap();
        // Γ(2)Γ(3)/Γ(5) = 1/12
        let v = e.moment(2.0).unwrap();
        assert!((v - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_weights_closed_form() {
        let e = Ensemble::laguerre(2, 0.0).unwrap();
        assert!((e.weight(0, 1.0).unwrap() - E_INV).abs() < 1e-15);
        assert!((e.weight(1, 2.0).unwrap() - 2.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn jacobi_weight_hand_value() {
        // (−x d/dx)(1−x)² at 1/2 is 2x(1−x) = 1/2.
        let e = Ensemble::jacobi(2, 0.0, 3.0).unwrap();
        assert!((e.weight(1, 0.5).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(e.weight(1, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn compose_interpolating_semigroup() {
        let a = Ensemble::interpolating(2, 1.0, 0.0).unwrap();
        let c = a.compose(&a).unwrap();
        let direct = Ensemble::interpolating(2, 2.0, 0.0).unwrap();
        assert!(c.symbol().unwrap().approx_eq(direct.symbol().unwrap(), 1e-14));
        assert_eq!(c.family(), Some(&Family::Interpolating { p: 2.0, q: 0.0 }));
    }

    #[test]
    fn compose_commutes_at_symbol_level() {
        let a = Ensemble::laguerre(2, 0.3).unwrap();
        let b = Ensemble::jacobi(2, 0.0, 4.0).unwrap();
        let ab = a.compose(&b).unwrap();
        let ba = b.compose(&a).unwrap();
        assert!(ab.symbol().unwrap().approx_eq(ba.symbol().unwrap(), 1e-14));
        // Laguerre(0) ∘ Jacobi(0, 3) at s = 2: Γ(2)·(1/12).
        let c = Ensemble::laguerre(2, 0.0)
            .unwrap()
            .compose(&Ensemble::jacobi(2, 0.0, 3.0).unwrap())
            .unwrap();
        assert!((c.moment(2.0).unwrap() - 1.0 / 12.0).abs() < 1e-14);
    }

    #[test]
    fn compose_associates_at_symbol_level() {
        let a = Ensemble::laguerre(2, 0.0).unwrap();
        let b = Ensemble::jacobi(2, 0.5, 3.5).unwrap();
        let c = Ensemble::log_normal(2, 0.1, 2.0).unwrap();
        let left = a.compose(&b).unwrap().compose(&c).unwrap();
        let right = a.compose(&b.compose(&c).unwrap()).unwrap();
        assert!(left.symbol().unwrap().approx_eq(right.symbol().unwrap(), 1e-14));
    }

    #[test]
    fn invert_involution_and_interp_swap() {
        let e = Ensemble::laguerre(2, 0.7).unwrap();
        let back = e.invert().unwrap().invert().unwrap();
        assert!(back.symbol().unwrap().approx_eq(e.symbol().unwrap(), 1e-13));
        assert_eq!(back.family(), Some(&Family::Laguerre { nu: 0.7 }));

        let i = Ensemble::interpolating(2, 1.5, 0.0).unwrap().invert().unwrap();
        let direct = Ensemble::interpolating(2, 0.0, 1.5).unwrap();
        assert!(i.symbol().unwrap().approx_eq(direct.symbol().unwrap(), 1e-14));
    }

    #[test]
    fn inverted_laguerre_weight() {
        // ω̃(1) = ω(1)·1 = e^{−1} for n = 2.
        let e = Ensemble::laguerre(2, 0.0).unwrap().invert().unwrap();
        assert!((e.weight(0, 1.0).unwrap() - E_INV).abs() < 1e-13);
        // Cross-check the closed form against the contour route.
        let sym = e.symbol().unwrap();
        for &x in &[0.3, 1.0, 2.5] {
            for k in 0..2 {
                let closed = e.weight(k, x).unwrap();
                let contour = sym.derivative(k).inverse_mellin(x, 1e-10).unwrap();
                assert!(
                    (closed - contour).abs() <= 1e-7 * closed.abs().max(1e-10),
                    "k={k} x={x}: {closed} vs {contour}"
                );
            }
        }
    }

    #[test]
    fn lognormal_closed_under_convolution() {
        let a = Ensemble::log_normal(2, 0.4, 1.5).unwrap();
        let b = Ensemble::log_normal(2, -0.3, 0.7).unwrap();
        let c = a.compose(&b).unwrap();
        let g = c.symbol().unwrap().gauss_factor();
        let alpha12 = 1.0 / (1.0 / 1.5 + 1.0 / 0.7);
        let nu12 = alpha12 * (0.4 / 1.5 + -0.3 / 0.7);
        assert!((g.quad - 1.0 / (4.0 * alpha12)).abs() < 1e-14);
        assert!((g.lin - nu12 / (2.0 * alpha12)).abs() < 1e-14);
    }

    #[test]
    fn weight_chain_matches_finite_differences() {
        let cases: Vec<Ensemble> = vec![
            Ensemble::laguerre(3, 0.5).unwrap(),
            Ensemble::jacobi(3, 0.0, 4.0).unwrap(),
            Ensemble::cauchy_lorentz(3, 0.0, 5.0).unwrap(),
            Ensemble::muttalib_borodin(3, 0.0, 1.0, 2.0).unwrap(),
            Ensemble::log_normal(3, 0.0, 1.0).unwrap(),
        ];
        for e in &cases {
            for k in 0..e.n() - 1 {
                for &x in &[0.1, 0.7, 2.0, 5.0] {
                    if matches!(e.family(), Some(Family::Jacobi { .. })) && x >= 1.0 {
                        continue;
                    }
                    let h = 1e-5 * x;
                    let fd = -(x) * (e.weight(k, x + h).unwrap() - e.weight(k, x - h).unwrap())
                        / (2.0 * h);
                    let v = e.weight(k + 1, x).unwrap();
                    assert!(
                        (v - fd).abs() <= 1e-4 * v.abs().max(1e-8),
                        "{:?} k={k} x={x}: {v} vs {fd}",
                        e.family()
                    );
                }
            }
        }
    }

    #[test]
    fn interpolating_weight_positive_on_log_grid() {
        // With q > 0 the right tail is algebraic, so the 50-point grid on
        // [1e-3, 1e3] stays within f64 range.
        for (p, q) in [(0.5, 0.5), (1.3, 0.7)] {
            let e = Ensemble::interpolating(2, p, q).unwrap();
            for i in 0..50 {
                let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
                let v = e.weight(0, x).unwrap();
                assert!(v > 0.0, "w^({p},{q})({x}) = {v}");
            }
        }
        // Pure-p weights decay like exp(−p x^{1/p}); past x ≈ 30 the p = 0.5
        // values drop below f64 range and underflow to an honest 0.
        let e = Ensemble::interpolating(2, 0.5, 0.0).unwrap();
        for i in 0..50 {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 49.0);
            let v = e.weight(0, x).unwrap();
            if x < 30.0 {
                assert!(v > 0.0, "w^(0.5,0)({x}) = {v}");
            } else {
                assert!(v >= 0.0, "w^(0.5,0)({x}) = {v}");
            }
        }
    }

    #[test]
    fn gumbel_values() {
        assert!((gumbel_density(1.0, 0.0, 1e-9).unwrap() - E_INV).abs() < 1e-8);
        let g11 = (-1.0f64 - (-1.0f64).exp()).exp();
        assert!((gumbel_density(1.0, 1.0, 1e-9).unwrap() - g11).abs() < 1e-8);
        // g_2(0) = h_2(1) = 2K₀(2)
        assert!((gumbel_density(2.0, 0.0, 1e-9).unwrap() - 0.22778774549906687).abs() < 1e-8);
    }

    #[test]
    fn gumbel_matches_h_relation() {
        // g_q(y) = h_q(e^{−y}) e^{−y} with h_q from the Γ^q(s) symbol.
        let sym = family_symbol(&Family::Interpolating { p: 1.7, q: 0.0 }, 1).unwrap();
        for &y in &[-1.0, 0.0, 0.5, 2.0] {
            let lhs = gumbel_density(1.7, y, 1e-9).unwrap();
            let x = (-y as f64).exp();
            let rhs = sym.inverse_mellin(x, 1e-9).unwrap() * x;
            assert!((lhs - rhs).abs() <= 1e-7 * rhs.abs(), "y={y}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn validate_reports_strip_and_decay() {
        let lag = Ensemble::laguerre(2, 0.0).unwrap();
        let d = lag.validate((1.0, 3.0));
        assert!(d.strip_ok);
        assert!(matches!(d.decay, Some(DecayClass::Exponential { .. })));
        assert!(d.pass());

        let ln = Ensemble::log_normal(2, 0.0, 1.0).unwrap();
        let d = ln.validate((1.0, 3.0));
        assert!(d.strip_ok);
        assert!(matches!(d.decay, Some(DecayClass::Gaussian { .. })));

        // Jacobi with small μ: the k = 2 contour decays like |t|^{−2.5+2}.
        let j = Ensemble::jacobi(3, 0.0, 2.5).unwrap();
        let d = j.validate((1.0, 3.0));
        assert!(!d.contour_ok[2]);
        assert!(d.advice.as_deref().unwrap_or("").contains("closed-form"));
    }

    #[test]
    fn parameter_ranges_enforced() {
        assert!(Ensemble::laguerre(2, -1.0).is_err());
        assert!(Ensemble::jacobi(3, 0.0, 2.0).is_err()); // needs mu > 2
        assert!(Ensemble::interpolating(2, 0.0, 0.0).is_err());
        assert!(Ensemble::muttalib_borodin(2, 0.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn general_view_roundtrip() {
        let e = Ensemble::jacobi(2, 0.0, 4.0).unwrap();
        let g = e.general_view().unwrap();
        assert!(!g.is_derivative_type());
        for k in 0..2 {
            let x = 0.4;
            assert!((g.weight(k, x).unwrap() - e.weight(k, x).unwrap()).abs() < 1e-14);
        }
        let s = Complex64::new(2.0, 0.5);
        let a = g.mellin_weight(1, s).unwrap();
        let b = e.mellin_weight(1, s).unwrap();
        assert!((a - b).norm() < 1e-13 * b.norm());
    }

    #[test]
    fn display_is_expression_grammar() {
        let f = Family::Composite(vec![
            Family::Laguerre { nu: 0.0 },
            Family::Inverted(Box::new(Family::Jacobi { nu: 0.0, mu: 5.0 })),
        ]);
        assert_eq!(f.to_string(), "laguerre(nu=0) * inv(jacobi(nu=0,mu=5))");
    }
}
