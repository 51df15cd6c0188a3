//! Exact symbol algebra for Mellin transforms, plus numerical forward and
//! inverse transforms by vertical-line contour quadrature.
//!
//! A [`MellinSymbol`] represents a transform of the factored form
//!
//! ```text
//!   M(s) = prefactor · ρ^s · poly(s) · exp(A s² + B s + C) · Π_i Γ(β_i s + γ_i)^{p_i}
//! ```
//!
//! on an open vertical strip. The weight functions of every catalog
//! ensemble live in this class, and multiplicative convolution, the
//! (−x d/dx) derivative, and matrix inversion act on it exactly.

use crate::error::{Error, Result};
use crate::quad;
use crate::special::{digamma, ln_gamma_complex, trigamma};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One factor Γ(scale·s + shift)^weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaFactor {
    pub weight: f64,
    pub scale: f64,
    pub shift: f64,
}

/// Factor exp(quad·s² + lin·s + constant), quad ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct GaussFactor {
    pub quad: f64,
    pub lin: f64,
    pub constant: f64,
}

/// Open interval of abscissas on which the symbol is defined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Strip {
    pub lo: f64,
    pub hi: f64,
}

impl Strip {
    pub const ALL: Strip = Strip {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Strip { lo, hi }
    }

    pub fn contains(&self, c: f64) -> bool {
        self.lo < c && c < self.hi
    }

    /// Does the strip contain the closed interval [a, b]?
    pub fn covers(&self, a: f64, b: f64) -> bool {
        self.lo < a && b < self.hi
    }

    pub fn intersect(&self, other: &Strip) -> Option<Strip> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo < hi).then_some(Strip { lo, hi })
    }

    pub fn midpoint(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 1.0,
        }
    }
}

/// Decay of |M(c + it)| as |t| → ∞, from the Stirling bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DecayClass {
    /// exp(−A t²) with A > 0.
    Gaussian { rate: f64 },
    /// exp(−E |t|) with E = (π/2) Σ p_i |β_i| > 0.
    Exponential { rate: f64 },
    /// |t|^P with P < 0.
    Polynomial { exponent: f64 },
    /// No decay; inversion is not possible.
    None,
}

/// Options for [`MellinSymbol::inverse_mellin_with`].
#[derive(Debug, Clone, Copy)]
pub struct InversionOptions {
    /// Relative quadrature target.
    pub tol: f64,
    /// Fixed contour abscissa; `None` selects the envelope minimizer.
    pub abscissa: Option<f64>,
    /// Ambient matrix dimension, used only to clamp the fallback abscissa.
    pub ambient_dim: Option<usize>,
}

impl Default for InversionOptions {
    fn default() -> Self {
        InversionOptions {
            tol: 1e-8,
            abscissa: None,
            ambient_dim: None,
        }
    }
}

/// Exact factored representation of a Mellin transform on a strip.
#[derive(Debug, Clone)]
pub struct MellinSymbol {
    prefactor: f64,
    gammas: Vec<GammaFactor>,
    poly: Vec<f64>,
    geo: f64,
    gauss: GaussFactor,
    strip: Strip,
}

fn is_integer(p: f64) -> bool {
    p.fract() == 0.0
}

fn trim_poly(mut poly: Vec<f64>) -> Vec<f64> {
    while poly.len() > 1 && poly.last() == Some(&0.0) {
        poly.pop();
    }
    if poly.is_empty() {
        poly.push(1.0);
    }
    poly
}

fn poly_eval(poly: &[f64], s: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for c in poly.iter().rev() {
        acc = acc * s + Complex64::new(*c, 0.0);
    }
    acc
}

fn poly_eval_real(poly: &[f64], c: f64) -> f64 {
    poly.iter().rev().fold(0.0, |acc, k| acc * c + k)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim_poly(out)
}

/// Monotone upper envelope Σ |c_j| max(|c|, 1)^j, used so polynomial zeros
/// do not punch spurious dips into the saddle search.
fn poly_envelope(poly: &[f64], c: f64) -> f64 {
    let base = c.abs().max(1.0);
    let mut acc = 0.0;
    let mut pw = 1.0;
    for k in poly {
        acc += k.abs() * pw;
        pw *= base;
    }
    acc.max(f64::MIN_POSITIVE)
}

impl MellinSymbol {
    /// Build a symbol, enforcing the representation invariants.
    pub fn new(
        prefactor: f64,
        gammas: Vec<GammaFactor>,
        poly: Vec<f64>,
        geo: f64,
        gauss: GaussFactor,
        strip: Strip,
    ) -> Result<Self> {
        if !(prefactor.is_finite() && prefactor > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "prefactor must be a positive real, got {prefactor}"
            )));
        }
        if !(geo.is_finite() && geo > 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "geometric base must be positive, got {geo}"
            )));
        }
        if !(gauss.quad >= 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "gaussian quadratic coefficient must be ≥ 0, got {}",
                gauss.quad
            )));
        }
        if !(strip.lo < strip.hi) {
            return Err(Error::ParameterOutOfRange(format!(
                "empty strip ({}, {})",
                strip.lo, strip.hi
            )));
        }
        // Merge factors sharing (scale, shift); drop zero weights.
        let mut merged: Vec<GammaFactor> = Vec::with_capacity(gammas.len());
        for g in gammas {
            if g.scale == 0.0 || !g.scale.is_finite() || !g.shift.is_finite() || !g.weight.is_finite() {
                return Err(Error::ParameterOutOfRange(format!("bad gamma factor {g:?}")));
            }
            match merged.iter_mut().find(|m| m.scale == g.scale && m.shift == g.shift) {
                Some(m) => m.weight += g.weight,
                None => merged.push(g),
            }
        }
        merged.retain(|g| g.weight != 0.0);
        merged.sort_by(|a, b| {
            (a.scale, a.shift)
                .partial_cmp(&(b.scale, b.shift))
                .unwrap()
        });
        // Fractional powers need a positive Gamma argument on the strip.
        for g in &merged {
            if !is_integer(g.weight) {
                let edge = if g.scale > 0.0 {
                    g.scale * strip.lo + g.shift
                } else {
                    g.scale * strip.hi + g.shift
                };
                if !(edge >= 0.0) {
                    return Err(Error::BranchError {
                        re: edge,
                        im: 0.0,
                        power: g.weight,
                    });
                }
            }
        }
        Ok(MellinSymbol {
            prefactor,
            gammas: merged,
            poly: trim_poly(poly),
            geo,
            gauss,
            strip,
        })
    }

    /// Identity element of multiplicative convolution: constant 1 on ℝ.
    pub fn unit() -> Self {
        MellinSymbol {
            prefactor: 1.0,
            gammas: Vec::new(),
            poly: vec![1.0],
            geo: 1.0,
            gauss: GaussFactor::default(),
            strip: Strip::ALL,
        }
    }

    pub fn strip(&self) -> Strip {
        self.strip
    }

    pub fn gamma_factors(&self) -> &[GammaFactor] {
        &self.gammas
    }

    pub fn poly_coeffs(&self) -> &[f64] {
        &self.poly
    }

    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    pub fn geo_base(&self) -> f64 {
        self.geo
    }

    pub fn gauss_factor(&self) -> GaussFactor {
        self.gauss
    }

    fn check_strip(&self, re: f64) -> Result<()> {
        if self.strip.contains(re) {
            Ok(())
        } else {
            Err(Error::StripViolation {
                re,
                lo: self.strip.lo,
                hi: self.strip.hi,
            })
        }
    }

    /// Complex log of everything except the polynomial factor, plus the
    /// polynomial value. `exp(log) · poly` is the symbol value; keeping the
    /// two apart makes saddle-shifted contours overflow-free.
    fn log_parts(&self, s: Complex64) -> Result<(Complex64, Complex64)> {
        let mut lg = Complex64::new(self.prefactor.ln(), 0.0) + s * self.geo.ln();
        lg += s * s * self.gauss.quad + s * self.gauss.lin + self.gauss.constant;
        for g in &self.gammas {
            let arg = s * g.scale + Complex64::new(g.shift, 0.0);
            if !is_integer(g.weight) && arg.re <= 0.0 {
                return Err(Error::BranchError {
                    re: arg.re,
                    im: arg.im,
                    power: g.weight,
                });
            }
            lg += g.weight * ln_gamma_complex(arg);
        }
        Ok((lg, poly_eval(&self.poly, s)))
    }

    /// Evaluate the represented transform at `s`.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        self.check_strip(s.re)?;
        let (lg, poly) = self.log_parts(s)?;
        Ok(lg.exp() * poly)
    }

    /// Evaluate at a real point, checking the imaginary part is noise.
    pub fn eval_real(&self, c: f64) -> Result<f64> {
        let v = self.eval(Complex64::new(c, 0.0))?;
        Ok(v.re)
    }

    /// Factor-wise product; the strip is the intersection.
    pub fn convolve(&self, other: &MellinSymbol) -> Result<MellinSymbol> {
        let strip = self.strip.intersect(&other.strip).ok_or(Error::EmptyStrip(
            self.strip.lo,
            self.strip.hi,
            other.strip.lo,
            other.strip.hi,
        ))?;
        let mut gammas = self.gammas.clone();
        gammas.extend_from_slice(&other.gammas);
        MellinSymbol::new(
            self.prefactor * other.prefactor,
            gammas,
            poly_mul(&self.poly, &other.poly),
            self.geo * other.geo,
            GaussFactor {
                quad: self.gauss.quad + other.gauss.quad,
                lin: self.gauss.lin + other.gauss.lin,
                constant: self.gauss.constant + other.gauss.constant,
            },
            strip,
        )
    }

    /// Symbol of (−x d/dx)^k applied to the represented function:
    /// multiply the polynomial factor by s^k.
    pub fn derivative(&self, k: usize) -> MellinSymbol {
        if k == 0 {
            return self.clone();
        }
        let mut poly = vec![0.0; k];
        poly.extend_from_slice(&self.poly);
        MellinSymbol {
            poly: trim_poly(poly),
            ..self.clone()
        }
    }

    /// Multiply the polynomial factor by an arbitrary real polynomial.
    pub fn with_extra_poly(&self, extra: &[f64]) -> MellinSymbol {
        MellinSymbol {
            poly: poly_mul(&self.poly, extra),
            ..self.clone()
        }
    }

    /// Scale the prefactor by a positive constant.
    pub fn scaled(&self, factor: f64) -> Result<MellinSymbol> {
        MellinSymbol::new(
            self.prefactor * factor,
            self.gammas.clone(),
            self.poly.clone(),
            self.geo,
            self.gauss,
            self.strip,
        )
    }

    /// Symbol of s ↦ M(n+1−s), the transform of ω̃(a) = ω(1/a) a^{−n−1},
    /// i.e. the weight of the inverse random matrix.
    pub fn reflect(&self, n: usize) -> Result<MellinSymbol> {
        let a = (n + 1) as f64;
        let gammas = self
            .gammas
            .iter()
            .map(|g| GammaFactor {
                weight: g.weight,
                scale: -g.scale,
                shift: g.scale * a + g.shift,
            })
            .collect();
        // poly(n+1−s) by Horner in coefficient space.
        let mut poly = vec![0.0];
        for c in self.poly.iter().rev() {
            let mut next = vec![0.0; poly.len() + 1];
            for (i, v) in poly.iter().enumerate() {
                next[i] += a * v;
                next[i + 1] -= v;
            }
            next[0] += c;
            poly = next;
        }
        let gauss = GaussFactor {
            quad: self.gauss.quad,
            lin: -(2.0 * self.gauss.quad * a + self.gauss.lin),
            constant: self.gauss.quad * a * a + self.gauss.lin * a + self.gauss.constant,
        };
        MellinSymbol::new(
            self.prefactor * self.geo.powf(a),
            gammas,
            trim_poly(poly),
            1.0 / self.geo,
            gauss,
            Strip::new(a - self.strip.hi, a - self.strip.lo),
        )
    }

    /// Field-wise comparison after canonicalization, up to float noise.
    pub fn approx_eq(&self, other: &MellinSymbol, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()));
        let strip_close = |a: f64, b: f64| (a == b) || close(a, b);
        if !close(self.prefactor, other.prefactor)
            || !close(self.geo, other.geo)
            || !close(self.gauss.quad, other.gauss.quad)
            || !close(self.gauss.lin, other.gauss.lin)
            || !close(self.gauss.constant, other.gauss.constant)
            || !strip_close(self.strip.lo, other.strip.lo)
            || !strip_close(self.strip.hi, other.strip.hi)
            || self.gammas.len() != other.gammas.len()
            || self.poly.len() != other.poly.len()
        {
            return false;
        }
        self.gammas
            .iter()
            .zip(&other.gammas)
            .all(|(a, b)| close(a.weight, b.weight) && close(a.scale, b.scale) && close(a.shift, b.shift))
            && self.poly.iter().zip(&other.poly).all(|(a, b)| close(*a, *b))
    }

    /// Real part of log M at a real abscissa with the polynomial replaced
    /// by its monotone envelope; the quantity minimized in the saddle search.
    fn envelope_log(&self, c: f64, lnx: f64) -> f64 {
        let mut v = self.prefactor.ln() + c * self.geo.ln();
        v += self.gauss.quad * c * c + self.gauss.lin * c + self.gauss.constant;
        for g in &self.gammas {
            let arg = g.scale * c + g.shift;
            v += g.weight * ln_gamma_complex(Complex64::new(arg, 0.0)).re;
        }
        v + poly_envelope(&self.poly, c).ln() - c * lnx
    }

    /// Interval of abscissas where every Gamma argument stays positive,
    /// intersected with the strip and a hard cap.
    fn saddle_domain(&self) -> Option<(f64, f64)> {
        const CAP: f64 = 1e6;
        const GUARD: f64 = 1e-4;
        let mut lo = self.strip.lo;
        let mut hi = self.strip.hi;
        for g in &self.gammas {
            let bound = (GUARD - g.shift) / g.scale;
            if g.scale > 0.0 {
                lo = lo.max(bound);
            } else {
                hi = hi.min(bound);
            }
        }
        lo = lo.max(-CAP);
        hi = hi.min(CAP);
        let width = hi - lo;
        if !(width > 0.0) {
            return None;
        }
        let guard = (1e-9 * width).min(1e-6).max(f64::MIN_POSITIVE);
        ((lo + guard) < (hi - guard)).then_some((lo + guard, hi - guard))
    }

    /// Choose the contour abscissa by minimizing the integrand envelope
    /// |M(c)| x^{−c} over the admissible interval. The envelope is
    /// log-convex between polynomial dips, so bracket-and-ternary is enough.
    fn saddle_abscissa(&self, lnx: f64, opts: &InversionOptions) -> f64 {
        let fallback = || {
            let mid = self.strip.midpoint();
            match opts.ambient_dim {
                Some(n) => mid.clamp(f64::MIN_POSITIVE, (n + 1) as f64 - 1e-9),
                None => mid,
            }
        };
        let Some((dlo, dhi)) = self.saddle_domain() else {
            return fallback();
        };
        let f = |c: f64| self.envelope_log(c, lnx);
        // Bracket the minimum by expanding steps from a seed.
        let seed = fallback().clamp(dlo, dhi);
        let (mut a, mut b) = (seed, seed);
        let mut fa = f(seed);
        let mut step = 1.0;
        while a > dlo {
            let c = (a - step).max(dlo);
            let fc = f(c);
            if fc < fa {
                a = c;
                fa = fc;
                step *= 2.0;
            } else {
                a = c;
                break;
            }
        }
        let mut fb = f(seed);
        step = 1.0;
        while b < dhi {
            let c = (b + step).min(dhi);
            let fc = f(c);
            if fc < fb {
                b = c;
                fb = fc;
                step *= 2.0;
            } else {
                b = c;
                break;
            }
        }
        // Coarse grid then ternary refinement.
        let mut best = (f(seed), seed);
        let m = 64;
        for i in 0..=m {
            let c = a + (b - a) * i as f64 / m as f64;
            let fc = f(c);
            if fc < best.0 {
                best = (fc, c);
            }
        }
        let h = (b - a) / m as f64;
        let (mut lo, mut hi) = ((best.1 - h).max(dlo), (best.1 + h).min(dhi));
        for _ in 0..100 {
            let m1 = lo + (hi - lo) / 3.0;
            let m2 = hi - (hi - lo) / 3.0;
            if f(m1) < f(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        0.5 * (lo + hi)
    }

    /// Decay classification of |M(c + it)| in t along the line Re s = c.
    pub fn decay_class(&self, c: f64) -> DecayClass {
        let a = self.gauss.quad;
        if a > 0.0 {
            return DecayClass::Gaussian { rate: a };
        }
        let e: f64 = self.gammas.iter().map(|g| g.weight * g.scale.abs()).sum::<f64>() * PI / 2.0;
        if e > 1e-12 {
            return DecayClass::Exponential { rate: e };
        }
        if e < -1e-12 {
            return DecayClass::None;
        }
        let p = self.power_exponent(c);
        if p < 0.0 {
            DecayClass::Polynomial { exponent: p }
        } else {
            DecayClass::None
        }
    }

    /// Power-of-|t| exponent from the Stirling bound at abscissa c.
    fn power_exponent(&self, c: f64) -> f64 {
        let from_gammas: f64 = self
            .gammas
            .iter()
            .map(|g| g.weight * (g.scale * c + g.shift - 0.5))
            .sum();
        from_gammas + (self.poly.len() - 1) as f64
    }

    /// |t| beyond which the Stirling regime applies for every factor.
    fn stirling_onset(&self, c: f64) -> f64 {
        self.gammas
            .iter()
            .map(|g| (1.0 + (g.scale * c + g.shift).abs()) / g.scale.abs())
            .fold(1.0, f64::max)
    }

    /// Truncation half-width T such that the discarded tail of the
    /// inversion integral is below the tolerance; Err when the decay class
    /// cannot support inversion at this tolerance.
    pub fn truncation_width(&self, c: f64, tol: f64) -> Result<f64> {
        self.truncation(c, tol)
    }

    fn truncation(&self, c: f64, tol: f64) -> Result<f64> {
        let budget = (1.0 / (tol * 0.1).max(1e-300)).ln();
        let p = self.power_exponent(c);
        let onset = self.stirling_onset(c);
        match self.decay_class(c) {
            DecayClass::Gaussian { rate } => {
                let mut t: f64 = (budget / rate).sqrt().max(2.0);
                for _ in 0..8 {
                    t = ((budget + p.max(0.0) * t.max(2.0).ln()) / rate).sqrt();
                }
                Ok((t.max(onset) + 2.0) * 1.5)
            }
            DecayClass::Exponential { rate } => {
                let mut t: f64 = budget / rate;
                for _ in 0..8 {
                    t = (budget + p.max(0.0) * t.max(2.0).ln()) / rate;
                }
                Ok((t.max(2.0 * onset) + 10.0) * 1.5)
            }
            DecayClass::Polynomial { exponent } if exponent < -1.05 => {
                // Tail ∫_T |t|^P dt = T^{P+1}/(−P−1) ≤ tol.
                let t = ((tol * 0.1) * (-exponent - 1.0)).powf(1.0 / (exponent + 1.0));
                let t = (t.max(2.0 * onset) + 10.0) * 1.5;
                if t > 1e5 {
                    Err(Error::SlowDecay(format!(
                        "polynomial exponent {exponent} needs T = {t:.3e}"
                    )))
                } else {
                    Ok(t)
                }
            }
            DecayClass::Polynomial { exponent } => Err(Error::SlowDecay(format!(
                "polynomial exponent {exponent} ≥ -1.05 on the contour"
            ))),
            DecayClass::None => Err(Error::SlowDecay(
                "no decay along vertical lines; inversion undefined".into(),
            )),
        }
    }

    /// Inverse Mellin transform at x > 0 with default options.
    pub fn inverse_mellin(&self, x: f64, tol: f64) -> Result<f64> {
        self.inverse_mellin_with(
            x,
            &InversionOptions {
                tol,
                ..Default::default()
            },
        )
    }

    /// Inverse transform (1/2π) ∫ M(c+it) x^{−c−it} dt with the abscissa
    /// at the envelope minimizer (or as overridden) and the truncation
    /// solved from the decay bound.
    pub fn inverse_mellin_with(&self, x: f64, opts: &InversionOptions) -> Result<f64> {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::ParameterOutOfRange(format!(
                "inverse transform needs x > 0, got {x}"
            )));
        }
        let lnx = x.ln();
        let c = match opts.abscissa {
            Some(c) => {
                self.check_strip(c)?;
                c
            }
            None => self.saddle_abscissa(lnx, opts),
        };
        let t_max = self.truncation(c, opts.tol)?;
        // Feature width at the saddle from the curvature of log|M|.
        let curv = self.log_curvature(c).abs().max(self.gauss.quad * 2.0);
        let width = if curv > 1e-4 { curv.sqrt().recip() } else { t_max };
        let min_level = ((t_max / (8.0 * width)).log2().ceil().max(3.0) as u32).min(9);
        // Absolute convergence floor: the integral can be a near-perfect
        // cancellation (the represented function may have zeros), in which
        // case "zero to within tol × peak × width" is the right answer.
        let peak = self.envelope_log(c, lnx).exp();
        let floor = opts.tol * peak * width.min(t_max) + f64::MIN_POSITIVE;
        let mut evals = |t: f64| {
            let s = Complex64::new(c, t);
            match self.log_parts(s) {
                Ok((lg, poly)) => (lg - s * lnx).exp() * poly,
                Err(_) => Complex64::new(f64::NAN, f64::NAN),
            }
        };
        let integral =
            quad::adaptive_complex_floor(-t_max, t_max, opts.tol, floor, min_level, 15, &mut evals)?;
        let v = integral / (2.0 * PI);
        let scale = v.re.abs().max(peak * width.min(t_max) / (2.0 * PI));
        if v.im.abs() > opts.tol * scale + opts.tol {
            return Err(Error::NonConvergent(format!(
                "imaginary residue {} exceeds tolerance at x = {x}",
                v.im
            )));
        }
        Ok(v.re)
    }

    /// d/dc log M(c) at a real abscissa (analytic, no finite differences).
    pub fn log_deriv1(&self, c: f64) -> Result<f64> {
        self.check_strip(c)?;
        let mut v = self.geo.ln() + 2.0 * self.gauss.quad * c + self.gauss.lin;
        for g in &self.gammas {
            let arg = g.scale * c + g.shift;
            if arg <= 0.0 {
                return Err(Error::BranchError {
                    re: arg,
                    im: 0.0,
                    power: g.weight,
                });
            }
            v += g.weight * g.scale * digamma(arg);
        }
        if self.poly.len() > 1 {
            let p = poly_eval_real(&self.poly, c);
            if p.abs() < 1e-300 {
                return Err(Error::DegenerateParameter(format!(
                    "polynomial factor vanishes at c = {c}"
                )));
            }
            v += poly_eval_real(&poly_deriv(&self.poly), c) / p;
        }
        Ok(v)
    }

    /// d²/dc² log M(c) at a real abscissa.
    pub fn log_deriv2(&self, c: f64) -> Result<f64> {
        self.check_strip(c)?;
        let mut v = 2.0 * self.gauss.quad;
        for g in &self.gammas {
            let arg = g.scale * c + g.shift;
            if arg <= 0.0 {
                return Err(Error::BranchError {
                    re: arg,
                    im: 0.0,
                    power: g.weight,
                });
            }
            v += g.weight * g.scale * g.scale * trigamma(arg);
        }
        if self.poly.len() > 1 {
            let p = poly_eval_real(&self.poly, c);
            if p.abs() < 1e-300 {
                return Err(Error::DegenerateParameter(format!(
                    "polynomial factor vanishes at c = {c}"
                )));
            }
            let d1 = poly_eval_real(&poly_deriv(&self.poly), c);
            let d2 = poly_eval_real(&poly_deriv(&poly_deriv(&self.poly)), c);
            v += d2 / p - (d1 / p) * (d1 / p);
        }
        Ok(v)
    }

    fn log_curvature(&self, c: f64) -> f64 {
        let mut v = 2.0 * self.gauss.quad;
        for g in &self.gammas {
            let arg = g.scale * c + g.shift;
            if arg > 0.0 {
                v += g.weight * g.scale * g.scale * trigamma(arg);
            }
        }
        v
    }
}

fn poly_deriv(poly: &[f64]) -> Vec<f64> {
    if poly.len() <= 1 {
        return vec![0.0];
    }
    poly.iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| k as f64 * c)
        .collect()
}

/// Forward Mellin transform of a pointwise evaluator by adaptive
/// quadrature in logarithmic coordinates; the independent oracle for
/// everything the symbols claim.
pub fn mellin_numeric<F: FnMut(f64) -> f64>(
    mut f: F,
    s: Complex64,
    window: (f64, f64),
    tol: f64,
) -> Result<Complex64> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::QuadratureFailure(format!("bad window ({lo}, {hi})")));
    }
    quad::adaptive_complex(lo.ln(), hi.ln(), tol, |u| {
        let x = u.exp();
        (s * u).exp() * f(x)
    })
}
