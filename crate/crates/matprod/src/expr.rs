//! Recursive-descent parser for the ensemble expression mini-language and
//! the factor-chain language of the sampling subcommands.
//!
//! ```text
//!   expr   := term ('*' term)*
//!   term   := family '(' kv (',' kv)* ')' | 'inv' '(' expr ')'
//!   family := laguerre | jacobi | cauchy | mb | lognormal | interp
//!   kv     := key '=' number
//! ```
//!
//! Example: `laguerre(nu=0) * inv(jacobi(nu=0,mu=5)) * interp(p=0.5,q=0)`.
//!
//! Factor chains reuse the same lexer:
//!
//! ```text
//!   chain := fterm ('*' fterm)*
//!   fterm := 'ginibre' | 'haar' | 'inv' '(' 'ginibre' ')'
//!          | 'truncated' '(' 'N' '=' integer ')' | 'diag' '(' expr ')'
//! ```

use crate::ensembles::{Ensemble, Family};
use crate::error::{Error, Result};
use crate::sampling::{FactorSpec, McmcConfig};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Star,
    LParen,
    RParen,
    Comma,
    Eq,
    Eof,
}

struct Lexer {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'*' => {
                out.push((Tok::Star, i));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, i));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, i));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, i));
                i += 1;
            }
            b'=' => {
                out.push((Tok::Eq, i));
                i += 1;
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(text[start..i].to_ascii_lowercase()), start));
            }
            b'0'..=b'9' | b'.' | b'-' | b'+' => {
                let start = i;
                i += 1;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == b'.'
                        || bytes[i] == b'e'
                        || bytes[i] == b'E'
                        || ((bytes[i] == b'-' || bytes[i] == b'+')
                            && (bytes[i - 1] == b'e' || bytes[i - 1] == b'E')))
                {
                    i += 1;
                }
                let v: f64 = text[start..i].parse().map_err(|_| Error::Parse {
                    offset: start,
                    expected: "a number".into(),
                })?;
                out.push((Tok::Number(v), start));
            }
            _ => {
                return Err(Error::Parse {
                    offset: i,
                    expected: "identifier, number, '*', '(', ')', ',' or '='".into(),
                })
            }
        }
    }
    out.push((Tok::Eof, text.len()));
    Ok(out)
}

impl Lexer {
    fn new(text: &str) -> Result<Self> {
        Ok(Lexer {
            tokens: lex(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &(Tok, usize) {
        &self.tokens[self.pos]
    }

    fn next(&mut self) -> (Tok, usize) {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<usize> {
        let (t, off) = self.next();
        if t == tok {
            Ok(off)
        } else {
            Err(Error::Parse {
                offset: off,
                expected: expected.into(),
            })
        }
    }

    fn expect_ident(&mut self, expected: &str) -> Result<(String, usize)> {
        let (t, off) = self.next();
        match t {
            Tok::Ident(s) => Ok((s, off)),
            _ => Err(Error::Parse {
                offset: off,
                expected: expected.into(),
            }),
        }
    }

    fn expect_number(&mut self, expected: &str) -> Result<(f64, usize)> {
        let (t, off) = self.next();
        match t {
            Tok::Number(v) => Ok((v, off)),
            _ => Err(Error::Parse {
                offset: off,
                expected: expected.into(),
            }),
        }
    }
}

fn parse_kv_list(lx: &mut Lexer) -> Result<Vec<(String, f64, usize)>> {
    lx.expect(Tok::LParen, "'('")?;
    let mut out = Vec::new();
    loop {
        let (key, koff) = lx.expect_ident("a parameter name")?;
        lx.expect(Tok::Eq, "'='")?;
        let (v, _) = lx.expect_number("a number")?;
        out.push((key, v, koff));
        match lx.next() {
            (Tok::Comma, _) => continue,
            (Tok::RParen, _) => break,
            (_, off) => {
                return Err(Error::Parse {
                    offset: off,
                    expected: "',' or ')'".into(),
                })
            }
        }
    }
    Ok(out)
}

fn take_params(
    family: &str,
    kvs: Vec<(String, f64, usize)>,
    keys: &[&str],
) -> Result<Vec<f64>> {
    let mut values: Vec<Option<f64>> = vec![None; keys.len()];
    for (key, v, _off) in kvs {
        match keys.iter().position(|k| **k == key) {
            Some(i) => {
                if values[i].is_some() {
                    return Err(Error::Semantic(format!(
                        "duplicate parameter '{key}' for {family}"
                    )));
                }
                values[i] = Some(v);
            }
            None => {
                return Err(Error::Semantic(format!(
                    "unknown parameter '{key}' for {family}; expected one of {keys:?}"
                )))
            }
        }
    }
    values
        .into_iter()
        .zip(keys)
        .map(|(v, k)| {
            v.ok_or_else(|| Error::Semantic(format!("{family} is missing parameter '{k}'")))
        })
        .collect()
}

fn parse_term(lx: &mut Lexer) -> Result<Family> {
    let (name, off) = lx.expect_ident("a family name or 'inv'")?;
    match name.as_str() {
        "inv" => {
            lx.expect(Tok::LParen, "'('")?;
            let inner = parse_expr(lx)?;
            lx.expect(Tok::RParen, "')'")?;
            Ok(Family::Inverted(Box::new(inner)))
        }
        "laguerre" => {
            let p = take_params("laguerre", parse_kv_list(lx)?, &["nu"])?;
            Ok(Family::Laguerre { nu: p[0] })
        }
        "jacobi" => {
            let p = take_params("jacobi", parse_kv_list(lx)?, &["nu", "mu"])?;
            Ok(Family::Jacobi { nu: p[0], mu: p[1] })
        }
        "cauchy" => {
            let p = take_params("cauchy", parse_kv_list(lx)?, &["nu", "mu"])?;
            Ok(Family::CauchyLorentz { nu: p[0], mu: p[1] })
        }
        "mb" => {
            let p = take_params("mb", parse_kv_list(lx)?, &["nu", "alpha", "theta"])?;
            Ok(Family::MuttalibBorodin {
                nu: p[0],
                alpha: p[1],
                theta: p[2],
            })
        }
        "lognormal" => {
            let p = take_params("lognormal", parse_kv_list(lx)?, &["nu", "alpha"])?;
            Ok(Family::LogNormal { nu: p[0], alpha: p[1] })
        }
        "interp" => {
            let p = take_params("interp", parse_kv_list(lx)?, &["p", "q"])?;
            Ok(Family::Interpolating { p: p[0], q: p[1] })
        }
        _ => Err(Error::Parse {
            offset: off,
            expected: "one of laguerre, jacobi, cauchy, mb, lognormal, interp, inv".into(),
        }),
    }
}

fn parse_expr(lx: &mut Lexer) -> Result<Family> {
    let mut parts = vec![parse_term(lx)?];
    while matches!(lx.peek().0, Tok::Star) {
        lx.next();
        parts.push(parse_term(lx)?);
    }
    if parts.len() == 1 {
        Ok(parts.pop().unwrap())
    } else {
        Ok(Family::Composite(parts))
    }
}

/// Parse an ensemble expression into its family tree.
pub fn parse_family(text: &str) -> Result<Family> {
    let mut lx = Lexer::new(text)?;
    let family = parse_expr(&mut lx)?;
    let (tok, off) = lx.next();
    if tok != Tok::Eof {
        return Err(Error::Parse {
            offset: off,
            expected: "'*' or end of input".into(),
        });
    }
    Ok(family)
}

/// Parse an ensemble expression and build the ensemble for dimension n.
/// Terms compose left to right; inv(...) applies matrix inversion.
pub fn parse_ensemble(text: &str, n: usize) -> Result<Ensemble> {
    Ensemble::from_family(n, parse_family(text)?)
}

fn parse_factor_term(lx: &mut Lexer, n: usize) -> Result<FactorSpec> {
    let (name, off) = lx.expect_ident("a factor: ginibre, haar, inv, truncated, diag")?;
    match name.as_str() {
        "ginibre" => Ok(FactorSpec::ginibre(n)),
        "haar" => Ok(FactorSpec::haar_unitary(n)),
        "inv" => {
            lx.expect(Tok::LParen, "'('")?;
            let (inner, ioff) = lx.expect_ident("'ginibre'")?;
            if inner != "ginibre" {
                return Err(Error::Parse {
                    offset: ioff,
                    expected: "'ginibre' (only Ginibre factors can be inverted)".into(),
                });
            }
            lx.expect(Tok::RParen, "')'")?;
            Ok(FactorSpec::inverse_ginibre(n))
        }
        "truncated" => {
            let p = take_params("truncated", parse_kv_list(lx)?, &["n"])?;
            let big_n = p[0];
            if big_n.fract() != 0.0 || big_n < 1.0 {
                return Err(Error::Semantic(format!(
                    "truncated needs an integer dimension N ≥ 1, got {big_n}"
                )));
            }
            let spec = FactorSpec::truncated_unitary(n, big_n as usize);
            spec.validate()?;
            Ok(spec)
        }
        "diag" => {
            lx.expect(Tok::LParen, "'('")?;
            let family = parse_expr(lx)?;
            lx.expect(Tok::RParen, "')'")?;
            let ens = Ensemble::from_family(n, family)?;
            Ok(FactorSpec::diagonal_from_jpdf(ens, McmcConfig::default()))
        }
        _ => Err(Error::Parse {
            offset: off,
            expected: "one of ginibre, haar, inv(ginibre), truncated(n=...), diag(...)".into(),
        }),
    }
}

/// Parse a factor chain for the sampling subcommands.
pub fn parse_factor_chain(text: &str, n: usize) -> Result<Vec<FactorSpec>> {
    let mut lx = Lexer::new(text)?;
    let mut out = vec![parse_factor_term(&mut lx, n)?];
    while matches!(lx.peek().0, Tok::Star) {
        lx.next();
        out.push(parse_factor_term(&mut lx, n)?);
    }
    let (tok, off) = lx.next();
    if tok != Tok::Eof {
        return Err(Error::Parse {
            offset: off,
            expected: "'*' or end of input".into(),
        });
    }
    Ok(out)
}
