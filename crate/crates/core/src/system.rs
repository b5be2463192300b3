//! Polynomial systems as supplied by users: expression strings or JSON
//! coefficient maps, plus the box.

use serde::Deserialize;

use crate::arith::{parse_rat, Rat};
use crate::error::{Error, Result};
use crate::multipoly::Monomial;
use crate::parse::parse_polynomial;
use crate::variety::{Domain, VarietyContext};
use crate::Poly;

#[derive(Debug, Clone, PartialEq)]
pub struct SystemDescriptor {
    pub n: usize,
    pub polys: Vec<Poly>,
    pub domain: Domain,
    pub labels: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PolySpec {
    Text(String),
    Terms(Vec<TermSpec>),
}

#[derive(Debug, Deserialize)]
struct TermSpec {
    exps: Vec<u32>,
    coeff: CoeffSpec,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CoeffSpec {
    Int(i64),
    Text(String),
}

#[derive(Debug, Deserialize)]
struct SystemJson {
    n: usize,
    polys: Vec<PolySpec>,
    #[serde(default, rename = "box")]
    domain: Option<Vec<(String, String)>>,
    #[serde(default)]
    labels: Vec<String>,
}

/// Largest `k` with `xk` occurring in `text`.
fn max_var_index(text: &str) -> usize {
    let b = text.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'x' || b[i] == b'X' {
            let s = i + 1;
            let mut e = s;
            while e < b.len() && b[e].is_ascii_digit() {
                e += 1;
            }
            if let Ok(k) = text[s..e].parse::<usize>() {
                best = best.max(k);
            }
            i = e;
        } else {
            i += 1;
        }
    }
    best
}

/// Parses polynomials separated by `;` or newlines. Without an explicit `n`
/// the largest variable index is used.
pub fn parse_system(text: &str, n: Option<usize>) -> Result<SystemDescriptor> {
    let n = match n {
        Some(n) => n,
        None => max_var_index(text).max(1),
    };
    let mut polys = Vec::new();
    let mut offset = 0;
    for chunk in text.split([';', '\n']) {
        if !chunk.trim().is_empty() {
            let p = parse_polynomial(chunk, n).map_err(|e| match e {
                Error::Parse { pos, msg } => Error::Parse { pos: pos + offset, msg },
                Error::NonIntegerCoefficient { pos } => Error::NonIntegerCoefficient { pos: pos + offset },
                other => other,
            })?;
            polys.push(p);
        }
        offset += chunk.len() + 1;
    }
    if polys.is_empty() {
        return Err(Error::Parse {
            pos: 0,
            msg: "no polynomials given".into(),
        });
    }
    Ok(SystemDescriptor {
        n,
        labels: (1..=polys.len()).map(|j| format!("P{j}")).collect(),
        polys,
        domain: Domain::unit(n),
    })
}

impl SystemDescriptor {
    pub fn from_polys(n: usize, polys: Vec<Poly>) -> Self {
        SystemDescriptor {
            n,
            labels: (1..=polys.len()).map(|j| format!("P{j}")).collect(),
            polys,
            domain: Domain::unit(n),
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.n {
            return Err(Error::VarCountMismatch {
                expected: self.n,
                found: domain.dim(),
            });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: SystemJson = serde_json::from_str(text).map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("invalid system JSON: {e}"),
        })?;
        let n = raw.n;
        let polys = raw
            .polys
            .into_iter()
            .map(|spec| match spec {
                PolySpec::Text(s) => parse_polynomial(&s, n),
                PolySpec::Terms(terms) => {
                    let mut p = Poly::zero(n);
                    for t in terms {
                        if t.exps.len() != n {
                            return Err(Error::VarCountMismatch {
                                expected: n,
                                found: t.exps.len(),
                            });
                        }
                        let c = match t.coeff {
                            CoeffSpec::Int(c) => Rat::from_integer(c.into()),
                            CoeffSpec::Text(s) => parse_rat(&s)?,
                        };
                        p.add_term(Monomial::new(t.exps), c);
                    }
                    Ok(p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let domain = match raw.domain {
            None => Domain::unit(n),
            Some(iv) => Domain::new(
                iv.iter()
                    .map(|(a, b)| Ok((parse_rat(a)?, parse_rat(b)?)))
                    .collect::<Result<Vec<_>>>()?,
            )?,
        };
        let mut desc = SystemDescriptor::from_polys(n, polys).with_domain(domain)?;
        if !raw.labels.is_empty() {
            desc.labels = raw.labels;
        }
        Ok(desc)
    }

    /// Polynomials in canonical text, `; `-separated.
    pub fn canonical_text(&self) -> String {
        self.polys
            .iter()
            .map(|p| p.to_text())
            .collect::<Vec<_>>()
            .join("; ")
    }

    pub fn to_context(&self) -> Result<VarietyContext> {
        VarietyContext::build(self.polys.clone(), self.domain.clone())
    }
}
