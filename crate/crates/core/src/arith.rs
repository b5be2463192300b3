//! Exact rationals, rational vectors, projective points and their heights.
//!
//! The affine height of a rational vector is the least common denominator of
//! its entries. The projective height of a point in `P^k(Q)` is the largest
//! absolute coordinate of its primitive integer representative.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub type Rat = BigRational;

/// Parses `"a"`, `"a/b"` or a finite decimal such as `"-0.125"` into an exact rational.
pub fn parse_rat(text: &str) -> Result<Rat> {
    let s = text.trim();
    let bad = || Error::Parse {
        pos: 0,
        msg: format!("not a rational number: {text:?}"),
    };
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rat::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let int_part: BigInt = match int {
            "" | "-" | "+" => BigInt::zero(),
            _ => int.parse().map_err(|_| bad())?,
        };
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part: BigInt = frac.parse().map_err(|_| bad())?;
        let mag = int_part.abs() * &scale + frac_part;
        let num = if negative { -mag } else { mag };
        return Ok(Rat::new(num, scale));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rat::from_integer(n))
}

/// `"num/den"`, with the denominator omitted when it is 1.
pub fn fmt_rat(r: &Rat) -> String {
    r.to_string()
}

pub(crate) mod serde_rat {
    use super::Rat;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(r: &Rat, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }
}

pub(crate) mod serde_bigint {
    use num_bigint::BigInt;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(n: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }
}

/// Rational vector of fixed length.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RatVec(Vec<Rat>);

impl RatVec {
    pub fn new(entries: Vec<Rat>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyVector);
        }
        Ok(RatVec(entries))
    }

    pub fn from_ints(entries: &[i64]) -> Result<Self> {
        Self::new(entries.iter().map(|&e| Rat::from_integer(e.into())).collect())
    }

    /// `p/q` for an integer vector `p`.
    pub fn from_fraction(numerators: &[BigInt], den: &BigInt) -> Result<Self> {
        Self::new(
            numerators
                .iter()
                .map(|p| Rat::new(p.clone(), den.clone()))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn entries(&self) -> &[Rat] {
        &self.0
    }

    pub fn into_entries(self) -> Vec<Rat> {
        self.0
    }

    pub fn affine_height(&self) -> BigInt {
        affine_height(self)
    }

    pub fn to_projective(&self) -> ProjPoint {
        to_projective(self)
    }

    /// Sup-norm distance.
    pub fn sup_distance(&self, other: &RatVec) -> Rat {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rat::zero)
    }
}

impl FromStr for RatVec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let entries = inner
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(parse_rat)
            .collect::<Result<Vec<_>>>()?;
        RatVec::new(entries)
    }
}

impl fmt::Display for RatVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, ")")
    }
}

impl Serialize for RatVec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter().map(|r| r.to_string()))
    }
}

/// A point of projective space over Q in canonical form: integer
/// coordinates with gcd 1 and first nonzero coordinate positive.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ProjPoint {
    coords: Vec<BigInt>,
}

impl ProjPoint {
    pub fn new(coords: Vec<BigInt>) -> Result<Self> {
        let g = coords.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
        if g.is_zero() {
            return Err(Error::ZeroProjective);
        }
        let first_negative = coords.iter().find(|c| !c.is_zero()).unwrap().is_negative();
        let g = if first_negative { -g } else { g };
        Ok(ProjPoint {
            coords: coords.into_iter().map(|c| c / &g).collect(),
        })
    }

    /// Clears denominators of a rational representative.
    pub fn from_rationals(coords: &[Rat]) -> Result<Self> {
        let lcm = coords
            .iter()
            .fold(BigInt::one(), |l, c| l.lcm(c.denom()));
        ProjPoint::new(
            coords
                .iter()
                .map(|c| c.numer() * (&lcm / c.denom()))
                .collect(),
        )
    }

    pub fn coords(&self) -> &[BigInt] {
        &self.coords
    }

    /// Number of homogeneous coordinates (`k + 1` for `P^k`).
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn height(&self) -> BigInt {
        projective_height(self)
    }

    /// Affine chart `X0 != 0`: `(X1/X0, ..., Xk/X0)`.
    pub fn dehomogenize(&self) -> Option<RatVec> {
        let x0 = &self.coords[0];
        if x0.is_zero() || self.coords.len() < 2 {
            return None;
        }
        RatVec::new(
            self.coords[1..]
                .iter()
                .map(|c| Rat::new(c.clone(), x0.clone()))
                .collect(),
        )
        .ok()
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ":")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ProjPoint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
        let coords = inner
            .split(':')
            .map(|t| {
                t.trim().parse::<BigInt>().map_err(|_| Error::Parse {
                    pos: 0,
                    msg: format!("bad projective coordinate {t:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ProjPoint::new(coords)
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Least `D` with `v = (r_1/D, ..., r_k/D)` and `gcd(r_1, ..., r_k, D) = 1`.
pub fn affine_height(v: &RatVec) -> BigInt {
    v.entries()
        .iter()
        .fold(BigInt::one(), |l, e| l.lcm(e.denom()))
}

/// Canonical integer coordinates of `(1 : v_1 : ... : v_k)`.
pub fn to_projective(v: &RatVec) -> ProjPoint {
    let mut coords = Vec::with_capacity(v.len() + 1);
    coords.push(Rat::one());
    coords.extend(v.entries().iter().cloned());
    ProjPoint::from_rationals(&coords).expect("leading coordinate is 1")
}

pub fn projective_height(p: &ProjPoint) -> BigInt {
    p.coords()
        .iter()
        .map(|c| c.abs())
        .max()
        .unwrap_or_else(BigInt::zero)
}
