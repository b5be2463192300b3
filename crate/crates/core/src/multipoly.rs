//! Sparse multivariate polynomials over a field.
//!
//! Terms live in a `BTreeMap` keyed by exponent vector; zero coefficients are
//! never stored. Term order for leading terms and canonical text is supplied
//! separately through [`MonOrder`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::{self, Debug, Display};
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{FromPrimitive, Num, Signed};

use crate::arith::Rat;
use crate::error::{Error, Result};

/// Coefficient domain for polynomials and Gröbner computations.
pub trait Field: Clone + PartialEq + Debug + Num + Neg<Output = Self> + Send + Sync {}

impl<T> Field for T where T: Clone + PartialEq + Debug + Num + Neg<Output = T> + Send + Sync {}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    exps: Vec<u32>,
}

impl Monomial {
    pub fn new(exps: Vec<u32>) -> Self {
        Monomial { exps }
    }

    pub fn one(nvars: usize) -> Self {
        Monomial { exps: vec![0; nvars] }
    }

    /// `x_i^e` with a zero-based variable index.
    pub fn pure(nvars: usize, var: usize, e: u32) -> Self {
        let mut exps = vec![0; nvars];
        exps[var] = e;
        Monomial { exps }
    }

    pub fn exps(&self) -> &[u32] {
        &self.exps
    }

    pub fn nvars(&self) -> usize {
        self.exps.len()
    }

    pub fn degree(&self) -> u32 {
        self.exps.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.exps.iter().all(|&e| e == 0)
    }

    pub fn divides(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| a <= b)
    }

    pub fn lcm(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| *a.max(b)).collect(),
        }
    }

    /// `self / other`, if `other` divides `self`.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        other.divides(self).then(|| Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        Monomial {
            exps: self.exps.iter().zip(&other.exps).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn is_coprime(&self, other: &Monomial) -> bool {
        self.exps.iter().zip(&other.exps).all(|(a, b)| *a == 0 || *b == 0)
    }

    /// `Some((i, e))` when the monomial is `x_i^e` with `e >= 1`.
    pub fn as_pure_power(&self) -> Option<(usize, u32)> {
        let mut found = None;
        for (i, &e) in self.exps.iter().enumerate() {
            if e > 0 {
                if found.is_some() {
                    return None;
                }
                found = Some((i, e));
            }
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum MonOrder {
    #[default]
    DegRevLex,
    Lex,
}

impl MonOrder {
    /// Variables rank `x_1 > x_2 > ... > x_n` in index order.
    pub fn cmp(&self, a: &Monomial, b: &Monomial) -> Ordering {
        match self {
            MonOrder::Lex => a.exps.cmp(&b.exps),
            MonOrder::DegRevLex => a.degree().cmp(&b.degree()).then_with(|| {
                for (x, y) in a.exps.iter().zip(&b.exps).rev() {
                    if x != y {
                        return y.cmp(x);
                    }
                }
                Ordering::Equal
            }),
        }
    }
}

impl fmt::Display for MonOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MonOrder::DegRevLex => "degrevlex",
            MonOrder::Lex => "lex",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MPoly<C> {
    nvars: usize,
    terms: BTreeMap<Monomial, C>,
}

impl<C: Field> MPoly<C> {
    pub fn zero(nvars: usize) -> Self {
        MPoly {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::term(Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    /// The variable `x_{var+1}` (zero-based index).
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::term(Monomial::pure(nvars, var, 1), C::one())
    }

    pub fn term(m: Monomial, c: C) -> Self {
        let mut p = Self::zero(m.nvars());
        p.add_term(m, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, C)>) -> Self {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity");
            p.add_term(m, c);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &Monomial) -> C {
        self.terms.get(m).cloned().unwrap_or_else(C::zero)
    }

    /// Adds `c * m` in place, dropping the term if it cancels.
    pub fn add_term(&mut self, m: Monomial, c: C) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degs = self.terms.keys().map(Monomial::degree);
        match degs.next() {
            None => true,
            Some(d) => degs.all(|e| e == d),
        }
    }

    pub fn leading_term(&self, order: MonOrder) -> Option<(&Monomial, &C)> {
        self.terms.iter().max_by(|a, b| order.cmp(a.0, b.0))
    }

    pub fn leading_monomial(&self, order: MonOrder) -> Option<&Monomial> {
        self.leading_term(order).map(|(m, _)| m)
    }

    /// Terms sorted descending by `order`.
    pub fn sorted_terms(&self, order: MonOrder) -> Vec<(&Monomial, &C)> {
        let mut v: Vec<_> = self.terms.iter().collect();
        v.sort_by(|a, b| order.cmp(b.0, a.0));
        v
    }

    fn check_arity(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VarCountMismatch {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_arity(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, a)| (m.clone(), a.clone() * c.clone()))
                .collect(),
        }
    }

    /// `self * c * m`.
    pub fn mul_term(&self, m: &Monomial, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(k, a)| (k.mul(m), a.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Self {
        (0..e).fold(Self::one(self.nvars), |acc, _| &acc * self)
    }

    /// Divides through by the leading coefficient.
    pub fn make_monic(&self, order: MonOrder) -> Self {
        match self.leading_term(order) {
            None => self.clone(),
            Some((_, lc)) => self.scale(&(C::one() / lc.clone())),
        }
    }

    pub fn evaluate(&self, x: &[C]) -> Result<C> {
        if x.len() != self.nvars {
            return Err(Error::VarCountMismatch {
                expected: self.nvars,
                found: x.len(),
            });
        }
        let mut acc = C::zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (xi, &e) in x.iter().zip(m.exps()) {
                if e > 0 {
                    t = t * num_traits::pow(xi.clone(), e as usize);
                }
            }
            acc = acc + t;
        }
        Ok(acc)
    }

    /// The part of total degree exactly `k`.
    pub fn homogeneous_part(&self, k: u32) -> Self {
        MPoly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == k)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// `[P_0, ..., P_d]` with `P_k` homogeneous of degree `k`.
    pub fn homogeneous_parts(&self, d: u32) -> Result<Vec<Self>> {
        self.check_degree(d)?;
        Ok((0..=d).map(|k| self.homogeneous_part(k)).collect())
    }

    /// Degree-`d` homogenization `X0^d P_0 + X0^(d-1) P_1 + ... + P_d`.
    ///
    /// The result has `nvars + 1` variables and `X0` is the last one, so it
    /// ranks below every original variable.
    pub fn homogenize(&self, d: u32) -> Result<Self> {
        self.check_degree(d)?;
        let n = self.nvars;
        Ok(MPoly {
            nvars: n + 1,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| {
                    let mut exps = m.exps.clone();
                    exps.push(d - m.degree());
                    (Monomial { exps }, c.clone())
                })
                .collect(),
        })
    }

    /// Sets the last variable to 1; inverse of [`MPoly::homogenize`].
    pub fn dehomogenize(&self) -> Self {
        assert!(self.nvars >= 1);
        let mut out = Self::zero(self.nvars - 1);
        for (m, c) in &self.terms {
            out.add_term(Monomial::new(m.exps[..self.nvars - 1].to_vec()), c.clone());
        }
        out
    }

    fn check_degree(&self, d: u32) -> Result<()> {
        match self.degree() {
            Some(deg) if deg > d => Err(Error::DegreeTooHigh { degree: deg, bound: d }),
            _ => Ok(()),
        }
    }
}

impl<C: Field + FromPrimitive> MPoly<C> {
    pub fn derivative(&self, var: usize) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            let e = m.exps[var];
            if e == 0 {
                continue;
            }
            let mut exps = m.exps.clone();
            exps[var] -= 1;
            out.add_term(
                Monomial::new(exps),
                c.clone() * C::from_u32(e).expect("exponent fits"),
            );
        }
        out
    }
}

impl MPoly<Rat> {
    /// Whether every coefficient is an integer.
    pub fn is_integral(&self) -> bool {
        self.terms.values().all(|c| c.is_integer())
    }
}

impl<C: Field> Add for &MPoly<C> {
    type Output = MPoly<C>;

    fn add(self, rhs: Self) -> MPoly<C> {
        self.checked_add(rhs).expect("polynomial arity mismatch")
    }
}

impl<C: Field> Sub for &MPoly<C> {
    type Output = MPoly<C>;

    fn sub(self, rhs: Self) -> MPoly<C> {
        self.checked_sub(rhs).expect("polynomial arity mismatch")
    }
}

impl<C: Field> Mul for &MPoly<C> {
    type Output = MPoly<C>;

    fn mul(self, rhs: Self) -> MPoly<C> {
        self.checked_mul(rhs).expect("polynomial arity mismatch")
    }
}

impl<C: Field> Neg for &MPoly<C> {
    type Output = MPoly<C>;

    fn neg(self) -> MPoly<C> {
        self.scale(&-C::one())
    }
}

/// How variables are named in text output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarNames {
    /// `x1 .. xn` by index.
    Affine,
    /// `x1 .. xn` for the first `n` variables and `x0` for the last one.
    Projective,
}

impl<C: Field + Signed + Display> MPoly<C> {
    /// Canonical text with terms descending in degrevlex, e.g. `x1^2 - x2 + 3`.
    pub fn to_text(&self) -> String {
        self.to_text_with(VarNames::Affine)
    }

    pub fn to_text_with(&self, names: VarNames) -> String {
        if self.is_zero() {
            return "0".to_string();
        }
        let name_of = |i: usize| -> usize {
            match names {
                VarNames::Projective if i + 1 == self.nvars => 0,
                _ => i + 1,
            }
        };
        let mut out = String::new();
        for (k, (m, c)) in self.sorted_terms(MonOrder::DegRevLex).into_iter().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => out.push('-'),
                (0, false) => {}
                (_, true) => out.push_str(" - "),
                (_, false) => out.push_str(" + "),
            }
            let a = c.abs();
            let mut factors: Vec<(usize, u32)> = m
                .exps()
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| (name_of(i), e))
                .collect();
            factors.sort();
            let mono = factors
                .iter()
                .map(|&(v, e)| if e == 1 { format!("x{v}") } else { format!("x{v}^{e}") })
                .collect::<Vec<_>>()
                .join("*");
            if mono.is_empty() {
                out.push_str(&a.to_string());
            } else if a.is_one() {
                out.push_str(&mono);
            } else {
                out.push_str(&format!("{a}*{mono}"));
            }
        }
        out
    }
}

impl<C: Field + Signed + Display> fmt::Display for MPoly<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}
