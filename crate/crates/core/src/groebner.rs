//! Buchberger's algorithm and the zero-dimensionality test behind the
//! morphism condition.
//!
//! A homogeneous ideal in `n` variables vanishes over the algebraic closure
//! only at the origin iff the leading-term ideal of its Gröbner basis
//! contains a pure power of every variable.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::arith::Rat;
use crate::error::{Error, Result};
use crate::multipoly::{Field, MPoly, MonOrder, Monomial};
use crate::Poly;

/// Reduced Gröbner basis: monic, inter-reduced, sorted descending by leading monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct GroebnerBasis<C> {
    order: MonOrder,
    gens: Vec<MPoly<C>>,
}

impl<C: Field> GroebnerBasis<C> {
    pub fn order(&self) -> MonOrder {
        self.order
    }

    pub fn gens(&self) -> &[MPoly<C>] {
        &self.gens
    }

    pub fn nvars(&self) -> usize {
        self.gens[0].nvars()
    }

    pub fn leading_monomials(&self) -> Vec<Monomial> {
        self.gens
            .iter()
            .map(|g| g.leading_monomial(self.order).unwrap().clone())
            .collect()
    }

    pub fn reduce(&self, p: &MPoly<C>) -> MPoly<C> {
        reduce(p, &self.gens, self.order)
    }

    pub fn contains(&self, p: &MPoly<C>) -> bool {
        ideal_member(p, self)
    }

    /// Whether the basis is the unit ideal.
    pub fn is_unit(&self) -> bool {
        self.gens.len() == 1 && self.gens[0].leading_monomial(self.order).unwrap().is_one()
    }
}

/// Full multivariate division remainder of `p` by `gens`.
pub fn reduce<C: Field>(p: &MPoly<C>, gens: &[MPoly<C>], order: MonOrder) -> MPoly<C> {
    let leads: Vec<(Monomial, C)> = gens
        .iter()
        .filter_map(|g| g.leading_term(order).map(|(m, c)| (m.clone(), c.clone())))
        .collect();
    let divisors: Vec<&MPoly<C>> = gens.iter().filter(|g| !g.is_zero()).collect();
    let mut rest = p.clone();
    let mut rem = MPoly::zero(p.nvars());
    while let Some((m, c)) = rest.leading_term(order).map(|(m, c)| (m.clone(), c.clone())) {
        let hit = leads
            .iter()
            .zip(&divisors)
            .find_map(|((lm, lc), g)| m.div(lm).map(|q| (q, lc, g)));
        match hit {
            Some((q, lc, g)) => {
                let factor = c / lc.clone();
                rest = &rest - &g.mul_term(&q, &factor);
            }
            None => {
                rest.add_term(m.clone(), -c.clone());
                rem.add_term(m, c);
            }
        }
    }
    rem
}

pub fn s_polynomial<C: Field>(f: &MPoly<C>, g: &MPoly<C>, order: MonOrder) -> MPoly<C> {
    let (mf, cf) = f.leading_term(order).expect("nonzero");
    let (mg, cg) = g.leading_term(order).expect("nonzero");
    let l = mf.lcm(mg);
    let a = f.mul_term(&l.div(mf).unwrap(), &(C::one() / cf.clone()));
    let b = g.mul_term(&l.div(mg).unwrap(), &(C::one() / cg.clone()));
    &a - &b
}

/// Reduced Gröbner basis of the ideal generated by `gens`.
///
/// Pairs are processed by the normal strategy (smallest lcm first) and pairs
/// with coprime leading monomials are skipped.
pub fn buchberger<C: Field>(gens: &[MPoly<C>], order: MonOrder) -> Result<GroebnerBasis<C>> {
    let mut basis: Vec<MPoly<C>> = gens
        .iter()
        .filter(|g| !g.is_zero())
        .map(|g| g.make_monic(order))
        .collect();
    if basis.is_empty() {
        return Err(Error::ZeroIdeal);
    }
    let nvars = basis[0].nvars();
    if let Some(bad) = basis.iter().find(|g| g.nvars() != nvars) {
        return Err(Error::VarCountMismatch {
            expected: nvars,
            found: bad.nvars(),
        });
    }

    let lm = |p: &MPoly<C>| p.leading_monomial(order).unwrap().clone();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for j in 0..basis.len() {
        for i in 0..j {
            pairs.push((i, j));
        }
    }

    loop {
        // normal strategy: smallest lcm w.r.t. the order, ties by index
        let pick = pairs
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                let la = lm(&basis[a.0]).lcm(&lm(&basis[a.1]));
                let lb = lm(&basis[b.0]).lcm(&lm(&basis[b.1]));
                order.cmp(&la, &lb).then_with(|| a.cmp(b))
            })
            .map(|(k, _)| k);
        let Some(k) = pick else { break };
        let (i, j) = pairs.swap_remove(k);
        if lm(&basis[i]).is_coprime(&lm(&basis[j])) {
            continue;
        }
        let s = s_polynomial(&basis[i], &basis[j], order);
        let r = reduce(&s, &basis, order);
        if r.is_zero() {
            continue;
        }
        let r = r.make_monic(order);
        if lm(&r).is_one() {
            basis = vec![r];
            pairs.clear();
            break;
        }
        let idx = basis.len();
        basis.push(r);
        pairs.extend((0..idx).map(|i| (i, idx)));
    }

    Ok(GroebnerBasis {
        order,
        gens: interreduce(basis, order),
    })
}

fn interreduce<C: Field>(basis: Vec<MPoly<C>>, order: MonOrder) -> Vec<MPoly<C>> {
    let lm = |p: &MPoly<C>| p.leading_monomial(order).unwrap().clone();
    // minimal basis: drop generators whose leading monomial is divisible by another's
    let mut minimal: Vec<MPoly<C>> = Vec::new();
    for (i, g) in basis.iter().enumerate() {
        let m = lm(g);
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let mh = lm(h);
            j != i && mh.divides(&m) && (mh != m || j < i)
        });
        if !redundant {
            minimal.push(g.clone());
        }
    }
    let mut reduced = Vec::with_capacity(minimal.len());
    for i in 0..minimal.len() {
        let (m, c) = minimal[i]
            .leading_term(order)
            .map(|(m, c)| (m.clone(), c.clone()))
            .unwrap();
        let tail = &minimal[i] - &MPoly::term(m.clone(), c.clone());
        let others: Vec<MPoly<C>> = minimal
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, g)| g.clone())
            .collect();
        let mut g = reduce(&tail, &others, order);
        g.add_term(m, c);
        reduced.push(g.make_monic(order));
    }
    reduced.sort_by(|a, b| order.cmp(&lm(b), &lm(a)));
    reduced
}

pub fn ideal_member<C: Field>(p: &MPoly<C>, gb: &GroebnerBasis<C>) -> bool {
    reduce(p, &gb.gens, gb.order).is_zero()
}

/// Outcome of the zero-dimensionality test on the top-degree forms.
#[derive(Debug, Clone, PartialEq)]
pub struct MorphismCertificate {
    pub holds: bool,
    pub basis: GroebnerBasis<Rat>,
    /// `(variable index, exponent)` of a pure-power leading monomial, per variable found.
    pub pure_power_witness: Vec<(usize, u32)>,
    /// Zero-based indices of variables with no pure-power leading monomial.
    pub missing_variables: Vec<usize>,
}

#[derive(Serialize)]
struct CertificateReport {
    holds: bool,
    order: String,
    basis: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    witnesses: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    missing_variables: Option<Vec<String>>,
}

impl MorphismCertificate {
    pub fn to_json(&self) -> serde_json::Value {
        let report = CertificateReport {
            holds: self.holds,
            order: self.basis.order.to_string(),
            basis: self.basis.gens.iter().map(|g| g.to_text()).collect(),
            witnesses: self.holds.then(|| {
                self.pure_power_witness
                    .iter()
                    .map(|&(v, e)| if e == 1 { format!("x{}", v + 1) } else { format!("x{}^{e}", v + 1) })
                    .collect()
            }),
            missing_variables: (!self.holds)
                .then(|| self.missing_variables.iter().map(|v| format!("x{}", v + 1)).collect()),
        };
        serde_json::to_value(report).expect("serializable")
    }
}

/// Decides whether the forms share a common zero over the algebraic closure
/// other than the origin; `holds` means they do not.
pub fn morphism_condition(top_forms: &[Poly]) -> Result<MorphismCertificate> {
    let nonzero: Vec<&Poly> = top_forms.iter().filter(|p| !p.is_zero()).collect();
    if nonzero.is_empty() {
        return Err(Error::ZeroIdeal);
    }
    let d = nonzero[0].degree().unwrap();
    if d == 0 || nonzero.iter().any(|p| !p.is_homogeneous() || p.degree() != Some(d)) {
        return Err(Error::NotHomogeneous);
    }
    let gens: Vec<Poly> = nonzero.into_iter().cloned().collect();
    let basis = buchberger(&gens, MonOrder::DegRevLex)?;
    let n = basis.nvars();
    let mut best: Vec<Option<u32>> = vec![None; n];
    for m in basis.leading_monomials() {
        if let Some((v, e)) = m.as_pure_power() {
            best[v] = Some(best[v].map_or(e, |b| b.min(e)));
        }
    }
    let pure_power_witness: Vec<(usize, u32)> = best
        .iter()
        .enumerate()
        .filter_map(|(v, e)| e.map(|e| (v, e)))
        .collect();
    let missing_variables: Vec<usize> = best
        .iter()
        .enumerate()
        .filter(|(_, e)| e.is_none())
        .map(|(v, _)| v)
        .collect();
    Ok(MorphismCertificate {
        holds: missing_variables.is_empty(),
        basis,
        pure_power_witness,
        missing_variables,
    })
}

/// Leading monomials, for quick inspection in reports.
pub fn leading_set<C: Field>(gb: &GroebnerBasis<C>) -> BTreeSet<Monomial> {
    gb.leading_monomials().into_iter().collect()
}
