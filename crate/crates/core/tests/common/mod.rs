#![allow(dead_code)]

use intrinsic::{parse_polynomial, Domain, Monomial, Poly, Rat, VarietyContext};
use proptest::prelude::*;

pub fn rat() -> impl Strategy<Value = Rat> {
    (-20i64..=20, 1i64..=6).prop_map(|(a, b)| Rat::new(a.into(), b.into()))
}

pub fn int_poly(nvars: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    let term = (proptest::collection::vec(0..=max_deg, nvars), -9i64..=9);
    proptest::collection::vec(term, 0..=max_terms).prop_map(move |terms| {
        let mut p = Poly::zero(nvars);
        for (mut exps, c) in terms {
            // clip to total degree max_deg
            while exps.iter().sum::<u32>() > max_deg {
                let i = exps.iter().position(|&e| e > 0).unwrap();
                exps[i] -= 1;
            }
            p.add_term(Monomial::new(exps), Rat::from_integer(c.into()));
        }
        p
    })
}

pub fn rat_poly(nvars: usize, max_deg: u32, max_terms: usize) -> impl Strategy<Value = Poly> {
    (int_poly(nvars, max_deg, max_terms), 1i64..=5)
        .prop_map(|(p, den)| p.scale(&Rat::new(1.into(), den.into())))
}

pub fn context(polys: &[&str], n: usize) -> VarietyContext {
    let polys = polys.iter().map(|s| parse_polynomial(s, n).unwrap()).collect();
    VarietyContext::build(polys, Domain::unit(n)).unwrap()
}
