//! The graph `Gamma = {(x, P_1(x), ..., P_m(x))}` over a rational box.

use std::fmt;
use std::ops::RangeInclusive;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{serde_bigint, serde_rat, ProjPoint, Rat, RatVec};
use crate::asymptotics::{validate_hypotheses, ApproxFunction, DimFunction};
use crate::error::{Error, Result};
use crate::groebner::{morphism_condition, MorphismCertificate};
use crate::Poly;

/// Closed box `prod [lo_i, hi_i]` with rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    intervals: Vec<(Rat, Rat)>,
}

impl Domain {
    pub fn new(intervals: Vec<(Rat, Rat)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::EmptyVector);
        }
        if let Some((lo, hi)) = intervals.iter().find(|(lo, hi)| lo > hi) {
            return Err(Error::InvalidParameter(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(Domain { intervals })
    }

    /// `[0, 1]^n`
    pub fn unit(n: usize) -> Self {
        Domain {
            intervals: vec![(Rat::zero(), Rat::one()); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(Rat, Rat)] {
        &self.intervals
    }

    pub fn contains(&self, x: &RatVec) -> bool {
        x.len() == self.dim()
            && x.entries()
                .iter()
                .zip(&self.intervals)
                .all(|(v, (lo, hi))| lo <= v && v <= hi)
    }

    /// Integer numerator range `ceil(lo q) ..= floor(hi q)` per coordinate.
    pub fn numerator_ranges(&self, q: i64) -> Vec<(i64, i64)> {
        let qq = Rat::from_integer(BigInt::from(q));
        self.intervals
            .iter()
            .map(|(lo, hi)| {
                let a = (lo * &qq).ceil().to_integer().to_i64().expect("box fits i64");
                let b = (hi * &qq).floor().to_integer().to_i64().expect("box fits i64");
                (a, b)
            })
            .collect()
    }

    /// Primitive `p/q` in the box with `q` in `q_range`, ordered by `q` then lexicographically by `p`.
    pub fn enumerate_primitive(&self, q_range: RangeInclusive<i64>) -> PrimitiveIter<'_> {
        PrimitiveIter {
            domain: self,
            q: (*q_range.start()).max(1),
            q_end: *q_range.end(),
            ranges: Vec::new(),
            cur: None,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (lo, hi)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, " x ")?;
            }
            write!(f, "[{lo}, {hi}]")?;
        }
        Ok(())
    }
}

/// `p/q` with `gcd(p_1, ..., p_n, q) = 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PrimitivePoint {
    pub p: Vec<i64>,
    pub q: i64,
}

impl PrimitivePoint {
    pub fn to_ratvec(&self) -> RatVec {
        let q = BigInt::from(self.q);
        RatVec::new(
            self.p
                .iter()
                .map(|&p| Rat::new(BigInt::from(p), q.clone()))
                .collect(),
        )
        .expect("n >= 1")
    }
}

impl fmt::Display for PrimitivePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, p) in self.p.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, ")/{}", self.q)
    }
}

pub struct PrimitiveIter<'a> {
    domain: &'a Domain,
    q: i64,
    q_end: i64,
    ranges: Vec<(i64, i64)>,
    cur: Option<Vec<i64>>,
}

impl PrimitiveIter<'_> {
    fn advance(&mut self) -> Option<Vec<i64>> {
        loop {
            match self.cur.take() {
                None => {
                    if self.q > self.q_end {
                        return None;
                    }
                    self.ranges = self.domain.numerator_ranges(self.q);
                    if self.ranges.iter().any(|(a, b)| a > b) {
                        self.q += 1;
                        continue;
                    }
                    let start: Vec<i64> = self.ranges.iter().map(|r| r.0).collect();
                    self.cur = Some(start.clone());
                    return Some(start);
                }
                Some(mut p) => {
                    // odometer, last coordinate fastest
                    let mut i = p.len();
                    loop {
                        if i == 0 {
                            self.q += 1;
                            break;
                        }
                        i -= 1;
                        if p[i] < self.ranges[i].1 {
                            p[i] += 1;
                            for (pj, r) in p.iter_mut().zip(&self.ranges).skip(i + 1) {
                                *pj = r.0;
                            }
                            self.cur = Some(p.clone());
                            return Some(p);
                        }
                    }
                }
            }
        }
    }
}

impl Iterator for PrimitiveIter<'_> {
    type Item = PrimitivePoint;

    fn next(&mut self) -> Option<PrimitivePoint> {
        loop {
            let p = self.advance()?;
            let q = self.q;
            let g = p.iter().fold(q, |g, &x| g.gcd(&x));
            if g == 1 {
                return Some(PrimitivePoint { p, q });
            }
        }
    }
}

/// Integer form of a homogenized polynomial, for overflow-checked evaluation.
#[derive(Debug, Clone)]
struct IntForm {
    terms: Vec<(Vec<u32>, i128)>,
}

impl IntForm {
    fn from_poly(p: &Poly) -> Option<Self> {
        let terms = p
            .terms()
            .map(|(m, c)| Some((m.exps().to_vec(), c.to_integer().to_i128()?)))
            .collect::<Option<Vec<_>>>()?;
        Some(IntForm { terms })
    }

    fn eval(&self, x: &[i128]) -> Option<i128> {
        let mut acc: i128 = 0;
        for (exps, c) in &self.terms {
            let mut t = *c;
            for (xi, &e) in x.iter().zip(exps) {
                if e > 0 {
                    t = t.checked_mul(xi.checked_pow(e)?)?;
                }
            }
            acc = acc.checked_add(t)?;
        }
        Some(acc)
    }
}

fn eval_big(p: &Poly, x: &[BigInt]) -> BigInt {
    let mut acc = BigInt::zero();
    for (m, c) in p.terms() {
        let mut t = c.to_integer();
        for (xi, &e) in x.iter().zip(m.exps()) {
            if e > 0 {
                t *= xi.pow(e);
            }
        }
        acc += t;
    }
    acc
}

/// The system `Gamma` together with everything derived from it.
#[derive(Debug, Clone)]
pub struct VarietyContext {
    n: usize,
    polys: Vec<Poly>,
    degrees: Vec<u32>,
    d: u32,
    domain: Domain,
    lipschitz: Rat,
    morphism: MorphismCertificate,
    /// `P_j^*` with `X0` as the last variable.
    homogenized: Vec<Poly>,
    int_forms: Option<Vec<IntForm>>,
}

/// Upper bound for `|p|` on the box from absolute coefficients and endpoint magnitudes.
pub fn coefficient_bound(p: &Poly, domain: &Domain) -> Rat {
    let mags: Vec<Rat> = domain
        .intervals()
        .iter()
        .map(|(lo, hi)| lo.abs().max(hi.abs()))
        .collect();
    p.terms()
        .map(|(m, c)| {
            m.exps()
                .iter()
                .zip(&mags)
                .fold(c.abs(), |acc, (&e, mag)| acc * num_traits::pow(mag.clone(), e as usize))
        })
        .sum()
}

impl VarietyContext {
    pub fn build(polys: Vec<Poly>, domain: Domain) -> Result<Self> {
        let Some(first) = polys.first() else {
            return Err(Error::InvalidParameter("need at least one polynomial".into()));
        };
        let n = first.nvars();
        if n == 0 {
            return Err(Error::InvalidParameter("need at least one variable".into()));
        }
        for p in &polys {
            if p.nvars() != n {
                return Err(Error::VarCountMismatch {
                    expected: n,
                    found: p.nvars(),
                });
            }
        }
        if domain.dim() != n {
            return Err(Error::VarCountMismatch {
                expected: n,
                found: domain.dim(),
            });
        }
        if let Some(j) = polys.iter().position(|p| !p.is_integral()) {
            return Err(Error::NonIntegralSystem(j + 1));
        }
        let degrees: Vec<u32> = polys.iter().map(|p| p.degree().unwrap_or(0)).collect();
        let d = degrees.iter().copied().max().unwrap();
        if d == 0 {
            return Err(Error::ConstantSystem);
        }
        let top: Vec<Poly> = polys.iter().map(|p| p.homogeneous_part(d)).collect();
        let morphism = morphism_condition(&top)?;
        let lipschitz = Rat::one()
            + polys
                .iter()
                .map(|p| {
                    (0..n)
                        .map(|i| coefficient_bound(&p.derivative(i), &domain))
                        .sum::<Rat>()
                })
                .max()
                .unwrap();
        let homogenized = polys
            .iter()
            .map(|p| p.homogenize(d))
            .collect::<Result<Vec<_>>>()?;
        let int_forms = homogenized.iter().map(IntForm::from_poly).collect();
        Ok(VarietyContext {
            n,
            polys,
            degrees,
            d,
            domain,
            lipschitz,
            morphism,
            homogenized,
            int_forms,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.polys.len()
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn polys(&self) -> &[Poly] {
        &self.polys
    }

    pub fn homogenized(&self) -> &[Poly] {
        &self.homogenized
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Sup-norm bi-Lipschitz constant of `F` on the box.
    pub fn lipschitz(&self) -> &Rat {
        &self.lipschitz
    }

    pub fn morphism(&self) -> &MorphismCertificate {
        &self.morphism
    }

    /// `F(x) = (x, P_1(x), ..., P_m(x))`. Points outside the box are
    /// evaluated anyway with a logged warning.
    pub fn apply_f(&self, x: &RatVec) -> Result<RatVec> {
        if x.len() != self.n {
            return Err(Error::VarCountMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        if !self.domain.contains(x) {
            log::warn!("point {x} lies outside the box {}", self.domain);
        }
        let mut out = x.entries().to_vec();
        for p in &self.polys {
            out.push(p.evaluate(x.entries())?);
        }
        RatVec::new(out)
    }

    /// `F^*(X0 : ... : Xn) = (X0^d : X0^(d-1) X_i : P_j^*(X))`.
    pub fn apply_fstar(&self, point: &ProjPoint) -> Result<ProjPoint> {
        let coords = point.coords();
        if coords.len() != self.n + 1 {
            return Err(Error::VarCountMismatch {
                expected: self.n + 1,
                found: coords.len(),
            });
        }
        let x0 = &coords[0];
        let mut hx: Vec<BigInt> = coords[1..].to_vec();
        hx.push(x0.clone());
        let lead = x0.pow(self.d - 1);
        let mut out = Vec::with_capacity(1 + self.n + self.polys.len());
        out.push(&lead * x0);
        out.extend(coords[1..].iter().map(|xi| &lead * xi));
        out.extend(self.homogenized.iter().map(|h| eval_big(h, &hx)));
        ProjPoint::new(out).map_err(|_| Error::ImageVanishes(point.to_string()))
    }

    /// `H(F(p/q))` through the integer vector `F^*(q, p)`: `q^d / gcd(F^*(q, p))`.
    pub fn image_height(&self, pt: &PrimitivePoint) -> BigInt {
        if let Some(h) = self.image_height_fast(pt) {
            return BigInt::from(h);
        }
        let q = BigInt::from(pt.q);
        let mut hx: Vec<BigInt> = pt.p.iter().map(|&p| BigInt::from(p)).collect();
        hx.push(q.clone());
        let qd = q.pow(self.d);
        let mut g = qd.clone();
        let lead = q.pow(self.d - 1);
        for p in &pt.p {
            g = g.gcd(&(&lead * BigInt::from(*p)));
        }
        for h in &self.homogenized {
            g = g.gcd(&eval_big(h, &hx));
        }
        qd / g
    }

    fn image_height_fast(&self, pt: &PrimitivePoint) -> Option<i128> {
        let forms = self.int_forms.as_ref()?;
        let q = pt.q as i128;
        let lead = q.checked_pow(self.d - 1)?;
        let qd = lead.checked_mul(q)?;
        let mut g = qd;
        for &p in &pt.p {
            g = g.gcd(&lead.checked_mul(p as i128)?);
        }
        let mut hx: Vec<i128> = pt.p.iter().map(|&p| p as i128).collect();
        hx.push(q);
        for f in forms {
            g = g.gcd(&f.eval(&hx)?);
        }
        Some(qd / g)
    }

    /// `H(F(p/q)) / q^d`.
    pub fn height_ratio(&self, pt: &PrimitivePoint) -> Rat {
        Rat::new(self.image_height(pt), BigInt::from(pt.q).pow(self.d))
    }

    pub fn enumerate_primitive(&self, q_range: RangeInclusive<i64>) -> PrimitiveIter<'_> {
        self.domain.enumerate_primitive(q_range)
    }

    pub fn height_bound_scan(&self, q_max: i64) -> HeightBoundReport {
        self.height_bound_scan_range(1..=q_max)
    }

    /// Ratios `H(F(p/q))/q^d` aggregated per `q`; parallel over `q`.
    pub fn height_bound_scan_range(&self, q_range: RangeInclusive<i64>) -> HeightBoundReport {
        let rows: Vec<HeightRow> = q_range
            .clone()
            .into_par_iter()
            .filter_map(|q| {
                let mut count = 0u64;
                let mut min: Option<Rat> = None;
                let mut max: Option<Rat> = None;
                for pt in self.enumerate_primitive(q..=q) {
                    let r = self.height_ratio(&pt);
                    count += 1;
                    if min.as_ref().is_none_or(|m| r < *m) {
                        min = Some(r.clone());
                    }
                    if max.as_ref().is_none_or(|m| r > *m) {
                        max = Some(r);
                    }
                }
                Some(HeightRow {
                    q,
                    count,
                    min_ratio: min?,
                    max_ratio: max?,
                })
            })
            .collect();
        let delta_hat = rows.iter().map(|r| r.min_ratio.clone()).min();
        let upper_bound_violations = rows
            .iter()
            .filter(|r| r.max_ratio > Rat::one())
            .map(|r| r.q)
            .collect();
        HeightBoundReport {
            q_min: *q_range.start(),
            q_max: *q_range.end(),
            d: self.d,
            morphism_holds: self.morphism.holds,
            advisory: !self.morphism.holds,
            count: rows.iter().map(|r| r.count).sum(),
            delta_hat,
            upper_bound_violations,
            rows,
        }
    }

    /// Rational points of height `D <= d_max` off `Gamma` whose sup-distance to
    /// `Gamma` over the box is at most `psi(D)`.
    pub fn off_manifold_check(&self, psi: &ApproxFunction, d_max: i64) -> Result<OffManifoldReport> {
        self.off_manifold_check_with(psi, d_max, DEFAULT_DEPTH)
    }

    pub fn off_manifold_check_with(
        &self,
        psi: &ApproxFunction,
        d_max: i64,
        depth: u32,
    ) -> Result<OffManifoldReport> {
        if matches!(psi, ApproxFunction::Table(_)) {
            return Err(Error::Refused("growth condition r^d psi(r) -> 0 cannot be verified for a tabulated psi".into()));
        }
        let hyp = validate_hypotheses(psi, &DimFunction::power(Rat::one()), self.n as u32, self.d);
        if !hyp.growth_condition.ok() {
            return Err(Error::Refused(format!(
                "growth condition r^d psi(r) -> 0 fails: {}",
                hyp.growth_condition.detail
            )));
        }
        let mut findings = Vec::new();
        let mut candidates = 0u64;
        for big_d in 1..=d_max {
            let dd = BigInt::from(big_d);
            let (psi_lo, psi_hi) = psi.eval_bounds(&dd);
            let den = Rat::from_integer(dd.clone());
            let x_ranges: Vec<(i64, i64)> = self
                .domain
                .intervals()
                .iter()
                .map(|(lo, hi)| {
                    let a = ((lo - &psi_hi) * &den).ceil().to_integer().to_i64().unwrap();
                    let b = ((hi + &psi_hi) * &den).floor().to_integer().to_i64().unwrap();
                    (a, b)
                })
                .collect();
            for a in odometer(&x_ranges) {
                let rx: Vec<Rat> = a.iter().map(|&ai| Rat::new(ai.into(), dd.clone())).collect();
                let Some(region) = self.neighbourhood(&rx, &psi_hi) else { continue };
                let encl: Vec<Interval> = self.polys.iter().map(|p| enclose(p, &region)).collect();
                let y_ranges: Vec<(i64, i64)> = encl
                    .iter()
                    .map(|iv| {
                        let a = ((&iv.lo - &psi_hi) * &den).ceil().to_integer().to_i64().unwrap();
                        let b = ((&iv.hi + &psi_hi) * &den).floor().to_integer().to_i64().unwrap();
                        (a, b)
                    })
                    .collect();
                let on_curve: Vec<Rat> = self
                    .polys
                    .iter()
                    .map(|p| p.evaluate(&rx).unwrap())
                    .collect();
                for b in odometer(&y_ranges) {
                    let g = a.iter().chain(&b).fold(big_d, |g, x| g.gcd(x));
                    if g != 1 {
                        continue;
                    }
                    let ry: Vec<Rat> = b.iter().map(|&bj| Rat::new(bj.into(), dd.clone())).collect();
                    if ry == on_curve {
                        continue;
                    }
                    candidates += 1;
                    let class = self.classify(&rx, &ry, &region, &psi_lo, &psi_hi, depth);
                    let (status, witness) = match class {
                        Classification::Outside => continue,
                        Classification::Inside(w) => (PointStatus::Inside, Some(w)),
                        Classification::Uncertain => (PointStatus::Uncertain, None),
                    };
                    let mut entries = rx.clone();
                    entries.extend(ry);
                    findings.push(OffManifoldFinding {
                        point: RatVec::new(entries).unwrap(),
                        height: big_d,
                        status,
                        witness: witness.map(|w| RatVec::new(w).unwrap()),
                    });
                }
            }
        }
        Ok(OffManifoldReport {
            psi: psi.to_string(),
            d_max,
            depth,
            candidates_checked: candidates,
            findings,
        })
    }

    /// `box ∩ [r_x - rad, r_x + rad]`, or `None` if empty.
    fn neighbourhood(&self, rx: &[Rat], rad: &Rat) -> Option<Vec<Interval>> {
        rx.iter()
            .zip(self.domain.intervals())
            .map(|(c, (lo, hi))| {
                let a = (c - rad).max(lo.clone());
                let b = (c + rad).min(hi.clone());
                (a <= b).then_some(Interval { lo: a, hi: b })
            })
            .collect()
    }

    /// `max(|x - r_x|, |P_j(x) - r_y_j|)`
    fn graph_gap(&self, x: &[Rat], rx: &[Rat], ry: &[Rat]) -> Rat {
        let mut g = Rat::zero();
        for (a, b) in x.iter().zip(rx) {
            g = g.max((a - b).abs());
        }
        for (p, y) in self.polys.iter().zip(ry) {
            g = g.max((p.evaluate(x).unwrap() - y).abs());
        }
        g
    }

    fn classify(
        &self,
        rx: &[Rat],
        ry: &[Rat],
        region: &[Interval],
        psi_lo: &Rat,
        psi_hi: &Rat,
        depth: u32,
    ) -> Classification {
        let two = Rat::from_integer(2.into());
        let mut boxes = vec![region.to_vec()];
        for level in 0..=depth {
            let mut kept = Vec::new();
            for b in boxes {
                let centre: Vec<Rat> = b.iter().map(|iv| (&iv.lo + &iv.hi) / &two).collect();
                let gc = self.graph_gap(&centre, rx, ry);
                if gc <= *psi_lo {
                    return Classification::Inside(centre);
                }
                let half = b
                    .iter()
                    .map(|iv| (&iv.hi - &iv.lo) / &two)
                    .max()
                    .unwrap_or_else(Rat::zero);
                let lip_lower = &gc - &self.lipschitz * &half;
                let mut encl_lower = Rat::zero();
                for (iv, c) in b.iter().zip(rx) {
                    encl_lower = encl_lower.max(iv.distance_to(c));
                }
                for (p, y) in self.polys.iter().zip(ry) {
                    encl_lower = encl_lower.max(enclose(p, &b).distance_to(y));
                }
                if lip_lower.max(encl_lower) <= *psi_hi {
                    kept.push(b);
                }
            }
            if kept.is_empty() {
                return Classification::Outside;
            }
            if level == depth || kept.len() > MAX_BOXES {
                return Classification::Uncertain;
            }
            boxes = kept.into_iter().flat_map(|b| bisect(&b)).collect();
        }
        Classification::Uncertain
    }
}

const DEFAULT_DEPTH: u32 = 20;
const MAX_BOXES: usize = 4096;

enum Classification {
    Inside(Vec<Rat>),
    Outside,
    Uncertain,
}

fn odometer(ranges: &[(i64, i64)]) -> impl Iterator<Item = Vec<i64>> + '_ {
    let empty = ranges.iter().any(|(a, b)| a > b);
    let mut cur: Option<Vec<i64>> = (!empty).then(|| ranges.iter().map(|r| r.0).collect());
    std::iter::from_fn(move || {
        let out = cur.clone()?;
        let mut next = out.clone();
        let mut i = next.len();
        cur = loop {
            if i == 0 {
                break None;
            }
            i -= 1;
            if next[i] < ranges[i].1 {
                next[i] += 1;
                for j in i + 1..next.len() {
                    next[j] = ranges[j].0;
                }
                break Some(next);
            }
        };
        Some(out)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Interval {
    lo: Rat,
    hi: Rat,
}

impl Interval {
    fn point(v: Rat) -> Self {
        Interval { lo: v.clone(), hi: v }
    }

    fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn mul(&self, o: &Interval) -> Interval {
        let c = [&self.lo * &o.lo, &self.lo * &o.hi, &self.hi * &o.lo, &self.hi * &o.hi];
        Interval {
            lo: c.iter().min().unwrap().clone(),
            hi: c.iter().max().unwrap().clone(),
        }
    }

    fn pow(&self, e: u32) -> Interval {
        if e == 0 {
            return Interval::point(Rat::one());
        }
        let a = num_traits::pow(self.lo.clone(), e as usize);
        let b = num_traits::pow(self.hi.clone(), e as usize);
        if e % 2 == 1 {
            Interval { lo: a, hi: b }
        } else if self.lo.is_negative() && self.hi.is_positive() {
            Interval {
                lo: Rat::zero(),
                hi: a.max(b),
            }
        } else {
            Interval {
                lo: a.clone().min(b.clone()),
                hi: a.max(b),
            }
        }
    }

    fn distance_to(&self, v: &Rat) -> Rat {
        if *v < self.lo {
            &self.lo - v
        } else if *v > self.hi {
            v - &self.hi
        } else {
            Rat::zero()
        }
    }
}

/// Natural interval extension of `p` over a box.
fn enclose(p: &Poly, region: &[Interval]) -> Interval {
    let mut acc = Interval::point(Rat::zero());
    for (m, c) in p.terms() {
        let mut t = Interval::point(c.clone());
        for (iv, &e) in region.iter().zip(m.exps()) {
            if e > 0 {
                t = t.mul(&iv.pow(e));
            }
        }
        acc = acc.add(&t);
    }
    acc
}

fn bisect(b: &[Interval]) -> Vec<Vec<Interval>> {
    let two = Rat::from_integer(2.into());
    let mut out: Vec<Vec<Interval>> = vec![Vec::new()];
    for iv in b {
        let mid = (&iv.lo + &iv.hi) / &two;
        let halves = if iv.lo == iv.hi {
            vec![iv.clone()]
        } else {
            vec![
                Interval { lo: iv.lo.clone(), hi: mid.clone() },
                Interval { lo: mid, hi: iv.hi.clone() },
            ]
        };
        out = out
            .into_iter()
            .flat_map(|prefix| {
                halves.iter().map(move |h| {
                    let mut v = prefix.clone();
                    v.push(h.clone());
                    v
                })
            })
            .collect();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeightRow {
    pub q: i64,
    pub count: u64,
    #[serde(with = "serde_rat")]
    pub min_ratio: Rat,
    #[serde(with = "serde_rat")]
    pub max_ratio: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HeightBoundReport {
    pub q_min: i64,
    pub q_max: i64,
    pub d: u32,
    pub morphism_holds: bool,
    /// Set when the morphism condition fails and no lower bound is expected.
    pub advisory: bool,
    pub count: u64,
    #[serde(serialize_with = "ser_opt_rat")]
    pub delta_hat: Option<Rat>,
    /// Values of `q` with some ratio above 1 (always empty in exact arithmetic).
    pub upper_bound_violations: Vec<i64>,
    pub rows: Vec<HeightRow>,
}

fn ser_opt_rat<S: serde::Serializer>(r: &Option<Rat>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

impl HeightBoundReport {
    /// Smallest ratio among rows with `q` in `range`.
    pub fn min_ratio_over(&self, range: RangeInclusive<i64>) -> Option<Rat> {
        self.rows
            .iter()
            .filter(|r| range.contains(&r.q))
            .map(|r| r.min_ratio.clone())
            .min()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("q,count,min_ratio,max_ratio\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", r.q, r.count, r.min_ratio, r.max_ratio));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Inside,
    Uncertain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OffManifoldFinding {
    pub point: RatVec,
    pub height: i64,
    pub status: PointStatus,
    /// A point of the box whose image is within `psi(D)` of `point`.
    pub witness: Option<RatVec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OffManifoldReport {
    pub psi: String,
    pub d_max: i64,
    pub depth: u32,
    pub candidates_checked: u64,
    pub findings: Vec<OffManifoldFinding>,
}

impl OffManifoldReport {
    /// Findings of height strictly above `d0`.
    pub fn violations_above(&self, d0: i64) -> Vec<&OffManifoldFinding> {
        self.findings.iter().filter(|f| f.height > d0).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("height,status,point\n");
        for f in &self.findings {
            let status = match f.status {
                PointStatus::Inside => "inside",
                PointStatus::Uncertain => "uncertain",
            };
            out.push_str(&format!("{},{},\"{}\"\n", f.height, status, f.point));
        }
        out
    }
}

/// Exact height of `F(x)` computed directly from the affine image.
pub fn affine_image_height(ctx: &VarietyContext, x: &RatVec) -> Result<BigInt> {
    Ok(ctx.apply_f(x)?.affine_height())
}

#[derive(Debug, Clone, Serialize)]
pub struct ContextSummary {
    pub n: usize,
    pub m: usize,
    pub d: u32,
    pub degrees: Vec<u32>,
    pub polys: Vec<String>,
    pub homogenized: Vec<String>,
    pub domain: String,
    #[serde(with = "serde_rat")]
    pub lipschitz: Rat,
    pub morphism_holds: bool,
}

impl VarietyContext {
    pub fn summary(&self) -> ContextSummary {
        use crate::multipoly::VarNames;
        ContextSummary {
            n: self.n,
            m: self.m(),
            d: self.d,
            degrees: self.degrees.clone(),
            polys: self.polys.iter().map(|p| p.to_text()).collect(),
            homogenized: self
                .homogenized
                .iter()
                .map(|p| p.to_text_with(VarNames::Projective))
                .collect(),
            domain: self.domain.to_string(),
            lipschitz: self.lipschitz.clone(),
            morphism_holds: self.morphism.holds,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PointHeights {
    pub point: RatVec,
    #[serde(with = "serde_bigint")]
    pub affine_height: BigInt,
    pub projective: ProjPoint,
    #[serde(with = "serde_bigint")]
    pub projective_height: BigInt,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image: Option<RatVec>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_bigint")]
    pub image_height: Option<BigInt>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub image_projective: Option<ProjPoint>,
    #[serde(skip_serializing_if = "Option::is_none", serialize_with = "ser_opt_bigint")]
    pub image_projective_height: Option<BigInt>,
}

fn ser_opt_bigint<S: serde::Serializer>(r: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Affine and projective heights of `x`, and of its image when a system is given.
pub fn point_heights(ctx: Option<&VarietyContext>, x: &RatVec) -> Result<PointHeights> {
    let projective = x.to_projective();
    let mut out = PointHeights {
        point: x.clone(),
        affine_height: x.affine_height(),
        projective_height: projective.height(),
        projective: projective.clone(),
        image: None,
        image_height: None,
        image_projective: None,
        image_projective_height: None,
    };
    if let Some(ctx) = ctx {
        let image = ctx.apply_f(x)?;
        let fstar = ctx.apply_fstar(&projective)?;
        out.image_height = Some(image.affine_height());
        out.image_projective_height = Some(fstar.height());
        out.image = Some(image);
        out.image_projective = Some(fstar);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::parse_rat;
    use crate::parse::parse_polynomial;

    fn ctx(polys: &[&str], n: usize) -> VarietyContext {
        let polys = polys.iter().map(|s| parse_polynomial(s, n).unwrap()).collect();
        VarietyContext::build(polys, Domain::unit(n)).unwrap()
    }

    fn rv(s: &str) -> RatVec {
        s.parse().unwrap()
    }

    fn q(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn build_context_examples() {
        let parabola = ctx(&["x1^2"], 1);
        assert_eq!(parabola.lipschitz(), &q("3"));
        assert!(parabola.morphism().holds);
        let veronese = ctx(&["x1^2", "x1*x2", "x2^2"], 2);
        assert!(veronese.morphism().holds);
        let hyper = ctx(&["x1^2 + x2^2"], 2);
        assert!(!hyper.morphism().holds);
    }

    #[test]
    fn build_context_errors() {
        let c = VarietyContext::build(vec![parse_polynomial("3", 1).unwrap()], Domain::unit(1));
        assert_eq!(c.unwrap_err(), Error::ConstantSystem);
        let half = Poly::constant(1, q("1/2"));
        let p = &parse_polynomial("x1^2", 1).unwrap() + &half;
        let c = VarietyContext::build(vec![p], Domain::unit(1));
        assert_eq!(c.unwrap_err(), Error::NonIntegralSystem(1));
        let c = VarietyContext::build(vec![parse_polynomial("x1", 1).unwrap()], Domain::unit(2));
        assert!(matches!(c, Err(Error::VarCountMismatch { .. })));
    }

    #[test]
    fn apply_f_examples() {
        let parabola = ctx(&["x1^2"], 1);
        assert_eq!(parabola.apply_f(&rv("1/2")).unwrap(), rv("1/2, 1/4"));
        let g = ctx(&["x1^2 + x2^2 + 3", "x1^2 - x2^2"], 2);
        assert_eq!(g.apply_f(&rv("0, 0")).unwrap(), rv("0, 0, 3, 0"));
        let g = ctx(&["x1^2 + x2^2", "x1^2 - x2^2"], 2);
        assert_eq!(g.apply_f(&rv("1/2, 1/2")).unwrap(), rv("1/2, 1/2, 1/2, 0"));
        // outside the box: evaluated, not an error
        assert_eq!(parabola.apply_f(&rv("2")).unwrap(), rv("2, 4"));
    }

    #[test]
    fn apply_fstar_examples() {
        let parabola = ctx(&["x1^2"], 1);
        let img = parabola.apply_fstar(&"2:1".parse().unwrap()).unwrap();
        assert_eq!(img.to_string(), "4:2:1");
        assert_eq!(img.height(), BigInt::from(4));
        let origin = parabola.apply_fstar(&"1:0".parse().unwrap()).unwrap();
        assert_eq!(origin.to_string(), "1:0:0");
        let a = parabola.apply_fstar(&ProjPoint::new(vec![3.into(), 5.into()]).unwrap());
        let b = parabola.apply_fstar(&ProjPoint::new(vec![(-6).into(), (-10).into()]).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn fstar_vanishes_only_without_morphism() {
        // top form x1*x2 vanishes at (0 : 1 : 0)
        let g = ctx(&["x1*x2"], 2);
        assert!(!g.morphism().holds);
        assert!(matches!(
            g.apply_fstar(&"0:1:0".parse().unwrap()),
            Err(Error::ImageVanishes(_))
        ));
        let good = ctx(&["x1^2 + x2^2", "x1^2 - x2^2"], 2);
        assert!(good.apply_fstar(&"0:1:0".parse().unwrap()).is_ok());
    }

    #[test]
    fn enumerate_examples() {
        let d1 = Domain::unit(1);
        let pts: Vec<String> = d1.enumerate_primitive(4..=4).map(|p| p.to_string()).collect();
        assert_eq!(pts, vec!["(1)/4", "(3)/4"]);
        let d2 = Domain::unit(2);
        let pts: Vec<String> = d2.enumerate_primitive(2..=2).map(|p| p.to_string()).collect();
        assert_eq!(pts, vec!["(0, 1)/2", "(1, 0)/2", "(1, 1)/2", "(1, 2)/2", "(2, 1)/2"]);
        for prime in [2i64, 3, 5, 7, 11, 13] {
            assert_eq!(d1.enumerate_primitive(prime..=prime).count() as i64, prime - 1);
        }
        let ends: Vec<String> = d1.enumerate_primitive(1..=1).map(|p| p.to_string()).collect();
        assert_eq!(ends, vec!["(0)/1", "(1)/1"]);
    }

    #[test]
    fn enumerate_general_box() {
        let dom = Domain::new(vec![(q("-1/2"), q("1/3"))]).unwrap();
        let pts: Vec<String> = dom.enumerate_primitive(1..=3).map(|p| p.to_string()).collect();
        assert_eq!(pts, vec!["(0)/1", "(-1)/2", "(-1)/3", "(1)/3"]);
    }

    #[test]
    fn height_scan_examples() {
        let parabola = ctx(&["x1^2"], 1);
        let rep = parabola.height_bound_scan(10);
        assert!(rep.rows.iter().all(|r| r.min_ratio == q("1") && r.max_ratio == q("1")));
        assert_eq!(rep.delta_hat, Some(q("1")));
        let g = ctx(&["x1^2 + x2^2", "x1^2 - x2^2"], 2);
        let pt = PrimitivePoint { p: vec![1, 1], q: 2 };
        assert_eq!(g.image_height(&pt), BigInt::from(2));
        assert_eq!(g.height_ratio(&pt), q("1/2"));
        let rep = g.height_bound_scan(1);
        assert_eq!(rep.rows[0].min_ratio, q("1"));
        assert_eq!(rep.rows[0].count, 4);
        assert!(rep.to_csv().starts_with("q,count,min_ratio,max_ratio\n1,4,1,1\n"));
    }

    #[test]
    fn image_height_routes_agree_including_bigint_fallback() {
        let g = ctx(&["x1^3 - 2*x1*x2 + 5", "7*x2^2 + x1"], 2);
        for pt in g.enumerate_primitive(1..=12) {
            let direct = affine_image_height(&g, &pt.to_ratvec()).unwrap();
            assert_eq!(g.image_height(&pt), direct);
        }
        // i128 overflow forces the BigInt path
        let big = ctx(&["x1^9"], 1);
        let pt = PrimitivePoint { p: vec![1], q: 1_000_003 };
        assert!(big.image_height_fast(&pt).is_none());
        assert_eq!(big.image_height(&pt), affine_image_height(&big, &pt.to_ratvec()).unwrap());
    }

    #[test]
    fn off_manifold_refuses_without_growth() {
        let parabola = ctx(&["x1^2"], 1);
        let psi = ApproxFunction::power(q("1"));
        assert!(matches!(parabola.off_manifold_check(&psi, 10), Err(Error::Refused(_))));
        let psi = ApproxFunction::power(q("2"));
        assert!(matches!(parabola.off_manifold_check(&psi, 10), Err(Error::Refused(_))));
    }

    #[test]
    fn off_manifold_small_heights() {
        let parabola = ctx(&["x1^2"], 1);
        let psi = ApproxFunction::power(q("3"));
        let rep = parabola.off_manifold_check(&psi, 3).unwrap();
        // (0, 1) is at distance exactly 1 = psi(1) from (0, 0)
        assert!(rep
            .findings
            .iter()
            .any(|f| f.point == rv("0, 1") && f.status == PointStatus::Inside));
        for f in &rep.findings {
            assert!(f.point.entries()[1] != &f.point.entries()[0] * &f.point.entries()[0]);
        }
    }

    #[test]
    fn interval_enclosure_contains_values() {
        let p = parse_polynomial("x1^2 - 3*x1*x2 + x2^3 - 1", 2).unwrap();
        let region = vec![
            Interval { lo: q("-1/2"), hi: q("1/3") },
            Interval { lo: q("1/4"), hi: q("2") },
        ];
        let e = enclose(&p, &region);
        for a in ["-1/2", "-1/5", "0", "1/3"] {
            for b in ["1/4", "1", "3/2", "2"] {
                let v = p.evaluate(&[q(a), q(b)]).unwrap();
                assert!(e.lo <= v && v <= e.hi);
            }
        }
        assert_eq!(bisect(&region).len(), 4);
    }
}
