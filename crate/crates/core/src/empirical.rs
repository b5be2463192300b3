//! Finite-stage versions of the limsup covers, the tail sums that control
//! the convergence case, and a box-counting dimension estimator.

use std::iter::Sum;

use num_bigint::BigInt;
use num_traits::{Float, FromPrimitive, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{serde_rat, Rat};
use crate::asymptotics::{dimension_formula, ApproxFunction, DimFunction};
use crate::error::{Error, Result};
use crate::variety::{PrimitivePoint, VarietyContext};

fn to_t<T: FromPrimitive>(v: f64) -> T {
    T::from_f64(v).expect("representable")
}

fn big_to_t<T: FromPrimitive>(v: &BigInt) -> T {
    to_t(v.to_f64().expect("finite"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailSum<T> {
    pub n_lo: i64,
    pub q_hi: i64,
    /// `sum_{N<q<=Q} sum_{p/q} f(psi(H(F(p/q))))`
    pub inner: T,
    /// `sum_{N<q<=Q} q^n f(psi(q^d))`
    pub comparison: T,
    /// `C` with `inner <= C * comparison`: worst per-point ratio
    /// `f(psi(H))/f(psi(q^d))` times worst point density `count_q / q^n`.
    pub constant: T,
    pub points: u64,
    pub bound_holds: bool,
}

/// Partial sums over `N < q <= Q` of the two series compared in the
/// convergence argument.
pub fn tail_sum<T>(
    ctx: &VarietyContext,
    psi: &ApproxFunction,
    f: &DimFunction,
    n_lo: i64,
    q_hi: i64,
) -> Result<TailSum<T>>
where
    T: Float + FromPrimitive + Send + Sync + Sum,
{
    if n_lo > q_hi {
        return Err(Error::InvalidParameter(format!("need N <= Q, got N = {n_lo}, Q = {q_hi}")));
    }
    let n = ctx.n() as i32;
    let d = ctx.d();
    let per_q: Vec<(T, T, T, T, u64)> = ((n_lo + 1)..=q_hi)
        .into_par_iter()
        .map(|q| {
            let qd: T = big_to_t(&BigInt::from(q).pow(d));
            let base = f.eval(psi.eval(qd));
            let mut inner = T::zero();
            let mut worst = T::zero();
            let mut count = 0u64;
            for pt in ctx.enumerate_primitive(q..=q) {
                let h: T = big_to_t(&ctx.image_height(&pt));
                let v = f.eval(psi.eval(h));
                inner = inner + v;
                worst = worst.max(v / base);
                count += 1;
            }
            let qn: T = to_t::<T>(q as f64).powi(n);
            let density = to_t::<T>(count as f64) / qn;
            (inner, qn * base, worst, density, count)
        })
        .collect();
    let inner: T = per_q.iter().map(|r| r.0).sum();
    let comparison: T = per_q.iter().map(|r| r.1).sum();
    let worst = per_q.iter().map(|r| r.2).fold(T::zero(), T::max);
    let density = per_q.iter().map(|r| r.3).fold(T::zero(), T::max);
    let constant = worst * density;
    let slack = T::one() + to_t::<T>(1e-9);
    Ok(TailSum {
        n_lo,
        q_hi,
        inner,
        comparison,
        constant,
        points: per_q.iter().map(|r| r.4).sum(),
        bound_holds: inner <= constant * comparison * slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    /// `psi(q^d) / K`: balls contained in the approximable set.
    Lower,
    /// `psi(H(F(p/q)))`: balls covering it.
    Upper,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ball {
    pub center: PrimitivePoint,
    #[serde(with = "serde_rat")]
    pub radius: Rat,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FiniteStageCover {
    /// Window `(q_lo, q_hi]`.
    pub q_lo: i64,
    pub q_hi: i64,
    pub mode: RadiusMode,
    pub balls: Vec<Ball>,
}

/// Sup-norm balls around every primitive `p/q` in the box with `q_lo < q <= q_hi`.
pub fn build_cover(
    ctx: &VarietyContext,
    psi: &ApproxFunction,
    q_lo: i64,
    q_hi: i64,
    mode: RadiusMode,
) -> Result<FiniteStageCover> {
    if q_lo >= q_hi {
        return Err(Error::InvalidParameter(format!("need Q_lo < Q_hi, got {q_lo} >= {q_hi}")));
    }
    let d = ctx.d();
    let k = ctx.lipschitz().clone();
    let balls: Vec<Ball> = ((q_lo + 1)..=q_hi)
        .into_par_iter()
        .flat_map_iter(|q| {
            let lower = psi.eval_rat(&BigInt::from(q).pow(d)) / &k;
            ctx.enumerate_primitive(q..=q)
                .map(|pt| {
                    let radius = match mode {
                        RadiusMode::Lower => lower.clone(),
                        RadiusMode::Upper => psi.eval_rat(&ctx.image_height(&pt)),
                    };
                    Ball { center: pt, radius }
                })
                .collect::<Vec<_>>()
        })
        .collect();
    Ok(FiniteStageCover {
        q_lo,
        q_hi,
        mode,
        balls,
    })
}

impl FiniteStageCover {
    pub fn min_radius(&self) -> Option<&Rat> {
        self.balls.iter().map(|b| &b.radius).min()
    }

    /// Number of grid cells of side `eps` (anchored at the lower box corner)
    /// meeting the union of the balls.
    pub fn count_cells(&self, ctx: &VarietyContext, eps: &Rat) -> u128 {
        let intervals = ctx.domain().intervals();
        let cells: Vec<i64> = intervals
            .iter()
            .map(|(lo, hi)| {
                let c = ((hi - lo) / eps).ceil().to_integer().to_i64().expect("grid fits i64");
                c.max(1)
            })
            .collect();
        let boxes: Vec<Vec<(i64, i64)>> = self
            .balls
            .iter()
            .filter_map(|b| {
                let q = BigInt::from(b.center.q);
                b.center
                    .p
                    .iter()
                    .zip(intervals)
                    .zip(&cells)
                    .map(|((&p, (lo, _)), &ncell)| {
                        let c = Rat::new(BigInt::from(p), q.clone());
                        let a = ((&c - &b.radius - lo) / eps).floor().to_integer().to_i64()?;
                        let z = ((&c + &b.radius - lo) / eps).floor().to_integer().to_i64()?;
                        let (a, z) = (a.max(0), z.min(ncell - 1));
                        (a <= z).then_some((a, z))
                    })
                    .collect::<Option<Vec<_>>>()
            })
            .collect();
        union_count(boxes)
    }
}

/// Number of integer lattice cells in a union of closed integer boxes.
pub fn union_count(mut boxes: Vec<Vec<(i64, i64)>>) -> u128 {
    if boxes.is_empty() {
        return 0;
    }
    if boxes[0].len() == 1 {
        boxes.sort_unstable_by_key(|b| b[0]);
        let mut total = 0u128;
        let (mut a, mut z) = boxes[0][0];
        for b in &boxes[1..] {
            let (s, e) = b[0];
            if s > z + 1 {
                total += (z - a + 1) as u128;
                a = s;
                z = e;
            } else {
                z = z.max(e);
            }
        }
        return total + (z - a + 1) as u128;
    }
    // sweep along the first axis, recursing on the active cross-sections
    let mut events: Vec<i64> = boxes.iter().flat_map(|b| [b[0].0, b[0].1 + 1]).collect();
    events.sort_unstable();
    events.dedup();
    boxes.sort_unstable_by_key(|b| b[0].0);
    let mut total = 0u128;
    let mut next = 0usize;
    let mut active: Vec<&Vec<(i64, i64)>> = Vec::new();
    for w in events.windows(2) {
        let (x, x_next) = (w[0], w[1]);
        active.retain(|b| b[0].1 >= x);
        while next < boxes.len() && boxes[next][0].0 <= x {
            active.push(&boxes[next]);
            next += 1;
        }
        if active.is_empty() {
            continue;
        }
        let slice: Vec<Vec<(i64, i64)>> = active.iter().map(|b| b[1..].to_vec()).collect();
        total += union_count(slice) * (x_next - x) as u128;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Level {
    pub q: i64,
    #[serde(with = "serde_rat")]
    pub eps: Rat,
    pub count: u128,
    pub balls: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionEstimate {
    #[serde(with = "serde_rat")]
    pub tau: Rat,
    pub levels: Vec<Level>,
    /// Least-squares slope of `ln N(eps)` against `ln(1/eps)`.
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    #[serde(with = "serde_rat")]
    pub predicted: Rat,
}

impl DimensionEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("level,eps,count\n");
        for (i, l) in self.levels.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i, l.eps, l.count));
        }
        out
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "slope": self.slope,
            "residual": self.residual,
            "predicted": self.predicted.to_string(),
        })
    }
}

/// Grid side per stage.
#[derive(Debug, Clone, PartialEq)]
pub enum EpsRule {
    /// `psi(Q^d) / K`, the smallest ball radius in the stage.
    SmallestRadius,
    Explicit(Vec<Rat>),
}

/// Ordinary least squares `y = a + b x`; returns `(b, a, rms residual)`.
pub fn least_squares<T: Float + FromPrimitive>(xs: &[T], ys: &[T]) -> (T, T, T) {
    let n = to_t::<T>(xs.len() as f64);
    let mx = xs.iter().fold(T::zero(), |a, &x| a + x) / n;
    let my = ys.iter().fold(T::zero(), |a, &y| a + y) / n;
    let (mut sxy, mut sxx) = (T::zero(), T::zero());
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + (x - mx) * (y - my);
        sxx = sxx + (x - mx) * (x - mx);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss = xs
        .iter()
        .zip(ys)
        .fold(T::zero(), |a, (&x, &y)| {
            let r = y - (intercept + slope * x);
            a + r * r
        });
    (slope, intercept, (ss / n).sqrt())
}

/// Box-counting estimate of the dimension of the `psi_tau` approximable set,
/// using stages `(Q/2, Q]` of the lower cover.
pub fn estimate_dimension(
    ctx: &VarietyContext,
    tau: &Rat,
    q_levels: &[i64],
    eps: &EpsRule,
) -> Result<DimensionEstimate> {
    if !ctx.morphism().holds {
        return Err(Error::NotApplicable("morphism condition fails for this system".into()));
    }
    let dim = dimension_formula(ctx.n() as u32, ctx.d(), tau)?;
    if q_levels.len() < 3 {
        return Err(Error::DegenerateRegression(q_levels.len()));
    }
    if let EpsRule::Explicit(e) = eps {
        if e.len() != q_levels.len() {
            return Err(Error::InvalidParameter("one eps per Q level required".into()));
        }
    }
    let psi = ApproxFunction::power(tau.clone());
    let mut levels = Vec::with_capacity(q_levels.len());
    for (i, &q) in q_levels.iter().enumerate() {
        let cover = build_cover(ctx, &psi, q / 2, q, RadiusMode::Lower)?;
        let e = match eps {
            EpsRule::SmallestRadius => psi.eval_rat(&BigInt::from(q).pow(ctx.d())) / ctx.lipschitz(),
            EpsRule::Explicit(v) => v[i].clone(),
        };
        if e <= Rat::zero() {
            return Err(Error::InvalidParameter("eps must be positive".into()));
        }
        let count = cover.count_cells(ctx, &e);
        levels.push(Level {
            q,
            eps: e,
            count,
            balls: cover.balls.len(),
        });
    }
    if levels.iter().any(|l| l.count == 0) {
        return Err(Error::InvalidParameter("a stage covers no grid cells".into()));
    }
    let xs: Vec<f64> = levels
        .iter()
        .map(|l| -l.eps.to_f64().unwrap().ln())
        .collect();
    let ys: Vec<f64> = levels.iter().map(|l| (l.count as f64).ln()).collect();
    let (slope, intercept, residual) = least_squares(&xs, &ys);
    Ok(DimensionEstimate {
        tau: tau.clone(),
        levels,
        slope,
        intercept,
        residual,
        predicted: dim.s,
    })
}

/// Euler's totient; the number of primitive `p/q` in `[0, 1]` for `q > 1`.
pub fn euler_phi(q: u64) -> u64 {
    let mut n = q;
    let mut out = q;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            out -= out / p;
        }
        p += 1;
    }
    if n > 1 {
        out -= out / n;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::parse_rat;
    use crate::parse::parse_polynomial;
    use crate::variety::Domain;

    fn ctx(polys: &[&str], n: usize) -> VarietyContext {
        let polys = polys.iter().map(|s| parse_polynomial(s, n).unwrap()).collect();
        VarietyContext::build(polys, Domain::unit(n)).unwrap()
    }

    fn q(s: &str) -> Rat {
        parse_rat(s).unwrap()
    }

    #[test]
    fn tail_sum_parabola_height_identity() {
        let c = ctx(&["x1^2"], 1);
        let psi = ApproxFunction::power(q("2"));
        let f = DimFunction::power(q("0.6"));
        let t = tail_sum::<f64>(&c, &psi, &f, 10, 40).unwrap();
        let expected: f64 = (11..=40u64)
            .map(|q| euler_phi(q) as f64 * (q as f64).powf(-2.4))
            .sum();
        assert!((t.inner - expected).abs() < 1e-12 * expected);
        assert!(t.inner <= t.comparison);
        assert!(t.constant <= 1.0 + 1e-12);
        assert!(t.bound_holds);
    }

    #[test]
    fn tail_sum_empty_range() {
        let c = ctx(&["x1^2"], 1);
        let t = tail_sum::<f64>(&c, &ApproxFunction::power(q("2")), &DimFunction::power(q("1/2")), 50, 50).unwrap();
        assert_eq!((t.inner, t.comparison, t.points), (0.0, 0.0, 0));
        assert!(tail_sum::<f64>(&c, &ApproxFunction::power(q("2")), &DimFunction::power(q("1/2")), 51, 50).is_err());
    }

    #[test]
    fn tail_sum_generic_f32() {
        let c = ctx(&["x1^2"], 1);
        let t = tail_sum::<f32>(&c, &ApproxFunction::power(q("2")), &DimFunction::power(q("0.6")), 1, 20).unwrap();
        let t64 = tail_sum::<f64>(&c, &ApproxFunction::power(q("2")), &DimFunction::power(q("0.6")), 1, 20).unwrap();
        assert!(((t.inner as f64) - t64.inner).abs() < 1e-5);
    }

    #[test]
    fn critical_window_sums_are_flat() {
        let c = ctx(&["x1^2"], 1);
        let psi = ApproxFunction::power(q("2"));
        let f = DimFunction::power(q("1/2"));
        for n in [100, 400] {
            let t = tail_sum::<f64>(&c, &psi, &f, n, 2 * n).unwrap();
            assert!((t.comparison - std::f64::consts::LN_2).abs() < 0.01);
        }
    }

    #[test]
    fn cover_examples() {
        let c = ctx(&["x1^2"], 1);
        let psi = ApproxFunction::power(q("2"));
        let lo = build_cover(&c, &psi, 0, 6, RadiusMode::Lower).unwrap();
        let up = build_cover(&c, &psi, 0, 6, RadiusMode::Upper).unwrap();
        for (a, b) in lo.balls.iter().zip(&up.balls) {
            assert_eq!(a.center, b.center);
            assert_eq!(&a.radius * c.lipschitz(), b.radius);
        }
        assert_eq!(up.balls[0].radius, q("1"));
        assert!(up.balls.iter().all(|b| b.radius <= q("1")));
        assert!(build_cover(&c, &psi, 3, 3, RadiusMode::Lower).is_err());

        let g = ctx(&["x1^2 + x2^2", "x1^2 - x2^2"], 2);
        let up = build_cover(&g, &psi, 1, 2, RadiusMode::Upper).unwrap();
        let half = up
            .balls
            .iter()
            .find(|b| b.center == PrimitivePoint { p: vec![1, 1], q: 2 })
            .unwrap();
        assert_eq!(half.radius, q("1/4"));
        assert!(half.radius > psi.eval_rat(&BigInt::from(4)));
    }

    #[test]
    fn union_count_matches_hash_set() {
        let boxes = vec![
            vec![(0, 3), (0, 0)],
            vec![(2, 5), (0, 2)],
            vec![(4, 4), (4, 6)],
            vec![(0, 0), (0, 9)],
        ];
        let mut set = std::collections::HashSet::new();
        for b in &boxes {
            for x in b[0].0..=b[0].1 {
                for y in b[1].0..=b[1].1 {
                    set.insert((x, y));
                }
            }
        }
        assert_eq!(union_count(boxes), set.len() as u128);
        assert_eq!(union_count(vec![vec![(0, 2)], vec![(3, 4)], vec![(7, 7)]]), 6);
        assert_eq!(union_count(vec![]), 0);
    }

    #[test]
    fn coarse_grid_saturates() {
        let c = ctx(&["x1^2"], 1);
        let cover = build_cover(&c, &ApproxFunction::power(q("2")), 8, 16, RadiusMode::Lower).unwrap();
        for cells in [2i64, 4, 8] {
            let eps = Rat::new(BigInt::from(1), BigInt::from(cells));
            assert_eq!(cover.count_cells(&c, &eps), cells as u128);
        }
        let g = ctx(&["x1^2 + x2^2", "x1^2 - x2^2"], 2);
        let cover = build_cover(&g, &ApproxFunction::power(q("2")), 4, 8, RadiusMode::Lower).unwrap();
        assert_eq!(cover.count_cells(&g, &q("1/4")), 16);
    }

    #[test]
    fn estimate_dimension_errors() {
        let c = ctx(&["x1^2"], 1);
        assert!(matches!(
            estimate_dimension(&c, &q("2"), &[8, 16], &EpsRule::SmallestRadius),
            Err(Error::DegenerateRegression(2))
        ));
        assert!(matches!(
            estimate_dimension(&c, &q("1"), &[8, 16, 32], &EpsRule::SmallestRadius),
            Err(Error::NotApplicable(_))
        ));
        let h = ctx(&["x1^2 + x2^2"], 2);
        assert!(matches!(
            estimate_dimension(&h, &q("3"), &[8, 16, 32], &EpsRule::SmallestRadius),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn least_squares_recovers_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x + 2.0).collect();
        let (b, a, r) = least_squares(&xs, &ys);
        assert!((b - 0.5).abs() < 1e-12 && (a - 2.0).abs() < 1e-12 && r < 1e-12);
    }

    #[test]
    fn phi_values() {
        assert_eq!(
            (1..=12).map(euler_phi).collect::<Vec<_>>(),
            vec![1, 1, 2, 2, 4, 2, 6, 4, 6, 4, 10, 4]
        );
    }
}
