//! Exact tools for intrinsic Diophantine approximation on polynomial graphs
//! `Gamma = {(x, P_1(x), ..., P_m(x))}`: heights, the morphism condition on
//! the top-degree forms, zero/infinity verdicts for Hausdorff measures, the
//! dimension formula, and desk-scale empirical checks of all of them.

pub mod arith;
pub mod asymptotics;
pub mod empirical;
pub mod error;
pub mod groebner;
pub mod multipoly;
pub mod parse;
pub mod system;
pub mod variety;

pub use arith::{affine_height, projective_height, to_projective, ProjPoint, Rat, RatVec};
pub use asymptotics::{
    classical_verdict, dimension_formula, series_verdict, validate_hypotheses, ApproxFunction,
    DimFunction, Outcome, Verdict,
};
pub use error::{Error, Result};
pub use groebner::{buchberger, ideal_member, morphism_condition, reduce, GroebnerBasis, MorphismCertificate};
pub use multipoly::{Field, MPoly, MonOrder, Monomial};
pub use parse::parse_polynomial;
pub use system::{parse_system, SystemDescriptor};
pub use variety::{Domain, PrimitivePoint, VarietyContext};

/// Polynomial with exact rational coefficients.
pub type Poly = MPoly<Rat>;
/// Gröbner basis over Q.
pub type Basis = GroebnerBasis<Rat>;
/// Tail sums in double precision.
pub type TailSum64 = empirical::TailSum<f64>;
