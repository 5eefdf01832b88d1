//! Minimal exact computer-algebra kernel: rationals, multivariate polynomials,
//! rational functions with linear-base denominators, and truncated series in
//! `Y = (1−β)^d`.

pub mod interp;
pub mod poly;
pub mod rat;
pub mod ratfunc;
pub mod series;

pub use interp::interpolate_poly;
pub use poly::{Monomial, RatPoly, Var};
pub use rat::{
    binomial, factorial, is_integer, parse_rat, rat, rat_abs, rat_big, rat_floor, rat_int, rat_pow, rat_to_f64, rat_to_string, Rat,
};
pub use ratfunc::{Base, RatFunc};
pub use series::TruncSeries;
