//! Exact Lagrange interpolation in one integer-valued variable.

use num_traits::One;

use super::poly::{RatPoly, Var};
use super::rat::Rat;
use crate::error::{Error, Result};

/// Interpolates `samples = [(x_i, p_i)]` by a polynomial in `var` of degree at most
/// `degree_bound` whose coefficients are polynomials in the remaining variables.
///
/// The first `degree_bound + 1` samples determine the result; every remaining
/// sample must agree exactly.
pub fn interpolate_poly(samples: &[(i64, RatPoly)], degree_bound: usize, var: Var) -> Result<RatPoly> {
    let need = degree_bound + 2;
    if samples.len() < need {
        return Err(Error::InvalidParameter(format!(
            "interpolation needs at least {need} samples for degree bound {degree_bound}, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|(_, p)| p.uses(var)) {
        return Err(Error::VariableMismatch(format!("samples must not depend on {}", var.name())));
    }
    let (basis, checks) = samples.split_at(degree_bound + 1);
    for (i, (xi, _)) in basis.iter().enumerate() {
        if basis[..i].iter().any(|(xj, _)| xj == xi) {
            return Err(Error::InvalidParameter(format!("duplicate interpolation node {xi}")));
        }
    }
    let x = RatPoly::var(var);
    let mut result = RatPoly::zero();
    for (i, (xi, pi)) in basis.iter().enumerate() {
        let mut li = RatPoly::one();
        let mut denom = Rat::one();
        for (j, (xj, _)) in basis.iter().enumerate() {
            if i == j {
                continue;
            }
            li = &li * &(&x - &RatPoly::int(*xj));
            denom *= Rat::from_integer((xi - xj).into());
        }
        result += &(&li.scale(&denom.recip()) * pi);
    }
    for (xc, pc) in checks {
        let got = result.eval_var(var, &Rat::from_integer((*xc).into()));
        if &got != pc {
            return Err(Error::InterpolationCheckFailed(format!(
                "at {}={xc}: interpolant gives {got}, sample is {pc}",
                var.name()
            )));
        }
    }
    Ok(result)
}
