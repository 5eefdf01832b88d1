//! Truncated power series in the formal symbol `Y = (1−β)^d`.
//!
//! `Y` is treated as transcendental over the coefficient field of rational
//! functions in `(β, d, ...)`; a power `(1−β)^{jd+a}` is always written as
//! `Y^j · (1−β)^a`.

use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::poly::{RatPoly, Var};
use super::rat::Rat;
use super::ratfunc::{Base, RatFunc};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncSeries {
    /// Coefficients of `Y^0 .. Y^{order-1}`.
    coeffs: Vec<RatFunc>,
    /// Set once any arithmetic dropped nonzero `O(Y^order)` content.
    truncated: bool,
}

impl TruncSeries {
    pub fn zero(order: usize) -> Self {
        TruncSeries { coeffs: vec![RatFunc::zero(); order], truncated: false }
    }

    pub fn constant(order: usize, c: RatFunc) -> Self {
        let mut s = TruncSeries::zero(order);
        if order > 0 {
            s.coeffs[0] = c;
        } else if !c.is_zero() {
            s.truncated = true;
        }
        s
    }

    pub fn one(order: usize) -> Self {
        TruncSeries::constant(order, RatFunc::one())
    }

    /// Builds from a coefficient list, truncating (and flagging) anything past `order`.
    pub fn from_coeffs(order: usize, coeffs: Vec<RatFunc>) -> Self {
        let mut s = TruncSeries::zero(order);
        for (j, c) in coeffs.into_iter().enumerate() {
            if j < order {
                s.coeffs[j] = c;
            } else if !c.is_zero() {
                s.truncated = true;
            }
        }
        s
    }

    /// `c · Y^j`.
    pub fn term(order: usize, j: usize, c: RatFunc) -> Self {
        let mut v = vec![RatFunc::zero(); j + 1];
        v[j] = c;
        TruncSeries::from_coeffs(order, v)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    pub fn coeff(&self, j: usize) -> &RatFunc {
        &self.coeffs[j]
    }

    pub fn coeffs(&self) -> &[RatFunc] {
        &self.coeffs
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn check_order(&self, other: &TruncSeries) -> Result<()> {
        if self.order() != other.order() {
            return Err(Error::VariableMismatch(format!(
                "series orders differ: {} vs {}",
                self.order(),
                other.order()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.check_order(other)?;
        Ok(TruncSeries {
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a + b).collect(),
            truncated: self.truncated || other.truncated,
        })
    }

    pub fn sub(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> TruncSeries {
        TruncSeries { coeffs: self.coeffs.iter().map(|c| -c).collect(), truncated: self.truncated }
    }

    pub fn scale(&self, c: &RatFunc) -> TruncSeries {
        TruncSeries { coeffs: self.coeffs.iter().map(|x| x * c).collect(), truncated: self.truncated }
    }

    pub fn mul(&self, other: &TruncSeries) -> Result<TruncSeries> {
        self.check_order(other)?;
        let t = self.order();
        let mut out = TruncSeries::zero(t);
        out.truncated = self.truncated || other.truncated;
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if b.is_zero() {
                    continue;
                }
                if i + j < t {
                    out.coeffs[i + j] = &out.coeffs[i + j] + &(a * b);
                } else {
                    out.truncated = true;
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, e: u32) -> Result<TruncSeries> {
        let mut acc = TruncSeries::one(self.order());
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// Evaluates `Σ_k c_k · s^k` (Horner), with `c_k` rational-function coefficients.
    pub fn compose_poly(coeffs: &[RatFunc], s: &TruncSeries) -> Result<TruncSeries> {
        let t = s.order();
        let mut acc = TruncSeries::zero(t);
        for c in coeffs.iter().rev() {
            acc = acc.mul(s)?.add(&TruncSeries::constant(t, c.clone()))?;
        }
        Ok(acc)
    }

    /// Substitutes `s` for `v` in a rational function whose denominator does not involve `v`.
    pub fn compose_ratfunc(f: &RatFunc, v: Var, s: &TruncSeries) -> Result<TruncSeries> {
        if f.denominator().uses(v) {
            return Err(Error::VariableMismatch(format!("{} appears in a denominator", v.name())));
        }
        let inv_den = RatFunc::one().try_div(&RatFunc::from_poly(f.denominator()))?;
        let coeffs: Vec<RatFunc> = f
            .numer()
            .coefficients_in(v)
            .into_iter()
            .map(|c| &RatFunc::from_poly(c) * &inv_den)
            .collect();
        TruncSeries::compose_poly(&coeffs, s)
    }

    /// Applies a substitution to every coefficient.
    pub fn substitute(&self, v: Var, value: &RatFunc) -> Result<TruncSeries> {
        Ok(TruncSeries {
            coeffs: self.coeffs.iter().map(|c| c.substitute(v, value)).collect::<Result<_>>()?,
            truncated: self.truncated,
        })
    }

    /// `(1+X)^{-k} = Σ_{i=0..r} binom(−k, i) X^i + O(X^{r+1})` with `k` a polynomial in `d`.
    pub fn neg_binomial_expand(k: &RatPoly, x: &TruncSeries, r: usize) -> Result<TruncSeries> {
        if !x.coeffs.first().map(|c| c.is_zero()).unwrap_or(true) {
            return Err(Error::InvalidParameter("series argument must have zero constant term".into()));
        }
        let t = x.order();
        let coeffs: Vec<RatFunc> = (0..=r).map(|i| RatFunc::from_poly(neg_binomial_coeff(k, i))).collect();
        let mut out = TruncSeries::compose_poly(&coeffs, x)?;
        // Powers of X beyond r are dropped: flag if X could contribute below the order cap.
        if r + 1 < t && !x.is_zero() {
            out.truncated = true;
        }
        Ok(out)
    }

    /// `log(1+X) − β log(1+X/β) = Σ_{i=1}^{t-1} (−1)^{1+i}/i · (1 − β^{1−i}) X^i`.
    pub fn log_ratio_expand(x: &TruncSeries, t: usize) -> Result<TruncSeries> {
        if !x.coeffs.first().map(|c| c.is_zero()).unwrap_or(true) {
            return Err(Error::InvalidParameter("series argument must have zero constant term".into()));
        }
        let coeffs: Vec<RatFunc> = (0..t).map(log_ratio_coeff).collect();
        let mut out = TruncSeries::compose_poly(&coeffs, x)?;
        if t < x.order() && !x.is_zero() {
            out.truncated = true;
        }
        Ok(out)
    }
}

/// `binom(−k, i) = (−1)^i k (k+1) ⋯ (k+i−1) / i!` as a polynomial in whatever `k` uses.
pub fn neg_binomial_coeff(k: &RatPoly, i: usize) -> RatPoly {
    let mut acc = RatPoly::one();
    for l in 0..i {
        acc = &acc * &(k + &RatPoly::int(l as i64));
    }
    let mut fact = Rat::from_integer(1.into());
    for l in 1..=i {
        fact *= Rat::from_integer((l as i64).into());
    }
    let sign = if i.is_multiple_of(2) { 1 } else { -1 };
    acc.scale(&(Rat::from_integer(sign.into()) / fact))
}

/// `(−1)^{1+i}/i · (1 − β^{1−i})`; zero for `i ≤ 1`.
pub fn log_ratio_coeff(i: usize) -> RatFunc {
    if i <= 1 {
        return RatFunc::zero();
    }
    let sign = if (1 + i).is_multiple_of(2) { 1 } else { -1 };
    let c = Rat::new(sign.into(), (i as i64).into());
    // 1 − β^{1−i} = (β^{i−1} − 1) / β^{i−1}
    let beta = RatPoly::var(Var::Beta);
    let num = &beta.pow((i - 1) as u32) - &RatPoly::one();
    RatFunc::new(num.scale(&c), &[(Base::Beta, (i - 1) as u32)])
}

impl fmt::Display for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match j {
                0 => write!(f, "[{c}]")?,
                1 => write!(f, "[{c}] Y")?,
                _ => write!(f, "[{c}] Y^{j}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        write!(f, " + O(Y^{})", self.order())
    }
}

impl fmt::Debug for TruncSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TruncSeries({self})")
    }
}

impl Zero for TruncSeries {
    fn zero() -> Self {
        TruncSeries::zero(0)
    }
    fn is_zero(&self) -> bool {
        TruncSeries::is_zero(self)
    }
}

impl std::ops::Add for TruncSeries {
    type Output = TruncSeries;
    fn add(self, rhs: TruncSeries) -> TruncSeries {
        TruncSeries::add(&self, &rhs).expect("series order mismatch")
    }
}

#[cfg(test)]
mod tests {
    use super::super::rat::rat;
    use super::*;

    fn beta() -> RatPoly {
        RatPoly::var(Var::Beta)
    }

    #[test]
    fn square_of_x() {
        // X = B1 (1−β) Y ; X^2 at order 3 has Y^2 coefficient B1^2 (1−β)^2
        let b1 = RatPoly::var(Var::B(1));
        let x = TruncSeries::term(3, 1, RatFunc::from_poly(&b1 * &Base::OneMinusBeta.poly()));
        let sq = x.mul(&x).unwrap();
        assert_eq!(sq.coeff(2), &RatFunc::from_poly((&b1 * &Base::OneMinusBeta.poly()).pow(2)));
        assert!(!sq.is_truncated());
        // at order 2 the square is entirely dropped and flagged
        let x2 = TruncSeries::term(2, 1, RatFunc::from_poly(b1.clone()));
        let sq2 = x2.mul(&x2).unwrap();
        assert!(sq2.is_zero());
        assert!(sq2.is_truncated());
    }

    #[test]
    fn neg_binomial_first_terms() {
        let k = RatPoly::var(Var::D) + RatPoly::int(1);
        assert_eq!(neg_binomial_coeff(&k, 0), RatPoly::one());
        assert_eq!(neg_binomial_coeff(&k, 1), -&k);
        // degree i in d
        for i in 0..5 {
            assert_eq!(neg_binomial_coeff(&k, i).degree(Var::D), i as u32);
        }
        let zero = TruncSeries::zero(4);
        assert_eq!(TruncSeries::neg_binomial_expand(&k, &zero, 3).unwrap(), TruncSeries::one(4));
    }

    #[test]
    fn log_ratio_coefficients() {
        assert!(log_ratio_coeff(1).is_zero());
        // i = 2: −(1/2)(1 − 1/β) = (1−β)/(2β)
        let expect = RatFunc::new(Base::OneMinusBeta.poly().scale(&rat(1, 2)), &[(Base::Beta, 1)]);
        assert_eq!(log_ratio_coeff(2), expect);
        let z = TruncSeries::zero(4);
        assert!(TruncSeries::log_ratio_expand(&z, 4).unwrap().is_zero());
    }

    #[test]
    fn neg_binomial_numeric() {
        // (1+x)^{-k} at x = 1/10, k = 3, to order 6 in Y with X = x·Y
        let k = RatPoly::int(3);
        let x = TruncSeries::term(7, 1, RatFunc::constant(rat(1, 10)));
        let s = TruncSeries::neg_binomial_expand(&k, &x, 6).unwrap();
        let mut total = rat(0, 1);
        for j in 0..7 {
            total += s.coeff(j).eval(&[]).unwrap();
        }
        let exact = num_traits::pow(rat(10, 11), 3);
        let err = crate::symbolic::rat::rat_abs(&(total - exact));
        // tail is dominated by the first omitted term C(9,7)·10^{-7}
        assert!(err < rat(36, 10_000_000) && err > rat(30, 10_000_000), "{err}");
        let _ = beta();
    }
}
