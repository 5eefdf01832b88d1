//! High-precision real arithmetic for evaluating asymptotic formulas.
//!
//! Inputs arrive as exact rationals and are rounded once, at the working
//! binary precision derived from the requested decimal digits.

use std::str::FromStr;

use dashu_float::round::mode::HalfEven;
use dashu_float::{DBig, FBig};
use dashu_int::{IBig, UBig};
use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbolic::{binomial, Rat};

pub type Real = FBig<HalfEven, 2>;

pub const DEFAULT_DIGITS: usize = 80;

/// Working precision in bits for `digits` decimal digits, with guard bits.
pub fn bits_for(digits: usize) -> usize {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as usize + 64
}

fn ubig(x: &BigUint) -> UBig {
    UBig::from_le_bytes(&x.to_bytes_le())
}

pub fn ibig(x: &BigInt) -> IBig {
    let m = IBig::from(ubig(x.magnitude()));
    if x.sign() == Sign::Minus {
        -m
    } else {
        m
    }
}

pub fn real_from_int(x: &BigInt, digits: usize) -> Real {
    Real::from(ibig(x)).with_precision(bits_for(digits)).value()
}

pub fn real_from_i64(x: i64, digits: usize) -> Real {
    Real::from(x).with_precision(bits_for(digits)).value()
}

pub fn real_from_rat(r: &Rat, digits: usize) -> Real {
    real_from_int(r.numer(), digits) / real_from_int(r.denom(), digits)
}

pub fn pi(digits: usize) -> Real {
    Real::pi(bits_for(digits))
}

pub fn ln2(digits: usize) -> Real {
    real_from_i64(2, digits).ln()
}

/// Natural log of a positive rational.
pub fn ln_rat(r: &Rat, digits: usize) -> Result<Real> {
    if !r.is_positive() {
        return Err(Error::InvalidParameter(format!("log of non-positive value {r}")));
    }
    Ok(real_from_int(r.numer(), digits).ln() - real_from_int(r.denom(), digits).ln())
}

pub fn ln_biguint(x: &BigUint, digits: usize) -> Result<Real> {
    if x.is_zero() {
        return Err(Error::InvalidParameter("log of zero".into()));
    }
    Ok(Real::from(IBig::from(ubig(x))).with_precision(bits_for(digits)).value().ln())
}

/// Exact Bernoulli numbers `B_0..=B_n` (with `B_1 = −1/2`).
fn bernoulli(n: usize) -> Vec<Rat> {
    let mut b: Vec<Rat> = Vec::with_capacity(n + 1);
    for m in 0..=n {
        if m == 0 {
            b.push(Rat::one());
            continue;
        }
        let mut s = Rat::zero();
        for (k, bk) in b.iter().enumerate() {
            s += Rat::from_integer(binomial((m + 1) as u64, k as u64).into()) * bk;
        }
        b.push(-s / Rat::from_integer(((m + 1) as i64).into()));
    }
    b
}

/// Below this argument `ln n!` is taken from the exact factorial.
const EXACT_FACTORIAL_LIMIT: u64 = 20_000;

/// `ln n!`, exact-then-rounded for small `n`, Stirling series otherwise.
pub fn ln_factorial(n: &BigUint, digits: usize) -> Result<Real> {
    if n <= &BigUint::from(EXACT_FACTORIAL_LIMIT) {
        let k = n.iter_u64_digits().next().unwrap_or(0);
        if k < 2 {
            return Ok(real_from_i64(0, digits));
        }
        return ln_biguint(&crate::symbolic::factorial(k), digits);
    }
    let z = real_from_int(&BigInt::from(n.clone()), digits);
    let lnz = z.ln();
    let two_pi = pi(digits) * real_from_i64(2, digits);
    let mut s = &z * &lnz - &z + (two_pi * &z).ln() / real_from_i64(2, digits);
    // Σ B_{2k} / (2k(2k−1) z^{2k−1}); terms decay at least like z^{-2}
    let target = real_from_i64(10, digits).powi(IBig::from(-(digits as i64) - 5));
    let bern = bernoulli(2 * 40);
    let z2 = &z * &z;
    let mut zpow = z.clone();
    for k in 1..=40usize {
        let coeff = &bern[2 * k] / Rat::from_integer(((2 * k * (2 * k - 1)) as i64).into());
        let term = real_from_rat(&coeff, digits) / &zpow;
        let small = abs(&term) < target;
        s += term;
        if small {
            break;
        }
        zpow *= &z2;
    }
    Ok(s)
}

/// `ln C(n, m)`.
pub fn ln_binomial(n: &BigUint, m: &BigUint, digits: usize) -> Result<Real> {
    if m > n {
        return Err(Error::InvalidParameter("binomial with m > n".into()));
    }
    if n <= &BigUint::from(EXACT_FACTORIAL_LIMIT) {
        let (a, b) = (n.iter_u64_digits().next().unwrap_or(0), m.iter_u64_digits().next().unwrap_or(0));
        return ln_biguint(&binomial(a, b), digits);
    }
    Ok(ln_factorial(n, digits)? - ln_factorial(m, digits)? - ln_factorial(&(n - m), digits)?)
}

pub fn abs(x: &Real) -> Real {
    if *x < Real::ZERO {
        -x.clone()
    } else {
        x.clone()
    }
}

/// Decimal string with `digits` significant digits.
pub fn to_decimal_string(x: &Real, digits: usize) -> String {
    to_dbig(x, digits).to_string()
}

pub fn to_dbig(x: &Real, digits: usize) -> DBig {
    x.to_decimal().value().with_precision(digits).value()
}

pub fn to_f64(x: &Real) -> f64 {
    x.to_f64().value()
}

pub fn dbig_to_real(x: &DBig, digits: usize) -> Real {
    x.clone().with_base_and_precision::<2>(bits_for(digits)).value().with_rounding::<HalfEven>()
}

/// One labelled contribution to a log-scale value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogTerm {
    pub label: String,
    pub ln_value: String,
}

/// High-precision natural log of a count or partition function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogCount {
    pub ln_value: String,
    pub log10_value: String,
    pub precision_digits: usize,
    pub terms: Vec<LogTerm>,
    /// Some series contributions of higher order were dropped.
    pub truncated: bool,
    pub warnings: Vec<String>,
}

/// Accumulates labelled terms into a [`LogCount`].
pub struct LogCountBuilder {
    digits: usize,
    total: Real,
    terms: Vec<LogTerm>,
    truncated: bool,
    warnings: Vec<String>,
}

impl LogCountBuilder {
    pub fn new(digits: usize) -> Self {
        LogCountBuilder { digits, total: real_from_i64(0, digits), terms: Vec::new(), truncated: false, warnings: Vec::new() }
    }

    pub fn add(&mut self, label: impl Into<String>, v: Real) -> &mut Self {
        self.terms.push(LogTerm { label: label.into(), ln_value: to_decimal_string(&v, self.digits) });
        self.total += v;
        self
    }

    pub fn truncated(&mut self, t: bool) -> &mut Self {
        self.truncated |= t;
        self
    }

    pub fn warn(&mut self, w: impl Into<String>) -> &mut Self {
        self.warnings.push(w.into());
        self
    }

    pub fn total(&self) -> &Real {
        &self.total
    }

    pub fn finish(&self) -> LogCount {
        let ln10 = real_from_i64(10, self.digits).ln();
        LogCount {
            ln_value: to_decimal_string(&self.total, self.digits),
            log10_value: to_decimal_string(&(self.total.clone() / ln10), self.digits),
            precision_digits: self.digits,
            terms: self.terms.clone(),
            truncated: self.truncated,
            warnings: self.warnings.clone(),
        }
    }
}

impl LogCount {
    pub fn ln(&self) -> Result<Real> {
        let d = DBig::from_str(&self.ln_value).map_err(|e| Error::InvalidParameter(format!("bad decimal: {e:?}")))?;
        Ok(dbig_to_real(&d, self.precision_digits))
    }

    pub fn ln_f64(&self) -> f64 {
        self.ln_value.parse::<f64>().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("log count serialises")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParameter(format!("bad log count json: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::rat;

    fn close(a: &Real, b: &Real, digits: i64) -> bool {
        let diff = abs(&(a.clone() - b.clone()));
        diff < real_from_i64(10, 90).powi(IBig::from(-digits))
    }

    #[test]
    fn constants() {
        let s = to_decimal_string(&pi(40), 30);
        assert!(s.starts_with("3.1415926535897932384626433832"), "{s}");
        let l = to_decimal_string(&ln2(40), 30);
        assert!(l.starts_with("0.693147180559945309417232121458"), "{l}");
    }

    #[test]
    fn rational_logs() {
        let x = ln_rat(&rat(3, 7), 60).unwrap();
        let y = real_from_i64(3, 60).ln() - real_from_i64(7, 60).ln();
        assert!(close(&x, &y, 55));
        assert!(ln_rat(&rat(-1, 2), 10).is_err());
    }

    #[test]
    fn stirling_matches_exact_factorial() {
        // just above the exact cut-off, compare with the exact big-integer log
        let n = EXACT_FACTORIAL_LIMIT + 1;
        let exact = ln_biguint(&crate::symbolic::factorial(n), 80).unwrap();
        let approx = ln_factorial(&BigUint::from(n), 80).unwrap();
        assert!(close(&exact, &approx, 70), "{} vs {}", to_decimal_string(&exact, 40), to_decimal_string(&approx, 40));
    }

    #[test]
    fn binomial_logs() {
        let v = ln_binomial(&BigUint::from(10u32), &BigUint::from(5u32), 40).unwrap();
        assert!(close(&v, &real_from_i64(252, 40).ln(), 35));
        let big = BigUint::from(1u64 << 40);
        let half = BigUint::from(1u64 << 39);
        let f = to_f64(&ln_binomial(&big, &half, 40).unwrap());
        // ln C(n, n/2) ≈ n ln 2 − ½ ln(πn/2)
        let n = (1u64 << 40) as f64;
        let approx = n * 2f64.ln() - 0.5 * (std::f64::consts::PI * n / 2.0).ln();
        assert!((f - approx).abs() / approx < 1e-12);
    }

    #[test]
    fn log_count_roundtrip() {
        let mut b = LogCountBuilder::new(50);
        b.add("a", ln2(50)).add("b", pi(50)).warn("outside regime");
        let lc = b.finish();
        let j = lc.to_json();
        let back = LogCount::from_json(&j).unwrap();
        assert_eq!(back, lc);
        let r = back.ln().unwrap();
        assert!(close(&r, &(ln2(50) + pi(50)), 45));
        assert!((lc.ln_f64() - (2f64.ln() + std::f64::consts::PI)).abs() < 1e-14);
    }
}
