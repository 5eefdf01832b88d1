//! Rational functions whose denominators are products of stored linear bases.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::poly::{RatPoly, Var};
use super::rat::Rat;
use crate::error::{Error, Result};

/// The only polynomials allowed in a denominator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Base {
    OneMinusBeta,
    Beta,
    OnePlusLambda,
}

impl Base {
    pub const ALL: [Base; 3] = [Base::OneMinusBeta, Base::Beta, Base::OnePlusLambda];

    pub fn poly(self) -> RatPoly {
        match self {
            Base::OneMinusBeta => RatPoly::linear(1, -1, Var::Beta),
            Base::Beta => RatPoly::var(Var::Beta),
            Base::OnePlusLambda => RatPoly::linear(1, 1, Var::Lambda),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Base::OneMinusBeta => "(1 - β)",
            Base::Beta => "β",
            Base::OnePlusLambda => "(1 + λ)",
        }
    }
}

/// `num / Π base^e`, normalised so that no base divides the numerator.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RatFunc {
    num: RatPoly,
    den: BTreeMap<Base, u32>,
}

impl RatFunc {
    pub fn zero() -> Self {
        RatFunc { num: RatPoly::zero(), den: BTreeMap::new() }
    }

    pub fn one() -> Self {
        RatFunc::from_poly(RatPoly::one())
    }

    pub fn from_poly(p: RatPoly) -> Self {
        RatFunc { num: p, den: BTreeMap::new() }
    }

    pub fn constant(c: Rat) -> Self {
        RatFunc::from_poly(RatPoly::constant(c))
    }

    pub fn new(num: RatPoly, den: &[(Base, u32)]) -> Self {
        let mut r = RatFunc { num, den: BTreeMap::new() };
        for &(b, e) in den {
            if e > 0 {
                *r.den.entry(b).or_insert(0) += e;
            }
        }
        r.normalize();
        r
    }

    /// `base^e` for a possibly negative exponent.
    pub fn base_pow(b: Base, e: i64) -> Self {
        if e >= 0 {
            RatFunc::from_poly(b.poly().pow(e as u32))
        } else {
            RatFunc::new(RatPoly::one(), &[(b, (-e) as u32)])
        }
    }

    pub fn numer(&self) -> &RatPoly {
        &self.num
    }

    pub fn den_exp(&self, b: Base) -> u32 {
        self.den.get(&b).copied().unwrap_or(0)
    }

    pub fn denominator(&self) -> RatPoly {
        let mut p = RatPoly::one();
        for (b, e) in &self.den {
            p = &p * &b.poly().pow(*e);
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_empty()
    }

    pub fn uses(&self, v: Var) -> bool {
        self.num.uses(v) || self.den.keys().any(|b| b.poly().uses(v))
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let bases: Vec<Base> = self.den.keys().copied().collect();
        for b in bases {
            let bp = b.poly();
            while self.den[&b] > 0 {
                match self.num.div_linear(&bp) {
                    Some(q) => {
                        self.num = q;
                        *self.den.get_mut(&b).unwrap() -= 1;
                    }
                    None => break,
                }
            }
            if self.den[&b] == 0 {
                self.den.remove(&b);
            }
        }
    }

    fn with_den(&self, target: &BTreeMap<Base, u32>) -> RatPoly {
        let mut num = self.num.clone();
        for (b, e) in target {
            let have = self.den_exp(*b);
            if *e > have {
                num = &num * &b.poly().pow(e - have);
            }
        }
        num
    }

    fn common_den(&self, other: &RatFunc) -> BTreeMap<Base, u32> {
        let mut den = self.den.clone();
        for (b, e) in &other.den {
            let slot = den.entry(*b).or_insert(0);
            *slot = (*slot).max(*e);
        }
        den
    }

    pub fn scale(&self, c: &Rat) -> Self {
        let mut r = RatFunc { num: self.num.scale(c), den: self.den.clone() };
        r.normalize();
        r
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut r = RatFunc {
            num: self.num.pow(e),
            den: self.den.iter().map(|(b, x)| (*b, x * e)).collect(),
        };
        r.normalize();
        r
    }

    /// Division; the divisor's numerator must be a constant times a product of bases.
    pub fn try_div(&self, other: &RatFunc) -> Result<RatFunc> {
        if other.is_zero() {
            return Err(Error::NonBaseDivision("division by zero".into()));
        }
        let (c, factors) = split_base_product(&other.num)
            .ok_or_else(|| Error::NonBaseDivision(other.num.to_string()))?;
        let mut den = self.den.clone();
        for (b, e) in factors {
            *den.entry(b).or_insert(0) += e;
        }
        // Denominator bases of the divisor move to our numerator.
        let mut num = self.num.scale(&c.recip());
        for (b, e) in &other.den {
            num = &num * &b.poly().pow(*e);
        }
        let mut r = RatFunc { num, den };
        r.normalize();
        Ok(r)
    }

    /// Substitutes a rational function for a variable, clearing denominators.
    pub fn substitute(&self, v: Var, value: &RatFunc) -> Result<RatFunc> {
        if self.den.keys().any(|b| b.poly().uses(v)) {
            return Err(Error::VariableMismatch(format!(
                "cannot substitute {} inside a stored denominator",
                v.name()
            )));
        }
        let coeffs = self.num.coefficients_in(v);
        let mut acc = RatFunc::zero();
        for c in coeffs.iter().rev() {
            acc = &(&acc * value) + &RatFunc::from_poly(c.clone());
        }
        let inv_den = RatFunc { num: RatPoly::one(), den: self.den.clone() };
        Ok(&acc * &inv_den)
    }

    pub fn substitute_poly(&self, v: Var, value: &RatPoly) -> Result<RatFunc> {
        self.substitute(v, &RatFunc::from_poly(value.clone()))
    }

    pub fn eval(&self, bindings: &[(Var, Rat)]) -> Result<Rat> {
        let n = self.num.eval(bindings)?;
        let d = self.denominator().eval(bindings)?;
        if d.is_zero() {
            return Err(Error::InvalidParameter("rational function pole".into()));
        }
        Ok(n / d)
    }

    /// Degree of the numerator in `v`.
    pub fn num_degree(&self, v: Var) -> u32 {
        self.num.degree(v)
    }

    /// Coefficient of `v` in a function that is linear in `v` (numerator degree ≤ 1).
    pub fn linear_parts(&self, v: Var) -> Result<(RatFunc, RatFunc)> {
        let cs = self.num.coefficients_in(v);
        if cs.len() > 2 {
            return Err(Error::VariableMismatch(format!("not linear in {}", v.name())));
        }
        let get = |i: usize| {
            let mut r = RatFunc { num: cs.get(i).cloned().unwrap_or_default(), den: self.den.clone() };
            r.normalize();
            r
        };
        Ok((get(1), get(0)))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let den: serde_json::Map<String, serde_json::Value> = self
            .den
            .iter()
            .map(|(b, e)| (format!("{b:?}"), serde_json::Value::from(*e)))
            .collect();
        serde_json::json!({ "num": self.num.to_json(), "den": den, "text": self.to_string() })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = || Error::InvalidParameter("malformed rational function JSON".into());
        let num = RatPoly::from_json(v.get("num").ok_or_else(bad)?)?;
        let mut den = Vec::new();
        for (k, e) in v.get("den").and_then(|d| d.as_object()).ok_or_else(bad)? {
            let b = Base::ALL.into_iter().find(|b| format!("{b:?}") == *k).ok_or_else(bad)?;
            den.push((b, e.as_u64().ok_or_else(bad)? as u32));
        }
        Ok(RatFunc::new(num, &den))
    }
}

/// Writes `p` as `c · Π base^e` if possible.
fn split_base_product(p: &RatPoly) -> Option<(Rat, Vec<(Base, u32)>)> {
    let mut rest = p.clone();
    let mut factors = Vec::new();
    for b in Base::ALL {
        let bp = b.poly();
        let mut e = 0;
        while let Some(q) = rest.div_linear(&bp) {
            if q.is_zero() {
                break;
            }
            rest = q;
            e += 1;
        }
        if e > 0 {
            factors.push((b, e));
        }
    }
    if rest.is_constant() && !rest.is_zero() {
        Some((rest.constant_term(), factors))
    } else {
        None
    }
}

impl fmt::Display for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_empty() {
            return write!(f, "{}", self.num);
        }
        let den: Vec<String> = self
            .den
            .iter()
            .map(|(b, e)| if *e == 1 { b.label().to_string() } else { format!("{}^{e}", b.label()) })
            .collect();
        write!(f, "({}) / ({})", self.num, den.join(" "))
    }
}

impl fmt::Debug for RatFunc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatFunc({self})")
    }
}

impl Serialize for RatFunc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatFunc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        RatFunc::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: &RatFunc) -> RatFunc {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.clone();
        }
        let den = self.common_den(rhs);
        let num = &self.with_den(&den) + &rhs.with_den(&den);
        let mut r = RatFunc { num, den };
        r.normalize();
        r
    }
}

impl Add for RatFunc {
    type Output = RatFunc;
    fn add(self, rhs: RatFunc) -> RatFunc {
        &self + &rhs
    }
}

impl<'a> Sub<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: &RatFunc) -> RatFunc {
        self + &(-rhs)
    }
}

impl Sub for RatFunc {
    type Output = RatFunc;
    fn sub(self, rhs: RatFunc) -> RatFunc {
        &self - &rhs
    }
}

impl Neg for &RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }
}

impl Neg for RatFunc {
    type Output = RatFunc;
    fn neg(self) -> RatFunc {
        -&self
    }
}

impl<'a> Mul<&'a RatFunc> for &'a RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: &RatFunc) -> RatFunc {
        if self.is_zero() || rhs.is_zero() {
            return RatFunc::zero();
        }
        let mut den = self.den.clone();
        for (b, e) in &rhs.den {
            *den.entry(*b).or_insert(0) += e;
        }
        let mut r = RatFunc { num: &self.num * &rhs.num, den };
        r.normalize();
        r
    }
}

impl Mul for RatFunc {
    type Output = RatFunc;
    fn mul(self, rhs: RatFunc) -> RatFunc {
        &self * &rhs
    }
}

impl From<RatPoly> for RatFunc {
    fn from(p: RatPoly) -> Self {
        RatFunc::from_poly(p)
    }
}

impl One for RatFunc {
    fn one() -> Self {
        RatFunc::one()
    }
}

impl Zero for RatFunc {
    fn zero() -> Self {
        RatFunc::zero()
    }
    fn is_zero(&self) -> bool {
        self.num.is_zero()
    }
}
