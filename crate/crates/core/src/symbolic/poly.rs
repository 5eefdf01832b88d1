//! Sparse multivariate polynomials with exact rational coefficients.
//!
//! Monomials are dense exponent vectors over a small fixed variable set, which
//! keeps the representation canonical: equal polynomials have identical term
//! maps, so textual output is byte-stable.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::rat::{rat_to_string, Rat};
use crate::error::{Error, Result};

pub const NVARS: usize = 14;
pub const MAX_B: u8 = 6;
pub const MAX_W: u8 = 4;

/// Formal variables known to the kernel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Var {
    Lambda,
    Beta,
    D,
    X,
    /// Unknown fugacity corrections `B_1 ..= B_6`.
    B(u8),
    /// Synthetic polymer weights `w_1 ..= w_4`.
    W(u8),
}

impl Var {
    pub fn index(self) -> usize {
        match self {
            Var::Lambda => 0,
            Var::Beta => 1,
            Var::D => 2,
            Var::X => 3,
            Var::B(i) => {
                assert!((1..=MAX_B).contains(&i), "B index out of range");
                3 + i as usize
            }
            Var::W(i) => {
                assert!((1..=MAX_W).contains(&i), "W index out of range");
                3 + MAX_B as usize + i as usize
            }
        }
    }

    pub fn from_index(i: usize) -> Var {
        match i {
            0 => Var::Lambda,
            1 => Var::Beta,
            2 => Var::D,
            3 => Var::X,
            i if i <= 3 + MAX_B as usize => Var::B((i - 3) as u8),
            i => Var::W((i - 3 - MAX_B as usize) as u8),
        }
    }

    pub fn name(self) -> String {
        match self {
            Var::Lambda => "λ".into(),
            Var::Beta => "β".into(),
            Var::D => "d".into(),
            Var::X => "X".into(),
            Var::B(i) => format!("B{i}"),
            Var::W(i) => format!("w{i}"),
        }
    }
}

/// Display order: λ, d, β, X, B*, w*.
const DISPLAY_ORDER: [usize; NVARS] = [0, 2, 1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Debug)]
pub struct Monomial(pub [u16; NVARS]);

impl Monomial {
    pub fn one() -> Self {
        Monomial([0; NVARS])
    }

    pub fn var(v: Var, e: u16) -> Self {
        let mut m = Monomial::one();
        m.0[v.index()] = e;
        m
    }

    pub fn exp(&self, v: Var) -> u16 {
        self.0[v.index()]
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn total_degree(&self) -> u32 {
        self.0.iter().map(|&e| e as u32).sum()
    }

    fn mul(&self, other: &Self) -> Self {
        let mut out = [0u16; NVARS];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[i].checked_add(other.0[i]).expect("exponent overflow");
        }
        Monomial(out)
    }

    fn with(&self, v: Var, e: u16) -> Self {
        let mut m = *self;
        m.0[v.index()] = e;
        m
    }

    fn render(&self) -> String {
        let mut parts = Vec::new();
        for &i in DISPLAY_ORDER.iter() {
            let e = self.0[i];
            if e == 0 {
                continue;
            }
            let name = Var::from_index(i).name();
            if e == 1 {
                parts.push(name);
            } else {
                parts.push(format!("{name}^{e}"));
            }
        }
        parts.join(" ")
    }

    /// Key used for the deterministic output order (display variable order, ascending).
    fn display_key(&self) -> [u16; NVARS] {
        let mut k = [0u16; NVARS];
        for (slot, &i) in k.iter_mut().zip(DISPLAY_ORDER.iter()) {
            *slot = self.0[i];
        }
        k
    }
}

/// Multivariate polynomial over the rationals.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct RatPoly {
    terms: BTreeMap<Monomial, Rat>,
}

impl RatPoly {
    pub fn zero() -> Self {
        RatPoly { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        let mut p = RatPoly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rat::from_integer(c.into()))
    }

    pub fn var(v: Var) -> Self {
        Self::monomial(Rat::one(), Monomial::var(v, 1))
    }

    pub fn monomial(c: Rat, m: Monomial) -> Self {
        let mut p = RatPoly::zero();
        p.add_term(m, c);
        p
    }

    /// `a + b·v`.
    pub fn linear(a: i64, b: i64, v: Var) -> Self {
        RatPoly::int(a) + RatPoly::var(v) * RatPoly::int(b)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rat)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add_term(&mut self, m: Monomial, c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.keys().all(|m| m.is_one())
    }

    pub fn constant_term(&self) -> Rat {
        self.terms.get(&Monomial::one()).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn coeff(&self, m: &Monomial) -> Rat {
        self.terms.get(m).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return RatPoly::zero();
        }
        RatPoly { terms: self.terms.iter().map(|(m, x)| (*m, x * c)).collect() }
    }

    pub fn degree(&self, v: Var) -> u32 {
        self.terms.keys().map(|m| m.exp(v) as u32).max().unwrap_or(0)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|m| m.total_degree()).max().unwrap_or(0)
    }

    pub fn uses(&self, v: Var) -> bool {
        self.terms.keys().any(|m| m.exp(v) > 0)
    }

    pub fn variables(&self) -> Vec<Var> {
        (0..NVARS).map(Var::from_index).filter(|&v| self.uses(v)).collect()
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = RatPoly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn derivative(&self, v: Var) -> Self {
        let mut out = RatPoly::zero();
        for (m, c) in &self.terms {
            let e = m.exp(v);
            if e == 0 {
                continue;
            }
            out.add_term(m.with(v, e - 1), c * Rat::from_integer(e.into()));
        }
        out
    }

    /// Coefficients in powers of `v`: `self = Σ_k out[k] · v^k`.
    pub fn coefficients_in(&self, v: Var) -> Vec<RatPoly> {
        let deg = self.degree(v) as usize;
        let mut out = vec![RatPoly::zero(); if self.is_zero() { 0 } else { deg + 1 }];
        for (m, c) in &self.terms {
            let e = m.exp(v) as usize;
            out[e].add_term(m.with(v, 0), c.clone());
        }
        out
    }

    /// Substitutes a polynomial for `v` (Horner in `v`).
    pub fn substitute(&self, v: Var, value: &RatPoly) -> Self {
        if !self.uses(v) {
            return self.clone();
        }
        let coeffs = self.coefficients_in(v);
        let mut acc = RatPoly::zero();
        for c in coeffs.iter().rev() {
            acc = &(&acc * value) + c;
        }
        acc
    }

    pub fn eval_var(&self, v: Var, x: &Rat) -> Self {
        self.substitute(v, &RatPoly::constant(x.clone()))
    }

    /// Full evaluation; every variable the polynomial uses must be bound.
    pub fn eval(&self, bindings: &[(Var, Rat)]) -> Result<Rat> {
        let mut p = self.clone();
        for (v, x) in bindings {
            p = p.eval_var(*v, x);
        }
        if !p.is_constant() {
            let missing: Vec<String> = p.variables().into_iter().map(|v| v.name()).collect();
            return Err(Error::VariableMismatch(format!("unbound variables: {}", missing.join(", "))));
        }
        Ok(p.constant_term())
    }

    /// Exact division by a polynomial that is linear in a single variable,
    /// `base = a + b·v` with `a`, `b` constants. Returns `None` when not divisible.
    pub fn div_linear(&self, base: &RatPoly) -> Option<RatPoly> {
        let vars = base.variables();
        if vars.len() != 1 || base.degree(vars[0]) != 1 {
            return None;
        }
        let v = vars[0];
        let a = base.constant_term();
        let b = base.coeff(&Monomial::var(v, 1));
        // Synthetic division in v, with coefficients polynomials in the other variables.
        let coeffs = self.coefficients_in(v);
        if coeffs.is_empty() {
            return Some(RatPoly::zero());
        }
        let n = coeffs.len() - 1;
        let mut quot = vec![RatPoly::zero(); n.max(1)];
        let mut rem = coeffs[n].clone();
        for k in (0..n).rev() {
            // self = (a + b v) q + r; process from the top.
            let qk = rem.scale(&b.recip());
            quot[k] = qk.clone();
            rem = &coeffs[k] - &qk.scale(&a);
        }
        if n == 0 {
            return if rem.is_zero() { Some(RatPoly::zero()) } else { None };
        }
        if !rem.is_zero() {
            return None;
        }
        let mut out = RatPoly::zero();
        for (k, q) in quot.into_iter().enumerate() {
            out += &(&q * &RatPoly::monomial(Rat::one(), Monomial::var(v, k as u16)));
        }
        Some(out)
    }

    /// Truncates to monomials of total degree ≤ `max_deg` in the given variables.
    pub fn truncate_total_degree(&self, vars: &[Var], max_deg: u32) -> Self {
        RatPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| vars.iter().map(|&v| m.exp(v) as u32).sum::<u32>() <= max_deg)
                .map(|(m, c)| (*m, c.clone()))
                .collect(),
        }
    }

    /// Coefficient list in ascending powers of a single variable, requiring the
    /// polynomial to be univariate in it.
    pub fn univariate_coeffs(&self, v: Var) -> Result<Vec<Rat>> {
        let vars = self.variables();
        if vars.iter().any(|&w| w != v) {
            return Err(Error::VariableMismatch(format!("expected a polynomial in {} only", v.name())));
        }
        Ok(self.coefficients_in(v).into_iter().map(|c| c.constant_term()).collect())
    }

    pub fn from_univariate(v: Var, coeffs: &[Rat]) -> Self {
        let mut p = RatPoly::zero();
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(Monomial::var(v, k as u16), c.clone());
        }
        p
    }

    /// Terms in deterministic output order.
    pub fn sorted_terms(&self) -> Vec<(Monomial, Rat)> {
        let mut v: Vec<(Monomial, Rat)> = self.terms.iter().map(|(m, c)| (*m, c.clone())).collect();
        v.sort_by_key(|a| a.0.display_key());
        v
    }

    /// Machine-readable term list `[[coef, {var: exp}], ...]`.
    pub fn to_json(&self) -> serde_json::Value {
        let terms: Vec<serde_json::Value> = self
            .sorted_terms()
            .into_iter()
            .map(|(m, c)| {
                let mut exps = serde_json::Map::new();
                for &i in DISPLAY_ORDER.iter() {
                    if m.0[i] > 0 {
                        exps.insert(Var::from_index(i).name(), serde_json::Value::from(m.0[i]));
                    }
                }
                serde_json::json!([rat_to_string(&c), exps])
            })
            .collect();
        serde_json::Value::Array(terms)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let bad = || Error::InvalidParameter("malformed polynomial JSON".into());
        let arr = value.as_array().ok_or_else(bad)?;
        let mut p = RatPoly::zero();
        for t in arr {
            let pair = t.as_array().ok_or_else(bad)?;
            if pair.len() != 2 {
                return Err(bad());
            }
            let c = super::rat::parse_rat(pair[0].as_str().ok_or_else(bad)?)?;
            let mut m = Monomial::one();
            for (name, e) in pair[1].as_object().ok_or_else(bad)? {
                let i = (0..NVARS).find(|&i| Var::from_index(i).name() == *name).ok_or_else(bad)?;
                m.0[i] = e.as_u64().ok_or_else(bad)? as u16;
            }
            p.add_term(m, c);
        }
        Ok(p)
    }
}

impl fmt::Display for RatPoly {
    /// `c * λ^a d^b β^e` terms, sorted, joined by ` + ` / ` - `.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (i, (m, c)) in self.sorted_terms().into_iter().enumerate() {
            let mag = c.abs();
            if i == 0 {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else if c.is_negative() {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            if m.is_one() {
                write!(f, "{}", rat_to_string(&mag))?;
            } else {
                write!(f, "{} * {}", rat_to_string(&mag), m.render())?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RatPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RatPoly({self})")
    }
}

impl Serialize for RatPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for RatPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        RatPoly::from_json(&v).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a RatPoly> for &'a RatPoly {
    type Output = RatPoly;
    fn add(self, rhs: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for RatPoly {
    type Output = RatPoly;
    fn add(mut self, rhs: RatPoly) -> RatPoly {
        self += &rhs;
        self
    }
}

impl AddAssign<&RatPoly> for RatPoly {
    fn add_assign(&mut self, rhs: &RatPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, c.clone());
        }
    }
}

impl SubAssign<&RatPoly> for RatPoly {
    fn sub_assign(&mut self, rhs: &RatPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(*m, -c.clone());
        }
    }
}

impl<'a> Sub<&'a RatPoly> for &'a RatPoly {
    type Output = RatPoly;
    fn sub(self, rhs: &RatPoly) -> RatPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for RatPoly {
    type Output = RatPoly;
    fn sub(mut self, rhs: RatPoly) -> RatPoly {
        self -= &rhs;
        self
    }
}

impl Neg for RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        RatPoly { terms: self.terms.into_iter().map(|(m, c)| (m, -c)).collect() }
    }
}

impl Neg for &RatPoly {
    type Output = RatPoly;
    fn neg(self) -> RatPoly {
        -(self.clone())
    }
}

impl<'a> Mul<&'a RatPoly> for &'a RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: &RatPoly) -> RatPoly {
        let mut out = RatPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        out
    }
}

impl Mul for RatPoly {
    type Output = RatPoly;
    fn mul(self, rhs: RatPoly) -> RatPoly {
        &self * &rhs
    }
}

#[cfg(test)]
mod tests {
    use super::super::rat::rat;
    use super::*;

    fn lam() -> RatPoly {
        RatPoly::var(Var::Lambda)
    }
    fn d() -> RatPoly {
        RatPoly::var(Var::D)
    }

    #[test]
    fn derivative_in_lambda() {
        // λ + (1−d)λ² → 1 + 2(1−d)λ
        let p = lam() + (RatPoly::int(1) - d()) * lam().pow(2);
        let expect = RatPoly::int(1) + RatPoly::int(2) * (RatPoly::int(1) - d()) * lam();
        assert_eq!(p.derivative(Var::Lambda), expect);
    }

    #[test]
    fn evaluate_r1_at_three() {
        assert_eq!(lam().eval(&[(Var::Lambda, rat(3, 1))]).unwrap(), rat(3, 1));
        assert!(lam().eval(&[]).is_err());
    }

    #[test]
    fn linear_division() {
        let base = RatPoly::linear(1, -1, Var::Beta);
        let p = &base.pow(3) * &(d() + RatPoly::var(Var::Beta));
        let q = p.div_linear(&base).unwrap();
        assert_eq!(q, &base.pow(2) * &(d() + RatPoly::var(Var::Beta)));
        assert!((d() + RatPoly::int(1)).div_linear(&base).is_none());
        assert_eq!(RatPoly::zero().div_linear(&base), Some(RatPoly::zero()));
        assert!(RatPoly::int(3).div_linear(&base).is_none());
    }

    #[test]
    fn display_is_sorted_and_stable() {
        let p = (lam().pow(4) + lam().pow(3).scale(&rat(2, 1))) * (d() * d() - d()).scale(&rat(1, 4))
            - lam().pow(2).scale(&rat(1, 2));
        assert_eq!(
            p.to_string(),
            "-1/2 * λ^2 - 1/2 * λ^3 d + 1/2 * λ^3 d^2 - 1/4 * λ^4 d + 1/4 * λ^4 d^2"
        );
        let back = RatPoly::from_json(&p.to_json()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn substitute_composes() {
        // (λ+1)^2 with λ := d - 1 gives d^2
        let p = (lam() + RatPoly::int(1)).pow(2);
        assert_eq!(p.substitute(Var::Lambda, &(d() - RatPoly::int(1))), d() * d());
    }
}
