//! Expected-size coefficients `F_j`, their `(β, X)` forms, and the fugacity
//! corrections `B_j` that make the expected size hit `βN`.

use num_traits::{One, Signed};
use serde_json::json;

use super::rtable::RTable;
use crate::error::{Error, Result};
use crate::symbolic::{rat_pow, rat_to_string, Base, Rat, RatFunc, RatPoly, TruncSeries, Var};

/// `F_j = λ[(1+λ) ∂R_j/∂λ − j d R_j]`.
pub fn f_poly(r: &RTable, j: u32) -> Result<RatPoly> {
    let rj = r.get(j)?;
    let lam = RatPoly::var(Var::Lambda);
    let one_plus = RatPoly::linear(1, 1, Var::Lambda);
    let jd = RatPoly::var(Var::D).scale(&Rat::from_integer(j.into()));
    let inner = &(&one_plus * &rj.derivative(Var::Lambda)) - &(&jd * rj);
    Ok(&lam * &inner)
}

/// A polynomial in `λ` rewritten at `λ = (β+X)/(1−β)` and multiplied by `(1−β)^c`,
/// with `c` its `λ`-degree.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaXForm {
    pub poly: RatPoly,
    pub c: u32,
}

pub fn beta_x_form(p: &RatPoly) -> BetaXForm {
    let c = p.degree(Var::Lambda);
    let bx = &RatPoly::var(Var::Beta) + &RatPoly::var(Var::X);
    let omb = Base::OneMinusBeta.poly();
    let mut out = RatPoly::zero();
    for (a, coeff) in p.coefficients_in(Var::Lambda).iter().enumerate() {
        if coeff.is_zero() {
            continue;
        }
        out += &(&(coeff * &bx.pow(a as u32)) * &omb.pow(c - a as u32));
    }
    BetaXForm { poly: out, c }
}

/// `G_j` with its exponent `c_j`: `F_j = (1−β)^{-c_j} G_j(β, d, X)`.
pub fn g_poly(r: &RTable, j: u32) -> Result<BetaXForm> {
    Ok(beta_x_form(&f_poly(r, j)?))
}

/// `X = Σ_{i ≤ r} B_i (1−β) Y^i` with symbolic or solved `B_i`, as a series of order `order`.
pub fn x_series(bs: &[RatFunc], order: usize) -> TruncSeries {
    let omb = RatFunc::from_poly(Base::OneMinusBeta.poly());
    let mut coeffs = vec![RatFunc::zero()];
    coeffs.extend(bs.iter().map(|b| b * &omb));
    TruncSeries::from_coeffs(order, coeffs)
}

fn symbolic_bs(r: usize) -> Vec<RatFunc> {
    (1..=r).map(|i| RatFunc::from_poly(RatPoly::var(Var::B(i as u8)))).collect()
}

/// Series in `Y` of the normalised expected size `E|I|/N` at `λ = (β+X)/(1−β)`, through `Y^r`.
fn expected_size_series(rt: &RTable, x: &TruncSeries, r: usize) -> Result<TruncSeries> {
    let order = r + 1;
    let beta = RatFunc::from_poly(RatPoly::var(Var::Beta));
    // λ/(1+λ) = (β+X)/(1+X)
    let mut geo = TruncSeries::zero(order);
    let neg_x = TruncSeries::zero(order).sub(x)?;
    let mut pow = TruncSeries::one(order);
    for _ in 0..=r {
        geo = geo.add(&pow)?;
        pow = pow.mul(&neg_x)?;
    }
    let mut s = TruncSeries::constant(order, beta).add(x)?.mul(&geo)?;
    for j in 1..=r as u32 {
        let g = g_poly(rt, j)?;
        let gx = TruncSeries::compose_ratfunc(&RatFunc::from_poly(g.poly), Var::X, x)?;
        let k = RatPoly::linear(1, j as i64, Var::D);
        let nb = TruncSeries::neg_binomial_expand(&k, x, r)?;
        let pref = RatFunc::base_pow(Base::OneMinusBeta, 1 - g.c as i64);
        let term = gx.mul(&nb)?.mul(&TruncSeries::term(order, j as usize, pref))?;
        s = s.add(&term)?;
    }
    Ok(s)
}

/// `Q_1..Q_r` with every `B_i` left symbolic.
pub fn q_funcs(rt: &RTable, r: usize) -> Result<Vec<RatFunc>> {
    let x = x_series(&symbolic_bs(r), r + 1);
    let s = expected_size_series(rt, &x, r)?;
    Ok((1..=r).map(|j| s.coeff(j).clone()).collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BTable {
    /// `B_1..B_r` as rational functions of `(β, d)`.
    pub b: Vec<RatFunc>,
    /// Observed exponents `c_j` of the `G_j`.
    pub c: Vec<u32>,
}

impl BTable {
    pub fn r(&self) -> usize {
        self.b.len()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "table": self.b.iter().enumerate().map(|(i, b)| json!({
                "j": i + 1,
                "poly": b.to_string(),
                "form": b.to_json(),
                "c": self.c[i],
                "den_one_minus_beta": b.den_exp(Base::OneMinusBeta),
            })).collect::<Vec<_>>(),
        })
    }
}

/// Solves `Q_1 = ⋯ = Q_r = 0` successively and checks each residual vanishes.
pub fn compute_b(rt: &RTable, r: usize) -> Result<BTable> {
    if r as u32 > rt.max_j() {
        return Err(Error::BudgetExceeded(format!("B_{r} needs R_{r}; table holds j ≤ {}", rt.max_j())));
    }
    let qs = q_funcs(rt, r)?;
    let two = RatFunc::base_pow(Base::OneMinusBeta, 2);
    let mut solved: Vec<RatFunc> = Vec::with_capacity(r);
    let mut cs = Vec::with_capacity(r);
    for (idx, q) in qs.iter().enumerate() {
        let j = idx + 1;
        let mut qj = q.clone();
        for (i, b) in solved.iter().enumerate() {
            qj = qj.substitute(Var::B((i + 1) as u8), b)?;
        }
        for later in (j + 1)..=r {
            if qj.uses(Var::B(later as u8)) {
                return Err(Error::VariableMismatch(format!("Q_{j} depends on B_{later}")));
            }
        }
        let (a, rest) = qj.linear_parts(Var::B(j as u8))?;
        if a.is_zero() {
            return Err(Error::ZeroLinearCoefficient(format!("B_{j} in Q_{j} = {qj}")));
        }
        if a != two {
            return Err(Error::InvalidParameter(format!("coefficient of B_{j} in Q_{j} is {a}, expected (1 − β)^2")));
        }
        let bj = (-&rest).try_div(&a)?;
        if !qj.substitute(Var::B(j as u8), &bj)?.is_zero() {
            return Err(Error::InvalidParameter(format!("residual of Q_{j} does not vanish")));
        }
        solved.push(bj);
        cs.push(g_poly(rt, j as u32)?.c);
    }
    Ok(BTable { b: solved, c: cs })
}

/// `r = ⌈t/2⌉ − 1`.
pub fn b_order(t: u32) -> usize {
    (t.div_ceil(2) as usize).saturating_sub(1)
}

/// `2(1−β)^t ≥ 1`, i.e. `β ≤ 1 − 2^{-1/t}`.
pub fn beta_outside_regime(beta: &Rat, t: u32) -> bool {
    rat_pow(&(Rat::one() - beta), t as i64) * Rat::from_integer(2.into()) >= Rat::one()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaBeta {
    pub beta: Rat,
    pub d: u32,
    pub t: u32,
    pub r: usize,
    /// Exact value `β/(1−β) + Σ B_j(β,d)(1−β)^{jd}`.
    pub value: Rat,
    /// Numeric contribution `B_j(β,d)(1−β)^{jd}` of each order.
    pub terms: Vec<Rat>,
    pub b: BTable,
    pub warnings: Vec<String>,
}

impl LambdaBeta {
    pub fn symbolic(&self) -> String {
        let mut s = "β/(1 - β)".to_string();
        for (i, b) in self.b.b.iter().enumerate() {
            s.push_str(&format!(" + [{b}] Y^{}", i + 1));
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "beta": rat_to_string(&self.beta),
            "d": self.d,
            "t": self.t,
            "r": self.r,
            "value": rat_to_string(&self.value),
            "decimal": crate::numeric::to_decimal_string(
                &crate::numeric::real_from_rat(&self.value, 40), 30),
            "terms": self.terms.iter().map(rat_to_string).collect::<Vec<_>>(),
            "symbolic": self.symbolic(),
            "b": self.b.to_json(),
            "warnings": self.warnings,
        })
    }
}

pub fn check_beta(beta: &Rat) -> Result<()> {
    if !beta.is_positive() || beta >= &Rat::one() {
        return Err(Error::InvalidParameter(format!("β must lie in (0, 1), got {beta}")));
    }
    Ok(())
}

pub fn lambda_beta(rt: &RTable, beta: &Rat, d: u32, t: u32) -> Result<LambdaBeta> {
    check_beta(beta)?;
    if d == 0 || d > 63 {
        return Err(Error::InvalidDimension(d, "formula evaluation needs 1 ≤ d ≤ 63".into()));
    }
    let r = b_order(t);
    let b = compute_b(rt, r)?;
    let omb = Rat::one() - beta;
    let mut value = beta / &omb;
    let mut terms = Vec::with_capacity(r);
    let bind = [(Var::Beta, beta.clone()), (Var::D, Rat::from_integer(d.into()))];
    for (i, bj) in b.b.iter().enumerate() {
        let term = bj.eval(&bind)? * rat_pow(&omb, ((i + 1) as u32 * d) as i64);
        value += &term;
        terms.push(term);
    }
    let mut warnings = Vec::new();
    if beta_outside_regime(beta, t) {
        warnings.push(format!("β = {beta} ≤ 1 − 2^(−1/{t}): outside the regime of the fixed-size expansion"));
    }
    if !value.is_positive() {
        return Err(Error::OutOfRegime(format!("λ_β = {value} ≤ 0 at β = {beta}, d = {d}, t = {t}")));
    }
    Ok(LambdaBeta { beta: beta.clone(), d, t, r, value, terms, b, warnings })
}

#[cfg(test)]
mod tests {
    use super::super::rtable::{r_table, ROptions};
    use super::*;
    use crate::symbolic::rat;

    fn table(j: u32) -> RTable {
        r_table(j, ROptions::default()).unwrap()
    }

    fn beta() -> RatPoly {
        RatPoly::var(Var::Beta)
    }

    fn d() -> RatPoly {
        RatPoly::var(Var::D)
    }

    #[test]
    fn f1_and_g1() {
        let t = table(1);
        let l = RatPoly::var(Var::Lambda);
        let f1 = &l + &(&(&RatPoly::one() - &d()) * &l.pow(2));
        assert_eq!(f_poly(&t, 1).unwrap(), f1);
        let g = g_poly(&t, 1).unwrap();
        assert_eq!(g.c, 2);
        let bx = &beta() + &RatPoly::var(Var::X);
        let g1 = &(&Base::OneMinusBeta.poly() * &bx) + &(&(&RatPoly::one() - &d()) * &bx.pow(2));
        assert_eq!(g.poly, g1);
    }

    #[test]
    fn q1_closed_form() {
        let q = q_funcs(&table(1), 1).unwrap();
        let omb = Base::OneMinusBeta.poly();
        let b1 = RatFunc::from_poly(&RatPoly::var(Var::B(1)) * &omb.pow(2));
        let rest = &(&beta() * &omb) + &(&(&RatPoly::one() - &d()) * &beta().pow(2));
        let expect = &b1 + &RatFunc::new(rest, &[(Base::OneMinusBeta, 1)]);
        assert_eq!(q[0], expect);
    }

    #[test]
    fn b1_closed_form() {
        let b = compute_b(&table(1), 1).unwrap();
        let num = &(&(&d() * &beta()) - &RatPoly::one()) * &beta();
        assert_eq!(b.b[0], RatFunc::new(num, &[(Base::OneMinusBeta, 3)]));
        let v = b.b[0].eval(&[(Var::Beta, rat(1, 2)), (Var::D, rat(4, 1))]).unwrap();
        assert_eq!(v, rat(4, 1));
        assert!(compute_b(&table(1), 0).unwrap().b.is_empty());
    }

    #[test]
    fn b2_residual_and_coefficient() {
        // compute_b checks the (1−β)^2 coefficient and the vanishing residual
        let b = compute_b(&table(2), 2).unwrap();
        assert_eq!(b.r(), 2);
        assert!(b.b[1].den_exp(Base::OneMinusBeta) > 0);
    }

    #[test]
    fn lambda_beta_examples() {
        let t = table(1);
        let l2 = lambda_beta(&t, &rat(2, 5), 12, 2).unwrap();
        assert_eq!(l2.value, rat(2, 3));
        assert!(l2.terms.is_empty());
        // β = 1/2, d = 10: B_1 = 16, so λ = 1 + 16/1024
        let l = lambda_beta(&t, &rat(1, 2), 10, 4).unwrap();
        assert_eq!(l.value, rat(65, 64));
        assert!(l.warnings.is_empty());
        // with d = 4 the same formula gives 1 + 4/16
        assert_eq!(lambda_beta(&t, &rat(1, 2), 4, 4).unwrap().value, rat(5, 4));
        let b = rat(2, 5);
        let lb = lambda_beta(&t, &b, 10, 4).unwrap();
        let b1 = rat(10 * 2 - 5, 5) * &b / rat_pow(&rat(3, 5), 3);
        assert_eq!(lb.value, &b / rat(3, 5) + b1 * rat_pow(&rat(3, 5), 10));
        assert!(lb.warnings.is_empty());
        assert!(!lambda_beta(&t, &rat(1, 10), 10, 4).unwrap().warnings.is_empty());
    }

    #[test]
    fn lambda_beta_errors() {
        let t = table(1);
        assert!(lambda_beta(&t, &rat(0, 1), 10, 4).is_err());
        assert!(lambda_beta(&t, &rat(1, 1), 10, 4).is_err());
        // small β and small d drive the correction negative
        let e = lambda_beta(&t, &rat(1, 100), 1, 4).unwrap_err();
        assert!(matches!(e, Error::OutOfRegime(_)), "{e:?}");
    }

    #[test]
    fn regime_boundary() {
        // 1 − 2^{−1/2} ≈ 0.2929
        assert!(beta_outside_regime(&rat(29, 100), 2));
        assert!(!beta_outside_regime(&rat(30, 100), 2));
        assert_eq!(b_order(1), 0);
        assert_eq!(b_order(2), 0);
        assert_eq!(b_order(3), 1);
        assert_eq!(b_order(4), 1);
        assert_eq!(b_order(5), 2);
    }
}
