//! Coefficients `P_j(β, d)` of the fixed-size count expansion.

use serde_json::json;

use super::fugacity::{b_order, beta_x_form, compute_b, x_series, BTable};
use super::rtable::RTable;
use crate::error::{Error, Result};
use crate::symbolic::{Base, RatFunc, RatPoly, TruncSeries, Var};

#[derive(Clone, Debug, PartialEq)]
pub struct PTable {
    pub t: u32,
    /// `P_1..P_{t-1}`.
    pub p: Vec<RatFunc>,
    /// `B_1..B_r` used for `λ_β`.
    pub b: BTable,
    /// Contribution of the log-ratio part to each `P_j`.
    pub log_part: Vec<RatFunc>,
}

impl PTable {
    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "t": self.t,
            "table": self.p.iter().enumerate().map(|(i, p)| json!({
                "j": i + 1,
                "poly": p.to_string(),
                "form": p.to_json(),
                "den_one_minus_beta": p.den_exp(Base::OneMinusBeta),
                "log_part": self.log_part[i].to_string(),
            })).collect::<Vec<_>>(),
            "b": self.b.to_json(),
        })
    }
}

/// Expands `log((1+λ_β)/(1+λ₀)) − β log(λ_β/λ₀) + Σ_{j<t} R_j(λ_β)(1+λ_β)^{-jd}` in `Y`.
pub fn compute_p(rt: &RTable, t: u32) -> Result<PTable> {
    compute_p_with(rt, t, b_order(t))
}

/// As [`compute_p`] but with `r` fugacity corrections in `λ_β`.
pub fn compute_p_with(rt: &RTable, t: u32, r: usize) -> Result<PTable> {
    if t == 0 {
        return Err(Error::InvalidParameter("truncation order t must be ≥ 1".into()));
    }
    if t - 1 > rt.max_j() {
        return Err(Error::BudgetExceeded(format!("P_{} needs R_{}; table holds j ≤ {}", t - 1, t - 1, rt.max_j())));
    }
    let order = t as usize;
    let b = compute_b(rt, r)?;
    let x = x_series(&b.b, order);
    let log_series = TruncSeries::log_ratio_expand(&x, order)?;
    let mut s = log_series.clone();
    for j in 1..t {
        let sj = beta_x_form(rt.get(j)?);
        let sx = TruncSeries::compose_ratfunc(&RatFunc::from_poly(sj.poly), Var::X, &x)?;
        let k = RatPoly::var(Var::D).scale(&crate::symbolic::rat_int(j as i64));
        let nb = TruncSeries::neg_binomial_expand(&k, &x, order.saturating_sub(1))?;
        let pref = RatFunc::base_pow(Base::OneMinusBeta, -(sj.c as i64));
        s = s.add(&sx.mul(&nb)?.mul(&TruncSeries::term(order, j as usize, pref))?)?;
    }
    if !s.coeff(0).is_zero() {
        return Err(Error::InvalidParameter(format!("constant term {} should vanish", s.coeff(0))));
    }
    let p = (1..order).map(|j| s.coeff(j).clone()).collect();
    let log_part = (1..order).map(|j| log_series.coeff(j).clone()).collect();
    Ok(PTable { t, p, b, log_part })
}

#[cfg(test)]
mod tests {
    use super::super::rtable::{r_table, ROptions};
    use super::*;
    use crate::symbolic::{rat, Rat};

    fn beta() -> RatPoly {
        RatPoly::var(Var::Beta)
    }

    fn d() -> RatPoly {
        RatPoly::var(Var::D)
    }

    fn omb() -> RatPoly {
        Base::OneMinusBeta.poly()
    }

    pub(crate) fn p2_closed() -> RatFunc {
        let dd = &d() * &(&d() - &RatPoly::one());
        let two_minus = RatPoly::linear(2, -1, Var::Beta);
        let a = &(&dd * &two_minus) * &beta().pow(3);
        let a = &a - &(&omb().pow(2) * &beta().pow(2)).scale(&rat(2, 1));
        let first = RatFunc::new(a.scale(&rat(1, 4)), &[(Base::OneMinusBeta, 4)]);
        let one_minus_db = &RatPoly::one() - &(&d() * &beta());
        let second = RatFunc::new((&beta() * &one_minus_db.pow(2)).scale(&rat(1, 2)), &[(Base::OneMinusBeta, 3)]);
        &first - &second
    }

    #[test]
    fn p1_p2_closed_forms() {
        let rt = r_table(2, ROptions::default()).unwrap();
        let p = compute_p(&rt, 3).unwrap();
        assert_eq!(p.p.len(), 2);
        assert_eq!(p.p[0], RatFunc::new(beta(), &[(Base::OneMinusBeta, 1)]));
        assert_eq!(p.p[1], p2_closed());
        // the log-ratio part of P_2 is B_1^2 (1−β)^3 / (2β)
        let b1 = &p.b.b[0];
        let expect = (&b1.pow(2) * &RatFunc::from_poly(omb().pow(3)))
            .try_div(&RatFunc::from_poly(beta().scale(&rat(2, 1))))
            .unwrap();
        assert_eq!(p.log_part[1], expect);
        assert!(p.log_part[0].is_zero());
    }

    #[test]
    fn trivial_orders() {
        let rt = r_table(1, ROptions::default()).unwrap();
        assert!(compute_p(&rt, 1).unwrap().p.is_empty());
        let p = compute_p(&rt, 2).unwrap();
        assert_eq!(p.p[0], RatFunc::new(beta(), &[(Base::OneMinusBeta, 1)]));
        assert!(compute_p(&rt, 3).unwrap_err().is_budget());
    }

    #[test]
    fn stationary_in_extra_b() {
        // an extra fugacity order leaves P_1..P_{t-1} unchanged
        let rt = r_table(3, ROptions::default()).unwrap();
        let p4 = compute_p(&rt, 4).unwrap();
        let extra = compute_p_with(&rt, 4, 2).unwrap();
        assert_eq!(p4.p, extra.p);
        assert_eq!(compute_p(&rt, 3).unwrap().p[..], p4.p[..2]);
        let v = p4.p[2].eval(&[(Var::Beta, rat(1, 2)), (Var::D, rat(10, 1))]).unwrap();
        assert!(v != Rat::from_integer(0.into()));
    }
}
