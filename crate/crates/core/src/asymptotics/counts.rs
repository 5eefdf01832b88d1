//! Numeric evaluation of the asymptotic partition-function and counting formulas.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::fugacity::{check_beta, lambda_beta, LambdaBeta};
use super::pcoef::compute_p;
use super::rtable::RTable;
use crate::error::{Error, Result};
use crate::numeric::{
    self, ln2, ln_binomial, ln_rat, pi, real_from_i64, real_from_int, real_from_rat, to_decimal_string, LogCount,
    LogCountBuilder, Real,
};
use crate::polymers::{Census, DefectType};
use crate::symbolic::{binomial, rat_big, rat_floor, rat_pow, rat_to_string, Rat, Var};

fn half(d: u32) -> Result<BigUint> {
    if d == 0 || d > 63 {
        return Err(Error::InvalidDimension(d, "formula evaluation needs 1 ≤ d ≤ 63".into()));
    }
    Ok(BigUint::from(1u64 << (d - 1)))
}

/// `(1+λ)^t > 2`, i.e. `λ > 2^{1/t} − 1`.
pub fn lambda_in_regime(lambda: &Rat, t: u32) -> bool {
    rat_pow(&(Rat::one() + lambda), t as i64) > Rat::from_integer(2.into())
}

/// `log 2 + N log(1+λ) + N Σ_{j<t} R_j(λ,d)(1+λ)^{-jd}`.
pub fn log_z_asymptotic(rt: &RTable, lambda: &Rat, d: u32, t: u32, digits: usize) -> Result<LogCount> {
    if !lambda.is_positive() {
        return Err(Error::InvalidParameter(format!("fugacity must be positive, got {lambda}")));
    }
    let n = half(d)?;
    let n_rat = rat_big(BigInt::from(n.clone()));
    let mut b = LogCountBuilder::new(digits);
    b.add("log 2", ln2(digits));
    b.add("N log(1+λ)", real_from_int(&BigInt::from(n), digits) * ln_rat(&(Rat::one() + lambda), digits)?);
    add_r_terms(&mut b, rt, lambda, d, t, &n_rat, digits)?;
    b.truncated(true);
    if !lambda_in_regime(lambda, t) {
        b.warn(format!("λ = {lambda} ≤ 2^(1/{t}) − 1: outside the regime of the expansion"));
    }
    Ok(b.finish())
}

fn add_r_terms(b: &mut LogCountBuilder, rt: &RTable, lambda: &Rat, d: u32, t: u32, n: &Rat, digits: usize) -> Result<()> {
    let one_plus = Rat::one() + lambda;
    for j in 1..t {
        let v = rt.eval(j, lambda, d)? * rat_pow(&one_plus, -((j * d) as i64)) * n;
        b.add(format!("N R_{j} (1+λ)^(-{j}d)"), real_from_rat(&v, digits));
    }
    Ok(())
}

/// `ln` of `(1+λ₀)^N / (λ₀^m √(2πNβ(1−β)))` with `β = m/N`.
pub fn stirling_binom(n: &BigUint, m: &BigUint, digits: usize) -> Result<LogCount> {
    if m.is_zero() || m >= n {
        return Err(Error::InvalidParameter("stirling_binom needs 0 < m < N".into()));
    }
    let nn = BigInt::from(n.clone());
    let mm = BigInt::from(m.clone());
    let beta = Rat::new(mm.clone(), nn.clone());
    let lam0 = &beta / (Rat::one() - &beta);
    let mut b = LogCountBuilder::new(digits);
    b.add("N log(1+λ₀)", real_from_int(&nn, digits) * ln_rat(&(Rat::one() + &lam0), digits)?);
    b.add("−m log λ₀", -(real_from_int(&mm, digits) * ln_rat(&lam0, digits)?));
    b.add("−½ log(2πNβ(1−β))", gaussian_norm(n, &beta, digits)?);
    Ok(b.finish())
}

/// `−½ log(2πNβ(1−β))`.
fn gaussian_norm(n: &BigUint, beta: &Rat, digits: usize) -> Result<Real> {
    let var = rat_big(BigInt::from(n.clone())) * beta * (Rat::one() - beta);
    let two_pi = pi(digits) * real_from_i64(2, digits);
    Ok(-(two_pi.ln() + ln_rat(&var, digits)?) / real_from_i64(2, digits))
}

/// `ln stirling_binom(N, m) − ln C(N, m)`.
pub fn stirling_log_error(n: &BigUint, m: &BigUint, digits: usize) -> Result<Real> {
    Ok(stirling_binom(n, m, digits)?.ln()? - ln_binomial(n, m, digits)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountPaths {
    pub beta: String,
    pub d: u32,
    pub t: u32,
    /// `⌊βN⌋`.
    pub m: String,
    pub lambda_beta: String,
    /// `log 2 + log C(N, m) + N Σ P_j Y^j`.
    pub binomial_path: LogCount,
    /// `log Z(λ_β) − m log λ_β − ½ log(2πNβ(1−β))`.
    pub fugacity_path: LogCount,
    /// `ln stirling_binom(N, m) − ln C(N, m)`.
    pub stirling_log_error: String,
}

impl CountPaths {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("count paths serialise")
    }

    pub fn path_gap(&self) -> Result<Real> {
        Ok(self.binomial_path.ln()? - self.fugacity_path.ln()?)
    }
}

pub fn floor_beta_n(beta: &Rat, d: u32) -> Result<BigUint> {
    let n = half(d)?;
    let m = rat_floor(&(beta * rat_big(BigInt::from(n))));
    m.to_biguint().ok_or_else(|| Error::InvalidParameter("negative size".into()))
}

/// Count of independent sets of size `⌊βN⌋` along the binomial path only.
pub fn log_count_binomial(rt: &RTable, beta: &Rat, d: u32, t: u32, digits: usize) -> Result<LogCount> {
    check_beta(beta)?;
    let n = half(d)?;
    let m = floor_beta_n(beta, d)?;
    let mut b = LogCountBuilder::new(digits);
    b.add("log 2", ln2(digits));
    b.add("log C(N, ⌊βN⌋)", ln_binomial(&n, &m, digits)?);
    if t >= 2 {
        let p = compute_p(rt, t)?;
        let y = rat_pow(&(Rat::one() - beta), d as i64);
        let nr = rat_big(BigInt::from(n));
        let bind = [(Var::Beta, beta.clone()), (Var::D, Rat::from_integer(d.into()))];
        for (i, pj) in p.p.iter().enumerate() {
            let j = (i + 1) as i64;
            let v = pj.eval(&bind)? * rat_pow(&y, j) * &nr;
            b.add(format!("N P_{j} Y^{j}"), real_from_rat(&v, digits));
        }
    }
    b.truncated(true);
    regime_warning(&mut b, beta, t);
    Ok(b.finish())
}

fn regime_warning(b: &mut LogCountBuilder, beta: &Rat, t: u32) {
    if super::fugacity::beta_outside_regime(beta, t) {
        b.warn(format!("β = {beta} ≤ 1 − 2^(−1/{t}): outside the regime of the fixed-size expansion"));
    }
}

/// `log Z(λ_β) − ⌊βN⌋ log λ_β − ½ log(2πNβ(1−β))`, with its `λ_β`.
pub fn log_count_fugacity(rt: &RTable, beta: &Rat, d: u32, t: u32, digits: usize) -> Result<(LogCount, LambdaBeta)> {
    let (b, lb) = fugacity_builder(rt, beta, d, t, digits)?;
    Ok((b.finish(), lb))
}

fn fugacity_builder(rt: &RTable, beta: &Rat, d: u32, t: u32, digits: usize) -> Result<(LogCountBuilder, LambdaBeta)> {
    check_beta(beta)?;
    let lb = lambda_beta(rt, beta, d, t)?;
    let n = half(d)?;
    let m = floor_beta_n(beta, d)?;
    let lam = &lb.value;
    let mut b = LogCountBuilder::new(digits);
    b.add("log 2", ln2(digits));
    b.add("N log(1+λ_β)", real_from_int(&BigInt::from(n.clone()), digits) * ln_rat(&(Rat::one() + lam), digits)?);
    add_r_terms(&mut b, rt, lam, d, t, &rat_big(BigInt::from(n.clone())), digits)?;
    b.add("−m log λ_β", -(real_from_int(&BigInt::from(m), digits) * ln_rat(lam, digits)?));
    b.add("−½ log(2πNβ(1−β))", gaussian_norm(&n, beta, digits)?);
    b.truncated(true);
    // λ_β carries the same regime warning as the count itself
    for w in &lb.warnings {
        b.warn(w.clone());
    }
    Ok((b, lb))
}

pub fn log_count_asymptotic(rt: &RTable, beta: &Rat, d: u32, t: u32, digits: usize) -> Result<CountPaths> {
    let a = log_count_binomial(rt, beta, d, t, digits)?;
    let (b, lb) = log_count_fugacity(rt, beta, d, t, digits)?;
    let n = half(d)?;
    let m = floor_beta_n(beta, d)?;
    let err = if m.is_zero() || m >= n {
        "nan".to_string()
    } else {
        to_decimal_string(&stirling_log_error(&n, &m, digits)?, digits.min(30))
    };
    Ok(CountPaths {
        beta: rat_to_string(beta),
        d,
        t,
        m: m.to_string(),
        lambda_beta: rat_to_string(&lb.value),
        binomial_path: a,
        fugacity_path: b,
        stirling_log_error: err,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialLclt {
    pub n: u64,
    pub p: String,
    pub k: u64,
    /// Exact pmf as an unreduced fraction `C(n,k) a^k (b−a)^{n−k} / b^n` for `p = a/b`.
    #[serde(with = "crate::serde_dec::biguint")]
    pub numer: BigUint,
    #[serde(with = "crate::serde_dec::biguint")]
    pub denom: BigUint,
    pub pmf: String,
    /// `1/√(2πnp(1−p))`.
    pub lclt: String,
    /// The same times `exp(−(k−np)²/(2np(1−p)))`.
    pub gaussian: String,
    /// `pmf / lclt − 1`.
    pub relative_error: f64,
}

impl BinomialLclt {
    /// Reduced exact pmf; cost grows quickly with `n`.
    pub fn pmf_exact(&self) -> Rat {
        Rat::new(BigInt::from(self.numer.clone()), BigInt::from(self.denom.clone()))
    }

    pub fn pmf_f64(&self) -> f64 {
        self.pmf.parse().unwrap_or(f64::NAN)
    }

    pub fn lclt_f64(&self) -> f64 {
        self.lclt.parse().unwrap_or(f64::NAN)
    }
}

pub fn binomial_lclt(n: u64, p: &Rat, k: u64, digits: usize) -> Result<BinomialLclt> {
    if !p.is_positive() || p >= &Rat::one() {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if k > n {
        return Err(Error::InvalidParameter(format!("k = {k} exceeds n = {n}")));
    }
    let a = p.numer().to_biguint().expect("positive");
    let bden = p.denom().to_biguint().expect("positive");
    let rest = &bden - &a;
    let numer = binomial(n, k) * a.pow(k as u32) * rest.pow((n - k) as u32);
    let denom = bden.pow(n as u32);
    let pmf = real_from_int(&BigInt::from(numer.clone()), digits) / real_from_int(&BigInt::from(denom.clone()), digits);
    let nr = Rat::from_integer(n.into());
    let var = &nr * p * (Rat::one() - p);
    let two_pi = pi(digits) * real_from_i64(2, digits);
    let lclt = (two_pi * real_from_rat(&var, digits)).sqrt().powi(dashu_int::IBig::from(-1));
    let drift = Rat::from_integer(k.into()) - &nr * p;
    let expo = -(&drift * &drift) / (&var * Rat::from_integer(2.into()));
    let gaussian = lclt.clone() * real_from_rat(&expo, digits).exp();
    let rel = numeric::to_f64(&(pmf.clone() / lclt.clone())) - 1.0;
    Ok(BinomialLclt {
        n,
        p: rat_to_string(p),
        k,
        numer,
        denom,
        pmf: to_decimal_string(&pmf, digits.min(40)),
        lclt: to_decimal_string(&lclt, digits.min(40)),
        gaussian: to_decimal_string(&gaussian, digits.min(40)),
        relative_error: rel,
    })
}

/// A type whose count is asymptotically Poisson with mean `rho`, observed `k` times.
#[derive(Clone, Debug, PartialEq)]
pub struct FixedType {
    pub label: String,
    pub rho: Rat,
    pub k: u64,
}

/// A type whose count is asymptotically Gaussian with mean and variance `m`, offset `s` from it.
#[derive(Clone, Debug, PartialEq)]
pub struct DivergingType {
    pub label: String,
    pub m: Rat,
    pub s: Rat,
}

/// `m_T = n_T w_T` for every type in a census, at fugacity `λ`.
pub fn type_means(census: &Census, lambda: &Rat) -> BTreeMap<DefectType, Rat> {
    let one_plus = Rat::one() + lambda;
    census
        .entries
        .iter()
        .map(|(t, e)| {
            let w = rat_pow(lambda, e.size as i64) * rat_pow(&one_plus, -(e.nbhd_size as i64));
            (*t, rat_big(BigInt::from(e.count.clone())) * w)
        })
        .collect()
}

/// The fugacity-path count times Poisson factors for `fixed` and Gaussian factors for `diverging`.
pub fn structured_count(
    rt: &RTable,
    beta: &Rat,
    d: u32,
    t: u32,
    fixed: &[FixedType],
    diverging: &[DivergingType],
    digits: usize,
) -> Result<LogCount> {
    for f in fixed {
        if f.rho.is_negative() {
            return Err(Error::InvalidParameter(format!("negative mean for type {}", f.label)));
        }
    }
    for g in diverging {
        if !g.m.is_positive() {
            return Err(Error::InvalidParameter(format!("non-positive mean for type {}", g.label)));
        }
    }
    let (mut b, _) = fugacity_builder(rt, beta, d, t, digits)?;
    for f in fixed {
        // log(ρ^k e^{−ρ} / k!)
        let mut v = -real_from_rat(&f.rho, digits) - numeric::ln_factorial(&BigUint::from(f.k), digits)?;
        if f.k > 0 {
            if f.rho.is_zero() {
                return Err(Error::InvalidParameter(format!("type {} has zero mean but k = {}", f.label, f.k)));
            }
            v += real_from_i64(f.k as i64, digits) * ln_rat(&f.rho, digits)?;
        }
        b.add(format!("Poisson[{}]", f.label), v);
    }
    for g in diverging {
        // log(e^{−s²/2m} / √(2πm))
        let q = -(&g.s * &g.s) / (&g.m * Rat::from_integer(2.into()));
        let two_pi = pi(digits) * real_from_i64(2, digits);
        let v = real_from_rat(&q, digits) - (two_pi.ln() + ln_rat(&g.m, digits)?) / real_from_i64(2, digits);
        b.add(format!("Gaussian[{}]", g.label), v);
    }
    Ok(b.finish())
}

/// Mean of the number of defects of each type at `λ_β`, keyed by label.
pub fn means_at(census: &Census, lambda: &Rat) -> BTreeMap<String, Rat> {
    type_means(census, lambda).into_iter().map(|(t, m)| (t.label(), m)).collect()
}

pub fn rat_to_f64_lossy(r: &Rat) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::super::rtable::{r_table, ROptions};
    use super::*;
    use crate::hypercube::Dim;
    use crate::numeric::{abs, to_f64};
    use crate::oracle::size_profile;
    use crate::polymers::census;
    use crate::symbolic::rat;

    fn rt(j: u32) -> RTable {
        r_table(j, ROptions::default()).unwrap()
    }

    #[test]
    fn log_z_trivial_and_first_order() {
        let t = rt(3);
        let z1 = log_z_asymptotic(&t, &rat(1, 1), 7, 1, 40).unwrap();
        let expect = 65.0 * 2f64.ln();
        assert!((z1.ln_f64() - expect).abs() < 1e-12);
        // t = 2 adds λN(1+λ)^{-d}
        let z2 = log_z_asymptotic(&t, &rat(1, 1), 7, 2, 40).unwrap();
        assert!((z2.ln_f64() - expect - 64.0 / 128.0).abs() < 1e-12);
        assert!(z2.terms.len() == 3);
    }

    #[test]
    fn log_z_against_exact_d5() {
        let t = rt(3);
        let exact = size_profile(Dim::new(5).unwrap()).unwrap().partition_function(&rat(1, 1));
        let ln_exact = to_f64(&ln_rat(&exact, 40).unwrap());
        let e2 = (log_z_asymptotic(&t, &rat(1, 1), 5, 2, 40).unwrap().ln_f64() - ln_exact).abs();
        let e3 = (log_z_asymptotic(&t, &rat(1, 1), 5, 3, 40).unwrap().ln_f64() - ln_exact).abs();
        assert!(e3 < e2, "{e3} vs {e2}");
    }

    #[test]
    fn increments_shrink() {
        let t = rt(3);
        for d in 8..=14 {
            let vals: Vec<f64> =
                (1..=4).map(|k| log_z_asymptotic(&t, &rat(1, 1), d, k, 40).unwrap().ln_f64()).collect();
            let inc: Vec<f64> = vals.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            assert!(inc[0] > inc[1] && inc[1] > inc[2], "d = {d}: {inc:?}");
        }
    }

    #[test]
    fn regime_warnings() {
        let t = rt(1);
        let z = log_z_asymptotic(&t, &rat(1, 10), 10, 2, 30).unwrap();
        assert!(!z.warnings.is_empty());
        let z = log_z_asymptotic(&t, &rat(1, 1), 10, 2, 30).unwrap();
        assert!(z.warnings.is_empty());
        assert!(log_z_asymptotic(&t, &rat(0, 1), 10, 2, 30).is_err());
    }

    #[test]
    fn stirling_examples() {
        let e = stirling_log_error(&BigUint::from(100u32), &BigUint::from(50u32), 40).unwrap();
        assert!(to_f64(&abs(&e)).exp_m1().abs() < 0.01);
        let e = stirling_log_error(&BigUint::from(10_000u32), &BigUint::from(5_000u32), 40).unwrap();
        assert!(to_f64(&abs(&e)).exp_m1().abs() < 1e-4);
        let a = stirling_binom(&BigUint::from(90u32), &BigUint::from(20u32), 40).unwrap();
        let b = stirling_binom(&BigUint::from(90u32), &BigUint::from(70u32), 40).unwrap();
        assert!(to_f64(&abs(&(a.ln().unwrap() - b.ln().unwrap()))) < 1e-30);
        assert!(stirling_binom(&BigUint::from(9u32), &BigUint::from(0u32), 20).is_err());
        assert!(stirling_binom(&BigUint::from(9u32), &BigUint::from(9u32), 20).is_err());
    }

    #[test]
    fn count_trivial_and_galvin() {
        let t = rt(2);
        let c1 = log_count_binomial(&t, &rat(1, 2), 6, 1, 40).unwrap();
        let expect = (2.0 * 601080390f64).ln(); // C(32, 16)
        assert!((c1.ln_f64() - expect).abs() < 1e-9);
        let c2 = log_count_binomial(&t, &rat(2, 5), 12, 2, 40).unwrap();
        let c1b = log_count_binomial(&t, &rat(2, 5), 12, 1, 40).unwrap();
        let galvin = 2048.0 * (2.0 / 3.0) * 0.6f64.powi(12);
        assert!((c2.ln_f64() - c1b.ln_f64() - galvin).abs() < 1e-9);
    }

    #[test]
    fn count_against_exact_d5() {
        let t = rt(2);
        let prof = size_profile(Dim::new(5).unwrap()).unwrap();
        let ln_exact = to_f64(&numeric::ln_biguint(&prof.count(8), 40).unwrap());
        let e1 = (log_count_binomial(&t, &rat(1, 2), 5, 1, 40).unwrap().ln_f64() - ln_exact).abs();
        let e2 = (log_count_binomial(&t, &rat(1, 2), 5, 2, 40).unwrap().ln_f64() - ln_exact).abs();
        assert!(e2 < e1, "{e2} vs {e1}");
    }

    #[test]
    fn paths_agree_when_truncation_is_small() {
        let t = rt(3);
        for d in [10u32, 12] {
            let c = log_count_asymptotic(&t, &rat(3, 4), d, 4, 60).unwrap();
            let gap = to_f64(&abs(&c.path_gap().unwrap()));
            let st: f64 = c.stirling_log_error.parse().unwrap();
            assert!(gap < 10.0 * st.abs(), "d = {d}: gap {gap}, stirling {st}");
        }
    }

    #[test]
    fn lclt_examples() {
        let small = binomial_lclt(2, &rat(1, 2), 1, 30).unwrap();
        assert_eq!(small.pmf_exact(), rat(1, 2));
        let big = binomial_lclt(1_000_000, &rat(1, 2), 500_000, 40).unwrap();
        assert!(big.relative_error.abs() < 1e-3, "{}", big.relative_error);
        let off = binomial_lclt(1_000_000, &rat(1, 2), 500_500, 40).unwrap();
        // one standard deviation off: the plain approximation misses the Gaussian factor
        assert!(off.relative_error < -0.3);
        let g: f64 = off.gaussian.parse().unwrap();
        assert!((off.pmf_f64() / g - 1.0).abs() < 1e-3);
        assert!(binomial_lclt(5, &rat(1, 1), 1, 20).is_err());
        assert!(binomial_lclt(5, &rat(1, 2), 6, 20).is_err());
    }

    #[test]
    fn structured_reduces_and_scales() {
        let t = rt(3);
        let b = rat(1, 2);
        let (base, lb) = log_count_fugacity(&t, &b, 10, 4, 40).unwrap();
        let empty = structured_count(&t, &b, 10, 4, &[], &[], 40).unwrap();
        assert_eq!(empty.ln_value, base.ln_value);
        let cen = census(Dim::new(10).unwrap(), 1).unwrap();
        let means = type_means(&cen, &lb.value);
        let rho = means[&DefectType::singleton()].clone();
        let r = rat_to_f64_lossy(&rho);
        assert!((r - 0.4698).abs() < 1e-3, "{r}");
        let one = structured_count(&t, &b, 10, 4, &[FixedType { label: "s1".into(), rho, k: 0 }], &[], 40).unwrap();
        assert!((one.ln_f64() - base.ln_f64() + r).abs() < 1e-12);
        let bad = FixedType { label: "x".into(), rho: rat(-1, 2), k: 0 };
        assert!(structured_count(&t, &b, 10, 4, &[bad], &[], 40).is_err());
        let g = DivergingType { label: "g".into(), m: rat(4, 1), s: rat(2, 1) };
        let v = structured_count(&t, &b, 10, 4, &[], &[g], 40).unwrap();
        let expect = -0.5 - 0.5 * (2.0 * std::f64::consts::PI * 4.0).ln();
        assert!((v.ln_f64() - base.ln_f64() - expect).abs() < 1e-12);
    }
}
