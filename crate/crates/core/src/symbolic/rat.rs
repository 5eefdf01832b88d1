//! Exact rational helpers on top of `num-rational`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_big(n: BigInt) -> Rat {
    Rat::from_integer(n)
}

/// Parses `"2/5"`, `"-3"`, `"0.4"` or `"1.25e-3"` into an exact rational.
/// Decimal strings are converted digit by digit, never through binary floating point.
pub fn parse_rat(s: &str) -> Result<Rat> {
    let s = s.trim();
    let bad = || Error::InvalidParameter(format!("cannot parse '{s}' as a rational"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::InvalidParameter(format!("zero denominator in '{s}'")));
        }
        return Ok(Rat::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{int_part}{frac_part}");
    let num: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().map_err(|_| bad())? };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut r = if scale >= 0 {
        Rat::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        Rat::new(num, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        r = -r;
    }
    Ok(r)
}

/// Canonical text form: `"p/q"` or `"p"`.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    // Scale both parts down so huge rationals still convert.
    let n = r.numer();
    let d = r.denom();
    let nb = n.bits() as i64;
    let db = d.bits() as i64;
    let shift_n = (nb - 60).max(0) as usize;
    let shift_d = (db - 60).max(0) as usize;
    let nf = (n >> shift_n).to_f64().unwrap_or(f64::NAN);
    let df = (d >> shift_d).to_f64().unwrap_or(f64::NAN);
    nf / df * 2f64.powi((shift_n as i64 - shift_d as i64) as i32)
}

pub fn factorial(n: u64) -> BigUint {
    product_range(1, n)
}

/// Product of the integers in `lo..=hi` by binary splitting.
pub fn product_range(lo: u64, hi: u64) -> BigUint {
    if lo > hi {
        return BigUint::one();
    }
    if hi - lo < 16 {
        let mut acc = BigUint::one();
        for k in lo..=hi {
            acc *= k;
        }
        return acc;
    }
    let mid = lo + (hi - lo) / 2;
    product_range(lo, mid) * product_range(mid + 1, hi)
}

/// Exact binomial coefficient via prime factorisation (Legendre) and a product tree.
pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    if k == 0 {
        return BigUint::one();
    }
    if n <= 64 {
        let mut acc = BigUint::one();
        for i in 0..k {
            acc = acc * (n - i) / (i + 1);
        }
        return acc;
    }
    let primes = primes_up_to(n);
    let mut factors: Vec<BigUint> = Vec::new();
    for &p in &primes {
        let e = legendre(n, p) - legendre(k, p) - legendre(n - k, p);
        if e > 0 {
            factors.push(BigUint::from(p).pow(e as u32));
        }
    }
    product_tree(factors)
}

fn legendre(n: u64, p: u64) -> u64 {
    let mut e = 0;
    let mut q = n / p;
    while q > 0 {
        e += q;
        q /= p;
    }
    e
}

fn primes_up_to(n: u64) -> Vec<u64> {
    let n = n as usize;
    let mut sieve = vec![true; n + 1];
    sieve[0] = false;
    if n >= 1 {
        sieve[1] = false;
    }
    let mut i = 2;
    while i * i <= n {
        if sieve[i] {
            let mut j = i * i;
            while j <= n {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i as u64).collect()
}

fn product_tree(mut xs: Vec<BigUint>) -> BigUint {
    if xs.is_empty() {
        return BigUint::one();
    }
    while xs.len() > 1 {
        let mut next = Vec::with_capacity(xs.len().div_ceil(2));
        let mut it = xs.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(a * b),
                None => next.push(a),
            }
        }
        xs = next;
    }
    xs.pop().unwrap()
}

/// `x^e` for an exact rational and a signed exponent.
pub fn rat_pow(x: &Rat, e: i64) -> Rat {
    if e >= 0 {
        num_traits::pow(x.clone(), e as usize)
    } else {
        num_traits::pow(x.recip(), (-e) as usize)
    }
}

pub fn is_integer(r: &Rat) -> bool {
    r.denom().is_one()
}

/// Floor of a rational as a big integer.
pub fn rat_floor(r: &Rat) -> BigInt {
    let (q, m) = r.numer().div_mod_floor(r.denom());
    let _ = m;
    q
}

pub fn rat_abs(r: &Rat) -> Rat {
    r.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals_exactly() {
        assert_eq!(parse_rat("2/5").unwrap(), rat(2, 5));
        assert_eq!(parse_rat("0.4").unwrap(), rat(2, 5));
        assert_eq!(parse_rat("-1.25").unwrap(), rat(-5, 4));
        assert_eq!(parse_rat("1e-2").unwrap(), rat(1, 100));
        assert_eq!(parse_rat("3").unwrap(), rat(3, 1));
        assert_eq!(parse_rat(".5").unwrap(), rat(1, 2));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("abc").is_err());
        assert!(parse_rat("").is_err());
    }

    #[test]
    fn binomial_matches_pascal() {
        for n in 0..80u64 {
            let mut row = vec![BigUint::one()];
            for _ in 0..n {
                let mut next = vec![BigUint::one()];
                for w in row.windows(2) {
                    next.push(&w[0] + &w[1]);
                }
                next.push(BigUint::one());
                row = next;
            }
            for k in 0..=n {
                assert_eq!(binomial(n, k), row[k as usize], "C({n},{k})");
            }
        }
        assert_eq!(binomial(100, 50).to_string(), "100891344545564193334812497256");
    }

    #[test]
    fn f64_conversion_of_huge_rationals() {
        let big = Rat::new(BigInt::from(3u32) << 5000usize, BigInt::from(2u32) << 5000usize);
        assert!((rat_to_f64(&big) - 1.5).abs() < 1e-15);
    }
}
