//! Brute-force ground truth for small cubes.
//!
//! Independent sets of `Q_d` are ordered disjoint pairs `(A, B)` of independent
//! sets of `Q_{d-1}` (the two layers of the last coordinate). Counting therefore
//! reduces to a table of independence polynomials of `Q_4` minus an arbitrary
//! vertex mask, built once by branching on the lowest available vertex.
//!
//! Vertex subsets of the whole cube are `u64` masks: bit `v` is vertex `v`.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercube::{closure_unchecked, hamming, is_odd, is_square_connected, neighborhood_unchecked, Dim, VertexSet};
use crate::symbolic::{rat_big, Base, Rat, RatFunc, RatPoly, Var};

/// Largest dimension for which the transfer method is always run.
pub const MAX_GUARANTEED_DIM: u32 = 5;
const TABLE_DIM: u32 = 4;
const TABLE_WIDTH: usize = 9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OracleOptions {
    /// Permit the d = 6 transfer (tens of millions of table lookups).
    pub allow_d6: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeProfile {
    pub d: u32,
    #[serde(with = "crate::serde_dec::biguint_vec")]
    pub counts: Vec<BigUint>,
}

impl SizeProfile {
    pub fn total(&self) -> BigUint {
        self.counts.iter().sum()
    }

    pub fn count(&self, m: usize) -> BigUint {
        self.counts.get(m).cloned().unwrap_or_default()
    }

    /// `Z(λ) = Σ_m i_m λ^m`.
    pub fn partition_function(&self, lambda: &Rat) -> Rat {
        let mut z = Rat::zero();
        for c in self.counts.iter().rev() {
            z = z * lambda + rat_big(c.clone().into());
        }
        z
    }

    /// `E|I| = λ Z'(λ) / Z(λ)`.
    pub fn expected_size(&self, lambda: &Rat) -> Rat {
        let mut num = Rat::zero();
        let mut pow = Rat::one();
        for (m, c) in self.counts.iter().enumerate() {
            num += &pow * rat_big(BigInt::from(c.clone()) * m);
            pow *= lambda;
        }
        num / self.partition_function(lambda)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("profile serialises")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        serde_json::from_value(v.clone()).map_err(|e| Error::InvalidParameter(format!("bad profile json: {e}")))
    }
}

type Row = [u64; TABLE_WIDTH];

/// `table[avail]` = independence polynomial of `Q_n[avail]`.
struct IndTable {
    rows: Vec<Row>,
}

fn closed_nbhd_mask(v: u32, n: u32) -> u64 {
    let mut m = 1u64 << v;
    for i in 0..n {
        m |= 1u64 << (v ^ (1 << i));
    }
    m
}

fn table(n: u32) -> &'static IndTable {
    static TABLES: [OnceLock<IndTable>; (TABLE_DIM + 1) as usize] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[n as usize].get_or_init(|| {
        let size = 1usize << (1u32 << n);
        let nbhd: Vec<u64> = (0..(1u32 << n)).map(|v| closed_nbhd_mask(v, n)).collect();
        let mut rows = vec![[0u64; TABLE_WIDTH]; size];
        rows[0][0] = 1;
        for avail in 1..size {
            let v = avail.trailing_zeros();
            let without = avail & !(1usize << v);
            let taken = avail & !(nbhd[v as usize] as usize);
            let mut row = rows[without];
            for (k, c) in rows[taken].iter().enumerate().take(TABLE_WIDTH - 1) {
                row[k + 1] += c;
            }
            rows[avail] = row;
        }
        IndTable { rows }
    })
}

fn full_mask(n: u32) -> u64 {
    if n == 6 {
        u64::MAX
    } else {
        (1u64 << (1u32 << n)) - 1
    }
}

/// Whether the vertex mask is independent in `Q_n`.
pub(crate) fn mask_is_independent(s: u64, n: u32) -> bool {
    (0..n).all(|i| {
        let shift = 1u32 << i;
        let low = s & coordinate_zero_mask(i, n);
        (low << shift) & s == 0
    })
}

/// Vertices whose coordinate `i` is zero.
fn coordinate_zero_mask(i: u32, n: u32) -> u64 {
    (0..(1u64 << n)).filter(|v| v >> i & 1 == 0).fold(0, |m, v| m | 1 << v)
}

/// All independent sets of `Q_n` as vertex masks, ascending.
fn independent_sets(n: u32) -> &'static [u64] {
    static LISTS: [OnceLock<Vec<u64>>; 6] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
    LISTS[n as usize].get_or_init(|| {
        if n <= TABLE_DIM {
            (0..=full_mask(n)).filter(|&s| mask_is_independent(s, n)).collect()
        } else {
            let lower = independent_sets(n - 1);
            let half = 1u32 << (n - 1);
            let mut out: Vec<u64> = lower
                .par_iter()
                .flat_map_iter(|&a| lower.iter().filter(move |&&b| a & b == 0).map(move |&b| a | (b << half)))
                .collect();
            out.sort_unstable();
            out
        }
    })
}

fn add_shifted(acc: &mut [u128], row: &[u64], shift: usize) {
    for (k, &c) in row.iter().enumerate() {
        if c != 0 {
            acc[k + shift] += c as u128;
        }
    }
}

/// Independence polynomial of `Q_n[avail]`, `n ≤ 5`, as exact counts by size.
fn indpoly_avail(n: u32, avail: u64) -> Vec<u128> {
    let width = (1usize << n.saturating_sub(1)) + 2;
    let mut acc = vec![0u128; width.max(TABLE_WIDTH + 1)];
    if n <= TABLE_DIM {
        add_shifted(&mut acc, &table(n).rows[avail as usize], 0);
    } else if n == TABLE_DIM + 1 {
        let half = 1u32 << (n - 1);
        let low = avail & full_mask(n - 1);
        let high = avail >> half;
        let tab = table(n - 1);
        for &c in independent_sets(n - 1) {
            if c & !low == 0 {
                add_shifted(&mut acc, &tab.rows[(high & !c) as usize], c.count_ones() as usize);
            }
        }
    } else {
        unreachable!("indpoly_avail supports n ≤ 5");
    }
    trim(acc)
}

fn trim(mut v: Vec<u128>) -> Vec<u128> {
    while v.len() > 1 && *v.last().unwrap() == 0 {
        v.pop();
    }
    v
}

fn to_profile(d: u32, counts: &[u128]) -> SizeProfile {
    let len = (1usize << d) + 1;
    let mut out: Vec<BigUint> = counts.iter().map(|&c| BigUint::from(c)).collect();
    out.resize(len, BigUint::zero());
    SizeProfile { d, counts: out }
}

fn check_dim(d: Dim, max: u32) -> Result<u32> {
    if d.get() > max {
        return Err(Error::DimensionTooLarge { d: d.get(), max });
    }
    Ok(d.get())
}

/// Exact `i_m(Q_d)` for all `m`, guaranteed for `d ≤ 5`.
pub fn size_profile(d: Dim) -> Result<SizeProfile> {
    size_profile_with(d, OracleOptions::default())
}

pub fn size_profile_with(d: Dim, opts: OracleOptions) -> Result<SizeProfile> {
    let max = if opts.allow_d6 { 6 } else { MAX_GUARANTEED_DIM };
    let n = check_dim(d, max)?;
    if n == 1 {
        return Ok(to_profile(1, &[1, 2]));
    }
    let m = n - 1;
    let full = full_mask(m);
    let width = (1usize << m) + 1;
    let counts = independent_sets(m)
        .par_iter()
        .fold(
            || vec![0u128; width],
            |mut acc, &a| {
                let s = a.count_ones() as usize;
                for (k, c) in indpoly_avail(m, full & !a).into_iter().enumerate() {
                    acc[k + s] += c;
                }
                acc
            },
        )
        .reduce(
            || vec![0u128; width],
            |mut x, y| {
                for (a, b) in x.iter_mut().zip(y) {
                    *a += b;
                }
                x
            },
        );
    Ok(to_profile(n, &counts))
}

/// Second, independent route: test every vertex subset (`d ≤ 4`).
pub fn size_profile_exhaustive(d: Dim) -> Result<SizeProfile> {
    let n = check_dim(d, TABLE_DIM)?;
    let zero_masks: Vec<u64> = (0..n).map(|i| coordinate_zero_mask(i, n)).collect();
    let mut counts = vec![0u128; (1usize << n) + 1];
    for s in 0..=full_mask(n) {
        let ok = zero_masks.iter().enumerate().all(|(i, &z)| ((s & z) << (1u32 << i)) & s == 0);
        if ok {
            counts[s.count_ones() as usize] += 1;
        }
    }
    Ok(to_profile(n, &counts))
}

fn check_removed(removed: &VertexSet, n: u32) -> Result<u64> {
    let mut mask = 0u64;
    for &v in removed.as_slice() {
        if v >> n != 0 {
            return Err(Error::InvalidParameter(format!("vertex {v} outside Q_{n}")));
        }
        mask |= 1 << v;
    }
    Ok(mask)
}

/// Independence polynomial (in λ) of `Q_d` minus `removed`, `d ≤ 5`.
pub fn induced_independence_poly(removed: &VertexSet, d: Dim) -> Result<RatPoly> {
    let n = check_dim(d, MAX_GUARANTEED_DIM)?;
    let mask = check_removed(removed, n)?;
    let counts = indpoly_avail(n, full_mask(n) & !mask);
    let coeffs: Vec<Rat> = counts.iter().map(|&c| rat_big(BigInt::from(c))).collect();
    Ok(RatPoly::from_univariate(Var::Lambda, &coeffs))
}

/// Exact hard-core quantities at a rational fugacity.
#[derive(Clone, Debug, PartialEq)]
pub struct HardcoreExact {
    pub d: u32,
    pub lambda: Rat,
    pub z: Rat,
    pub expected_size: Rat,
    pub profile: SizeProfile,
}

impl HardcoreExact {
    /// All independent sets as vertex masks (`d ≤ 4`).
    pub fn states(&self) -> Result<&'static [u64]> {
        if self.d > TABLE_DIM {
            return Err(Error::DimensionTooLarge { d: self.d, max: TABLE_DIM });
        }
        Ok(independent_sets(self.d))
    }

    /// `μ_λ(I)` for one independent set given as a vertex mask.
    pub fn probability(&self, state: u64) -> Rat {
        crate::symbolic::rat_pow(&self.lambda, state.count_ones() as i64) / &self.z
    }

    /// `μ_λ(event)` by enumerating every independent set (`d ≤ 4`).
    pub fn event_probability(&self, event: impl Fn(u64) -> bool) -> Result<Rat> {
        let mut total = Rat::zero();
        for &s in self.states()? {
            if event(s) {
                total += self.probability(s);
            }
        }
        Ok(total)
    }
}

pub fn hardcore_exact(d: Dim, lambda: &Rat) -> Result<HardcoreExact> {
    if lambda <= &Rat::zero() {
        return Err(Error::InvalidParameter("fugacity must be positive".into()));
    }
    let profile = size_profile(d)?;
    Ok(HardcoreExact {
        d: d.get(),
        lambda: lambda.clone(),
        z: profile.partition_function(lambda),
        expected_size: profile.expected_size(lambda),
        profile,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct OddModelProfile {
    pub d: u32,
    /// `Ξ_O(λ)`, a polynomial over a power of `(1+λ)`.
    pub xi: RatFunc,
    /// `Z_O(λ) = (1+λ)^N Ξ_O(λ)`.
    pub z_odd: RatPoly,
    /// Every compatible collection of polymers, each polymer a sorted support.
    pub configs: Vec<Vec<VertexSet>>,
    pub polymers: Vec<VertexSet>,
}

/// All odd polymers of a small cube by testing every subset of the odd side.
fn all_polymers_small(n: u32) -> Vec<VertexSet> {
    let odd: Vec<u64> = (0..(1u64 << n)).filter(|&v| is_odd(v)).collect();
    let half = odd.len();
    let mut out = Vec::new();
    for bits in 1u64..(1u64 << half) {
        let s: Vec<u64> = (0..half).filter(|i| bits >> i & 1 == 1).map(|i| odd[i]).collect();
        if is_square_connected(&s) && closure_unchecked(&s, n).len() * 2 <= half {
            out.push(VertexSet::new(s));
        }
    }
    out.sort();
    out
}

fn compatible(a: &VertexSet, b: &VertexSet) -> bool {
    a.as_slice().iter().all(|&x| b.as_slice().iter().all(|&y| hamming(x, y) > 2))
}

/// Exact odd polymer model for `d ≤ 4` by listing every compatible collection.
pub fn odd_model_exact(d: Dim) -> Result<OddModelProfile> {
    let n = check_dim(d, TABLE_DIM)?;
    let half = d.half() as u32;
    let polymers = all_polymers_small(n);
    let mut configs = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    fn rec(polys: &[VertexSet], start: usize, stack: &mut Vec<usize>, out: &mut Vec<Vec<VertexSet>>) {
        out.push(stack.iter().map(|&i| polys[i].clone()).collect());
        for i in start..polys.len() {
            if stack.iter().all(|&j| compatible(&polys[i], &polys[j])) {
                stack.push(i);
                rec(polys, i + 1, stack, out);
                stack.pop();
            }
        }
    }
    rec(&polymers, 0, &mut stack, &mut configs);

    let lam = RatPoly::var(Var::Lambda);
    let one_plus = RatPoly::linear(1, 1, Var::Lambda);
    let mut z_odd = RatPoly::zero();
    for cfg in &configs {
        let a: usize = cfg.iter().map(|s| s.len()).sum();
        let b: usize = cfg.iter().map(|s| neighborhood_unchecked(s.as_slice(), n).len()).sum();
        z_odd += &(&lam.pow(a as u32) * &one_plus.pow(half - b as u32));
    }
    let xi = RatFunc::new(z_odd.clone(), &[(Base::OnePlusLambda, half)]);
    Ok(OddModelProfile { d: n, xi, z_odd, configs, polymers })
}

/// Generating polynomial of the independent sets whose odd part splits into
/// polymers, i.e. the support of the odd two-step measure (`d ≤ 4`).
pub fn odd_supported_polynomial(d: Dim) -> Result<RatPoly> {
    let n = check_dim(d, TABLE_DIM)?;
    let half = d.half() as usize;
    let mut counts = vec![0u64; (1usize << n) + 1];
    for &s in independent_sets(n) {
        let odd: Vec<u64> = (0..(1u64 << n)).filter(|&v| s >> v & 1 == 1 && is_odd(v)).collect();
        let ok = crate::hypercube::square_components_unchecked(&odd)
            .iter()
            .all(|c| closure_unchecked(c.as_slice(), n).len() * 2 <= half);
        if ok {
            counts[s.count_ones() as usize] += 1;
        }
    }
    let coeffs: Vec<Rat> = counts.iter().map(|&c| Rat::from_integer(c.into())).collect();
    Ok(RatPoly::from_univariate(Var::Lambda, &coeffs))
}

/// `u128` view of a profile entry, for callers working in machine integers.
pub fn count_u128(p: &SizeProfile, m: usize) -> Option<u128> {
    p.count(m).to_u128()
}
