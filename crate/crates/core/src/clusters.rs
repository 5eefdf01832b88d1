//! Clusters of odd polymers, Ursell functions and truncated cluster sums.
//!
//! Clusters are enumerated once as multisets and weighted by their number of
//! orderings. Every sum over clusters is translation invariant, so it is taken
//! over clusters whose union `U` contains the root vertex, with weight `1/|U|`,
//! and multiplied by `N`.
//!
//! The weight of a cluster uses `Σ_{S∈Γ} |N(S)|` counted with multiplicity.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{SmallGraph, MAX_SMALL};
use crate::hypercube::{hamming, square_neighbors, Dim, VertexSet};
use crate::polymers::{rooted_polymers, DefectType, Polymer, DEFAULT_NODE_BUDGET, ROOT};
use crate::symbolic::{factorial, rat, rat_big, rat_pow, Rat, RatPoly, Var};

/// Edge cap for the direct alternating sum.
pub const URSELL_EDGE_CAP: usize = 20;

/// `φ(H) = (1/|V|!) Σ_{A ⊆ E spanning connected} (−1)^{|A|}` by direct summation.
pub fn ursell(h: &SmallGraph) -> Result<Rat> {
    let edges = h.edges();
    if edges.len() > URSELL_EDGE_CAP {
        return Err(Error::SizeCapExceeded(format!("{} edges exceed the Ursell cap {URSELL_EDGE_CAP}", edges.len())));
    }
    let n = h.order();
    if n == 0 {
        return Ok(Rat::zero());
    }
    let mut total: i64 = 0;
    let mut parent = [0usize; MAX_SMALL];
    for mask in 0u32..(1u32 << edges.len()) {
        if (mask.count_ones() as usize) < n - 1 {
            continue;
        }
        for (i, p) in parent.iter_mut().enumerate().take(n) {
            *p = i;
        }
        let mut comps = n;
        for (i, &(a, b)) in edges.iter().enumerate() {
            if mask >> i & 1 == 1 {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra] = rb;
                    comps -= 1;
                }
            }
        }
        if comps == 1 {
            total += if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        }
    }
    Ok(Rat::new(total.into(), factorial(n as u64).into()))
}

fn find(p: &mut [usize], mut x: usize) -> usize {
    while p[x] != x {
        p[x] = p[p[x]];
        x = p[x];
    }
    x
}

/// Same value via the vertex-subset recursion
/// `[E = ∅] = Σ_{S ∋ v₁} c(G[S]) · [E(G[V∖S]) = ∅]`.
pub fn ursell_recursive(h: &SmallGraph) -> Result<Rat> {
    let n = h.order();
    if n == 0 {
        return Ok(Rat::zero());
    }
    let mut memo: HashMap<u8, i64> = HashMap::new();
    let full = ((1u16 << n) - 1) as u8;
    let c = connected_signed_count(h, full, &mut memo);
    Ok(Rat::new(c.into(), factorial(n as u64).into()))
}

fn edgeless_on(h: &SmallGraph, mask: u8) -> bool {
    (0..h.order()).all(|v| mask >> v & 1 == 0 || h.neighbors(v) & mask == 0)
}

fn connected_signed_count(h: &SmallGraph, mask: u8, memo: &mut HashMap<u8, i64>) -> i64 {
    if mask.count_ones() == 1 {
        return 1;
    }
    if let Some(&v) = memo.get(&mask) {
        return v;
    }
    let low = mask & mask.wrapping_neg();
    let rest = mask & !low;
    let mut value = if edgeless_on(h, mask) { 1 } else { 0 };
    // proper subsets S of mask containing the lowest vertex
    let mut sub = rest;
    loop {
        let s = low | sub;
        if s != mask && edgeless_on(h, mask & !s) {
            value -= connected_signed_count(h, s, memo);
        }
        if sub == 0 {
            break;
        }
        sub = (sub - 1) & rest;
    }
    memo.insert(mask, value);
    value
}

thread_local! {
    static URSELL_CACHE: RefCell<HashMap<(usize, u64), Rat>> = RefCell::new(HashMap::new());
}

fn ursell_cached(h: &SmallGraph) -> Result<Rat> {
    let key = (h.order(), h.edge_mask());
    if let Some(v) = URSELL_CACHE.with(|c| c.borrow().get(&key).cloned()) {
        return Ok(v);
    }
    let v = ursell(h)?;
    URSELL_CACHE.with(|c| c.borrow_mut().insert(key, v.clone()));
    Ok(v)
}

/// Number of distinct orderings of a multiset with the given multiplicities.
pub fn orderings(mults: &[usize]) -> u64 {
    let m: usize = mults.iter().sum();
    let mut v = num_bigint::BigUint::from(1u8);
    let num = factorial(m as u64);
    for &k in mults {
        v *= factorial(k as u64);
    }
    u64::try_from(num / v).expect("ordering count fits in u64")
}

/// A finite universe of abstract polymers with symbolic weights `w_1..w_p`
/// and a reflexive incompatibility relation.
#[derive(Clone, Debug)]
pub struct SyntheticUniverse {
    incompat: SmallGraph,
}

impl SyntheticUniverse {
    /// `edges` lists incompatible pairs of distinct polymers.
    pub fn new(p: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if p == 0 || p > 4 {
            return Err(Error::InvalidParameter("synthetic universes hold 1..=4 polymers".into()));
        }
        Ok(SyntheticUniverse { incompat: SmallGraph::from_edges(p, edges)? })
    }

    fn weight(i: usize) -> RatPoly {
        RatPoly::var(Var::W(i as u8 + 1))
    }

    fn compatible(&self, a: usize, b: usize) -> bool {
        a != b && !self.incompat.has_edge(a, b)
    }

    /// `Ξ = Σ_{pairwise compatible sets} Π w_i`.
    pub fn partition_function(&self) -> RatPoly {
        let p = self.incompat.order();
        let mut xi = RatPoly::zero();
        for mask in 0u32..(1 << p) {
            let members: Vec<usize> = (0..p).filter(|i| mask >> i & 1 == 1).collect();
            let ok = members.iter().all(|&a| members.iter().all(|&b| a == b || self.compatible(a, b)));
            if ok {
                xi += &members.iter().fold(RatPoly::one(), |acc, &i| &acc * &Self::weight(i));
            }
        }
        xi
    }

    /// Taylor expansion of `log Ξ` to total degree `max_degree` in the weights.
    pub fn log_partition_taylor(&self, max_degree: u32) -> RatPoly {
        let vars: Vec<Var> = (0..self.incompat.order()).map(|i| Var::W(i as u8 + 1)).collect();
        let u = &self.partition_function() - &RatPoly::one();
        let mut power = RatPoly::one();
        let mut out = RatPoly::zero();
        for k in 1..=max_degree {
            power = (&power * &u).truncate_total_degree(&vars, max_degree);
            let c = rat(if k % 2 == 1 { 1 } else { -1 }, k as i64);
            out += &power.scale(&c);
        }
        out
    }

    /// `Σ_Γ orderings(Γ) φ(H(Γ)) Π w` over multisets with connected `H` and
    /// at most `max_degree` members.
    pub fn cluster_expansion(&self, max_degree: u32) -> Result<RatPoly> {
        let p = self.incompat.order();
        let mut out = RatPoly::zero();
        let mut mults = vec![0usize; p];
        self.multisets(0, max_degree as usize, &mut mults, &mut out)?;
        Ok(out)
    }

    fn multisets(&self, i: usize, left: usize, mults: &mut Vec<usize>, out: &mut RatPoly) -> Result<()> {
        if i == mults.len() {
            let m: usize = mults.iter().sum();
            if m == 0 {
                return Ok(());
            }
            let mut nodes = Vec::new();
            for (j, &k) in mults.iter().enumerate() {
                nodes.extend(std::iter::repeat_n(j, k));
            }
            let mut h = SmallGraph::new(nodes.len())?;
            for a in 0..nodes.len() {
                for b in (a + 1)..nodes.len() {
                    if !self.compatible(nodes[a], nodes[b]) {
                        h.add_edge(a, b);
                    }
                }
            }
            if !h.is_connected() {
                return Ok(());
            }
            let phi = ursell(&h)?;
            let w = nodes.iter().fold(RatPoly::one(), |acc, &j| &acc * &Self::weight(j));
            let nz: Vec<usize> = mults.iter().copied().filter(|&k| k > 0).collect();
            *out += &w.scale(&(phi * Rat::from_integer(orderings(&nz).into())));
            return Ok(());
        }
        for k in 0..=left {
            mults[i] = k;
            self.multisets(i + 1, left - k, mults, out)?;
        }
        mults[i] = 0;
        Ok(())
    }
}

/// A polymer is identified by its rooted shape index and its smallest vertex.
type PolymerKey = (u32, u64);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterRecord {
    /// Members as (support, multiplicity), sorted by support.
    pub polymers: Vec<(VertexSet, usize)>,
    pub total_size: u32,
    /// `Σ |N(S)|` with multiplicity.
    pub nbhd: u32,
    /// Number of distinct vertices in the union of supports.
    pub union_size: u32,
    pub orderings: u64,
    pub ursell: Rat,
    /// Occurrences of each defect type, with multiplicity.
    pub type_counts: Vec<(DefectType, u32)>,
}

impl ClusterRecord {
    /// `orderings · φ / |U|`, the rooted coefficient of `λ^k (1+λ)^{-n}`.
    pub fn rooted_coefficient(&self) -> Rat {
        &self.ursell * Rat::new(self.orderings.into(), self.union_size.into())
    }

    pub fn type_count(&self, t: &DefectType) -> u32 {
        self.type_counts.iter().find(|(u, _)| u == t).map(|(_, c)| *c).unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClusterOptions {
    /// Cap on the number of distinct clusters held at any growth level.
    pub budget: u64,
    /// Keep one record per cluster; otherwise only the stratum table is built.
    pub keep_records: bool,
}

impl Default for ClusterOptions {
    fn default() -> Self {
        ClusterOptions { budget: 20_000_000, keep_records: true }
    }
}

/// Rooted clusters of a fixed dimension up to a total size.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSet {
    pub d: u32,
    pub max_total: u32,
    /// `c_{k,n} = Σ_{rooted, ‖Γ‖=k, Σ|N(S)|=n} orderings·φ/|U|`.
    pub strata: BTreeMap<(u32, u32), Rat>,
    pub counts_by_total: BTreeMap<u32, u64>,
    pub records: Option<Vec<ClusterRecord>>,
}

struct Shapes {
    d: u32,
    rooted: Vec<Polymer>,
    types: Vec<DefectType>,
    index: HashMap<Vec<u64>, u32>,
    by_size: Vec<Vec<u32>>,
}

impl Shapes {
    fn new(d: Dim, max_size: usize) -> Result<Self> {
        let rooted = rooted_polymers(d, max_size, DEFAULT_NODE_BUDGET)?;
        let types = rooted.iter().map(|p| p.defect_type(d.get())).collect::<Result<Vec<_>>>()?;
        let index = rooted.iter().enumerate().map(|(i, p)| (p.support.as_slice().to_vec(), i as u32)).collect();
        let mut by_size = vec![Vec::new(); max_size + 1];
        for (i, p) in rooted.iter().enumerate() {
            by_size[p.size()].push(i as u32);
        }
        Ok(Shapes { d: d.get(), rooted, types, index, by_size })
    }

    fn support(&self, key: PolymerKey) -> Vec<u64> {
        let base = &self.rooted[key.0 as usize].support;
        let x = ROOT ^ key.1;
        let mut v: Vec<u64> = base.as_slice().iter().map(|&u| u ^ x).collect();
        v.sort_unstable();
        v
    }

    /// Canonical key of the translate of rooted shape `r` by `x`.
    fn key_of_translate(&self, r: u32, x: u64) -> PolymerKey {
        let mut t: Vec<u64> = self.rooted[r as usize].support.as_slice().iter().map(|&u| u ^ x).collect();
        t.sort_unstable();
        let m = t[0];
        let y = m ^ ROOT;
        let mut c: Vec<u64> = t.iter().map(|&u| u ^ y).collect();
        c.sort_unstable();
        let r0 = self.index[&c];
        (r0, m)
    }

    fn size(&self, key: PolymerKey) -> usize {
        self.rooted[key.0 as usize].size()
    }
}

fn incompatible(a: &[u64], b: &[u64]) -> bool {
    a.iter().any(|&x| b.iter().any(|&y| hamming(x, y) <= 2))
}

impl ClusterSet {
    pub fn enumerate(d: Dim, max_total: u32, opts: ClusterOptions) -> Result<Self> {
        if d.get() < 2 {
            return Err(Error::InvalidDimension(d.get(), "clusters need d ≥ 2".into()));
        }
        if max_total as usize > MAX_SMALL {
            return Err(Error::SizeCapExceeded(format!("cluster total size {max_total} exceeds {MAX_SMALL}")));
        }
        let shapes = Shapes::new(d, max_total as usize)?;
        let mut strata: BTreeMap<(u32, u32), Rat> = BTreeMap::new();
        let mut counts_by_total: BTreeMap<u32, u64> = BTreeMap::new();
        let mut records: Vec<ClusterRecord> = Vec::new();

        let mut level: Vec<Vec<PolymerKey>> = shapes
            .rooted
            .iter()
            .enumerate()
            .filter(|(_, p)| p.size() <= max_total as usize)
            .map(|(i, _)| vec![shapes.key_of_translate(i as u32, 0)])
            .collect();
        level.sort();
        level.dedup();

        while !level.is_empty() {
            if level.len() as u64 > opts.budget {
                return Err(Error::BudgetExceeded(format!("{} clusters at one level exceed budget {}", level.len(), opts.budget)));
            }
            let evaluated: Vec<(ClusterRecord, bool)> =
                level.par_iter().map(|c| evaluate(&shapes, c)).collect::<Result<Vec<_>>>()?;
            for (rec, connected) in evaluated {
                if !connected {
                    continue;
                }
                *counts_by_total.entry(rec.total_size).or_insert(0) += 1;
                let e = strata.entry((rec.total_size, rec.nbhd)).or_insert_with(Rat::zero);
                *e += rec.rooted_coefficient();
                if opts.keep_records {
                    records.push(rec);
                }
            }
            let mut next: Vec<Vec<PolymerKey>> =
                level.par_iter().flat_map_iter(|c| grow(&shapes, c, max_total)).collect();
            next.par_sort_unstable();
            next.dedup();
            level = next;
        }
        strata.retain(|_, v| !v.is_zero());
        Ok(ClusterSet {
            d: d.get(),
            max_total,
            strata,
            counts_by_total,
            records: opts.keep_records.then_some(records),
        })
    }

    pub fn half(&self) -> Rat {
        rat_big(num_bigint::BigInt::from(1u8) << (self.d - 1) as usize)
    }

    /// Polynomial factor of `Σ_{‖Γ‖=k} w(Γ) f(Γ) = N λ^k P(λ) (1+λ)^{-kd}`.
    pub fn cluster_sum(&self, k: u32, obs: &Observable) -> Result<ClusterSum> {
        if k > self.max_total {
            return Err(Error::InvalidParameter(format!("stratum {k} beyond enumerated size {}", self.max_total)));
        }
        let kd = k * self.d;
        let one_plus = RatPoly::linear(1, 1, Var::Lambda);
        let mut by_n: BTreeMap<u32, Rat> = BTreeMap::new();
        match obs {
            Observable::One => {
                for (&(kk, n), c) in self.strata.range((k, 0)..=(k, u32::MAX)) {
                    debug_assert_eq!(kk, k);
                    by_n.insert(n, c.clone());
                }
            }
            _ => {
                let records = self.records.as_ref().ok_or_else(|| {
                    Error::InvalidParameter("observable sums need per-cluster records".into())
                })?;
                for r in records.iter().filter(|r| r.total_size == k) {
                    let f = obs.value(r);
                    if !f.is_zero() {
                        *by_n.entry(r.nbhd).or_insert_with(Rat::zero) += r.rooted_coefficient() * f;
                    }
                }
            }
        }
        let mut poly = RatPoly::zero();
        for (n, c) in by_n {
            if c.is_zero() {
                continue;
            }
            poly += &one_plus.pow(kd - n).scale(&c);
        }
        Ok(ClusterSum { d: self.d, k, observable: obs.clone(), poly })
    }

    /// `N Σ_n c_{k,n} λ^k (1+λ)^{-n}` for one stratum.
    pub fn stratum_value(&self, k: u32, lambda: &Rat) -> Rat {
        let one_plus = Rat::one() + lambda;
        let mut s = Rat::zero();
        for (&(_, n), c) in self.strata.range((k, 0)..=(k, u32::MAX)) {
            s += c * rat_pow(&one_plus, -(n as i64));
        }
        s * rat_pow(lambda, k as i64) * self.half()
    }

    /// `Σ_{‖Γ‖ ≤ k} w(Γ)`.
    pub fn truncated_log_xi(&self, lambda: &Rat, k: u32) -> Result<Rat> {
        self.check_k(k, lambda)?;
        Ok((1..=k).map(|j| self.stratum_value(j, lambda)).fold(Rat::zero(), |a, b| a + b))
    }

    /// `λN/(1+λ) + Σ_{‖Γ‖≤k} w(Γ)(‖Γ‖ − λ Σ|N(S)|/(1+λ))`.
    pub fn expected_size_truncated(&self, lambda: &Rat, k: u32) -> Result<Rat> {
        self.check_k(k, lambda)?;
        let one_plus = Rat::one() + lambda;
        let ratio = lambda / &one_plus;
        let mut s = Rat::zero();
        for (&(kk, n), c) in self.strata.range((1, 0)..=(k, u32::MAX)) {
            let w = c * rat_pow(lambda, kk as i64) * rat_pow(&one_plus, -(n as i64));
            s += w * (Rat::from_integer(kk.into()) - &ratio * Rat::from_integer(n.into()));
        }
        Ok(self.half() * (ratio + s))
    }

    fn check_k(&self, k: u32, lambda: &Rat) -> Result<()> {
        if k > self.max_total {
            return Err(Error::BudgetExceeded(format!("truncation {k} beyond enumerated size {}", self.max_total)));
        }
        if lambda <= &Rat::zero() {
            return Err(Error::InvalidParameter("fugacity must be positive".into()));
        }
        Ok(())
    }
}

fn evaluate(shapes: &Shapes, cluster: &[PolymerKey]) -> Result<(ClusterRecord, bool)> {
    let mut distinct: Vec<(PolymerKey, usize)> = Vec::new();
    for &k in cluster {
        match distinct.last_mut() {
            Some((p, m)) if *p == k => *m += 1,
            _ => distinct.push((k, 1)),
        }
    }
    let supports: Vec<Vec<u64>> = distinct.iter().map(|(k, _)| shapes.support(*k)).collect();
    let mut nodes: Vec<usize> = Vec::new();
    for (i, (_, m)) in distinct.iter().enumerate() {
        nodes.extend(std::iter::repeat_n(i, *m));
    }
    let mut h = SmallGraph::new(nodes.len())?;
    for a in 0..nodes.len() {
        for b in (a + 1)..nodes.len() {
            if nodes[a] == nodes[b] || incompatible(&supports[nodes[a]], &supports[nodes[b]]) {
                h.add_edge(a, b);
            }
        }
    }
    let connected = h.is_connected();
    let ursell = if connected { ursell_cached(&h)? } else { Rat::zero() };
    let mut union: Vec<u64> = supports.iter().flatten().copied().collect();
    union.sort_unstable();
    union.dedup();
    let mut type_counts: BTreeMap<DefectType, u32> = BTreeMap::new();
    let mut total = 0u32;
    let mut nbhd = 0u32;
    for ((key, m), _) in distinct.iter().zip(&supports) {
        let p = &shapes.rooted[key.0 as usize];
        total += (p.size() * m) as u32;
        nbhd += (p.nbhd_size * m) as u32;
        *type_counts.entry(shapes.types[key.0 as usize]).or_insert(0) += *m as u32;
    }
    let mults: Vec<usize> = distinct.iter().map(|(_, m)| *m).collect();
    let rec = ClusterRecord {
        polymers: supports.into_iter().zip(mults.iter()).map(|(s, &m)| (VertexSet::new(s), m)).collect(),
        total_size: total,
        nbhd,
        union_size: union.len() as u32,
        orderings: orderings(&mults),
        ursell,
        type_counts: type_counts.into_iter().collect(),
    };
    Ok((rec, connected))
}

/// Multisets obtained by adding one polymer incompatible with some member.
fn grow(shapes: &Shapes, cluster: &[PolymerKey], max_total: u32) -> Vec<Vec<PolymerKey>> {
    let used: usize = cluster.iter().map(|&k| shapes.size(k)).sum();
    let room = max_total as usize - used;
    if room == 0 {
        return Vec::new();
    }
    let mut ball: Vec<u64> = Vec::new();
    for &k in cluster {
        for v in shapes.support(k) {
            ball.push(v);
            ball.extend(square_neighbors(v, shapes.d));
        }
    }
    ball.sort_unstable();
    ball.dedup();
    let mut cands: Vec<PolymerKey> = Vec::new();
    for &u in &ball {
        let x = u ^ ROOT;
        for size in 1..=room.min(shapes.by_size.len() - 1) {
            for &r in &shapes.by_size[size] {
                cands.push(shapes.key_of_translate(r, x));
            }
        }
    }
    cands.sort_unstable();
    cands.dedup();
    cands
        .into_iter()
        .map(|c| {
            let mut next = cluster.to_vec();
            let pos = next.partition_point(|&k| k <= c);
            next.insert(pos, c);
            next
        })
        .collect()
}

/// Observables `f(Γ)` that can be summed against cluster weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    One,
    Size(u32),
    Nbhd(u32),
    TypeCount(DefectType, u32),
    MixedSizeNbhd,
}

impl Observable {
    pub fn value(&self, r: &ClusterRecord) -> Rat {
        let p = |x: u32, l: u32| Rat::from_integer(num_bigint::BigInt::from(x).pow(l));
        match self {
            Observable::One => Rat::one(),
            Observable::Size(l) => p(r.total_size, *l),
            Observable::Nbhd(l) => p(r.nbhd, *l),
            Observable::TypeCount(t, l) => p(r.type_count(t), *l),
            Observable::MixedSizeNbhd => Rat::from_integer((r.total_size as u64 * r.nbhd as u64).into()),
        }
    }

    /// Parses `one`, `size^2`, `nbhd^1`, `type:<label>^1`, `mixed`.
    pub fn parse(s: &str) -> Result<Self> {
        let (head, pow) = match s.rsplit_once('^') {
            Some((h, p)) => (h, p.parse::<u32>().map_err(|_| Error::UnknownObservable(s.to_string()))?),
            None => (s, 1),
        };
        match head {
            "one" => Ok(Observable::One),
            "size" => Ok(Observable::Size(pow)),
            "nbhd" => Ok(Observable::Nbhd(pow)),
            "mixed" | "mixed_size_nbhd" => Ok(Observable::MixedSizeNbhd),
            _ => match head.strip_prefix("type:") {
                Some(label) => Ok(Observable::TypeCount(DefectType::parse_label(label)?, pow)),
                None => Err(Error::UnknownObservable(s.to_string())),
            },
        }
    }

    pub fn tag(&self) -> String {
        match self {
            Observable::One => "one".into(),
            Observable::Size(l) => format!("size^{l}"),
            Observable::Nbhd(l) => format!("nbhd^{l}"),
            Observable::TypeCount(t, l) => format!("type:{}^{l}", t.label()),
            Observable::MixedSizeNbhd => "mixed".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSum {
    pub d: u32,
    pub k: u32,
    pub observable: Observable,
    /// Factor `P` in `N λ^k P(λ) (1+λ)^{-kd}`.
    pub poly: RatPoly,
}

impl ClusterSum {
    pub fn to_json(&self) -> serde_json::Value {
        let coeffs = self.poly.univariate_coeffs(Var::Lambda).unwrap_or_default();
        serde_json::json!({
            "d": self.d,
            "k": self.k,
            "observable": self.observable.tag(),
            "coefficients": coeffs.iter().map(crate::symbolic::rat_to_string).collect::<Vec<_>>(),
            "poly": self.poly.to_string(),
        })
    }

    /// `Σ_{‖Γ‖=k} w(Γ) f(Γ)` at a given fugacity.
    pub fn value(&self, lambda: &Rat) -> Result<Rat> {
        let p = self.poly.eval(&[(Var::Lambda, lambda.clone())])?;
        let n = rat_big(num_bigint::BigInt::from(1u8) << (self.d - 1) as usize);
        Ok(n * rat_pow(lambda, self.k as i64) * p * rat_pow(&(Rat::one() + lambda), -((self.k * self.d) as i64)))
    }
}

pub fn enumerate_clusters(d: Dim, max_total: u32) -> Result<ClusterSet> {
    ClusterSet::enumerate(d, max_total, ClusterOptions::default())
}

pub fn cluster_sum(d: Dim, k: u32, obs: &Observable) -> Result<ClusterSum> {
    let opts = ClusterOptions { keep_records: *obs != Observable::One, ..Default::default() };
    ClusterSet::enumerate(d, k, opts)?.cluster_sum(k, obs)
}

pub fn truncated_log_xi(d: Dim, lambda: &Rat, k: u32) -> Result<Rat> {
    if k == 0 {
        return Ok(Rat::zero());
    }
    let opts = ClusterOptions { keep_records: false, ..Default::default() };
    ClusterSet::enumerate(d, k, opts)?.truncated_log_xi(lambda, k)
}

pub fn expected_size_truncated(d: Dim, lambda: &Rat, k: u32) -> Result<Rat> {
    if k == 0 {
        return Ok(rat_big(num_bigint::BigInt::from(d.half())) * lambda / (Rat::one() + lambda));
    }
    let opts = ClusterOptions { keep_records: false, ..Default::default() };
    ClusterSet::enumerate(d, k, opts)?.expected_size_truncated(lambda, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::pairs;
    use proptest::prelude::*;

    fn dim(d: u32) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn ursell_examples() {
        assert_eq!(ursell(&SmallGraph::new(1).unwrap()).unwrap(), rat(1, 1));
        assert_eq!(ursell(&SmallGraph::from_edges(2, &[(0, 1)]).unwrap()).unwrap(), rat(-1, 2));
        let k3 = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(ursell(&k3).unwrap(), rat(1, 3));
        assert_eq!(ursell(&SmallGraph::new(2).unwrap()).unwrap(), rat(0, 1));
        // K_n gives (−1)^{n−1}/n
        for n in 1..=6usize {
            let g = SmallGraph::from_edges(n, &pairs(n)).unwrap();
            let sign = if n % 2 == 1 { 1 } else { -1 };
            assert_eq!(ursell(&g).unwrap(), rat(sign, n as i64));
        }
        let k7 = SmallGraph::from_edges(7, &pairs(7)).unwrap();
        assert!(ursell(&k7).unwrap_err().is_budget());
    }

    #[test]
    fn ursell_routes_agree_exhaustively() {
        for n in 1..=5usize {
            let m = n * (n - 1) / 2;
            for mask in 0u64..(1 << m) {
                let g = SmallGraph::from_edge_mask(n, mask).unwrap();
                assert_eq!(ursell(&g).unwrap(), ursell_recursive(&g).unwrap(), "n={n} mask={mask:b}");
            }
        }
    }

    proptest! {
        #[test]
        fn disconnected_graphs_vanish(mask in any::<u64>(), split in 1usize..6) {
            let n = 6;
            let mut g = SmallGraph::new(n).unwrap();
            for (i, (a, b)) in pairs(n).into_iter().enumerate() {
                if mask >> i & 1 == 1 && (a < split) == (b < split) {
                    g.add_edge(a, b);
                }
            }
            prop_assert_eq!(ursell(&g).unwrap(), rat(0, 1));
            prop_assert_eq!(ursell_recursive(&g).unwrap(), rat(0, 1));
        }
    }

    #[test]
    fn synthetic_universe_identity() {
        let universes: Vec<(usize, Vec<(usize, usize)>)> = vec![
            (1, vec![]),
            (2, vec![]),
            (2, vec![(0, 1)]),
            (3, vec![(0, 1), (1, 2)]),
            (3, vec![(0, 1), (1, 2), (0, 2)]),
            (4, vec![(0, 1), (2, 3)]),
        ];
        for (p, edges) in universes {
            let u = SyntheticUniverse::new(p, &edges).unwrap();
            assert_eq!(u.cluster_expansion(5).unwrap(), u.log_partition_taylor(5), "{edges:?}");
        }
    }

    #[test]
    fn orderings_multinomial() {
        assert_eq!(orderings(&[2]), 1);
        assert_eq!(orderings(&[1, 1]), 2);
        assert_eq!(orderings(&[2, 1, 1]), 12);
    }

    #[test]
    fn d3_small_clusters() {
        let set = enumerate_clusters(dim(3), 2).unwrap();
        let recs = set.records.as_ref().unwrap();
        let doubled = recs.iter().find(|r| r.polymers.len() == 1 && r.polymers[0].1 == 2).unwrap();
        assert_eq!(doubled.orderings, 1);
        assert_eq!(doubled.ursell, rat(-1, 2));
        assert_eq!(recs.iter().filter(|r| r.total_size == 1).count(), 1);
        assert!(recs.iter().all(|r| r.total_size <= 2));
        // every pair of distinct odd vertices of Q_3 is incompatible
        let pairs_of_singletons = recs.iter().filter(|r| r.polymers.len() == 2).count();
        assert_eq!(pairs_of_singletons, 3);
    }

    #[test]
    fn first_stratum_is_lambda() {
        for d in 3..=7 {
            let s = cluster_sum(dim(d), 1, &Observable::One).unwrap();
            assert_eq!(s.poly, RatPoly::one());
        }
        let s = cluster_sum(dim(3), 1, &Observable::Size(1)).unwrap();
        assert_eq!(s.poly, RatPoly::one());
        let l = rat(1, 3);
        assert_eq!(s.value(&l).unwrap(), rat(4, 1) * &l * rat_pow(&(rat(1, 1) + &l), -3));
    }

    #[test]
    fn second_stratum_matches_closed_form() {
        for d in 5..=8i64 {
            let s = cluster_sum(dim(d as u32), 2, &Observable::One).unwrap();
            let r2 = &RatPoly::var(Var::Lambda).pow(2) * &s.poly;
            let l = RatPoly::var(Var::Lambda);
            let expect = (&(&l.pow(3).scale(&rat(2, 1)) + &l.pow(4)).scale(&rat(d * (d - 1), 1)) - &l.pow(2).scale(&rat(2, 1)))
                .scale(&rat(1, 4));
            assert_eq!(r2, expect, "d={d}");
        }
    }

    #[test]
    fn degree_bound_in_lambda() {
        for k in 1..=3u32 {
            let s = cluster_sum(dim(2 * k + 2), k, &Observable::One).unwrap();
            assert!(s.poly.degree(Var::Lambda) + k <= 3 * k * k);
        }
    }

    #[test]
    fn truncation_against_exact_d3() {
        let l = rat(1, 100);
        let exact_xi = rat(1, 1) + rat(4, 1) * &l * rat_pow(&(rat(1, 1) + &l), -3);
        let set = ClusterSet::enumerate(dim(3), 5, ClusterOptions { keep_records: false, ..Default::default() }).unwrap();
        let exact = crate::symbolic::rat_to_f64(&exact_xi).ln();
        let approx = crate::symbolic::rat_to_f64(&set.truncated_log_xi(&l, 4).unwrap());
        let omitted = crate::symbolic::rat_to_f64(&set.stratum_value(5, &l)).abs();
        assert!((approx - exact).abs() < omitted, "{approx} {exact} {omitted}");
        assert_eq!(truncated_log_xi(dim(3), &l, 0).unwrap(), rat(0, 1));
    }

    #[test]
    fn expected_size_k1_closed_form() {
        let l = rat(1, 7);
        let one_plus = rat(1, 1) + &l;
        let got = expected_size_truncated(dim(3), &l, 1).unwrap();
        let w = rat(4, 1) * &l * rat_pow(&one_plus, -3);
        let expect = rat(4, 1) * &l / &one_plus + w * (rat(1, 1) - rat(3, 1) * &l / &one_plus);
        assert_eq!(got, expect);
        assert_eq!(expected_size_truncated(dim(3), &l, 0).unwrap(), rat(4, 1) * &l / &one_plus);
    }

    #[test]
    fn observables() {
        assert_eq!(Observable::parse("size^2").unwrap(), Observable::Size(2));
        assert_eq!(Observable::parse("one").unwrap(), Observable::One);
        assert!(matches!(Observable::parse("spin"), Err(Error::UnknownObservable(_))));
        let t = DefectType::singleton();
        let o = Observable::parse(&format!("type:{}^1", t.label())).unwrap();
        assert_eq!(o, Observable::TypeCount(t, 1));
        assert_eq!(Observable::parse(&o.tag()).unwrap(), o);
    }

    #[test]
    fn size_weighted_sum_is_derivative() {
        // Σ_k k·(stratum k) equals the size observable summed over strata
        let set = enumerate_clusters(dim(5), 3).unwrap();
        let l = rat(2, 5);
        for k in 1..=3 {
            let one = set.cluster_sum(k, &Observable::One).unwrap().value(&l).unwrap();
            let size = set.cluster_sum(k, &Observable::Size(1)).unwrap().value(&l).unwrap();
            assert_eq!(size, one * rat(k as i64, 1));
            let singles = set.cluster_sum(k, &Observable::TypeCount(DefectType::singleton(), 1)).unwrap();
            assert!(singles.value(&l).is_ok());
        }
    }
}
