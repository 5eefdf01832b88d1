//! Odd polymers: enumeration, defect types and per-type censuses.
//!
//! Enumeration is rooted at the odd vertex `v₀ = e₀`. Even translations act
//! transitively on the odd side and preserve polymer shape, so a type's global
//! count is `N · Σ_{S ∋ v₀} 1/|S|` over rooted members. This holds even when a
//! support is fixed by some translation (a distance-2 pair is fixed by the
//! translation swapping its two vertices).

use std::collections::{BTreeMap, HashMap, HashSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphCert, SmallGraph, MAX_SMALL};
use crate::hypercube::{closure_unchecked, hamming, neighborhood_unchecked, square_neighbors, Dim, VertexSet};
use crate::symbolic::{interpolate_poly, Rat, RatPoly, Var};

/// The rooting vertex.
pub const ROOT: u64 = 1;

/// Default cap on rooted search nodes.
pub const DEFAULT_NODE_BUDGET: u64 = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Polymer {
    pub support: VertexSet,
    pub nbhd_size: usize,
    pub closure_size: usize,
}

impl Polymer {
    pub fn size(&self) -> usize {
        self.support.len()
    }

    /// Shape graph `Q_d²[S]`.
    pub fn square_graph(&self) -> Result<SmallGraph> {
        square_graph(self.support.as_slice())
    }

    pub fn defect_type(&self, d: u32) -> Result<DefectType> {
        classify(self.support.as_slice(), d)
    }
}

pub(crate) fn square_graph(s: &[u64]) -> Result<SmallGraph> {
    let mut g = SmallGraph::new(s.len())?;
    for i in 0..s.len() {
        for j in (i + 1)..s.len() {
            if hamming(s[i], s[j]) == 2 {
                g.add_edge(i, j);
            }
        }
    }
    Ok(g)
}

/// Isomorphism class of `Q_d²[S]`, refined by the deficiency `d|S| − |N(S)|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DefectType {
    pub size: usize,
    pub deficiency: usize,
    /// `None` when the support is too large for exhaustive canonisation.
    pub cert: Option<GraphCert>,
}

impl DefectType {
    pub fn singleton() -> Self {
        DefectType { size: 1, deficiency: 0, cert: Some(GraphCert { n: 1, bits: 0 }) }
    }

    /// `|N(S)|` for members of this type in dimension `d`.
    pub fn nbhd_size(&self, d: u32) -> usize {
        d as usize * self.size - self.deficiency
    }

    pub fn label(&self) -> String {
        match self.cert {
            Some(c) => format!("s{}c{}g{}", self.size, self.deficiency, c.bitstring()),
            None => format!("s{}c{}g?", self.size, self.deficiency),
        }
    }

    pub fn parse_label(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("bad defect type label {s:?}"));
        let rest = s.strip_prefix('s').ok_or_else(bad)?;
        let (size, rest) = rest.split_once('c').ok_or_else(bad)?;
        let (def, graph) = rest.split_once('g').ok_or_else(bad)?;
        let size: usize = size.parse().map_err(|_| bad())?;
        let deficiency: usize = def.parse().map_err(|_| bad())?;
        let cert = if graph == "?" {
            None
        } else {
            if graph.len() != size * size.saturating_sub(1) / 2 || !graph.chars().all(|c| c == '0' || c == '1') {
                return Err(bad());
            }
            let bits = graph.chars().enumerate().filter(|(_, c)| *c == '1').fold(0u64, |m, (i, _)| m | 1 << i);
            Some(GraphCert { n: size as u8, bits })
        };
        Ok(DefectType { size, deficiency, cert })
    }
}

pub fn classify(s: &[u64], d: u32) -> Result<DefectType> {
    let nb = neighborhood_unchecked(s, d).len();
    let cert = if s.len() <= MAX_SMALL { Some(square_graph(s)?.certificate()) } else { None };
    Ok(DefectType { size: s.len(), deficiency: d as usize * s.len() - nb, cert })
}

/// Calls `visit` on every `Q_d²`-connected set containing `root` with at most
/// `max_size` vertices, each exactly once.
pub(crate) fn for_each_connected_rooted(
    root: u64,
    d: u32,
    max_size: usize,
    budget: u64,
    mut visit: impl FnMut(&[u64]),
) -> Result<u64> {
    let mut nodes = 0u64;
    let mut set = vec![root];
    let mut blocked: HashSet<u64> = HashSet::new();
    blocked.insert(root);
    let ext: Vec<u64> = square_neighbors(root, d).collect();
    for &u in &ext {
        blocked.insert(u);
    }
    fn rec(
        set: &mut Vec<u64>,
        ext: Vec<u64>,
        blocked: &mut HashSet<u64>,
        d: u32,
        max_size: usize,
        budget: u64,
        nodes: &mut u64,
        visit: &mut dyn FnMut(&[u64]),
    ) -> Result<()> {
        *nodes += 1;
        if *nodes > budget {
            return Err(Error::BudgetExceeded(format!("rooted polymer search exceeded {budget} nodes")));
        }
        visit(set);
        if set.len() == max_size {
            return Ok(());
        }
        for (i, &w) in ext.iter().enumerate() {
            let mut next: Vec<u64> = ext[i + 1..].to_vec();
            let mut added = Vec::new();
            for u in square_neighbors(w, d) {
                if blocked.insert(u) {
                    added.push(u);
                    next.push(u);
                }
            }
            set.push(w);
            rec(set, next, blocked, d, max_size, budget, nodes, visit)?;
            set.pop();
            for u in added {
                blocked.remove(&u);
            }
        }
        Ok(())
    }
    if max_size > 0 {
        rec(&mut set, ext, &mut blocked, d, max_size, budget, &mut nodes, &mut visit)?;
    }
    Ok(nodes)
}

fn check_polymer_dim(d: Dim) -> Result<u32> {
    if d.get() < 2 {
        return Err(Error::InvalidDimension(d.get(), "polymers need d ≥ 2".into()));
    }
    if d.get() > 40 {
        return Err(Error::InvalidDimension(d.get(), "polymer enumeration supports d ≤ 40".into()));
    }
    Ok(d.get())
}

fn make_polymer(s: &[u64], d: u32, half: u64) -> Option<Polymer> {
    let cl = closure_unchecked(s, d).len();
    if cl as u64 > half / 2 {
        return None;
    }
    Some(Polymer { support: VertexSet::new(s.to_vec()), nbhd_size: neighborhood_unchecked(s, d).len(), closure_size: cl })
}

/// All polymers containing the root vertex, sorted.
pub fn rooted_polymers(d: Dim, max_size: usize, budget: u64) -> Result<Vec<Polymer>> {
    let n = check_polymer_dim(d)?;
    let half = d.half();
    let mut out = Vec::new();
    for_each_connected_rooted(ROOT, n, max_size, budget, |s| {
        if let Some(p) = make_polymer(s, n, half) {
            out.push(p);
        }
    })?;
    out.sort();
    Ok(out)
}

/// Every odd polymer with at most `max_size` vertices, each once, sorted.
pub fn enumerate_polymers(d: Dim, max_size: usize) -> Result<Vec<Polymer>> {
    enumerate_polymers_with(d, max_size, DEFAULT_NODE_BUDGET)
}

pub fn enumerate_polymers_with(d: Dim, max_size: usize, budget: u64) -> Result<Vec<Polymer>> {
    let n = check_polymer_dim(d)?;
    let rooted = rooted_polymers(d, max_size, budget)?;
    let total = rooted.len() as u64 * d.half();
    if total > budget {
        return Err(Error::BudgetExceeded(format!("{total} translated polymers exceed budget {budget}")));
    }
    let odd: Vec<u64> = (0..(1u64 << n)).filter(|v| v.count_ones() % 2 == 1).collect();
    let mut out: Vec<Polymer> = rooted
        .par_iter()
        .flat_map_iter(|p| {
            odd.iter().filter_map(move |&u| {
                let t = p.support.translate(u ^ ROOT);
                (t.as_slice()[0] == u).then_some(Polymer { support: t, nbhd_size: p.nbhd_size, closure_size: p.closure_size })
            })
        })
        .collect();
    out.sort();
    Ok(out)
}

/// Exact count of a type in dimension `d` together with its weight exponents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    #[serde(with = "crate::serde_dec::biguint")]
    pub count: BigUint,
    pub size: usize,
    pub nbhd_size: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Census {
    pub d: u32,
    pub max_size: usize,
    pub entries: BTreeMap<DefectType, CensusEntry>,
    /// Isomorphism classes of `Q_d²[S]` that occur with more than one deficiency.
    pub split_classes: Vec<GraphCert>,
}

impl Census {
    pub fn total_by_size(&self, size: usize) -> BigUint {
        self.entries.values().filter(|e| e.size == size).map(|e| e.count.clone()).sum()
    }

    pub fn get(&self, t: &DefectType) -> Option<&CensusEntry> {
        self.entries.get(t)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let types: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(t, e)| {
                serde_json::json!({
                    "type": t.label(),
                    "certificate": t.cert.map(|c| c.bitstring()),
                    "size": t.size,
                    "deficiency": t.deficiency,
                    "nbhd_size": e.nbhd_size,
                    "count": e.count.to_string(),
                })
            })
            .collect();
        serde_json::json!({
            "d": self.d,
            "max_size": self.max_size,
            "types": types,
            "split_classes": self.split_classes.iter().map(|c| c.bitstring()).collect::<Vec<_>>(),
        })
    }
}

/// Per-type `Σ_{S ∋ v₀} 1/|S|` numerators: number of rooted members.
fn rooted_type_counts(d: Dim, max_size: usize, budget: u64) -> Result<BTreeMap<DefectType, u64>> {
    let n = check_polymer_dim(d)?;
    let half = d.half();
    let mut cert_cache: HashMap<u64, GraphCert> = HashMap::new();
    let mut counts: BTreeMap<DefectType, u64> = BTreeMap::new();
    let mut err = None;
    for_each_connected_rooted(ROOT, n, max_size, budget, |s| {
        if err.is_some() {
            return;
        }
        if 2 * s.len() >= n as usize && closure_unchecked(s, n).len() as u64 > half / 2 {
            return;
        }
        let g = match square_graph(s) {
            Ok(g) => g,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let key = g.edge_mask() | (s.len() as u64) << 58;
        let cert = *cert_cache.entry(key).or_insert_with(|| g.certificate());
        let nb = neighborhood_unchecked(s, n).len();
        let t = DefectType { size: s.len(), deficiency: n as usize * s.len() - nb, cert: Some(cert) };
        *counts.entry(t).or_insert(0) += 1;
    })?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(counts)
}

pub fn census(d: Dim, max_size: usize) -> Result<Census> {
    census_with(d, max_size, DEFAULT_NODE_BUDGET)
}

pub fn census_with(d: Dim, max_size: usize, budget: u64) -> Result<Census> {
    if max_size > MAX_SMALL {
        return Err(Error::SizeCapExceeded(format!("census supports polymer size ≤ {MAX_SMALL}")));
    }
    let rooted = rooted_type_counts(d, max_size, budget)?;
    let half = BigUint::from(d.half());
    let mut entries = BTreeMap::new();
    let mut seen: BTreeMap<GraphCert, Vec<usize>> = BTreeMap::new();
    for (t, r) in rooted {
        let (q, rem) = (BigUint::from(r) * &half).div_rem(&BigUint::from(t.size));
        if !rem.is_zero() {
            return Err(Error::InvalidParameter(format!("rooted count of {} not divisible by its size", t.label())));
        }
        seen.entry(t.cert.expect("small types carry certificates")).or_default().push(t.deficiency);
        entries.insert(t, CensusEntry { count: q, size: t.size, nbhd_size: t.nbhd_size(d.get()) });
    }
    let split_classes = seen.into_iter().filter(|(_, v)| v.len() > 1).map(|(c, _)| c).collect();
    Ok(Census { d: d.get(), max_size, entries, split_classes })
}

/// Per-type counts as polynomials in `d`, normalised by `N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolicCensus {
    pub max_size: usize,
    pub grid: Vec<u32>,
    pub entries: BTreeMap<DefectType, RatPoly>,
}

impl SymbolicCensus {
    /// `n_T(d)` for every type, evaluated exactly.
    pub fn evaluate(&self, d: u32) -> BTreeMap<DefectType, Rat> {
        let half = Rat::from_integer(num_bigint::BigInt::from(1u8) << (d - 1) as usize);
        self.entries
            .iter()
            .map(|(t, p)| (*t, p.eval_var(Var::D, &Rat::from_integer(d.into())).constant_term() * &half))
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let types: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(t, p)| serde_json::json!({"type": t.label(), "size": t.size, "deficiency": t.deficiency, "count_over_N": p.to_string(), "poly": p.to_json()}))
            .collect();
        serde_json::json!({"max_size": self.max_size, "grid": self.grid, "types": types})
    }
}

/// Interpolates fixed-`d` censuses over `d = 2s+1 ..= 4s` with one check point.
pub fn symbolic_census(max_size: usize) -> Result<SymbolicCensus> {
    symbolic_census_with(max_size, DEFAULT_NODE_BUDGET)
}

pub fn symbolic_census_with(max_size: usize, budget: u64) -> Result<SymbolicCensus> {
    if max_size == 0 || max_size > 5 {
        return Err(Error::InvalidParameter("symbolic census supports 1 ≤ max_size ≤ 5".into()));
    }
    let bound = 2 * (max_size - 1);
    let start = 2 * max_size as u32 + 1;
    let grid: Vec<u32> = (start..start + bound as u32 + 2).collect();
    let censuses: Vec<Census> =
        grid.par_iter().map(|&d| census_with(Dim::new(d)?, max_size, budget)).collect::<Result<Vec<_>>>()?;
    let mut types: Vec<DefectType> = censuses.iter().flat_map(|c| c.entries.keys().copied()).collect();
    types.sort();
    types.dedup();
    let mut entries = BTreeMap::new();
    for t in types {
        let samples: Vec<(i64, RatPoly)> = grid
            .iter()
            .zip(&censuses)
            .map(|(&d, c)| {
                let count = c.get(&t).map(|e| e.count.clone()).unwrap_or_default();
                let r = Rat::new(count.into(), (num_bigint::BigInt::from(1u8)) << (d - 1) as usize);
                (d as i64, RatPoly::constant(r))
            })
            .collect();
        let p = interpolate_poly(&samples, bound, Var::D)
            .map_err(|e| Error::InterpolationCheckFailed(format!("type {}: {e}", t.label())))?;
        entries.insert(t, p);
    }
    Ok(SymbolicCensus { max_size, grid, entries })
}

/// Number of polymers of each size in a list, as machine integers.
pub fn size_histogram(polymers: &[Polymer]) -> BTreeMap<usize, u64> {
    let mut h = BTreeMap::new();
    for p in polymers {
        *h.entry(p.size()).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{is_odd, is_square_connected};

    fn dim(d: u32) -> Dim {
        Dim::new(d).unwrap()
    }

    // Independent oracle: grow connected sets by breadth-first extension with
    // a global seen-set of sorted supports.
    fn connected_sets_brute(root: u64, d: u32, max_size: usize) -> BTreeMap<usize, HashSet<Vec<u64>>> {
        let mut levels: BTreeMap<usize, HashSet<Vec<u64>>> = BTreeMap::new();
        levels.entry(1).or_default().insert(vec![root]);
        for k in 1..max_size {
            let cur: Vec<Vec<u64>> = levels[&k].iter().cloned().collect();
            let mut next = HashSet::new();
            for s in cur {
                for &v in &s {
                    for u in square_neighbors(v, d) {
                        if !s.contains(&u) {
                            let mut t = s.clone();
                            t.push(u);
                            t.sort_unstable();
                            next.insert(t);
                        }
                    }
                }
            }
            levels.insert(k + 1, next);
        }
        levels
    }

    #[test]
    fn rooted_search_matches_brute_force() {
        for (d, k) in [(3, 4), (4, 4), (5, 3), (6, 3)] {
            let brute = connected_sets_brute(ROOT, d, k);
            let mut got: BTreeMap<usize, HashSet<Vec<u64>>> = BTreeMap::new();
            for_each_connected_rooted(ROOT, d, k, u64::MAX, |s| {
                let mut v = s.to_vec();
                v.sort_unstable();
                assert!(got.entry(v.len()).or_default().insert(v), "duplicate");
            })
            .unwrap();
            assert_eq!(got, brute, "d={d} k={k}");
        }
    }

    #[test]
    fn d3_only_singletons() {
        let p = enumerate_polymers(dim(3), 2).unwrap();
        assert_eq!(p.len(), 4);
        assert!(p.iter().all(|x| x.size() == 1));
        assert_eq!(enumerate_polymers(dim(3), 3).unwrap().len(), 4);
    }

    #[test]
    fn d4_counts() {
        let p = enumerate_polymers(dim(4), 1).unwrap();
        assert_eq!(p.len(), 8);
        assert!(p.iter().all(|x| x.nbhd_size == 4));
        let p2 = enumerate_polymers(dim(4), 2).unwrap();
        let pairs: Vec<&Polymer> = p2.iter().filter(|x| x.size() == 2).collect();
        // 8·C(4,2)/2 distance-2 pairs, each with closure of size 2 ≤ N/2 = 4
        assert_eq!(pairs.len(), 24);
        assert!(pairs.iter().all(|x| x.nbhd_size == 6 && x.closure_size == 2));
    }

    #[test]
    fn enumerated_polymers_are_valid() {
        for d in 3..=6 {
            let half = 1usize << (d - 1);
            let ps = enumerate_polymers(dim(d), 3).unwrap();
            let mut seen = HashSet::new();
            for p in &ps {
                let s = p.support.as_slice();
                assert!(s.iter().all(|&v| is_odd(v)));
                assert!(is_square_connected(s));
                assert!(closure_unchecked(s, d).len() * 2 <= half);
                assert!(seen.insert(p.support.clone()));
            }
            let c = census(dim(d), 3).unwrap();
            for (size, n) in size_histogram(&ps) {
                assert_eq!(c.total_by_size(size), BigUint::from(n));
            }
        }
    }

    #[test]
    fn census_examples() {
        let c = census(dim(4), 1).unwrap();
        assert_eq!(c.entries.len(), 1);
        let e = &c.entries[&DefectType::singleton()];
        assert_eq!((e.count.clone(), e.nbhd_size), (BigUint::from(8u32), 4));
        let c3 = census(dim(3), 3).unwrap();
        assert_eq!(c3.entries.len(), 1);
        let c6 = census(dim(6), 2).unwrap();
        let pair = c6.entries.iter().find(|(t, _)| t.size == 2).unwrap();
        assert_eq!(pair.1.count, BigUint::from(240u32));
        assert_eq!(pair.1.nbhd_size, 10);
        assert_eq!(c6.total_by_size(1), BigUint::from(32u32));
    }

    #[test]
    fn symbolic_census_small() {
        let sc = symbolic_census(2).unwrap();
        assert_eq!(sc.grid, vec![5, 6, 7, 8]);
        let single = &sc.entries[&DefectType::singleton()];
        assert_eq!(single, &RatPoly::one());
        let (_, pair) = sc.entries.iter().find(|(t, _)| t.size == 2).unwrap();
        let dd = RatPoly::var(Var::D);
        assert_eq!(pair, &(&(&dd * &dd) - &dd).scale(&Rat::new(1.into(), 4.into())));
        for d in 5..=9 {
            let fixed = census(dim(d), 2).unwrap();
            for (t, v) in sc.evaluate(d) {
                let c = fixed.get(&t).map(|e| e.count.clone()).unwrap_or_default();
                assert_eq!(v, Rat::from_integer(c.into()));
            }
        }
    }

    #[test]
    fn symbolic_census_size3_degrees() {
        let sc = symbolic_census(3).unwrap();
        for (t, p) in &sc.entries {
            if t.size == 3 {
                assert!(p.degree(Var::D) <= 4, "{} has degree {}", t.label(), p.degree(Var::D));
            }
        }
    }

    #[test]
    fn label_roundtrip() {
        let c = census(dim(7), 3).unwrap();
        assert!(c.split_classes.is_empty());
        for t in c.entries.keys() {
            assert_eq!(&DefectType::parse_label(&t.label()).unwrap(), t);
        }
        assert!(DefectType::parse_label("s2c1g").is_err());
    }

    #[test]
    fn budget_is_enforced() {
        let e = rooted_polymers(dim(10), 4, 100).unwrap_err();
        assert!(e.is_budget());
    }
}
