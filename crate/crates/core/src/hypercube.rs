//! Bit-level representation of the hypercube `Q_d`, its bipartition, and the
//! square graph `Q_d²` restricted to one parity class.
//!
//! A vertex is a `d`-bit mask; coordinate `i` is bit `i`. Two vertices of the
//! same parity are adjacent in `Q_d²` iff their Hamming distance is exactly 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest dimension accepted by the formula evaluators.
pub const MAX_DIM: u32 = 63;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Dim(u32);

impl Dim {
    pub fn new(d: u32) -> Result<Dim> {
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidDimension(d, format!("expected 1..={MAX_DIM}")));
        }
        Ok(Dim(d))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// Number of vertices of each parity, `N = 2^{d-1}`.
    pub fn half(self) -> u64 {
        1u64 << (self.0 - 1)
    }

    pub fn num_vertices(self) -> u64 {
        1u64 << self.0
    }

    fn check(self, v: Vertex) -> Result<()> {
        if self.0 < 64 && v.0 >> self.0 != 0 {
            return Err(Error::InvalidParameter(format!("vertex {:#b} does not fit in d={}", v.0, self.0)));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Vertex(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Vertex {
    pub fn parity(self) -> Parity {
        if self.0.count_ones().is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }

    pub fn distance(self, other: Vertex) -> u32 {
        (self.0 ^ other.0).count_ones()
    }
}

#[inline]
pub fn hamming(a: u64, b: u64) -> u32 {
    (a ^ b).count_ones()
}

#[inline]
pub fn is_odd(v: u64) -> bool {
    v.count_ones() % 2 == 1
}

/// Sorted, duplicate-free set of vertices.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VertexSet(Vec<u64>);

impl VertexSet {
    pub fn new(mut members: Vec<u64>) -> Self {
        members.sort_unstable();
        members.dedup();
        VertexSet(members)
    }

    pub fn empty() -> Self {
        VertexSet(Vec::new())
    }

    pub fn as_slice(&self) -> &[u64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<u64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.0.binary_search(&v).is_ok()
    }

    pub fn is_subset(&self, other: &VertexSet) -> bool {
        self.0.iter().all(|&v| other.contains(v))
    }

    /// Common parity of all members; `None` for the empty set.
    pub fn parity(&self) -> Result<Option<Parity>> {
        let mut it = self.0.iter().map(|&v| Vertex(v).parity());
        let first = match it.next() {
            Some(p) => p,
            None => return Ok(None),
        };
        if it.any(|p| p != first) {
            return Err(Error::MixedParity);
        }
        Ok(Some(first))
    }

    pub fn translate(&self, x: u64) -> VertexSet {
        VertexSet::new(self.0.iter().map(|&v| v ^ x).collect())
    }
}

impl FromIterator<u64> for VertexSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        VertexSet::new(iter.into_iter().collect())
    }
}

fn check_set(s: &VertexSet, d: Dim) -> Result<()> {
    for &v in s.as_slice() {
        d.check(Vertex(v))?;
    }
    Ok(())
}

/// The `d` single-bit flips of `v`, ascending.
pub fn neighbors(v: Vertex, d: Dim) -> Result<VertexSet> {
    d.check(v)?;
    Ok(VertexSet::new((0..d.get()).map(|i| v.0 ^ (1u64 << i)).collect()))
}

/// `N(S)`; the input must lie in one parity class.
pub fn neighborhood(s: &VertexSet, d: Dim) -> Result<VertexSet> {
    check_set(s, d)?;
    s.parity()?;
    Ok(neighborhood_unchecked(s.as_slice(), d.get()))
}

pub(crate) fn neighborhood_unchecked(s: &[u64], d: u32) -> VertexSet {
    let mut out = Vec::with_capacity(s.len() * d as usize);
    for &v in s {
        for i in 0..d {
            out.push(v ^ (1u64 << i));
        }
    }
    VertexSet::new(out)
}


/// Same-parity vertices at Hamming distance exactly 2 from `v`.
pub(crate) fn square_neighbors(v: u64, d: u32) -> impl Iterator<Item = u64> {
    (0..d).flat_map(move |i| ((i + 1)..d).map(move |j| v ^ (1u64 << i) ^ (1u64 << j)))
}

/// Bipartite closure `[S] = {v : N(v) ⊆ N(S)}` within the parity class of `S`.
pub fn closure(s: &VertexSet, d: Dim) -> Result<VertexSet> {
    check_set(s, d)?;
    s.parity()?;
    Ok(closure_unchecked(s.as_slice(), d.get()))
}

pub(crate) fn closure_unchecked(s: &[u64], d: u32) -> VertexSet {
    if s.is_empty() {
        return VertexSet::empty();
    }
    // A vertex outside S shares exactly two neighbours with each member at distance 2,
    // so it can only be covered when 2|S| ≥ d.
    if 2 * s.len() < d as usize {
        return VertexSet::new(s.to_vec());
    }
    let nbhd = neighborhood_unchecked(s, d);
    let mut out: Vec<u64> = s.to_vec();
    let mut candidates: Vec<u64> = s.iter().flat_map(|&v| square_neighbors(v, d)).collect();
    candidates.sort_unstable();
    candidates.dedup();
    for c in candidates {
        if out.contains(&c) {
            continue;
        }
        if (0..d).all(|i| nbhd.contains(c ^ (1u64 << i))) {
            out.push(c);
        }
    }
    VertexSet::new(out)
}

/// Connected components of `Q_d²[S]`, each sorted, ordered by smallest member.
pub fn square_components(s: &VertexSet, d: Dim) -> Result<Vec<VertexSet>> {
    check_set(s, d)?;
    s.parity()?;
    Ok(square_components_unchecked(s.as_slice()))
}

pub(crate) fn square_components_unchecked(s: &[u64]) -> Vec<VertexSet> {
    let n = s.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if hamming(s[i], s[j]) == 2 {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<u64>> = std::collections::BTreeMap::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(s[i]);
    }
    let mut comps: Vec<VertexSet> = groups.into_values().map(VertexSet::new).collect();
    comps.sort();
    comps
}

/// Whether `S` is connected in `Q_d²`.
pub(crate) fn is_square_connected(s: &[u64]) -> bool {
    s.len() <= 1 || square_components_unchecked(s).len() == 1
}

/// Fixed-size bitset over all `2^d` vertices, for `d ≤ 24`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CubeBitset {
    words: Vec<u64>,
}

impl CubeBitset {
    pub const MAX_DIM: u32 = 24;

    pub fn new(d: Dim) -> Result<Self> {
        if d.get() > Self::MAX_DIM {
            return Err(Error::InvalidDimension(d.get(), "bitset supports d ≤ 24".into()));
        }
        Ok(CubeBitset { words: vec![0; (d.num_vertices() as usize).div_ceil(64)] })
    }

    #[inline]
    pub fn get(&self, v: u64) -> bool {
        self.words[(v >> 6) as usize] >> (v & 63) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: u64, on: bool) {
        let w = &mut self.words[(v >> 6) as usize];
        if on {
            *w |= 1 << (v & 63);
        } else {
            *w &= !(1 << (v & 63));
        }
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as u64;
                w &= w - 1;
                Some((i as u64) * 64 + b)
            })
        })
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dim(d: u32) -> Dim {
        Dim::new(d).unwrap()
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(neighbors(Vertex(0b000), dim(3)).unwrap().as_slice(), &[0b001, 0b010, 0b100]);
        assert_eq!(neighbors(Vertex(0b111), dim(3)).unwrap().as_slice(), &[0b011, 0b101, 0b110]);
        assert_eq!(neighbors(Vertex(0), dim(1)).unwrap().as_slice(), &[1]);
        assert!(neighbors(Vertex(0b1000), dim(3)).is_err());
        assert!(Dim::new(0).is_err());
        assert_eq!(dim(5).half(), 16);
    }

    #[test]
    fn neighborhood_examples() {
        assert_eq!(neighborhood(&VertexSet::new(vec![0b0001]), dim(4)).unwrap().len(), 4);
        let pair = VertexSet::new(vec![0b001, 0b111]);
        assert_eq!(neighborhood(&pair, dim(3)).unwrap().len(), 4);
        for d in 3..=8 {
            let pair = VertexSet::new(vec![0b1, 0b111]);
            assert_eq!(neighborhood(&pair, dim(d)).unwrap().len(), 2 * d as usize - 2);
        }
        let mixed = VertexSet::new(vec![0b1, 0b11]);
        assert_eq!(neighborhood(&mixed, dim(3)), Err(Error::MixedParity));
    }

    #[test]
    fn closure_examples() {
        let single = VertexSet::new(vec![0b001]);
        assert_eq!(closure(&single, dim(3)).unwrap(), single);
        let pair = VertexSet::new(vec![0b001, 0b111]);
        assert_eq!(closure(&pair, dim(3)).unwrap().as_slice(), &[0b001, 0b010, 0b100, 0b111]);
        assert!(closure(&VertexSet::empty(), dim(5)).unwrap().is_empty());
    }

    #[test]
    fn square_component_examples() {
        let v = 0b0001u64;
        assert_eq!(square_components(&VertexSet::new(vec![v]), dim(4)).unwrap().len(), 1);
        let pair = VertexSet::new(vec![v, v ^ 0b0110]);
        assert_eq!(square_components(&pair, dim(4)).unwrap(), vec![pair.clone()]);
        let antipodal = VertexSet::new(vec![v, v ^ 0b1111]);
        assert_eq!(square_components(&antipodal, dim(4)).unwrap().len(), 2);
    }

    #[test]
    fn bitset_roundtrip() {
        let mut b = CubeBitset::new(dim(7)).unwrap();
        for v in [0u64, 5, 63, 64, 127] {
            b.set(v, true);
        }
        assert_eq!(b.count(), 5);
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![0, 5, 63, 64, 127]);
        b.set(63, false);
        assert!(!b.get(63));
    }

    fn odd_set(d: u32) -> impl Strategy<Value = VertexSet> {
        proptest::collection::vec(0u64..(1u64 << d), 1..6).prop_map(|vs| {
            vs.into_iter().map(|v| if is_odd(v) { v } else { v ^ 1 }).collect::<VertexSet>()
        })
    }

    // Direct definition: v ∈ [S] iff N(v) ⊆ N(S), scanning every odd vertex.
    fn closure_brute(s: &VertexSet, d: u32) -> VertexSet {
        let n = neighborhood_unchecked(s.as_slice(), d);
        (0..(1u64 << d))
            .filter(|&v| is_odd(v) && (0..d).all(|i| n.contains(v ^ (1 << i))))
            .collect()
    }

    proptest! {
        #[test]
        fn neighbor_degree_and_parity(d in 1u32..12, v in any::<u64>()) {
            let v = v & ((1u64 << d) - 1);
            let ns = neighbors(Vertex(v), dim(d)).unwrap();
            prop_assert_eq!(ns.len(), d as usize);
            for &u in ns.as_slice() {
                prop_assert_ne!(Vertex(u).parity(), Vertex(v).parity());
            }
        }

        #[test]
        fn closure_axioms(s in odd_set(6), t in odd_set(6)) {
            let d = dim(6);
            let cs = closure(&s, d).unwrap();
            prop_assert!(s.is_subset(&cs));
            prop_assert_eq!(closure(&cs, d).unwrap(), cs.clone());
            prop_assert_eq!(neighborhood(&cs, d).unwrap(), neighborhood(&s, d).unwrap());
            prop_assert_eq!(cs.clone(), closure_brute(&s, 6));
            let union: VertexSet = s.as_slice().iter().chain(t.as_slice()).copied().collect();
            prop_assert!(cs.is_subset(&closure(&union, d).unwrap()));
            prop_assert!(neighborhood(&s, d).unwrap().is_subset(&neighborhood(&union, d).unwrap()));
        }

        #[test]
        fn components_partition(s in odd_set(7)) {
            let comps = square_components(&s, dim(7)).unwrap();
            let total: usize = comps.iter().map(|c| c.len()).sum();
            prop_assert_eq!(total, s.len());
            for (i, a) in comps.iter().enumerate() {
                prop_assert!(is_square_connected(a.as_slice()));
                for b in comps.iter().skip(i + 1) {
                    for &x in a.as_slice() {
                        for &y in b.as_slice() {
                            prop_assert_ne!(hamming(x, y), 2);
                        }
                    }
                }
            }
        }
    }
}
