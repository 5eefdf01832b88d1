//! Labelled graphs on at most eight vertices and their canonical certificates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_SMALL: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SmallGraph {
    n: usize,
    adj: [u8; MAX_SMALL],
}

impl SmallGraph {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_SMALL {
            return Err(Error::SizeCapExceeded(format!("graph on {n} vertices exceeds {MAX_SMALL}")));
        }
        Ok(SmallGraph { n, adj: [0; MAX_SMALL] })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SmallGraph::new(n)?;
        for &(a, b) in edges {
            g.add_edge(a, b);
        }
        Ok(g)
    }

    /// Graph with edge set given by the bits of `mask` over `pairs(n)`.
    pub fn from_edge_mask(n: usize, mask: u64) -> Result<Self> {
        let pairs = pairs(n);
        let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &p)| p).collect();
        SmallGraph::from_edges(n, &edges)
    }

    pub fn add_edge(&mut self, a: usize, b: usize) {
        assert!(a < self.n && b < self.n && a != b, "bad edge ({a},{b}) on {} vertices", self.n);
        self.adj[a] |= 1 << b;
        self.adj[b] |= 1 << a;
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a] >> b & 1 == 1
    }

    pub fn neighbors(&self, a: usize) -> u8 {
        self.adj[a]
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        pairs(self.n).into_iter().filter(|&(a, b)| self.has_edge(a, b)).collect()
    }

    pub fn num_edges(&self) -> usize {
        self.adj[..self.n].iter().map(|a| a.count_ones() as usize).sum::<usize>() / 2
    }

    /// Connectivity of the subgraph induced on `mask`.
    pub fn is_connected_on(&self, mask: u8) -> bool {
        if mask == 0 {
            return false;
        }
        let start = mask & mask.wrapping_neg();
        let mut seen = start;
        let mut frontier = start;
        while frontier != 0 {
            let mut next = 0u8;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.adj[v] & mask;
            }
            frontier = next & !seen;
            seen |= next;
        }
        seen == mask
    }

    pub fn is_connected(&self) -> bool {
        self.n == 0 || self.is_connected_on(full(self.n))
    }

    pub fn induced(&self, mask: u8) -> SmallGraph {
        let verts: Vec<usize> = (0..self.n).filter(|v| mask >> v & 1 == 1).collect();
        let mut g = SmallGraph { n: verts.len(), adj: [0; MAX_SMALL] };
        for (i, &a) in verts.iter().enumerate() {
            for (j, &b) in verts.iter().enumerate() {
                if self.has_edge(a, b) {
                    g.adj[i] |= 1 << j;
                }
            }
        }
        g
    }

    /// Upper-triangle adjacency bits in `pairs(n)` order.
    pub fn edge_mask(&self) -> u64 {
        pairs(self.n).iter().enumerate().filter(|(_, &(a, b))| self.has_edge(a, b)).fold(0, |m, (i, _)| m | 1 << i)
    }

    fn permuted_mask(&self, perm: &[usize]) -> u64 {
        let mut m = 0u64;
        let mut bit = 0;
        for a in 0..self.n {
            for b in (a + 1)..self.n {
                if self.has_edge(perm[a], perm[b]) {
                    m |= 1 << bit;
                }
                bit += 1;
            }
        }
        m
    }

    /// Maximum permuted edge mask over all relabellings, refined by degree
    /// sequence so only degree-respecting permutations are tried.
    pub fn certificate(&self) -> GraphCert {
        let n = self.n;
        let mut degs: Vec<(u32, usize)> = (0..n).map(|v| (self.adj[v].count_ones(), v)).collect();
        degs.sort_unstable_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        // vertices grouped into blocks of equal degree, higher degree first
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        for (deg, v) in degs.iter().copied() {
            match blocks.last_mut() {
                Some(b) if self.adj[b[0]].count_ones() == deg => b.push(v),
                _ => blocks.push(vec![v]),
            }
        }
        let mut best = 0u64;
        let mut perm: Vec<usize> = Vec::with_capacity(n);
        fn rec(g: &SmallGraph, blocks: &mut [Vec<usize>], bi: usize, perm: &mut Vec<usize>, best: &mut u64) {
            if bi == blocks.len() {
                let m = g.permuted_mask(perm);
                if m > *best {
                    *best = m;
                }
                return;
            }
            let len = blocks[bi].len();
            permute_block(g, blocks, bi, 0, len, perm, best);
        }
        fn permute_block(
            g: &SmallGraph,
            blocks: &mut [Vec<usize>],
            bi: usize,
            k: usize,
            len: usize,
            perm: &mut Vec<usize>,
            best: &mut u64,
        ) {
            if k == len {
                rec(g, blocks, bi + 1, perm, best);
                return;
            }
            for i in k..len {
                blocks[bi].swap(k, i);
                perm.push(blocks[bi][k]);
                permute_block(g, blocks, bi, k + 1, len, perm, best);
                perm.pop();
                blocks[bi].swap(k, i);
            }
        }
        rec(self, &mut blocks, 0, &mut perm, &mut best);
        GraphCert { n: n as u8, bits: best }
    }
}

fn full(n: usize) -> u8 {
    ((1u16 << n) - 1) as u8
}

/// Unordered vertex pairs `(a, b)`, `a < b`, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| ((a + 1)..n).map(move |b| (a, b))).collect()
}

/// Isomorphism-invariant label of a small graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GraphCert {
    pub n: u8,
    pub bits: u64,
}

impl GraphCert {
    /// Adjacency bitstring, upper triangle in row order.
    pub fn bitstring(&self) -> String {
        let m = (self.n as usize) * (self.n as usize).saturating_sub(1) / 2;
        (0..m).map(|i| if self.bits >> i & 1 == 1 { '1' } else { '0' }).collect()
    }

    pub fn graph(&self) -> SmallGraph {
        SmallGraph::from_edge_mask(self.n as usize, self.bits).expect("certificate order fits")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn path_and_star() {
        let p = SmallGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let q = SmallGraph::from_edges(3, &[(0, 2), (2, 1)]).unwrap();
        assert_eq!(p.certificate(), q.certificate());
        let k3 = SmallGraph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_ne!(p.certificate(), k3.certificate());
        assert!(p.is_connected());
        assert!(!SmallGraph::from_edges(3, &[(0, 1)]).unwrap().is_connected());
        assert_eq!(k3.certificate().bitstring(), "111");
    }

    #[test]
    fn too_big() {
        assert!(SmallGraph::new(9).is_err());
    }

    #[test]
    fn four_vertex_classes() {
        // 11 isomorphism classes of graphs on 4 vertices
        let certs: std::collections::BTreeSet<GraphCert> =
            (0..64u64).map(|m| SmallGraph::from_edge_mask(4, m).unwrap().certificate()).collect();
        assert_eq!(certs.len(), 11);
        let five: std::collections::BTreeSet<GraphCert> =
            (0..1024u64).map(|m| SmallGraph::from_edge_mask(5, m).unwrap().certificate()).collect();
        assert_eq!(five.len(), 34);
    }

    proptest! {
        #[test]
        fn relabelling_invariant(mask in 0u64..(1 << 21), seed in any::<u64>()) {
            let g = SmallGraph::from_edge_mask(7, mask).unwrap();
            let mut perm: Vec<usize> = (0..7).collect();
            let mut s = seed;
            for i in (1..7).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                perm.swap(i, (s >> 33) as usize % (i + 1));
            }
            let mut h = SmallGraph::new(7).unwrap();
            for (a, b) in g.edges() {
                h.add_edge(perm[a], perm[b]);
            }
            prop_assert_eq!(g.certificate(), h.certificate());
            prop_assert_eq!(g.certificate().graph().certificate(), g.certificate());
        }
    }
}
