//! Minority-side defects of an independent set and their types.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::chain::ChainState;
use crate::error::Result;
use crate::hypercube::{is_odd, neighborhood_unchecked, square_neighbors, Parity};
use crate::polymers::{classify, DefectType};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectReport {
    pub side: Parity,
    pub defects: BTreeMap<DefectType, u32>,
    /// `‖Γ‖`, the number of defect vertices.
    pub total_size: u64,
    /// `|N(Γ)|`; defects are pairwise at distance > 2 so this is additive.
    pub nbhd_total: u64,
}

impl DefectReport {
    pub fn count(&self, t: &DefectType) -> u32 {
        self.defects.get(t).copied().unwrap_or(0)
    }

    pub fn num_defects(&self) -> u32 {
        self.defects.values().sum()
    }
}

/// Defect side per the rule `|I∩O| ≤ |I∩E|` ⇒ odd.
pub fn defect_side(odd: u64, even: u64) -> Parity {
    if odd <= even {
        Parity::Odd
    } else {
        Parity::Even
    }
}

pub fn extract_defects(state: &ChainState) -> Result<DefectReport> {
    let d = state.d();
    let side = defect_side(state.odd(), state.even());
    let want_odd = side == Parity::Odd;
    let members: Vec<u64> = state.occupancy().iter().filter(|&v| is_odd(v) == want_odd).collect();
    report_from_members(&members, d, side, |v| state.is_occupied(v))
}

/// Components of `Q_d²` on `members`, found by search over occupied square-neighbours.
pub fn report_from_members(members: &[u64], d: u32, side: Parity, occupied: impl Fn(u64) -> bool) -> Result<DefectReport> {
    let mut seen = std::collections::HashSet::with_capacity(members.len());
    let mut defects: BTreeMap<DefectType, u32> = BTreeMap::new();
    let mut total_size = 0u64;
    let mut nbhd_total = 0u64;
    let mut comps: Vec<Vec<u64>> = Vec::new();
    for &v in members {
        if !seen.insert(v) {
            continue;
        }
        let mut comp = vec![v];
        let mut i = 0;
        while i < comp.len() {
            let u = comp[i];
            for w in square_neighbors(u, d) {
                if occupied(w) && seen.insert(w) {
                    comp.push(w);
                }
            }
            i += 1;
        }
        comp.sort_unstable();
        let t = classify(&comp, d)?;
        total_size += comp.len() as u64;
        nbhd_total += neighborhood_unchecked(&comp, d).len() as u64;
        *defects.entry(t).or_insert(0) += 1;
        comps.push(comp);
    }
    #[cfg(debug_assertions)]
    {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        let mut expect: Vec<Vec<u64>> = crate::hypercube::square_components_unchecked(&sorted)
            .into_iter()
            .map(|c| c.as_slice().to_vec())
            .collect();
        expect.sort();
        comps.sort();
        debug_assert_eq!(comps, expect, "defect components disagree with square_components");
    }
    Ok(DefectReport { side, defects, total_size, nbhd_total })
}
