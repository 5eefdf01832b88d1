//! The polynomials `R_j(λ, d)` from exact cluster strata, interpolated over `d`.

use std::collections::BTreeMap;
use std::sync::Mutex;

use serde_json::json;

use crate::clusters::{ClusterOptions, ClusterSet, Observable};
use crate::error::{Error, Result};
use crate::hypercube::Dim;
use crate::symbolic::{interpolate_poly, rat_pow, Rat, RatPoly, Var};

/// Largest `j` computed without the best-effort flag.
pub const GUARANTEED_J: u32 = 3;
/// Hard ceiling imposed by the cluster enumerator's size cap.
pub const MAX_J: u32 = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct RTable {
    pub polys: BTreeMap<u32, RatPoly>,
    /// Dimensions whose strata were interpolated.
    pub grid: Vec<u32>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ROptions {
    pub best_effort: bool,
    /// Per-level cluster budget handed to the enumerator.
    pub budget: u64,
}

impl Default for ROptions {
    fn default() -> Self {
        ROptions { best_effort: false, budget: ClusterOptions::default().budget }
    }
}

fn grid_for(j_max: u32) -> Vec<u32> {
    ((2 * j_max + 1)..=(4 * j_max + 2)).collect()
}

impl RTable {
    pub fn compute(j_max: u32, opts: ROptions) -> Result<RTable> {
        check_range(j_max, opts)?;
        if j_max == 0 {
            return Ok(RTable { polys: BTreeMap::new(), grid: Vec::new() });
        }
        let grid = grid_for(j_max);
        let copts = ClusterOptions { budget: opts.budget, keep_records: false };
        let mut samples: Vec<Vec<(i64, RatPoly)>> = vec![Vec::new(); j_max as usize + 1];
        for &d in &grid {
            let set = ClusterSet::enumerate(Dim::new(d)?, j_max, copts)?;
            for j in 1..=j_max {
                let s = set.cluster_sum(j, &Observable::One)?;
                let r = &RatPoly::var(Var::Lambda).pow(j) * &s.poly;
                samples[j as usize].push((d as i64, r));
            }
        }
        let mut polys = BTreeMap::new();
        for j in 1..=j_max {
            let p = interpolate_poly(&samples[j as usize], 2 * j as usize, Var::D)?;
            let lam_deg = p.degree(Var::Lambda);
            if lam_deg > 3 * j * j {
                return Err(Error::InterpolationCheckFailed(format!("R_{j} has λ-degree {lam_deg} > {}", 3 * j * j)));
            }
            polys.insert(j, p);
        }
        Ok(RTable { polys, grid })
    }

    pub fn max_j(&self) -> u32 {
        self.polys.keys().next_back().copied().unwrap_or(0)
    }

    pub fn get(&self, j: u32) -> Result<&RatPoly> {
        self.polys
            .get(&j)
            .ok_or_else(|| Error::BudgetExceeded(format!("R_{j} not computed (table holds j ≤ {})", self.max_j())))
    }

    /// `R_j(λ, d)`.
    pub fn eval(&self, j: u32, lambda: &Rat, d: u32) -> Result<Rat> {
        self.get(j)?.eval(&[(Var::Lambda, lambda.clone()), (Var::D, Rat::from_integer(d.into()))])
    }

    /// `Σ_{j ≤ upto} R_j(λ, d) (1+λ)^{-jd}`.
    pub fn correction(&self, lambda: &Rat, d: u32, upto: u32) -> Result<Rat> {
        let one_plus = Rat::from_integer(1.into()) + lambda;
        let mut s = Rat::from_integer(0.into());
        for j in 1..=upto {
            s += self.eval(j, lambda, d)? * rat_pow(&one_plus, -((j * d) as i64));
        }
        Ok(s)
    }

    fn truncated_to(&self, j_max: u32) -> RTable {
        RTable { polys: self.polys.range(..=j_max).map(|(k, v)| (*k, v.clone())).collect(), grid: self.grid.clone() }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "grid": self.grid,
            "table": self.polys.iter().map(|(j, p)| json!({
                "j": j,
                "poly": p.to_string(),
                "terms": p.to_json(),
                "deg_d": p.degree(Var::D),
                "deg_lambda": p.degree(Var::Lambda),
            })).collect::<Vec<_>>(),
        })
    }
}

fn check_range(j_max: u32, opts: ROptions) -> Result<()> {
    if j_max > MAX_J {
        return Err(Error::SizeCapExceeded(format!("R_{j_max} beyond the enumerator cap {MAX_J}")));
    }
    if j_max > GUARANTEED_J && !opts.best_effort {
        return Err(Error::BudgetExceeded(format!("R_{j_max} needs the best-effort flag (guaranteed up to {GUARANTEED_J})")));
    }
    Ok(())
}

static CACHE: Mutex<Option<RTable>> = Mutex::new(None);

/// Process-wide cached table holding at least `R_1..=R_{j_max}`.
pub fn r_table(j_max: u32, opts: ROptions) -> Result<RTable> {
    check_range(j_max, opts)?;
    let mut guard = CACHE.lock().unwrap_or_else(|e| e.into_inner());
    if let Some(t) = guard.as_ref() {
        if t.max_j() >= j_max {
            return Ok(t.truncated_to(j_max));
        }
    }
    let t = RTable::compute(j_max, opts)?;
    *guard = Some(t.clone());
    Ok(t)
}

pub fn r_poly(j: u32) -> Result<RatPoly> {
    r_poly_with(j, ROptions::default())
}

pub fn r_poly_with(j: u32, opts: ROptions) -> Result<RatPoly> {
    if j == 0 {
        return Err(Error::InvalidParameter("R_j is indexed from j = 1".into()));
    }
    Ok(r_table(j, opts)?.get(j)?.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::rat;

    fn lam() -> RatPoly {
        RatPoly::var(Var::Lambda)
    }

    pub(crate) fn r2_closed() -> RatPoly {
        let l = lam();
        let d = RatPoly::var(Var::D);
        let dd = &d * &(&d - &RatPoly::one());
        let a = &(&l.pow(3).scale(&rat(2, 1)) + &l.pow(4)) * &dd;
        (&a - &l.pow(2).scale(&rat(2, 1))).scale(&rat(1, 4))
    }

    #[test]
    fn first_two() {
        assert_eq!(r_poly(1).unwrap(), lam());
        assert_eq!(r_poly(2).unwrap(), r2_closed());
    }

    #[test]
    fn r1_term_at_d10() {
        let t = r_table(1, ROptions::default()).unwrap();
        // N R_1 2^{-10} at λ = 1, d = 10
        let v = t.correction(&rat(1, 1), 10, 1).unwrap() * rat(512, 1);
        assert_eq!(v, rat(1, 2));
    }

    #[test]
    fn range_checks() {
        assert!(r_table(4, ROptions::default()).unwrap_err().is_budget());
        assert!(r_table(6, ROptions { best_effort: true, ..Default::default() }).is_err());
        assert!(r_poly(0).is_err());
    }

    #[test]
    fn r3_degree_bounds() {
        let p = r_poly(3).unwrap();
        assert!(p.degree(Var::D) <= 6);
        assert!(p.degree(Var::Lambda) <= 27);
        // lowest λ power is λ^3 coming from the size-3 clusters
        assert!(p.eval(&[(Var::Lambda, rat(0, 1)), (Var::D, rat(9, 1))]).unwrap() == rat(0, 1));
    }
}
