use num_traits::{One, ToPrimitive};
use proptest::prelude::*;

use qcube::asymptotics::{r_table, ROptions};
use qcube::clusters::{ursell, ursell_recursive, ClusterOptions, ClusterSet, SyntheticUniverse};
use qcube::graph::SmallGraph;
use qcube::hypercube::Dim;
use qcube::numeric::{ln_rat, real_from_rat, to_f64};
use qcube::oracle::odd_model_exact;
use qcube::symbolic::{rat, rat_pow, Rat, Var};

#[test]
fn truncation_error_matches_next_stratum_for_small_fugacity() {
    let d = Dim::new(4).unwrap();
    let om = odd_model_exact(d).unwrap();
    let set = ClusterSet::enumerate(d, 5, ClusterOptions { keep_records: false, ..Default::default() }).unwrap();
    let lam = rat(1, 100_000);
    let exact = ln_rat(&om.xi.eval(&[(Var::Lambda, lam.clone())]).unwrap(), 80).unwrap();
    for k in 1..=4 {
        let err = to_f64(&(exact.clone() - real_from_rat(&set.truncated_log_xi(&lam, k).unwrap(), 80)));
        let next = set.stratum_value(k + 1, &lam).to_f64().unwrap();
        assert!((err / next - 1.0).abs() < 1e-3, "k={k}: {err:e} vs {next:e}");
    }
}

#[test]
fn interpolated_r_extrapolates_beyond_grid() {
    // grid for R_1..R_3 is d = 7..=14; compare with a direct enumeration at d = 16
    let rt = r_table(3, ROptions::default()).unwrap();
    let d = 16u32;
    let set = ClusterSet::enumerate(Dim::new(d).unwrap(), 3, ClusterOptions { keep_records: false, ..Default::default() }).unwrap();
    let lam = rat(1, 3);
    let n = Rat::from_integer((1u64 << (d - 1)).into());
    let one_plus = Rat::one() + &lam;
    let mut via_r = Rat::from_integer(0.into());
    for j in 1..=3u32 {
        via_r += rt.eval(j, &lam, d).unwrap() * rat_pow(&one_plus, -((j * d) as i64)) * &n;
    }
    assert_eq!(via_r, set.truncated_log_xi(&lam, 3).unwrap());
}

fn graph_from(n: usize, mask: u64) -> SmallGraph {
    SmallGraph::from_edge_mask(n, mask & ((1u64 << (n * (n - 1) / 2)) - 1)).unwrap()
}

proptest! {
    #[test]
    fn ursell_definitions_agree(n in 1usize..=6, mask in any::<u64>()) {
        let g = graph_from(n, mask);
        prop_assert_eq!(ursell(&g).unwrap(), ursell_recursive(&g).unwrap());
        if !g.is_connected() {
            prop_assert_eq!(ursell(&g).unwrap(), Rat::from_integer(0.into()));
        }
    }

    #[test]
    fn synthetic_expansion_matches_log(p in 1usize..=4, mask in any::<u64>()) {
        let g = graph_from(p, mask);
        let u = SyntheticUniverse::new(p, &g.edges()).unwrap();
        prop_assert_eq!(u.cluster_expansion(5).unwrap(), u.log_partition_taylor(5));
    }
}
