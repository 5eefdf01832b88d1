use proptest::prelude::*;

use qcube::asymptotics::{compute_p, r_table, ROptions};
use qcube::symbolic::{interpolate_poly, parse_rat, rat, rat_to_string, Base, Rat, RatFunc, RatPoly, Var};

fn poly_strategy() -> impl Strategy<Value = RatPoly> {
    prop::collection::vec((-20i64..20, 1i64..6, 0u32..4, 0u32..3), 0..6).prop_map(|terms| {
        let mut p = RatPoly::zero();
        for (n, d, e_l, e_d) in terms {
            let m = &RatPoly::var(Var::Lambda).pow(e_l) * &RatPoly::var(Var::D).pow(e_d);
            p += &m.scale(&rat(n, d));
        }
        p
    })
}

proptest! {
    #[test]
    fn rational_text_round_trip(n in -10_000i64..10_000, d in 1i64..10_000) {
        let r = rat(n, d);
        prop_assert_eq!(parse_rat(&rat_to_string(&r)).unwrap(), r);
    }

    #[test]
    fn decimals_parse_exactly(int in 0u32..1000, frac in 0u32..10_000) {
        let s = format!("{int}.{frac:04}");
        prop_assert_eq!(parse_rat(&s).unwrap(), rat(int as i64, 1) + rat(frac as i64, 10_000));
    }

    #[test]
    fn polynomial_ring_laws(p in poly_strategy(), q in poly_strategy(), r in poly_strategy()) {
        prop_assert_eq!(&(&p + &q) * &r, &(&p * &r) + &(&q * &r));
        let dl = |x: &RatPoly| x.derivative(Var::Lambda);
        prop_assert_eq!(dl(&(&p * &q)), &(&dl(&p) * &q) + &(&p * &dl(&q)));
        prop_assert_eq!(RatPoly::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn interpolation_recovers_polynomials(p in poly_strategy()) {
        let deg = p.degree(Var::D) as usize;
        let samples: Vec<(i64, RatPoly)> = (3..(3 + deg as i64 + 3)).map(|x| (x, p.eval_var(Var::D, &rat(x, 1)))).collect();
        prop_assert_eq!(interpolate_poly(&samples, deg + 1, Var::D).unwrap(), p);
    }

    #[test]
    fn ratfunc_json_round_trip(p in poly_strategy(), a in 0u32..4, b in 0u32..3) {
        let f = RatFunc::new(p, &[(Base::OneMinusBeta, a), (Base::OnePlusLambda, b)]);
        prop_assert_eq!(RatFunc::from_json(&f.to_json()).unwrap(), f);
    }
}

#[test]
fn first_coefficient_evaluates_to_odds_ratio() {
    let rt = r_table(2, ROptions::default()).unwrap();
    let p = compute_p(&rt, 3).unwrap();
    for (n, d) in [(1, 2), (3, 4), (9, 10)] {
        let beta = rat(n, d);
        let v = p.p[0].eval(&[(Var::Beta, beta.clone()), (Var::D, rat(10, 1))]).unwrap();
        assert_eq!(v, &beta / (Rat::from_integer(1.into()) - &beta));
    }
}
