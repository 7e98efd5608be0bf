mod common;

use proptest::prelude::*;
use tropdiv::scalar::{rat, rat_int};
use tropdiv::{ExtReal, Rational, TropicalPolynomial, TropicalTerm};

fn term(dim: usize) -> impl Strategy<Value = TropicalTerm<Rational>> {
    (prop::collection::vec(-4i64..=4, dim), -6i64..=6)
        .prop_map(|(a, b)| TropicalTerm::new(a.into_iter().map(rat_int).collect(), rat_int(b)))
}

fn poly(dim: usize, max_terms: usize) -> impl Strategy<Value = TropicalPolynomial<Rational>> {
    prop::collection::vec(term(dim), 1..=max_terms).prop_map(move |t| TropicalPolynomial::new(dim, t).unwrap())
}

fn point(dim: usize) -> impl Strategy<Value = Vec<Rational>> {
    prop::collection::vec((-40i64..=40, 1i64..=4), dim).prop_map(|v| v.into_iter().map(|(n, d)| rat(n, d)).collect())
}

fn pair(max_terms: usize) -> impl Strategy<Value = (TropicalPolynomial<Rational>, TropicalPolynomial<Rational>)> {
    (1usize..=2).prop_flat_map(move |n| (poly(n, max_terms), poly(n, max_terms)))
}

fn finite(v: ExtReal<Rational>) -> Rational {
    v.finite().cloned().expect("finite value")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sum_and_max_are_pointwise((p, q) in pair(4), xs in prop::collection::vec(point(2), 20)) {
        let sum = p.tropical_sum(&q).unwrap();
        let max = p.tropical_max(&q).unwrap();
        for x in xs {
            let x = &x[..p.dim()];
            let (a, b) = (finite(p.eval(x)), finite(q.eval(x)));
            prop_assert_eq!(finite(sum.eval(x)), &a + &b);
            prop_assert_eq!(finite(max.eval(x)), a.max(b));
        }
    }

    #[test]
    fn terms_lie_below_the_newton_function(p in (1usize..=2).prop_flat_map(|n| poly(n, 5))) {
        for t in p.terms() {
            match p.enf_value(&t.a).unwrap() {
                ExtReal::Finite(v) => prop_assert!(v >= t.b),
                ExtReal::NegInf => prop_assert!(false, "term coefficient outside its own Newton polytope"),
            }
        }
    }

    #[test]
    fn newton_function_respects_order((p1, extra) in pair(4), probes in prop::collection::vec(point(2), 10)) {
        let p2 = p1.tropical_max(&extra).unwrap();
        let mut coefficients: Vec<Vec<Rational>> = p2.terms().iter().map(|t| t.a.clone()).collect();
        coefficients.extend(probes.into_iter().map(|a| a[..p1.dim()].to_vec()));
        for a in coefficients {
            let (low, high) = (p1.enf_value(&a).unwrap(), p2.enf_value(&a).unwrap());
            prop_assert!(low <= high, "{:?} > {:?} at {:?}", low, high, a);
        }
    }

    #[test]
    fn newton_function_order_implies_pointwise_order((p1, p2) in pair(5)) {
        let dominated = p1.terms().iter().all(|t| match p2.enf_value(&t.a).unwrap() {
            ExtReal::Finite(v) => v >= t.b,
            ExtReal::NegInf => false,
        });
        let below_on_grid = common::rational_grid(p1.dim(), -6, 6, 2).iter().all(|x| p1.eval(x) <= p2.eval(x));
        if dominated {
            prop_assert!(below_on_grid);
        }
    }

    #[test]
    fn pruning_keeps_the_function(p in (1usize..=2).prop_flat_map(|n| poly(n, 6))) {
        let pruned = p.prune_dominated().unwrap();
        prop_assert!(pruned.len() <= p.len());
        prop_assert!(pruned.agrees_on(&p, &common::rational_grid(p.dim(), -5, 5, 2)));
    }
}

#[test]
fn neg_inf_sentinel_absorbs_sums() {
    let p = TropicalPolynomial::monomial(vec![rat_int(1)], rat_int(2));
    let empty = TropicalPolynomial::<Rational>::neg_inf(1);
    assert!(p.tropical_sum(&empty).unwrap().is_neg_inf());
    assert_eq!(p.tropical_max(&empty).unwrap().canonical(), p.canonical());
    assert!(empty.eval(&[rat_int(0)]).is_neg_inf());
}

#[test]
fn json_round_trip_keeps_rationals() {
    let p = TropicalPolynomial::new(2, vec![TropicalTerm::new(vec![rat(-1, 2), rat_int(3)], rat(7, 3))]).unwrap();
    let text = serde_json::to_string(&p).unwrap();
    let back: TropicalPolynomial<Rational> = serde_json::from_str(&text).unwrap();
    assert_eq!(back, p);
}
