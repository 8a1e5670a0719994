mod common;

use common::ri;
use dtl::error::Error;
use dtl::field::{rat_int, Field, Scalar};
use dtl::io::sequence_json;
use dtl::sequence::{CompactSequence, Poly, PolyTailSequence, SpecialKind};
use dtl::Rational;
use proptest::prelude::*;

fn special(kind: SpecialKind) -> PolyTailSequence<Rational> {
    PolyTailSequence::special(kind)
}

fn compact(values: &[(i64, i64)]) -> PolyTailSequence<Rational> {
    CompactSequence::new(values.iter().map(|&(n, v)| (n, ri(v)))).to_poly_tail()
}

#[test]
fn special_sequences_evaluate() {
    assert_eq!(special(SpecialKind::One).eval(5), ri(1));
    assert_eq!(special(SpecialKind::Sigma).eval(0), ri(0));
    assert_eq!(special(SpecialKind::Sigma).eval(-3), ri(-1));
    assert_eq!(special(SpecialKind::Sigma).eval(7), ri(1));
    assert_eq!(special(SpecialKind::AbsN).eval(-4), ri(4));
    assert_eq!(special(SpecialKind::N).eval(-4), ri(-4));
    let d = special(SpecialKind::Delta(2));
    assert_eq!((d.eval(2), d.eval(1), d.eval(-9)), (ri(1), ri(0), ri(0)));
}

#[test]
fn h0_examples() {
    let e0 = compact(&[(0, 1)]);
    assert_eq!(e0.apply_h0().values(-2, 2), vec![ri(0), ri(-1), ri(2), ri(-1), ri(0)]);
    assert!(special(SpecialKind::One).apply_h0().is_zero());
    assert!(special(SpecialKind::N).apply_h0().is_zero());
    let sq = Poly::new(vec![ri(0), ri(0), ri(1)]);
    let n2 = PolyTailSequence::from_fn(-3, 3, sq.clone(), sq, |n| rat_int(n * n));
    let h = n2.apply_h0();
    for n in -10..=10 {
        let brute = -(rat_int((n + 1) * (n + 1)) + rat_int((n - 1) * (n - 1)) - rat_int(2 * n * n));
        assert_eq!(h.eval(n), brute);
        assert_eq!(h.eval(n), ri(-2));
    }
}

#[test]
fn pairing_examples() {
    let e3 = compact(&[(3, 1)]);
    assert_eq!(e3.pair(&e3).unwrap(), ri(1));
    assert_eq!(special(SpecialKind::One).pair(&compact(&[(1, 1), (-4, -1)])).unwrap(), ri(0));
    assert_eq!(special(SpecialKind::N).pair(&compact(&[(2, 1)])).unwrap(), ri(2));
    assert!(matches!(special(SpecialKind::One).pair(&special(SpecialKind::N)), Err(Error::NonSummable)));
}

#[test]
fn exact_and_float_scalars_do_not_mix() {
    let a = Scalar::Exact(ri(1));
    let b = Scalar::Float(0.5);
    assert!(matches!(a.checked_add(&b), Err(Error::MixedModes)));
    let third = Scalar::Exact(dtl::field::rational(1, 3));
    let sum = third.checked_add(&third).unwrap().checked_add(&third).unwrap();
    assert_eq!(sum, Scalar::Exact(ri(1)));
}

#[test]
fn inconsistent_windows_are_rejected() {
    let bad = PolyTailSequence::from_parts(0, vec![ri(5), ri(1)], Poly::new(vec![ri(1)]), Poly::new(vec![ri(1)]));
    assert!(bad.is_err());
}

#[test]
fn sequence_json_layout() {
    let v = sequence_json(&special(SpecialKind::Sigma));
    assert_eq!(v["left_tail"], serde_json::json!(["-1"]));
    assert_eq!(v["right_tail"], serde_json::json!(["1"]));
    assert_eq!(v["core"]["0"], serde_json::json!("0"));
    let half = PolyTailSequence::from_fn(0, 0, Poly::zero(), Poly::zero(), |_| dtl::field::rational(1, 2));
    let half = CompactSequence::new([(0, dtl::field::rational(1, 2))]).to_poly_tail().add(&half);
    assert_eq!(sequence_json(&half)["core"]["0"], serde_json::json!("1/2"));
}

fn arb_rational() -> impl Strategy<Value = Rational> {
    (-20i64..=20, 1i64..=7).prop_map(|(p, q)| dtl::field::rational(p, q))
}

fn arb_poly(max_degree: usize) -> impl Strategy<Value = Poly<Rational>> {
    prop::collection::vec(arb_rational(), 0..=max_degree + 1).prop_map(Poly::new)
}

/// Sequence with random tails and a core consistent with them at the ends.
fn arb_sequence() -> impl Strategy<Value = PolyTailSequence<Rational>> {
    (-6i64..=2, 0i64..=6, arb_poly(2), arb_poly(2), prop::collection::vec(arb_rational(), 9))
        .prop_map(|(lo, width, left, right, core)| {
            PolyTailSequence::from_fn(lo, lo + width, left, right, |n| core[(n - lo).rem_euclid(9) as usize].clone())
        })
}

fn arb_compact() -> impl Strategy<Value = CompactSequence<Rational>> {
    prop::collection::btree_map(-8i64..=8, arb_rational(), 0..6).prop_map(CompactSequence::new)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h0_is_linear(x in arb_sequence(), y in arb_sequence(), a in arb_rational(), b in arb_rational()) {
        let lhs = x.combine(&a, &y, &b).apply_h0();
        let rhs = x.apply_h0().combine(&a, &y.apply_h0(), &b);
        for n in -15..=15 {
            prop_assert_eq!(lhs.eval(n), rhs.eval(n));
        }
    }

    #[test]
    fn h0_annihilates_affine_sequences(c0 in arb_rational(), c1 in arb_rational(), lo in -5i64..5, w in 0i64..4) {
        let p = Poly::new(vec![c0, c1]);
        let q = p.clone();
        let x = PolyTailSequence::from_fn(lo, lo + w, p.clone(), p, move |n| q.eval(n));
        prop_assert!(x.apply_h0().is_zero());
    }

    #[test]
    fn pair_is_symmetric(x in arb_compact(), y in arb_sequence()) {
        let xs = x.to_poly_tail();
        prop_assert_eq!(xs.pair(&y).unwrap(), y.pair(&xs).unwrap());
        prop_assert_eq!(xs.pair(&y).unwrap(), y.pair_compact(&x));
    }

    #[test]
    fn evaluation_matches_defining_formula(left in arb_poly(2), right in arb_poly(2), lo in -5i64..0, w in 0i64..6,
                                          core in prop::collection::vec(arb_rational(), 12),
                                          sites in prop::collection::vec(-40i64..40, 100)) {
        let hi = lo + w;
        let f = |n: i64| core[(n - lo) as usize].clone();
        let x = PolyTailSequence::from_fn(lo, hi, left.clone(), right.clone(), f);
        for n in sites {
            let expected = if n <= lo { left.eval(n) } else if n >= hi { right.eval(n) } else { core[(n - lo) as usize].clone() };
            prop_assert_eq!(x.eval(n), expected);
        }
    }
}

#[test]
fn float_zero_test_uses_scale() {
    let tiny = CompactSequence::new([(0, dtl::Float::from(1e-15))]).to_poly_tail();
    assert!(tiny.vanishes(1.0));
    assert!(!Field::is_zero(&tiny.eval(0)));
}
