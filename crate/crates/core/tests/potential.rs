mod common;

use std::collections::BTreeMap;

use common::{exact_fixture, fixture, random_compact, random_potential, ri, rng};
use dtl::error::Error;
use dtl::field::{rat_int, rational, Field};
use dtl::io::PotentialSpec;
use dtl::oracle::reflection_defect;
use dtl::potential::{from_multiplicative, AnyPotential, FactorizedPotential, RankOneTerm, SchroedingerOperator};
use dtl::sequence::{CompactSequence, Poly, PolyTailSequence};
use dtl::{Float, Rational};

fn term(sign: i8, values: &[(i64, i64)]) -> RankOneTerm<Rational> {
    RankOneTerm { sign, vector: CompactSequence::new(values.iter().map(|&(n, v)| (n, ri(v)))) }
}

fn phi(j: i64) -> RankOneTerm<Rational> {
    term(-1, &[(4 * j, -1), (4 * j + 1, 1)])
}

/// u_j: 1 for n ≤ 4j, −1 beyond.
fn u(j: i64) -> PolyTailSequence<Rational> {
    PolyTailSequence::from_fn(4 * j, 4 * j + 1, Poly::new(vec![ri(1)]), Poly::new(vec![ri(-1)]), |_| ri(0))
}

#[test]
fn rank_one_constructors() {
    let p = FactorizedPotential::from_rank_one_terms(vec![term(-1, &[(0, 1)])]).unwrap();
    assert_eq!(p.dim(), 1);
    assert_eq!(p.operator().unwrap().entry(0, 0), ri(-1));
    let b5 = FactorizedPotential::from_rank_one_terms((0..3).map(phi).collect()).unwrap();
    assert_eq!(b5.dim(), 3);
    assert!(b5.is_exact());
    let dep = FactorizedPotential::from_rank_one_terms(vec![term(1, &[(0, 1)]), term(1, &[(0, 2)])]);
    assert!(matches!(dep, Err(Error::DependentVectors { .. })));
    let zero = FactorizedPotential::from_rank_one_terms(vec![term(1, &[])]);
    assert!(zero.is_err());
}

#[test]
fn multiplicative_constructor() {
    let map = |pairs: &[(i64, Rational)]| pairs.iter().cloned().collect::<BTreeMap<_, _>>();
    let b3 = from_multiplicative(&map(&[(0, ri(-1)), (1, ri(1)), (-1, ri(1))])).unwrap();
    let p = b3.exact().unwrap();
    assert_eq!(p.dim(), 3);
    let mut signs: Vec<(i64, i8)> = p.terms().iter().map(|t| (t.vector.support_range().unwrap().0, t.sign)).collect();
    signs.sort();
    assert_eq!(signs, vec![(-1, 1), (0, -1), (1, 1)]);
    assert!(p.terms().iter().all(|t| t.vector.iter().all(|(_, v)| *v == ri(1))));
    let b3b = from_multiplicative(&map(&[(0, rational(-2, 3)), (2, ri(1)), (-2, ri(1))])).unwrap();
    assert!(matches!(b3b, AnyPotential::Float(_)));
    assert_eq!(b3b.operator().unwrap().entry(0, 0), rational(-2, 3));
    let sq = from_multiplicative(&map(&[(0, rational(-9, 4))])).unwrap();
    let sq = sq.exact().unwrap();
    assert_eq!(sq.terms()[0].sign, -1);
    assert_eq!(sq.terms()[0].vector.get(0), rational(3, 2));
}

#[test]
fn fixture_solutions_are_annihilated() {
    let b3 = exact_fixture("b3_resonance_1");
    let x = PolyTailSequence::from_fn(-1, 1, Poly::new(vec![ri(1)]), Poly::new(vec![ri(1)]), |n| if n == 0 { ri(2) } else { ri(1) });
    assert!(SchroedingerOperator::new(b3).apply(&x).is_zero());

    let b5 = exact_fixture("b5_third_kind");
    for j in 0..3 {
        assert!(b5.apply_h(&u(j)).is_zero(), "u_{j}");
    }

    let AnyPotential::Float(b4) = fixture("b4_eigenvalues_N1") else { panic!("b4 should be floating") };
    let e3 = CompactSequence::delta(3).to_poly_tail();
    assert!(b4.apply_h(&e3).max_abs() <= 1e-12);
}

#[test]
fn j_conjugation_examples() {
    let b3 = exact_fixture("b3_resonance_1");
    assert_eq!(b3.j_conjugate().operator(), b3.operator());
    let p = FactorizedPotential::from_rank_one_terms(vec![term(1, &[(1, 1), (0, -1)])]).unwrap();
    let pj = p.j_conjugate();
    assert_eq!(pj.terms()[0].vector, CompactSequence::new([(1, ri(-1)), (0, ri(-1))]));
    assert_eq!(pj.j_conjugate().terms(), p.terms());
}

#[test]
fn weighted_and_matrix_inputs() {
    let spec = PotentialSpec::parse_json(r#"{"rank_one_terms": [{"sign": -1, "weight": "4", "vector": {"0": 1, "1": -1}}]}"#).unwrap();
    let p = spec.build().unwrap();
    let p = p.exact().expect("weight 4 has a rational root");
    assert_eq!(p.terms()[0].vector.get(0), ri(2));
    let spec = PotentialSpec::parse_json(r#"{"matrix": {"sites": [0, 1], "entries": [[2, 1], [1, 2]]}}"#).unwrap();
    let p = spec.build().unwrap();
    assert!(!p.is_exact());
    assert_eq!(p.dim(), 2);
    let dense = p.to_float().dense_matrix(0, 1);
    for (i, j, v) in [(0, 0, 2.0), (0, 1, 1.0), (1, 1, 2.0)] {
        assert!((Field::to_f64(dense.get(i, j)) - v).abs() < 1e-12);
    }
    let toml = PotentialSpec::parse_toml("[multiplicative]\n\"0\" = \"-1\"\n\"1\" = 1\n").unwrap();
    assert_eq!(toml.build().unwrap().dim(), 2);
    let bad = PotentialSpec::parse_json(r#"{"multiplicative": {"a": 1}}"#).unwrap();
    assert!(bad.build().is_err());
    let nonsym = PotentialSpec::parse_json(r#"{"matrix": {"sites": [0, 1], "entries": [[2, 1], [0, 2]]}}"#).unwrap();
    assert!(nonsym.build().is_err());
}

#[test]
fn dense_matrix_reconstructs_potential() {
    let mut r = rng(3);
    let mut checked = 0;
    while checked < 50 {
        let Some(p) = random_potential(&mut r, 4, -6, 6) else { continue };
        checked += 1;
        let dense = p.dense_matrix(-10, 10);
        for a in -10..=10i64 {
            for b in -10..=10i64 {
                let expected: Rational = p
                    .terms()
                    .iter()
                    .map(|t| rat_int(t.sign as i64) * t.vector.get(a) * t.vector.get(b))
                    .sum();
                assert_eq!(dense.get((a + 10) as usize, (b + 10) as usize), &expected);
                assert_eq!(p.operator().unwrap().entry(a, b), expected);
            }
        }
    }
}

#[test]
fn h_is_symmetric() {
    let mut r = rng(5);
    let mut checked = 0;
    while checked < 100 {
        let Some(p) = random_potential(&mut r, 3, -4, 4) else { continue };
        checked += 1;
        let x = random_compact(&mut r, -6, 6).to_poly_tail();
        let y = random_compact(&mut r, -6, 6).to_poly_tail();
        assert_eq!(x.pair(&p.apply_h(&y)).unwrap(), p.apply_h(&x).pair(&y).unwrap());
    }
}

#[test]
fn reflection_identity_on_random_vectors() {
    let mut r = rng(9);
    let mut checked = 0;
    while checked < 40 {
        let Some(p) = random_potential(&mut r, 3, -5, 5) else { continue };
        checked += 1;
        for _ in 0..5 {
            let x = random_compact(&mut r, -7, 7);
            assert!(reflection_defect(p.operator().unwrap(), &x).is_zero());
        }
    }
}

#[test]
fn float_conversion_keeps_operator() {
    let p = exact_fixture("b5_third_kind");
    let f = p.to_float();
    assert_eq!(f.operator(), p.operator());
    let x: PolyTailSequence<Float> = u(1).convert(|v| Float::from_rational(v));
    assert!(f.apply_h(&x).vanishes(1.0));
}
