#![allow(dead_code)]

use std::path::PathBuf;

use dtl::field::{rat_int, rational, Field};
use dtl::io::PotentialSpec;
use dtl::potential::{AnyPotential, FactorizedPotential, RankOneTerm};
use dtl::sequence::CompactSequence;
use dtl::Rational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const FIXTURES: [&str; 7] = [
    "v_zero",
    "b2_local_rank_one",
    "b3_resonance_1",
    "b3_resonance_2",
    "b4_eigenvalues_N1",
    "b4_eigenvalues_N3",
    "b5_third_kind",
];

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.json"))
}

pub fn fixture(name: &str) -> AnyPotential {
    PotentialSpec::read(&fixture_path(name)).unwrap().build().unwrap()
}

pub fn exact_fixture(name: &str) -> FactorizedPotential<Rational> {
    fixture(name).exact().cloned().unwrap_or_else(|| panic!("{name} is not exact"))
}

pub fn exact_fixtures() -> Vec<(&'static str, FactorizedPotential<Rational>)> {
    FIXTURES.iter().filter_map(|n| fixture(n).exact().cloned().map(|p| (*n, p))).collect()
}

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn ri(x: i64) -> Rational {
    rat_int(x)
}

/// Entry of the form p/q with p ∈ {−2..2}, q ∈ {1,2,3}.
pub fn small_rational(r: &mut StdRng) -> Rational {
    rational(r.gen_range(-2..=2), r.gen_range(1..=3))
}

pub fn random_compact(r: &mut StdRng, lo: i64, hi: i64) -> CompactSequence<Rational> {
    CompactSequence::new((lo..=hi).map(|n| (n, small_rational(r))))
}

/// Random exact potential of rank ≤ `max_rank` supported in [lo, hi];
/// `None` when the drawn vectors are dependent or zero.
pub fn random_potential(r: &mut StdRng, max_rank: usize, lo: i64, hi: i64) -> Option<FactorizedPotential<Rational>> {
    let rank = r.gen_range(1..=max_rank);
    let terms: Vec<RankOneTerm<Rational>> = (0..rank)
        .map(|_| {
            let a = r.gen_range(lo..=hi);
            let b = r.gen_range(a..=(a + 3).min(hi));
            RankOneTerm { sign: if r.gen_bool(0.5) { 1 } else { -1 }, vector: random_compact(r, a, b) }
        })
        .collect();
    FactorizedPotential::from_rank_one_terms(terms).ok()
}

/// Random compact x with ⟨1, x⟩ = ⟨n, x⟩ = 0.
pub fn moment_free(r: &mut StdRng, lo: i64, hi: i64) -> CompactSequence<Rational> {
    let base = random_compact(r, lo, hi);
    let m0: Rational = base.iter().map(|(_, v)| v).sum();
    let m1: Rational = base.iter().map(|(n, v)| rat_int(n) * v).sum();
    // Correct with e_{hi+1}, e_{hi+2}: c1 + c2 = −m0, (hi+1)c1 + (hi+2)c2 = −m1.
    let (p, q) = (rat_int(hi + 1), rat_int(hi + 2));
    let c2 = (-m1.clone() + p.clone() * m0.clone()) / (q - p);
    let c1 = -m0 - c2.clone();
    base.add(&CompactSequence::new([(hi + 1, c1), (hi + 2, c2)]))
}

/// Compact ψ on sites a..a+len−2 with integer increments summing to zero
/// and Σ increments² a perfect square s²; returns (ψ, s).
fn square_energy_profile(r: &mut StdRng, a: i64) -> (CompactSequence<Rational>, i64) {
    loop {
        let len = r.gen_range(3..=5usize);
        let mut d: Vec<i64> = (0..len - 1).map(|_| r.gen_range(-2..=2)).collect();
        let last = -d.iter().sum::<i64>();
        d.push(last);
        let energy: i64 = d.iter().map(|x| x * x).sum();
        let s = (energy as f64).sqrt().round() as i64;
        if energy == 0 || s * s != energy || last.abs() > 3 {
            continue;
        }
        let mut acc = 0;
        let psi = CompactSequence::new(d[..len - 1].iter().enumerate().map(|(i, x)| {
            acc += x;
            (a + i as i64, rat_int(acc))
        }));
        if !psi.is_zero() {
            return (psi, s);
        }
    }
}

/// Exact potential on [−6, 6] with one or two planted compact zero modes ψ:
/// a term −(H₀ψ)(H₀ψ)ᵀ/⟨H₀ψ, ψ⟩ per mode plus random terms orthogonal to
/// every ψ. Returns the potential and the modes.
pub fn planted_potential(r: &mut StdRng) -> Option<(FactorizedPotential<Rational>, Vec<CompactSequence<Rational>>)> {
    let starts: Vec<i64> = if r.gen_bool(0.5) { vec![r.gen_range(-5..=-1)] } else { vec![-5, 1] };
    let modes: Vec<(CompactSequence<Rational>, i64)> = starts.iter().map(|&a| square_energy_profile(r, a)).collect();
    let mut terms: Vec<RankOneTerm<Rational>> = modes
        .iter()
        .map(|(psi, s)| {
            let f = psi.to_poly_tail().apply_h0().to_compact().expect("compact image");
            RankOneTerm { sign: -1, vector: f.scale(&rational(1, *s)) }
        })
        .collect();
    for _ in 0..r.gen_range(0..=2) {
        let mut w = random_compact(r, -6, 6);
        for (psi, _) in &modes {
            let (site, value) = psi.iter().find(|(_, v)| !v.is_zero()).map(|(n, v)| (n, v.clone()))?;
            let overlap: Rational = w.iter().map(|(n, x)| x * psi.get(n)).sum();
            w = w.add(&CompactSequence::new([(site, -overlap / value)]));
        }
        if !w.is_zero() {
            terms.push(RankOneTerm { sign: if r.gen_bool(0.5) { 1 } else { -1 }, vector: w });
        }
    }
    let pot = FactorizedPotential::from_rank_one_terms(terms).ok()?;
    let support_ok = pot.terms().iter().all(|t| t.vector.iter().all(|(n, _)| (-6..=6).contains(&n)));
    support_ok.then(|| (pot, modes.into_iter().map(|(p, _)| p).collect()))
}
