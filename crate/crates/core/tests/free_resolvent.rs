mod common;

use common::{moment_free, random_compact, ri, rng};
use dtl::error::Error;
use dtl::field::{rat_int, rational, Field};
use dtl::kernel::{apply_g0, g0_kernel, kappa_from_parameter, kernel_poly, kernel_series, r0_at_parameter, r0_point};
use dtl::sequence::{CompactSequence, PolyTailSequence, SpecialKind};
use dtl::Rational;
use proptest::prelude::*;

/// Truncated power series in κ with rational coefficients.
#[derive(Clone, Debug)]
struct Series(Vec<Rational>);

impl Series {
    fn mul(&self, other: &Series, len: usize) -> Series {
        let mut out = vec![rat_int(0); len];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                if i + j < len {
                    out[i + j] += a * b;
                }
            }
        }
        Series(out)
    }

    /// (1 + κ²/4)^p for p = ±1/2 via the binomial series.
    fn binomial_quarter_square(p: Rational, len: usize) -> Series {
        let mut out = vec![rat_int(0); len];
        let mut coeff = rat_int(1);
        let mut k = 0usize;
        while 2 * k < len {
            out[2 * k] = coeff.clone() * num_traits::pow(rational(1, 4), k);
            coeff = coeff * (p.clone() - rat_int(k as i64)) / rat_int(k as i64 + 1);
            k += 1;
        }
        Series(out)
    }
}

/// Coefficients c_j, j = −1..=max, of R₀(κ;n) = t^{2|n|}/(2κ s) with
/// s = √(1 + κ²/4), t = s − κ/2.
fn kernel_oracle(n: i64, max: i64) -> Vec<Rational> {
    let len = (max + 2) as usize;
    let s = Series::binomial_quarter_square(rational(1, 2), len);
    let inv_s = Series::binomial_quarter_square(rational(-1, 2), len);
    let mut t = s.clone();
    t.0[1] -= rational(1, 2);
    let mut power = Series({
        let mut v = vec![rat_int(0); len];
        v[0] = rat_int(1);
        v
    });
    for _ in 0..2 * n.abs() {
        power = power.mul(&t, len);
    }
    power.mul(&inv_s, len).0.into_iter().map(|c| c / rat_int(2)).collect()
}

/// (2π)⁻¹ ∫ cos(nθ) / (2 − 2cos θ + κ²) dθ by the periodic trapezoid rule.
fn fourier_oracle(kappa: f64, n: i64) -> f64 {
    let m = 8192;
    let h = 2.0 * std::f64::consts::PI / m as f64;
    (0..m)
        .map(|k| {
            let th = k as f64 * h;
            (n as f64 * th).cos() / (2.0 - 2.0 * th.cos() + kappa * kappa)
        })
        .sum::<f64>()
        / m as f64
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[test]
fn point_values_match_quadrature() {
    assert!((r0_point(1.0, 0).unwrap() - 0.44721360).abs() < 1e-8);
    assert!((r0_point(1.0, 1).unwrap() - 0.17082039).abs() < 1e-8);
    for kappa in [1.0, 0.5, 0.25] {
        for n in [0, 1, 5, -3] {
            let err = (r0_point(kappa, n).unwrap() - fourier_oracle(kappa, n)).abs();
            assert!(err < 1e-10, "kappa {kappa} n {n}: {err}");
        }
    }
}

#[test]
fn leading_behaviour_is_one_half_over_kappa() {
    for n in [0, 3, -7] {
        let k = 1e-6;
        assert!((k * r0_point(k, n).unwrap() - 0.5).abs() < 1e-4);
    }
}

#[test]
fn nonpositive_kappa_is_rejected() {
    assert!(matches!(r0_point(0.0, 0), Err(Error::DomainError(_))));
    assert!(matches!(r0_point(-1.0, 2), Err(Error::DomainError(_))));
}

#[test]
fn kernel_spot_values() {
    assert_eq!(g0_kernel(2, 2), rational(-1, 2));
    assert_eq!(g0_kernel(-1, 7), rational(1, 2));
    assert_eq!(g0_kernel(3, 0), rational(3, 256));
    assert_eq!(g0_kernel(-2, 4), ri(0));
}

#[test]
fn kernel_table_matches_explicit_polynomials() {
    for n in 0..=10i64 {
        let m = rat_int(n);
        let m2 = m.clone() * m.clone();
        let expected = [
            rational(1, 2),
            -m.clone() / ri(2),
            m2.clone() / ri(4) - rational(1, 16),
            -m2.clone() * m.clone() / ri(12) + m.clone() / ri(12),
            m2.clone() * m2.clone() / ri(48) - rational(5, 96) * m2.clone() + rational(3, 256),
        ];
        for (j, e) in (-1..=3).zip(expected) {
            assert_eq!(g0_kernel(j, n), e, "j {j} n {n}");
            assert_eq!(g0_kernel(j, -n), e);
        }
    }
}

#[test]
fn kernels_match_series_oracle_to_high_order() {
    for n in 0..=10 {
        let oracle = kernel_oracle(n, 9);
        for j in -1..=9 {
            assert_eq!(g0_kernel(j, n), oracle[(j + 1) as usize], "j {j} n {n}");
        }
    }
}

#[test]
fn kernel_series_invariants() {
    for n in [-4, 0, 3] {
        let ks = kernel_series(n, 6);
        assert_eq!(ks.coefficient(-1), Some(&rational(1, 2)));
    }
    for j in -1..=7 {
        assert_eq!(kernel_poly(j).degree(), Some((j + 1) as usize));
    }
}

#[test]
fn parameter_form_is_consistent_with_point_form() {
    for u in [rational(17, 16), rational(3, 2), rational(5, 1)] {
        let kappa = Field::to_f64(&kappa_from_parameter(&u));
        for n in [0, 1, 4] {
            let exact = Field::to_f64(&r0_at_parameter(&u, n));
            assert!((exact - r0_point(kappa, n).unwrap()).abs() < 1e-12 * exact.abs().max(1.0));
        }
    }
}

#[test]
fn g0_examples() {
    let e0 = CompactSequence::delta(0);
    let col = apply_g0::<Rational>(0, &e0);
    for n in -10..=10 {
        assert_eq!(col.eval(n), rat_int(-n.abs()) / ri(2));
    }
    let dipole = CompactSequence::new([(1, ri(1)), (-1, ri(-1))]);
    let sigma = PolyTailSequence::<Rational>::special(SpecialKind::Sigma);
    let image = apply_g0(0, &dipole);
    for n in -10..=10i64 {
        let brute = (rat_int((n + 1).abs()) - rat_int((n - 1).abs())) / ri(2);
        assert_eq!(image.eval(n), brute);
        assert_eq!(image.eval(n), sigma.eval(n));
    }
    let second = CompactSequence::new([(1, ri(1)), (0, ri(-2)), (-1, ri(1))]);
    let image = apply_g0(0, &second);
    assert!(image.is_compact());
    assert_eq!(image.to_compact().unwrap(), CompactSequence::new([(0, ri(-1))]));
}

#[test]
fn g0_matches_moment_representation() {
    let mut r = rng(7);
    for _ in 0..50 {
        let x = random_compact(&mut r, -4, 4);
        let m0: Rational = x.iter().map(|(_, v)| v.clone()).sum();
        let m1: Rational = x.iter().map(|(k, v)| rat_int(k) * v).sum();
        let g = apply_g0(0, &x);
        for n in -9..=9 {
            let tail: Rational = x.iter().filter(|(k, _)| *k >= n).map(|(k, v)| rat_int(k - n) * v).sum();
            let formula = -rat_int(n) * m0.clone() / ri(2) + m1.clone() / ri(2) - tail;
            assert_eq!(g.eval(n), formula);
        }
    }
}

#[test]
fn resolvent_identity_in_binary64() {
    for kappa in [1.0, 0.25, 0.0625] {
        let r = |n: i64| r0_point(kappa, n).unwrap();
        for n in -20..=20i64 {
            let lhs = 2.0 * r(n) - r(n + 1) - r(n - 1) + kappa * kappa * r(n);
            let expected = if n == 0 { 1.0 } else { 0.0 };
            assert!((lhs - expected).abs() < 1e-10, "kappa {kappa} n {n}: {lhs}");
        }
    }
}

/// Remainders evaluated exactly at κ_k = u_k − 1/u_k ≈ 2⁻ᵏ, k = 4..14, since
/// binary64 cannot resolve κ^{N+1} next to R₀ ≈ 1/(2κ).
#[test]
fn series_remainder_decays_at_expected_rate() {
    for n in [0i64, 1, 5] {
        for order in 0..=4i64 {
            let points: Vec<(f64, f64)> = (4..=14)
                .map(|k| {
                    let u = rat_int(1) + rational(1, 1i64 << (k + 1));
                    let kappa = kappa_from_parameter(&u);
                    let mut rem = r0_at_parameter(&u, n);
                    for j in -1..=order {
                        let p = if j < 0 { kappa.recip() } else { num_traits::pow(kappa.clone(), j as usize) };
                        rem -= g0_kernel(j, n) * p;
                    }
                    (Field::to_f64(&kappa).ln(), Field::to_f64(&rem).abs().ln())
                })
                .collect();
            let s = slope(&points);
            assert!(s >= order as f64 + 0.8, "n {n} N {order}: slope {s}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn h0_inverts_g0(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = random_compact(&mut r, -5, 5);
        let back = apply_g0(0, &x).apply_h0();
        prop_assert!(back.sub(&x.to_poly_tail()).is_zero());
    }

    #[test]
    fn moment_criterion(seed in any::<u64>(), zero_moments in any::<bool>()) {
        let mut r = rng(seed);
        let x = if zero_moments { moment_free(&mut r, -4, 3) } else { random_compact(&mut r, -4, 4) };
        let one = PolyTailSequence::<Rational>::special(SpecialKind::One);
        let n = PolyTailSequence::<Rational>::special(SpecialKind::N);
        let free = one.pair_compact(&x).is_zero() && n.pair_compact(&x).is_zero();
        prop_assert_eq!(apply_g0(0, &x).is_compact(), free);
    }
}

#[test]
fn moment_identity() {
    let mut r = rng(11);
    for _ in 0..100 {
        let x = moment_free(&mut r, -4, 2);
        let y = moment_free(&mut r, -2, 3);
        let lhs = apply_g0(2, &y).pair_compact(&x);
        let rhs = -apply_g0(0, &x).pair(&apply_g0(0, &y)).unwrap();
        assert_eq!(lhs, rhs);
    }
}
