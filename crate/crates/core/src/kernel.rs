//! Free resolvent kernel R₀(κ;n) = (s − κ/2)^{2|n|} / (2κs), s = √(1 + κ²/4),
//! and its Laurent coefficients G_j⁰(n), polynomials in |n| of degree j + 1.

use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};
use crate::field::{rat_int, rational, Field, Rational};
use crate::sequence::{CompactSequence, Poly, PolyTailSequence};

/// Laurent coefficients of R₀(κ;n) at a fixed site, orders −1..=J.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSeries {
    pub site: i64,
    pub coefficients: Vec<Rational>,
}

impl KernelSeries {
    pub fn coefficient(&self, j: i64) -> Option<&Rational> {
        usize::try_from(j + 1).ok().and_then(|k| self.coefficients.get(k))
    }
}

fn series_mul(a: &[Rational], b: &[Rational], len: usize) -> Vec<Rational> {
    let mut out = vec![rat_int(0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        if Field::is_zero(x) {
            continue;
        }
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// Coefficients of (1 + κ²/4)^e up to κ^(len−1).
fn binomial_series(exponent: &Rational, len: usize) -> Vec<Rational> {
    let mut out = vec![rat_int(0); len];
    let quarter = rational(1, 4);
    let mut term = rat_int(1);
    let mut k = 0usize;
    while 2 * k < len {
        out[2 * k] = term.clone();
        term = term * (exponent - rat_int(k as i64)) / rat_int(k as i64 + 1) * &quarter;
        k += 1;
    }
    out
}

/// Taylor coefficients of 2κ R₀(κ;m) at κ = 0 for m ≥ 0, up to κ^(len−1).
fn scaled_kernel_series(m: usize, len: usize) -> Vec<Rational> {
    let mut t = binomial_series(&rational(1, 2), len);
    if len > 1 {
        t[1] -= rational(1, 2);
    }
    let inv_s = binomial_series(&rational(-1, 2), len);
    let mut acc = inv_s;
    for _ in 0..2 * m {
        acc = series_mul(&acc, &t, len);
    }
    acc
}

/// Polynomial through the points (x_i, y_i).
fn interpolate(xs: &[i64], ys: &[Rational]) -> Poly<Rational> {
    let mut result = Poly::zero();
    for (i, (&xi, yi)) in xs.iter().zip(ys).enumerate() {
        let mut basis = Poly::constant(yi.clone());
        for (k, &xk) in xs.iter().enumerate() {
            if k != i {
                let factor = Poly::new(vec![rat_int(-xk), rat_int(1)]).scale(&rational(1, xi - xk));
                basis = basis.mul(&factor);
            }
        }
        result = result.add(&basis);
    }
    result
}

/// Kernel polynomials in |n| for orders −1..=max_order.
fn generate_table(max_order: i64) -> Vec<Poly<Rational>> {
    let len = (max_order + 2) as usize;
    let points = (max_order + 4) as usize;
    let samples: Vec<Vec<Rational>> = (0..points).map(|m| scaled_kernel_series(m, len)).collect();
    (-1..=max_order)
        .map(|j| {
            let idx = (j + 1) as usize;
            let deg = (j + 1) as usize;
            let xs: Vec<i64> = (0..=deg as i64).collect();
            let ys: Vec<Rational> = xs.iter().map(|&m| &samples[m as usize][idx] / rat_int(2)).collect();
            let p = interpolate(&xs, &ys);
            for extra in deg + 1..points {
                assert_eq!(
                    p.eval(extra as i64),
                    &samples[extra][idx] / rat_int(2),
                    "kernel coefficient of order {j} is not a polynomial of degree {deg}"
                );
            }
            p
        })
        .collect()
}

fn table() -> &'static Mutex<Vec<Poly<Rational>>> {
    static TABLE: OnceLock<Mutex<Vec<Poly<Rational>>>> = OnceLock::new();
    TABLE.get_or_init(|| Mutex::new(generate_table(12)))
}

/// G_j⁰ as a polynomial in |n|, j ≥ −1.
pub fn kernel_poly(j: i64) -> Poly<Rational> {
    assert!(j >= -1, "kernel order below -1");
    let mut guard = table().lock().expect("kernel table lock");
    if (j + 1) as usize >= guard.len() {
        *guard = generate_table(j.max(2 * guard.len() as i64));
    }
    guard[(j + 1) as usize].clone()
}

/// G_j⁰(n); zero for j < −1.
pub fn g0_kernel(j: i64, n: i64) -> Rational {
    if j < -1 {
        return rat_int(0);
    }
    kernel_poly(j).eval(n.abs())
}

pub fn kernel_series(n: i64, max_order: i64) -> KernelSeries {
    KernelSeries { site: n, coefficients: (-1..=max_order).map(|j| g0_kernel(j, n)).collect() }
}

/// R₀(κ;n) in binary64.
pub fn r0_point(kappa: f64, n: i64) -> Result<f64> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::DomainError(format!("kappa must be positive, got {kappa}")));
    }
    let s = (1.0 + kappa * kappa / 4.0).sqrt();
    let t = 1.0 / (s + kappa / 2.0);
    Ok(t.powi(2 * n.unsigned_abs() as i32) / (2.0 * kappa * s))
}

/// Spectral parameter κ = u − 1/u for a rational u > 1.
pub fn kappa_from_parameter(u: &Rational) -> Rational {
    u - u.recip()
}

/// Rational u > 1 with u − 1/u = κ given rational κ > 0 is usually irrational;
/// this picks u = 1 + κ/2, whose κ(u) agrees with κ to second order.
pub fn parameter_near(kappa: &Rational) -> Rational {
    rat_int(1) + kappa / rat_int(2)
}

/// R₀(κ;n) exactly at κ = u − 1/u, where s = (u² + 1)/(2u) and s − κ/2 = 1/u.
pub fn r0_at_parameter(u: &Rational, n: i64) -> Rational {
    let kappa = kappa_from_parameter(u);
    let s = (u * u + rat_int(1)) / (rat_int(2) * u);
    let t = u.recip();
    num_traits::pow(t, 2 * n.unsigned_abs() as usize) / (rat_int(2) * kappa * s)
}

/// (G_j⁰ x)[n] = Σ_k G_j⁰(|n − k|) x[k] for compact x.
pub fn apply_g0<T: Field>(j: i64, x: &CompactSequence<T>) -> PolyTailSequence<T> {
    let Some((s0, s1)) = x.support_range() else { return PolyTailSequence::zero() };
    if j < -1 {
        return PolyTailSequence::zero();
    }
    let g = kernel_poly(j).convert(T::from_rational);
    let g_reflected = g.reflected();
    let mut right = Poly::zero();
    let mut left = Poly::zero();
    for (k, v) in x.iter() {
        right = right.add(&g.shifted(-k).scale(v));
        left = left.add(&g_reflected.shifted(-k).scale(v));
    }
    PolyTailSequence::from_fn(s0, s1, left, right, |n| {
        x.iter().fold(T::zero(), |acc, (k, v)| acc + v.clone() * g.eval((n - k).abs()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_spot_values() {
        assert_eq!(g0_kernel(2, 2), rational(-1, 2));
        assert_eq!(g0_kernel(-1, 7), rational(1, 2));
        assert_eq!(g0_kernel(3, 0), rational(3, 256));
    }

    #[test]
    fn point_values() {
        assert!((r0_point(1.0, 0).unwrap() - 0.447_213_595_5).abs() < 1e-9);
        assert!((r0_point(1.0, 1).unwrap() - 0.170_820_393_2).abs() < 1e-9);
        assert!(r0_point(0.0, 0).is_err());
    }

    #[test]
    fn parameter_form_matches_closed_form() {
        let u = rational(5, 4);
        let kappa = Field::to_f64(&kappa_from_parameter(&u));
        for n in [0, 1, 3] {
            let exact = Field::to_f64(&r0_at_parameter(&u, n));
            assert!((exact - r0_point(kappa, n).unwrap()).abs() < 1e-14);
        }
    }

    #[test]
    fn g0_of_dipole_is_sigma() {
        let x = CompactSequence::new([(1, rat_int(1)), (-1, rat_int(-1))]);
        let y = apply_g0(0, &x);
        for n in -10..=10 {
            assert_eq!(y.eval(n), rat_int(n.signum()));
        }
    }
}
