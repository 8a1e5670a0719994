mod common;

use common::{exact_fixtures, random_potential, ri, rng};
use dtl::error::Error;
use dtl::field::{rat_int, rational, Field};
use dtl::kernel::{kappa_from_parameter, r0_at_parameter};
use dtl::matrix::Matrix;
use dtl::series::{invert_laurent, invert_laurent_with_history, jn_step, pseudo_inverse, MatrixLaurentSeries};
use dtl::threshold::build_m_coefficients;
use dtl::Rational;

fn m(rows: &[&[i64]]) -> Matrix<Rational> {
    Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| ri(x)).collect()).collect())
}

fn scalar(values: &[i64], lo: i64) -> MatrixLaurentSeries<Rational> {
    MatrixLaurentSeries::new(1, lo, values.iter().map(|&v| m(&[&[v]])).collect())
}

/// Σ κ^j C_j over the known orders.
fn evaluate(s: &MatrixLaurentSeries<Rational>, kappa: &Rational) -> Matrix<Rational> {
    (s.lo()..=s.valid_through()).fold(Matrix::zeros(s.dim(), s.dim()), |acc, j| {
        let p = if j < 0 { num_traits::pow(kappa.recip(), (-j) as usize) } else { num_traits::pow(kappa.clone(), j as usize) };
        acc.add(&s.coeff(j).unwrap().scale(&p))
    })
}

/// Checks M(κ)·M(κ)⁻¹ = I on every order the product determines.
fn assert_reconstructs(series: &MatrixLaurentSeries<Rational>, inverse: &MatrixLaurentSeries<Rational>) {
    let prod = series.mul(inverse);
    assert!(prod.valid_through() >= 0, "product determines no order");
    for j in prod.lo()..=prod.valid_through() {
        let expected = if j == 0 { Matrix::identity(series.dim()) } else { Matrix::zeros(series.dim(), series.dim()) };
        assert_eq!(prod.coeff(j).unwrap(), expected, "order {j}");
    }
    let prod = inverse.mul(series);
    for j in prod.lo()..=prod.valid_through() {
        let expected = if j == 0 { Matrix::identity(series.dim()) } else { Matrix::zeros(series.dim(), series.dim()) };
        assert_eq!(prod.coeff(j).unwrap(), expected, "order {j}");
    }
}

#[test]
fn pseudo_inverse_examples() {
    let p = pseudo_inverse(&m(&[&[0, 0], &[0, 2]])).unwrap();
    assert_eq!(p.dagger, Matrix::diagonal(&[ri(0), rational(1, 2)]));
    assert_eq!(p.kernel_projection, Matrix::diagonal(&[ri(1), ri(0)]));
    let p = pseudo_inverse(&Matrix::<Rational>::zeros(3, 3)).unwrap();
    assert!(p.dagger.is_zero());
    assert_eq!(p.kernel_projection, Matrix::identity(3));
    let p = pseudo_inverse(&m(&[&[1, 1], &[1, 1]])).unwrap();
    assert_eq!(p.dagger, Matrix::from_fn(2, 2, |_, _| rational(1, 4)));
    assert_eq!(pseudo_inverse(&m(&[&[1, 2], &[0, 1]])).unwrap_err(), Error::NotSelfAdjoint);
}

#[test]
fn pseudo_inverse_penrose_conditions() {
    let mut r = rng(1);
    for _ in 0..40 {
        let Some(pot) = random_potential(&mut r, 4, -3, 3) else { continue };
        let a = pot.dense_matrix(-3, 3);
        let p = pseudo_inverse(&a).unwrap();
        let d = &p.dagger;
        assert_eq!(a.mul(d).mul(&a), a);
        assert_eq!(d.mul(&a).mul(d), *d);
        assert!(a.mul(d).is_symmetric());
        assert_eq!(Matrix::identity(7).sub(&a.mul(d)), p.kernel_projection);
        assert_eq!(p.kernel_basis.len(), 7 - pot.dim());
    }
}

#[test]
fn jn_step_examples() {
    // A = κ: (Q + A)⁻¹ = 1/(1 + κ) forces a(κ) = 1/(1 + κ).
    let step = jn_step(&scalar(&[0, 1, 0, 0], 0)).unwrap();
    assert_eq!(step.q, Matrix::identity(1));
    assert_eq!(step.a.coeff(0).unwrap(), Matrix::identity(1));
    assert_eq!(step.a.coeff(1).unwrap(), m(&[&[-1]]));

    let diag = MatrixLaurentSeries::new(2, 0, vec![m(&[&[0, 0], &[0, 1]]), m(&[&[1, 0], &[0, 0]]), Matrix::zeros(2, 2)]);
    let step = jn_step(&diag).unwrap();
    assert_eq!(step.q, m(&[&[1, 0], &[0, 0]]));
    assert_eq!(step.a.coeff(0).unwrap(), m(&[&[1, 0], &[0, 0]]));

    // [[κ, κ], [κ, 1 + κ]]: inverse is κ⁻¹[[1 + κ, −κ], [−κ, κ]].
    let a = MatrixLaurentSeries::new(2, 0, vec![m(&[&[0, 0], &[0, 1]]), m(&[&[1, 1], &[1, 1]]), Matrix::zeros(2, 2), Matrix::zeros(2, 2)]);
    let inv = invert_laurent(&a.shift(-1), 3).unwrap().shift(-1);
    assert_eq!(inv.coeff(-1).unwrap(), m(&[&[1, 0], &[0, 0]]));
    assert_eq!(inv.coeff(0).unwrap(), m(&[&[1, -1], &[-1, 1]]));
    assert!(inv.coeff(1).unwrap().is_zero());
}

#[test]
fn kappa_identity_inverts_to_inverse_kappa() {
    let a = MatrixLaurentSeries::new(3, 0, vec![Matrix::<Rational>::zeros(3, 3), Matrix::identity(3), Matrix::zeros(3, 3), Matrix::zeros(3, 3)]);
    let inv = invert_laurent(&a.shift(-1), 2).unwrap().shift(-1);
    assert_eq!(inv.lo(), -1);
    assert_eq!(inv.coeff(-1).unwrap(), Matrix::identity(3));
    for j in 0..=inv.valid_through() {
        assert!(inv.coeff(j).unwrap().is_zero());
    }
}

#[test]
fn rank_one_site_potential_inverse_matches_closed_form() {
    // V = e₀: M(κ) = 1 + R₀(κ; 0). Compare with 1/M at exact rational κ.
    let pot = common::exact_fixture("b2_local_rank_one");
    let mc = build_m_coefficients(&pot, 6);
    let inv = invert_laurent(&mc.series(), 3).unwrap();
    assert_eq!(inv.coeff(1).unwrap(), m(&[&[2]]));
    assert_eq!(inv.coeff(2).unwrap(), m(&[&[-4]]));
    let order = inv.valid_through();
    let mut points = Vec::new();
    for k in 4..=12 {
        let u = rat_int(1) + rational(1, 1i64 << (k + 1));
        let kappa = kappa_from_parameter(&u);
        let exact = (rat_int(1) + r0_at_parameter(&u, 0)).recip();
        let rem = exact - evaluate(&inv, &kappa).get(0, 0).clone();
        points.push((Field::to_f64(&kappa).ln(), Field::to_f64(&rem).abs().ln()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    assert!(slope >= order as f64 + 0.8, "slope {slope} order {order}");
}

#[test]
fn fixture_inverses_reconstruct_identity() {
    for (name, pot) in exact_fixtures() {
        if pot.dim() == 0 {
            continue;
        }
        let mc = build_m_coefficients(&pot, 7);
        let history = invert_laurent_with_history(&mc.series(), 4).unwrap();
        assert!(history.depth() <= 3, "{name}: depth {}", history.depth());
        assert!(history.kernel_dims.windows(2).all(|w| w[1] <= w[0]), "{name}: {:?}", history.kernel_dims);
        assert!(history.series.lo() >= -2, "{name}: inverse of M starts at {}", history.series.lo());
        assert_reconstructs(&mc.series(), &history.series);
    }
}

#[test]
fn random_potential_inverses_reconstruct_identity() {
    let mut r = rng(21);
    let mut checked = 0;
    while checked < 60 {
        let Some(pot) = random_potential(&mut r, 3, -3, 3) else { continue };
        checked += 1;
        let mc = build_m_coefficients(&pot, 7);
        let history = invert_laurent_with_history(&mc.series(), 4).unwrap();
        assert!(history.depth() <= 3);
        assert!(history.kernel_dims.windows(2).all(|w| w[1] <= w[0]));
        assert_reconstructs(&mc.series(), &history.series);
    }
}

#[test]
fn depth_limit_is_reported() {
    let a = MatrixLaurentSeries::new(1, -1, vec![m(&[&[0]]), m(&[&[0]]), m(&[&[0]]), m(&[&[0]])]);
    assert!(invert_laurent(&a, 3).is_err());
    let low = MatrixLaurentSeries::new(1, -2, vec![m(&[&[1]])]);
    assert!(matches!(invert_laurent(&low, 3), Err(Error::DomainError(_))));
}
