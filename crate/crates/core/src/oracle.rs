//! Independent reference computations: the resolvent at finite κ, remainder
//! slopes of the expansion, direct null-space solving, and the threshold-4
//! reduction.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansion::ExpansionResult;
use crate::field::{rat_int, rational, Field, Rational};
use crate::kernel::{kappa_from_parameter, r0_at_parameter, r0_point};
use crate::matrix::Matrix;
use crate::potential::{FactorizedPotential, LocalOperator};
use crate::sequence::{CompactSequence, Poly, PolyTailSequence};
use crate::threshold::{classify, ThresholdReport};

const CONDITION_LIMIT: f64 = 1e12;

fn vectors_f64<T: Field>(pot: &FactorizedPotential<T>) -> Vec<Vec<(i64, f64)>> {
    (0..pot.dim())
        .map(|i| pot.vector(i).iter().map(|(n, v)| (n, Field::to_f64(v))).collect())
        .collect()
}

/// ⟨e_a, R(κ) e_b⟩ in binary64 from M(κ) = U + v*R₀(κ)v.
pub fn exact_resolvent_entry<T: Field>(pot: &FactorizedPotential<T>, kappa: f64, a: i64, b: i64) -> Result<f64> {
    let free = r0_point(kappa, a - b)?;
    let k = pot.dim();
    if k == 0 {
        return Ok(free);
    }
    let vs = vectors_f64(pot);
    let signs = pot.signs();
    let pair = |x: &[(i64, f64)], y: &[(i64, f64)]| -> Result<f64> {
        let mut acc = 0.0;
        for (n, p) in x {
            for (m, q) in y {
                acc += p * q * r0_point(kappa, n - m)?;
            }
        }
        Ok(acc)
    };
    let mut m = DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = pair(&vs[i], &vs[j])? + if i == j { Field::to_f64(&signs[i]) } else { 0.0 };
        }
    }
    let sv = m.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !cond.is_finite() || cond > CONDITION_LIMIT {
        return Err(Error::NearSingular(cond));
    }
    let column = |site: i64| -> Result<nalgebra::DVector<f64>> {
        let values = vs
            .iter()
            .map(|v| v.iter().map(|(n, x)| Ok(x * r0_point(kappa, site - n)?)).sum::<Result<f64>>())
            .collect::<Result<Vec<_>>>()?;
        Ok(nalgebra::DVector::from_vec(values))
    };
    let (ra, rb) = (column(a)?, column(b)?);
    let solved = m.lu().solve(&rb).ok_or(Error::Singular)?;
    Ok(free - ra.dot(&solved))
}

/// ⟨e_a, (H + κ²)⁻¹ e_b⟩ for H restricted to [−l, l] with Dirichlet cutoff.
pub fn truncated_resolvent_entry(op: &LocalOperator, kappa: f64, a: i64, b: i64, l: i64) -> Result<f64> {
    if a.abs() > l || b.abs() > l {
        return Err(Error::DomainError("sites outside the truncation window".into()));
    }
    let size = (2 * l + 1) as usize;
    let idx = |n: i64| (n + l) as usize;
    let mut h = DMatrix::zeros(size, size);
    for i in 0..size {
        h[(i, i)] = 2.0 + kappa * kappa;
        if i + 1 < size {
            h[(i, i + 1)] = -1.0;
            h[(i + 1, i)] = -1.0;
        }
    }
    for (&(p, q), v) in op.entries() {
        if p.abs() <= l && q.abs() <= l {
            h[(idx(p), idx(q))] += Field::to_f64(v);
        }
    }
    let mut rhs = nalgebra::DVector::zeros(size);
    rhs[idx(b)] = 1.0;
    let x = h.lu().solve(&rhs).ok_or(Error::Singular)?;
    Ok(x[idx(a)])
}

/// Resolvent entries in exact arithmetic at κ = u − 1/u, by a Woodbury
/// reduction onto the support of V.
pub struct ParameterResolvent {
    kappa: Rational,
    u: Rational,
    support: Vec<i64>,
    /// (1 + V R₀)⁻¹ V on the support.
    core: Matrix<Rational>,
}

impl ParameterResolvent {
    pub fn new(op: &LocalOperator, u: &Rational) -> Result<Self> {
        if *u <= rat_int(1) {
            return Err(Error::DomainError("parameter u must exceed 1".into()));
        }
        let support = op.support();
        let k = support.len();
        let v = Matrix::from_fn(k, k, |i, j| op.entry(support[i], support[j]));
        let r0 = Matrix::from_fn(k, k, |i, j| r0_at_parameter(u, support[i] - support[j]));
        let core = if k == 0 {
            Matrix::zeros(0, 0)
        } else {
            Matrix::identity(k).add(&v.mul(&r0)).inverse()?.mul(&v)
        };
        Ok(ParameterResolvent { kappa: kappa_from_parameter(u), u: u.clone(), support, core })
    }

    pub fn kappa(&self) -> &Rational {
        &self.kappa
    }

    pub fn entry(&self, a: i64, b: i64) -> Rational {
        let left: Vec<Rational> = self.support.iter().map(|&n| r0_at_parameter(&self.u, a - n)).collect();
        let right: Vec<Rational> = self.support.iter().map(|&n| r0_at_parameter(&self.u, n - b)).collect();
        let correction = if self.support.is_empty() { rat_int(0) } else { self.core.form(&left, &right) };
        r0_at_parameter(&self.u, a - b) - correction
    }
}

/// κ_k = u_k − 1/u_k with u_k = 1 + base·2⁻ᵏ/2, so κ_k = base·2⁻ᵏ to second
/// order while every resolvent value stays rational.
#[derive(Clone, Debug)]
pub struct KappaGrid {
    pub base: Rational,
    pub steps: usize,
}

impl Default for KappaGrid {
    fn default() -> Self {
        KappaGrid { base: rational(1, 16), steps: 10 }
    }
}

impl KappaGrid {
    pub fn parameters(&self) -> Vec<Rational> {
        (0..=self.steps)
            .map(|k| rat_int(1) + &self.base / Rational::from_integer(num_bigint::BigInt::from(2).pow(k as u32 + 1)))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeEntry {
    pub a: i64,
    pub b: i64,
    /// Least-squares slope of log|remainder| against log κ, absent when every
    /// remainder is below the residual floor.
    pub slope: Option<f64>,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlopeReport {
    pub order: i64,
    pub expected_slope: i64,
    pub threshold: f64,
    pub kappas: Vec<f64>,
    pub entries: Vec<SlopeEntry>,
    pub pass: bool,
}

const RESIDUAL_FLOOR: f64 = 1e-12;

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Fits the decay of R(κ) − Σ_{j ≤ N} κ^j G_j on every site pair.
pub fn remainder_slope<T: Field>(
    op: &LocalOperator,
    res: &ExpansionResult<T>,
    n: i64,
    sites: &[i64],
    grid: &KappaGrid,
) -> Result<SlopeReport> {
    if n > res.order {
        return Err(Error::TruncationTooShort { requested: n, valid: res.order });
    }
    if grid.steps + 1 < 6 {
        return Err(Error::DomainError("slope fits need at least 6 grid points".into()));
    }
    let coeffs = (res.j_min()..=n).map(|j| res.coefficient(j)).collect::<Result<Vec<_>>>()?;
    let resolvents =
        grid.parameters().iter().map(|u| ParameterResolvent::new(op, u)).collect::<Result<Vec<_>>>()?;
    let kappas: Vec<f64> = resolvents.iter().map(|r| Field::to_f64(r.kappa())).collect();
    let threshold = n as f64 + 0.8;
    let mut entries = Vec::new();
    for &a in sites {
        for &b in sites {
            let elements: Vec<T> = coeffs.iter().map(|c| c.element(a, b)).collect();
            let residuals: Vec<f64> = resolvents
                .iter()
                .map(|r| {
                    let kappa = T::from_rational(r.kappa());
                    let mut rem = T::from_rational(&r.entry(a, b));
                    for (c, g) in coeffs.iter().zip(&elements) {
                        let power = kappa_power(&kappa, c.order);
                        rem = rem - power * g.clone();
                    }
                    rem.magnitude()
                })
                .collect();
            let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
            let points: Vec<(f64, f64)> = kappas
                .iter()
                .zip(&residuals)
                .filter(|(_, r)| **r > 0.0)
                .map(|(k, r)| (k.ln(), r.ln()))
                .collect();
            let slope = (max_residual >= RESIDUAL_FLOOR && points.len() >= 6).then(|| least_squares_slope(&points));
            let pass = max_residual < RESIDUAL_FLOOR || slope.is_some_and(|s| s >= threshold);
            entries.push(SlopeEntry { a, b, slope, max_residual, pass });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(SlopeReport { order: n, expected_slope: n + 1, threshold, kappas, entries, pass })
}

fn kappa_power<T: Field>(kappa: &T, j: i64) -> T {
    let mut p = T::one();
    for _ in 0..j.unsigned_abs() {
        p = p * kappa.clone();
    }
    if j < 0 {
        T::one() / p
    } else {
        p
    }
}

/// Solutions of Hx = 0 with affine tails, found by exact linear algebra.
#[derive(Clone, Debug)]
pub struct NullspaceReport {
    pub dtilde: usize,
    pub d: usize,
    pub d0: usize,
    pub dqs: usize,
    pub basis: Vec<PolyTailSequence<Rational>>,
    /// Compactly supported solutions (a basis of E).
    pub eigen: Vec<PolyTailSequence<Rational>>,
}

/// Unknowns: core values on W = [min(supp V, 0) − 2, max(supp V, 0) + 2] and
/// the affine tails α + βn on each side; equations Hx[n] = 0 for n ∈ W plus
/// agreement of core and tails at the ends of W.
pub fn nullspace_oracle(op: &LocalOperator) -> Result<NullspaceReport> {
    let support = op.support();
    let lo = support.first().copied().unwrap_or(0).min(0) - 2;
    let hi = support.last().copied().unwrap_or(0).max(0) + 2;
    let width = (hi - lo + 1) as usize;
    let cols = width + 4;
    let (al, bl, ar, br) = (width, width + 1, width + 2, width + 3);
    let value = |n: i64| -> Vec<(usize, Rational)> {
        if n < lo {
            vec![(al, rat_int(1)), (bl, rat_int(n))]
        } else if n > hi {
            vec![(ar, rat_int(1)), (br, rat_int(n))]
        } else {
            vec![((n - lo) as usize, rat_int(1))]
        }
    };
    let mut rows: Vec<Vec<Rational>> = Vec::new();
    for n in lo..=hi {
        let mut row = vec![rat_int(0); cols];
        let mut add = |terms: Vec<(usize, Rational)>, c: Rational| {
            for (i, x) in terms {
                row[i] += x * c.clone();
            }
        };
        add(value(n), rat_int(2));
        add(value(n - 1), rat_int(-1));
        add(value(n + 1), rat_int(-1));
        for &m in &support {
            let v = op.entry(n, m);
            if !Field::is_zero(&v) {
                add(value(m), v);
            }
        }
        rows.push(row);
    }
    for (n, a, b) in [(lo, al, bl), (hi, ar, br)] {
        let mut row = vec![rat_int(0); cols];
        row[(n - lo) as usize] = rat_int(-1);
        row[a] = rat_int(1);
        row[b] = rat_int(n);
        rows.push(row);
    }
    let system = Matrix::from_rows(rows);
    let kernel = system.nullspace()?;
    let to_sequence = |x: &Vec<Rational>| {
        PolyTailSequence::from_parts(
            lo,
            x[..width].to_vec(),
            Poly::new(vec![x[al].clone(), x[bl].clone()]),
            Poly::new(vec![x[ar].clone(), x[br].clone()]),
        )
    };
    let basis: Vec<PolyTailSequence<Rational>> = kernel.iter().map(to_sequence).collect::<Result<_>>()?;
    // Dimension of the kernel vectors further constrained by linear conditions
    // on the tail coordinates.
    let restricted = |conditions: &[Vec<(usize, i64)>]| -> Result<Vec<Vec<Rational>>> {
        if kernel.is_empty() {
            return Ok(Vec::new());
        }
        let k = kernel.len();
        let c = Matrix::from_fn(conditions.len(), k, |i, j| {
            conditions[i].iter().fold(rat_int(0), |acc, (idx, w)| acc + kernel[j][*idx].clone() * rat_int(*w))
        });
        let combos = c.nullspace()?;
        Ok(combos
            .iter()
            .map(|w| (0..cols).map(|i| (0..k).fold(rat_int(0), |acc, j| acc + w[j].clone() * kernel[j][i].clone())).collect())
            .collect())
    };
    let bounded = restricted(&[vec![(bl, 1)], vec![(br, 1)]])?;
    let compact = restricted(&[vec![(bl, 1)], vec![(br, 1)], vec![(al, 1)], vec![(ar, 1)]])?;
    let quasi = restricted(&[vec![(al, 1), (ar, 1)], vec![(bl, 1), (br, 1)]])?;
    Ok(NullspaceReport {
        dtilde: basis.len(),
        d: bounded.len(),
        d0: compact.len(),
        dqs: quasi.len(),
        eigen: compact.iter().map(to_sequence).collect::<Result<_>>()?,
        basis,
    })
}

/// Threshold 4 of H₀ + V through threshold 0 of H₀ − V_J; the returned bases
/// are the reflected solutions, so original ones carry an extra (−1)ⁿ.
pub fn threshold4_analysis<T: Field>(pot: &FactorizedPotential<T>) -> Result<ThresholdReport<T>> {
    let mut report = classify(&pot.j_conjugate().negated())?;
    report.threshold = 4;
    report.alternating = true;
    Ok(report)
}

/// J(H₀ + V)J⁻¹x + (H₀ − V_J − 4)x for compact x; zero when the reflection
/// identity holds.
pub fn reflection_defect(op: &LocalOperator, x: &CompactSequence<Rational>) -> CompactSequence<Rational> {
    let h = |op: &LocalOperator, y: &CompactSequence<Rational>| -> CompactSequence<Rational> {
        let free = y.to_poly_tail().apply_h0().to_compact().expect("H0 keeps compact support");
        free.add(&op.apply(&y.to_poly_tail()))
    };
    let lhs = h(op, &x.alternated()).alternated();
    let op_j = op.alternated().negated();
    let rhs = h(&op_j, x).sub(&x.scale(&rat_int(4)));
    lhs.add(&rhs)
}
