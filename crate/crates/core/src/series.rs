//! Truncated matrix Laurent series in κ and their inversion by repeated
//! reduction to the kernel of the leading coefficient.

use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::{orthogonalize, Matrix};

pub use crate::matrix::{pseudo_inverse, Pseudoinverse};

/// Σ_{j=lo}^{hi} κ^j C_j + O(κ^{hi+1}). Orders below `lo` are zero; orders
/// above `hi` are unknown.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixLaurentSeries<T> {
    dim: usize,
    lo: i64,
    coeffs: Vec<Matrix<T>>,
}

impl<T: Field> MatrixLaurentSeries<T> {
    /// Series with coefficients for orders lo, lo+1, ...; the last supplied
    /// order is the valid truncation order.
    pub fn new(dim: usize, lo: i64, coeffs: Vec<Matrix<T>>) -> Self {
        MatrixLaurentSeries { dim, lo, coeffs }
    }

    /// Series known through `hi` with every coefficient zero.
    pub fn zero(dim: usize, lo: i64, hi: i64) -> Self {
        let n = (hi - lo + 1).max(0) as usize;
        Self::new(dim, lo, vec![Matrix::zeros(dim, dim); n])
    }

    pub fn constant(m: Matrix<T>, hi: i64) -> Self {
        let dim = m.rows();
        let mut coeffs = vec![m];
        coeffs.extend((1..=hi).map(|_| Matrix::zeros(dim, dim)));
        Self::new(dim, 0, coeffs)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest order whose coefficient is known.
    pub fn valid_through(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }

    pub fn coeff(&self, j: i64) -> Result<Matrix<T>> {
        if j < self.lo {
            Ok(Matrix::zeros(self.dim, self.dim))
        } else if j > self.valid_through() {
            Err(Error::TruncationTooShort { requested: j, valid: self.valid_through() })
        } else {
            Ok(self.coeffs[(j - self.lo) as usize].clone())
        }
    }

    fn coeff_ref(&self, j: i64) -> Option<&Matrix<T>> {
        if j < self.lo || j > self.valid_through() {
            None
        } else {
            Some(&self.coeffs[(j - self.lo) as usize])
        }
    }

    /// Same series stored from order 0 upward; requires lo ≥ 0.
    pub fn padded_from_zero(&self) -> Self {
        assert!(self.lo >= 0, "padding a series with negative orders");
        let mut coeffs: Vec<Matrix<T>> = (0..self.lo).map(|_| Matrix::zeros(self.dim, self.dim)).collect();
        coeffs.extend(self.coeffs.iter().cloned());
        Self::new(self.dim, 0, coeffs)
    }

    /// Truncates to orders ≤ hi.
    pub fn truncated(&self, hi: i64) -> Self {
        let keep = (hi - self.lo + 1).clamp(0, self.coeffs.len() as i64) as usize;
        Self::new(self.dim, self.lo, self.coeffs[..keep].to_vec())
    }

    /// κ^k times the series.
    pub fn shift(&self, k: i64) -> Self {
        Self::new(self.dim, self.lo + k, self.coeffs.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.valid_through().min(other.valid_through());
        let coeffs = (lo..=hi)
            .map(|j| {
                let a = self.coeff_ref(j).cloned().unwrap_or_else(|| Matrix::zeros(self.dim, self.dim));
                let b = other.coeff_ref(j).cloned().unwrap_or_else(|| Matrix::zeros(self.dim, self.dim));
                a.add(&b)
            })
            .collect();
        Self::new(self.dim, lo, coeffs)
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.dim, self.lo, self.coeffs.iter().map(|m| m.scale(c)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Product; valid through min(hi₁ + lo₂, hi₂ + lo₁).
    pub fn mul(&self, other: &Self) -> Self {
        let lo = self.lo + other.lo;
        let hi = (self.valid_through() + other.lo).min(other.valid_through() + self.lo);
        let coeffs = (lo..=hi)
            .map(|j| {
                let mut acc = Matrix::zeros(self.dim, other.dim);
                for i in self.lo..=j - other.lo {
                    if let (Some(a), Some(b)) = (self.coeff_ref(i), other.coeff_ref(j - i)) {
                        acc = acc.add(&a.mul(b));
                    }
                }
                acc
            })
            .collect();
        Self::new(self.dim, lo, coeffs)
    }

    pub fn left_mul(&self, m: &Matrix<T>) -> Self {
        Self::new(self.dim, self.lo, self.coeffs.iter().map(|c| m.mul(c)).collect())
    }

    pub fn right_mul(&self, m: &Matrix<T>) -> Self {
        Self::new(self.dim, self.lo, self.coeffs.iter().map(|c| c.mul(m)).collect())
    }

    /// Inverse of a power series whose leading coefficient is invertible on
    /// the range of `pi`, given that inverse as `lead_inv` (zero off the
    /// range). The result lives on the range of `pi`.
    fn neumann_inverse(&self, lead_inv: &Matrix<T>) -> Self {
        let n = self.coeffs.len();
        let mut out: Vec<Matrix<T>> = Vec::with_capacity(n);
        out.push(lead_inv.clone());
        for k in 1..n {
            let mut acc = Matrix::zeros(self.dim, self.dim);
            for i in 1..=k {
                acc = acc.add(&self.coeffs[i].mul(&out[k - i]));
            }
            out.push(lead_inv.mul(&acc).neg());
        }
        Self::new(self.dim, -self.lo, out)
    }

    /// Inverse when the leading coefficient is invertible.
    pub fn inverse(&self) -> Result<Self> {
        let lead = self.coeffs.first().ok_or(Error::TruncationTooShort {
            requested: self.lo,
            valid: self.valid_through(),
        })?;
        Ok(self.neumann_inverse(&lead.inverse()?))
    }
}

/// Inverse of a matrix on the range of the orthogonal projection `pi`, where
/// it is known to be invertible; zero on the complement.
fn inverse_on_range<T: Field>(a: &Matrix<T>, pi: &Matrix<T>) -> Result<Matrix<T>> {
    let complement = Matrix::identity(pi.rows()).sub(pi);
    Ok(a.add(&complement).inverse()?.sub(&complement))
}

/// Result of one reduction step applied to A(κ) = A₀ + κÃ₁(κ) on the range
/// of a projection Π.
#[derive(Clone, Debug)]
pub struct JnStep<T> {
    /// Projection onto ker A₀ within the range of Π.
    pub q: Matrix<T>,
    /// (Q + A(κ))⁻¹ on the range of Π.
    pub q_plus_a_inv: MatrixLaurentSeries<T>,
    /// Reduced series a(κ) on the range of Q.
    pub a: MatrixLaurentSeries<T>,
}

/// Reduction step on the range of `pi` (pass the identity for the whole
/// space): Q projects onto ker A₀, and
/// a(κ) = Σ_j (−κ)^j Q Ã₁ [(Q + A₀)⁻¹ Ã₁]^j Q, so that
/// A⁻¹ = (Q + A)⁻¹ + κ⁻¹ (Q + A)⁻¹ a† (Q + A)⁻¹.
pub fn jn_step_on<T: Field>(series: &MatrixLaurentSeries<T>, pi: &Matrix<T>) -> Result<JnStep<T>> {
    if series.lo() < 0 {
        return Err(Error::DomainError("series has negative orders".into()));
    }
    let series = &series.padded_from_zero();
    let dim = series.dim();
    let a0 = series.coeff(0)?;
    if !a0.is_symmetric() {
        return Err(Error::NotSelfAdjoint);
    }
    let range_basis = orthogonalize(&column_basis(pi)?);
    let b = Matrix::from_columns(dim, &range_basis);
    let restricted = b.transpose().mul(&a0).mul(&b);
    let kernel: Vec<Vec<T>> = restricted.nullspace()?.iter().map(|k| b.mul_vec(k)).collect();
    let q = Matrix::projection_onto(dim, &orthogonalize(&kernel))?;
    let x = inverse_on_range(&q.add(&a0), pi)?;
    let mut shifted = series.clone();
    shifted.coeffs[0] = q.add(&a0);
    let q_plus_a_inv = shifted.neumann_inverse(&x);
    let hi = series.valid_through() - 1;
    let tail: Vec<Matrix<T>> = (1..=series.valid_through()).map(|j| series.coeff(j)).collect::<Result<_>>()?;
    let a_tilde = MatrixLaurentSeries::new(dim, 0, tail);
    let y = a_tilde.left_mul(&x).shift(1).scale(&-T::one());
    let mut geometric = MatrixLaurentSeries::constant(Matrix::identity(dim), hi);
    let mut power = MatrixLaurentSeries::constant(Matrix::identity(dim), hi);
    for _ in 0..=hi.max(0) {
        power = power.mul(&y).truncated(hi);
        geometric = geometric.add(&power);
    }
    let a = a_tilde.mul(&geometric).truncated(hi).left_mul(&q).right_mul(&q);
    Ok(JnStep { q, q_plus_a_inv, a })
}

/// Reduction step on the whole space.
pub fn jn_step<T: Field>(series: &MatrixLaurentSeries<T>) -> Result<JnStep<T>> {
    jn_step_on(series, &Matrix::identity(series.dim()))
}

fn column_basis<T: Field>(pi: &Matrix<T>) -> Result<Vec<Vec<T>>> {
    Matrix::identity(pi.rows()).sub(pi).nullspace()
}

/// Outcome of a Laurent inversion with the reduction history.
#[derive(Clone, Debug)]
pub struct LaurentInverse<T> {
    pub series: MatrixLaurentSeries<T>,
    /// Dimension of the leading kernel at each reduction level.
    pub kernel_dims: Vec<usize>,
}

impl<T: Field> LaurentInverse<T> {
    /// Number of reductions with a nontrivial leading kernel.
    pub fn depth(&self) -> usize {
        self.kernel_dims.iter().filter(|&&d| d > 0).count()
    }
}

fn invert_power_series<T: Field>(
    series: &MatrixLaurentSeries<T>,
    pi: &Matrix<T>,
    depth: usize,
    max_depth: usize,
    dims: &mut Vec<usize>,
) -> Result<MatrixLaurentSeries<T>> {
    if depth > max_depth {
        return Err(Error::DepthExceeded(max_depth));
    }
    let step = jn_step_on(series, pi)?;
    let kdim = step.q.rank()?;
    dims.push(kdim);
    if kdim == 0 {
        return Ok(step.q_plus_a_inv);
    }
    if step.a.valid_through() < 0 {
        return Err(Error::TruncationTooShort { requested: 0, valid: step.a.valid_through() });
    }
    let a_inv = invert_power_series(&step.a, &step.q, depth + 1, max_depth, dims)?;
    let correction = step.q_plus_a_inv.mul(&a_inv).mul(&step.q_plus_a_inv).shift(-1);
    Ok(step.q_plus_a_inv.add(&correction))
}

/// Inverse of M(κ) = Σ_{j≥−1} κ^j M_j by reducing κM(κ).
pub fn invert_laurent_with_history<T: Field>(
    m: &MatrixLaurentSeries<T>,
    max_depth: usize,
) -> Result<LaurentInverse<T>> {
    if m.lo() < -1 {
        return Err(Error::DomainError("series starts below order -1".into()));
    }
    let dim = m.dim();
    let mut dims = Vec::new();
    if dim == 0 {
        return Ok(LaurentInverse { series: MatrixLaurentSeries::zero(0, 1, m.valid_through() + 2), kernel_dims: dims });
    }
    let padded = m.shift(1).padded_from_zero();
    let inv = invert_power_series(&padded, &Matrix::identity(dim), 0, max_depth, &mut dims)?;
    Ok(LaurentInverse { series: inv.shift(1), kernel_dims: dims })
}

pub fn invert_laurent<T: Field>(m: &MatrixLaurentSeries<T>, max_depth: usize) -> Result<MatrixLaurentSeries<T>> {
    Ok(invert_laurent_with_history(m, max_depth)?.series)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rat_int, Rational};

    fn scalar(values: &[i64], lo: i64) -> MatrixLaurentSeries<Rational> {
        MatrixLaurentSeries::new(1, lo, values.iter().map(|&v| Matrix::from_rows(vec![vec![rat_int(v)]])).collect())
    }

    #[test]
    fn kappa_inverts_to_inverse_kappa() {
        let a = scalar(&[0, 1, 0, 0], 0);
        let step = jn_step(&a).unwrap();
        assert_eq!(step.q, Matrix::identity(1));
        assert_eq!(step.a.coeff(0).unwrap(), Matrix::identity(1));
    }

    #[test]
    fn product_truncation_is_conservative() {
        let a = scalar(&[1, 2, 3], 0);
        let b = scalar(&[1, 1], -1);
        let c = a.mul(&b);
        assert_eq!(c.lo(), -1);
        assert_eq!(c.valid_through(), 0);
        assert!(matches!(c.coeff(1), Err(Error::TruncationTooShort { .. })));
    }
}
