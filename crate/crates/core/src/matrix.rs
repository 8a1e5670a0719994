//! Dense matrices over a [`Field`] with exact elimination, kernels,
//! projections, and pseudoinverses of self-adjoint matrices.

use crate::error::{Error, Result};
use crate::field::Field;

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub fn dot<T: Field>(x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
}

pub fn scale_vec<T: Field>(c: &T, x: &[T]) -> Vec<T> {
    x.iter().map(|a| c.clone() * a.clone()).collect()
}

pub fn add_vec<T: Field>(x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(a, b)| a.clone() + b.clone()).collect()
}

pub fn sub_vec<T: Field>(x: &[T], y: &[T]) -> Vec<T> {
    x.iter().zip(y).map(|(a, b)| a.clone() - b.clone()).collect()
}

pub fn max_abs<T: Field>(x: &[T]) -> f64 {
    x.iter().map(|a| a.magnitude()).fold(0.0, f64::max)
}

/// Gram-Schmidt without normalization. Vectors must be independent.
pub fn orthogonalize<T: Field>(vectors: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for u in &out {
            let c = dot(u, v) / dot(u, u);
            w = sub_vec(&w, &scale_vec(&c, u));
        }
        out.push(w);
    }
    out
}

impl<T: Field> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        Self::from_fn(r, c, |i, j| rows[i][j].clone())
    }

    pub fn from_columns(rows: usize, columns: &[Vec<T>]) -> Self {
        Self::from_fn(rows, columns.len(), |i, j| columns[j][i].clone())
    }

    pub fn diagonal(entries: &[T]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| if i == j { entries[i].clone() } else { T::zero() })
    }

    /// Outer product x yᵀ.
    pub fn outer(x: &[T], y: &[T]) -> Self {
        Self::from_fn(x.len(), y.len(), |i, j| x[i].clone() * y[j].clone())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn entries(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> Vec<T> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn columns(&self) -> Vec<Vec<T>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map(&self, f: impl Fn(&T) -> T) -> Self {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matrix product dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let idx = i * other.cols + j;
                    out.data[idx] = out.data[idx].clone() + a.clone() * b.clone();
                }
            }
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: add_vec(&self.data, &other.data),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: sub_vec(&self.data, &other.data),
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        self.map(|a| c.clone() * a.clone())
    }

    pub fn neg(&self) -> Self {
        self.map(|a| -a.clone())
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| dot(&self.data[i * self.cols..(i + 1) * self.cols], x))
            .collect()
    }

    /// Bilinear form xᵀ A y.
    pub fn form(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.mul_vec(y))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|a| a.is_zero())
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.data)
    }

    /// Exact zero test in exact mode, tolerance relative to `scale` otherwise.
    pub fn vanishes(&self, scale: f64) -> bool {
        if T::EXACT {
            self.is_zero()
        } else {
            self.max_abs() <= 1e-12 * scale.max(1.0)
        }
    }

    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.sub(&self.transpose()).vanishes(self.max_abs())
    }

    /// Row echelon reduction with complete pivoting. Returns the reduced
    /// matrix and the (row, column) pivots. Floating matrices stop after the
    /// rank decided from singular values.
    fn eliminate(&self) -> Result<(Self, Vec<usize>)> {
        let rank_limit = T::numeric_rank(self.rows, self.cols, &self.data)?;
        let mut m = self.clone();
        let mut pivots: Vec<usize> = Vec::new();
        let mut used = vec![false; self.cols];
        let limit = rank_limit.unwrap_or(self.rows.min(self.cols));
        for step in 0..limit {
            let mut best: Option<(usize, usize, f64)> = None;
            for i in step..m.rows {
                for j in 0..m.cols {
                    if used[j] {
                        continue;
                    }
                    let a = m.get(i, j);
                    if a.is_zero() {
                        continue;
                    }
                    let mag = a.magnitude();
                    let better = match best {
                        None => true,
                        Some((_, _, bm)) => mag > bm,
                    };
                    if better {
                        best = Some((i, j, mag));
                    }
                }
            }
            let Some((pi, pj, _)) = best else { break };
            if pi != step {
                for j in 0..m.cols {
                    m.data.swap(pi * m.cols + j, step * m.cols + j);
                }
            }
            let inv = T::one() / m.get(step, pj).clone();
            for j in 0..m.cols {
                let v = m.get(step, j).clone() * inv.clone();
                m.set(step, j, v);
            }
            m.set(step, pj, T::one());
            for i in 0..m.rows {
                if i == step {
                    continue;
                }
                let f = m.get(i, pj).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..m.cols {
                    let v = m.get(i, j).clone() - f.clone() * m.get(step, j).clone();
                    m.set(i, j, v);
                }
                m.set(i, pj, T::zero());
            }
            used[pj] = true;
            pivots.push(pj);
        }
        Ok((m, pivots))
    }

    /// Basis of the right kernel { x : A x = 0 }.
    pub fn nullspace(&self) -> Result<Vec<Vec<T>>> {
        let (m, pivots) = self.eliminate()?;
        let mut is_pivot = vec![false; self.cols];
        for &p in &pivots {
            is_pivot[p] = true;
        }
        let mut basis = Vec::new();
        for free in (0..self.cols).filter(|&j| !is_pivot[j]) {
            let mut x = vec![T::zero(); self.cols];
            x[free] = T::one();
            for (row, &p) in pivots.iter().enumerate() {
                x[p] = -m.get(row, free).clone();
            }
            basis.push(x);
        }
        Ok(basis)
    }

    pub fn rank(&self) -> Result<usize> {
        Ok(self.cols - self.nullspace()?.len())
    }

    pub fn inverse(&self) -> Result<Self> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square matrix");
        let n = self.rows;
        let mut aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self.get(i, j).clone()
            } else if j - n == i {
                T::one()
            } else {
                T::zero()
            }
        });
        for col in 0..n {
            let mut best: Option<(usize, f64)> = None;
            for i in col..n {
                let a = aug.get(i, col);
                if !a.is_zero() && best.map_or(true, |(_, m)| a.magnitude() > m) {
                    best = Some((i, a.magnitude()));
                }
            }
            let Some((pi, _)) = best else { return Err(Error::Singular) };
            if pi != col {
                for j in 0..2 * n {
                    aug.data.swap(pi * 2 * n + j, col * 2 * n + j);
                }
            }
            let inv = T::one() / aug.get(col, col).clone();
            for j in 0..2 * n {
                let v = aug.get(col, j).clone() * inv.clone();
                aug.set(col, j, v);
            }
            for i in 0..n {
                if i == col {
                    continue;
                }
                let f = aug.get(i, col).clone();
                if f.is_zero() {
                    continue;
                }
                for j in 0..2 * n {
                    let v = aug.get(i, j).clone() - f.clone() * aug.get(col, j).clone();
                    aug.set(i, j, v);
                }
            }
        }
        Ok(Self::from_fn(n, n, |i, j| aug.get(i, n + j).clone()))
    }

    /// Solves A x = b for invertible A.
    pub fn solve(&self, b: &[T]) -> Result<Vec<T>> {
        Ok(self.inverse()?.mul_vec(b))
    }

    /// Orthogonal projection onto the span of independent `basis` vectors,
    /// B (BᵀB)⁻¹ Bᵀ.
    pub fn projection_onto(dim: usize, basis: &[Vec<T>]) -> Result<Self> {
        if basis.is_empty() {
            return Ok(Self::zeros(dim, dim));
        }
        let b = Self::from_columns(dim, basis);
        let bt = b.transpose();
        let gram = bt.mul(&b);
        Ok(b.mul(&gram.inverse()?).mul(&bt))
    }

    /// Quadratic-form pivots of a symmetric matrix by LDLᵀ without pivoting
    /// reordering; returns `None` if a zero pivot appears.
    pub fn ldl_pivots(&self) -> Option<Vec<T>> {
        let n = self.rows;
        let mut a = self.clone();
        let mut pivots = Vec::with_capacity(n);
        for k in 0..n {
            let p = a.get(k, k).clone();
            if p.is_zero() {
                return None;
            }
            for i in k + 1..n {
                let f = a.get(i, k).clone() / p.clone();
                for j in k + 1..n {
                    let v = a.get(i, j).clone() - f.clone() * a.get(k, j).clone();
                    a.set(i, j, v);
                }
            }
            pivots.push(p);
        }
        Some(pivots)
    }
}

/// Moore-Penrose data for a self-adjoint matrix.
#[derive(Clone, Debug)]
pub struct Pseudoinverse<T> {
    pub matrix: Matrix<T>,
    /// Mutually orthogonal (not unit-length) kernel basis.
    pub kernel_basis: Vec<Vec<T>>,
    pub kernel_projection: Matrix<T>,
    pub dagger: Matrix<T>,
}

/// Pseudoinverse of a self-adjoint matrix via A† = (A + Π)⁻¹ − Π with Π the
/// kernel projection.
pub fn pseudo_inverse<T: Field>(a: &Matrix<T>) -> Result<Pseudoinverse<T>> {
    if !a.is_symmetric() {
        return Err(Error::NotSelfAdjoint);
    }
    let n = a.rows();
    let kernel_basis = orthogonalize(&a.nullspace()?);
    let kernel_projection = Matrix::projection_onto(n, &kernel_basis)?;
    let dagger = a.add(&kernel_projection).inverse()?.sub(&kernel_projection);
    Ok(Pseudoinverse { matrix: a.clone(), kernel_basis, kernel_projection, dagger })
}
