//! Sequences on the integer lattice: polynomials, compactly supported
//! sequences, and sequences with polynomial tails.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::Field;

/// Polynomial in the site variable n, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T> {
    coeffs: Vec<T>,
}

impl<T: Field> Poly<T> {
    pub fn new(mut coeffs: Vec<T>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: T) -> Self {
        Self::new(vec![c])
    }

    /// The polynomial n.
    pub fn monomial_n() -> Self {
        Self::new(vec![T::zero(), T::one()])
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> T {
        self.coeffs.get(k).cloned().unwrap_or_else(T::zero)
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn eval(&self, n: i64) -> T {
        let x = T::from_i64(n);
        self.coeffs
            .iter()
            .rev()
            .fold(T::zero(), |acc, c| acc * x.clone() + c.clone())
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..len).map(|k| self.coeff(k) - other.coeff(k)).collect())
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.coeffs.iter().map(|a| c.clone() * a.clone()).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut out = vec![T::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = out[i + j].clone() + a.clone() * b.clone();
            }
        }
        Self::new(out)
    }

    /// The polynomial n ↦ p(n + k).
    pub fn shifted(&self, k: i64) -> Self {
        let lin = Poly::new(vec![T::from_i64(k), T::one()]);
        self.coeffs
            .iter()
            .rev()
            .fold(Self::zero(), |acc, c| acc.mul(&lin).add(&Self::constant(c.clone())))
    }

    /// The polynomial n ↦ p(−n).
    pub fn reflected(&self) -> Self {
        Self::new(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| if k % 2 == 1 { -c.clone() } else { c.clone() })
                .collect(),
        )
    }

    /// n ↦ −(p(n+1) + p(n−1) − 2p(n)).
    pub fn negative_second_difference(&self) -> Self {
        let two = T::from_i64(2);
        self.shifted(1)
            .add(&self.shifted(-1))
            .sub(&self.scale(&two))
            .scale(&-T::one())
    }

    pub fn convert<S: Field>(&self, f: impl Fn(&T) -> S) -> Poly<S> {
        Poly::new(self.coeffs.iter().map(f).collect())
    }
}

/// Finitely supported sequence; stored zeros are dropped.
#[derive(Clone, Debug, PartialEq)]
pub struct CompactSequence<T> {
    values: BTreeMap<i64, T>,
}

impl<T: Field> CompactSequence<T> {
    pub fn new(values: impl IntoIterator<Item = (i64, T)>) -> Self {
        let mut map = BTreeMap::new();
        for (n, v) in values {
            let e = map.entry(n).or_insert_with(T::zero);
            *e = e.clone() + v;
        }
        map.retain(|_, v: &mut T| !v.is_zero());
        CompactSequence { values: map }
    }

    pub fn zero() -> Self {
        CompactSequence { values: BTreeMap::new() }
    }

    pub fn delta(k: i64) -> Self {
        Self::new([(k, T::one())])
    }

    pub fn get(&self, n: i64) -> T {
        self.values.get(&n).cloned().unwrap_or_else(T::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &T)> {
        self.values.iter().map(|(k, v)| (*k, v))
    }

    pub fn support_range(&self) -> Option<(i64, i64)> {
        Some((*self.values.keys().next()?, *self.values.keys().next_back()?))
    }

    pub fn is_zero(&self) -> bool {
        self.values.is_empty()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dot(&self, other: &Self) -> T {
        self.iter()
            .fold(T::zero(), |acc, (n, v)| acc + v.clone() * other.get(n))
    }

    pub fn scale(&self, c: &T) -> Self {
        Self::new(self.iter().map(|(n, v)| (n, c.clone() * v.clone())))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.iter().chain(other.iter()).map(|(n, v)| (n, v.clone())))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-T::one()))
    }

    /// Entries multiplied by (−1)^n.
    pub fn alternated(&self) -> Self {
        Self::new(self.iter().map(|(n, v)| (n, if n % 2 != 0 { -v.clone() } else { v.clone() })))
    }

    pub fn to_poly_tail(&self) -> PolyTailSequence<T> {
        match self.support_range() {
            None => PolyTailSequence::zero(),
            Some((lo, hi)) => PolyTailSequence::from_parts(
                lo - 1,
                (lo - 1..=hi + 1).map(|n| self.get(n)).collect(),
                Poly::zero(),
                Poly::zero(),
            )
            .expect("compact sequence has consistent zero tails"),
        }
    }

    pub fn convert<S: Field>(&self, f: impl Fn(&T) -> S) -> CompactSequence<S> {
        CompactSequence::new(self.iter().map(|(n, v)| (n, f(v))))
    }
}

/// Sequence equal to `left(n)` for n ≤ lo, `right(n)` for n ≥ hi, and to the
/// stored core on [lo, hi].
#[derive(Clone, Debug, PartialEq)]
pub struct PolyTailSequence<T> {
    lo: i64,
    core: Vec<T>,
    left: Poly<T>,
    right: Poly<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialKind {
    One,
    Sigma,
    N,
    AbsN,
    Delta(i64),
}

impl<T: Field> PolyTailSequence<T> {
    /// Builds a sequence from its window start, core values, and tails,
    /// checking that the window ends agree with the tails.
    pub fn from_parts(lo: i64, core: Vec<T>, left: Poly<T>, right: Poly<T>) -> Result<Self> {
        if core.is_empty() {
            return Err(Error::DomainError("empty core window".into()));
        }
        let hi = lo + core.len() as i64 - 1;
        let check = |a: &T, b: &T| {
            if T::EXACT {
                a == b
            } else {
                (a.clone() - b.clone()).magnitude() <= 1e-20 * (1.0 + a.magnitude())
            }
        };
        if !check(&core[0], &left.eval(lo)) || !check(&core[core.len() - 1], &right.eval(hi)) {
            return Err(Error::DomainError("core disagrees with tails at window ends".into()));
        }
        let mut s = PolyTailSequence { lo, core, left, right };
        s.normalize();
        Ok(s)
    }

    /// Builds a sequence from tails and a value function used strictly
    /// inside [lo, hi]; the window ends take tail values.
    pub fn from_fn(lo: i64, hi: i64, left: Poly<T>, right: Poly<T>, f: impl Fn(i64) -> T) -> Self {
        // A single site cannot carry two different tail values.
        let hi = if hi <= lo && left.eval(lo) != right.eval(lo) { lo + 1 } else { hi.max(lo) };
        let core = (lo..=hi)
            .map(|n| {
                if n == lo {
                    left.eval(n)
                } else if n == hi {
                    right.eval(n)
                } else {
                    f(n)
                }
            })
            .collect();
        let mut s = PolyTailSequence { lo, core, left, right };
        if hi == lo {
            s.core = vec![s.left.eval(lo)];
        }
        s.normalize();
        s
    }

    pub fn zero() -> Self {
        PolyTailSequence { lo: 0, core: vec![T::zero()], left: Poly::zero(), right: Poly::zero() }
    }

    pub fn special(kind: SpecialKind) -> Self {
        let p = |c: Vec<i64>| Poly::new(c.into_iter().map(T::from_i64).collect());
        match kind {
            SpecialKind::One => Self::from_fn(0, 0, p(vec![1]), p(vec![1]), |_| T::one()),
            SpecialKind::N => Self::from_fn(0, 0, p(vec![0, 1]), p(vec![0, 1]), |_| T::zero()),
            SpecialKind::AbsN => Self::from_fn(0, 0, p(vec![0, -1]), p(vec![0, 1]), |_| T::zero()),
            SpecialKind::Sigma => Self::from_fn(-1, 1, p(vec![-1]), p(vec![1]), |_| T::zero()),
            SpecialKind::Delta(k) => CompactSequence::delta(k).to_poly_tail(),
        }
    }

    /// Drops window points that the tails already describe.
    fn normalize(&mut self) {
        let mut start = 0;
        while self.core.len() - start > 1 && self.core[start + 1] == self.left.eval(self.lo + start as i64 + 1) {
            start += 1;
        }
        if start > 0 {
            self.core.drain(..start);
            self.lo += start as i64;
        }
        while self.core.len() > 1 {
            let n = self.core.len();
            if self.core[n - 2] == self.right.eval(self.lo + n as i64 - 2) {
                self.core.pop();
            } else {
                break;
            }
        }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.core.len() as i64 - 1
    }

    pub fn left_tail(&self) -> &Poly<T> {
        &self.left
    }

    pub fn right_tail(&self) -> &Poly<T> {
        &self.right
    }

    pub fn eval(&self, n: i64) -> T {
        if n <= self.lo {
            self.left.eval(n)
        } else if n >= self.hi() {
            self.right.eval(n)
        } else {
            self.core[(n - self.lo) as usize].clone()
        }
    }

    pub fn values(&self, from: i64, to: i64) -> Vec<T> {
        (from..=to).map(|n| self.eval(n)).collect()
    }

    pub fn is_compact(&self) -> bool {
        self.left.is_zero() && self.right.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.is_compact() && self.core.iter().all(|c| c.is_zero())
    }

    /// Largest tail degree, `None` when both tails vanish.
    pub fn tail_degree(&self) -> Option<usize> {
        self.left.degree().max(self.right.degree())
    }

    pub fn to_compact(&self) -> Option<CompactSequence<T>> {
        self.is_compact()
            .then(|| CompactSequence::new((self.lo..=self.hi()).map(|n| (n, self.eval(n)))))
    }

    /// a·self + b·other.
    pub fn combine(&self, a: &T, other: &Self, b: &T) -> Self {
        let lo = self.lo.min(other.lo);
        let hi = self.hi().max(other.hi());
        let left = self.left.scale(a).add(&other.left.scale(b));
        let right = self.right.scale(a).add(&other.right.scale(b));
        Self::from_fn(lo, hi, left, right, |n| {
            a.clone() * self.eval(n) + b.clone() * other.eval(n)
        })
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(&T::one(), other, &T::one())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(&T::one(), other, &-T::one())
    }

    pub fn scale(&self, c: &T) -> Self {
        PolyTailSequence {
            lo: self.lo,
            core: self.core.iter().map(|x| c.clone() * x.clone()).collect(),
            left: self.left.scale(c),
            right: self.right.scale(c),
        }
    }

    /// Free lattice Laplacian (H₀x)[n] = −(x[n+1] + x[n−1] − 2x[n]).
    pub fn apply_h0(&self) -> Self {
        let two = T::from_i64(2);
        Self::from_fn(
            self.lo - 1,
            self.hi() + 1,
            self.left.negative_second_difference(),
            self.right.negative_second_difference(),
            |n| two.clone() * self.eval(n) - self.eval(n + 1) - self.eval(n - 1),
        )
    }

    /// Σ_n x[n] y[n]; one operand must have vanishing tails.
    pub fn pair(&self, other: &Self) -> Result<T> {
        let (compact, full) = if self.is_compact() {
            (self, other)
        } else if other.is_compact() {
            (other, self)
        } else {
            return Err(Error::NonSummable);
        };
        Ok((compact.lo..=compact.hi())
            .fold(T::zero(), |acc, n| acc + compact.eval(n) * full.eval(n)))
    }

    /// Σ_n x[n] y[n] for compact y.
    pub fn pair_compact(&self, y: &CompactSequence<T>) -> T {
        y.iter().fold(T::zero(), |acc, (n, v)| acc + v.clone() * self.eval(n))
    }

    /// Largest magnitude over the window, tail coefficients included.
    pub fn max_abs(&self) -> f64 {
        self.core
            .iter()
            .chain(self.left.coeffs())
            .chain(self.right.coeffs())
            .map(|x| x.magnitude())
            .fold(0.0, f64::max)
    }

    /// Floating mode: the same sequence with tails below 1e-12·scale replaced
    /// by zero, or `None` when a tail is significant. Exact mode keeps tails.
    pub fn drop_negligible_tails(&self, scale: f64) -> Option<Self> {
        if T::EXACT || self.is_compact() {
            return self.is_compact().then(|| self.clone());
        }
        let tol = 1e-12 * scale.max(1.0);
        let small = |p: &Poly<T>| p.coeffs().iter().all(|c| c.magnitude() <= tol);
        if !small(&self.left) || !small(&self.right) {
            return None;
        }
        Some(Self::from_fn(self.lo - 1, self.hi() + 1, Poly::zero(), Poly::zero(), |n| self.eval(n)))
    }

    /// Exact zero test in exact mode, tolerance relative to `scale` otherwise.
    pub fn vanishes(&self, scale: f64) -> bool {
        if T::EXACT {
            self.is_zero()
        } else {
            self.max_abs() <= 1e-12 * scale.max(1.0)
        }
    }

    /// Sequence with every coefficient passed through `f`; tails keep their
    /// polynomial form, so `f` must be additive and homogeneous.
    pub fn convert<S: Field>(&self, f: impl Fn(&T) -> S) -> PolyTailSequence<S> {
        PolyTailSequence {
            lo: self.lo,
            core: self.core.iter().map(&f).collect(),
            left: self.left.convert(&f),
            right: self.right.convert(&f),
        }
    }
}

pub fn special_sequence<T: Field>(kind: SpecialKind) -> PolyTailSequence<T> {
    PolyTailSequence::special(kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{rat_int, Rational};

    type S = PolyTailSequence<Rational>;

    #[test]
    fn special_values() {
        assert_eq!(S::special(SpecialKind::One).eval(5), rat_int(1));
        let sigma = S::special(SpecialKind::Sigma);
        assert_eq!(sigma.eval(0), rat_int(0));
        assert_eq!(sigma.eval(-3), rat_int(-1));
        assert_eq!(sigma.eval(2), rat_int(1));
        assert_eq!(S::special(SpecialKind::AbsN).eval(-4), rat_int(4));
    }

    #[test]
    fn laplacian_examples() {
        let e0 = S::special(SpecialKind::Delta(0)).apply_h0();
        assert_eq!(e0.values(-2, 2), vec![0, -1, 2, -1, 0].into_iter().map(rat_int).collect::<Vec<_>>());
        assert!(S::special(SpecialKind::One).apply_h0().is_zero());
        assert!(S::special(SpecialKind::N).apply_h0().is_zero());
        let sq = Poly::new(vec![rat_int(0), rat_int(0), rat_int(1)]);
        let n2 = S::from_fn(0, 0, sq.clone(), sq, |_| rat_int(0));
        let h = n2.apply_h0();
        for n in -10..=10 {
            assert_eq!(h.eval(n), rat_int(-2));
        }
    }

    #[test]
    fn pairing_examples() {
        let e3 = S::special(SpecialKind::Delta(3));
        assert_eq!(e3.pair(&e3).unwrap(), rat_int(1));
        let x = S::special(SpecialKind::Delta(1)).sub(&S::special(SpecialKind::Delta(-4)));
        assert_eq!(S::special(SpecialKind::One).pair(&x).unwrap(), rat_int(0));
        let e2 = S::special(SpecialKind::Delta(2));
        assert_eq!(S::special(SpecialKind::N).pair(&e2).unwrap(), rat_int(2));
        assert_eq!(
            S::special(SpecialKind::One).pair(&S::special(SpecialKind::N)),
            Err(Error::NonSummable)
        );
    }

    #[test]
    fn inconsistent_window_is_rejected() {
        let r = S::from_parts(0, vec![rat_int(2)], Poly::constant(rat_int(1)), Poly::constant(rat_int(2)));
        assert!(r.is_err());
    }
}
