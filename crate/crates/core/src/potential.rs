//! Finite-rank interactions V = Σ σ_j ⟨v_j, ·⟩ v_j with compactly supported
//! vectors, the operator H = H₀ + V, and the alternating-sign conjugation.

use std::collections::BTreeMap;

use num_traits::Signed;

use crate::error::{Error, Result};
use crate::field::{rat_int, Field, Float, Rational};
use crate::matrix::Matrix;
use crate::sequence::{CompactSequence, PolyTailSequence, SpecialKind};

/// Exact symmetric operator with finitely many nonzero matrix entries.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct LocalOperator {
    entries: BTreeMap<(i64, i64), Rational>,
}

impl LocalOperator {
    pub fn new(entries: impl IntoIterator<Item = ((i64, i64), Rational)>) -> Self {
        let mut map: BTreeMap<(i64, i64), Rational> = BTreeMap::new();
        for (k, v) in entries {
            *map.entry(k).or_insert_with(|| rat_int(0)) += v;
        }
        map.retain(|_, v| !Field::is_zero(v));
        LocalOperator { entries: map }
    }

    pub fn entry(&self, a: i64, b: i64) -> Rational {
        self.entries.get(&(a, b)).cloned().unwrap_or_else(|| rat_int(0))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&(i64, i64), &Rational)> {
        self.entries.iter()
    }

    /// Sorted sites touched by a nonzero entry.
    pub fn support(&self) -> Vec<i64> {
        let mut s: Vec<i64> = self.entries.keys().flat_map(|&(a, b)| [a, b]).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|(&(a, b), v)| &self.entry(b, a) == v)
    }

    pub fn negated(&self) -> Self {
        LocalOperator::new(self.entries.iter().map(|(k, v)| (*k, -v.clone())))
    }

    /// J V J⁻¹ with (Jx)[n] = (−1)^n x[n].
    pub fn alternated(&self) -> Self {
        LocalOperator::new(self.entries.iter().map(|(&(a, b), v)| {
            ((a, b), if (a + b) % 2 != 0 { -v.clone() } else { v.clone() })
        }))
    }

    pub fn apply(&self, x: &PolyTailSequence<Rational>) -> CompactSequence<Rational> {
        CompactSequence::new(self.entries.iter().map(|(&(a, b), v)| (a, v * x.eval(b))))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankOneTerm<T> {
    pub sign: i8,
    pub vector: CompactSequence<T>,
}

/// V = v U v* with v the column vectors of the terms and U = diag(signs).
#[derive(Clone, Debug, PartialEq)]
pub struct FactorizedPotential<T> {
    terms: Vec<RankOneTerm<T>>,
    operator: Option<LocalOperator>,
}

/// Rank-one input term σ·c·⟨w, ·⟩w with rational weight c > 0.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedTerm {
    pub sign: i8,
    pub weight: Rational,
    pub vector: CompactSequence<Rational>,
}

fn check_independent<T: Field>(terms: &[RankOneTerm<T>]) -> Result<()> {
    if terms.is_empty() {
        return Ok(());
    }
    let mut sites: Vec<i64> = terms.iter().flat_map(|t| t.vector.iter().map(|(n, _)| n)).collect();
    sites.sort_unstable();
    sites.dedup();
    let cols: Vec<Vec<T>> = terms
        .iter()
        .map(|t| sites.iter().map(|&n| t.vector.get(n)).collect())
        .collect();
    let rank = Matrix::from_columns(sites.len(), &cols).rank()?;
    if rank < terms.len() {
        return Err(Error::DependentVectors { rank, count: terms.len() });
    }
    Ok(())
}

impl<T: Field> FactorizedPotential<T> {
    pub fn from_rank_one_terms(terms: Vec<RankOneTerm<T>>) -> Result<Self> {
        for t in &terms {
            if t.vector.is_zero() {
                return Err(Error::DomainError("rank-one vector is zero".into()));
            }
            if t.sign != 1 && t.sign != -1 {
                return Err(Error::DomainError(format!("sign must be ±1, got {}", t.sign)));
            }
        }
        check_independent(&terms)?;
        let operator = terms
            .iter()
            .map(|t| {
                let pairs: Option<Vec<(i64, Rational)>> =
                    t.vector.iter().map(|(n, x)| x.to_rational().map(|r| (n, r))).collect();
                pairs.map(|p| (t.sign, p))
            })
            .collect::<Option<Vec<_>>>()
            .map(|ts| {
                LocalOperator::new(ts.iter().flat_map(|(sign, p)| {
                    p.iter().flat_map(move |(a, x)| {
                        p.iter().map(move |(b, y)| ((*a, *b), rat_int(*sign as i64) * x * y))
                    })
                }))
            });
        Ok(FactorizedPotential { terms, operator })
    }

    pub fn zero() -> Self {
        FactorizedPotential { terms: Vec::new(), operator: Some(LocalOperator::default()) }
    }

    fn with_operator(mut self, op: LocalOperator) -> Self {
        self.operator = Some(op);
        self
    }

    pub fn terms(&self) -> &[RankOneTerm<T>] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        self.terms.len()
    }

    pub fn signs(&self) -> Vec<T> {
        self.terms.iter().map(|t| T::from_i64(t.sign as i64)).collect()
    }

    pub fn sign_matrix(&self) -> Matrix<T> {
        Matrix::diagonal(&self.signs())
    }

    pub fn vector(&self, a: usize) -> &CompactSequence<T> {
        &self.terms[a].vector
    }

    /// Exact matrix of V, available whenever the input data were rational.
    pub fn operator(&self) -> Option<&LocalOperator> {
        self.operator.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        T::EXACT
    }

    pub fn support_range(&self) -> Option<(i64, i64)> {
        let ranges: Vec<(i64, i64)> = self.terms.iter().filter_map(|t| t.vector.support_range()).collect();
        Some((ranges.iter().map(|r| r.0).min()?, ranges.iter().map(|r| r.1).max()?))
    }

    /// v* x as a vector in the auxiliary space.
    pub fn v_star(&self, x: &PolyTailSequence<T>) -> Vec<T> {
        self.terms.iter().map(|t| x.pair_compact(&t.vector)).collect()
    }

    /// v Φ as a compact sequence.
    pub fn v_apply(&self, phi: &[T]) -> CompactSequence<T> {
        CompactSequence::new(self.terms.iter().zip(phi).flat_map(|(t, c)| {
            t.vector.iter().map(move |(n, x)| (n, c.clone() * x.clone())).collect::<Vec<_>>()
        }))
    }

    /// V x = Σ σ_j ⟨v_j, x⟩ v_j.
    pub fn apply_v(&self, x: &PolyTailSequence<T>) -> CompactSequence<T> {
        let coeffs: Vec<T> = self
            .terms
            .iter()
            .map(|t| T::from_i64(t.sign as i64) * x.pair_compact(&t.vector))
            .collect();
        self.v_apply(&coeffs)
    }

    /// H x = H₀ x + V x.
    pub fn apply_h(&self, x: &PolyTailSequence<T>) -> PolyTailSequence<T> {
        x.apply_h0().add(&self.apply_v(x).to_poly_tail())
    }

    /// V_J = J V J⁻¹: term vectors multiplied by (−1)^n, signs unchanged.
    pub fn j_conjugate(&self) -> Self {
        FactorizedPotential {
            terms: self
                .terms
                .iter()
                .map(|t| RankOneTerm { sign: t.sign, vector: t.vector.alternated() })
                .collect(),
            operator: self.operator.as_ref().map(LocalOperator::alternated),
        }
    }

    /// −V: all signs flipped.
    pub fn negated(&self) -> Self {
        FactorizedPotential {
            terms: self
                .terms
                .iter()
                .map(|t| RankOneTerm { sign: -t.sign, vector: t.vector.clone() })
                .collect(),
            operator: self.operator.as_ref().map(LocalOperator::negated),
        }
    }

    /// Matrix of V restricted to sites lo..=hi.
    pub fn dense_matrix(&self, lo: i64, hi: i64) -> Matrix<T> {
        let n = (hi - lo + 1) as usize;
        let mut m = Matrix::<T>::zeros(n, n);
        for t in &self.terms {
            let s = T::from_i64(t.sign as i64);
            for (a, x) in t.vector.iter() {
                for (b, y) in t.vector.iter() {
                    if (lo..=hi).contains(&a) && (lo..=hi).contains(&b) {
                        let (i, j) = ((a - lo) as usize, (b - lo) as usize);
                        let v = m.get(i, j).clone() + s.clone() * x.clone() * y.clone();
                        m.set(i, j, v);
                    }
                }
            }
        }
        m
    }

    pub fn to_float(&self) -> FactorizedPotential<Float> {
        FactorizedPotential {
            terms: self
                .terms
                .iter()
                .map(|t| RankOneTerm {
                    sign: t.sign,
                    vector: t.vector.convert(|x| match x.to_rational() {
                        Some(r) => Float::from_rational(&r),
                        None => Float::from(x.to_f64()),
                    }),
                })
                .collect(),
            operator: self.operator.clone(),
        }
    }
}

impl FactorizedPotential<Float> {
    /// Float terms whose vectors are high-precision images of rational data,
    /// together with the exact operator they represent.
    pub fn from_float_terms(terms: Vec<RankOneTerm<Float>>, operator: LocalOperator) -> Result<Self> {
        Ok(Self::from_rank_one_terms(terms)?.with_operator(operator))
    }
}

/// A potential in whichever arithmetic its factorization allows.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyPotential {
    Exact(FactorizedPotential<Rational>),
    Float(FactorizedPotential<Float>),
}

impl AnyPotential {
    pub fn is_exact(&self) -> bool {
        matches!(self, AnyPotential::Exact(_))
    }

    pub fn operator(&self) -> Option<&LocalOperator> {
        match self {
            AnyPotential::Exact(p) => p.operator(),
            AnyPotential::Float(p) => p.operator(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnyPotential::Exact(p) => p.dim(),
            AnyPotential::Float(p) => p.dim(),
        }
    }

    pub fn to_float(&self) -> FactorizedPotential<Float> {
        match self {
            AnyPotential::Exact(p) => p.to_float(),
            AnyPotential::Float(p) => p.clone(),
        }
    }

    pub fn exact(&self) -> Option<&FactorizedPotential<Rational>> {
        match self {
            AnyPotential::Exact(p) => Some(p),
            AnyPotential::Float(_) => None,
        }
    }
}

/// One term per site with sign(V[n]) and vector √|V[n]|·e_n; exact iff every
/// |V[n]| is a rational square.
pub fn from_multiplicative(values: &BTreeMap<i64, Rational>) -> Result<AnyPotential> {
    let terms: Vec<WeightedTerm> = values
        .iter()
        .filter(|(_, v)| !Field::is_zero(*v))
        .map(|(&n, v)| WeightedTerm {
            sign: if v.is_negative() { -1 } else { 1 },
            weight: v.abs(),
            vector: CompactSequence::delta(n),
        })
        .collect();
    from_weighted_terms(&terms)
}

/// Terms σ·c·⟨w, ·⟩w realized with v = √c·w; exact iff every c is a
/// rational square.
pub fn from_weighted_terms(terms: &[WeightedTerm]) -> Result<AnyPotential> {
    for t in terms {
        if !t.weight.is_positive() {
            return Err(Error::DomainError("rank-one weight must be positive".into()));
        }
    }
    let operator = LocalOperator::new(terms.iter().flat_map(|t| {
        let c = rat_int(t.sign as i64) * &t.weight;
        t.vector
            .iter()
            .flat_map(|(a, x)| {
                let c = &c;
                t.vector.iter().map(move |(b, y)| ((a, b), c * x * y))
            })
            .collect::<Vec<_>>()
    }));
    let roots: Option<Vec<Rational>> = terms.iter().map(|t| Rational::sqrt_rational(&t.weight)).collect();
    match roots {
        Some(roots) => {
            let exact = terms
                .iter()
                .zip(&roots)
                .map(|(t, r)| RankOneTerm { sign: t.sign, vector: t.vector.scale(r) })
                .collect();
            Ok(AnyPotential::Exact(FactorizedPotential::from_rank_one_terms(exact)?))
        }
        None => {
            let float = terms
                .iter()
                .map(|t| {
                    let r = Float::sqrt_rational(&t.weight).expect("positive weight");
                    RankOneTerm { sign: t.sign, vector: t.vector.convert(|x| r * Float::from_rational(x)) }
                })
                .collect();
            Ok(AnyPotential::Float(FactorizedPotential::from_float_terms(float, operator)?))
        }
    }
}

/// General symmetric matrix on `sites` via eigendecomposition; always floating.
pub fn from_symmetric_matrix(sites: &[i64], entries: &Matrix<Rational>) -> Result<AnyPotential> {
    let n = sites.len();
    if entries.rows() != n || entries.cols() != n {
        return Err(Error::DomainError("matrix size does not match site list".into()));
    }
    if !entries.is_symmetric() {
        return Err(Error::NotSelfAdjoint);
    }
    let operator = LocalOperator::new(
        (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| ((sites[i], sites[j]), entries.get(i, j).clone())),
    );
    let m = nalgebra::DMatrix::from_fn(n, n, |i, j| Field::to_f64(entries.get(i, j)));
    let eig = m.symmetric_eigen();
    let largest = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let mut terms = Vec::new();
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda.abs() <= crate::field::ZERO_TOLERANCE * largest.max(1.0) {
            continue;
        }
        let root = lambda.abs().sqrt();
        let vector = CompactSequence::new(
            sites.iter().enumerate().map(|(i, &s)| (s, Float::from(root * eig.eigenvectors[(i, k)]))),
        );
        terms.push(RankOneTerm { sign: if lambda < 0.0 { -1 } else { 1 }, vector });
    }
    Ok(AnyPotential::Float(FactorizedPotential::from_float_terms(terms, operator)?))
}

/// Thin wrapper exposing H = H₀ + V.
#[derive(Clone, Debug)]
pub struct SchroedingerOperator<T> {
    pub potential: FactorizedPotential<T>,
}

impl<T: Field> SchroedingerOperator<T> {
    pub fn new(potential: FactorizedPotential<T>) -> Self {
        SchroedingerOperator { potential }
    }

    pub fn apply(&self, x: &PolyTailSequence<T>) -> PolyTailSequence<T> {
        self.potential.apply_h(x)
    }
}

pub fn apply_h<T: Field>(op: &SchroedingerOperator<T>, x: &PolyTailSequence<T>) -> PolyTailSequence<T> {
    op.apply(x)
}

pub fn j_conjugate<T: Field>(pot: &FactorizedPotential<T>) -> FactorizedPotential<T> {
    pot.j_conjugate()
}

/// The constant sequence 1.
pub fn one<T: Field>() -> PolyTailSequence<T> {
    PolyTailSequence::special(SpecialKind::One)
}
