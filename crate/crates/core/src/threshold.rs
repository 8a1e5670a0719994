//! Threshold analysis at zero: the matrices M_j = v*G_j⁰v (+U for j = 0),
//! the projection chain P, Q, S, T with its intermediate operators, the
//! reconstruction map, and classification with explicit eigenspace bases.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{all_vanish, vanishes, Field};
use crate::kernel::apply_g0;
use crate::matrix::{add_vec, dot, max_abs, orthogonalize, pseudo_inverse, scale_vec, sub_vec, Matrix};
use crate::potential::FactorizedPotential;
use crate::series::MatrixLaurentSeries;
use crate::sequence::{PolyTailSequence, SpecialKind};

/// M_{−1}, M₀, …, M_J on the auxiliary space.
#[derive(Clone, Debug, PartialEq)]
pub struct MCoefficients<T> {
    mats: Vec<Matrix<T>>,
}

impl<T: Field> MCoefficients<T> {
    pub fn get(&self, j: i64) -> &Matrix<T> {
        &self.mats[(j + 1) as usize]
    }

    pub fn max_order(&self) -> i64 {
        self.mats.len() as i64 - 2
    }

    pub fn dim(&self) -> usize {
        self.mats[0].rows()
    }

    /// M(κ) = Σ_{j=−1}^{J} κ^j M_j as a truncated series.
    pub fn series(&self) -> MatrixLaurentSeries<T> {
        MatrixLaurentSeries::new(self.dim(), -1, self.mats.clone())
    }
}

/// Columns G_j⁰ v_a as sequences.
pub fn g0_times_v<T: Field>(pot: &FactorizedPotential<T>, j: i64) -> Vec<PolyTailSequence<T>> {
    pot.terms().iter().map(|t| apply_g0(j, &t.vector)).collect()
}

pub fn build_m_coefficients<T: Field>(pot: &FactorizedPotential<T>, max_order: i64) -> MCoefficients<T> {
    let dim = pot.dim();
    let mats = (-1..=max_order)
        .map(|j| {
            let cols = g0_times_v(pot, j);
            let mut m = Matrix::from_fn(dim, dim, |a, b| cols[b].pair_compact(pot.vector(a)));
            if j == 0 {
                m = m.add(&pot.sign_matrix());
            }
            m
        })
        .collect();
    MCoefficients { mats }
}

/// Stage at which the chain terminates, i.e. the first invertible operator
/// among P, m₀, q₀, r₀ on its subspace.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Stage {
    #[serde(rename = "P-invertible")]
    PInvertible = 1,
    #[serde(rename = "m0-invertible")]
    M0Invertible = 2,
    #[serde(rename = "q0-invertible")]
    Q0Invertible = 3,
    #[serde(rename = "q0-singular")]
    Q0Singular = 4,
}

impl Stage {
    pub fn number(self) -> u8 {
        self as u8
    }

    /// Lowest Laurent order of the resolvent expansion.
    pub fn j_min(self) -> i64 {
        if self == Stage::Q0Singular {
            -2
        } else {
            -1
        }
    }
}

/// X_j = Σ over compositions (i₁,…,i_k) of j of X₀ Π_l (−N_{i_l} X₀), the
/// coefficients of (X₀⁻¹ + Σ_{i≥1} κ^i N_i)⁻¹ on the range of X₀, computed by
/// X_j = −Σ_{i=1}^{j} X₀ N_i X_{j−i}.
pub fn composition_ladder<T: Field>(lead: &Matrix<T>, pert: &dyn Fn(usize) -> Matrix<T>, n: usize) -> Vec<Matrix<T>> {
    let steps: Vec<Matrix<T>> = (1..=n).map(|i| lead.mul(&pert(i)).neg()).collect();
    let mut out: Vec<Matrix<T>> = vec![lead.clone()];
    for j in 1..=n {
        let mut acc = Matrix::zeros(lead.rows(), lead.cols());
        for i in 1..=j {
            acc = acc.add(&steps[i - 1].mul(&out[j - i]));
        }
        out.push(acc);
    }
    out
}

/// Coefficients of the nested inverses: 𝒜 = (Q + κM)⁻¹, m_j = −QA_{j+1}Q,
/// ℬ = (S + m)⁻¹, q_j = −SB_{j+1}S, 𝒞 = (T + q)⁻¹, r_j = −TC_{j+1}T, 𝒟 = r⁻¹.
#[derive(Clone, Debug)]
pub struct Ladders<T> {
    pub a: Vec<Matrix<T>>,
    pub m: Vec<Matrix<T>>,
    pub b: Vec<Matrix<T>>,
    pub q: Vec<Matrix<T>>,
    pub c: Vec<Matrix<T>>,
    pub r: Vec<Matrix<T>>,
    pub d: Vec<Matrix<T>>,
}

impl<T: Field> Ladders<T> {
    /// Builds A up to order n + 3 and the deeper ladders as far as that allows.
    pub fn build(chain: &ProjectionChain<T>, mc: &MCoefficients<T>, n: usize) -> Result<Self> {
        let na = n + 3;
        if mc.max_order() < na as i64 - 1 {
            return Err(Error::TruncationTooShort { requested: na as i64 - 1, valid: mc.max_order() });
        }
        let a0 = chain.q.add(&chain.p.scale(&chain.gamma));
        let a = composition_ladder(&a0, &|i| mc.get(i as i64 - 1).clone(), na);
        let m: Vec<Matrix<T>> = (0..na).map(|j| chain.q.mul(&a[j + 1]).mul(&chain.q).neg()).collect();
        let b0 = chain.s.add(&chain.m0_dag);
        let b = composition_ladder(&b0, &|i| m[i].clone(), na - 1);
        let q: Vec<Matrix<T>> = (0..na - 1).map(|j| chain.s.mul(&b[j + 1]).mul(&chain.s).neg()).collect();
        let c0 = chain.t.add(&chain.q0_dag);
        let c = composition_ladder(&c0, &|i| q[i].clone(), na - 2);
        let r: Vec<Matrix<T>> = (0..na - 2).map(|j| chain.t.mul(&c[j + 1]).mul(&chain.t).neg()).collect();
        let d = composition_ladder(&chain.r0_dag, &|i| r[i].clone(), na - 3);
        Ok(Ladders { a, m, b, q, c, r, d })
    }
}

/// Projection chain and the auxiliary vectors Φ₁…Φ₆, Δ.
#[derive(Clone, Debug)]
pub struct ProjectionChain<T> {
    pub dim: usize,
    pub trivial: bool,
    pub scale: f64,
    pub gamma: T,
    pub phi1: Vec<T>,
    pub phi1_star: Vec<T>,
    pub phi1_zero: bool,
    /// v* n.
    pub vn: Vec<T>,
    /// ⟨Φ₁, v*n⟩ ‖Φ₁‖^{†2}, so that Ψ₂⁰ = n − psi2_shift·1.
    pub psi2_shift: T,
    pub phi2: Vec<T>,
    pub phi2_star: Vec<T>,
    pub phi2_zero: bool,
    pub phi3: Vec<T>,
    pub phi3_star: Vec<T>,
    pub phi3_zero: bool,
    pub phi4: Vec<T>,
    pub phi4_star: Vec<T>,
    pub phi4_zero: bool,
    pub phi5: Vec<T>,
    pub phi6: Vec<T>,
    pub delta: T,
    pub delta_zero: bool,
    pub p: Matrix<T>,
    pub q: Matrix<T>,
    pub p_tilde: Matrix<T>,
    pub s: Matrix<T>,
    pub t: Matrix<T>,
    pub s_basis: Vec<Vec<T>>,
    pub t_basis: Vec<Vec<T>>,
    pub m0: Matrix<T>,
    pub m0_dag: Matrix<T>,
    pub m1: Matrix<T>,
    pub m2: Matrix<T>,
    pub q0: Matrix<T>,
    pub q0_dag: Matrix<T>,
    pub q1: Matrix<T>,
    pub r0: Matrix<T>,
    pub r0_dag: Matrix<T>,
    pub stage: Stage,
    /// M₀ kept for the reconstruction map.
    pub big_m0: Matrix<T>,
}

fn dagger_norm<T: Field>(x: &[T], zero: bool) -> T {
    if zero {
        T::zero()
    } else {
        T::one() / dot(x, x)
    }
}

fn kernel_within<T: Field>(dim: usize, basis: &[Vec<T>], m: &Matrix<T>) -> Result<Vec<Vec<T>>> {
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let b = Matrix::from_columns(dim, basis);
    let restricted = b.transpose().mul(m).mul(&b);
    Ok(orthogonalize(&restricted.nullspace()?.iter().map(|k| b.mul_vec(k)).collect::<Vec<_>>()))
}

fn check(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::ChainInconsistent(what.to_string()))
    }
}

pub fn build_projection_chain<T: Field>(pot: &FactorizedPotential<T>, mc: &MCoefficients<T>) -> Result<ProjectionChain<T>> {
    let dim = pot.dim();
    if mc.max_order() < 2 {
        return Err(Error::TruncationTooShort { requested: 2, valid: mc.max_order() });
    }
    for j in -1..=mc.max_order() {
        check(mc.get(j).is_symmetric(), "M_j symmetric")?;
    }
    let big_m0 = mc.get(0).clone();
    let phi1 = pot.v_star(&PolyTailSequence::special(SpecialKind::One));
    let vn = pot.v_star(&PolyTailSequence::special(SpecialKind::N));
    let scale = [1.0, big_m0.max_abs(), max_abs(&phi1).powi(2), max_abs(&vn).powi(2)]
        .into_iter()
        .fold(0.0, f64::max);
    let phi1_zero = all_vanish(&phi1, scale, "Phi1")?;
    let inv1 = dagger_norm(&phi1, phi1_zero);
    let gamma = T::from_i64(2) * inv1.clone();
    let p = Matrix::outer(&phi1, &phi1).scale(&inv1);
    let identity = Matrix::identity(dim);
    let q = identity.sub(&p);
    let phi1_star = scale_vec(&inv1, &phi1);
    let psi2_shift = dot(&phi1, &vn) * inv1.clone();

    let q_basis: Vec<Vec<T>> = if phi1_zero {
        identity.columns()
    } else {
        orthogonalize(&Matrix::from_rows(vec![phi1.clone()]).nullspace()?)
    };
    let m0 = q.mul(&big_m0).mul(&q);
    let m0_dag = pseudo_inverse(&m0)?.dagger;
    let s_basis = kernel_within(dim, &q_basis, &big_m0)?;
    let s = Matrix::projection_onto(dim, &s_basis)?;

    let a0 = q.add(&p.scale(&gamma));
    let a = composition_ladder(&a0, &|i| mc.get(i as i64 - 1).clone(), 3);
    let m_ladder: Vec<Matrix<T>> = (0..3).map(|j| q.mul(&a[j + 1]).mul(&q).neg()).collect();
    check(m_ladder[0].sub(&m0).vanishes(scale), "m0 ladder")?;
    let m1 = m_ladder[1].clone();
    let m2 = m_ladder[2].clone();
    let m1_direct = q
        .mul(mc.get(1))
        .mul(&q)
        .sub(&q.mul(&big_m0).mul(&a0).mul(&big_m0).mul(&q));
    check(m1.sub(&m1_direct).vanishes(scale), "m1 closed form")?;

    let phi2 = q.mul_vec(&vn);
    let phi2_zero = all_vanish(&phi2, scale, "Phi2")?;
    let phi2_star = scale_vec(&dagger_norm(&phi2, phi2_zero), &phi2);

    let q0 = s.mul(&m1).mul(&s);
    let q0_dag = pseudo_inverse(&q0)?.dagger;
    let t_basis = kernel_within(dim, &s_basis, &q0)?;
    let t = Matrix::projection_onto(dim, &t_basis)?;
    let b0 = s.add(&m0_dag);
    let b = composition_ladder(&b0, &|i| m_ladder[i].clone(), 2);
    let q1 = s.mul(&b[2]).mul(&s).neg();
    let r0 = t.mul(&q1).mul(&t);
    let r0_dag = pseudo_inverse(&r0)?.dagger;

    let phi3 = scale_vec(&T::from_i64(2), &s.mul(&big_m0).mul_vec(&phi1_star));
    let phi3_zero = all_vanish(&phi3, scale, "Phi3")?;
    let phi3_star = scale_vec(&dagger_norm(&phi3, phi3_zero), &phi3);
    let c = dot(&phi3_star, &phi2);
    let phi4 = sub_vec(&s.mul_vec(&phi2), &scale_vec(&c, &phi3));
    let phi4_zero = all_vanish(&phi4, scale, "Phi4")?;
    let phi4_star = scale_vec(&dagger_norm(&phi4, phi4_zero), &phi4);
    let phi5 = sub_vec(&phi1_star, &m0_dag.mul(&big_m0).mul_vec(&phi1_star));
    let delta = dot(&phi1_star, &big_m0.mul_vec(&phi5));
    let delta_zero = vanishes(&delta, scale, "Delta")?;
    let two = T::from_i64(2);
    let inner = dot(&sub_vec(&phi5, &scale_vec(&(two.clone() * delta.clone()), &phi3_star)), &phi2);
    let phi6 = add_vec(
        &add_vec(&m0_dag.mul_vec(&phi2), &scale_vec(&(two.clone() * inner), &phi3_star)),
        &scale_vec(&(two.clone() * c.clone()), &phi5),
    );
    let p_tilde = Matrix::outer(&phi1, &phi1_star).add(&Matrix::outer(&phi2, &phi2_star));

    let stage = if dim == 0 || (dim == 1 && !phi1_zero) {
        Stage::PInvertible
    } else if s_basis.is_empty() {
        Stage::M0Invertible
    } else if t_basis.is_empty() {
        Stage::Q0Invertible
    } else {
        Stage::Q0Singular
    };

    let chain = ProjectionChain {
        dim,
        trivial: dim == 0,
        scale,
        gamma,
        phi1,
        phi1_star,
        phi1_zero,
        vn,
        psi2_shift,
        phi2,
        phi2_star,
        phi2_zero,
        phi3,
        phi3_star,
        phi3_zero,
        phi4,
        phi4_star,
        phi4_zero,
        phi5,
        phi6,
        delta,
        delta_zero,
        p,
        q,
        p_tilde,
        s,
        t,
        s_basis,
        t_basis,
        m0,
        m0_dag,
        m1,
        m2,
        q0,
        q0_dag,
        q1,
        r0,
        r0_dag,
        stage,
        big_m0,
    };
    chain.verify(pot, mc)?;
    Ok(chain)
}

impl<T: Field> ProjectionChain<T> {
    fn vec_vanishes(&self, x: &[T]) -> bool {
        if T::EXACT {
            x.iter().all(|a| a.is_zero())
        } else {
            max_abs(x) <= 1e-12 * self.scale
        }
    }

    /// Block identities, the action table on Φ₃…Φ₆, the closed form of q₀,
    /// and the Gram representation of −r₀.
    fn verify(&self, pot: &FactorizedPotential<T>, mc: &MCoefficients<T>) -> Result<()> {
        let sc = self.scale;
        let m0 = &self.big_m0;
        check(self.s.mul(m0).mul(&self.q).vanishes(sc), "S M0 Q = 0")?;
        check(self.t.mul(m0).vanishes(sc), "T M0 = 0")?;
        check(self.t.mul(mc.get(1)).mul(&self.q).vanishes(sc), "T M1 Q = 0")?;
        let half = T::one() / T::from_i64(2);
        let lhs3 = m0.mul_vec(&self.phi3);
        let rhs3 = scale_vec(&(half.clone() * dot(&self.phi3, &self.phi3)), &self.phi1);
        check(self.vec_vanishes(&sub_vec(&lhs3, &rhs3)), "M0 Phi3 = |Phi3|^2 Phi1 / 2")?;
        check(self.vec_vanishes(&m0.mul_vec(&self.phi4)), "M0 Phi4 = 0")?;
        let rhs5 = add_vec(&scale_vec(&self.delta, &self.phi1), &scale_vec(&half, &self.phi3));
        check(self.vec_vanishes(&sub_vec(&m0.mul_vec(&self.phi5), &rhs5)), "M0 Phi5 = Delta Phi1 + Phi3 / 2")?;
        // Without Φ₃ nothing cancels the Φ₁-component ⟨Φ₁*, M₀m₀†Φ₂⟩ = −⟨Φ₅, Φ₂⟩.
        let mut rhs6 = sub_vec(&self.phi2, &self.phi4);
        if self.phi3_zero {
            rhs6 = sub_vec(&rhs6, &scale_vec(&dot(&self.phi5, &self.phi2), &self.phi1));
        }
        check(self.vec_vanishes(&sub_vec(&m0.mul_vec(&self.phi6), &rhs6)), "M0 Phi6 = Phi2 - Phi4 (+ Phi1 term when Phi3 = 0)")?;
        let s_phi2 = self.s.mul_vec(&self.phi2);
        let closed = Matrix::outer(&s_phi2, &s_phi2)
            .add(&Matrix::outer(&self.phi3, &self.phi3))
            .scale(&-half);
        check(self.q0.sub(&closed).vanishes(sc), "q0 closed form")?;
        if !self.t_basis.is_empty() {
            let images: Vec<PolyTailSequence<T>> =
                self.t_basis.iter().map(|w| self.reconstruct(pot, w)).collect::<Result<_>>()?;
            let images: Vec<PolyTailSequence<T>> = images
                .iter()
                .map(|img| img.drop_negligible_tails(sc))
                .collect::<Option<_>>()
                .ok_or_else(|| Error::ChainInconsistent("eigenvector image compact".into()))?;
            let k = self.t_basis.len();
            let gram = Matrix::from_fn(k, k, |i, j| images[i].pair(&images[j]).unwrap_or_else(|_| T::zero()));
            let w = Matrix::from_columns(self.dim, &self.t_basis);
            let restricted = w.transpose().mul(&self.r0).mul(&w);
            check(restricted.add(&gram).vanishes(sc), "r0 = -T z* z T")?;
            let pivots = gram.ldl_pivots().ok_or_else(|| Error::ChainInconsistent("-r0 singular".into()))?;
            let positive = pivots.iter().all(|p| p.to_f64() > 0.0);
            check(positive, "-r0 positive definite")?;
        }
        Ok(())
    }

    /// Ψ₂⁰ = n − ⟨Φ₁, v*n⟩‖Φ₁‖^{†2}·1.
    pub fn psi20(&self) -> PolyTailSequence<T> {
        let n = PolyTailSequence::special(SpecialKind::N);
        let one = PolyTailSequence::special(SpecialKind::One);
        n.combine(&T::one(), &one, &-self.psi2_shift.clone())
    }

    /// z(Φ) = ⟨M₀Φ₁*, Φ⟩·1 + ⟨M₀Φ₂*, Φ⟩·Ψ₂⁰ − G₀⁰ v Φ.
    pub fn reconstruct(&self, pot: &FactorizedPotential<T>, phi: &[T]) -> Result<PolyTailSequence<T>> {
        if self.dim == 0 {
            return Err(Error::EmptyAuxiliarySpace);
        }
        let c1 = dot(&self.big_m0.mul_vec(&self.phi1_star), phi);
        let c2 = dot(&self.big_m0.mul_vec(&self.phi2_star), phi);
        let one = PolyTailSequence::special(SpecialKind::One);
        let g = apply_g0(0, &pot.v_apply(phi));
        Ok(one
            .scale(&c1)
            .add(&self.psi20().scale(&c2))
            .sub(&g))
    }

    pub fn case_label(&self) -> CaseLabel {
        let (f1, f2, f3, f4, d) = (self.phi1_zero, self.phi2_zero, self.phi3_zero, self.phi4_zero, self.delta_zero);
        use CaseLabel::*;
        if f3 && f4 {
            match (f1, f2) {
                (true, true) => I,
                (false, true) => if d { II } else { III },
                (true, false) => IV,
                (false, false) => if d { V } else { VI },
            }
        } else if f1 && !f4 {
            VII
        } else if f2 && !f3 && f4 {
            VIII
        } else if !f1 && f3 && !f4 {
            if d { IX } else { X }
        } else if !f2 && !f3 && f4 {
            XI
        } else {
            XII
        }
    }
}

/// Vanishing-pattern case labels of the classification tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseLabel {
    I,
    II,
    III,
    IV,
    V,
    VI,
    VII,
    VIII,
    IX,
    X,
    XI,
    XII,
}

impl CaseLabel {
    pub fn roman(self) -> &'static str {
        use CaseLabel::*;
        match self {
            I => "i",
            II => "ii",
            III => "iii",
            IV => "iv",
            V => "v",
            VI => "vi",
            VII => "vii",
            VIII => "viii",
            IX => "ix",
            X => "x",
            XI => "xi",
            XII => "xii",
        }
    }
}

/// Named resonance representatives used by the table rows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rep {
    Psi10,
    Psi20,
    Psi3,
    Psi4,
    Psi5,
    Psi6,
}

struct Row {
    generalized: &'static [Rep],
    bounded: &'static [Rep],
    quasi_symmetric: &'static [Rep],
    resonant: bool,
}

fn table_row(label: CaseLabel) -> Row {
    use CaseLabel::*;
    use Rep::*;
    let row = |g, b, q, r| Row { generalized: g, bounded: b, quasi_symmetric: q, resonant: r };
    match label {
        I => row(&[Psi10, Psi20], &[Psi10], &[], true),
        II => row(&[Psi5, Psi20], &[], &[Psi5], false),
        III => row(&[Psi5, Psi20], &[], &[], false),
        IV => row(&[Psi10, Psi6], &[Psi10], &[], true),
        V => row(&[Psi5, Psi6], &[], &[Psi5], false),
        VI => row(&[Psi5, Psi6], &[], &[], false),
        VII => row(&[Psi10, Psi4], &[Psi10, Psi4], &[Psi4], true),
        VIII => row(&[Psi3, Psi20], &[Psi3], &[], true),
        IX => row(&[Psi5, Psi4], &[Psi4], &[Psi5, Psi4], true),
        X => row(&[Psi5, Psi4], &[Psi4], &[Psi4], true),
        XI => row(&[Psi3, Psi6], &[Psi3], &[], true),
        XII => row(&[Psi3, Psi4], &[Psi3, Psi4], &[Psi4], true),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ThresholdType {
    #[serde(rename = "regular")]
    Regular,
    #[serde(rename = "exceptional-1")]
    Exceptional1,
    #[serde(rename = "exceptional-2")]
    Exceptional2,
    #[serde(rename = "exceptional-3")]
    Exceptional3,
}

impl ThresholdType {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdType::Regular => "regular",
            ThresholdType::Exceptional1 => "exceptional-1",
            ThresholdType::Exceptional2 => "exceptional-2",
            ThresholdType::Exceptional3 => "exceptional-3",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub d0: usize,
    pub d: usize,
    pub dtilde: usize,
    pub dqs: usize,
}

/// Bases of E, of 𝓔 modulo E, of 𝓔̃ modulo 𝓔, and of 𝓔̃_qs.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenBases<T> {
    pub eigen: Vec<PolyTailSequence<T>>,
    pub bounded_mod_eigen: Vec<PolyTailSequence<T>>,
    pub growing_mod_bounded: Vec<PolyTailSequence<T>>,
    pub quasi_symmetric: Vec<PolyTailSequence<T>>,
}

#[derive(Clone, Debug)]
pub struct ThresholdReport<T> {
    /// 0 or 4.
    pub threshold: u8,
    pub kind: ThresholdType,
    pub stage: Stage,
    pub case: CaseLabel,
    pub trivial_auxiliary_space: bool,
    pub dims: Dims,
    pub bases: EigenBases<T>,
    pub exact: bool,
    /// When set, the solutions of the original problem are (−1)^n times the
    /// listed basis sequences.
    pub alternating: bool,
}

/// Largest tail degree ignoring coefficients below the floating tolerance.
pub fn effective_tail_degree<T: Field>(x: &PolyTailSequence<T>, scale: f64) -> Option<usize> {
    let deg = |p: &crate::sequence::Poly<T>| {
        p.coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| if T::EXACT { !c.is_zero() } else { c.magnitude() > 1e-12 * scale.max(1.0) })
            .map(|(k, _)| k)
            .max()
    };
    deg(x.left_tail()).max(deg(x.right_tail()))
}

/// Whether the tails lie in span{|n|, σ}: the left tail is minus the right.
pub fn has_quasi_symmetric_tails<T: Field>(x: &PolyTailSequence<T>, scale: f64) -> bool {
    let sum = x.left_tail().add(x.right_tail());
    if T::EXACT {
        sum.is_zero() && x.right_tail().degree().map_or(true, |d| d <= 1)
    } else {
        sum.coeffs().iter().all(|c| c.magnitude() <= 1e-12 * scale.max(1.0))
    }
}

fn kernel_dim<T: Field>(m: &Matrix<T>) -> Result<usize> {
    Ok(m.nullspace()?.len())
}

pub fn classify<T: Field>(pot: &FactorizedPotential<T>) -> Result<ThresholdReport<T>> {
    let mc = build_m_coefficients(pot, 3);
    let chain = build_projection_chain(pot, &mc)?;
    classify_with_chain(pot, &chain)
}

pub fn classify_with_chain<T: Field>(pot: &FactorizedPotential<T>, chain: &ProjectionChain<T>) -> Result<ThresholdReport<T>> {
    let label = chain.case_label();
    let row = table_row(label);
    let one = PolyTailSequence::special(SpecialKind::One);
    let rep = |r: Rep| -> Result<PolyTailSequence<T>> {
        match r {
            Rep::Psi10 => Ok(one.clone()),
            Rep::Psi20 => Ok(chain.psi20()),
            Rep::Psi3 => chain.reconstruct(pot, &chain.phi3),
            Rep::Psi4 => chain.reconstruct(pot, &chain.phi4),
            Rep::Psi5 => chain.reconstruct(pot, &chain.phi5),
            Rep::Psi6 => chain.reconstruct(pot, &chain.phi6),
        }
    };
    let eigen: Vec<PolyTailSequence<T>> = if chain.stage == Stage::Q0Singular {
        chain
            .t_basis
            .iter()
            .map(|w| chain.reconstruct(pot, w))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let bounded_mod_eigen: Vec<_> = row.bounded.iter().map(|&r| rep(r)).collect::<Result<_>>()?;
    let growing_mod_bounded: Vec<_> = row
        .generalized
        .iter()
        .filter(|r| !row.bounded.contains(r))
        .map(|&r| rep(r))
        .collect::<Result<_>>()?;
    let mut quasi_symmetric = eigen.clone();
    for &r in row.quasi_symmetric {
        quasi_symmetric.push(rep(r)?);
    }
    let d0 = eigen.len();
    let dims = Dims {
        d0,
        d: d0 + row.bounded.len(),
        dtilde: d0 + row.generalized.len(),
        dqs: d0 + row.quasi_symmetric.len(),
    };
    let kind = match (chain.stage == Stage::Q0Singular, row.resonant) {
        (false, false) => ThresholdType::Regular,
        (false, true) => ThresholdType::Exceptional1,
        (true, false) => ThresholdType::Exceptional2,
        (true, true) => ThresholdType::Exceptional3,
    };
    let bases = EigenBases { eigen, bounded_mod_eigen, growing_mod_bounded, quasi_symmetric };
    verify_bases(pot, chain, &bases)?;
    verify_dims(chain, dims)?;
    Ok(ThresholdReport {
        threshold: 0,
        kind,
        stage: chain.stage,
        case: label,
        trivial_auxiliary_space: chain.trivial,
        dims,
        bases,
        exact: T::EXACT,
        alternating: false,
    })
}

fn verify_bases<T: Field>(pot: &FactorizedPotential<T>, chain: &ProjectionChain<T>, bases: &EigenBases<T>) -> Result<()> {
    let sc = chain.scale;
    let groups: [(&[PolyTailSequence<T>], Option<usize>, &str); 3] = [
        (&bases.eigen, None, "eigenfunction"),
        (&bases.bounded_mod_eigen, Some(0), "resonance"),
        (&bases.growing_mod_bounded, Some(1), "growing solution"),
    ];
    for (seqs, degree, what) in groups {
        for x in seqs {
            check(pot.apply_h(x).vanishes(sc * (1.0 + x.max_abs())), &format!("{what} solves Hx = 0"))?;
            check(effective_tail_degree(x, sc * (1.0 + x.max_abs())) == degree, &format!("{what} tail degree"))?;
        }
    }
    for x in &bases.quasi_symmetric {
        check(pot.apply_h(x).vanishes(sc * (1.0 + x.max_abs())), "quasi-symmetric solution solves Hx = 0")?;
        check(has_quasi_symmetric_tails(x, sc * (1.0 + x.max_abs())), "quasi-symmetric tails")?;
    }
    Ok(())
}

/// Cross-checks the table dimensions against kernel dimensions of M₀ and
/// the projections.
fn verify_dims<T: Field>(chain: &ProjectionChain<T>, dims: Dims) -> Result<()> {
    let dim = chain.dim;
    let ind = |b: bool| usize::from(b);
    let m0 = &chain.big_m0;
    let q_tilde = Matrix::identity(dim).sub(&chain.p_tilde);
    let stack = |a: &Matrix<T>, b: &Matrix<T>| {
        let mut rows: Vec<Vec<T>> = (0..a.rows()).map(|i| a.row(i)).collect();
        rows.extend((0..b.rows()).map(|i| b.row(i)));
        if rows.is_empty() {
            Matrix::zeros(0, dim)
        } else {
            Matrix::from_rows(rows)
        }
    };
    let (dt, d, d0, dqs) = if dim == 0 {
        (2, 1, 0, 0)
    } else {
        (
            kernel_dim(&q_tilde.mul(m0))? + ind(chain.phi1_zero) + ind(chain.phi2_zero),
            kernel_dim(&stack(&chain.p, &chain.q.mul(m0)))? + ind(chain.phi1_zero),
            kernel_dim(&stack(&chain.p_tilde, m0))?,
            kernel_dim(m0)?,
        )
    };
    check(dims.dtilde == dt, &format!("generalized dimension {} vs kernel count {dt}", dims.dtilde))?;
    check(dims.d == d, &format!("bounded dimension {} vs kernel count {d}", dims.d))?;
    check(dims.d0 == d0, &format!("eigenspace dimension {} vs kernel count {d0}", dims.d0))?;
    check(dims.dqs == dqs, &format!("quasi-symmetric dimension {} vs kernel count {dqs}", dims.dqs))?;
    check(dims.dtilde == dims.d0 + 2, "dtilde = d0 + 2")?;
    check(dims.d0 <= dims.d && dims.d <= dims.dtilde, "d0 <= d <= dtilde")?;
    Ok(())
}

/// Pass/fail for d₀ = 0, d̃ ≤ 2, d ≤ 1.
pub fn multiplicative_dimension_check<T>(report: &ThresholdReport<T>) -> [bool; 3] {
    [report.dims.d0 == 0, report.dims.dtilde <= 2, report.dims.d <= 1]
}

/// Dimensions of ker M₀, of its image under −G₀⁰v, and of ker(U M₀).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CircularCheck {
    pub kernel_m0: usize,
    pub quasi_symmetric_image: usize,
    pub kernel_reduction: usize,
    pub consistent: bool,
}

pub fn circular_isomorphism_check<T: Field>(pot: &FactorizedPotential<T>) -> Result<CircularCheck> {
    let mc = build_m_coefficients(pot, 0);
    let m0 = mc.get(0);
    let kernel = m0.nullspace()?;
    let kernel_reduction = kernel_dim(&pot.sign_matrix().mul(m0))?;
    let images: Vec<PolyTailSequence<T>> = kernel
        .iter()
        .map(|phi| apply_g0(0, &pot.v_apply(phi)).scale(&-T::one()))
        .collect();
    let mut all_solutions = true;
    for x in &images {
        let sc = 1.0 + x.max_abs();
        all_solutions &= pot.apply_h(x).vanishes(sc) && has_quasi_symmetric_tails(x, sc);
    }
    let image_rank = if images.is_empty() {
        0
    } else {
        let lo = images.iter().map(|x| x.lo()).min().unwrap_or(0) - 1;
        let hi = images.iter().map(|x| x.hi()).max().unwrap_or(0) + 1;
        let rows: Vec<Vec<T>> = images
            .iter()
            .map(|x| {
                let mut f = x.values(lo, hi);
                f.extend((0..=1).map(|k| x.left_tail().coeff(k)));
                f.extend((0..=1).map(|k| x.right_tail().coeff(k)));
                f
            })
            .collect();
        Matrix::from_rows(rows).transpose().rank()?
    };
    Ok(CircularCheck {
        kernel_m0: kernel.len(),
        quasi_symmetric_image: image_rank,
        kernel_reduction,
        consistent: all_solutions && kernel.len() == image_rank && image_rank == kernel_reduction,
    })
}
