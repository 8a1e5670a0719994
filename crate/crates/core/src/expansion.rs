//! Laurent coefficients G_j of R(κ) = R₀ − R₀ v M(κ)⁻¹ v* R₀ at the threshold,
//! closed forms of the singular parts, and the Green-operator identities.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::field::{all_vanish, Field};
use crate::kernel::{apply_g0, kernel_poly};
use crate::matrix::{pseudo_inverse, Matrix};
use crate::potential::FactorizedPotential;
use crate::sequence::{CompactSequence, Poly, PolyTailSequence, SpecialKind};
use crate::series::{invert_laurent_with_history, MatrixLaurentSeries};
use crate::threshold::{build_m_coefficients, build_projection_chain, Ladders, MCoefficients, ProjectionChain, Stage};

/// weight·⟨left, ·⟩ right.
#[derive(Clone, Debug, PartialEq)]
pub struct Correction<T> {
    pub left: PolyTailSequence<T>,
    pub right: PolyTailSequence<T>,
    pub weight: T,
}

/// G_j = [free] G_j⁰ + Σ weight·⟨left, ·⟩ right.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionCoefficient<T> {
    pub order: i64,
    pub free: bool,
    pub corrections: Vec<Correction<T>>,
}

impl<T: Field> ExpansionCoefficient<T> {
    pub fn zero(order: i64) -> Self {
        ExpansionCoefficient { order, free: false, corrections: Vec::new() }
    }

    fn free_poly(&self) -> Option<Poly<T>> {
        (self.free && self.order >= -1).then(|| kernel_poly(self.order).convert(T::from_rational))
    }

    /// ⟨e_x, G e_y⟩.
    pub fn element(&self, x: i64, y: i64) -> T {
        let free = self.free_poly().map_or(T::zero(), |g| g.eval((x - y).abs()));
        self.corrections
            .iter()
            .fold(free, |acc, c| acc + c.weight.clone() * c.left.eval(y) * c.right.eval(x))
    }

    /// Matrix of elements on [lo, hi]².
    pub fn matrix(&self, lo: i64, hi: i64) -> Matrix<T> {
        let n = (hi - lo + 1).max(0) as usize;
        let free = self.free_poly();
        let lefts: Vec<Vec<T>> = self.corrections.iter().map(|c| c.left.values(lo, hi)).collect();
        let rights: Vec<Vec<T>> = self.corrections.iter().map(|c| c.right.values(lo, hi)).collect();
        Matrix::from_fn(n, n, |i, j| {
            let base = free.as_ref().map_or(T::zero(), |g| g.eval((i as i64 - j as i64).abs()));
            self.corrections.iter().enumerate().fold(base, |acc, (k, c)| {
                acc + c.weight.clone() * lefts[k][j].clone() * rights[k][i].clone()
            })
        })
    }

    pub fn apply(&self, x: &CompactSequence<T>) -> PolyTailSequence<T> {
        let start = if self.free { apply_g0(self.order, x) } else { PolyTailSequence::zero() };
        self.corrections.iter().fold(start, |acc, c| {
            let w = c.weight.clone() * c.left.pair_compact(x);
            acc.combine(&T::one(), &c.right, &w)
        })
    }

    /// G e_y.
    pub fn column(&self, y: i64) -> PolyTailSequence<T> {
        self.apply(&CompactSequence::delta(y))
    }

    /// Window on which vanishing of every element implies the operator is zero.
    pub fn window(&self) -> (i64, i64) {
        let mut lo = 0;
        let mut hi = 0;
        let mut degree = if self.free { self.order + 1 } else { 0 };
        for c in &self.corrections {
            for s in [&c.left, &c.right] {
                lo = lo.min(s.lo());
                hi = hi.max(s.hi());
                degree = degree.max(s.tail_degree().unwrap_or(0) as i64);
            }
        }
        // Each tail region holds a triangle on either side of the diagonal;
        // side 2·degree + 2 determines a polynomial of that degree per variable.
        (lo - 2 * degree - 4, hi + 2 * degree + 4)
    }

    fn scale(&self) -> f64 {
        self.corrections
            .iter()
            .map(|c| c.weight.magnitude() * c.left.max_abs() * c.right.max_abs())
            .fold(1.0, f64::max)
    }

    pub fn is_zero_operator(&self) -> Result<bool> {
        let (lo, hi) = self.window();
        all_vanish(self.matrix(lo, hi).entries(), self.scale(), "coefficient")
    }

    /// pair(x, G y) = pair(G x, y) for the given compact vectors.
    pub fn is_symmetric_on(&self, x: &CompactSequence<T>, y: &CompactSequence<T>) -> Result<bool> {
        let lhs = self.apply(y).pair_compact(x);
        let rhs = self.apply(x).pair_compact(y);
        all_vanish(&[lhs - rhs], self.scale(), "symmetry")
    }
}

/// Whether two coefficients have equal matrix elements on a common window.
pub fn operators_agree<T: Field>(a: &ExpansionCoefficient<T>, b: &ExpansionCoefficient<T>) -> Result<bool> {
    let (l1, h1) = a.window();
    let (l2, h2) = b.window();
    operators_agree_on(a, b, l1.min(l2), h1.max(h2))
}

pub fn operators_agree_on<T: Field>(a: &ExpansionCoefficient<T>, b: &ExpansionCoefficient<T>, lo: i64, hi: i64) -> Result<bool> {
    let diff = a.matrix(lo, hi).sub(&b.matrix(lo, hi));
    all_vanish(diff.entries(), a.scale().max(b.scale()), "coefficient difference")
}

/// Columns G_i⁰ v_a for i = −1..=max.
struct Columns<T> {
    dim: usize,
    cols: BTreeMap<i64, Vec<PolyTailSequence<T>>>,
}

impl<T: Field> Columns<T> {
    fn new(pot: &FactorizedPotential<T>, max: i64) -> Self {
        let cols = (-1..=max)
            .map(|i| (i, pot.terms().iter().map(|t| apply_g0(i, &t.vector)).collect()))
            .collect();
        Columns { dim: pot.dim(), cols }
    }

    fn get(&self, i: i64) -> &[PolyTailSequence<T>] {
        &self.cols[&i]
    }
}

/// Σ_i X_i F_i with X_i the columns G_i⁰ v.
type Factor<T> = Vec<(i64, Matrix<T>)>;

fn x_factor<T: Field>(dim: usize, i: i64) -> Factor<T> {
    vec![(i, Matrix::identity(dim))]
}

/// Operator [free] G_j⁰ + Σ_{(i,k)} X_i W_{ik} X_kᵀ under construction.
struct OpBuilder<T> {
    order: i64,
    free: bool,
    blocks: BTreeMap<(i64, i64), Matrix<T>>,
    extra: Vec<Correction<T>>,
}

impl<T: Field> OpBuilder<T> {
    fn new(order: i64, free: bool) -> Self {
        OpBuilder { order, free, blocks: BTreeMap::new(), extra: Vec::new() }
    }

    fn block(&mut self, i: i64, k: i64, w: &Matrix<T>) {
        let entry = self.blocks.entry((i, k)).or_insert_with(|| Matrix::zeros(w.rows(), w.cols()));
        *entry = entry.add(w);
    }

    /// += c · F W Gᵀ.
    fn outer(&mut self, f: &Factor<T>, w: &Matrix<T>, g: &Factor<T>, c: &T) {
        for (i, fi) in f {
            for (k, gk) in g {
                self.block(*i, *k, &fi.mul(w).mul(&gk.transpose()).scale(c));
            }
        }
    }

    fn finish(self, cols: &Columns<T>) -> ExpansionCoefficient<T> {
        let mut corrections = Vec::new();
        let mut ks: Vec<i64> = self.blocks.keys().map(|&(_, k)| k).collect();
        ks.sort_unstable();
        ks.dedup();
        for k in ks {
            for b in 0..cols.dim {
                let mut right = PolyTailSequence::zero();
                let mut touched = false;
                for (&(i, kk), w) in &self.blocks {
                    if kk != k {
                        continue;
                    }
                    for a in 0..cols.dim {
                        let c = w.get(a, b);
                        if !c.is_zero() {
                            right = right.combine(&T::one(), &cols.get(i)[a], c);
                            touched = true;
                        }
                    }
                }
                if touched && !(T::EXACT && right.is_zero()) {
                    corrections.push(Correction { left: cols.get(k)[b].clone(), right, weight: T::one() });
                }
            }
        }
        corrections.extend(self.extra);
        ExpansionCoefficient { order: self.order, free: self.free, corrections }
    }
}

/// Truncated coefficient sequences convolved: (a ⋆ b)_k = Σ a_i b_{k−i}.
fn convolve<T: Field>(a: &[Matrix<T>], b: &[Matrix<T>], len: usize) -> Vec<Matrix<T>> {
    let dim = a.first().map_or(0, |m| m.rows());
    (0..len)
        .map(|k| {
            (0..=k).fold(Matrix::zeros(dim, dim), |acc, i| match (a.get(i), b.get(k - i)) {
                (Some(x), Some(y)) => acc.add(&x.mul(y)),
                _ => acc,
            })
        })
        .collect()
}

/// Coefficients of M(κ)⁻¹ for orders lo..=hi.
struct MInverse<T> {
    lo: i64,
    coeffs: Vec<Matrix<T>>,
    dim: usize,
}

impl<T: Field> MInverse<T> {
    fn get(&self, t: i64) -> Matrix<T> {
        if t < self.lo {
            return Matrix::zeros(self.dim, self.dim);
        }
        self.coeffs[(t - self.lo) as usize].clone()
    }

    fn hi(&self) -> i64 {
        self.lo + self.coeffs.len() as i64 - 1
    }
}

/// M⁻¹ = κ𝒜 + 𝒜ℬ𝒜 + κ⁻¹𝒜ℬ𝒞ℬ𝒜 + κ⁻²𝒜ℬ𝒞𝒟𝒞ℬ𝒜, each term present from the
/// stage that makes it nonzero.
fn minv_from_ladders<T: Field>(chain: &ProjectionChain<T>, mc: &MCoefficients<T>, n: i64) -> Result<MInverse<T>> {
    let dim = chain.dim;
    let stage = chain.stage.number() as i64;
    let len = (n + 5) as usize;
    let ladders = Ladders::build(chain, mc, (n + 4) as usize)?;
    let ab = convolve(&ladders.a, &ladders.b, len);
    let aba = convolve(&ab, &ladders.a, len);
    let abc = convolve(&ab, &ladders.c, len);
    let abcb = convolve(&abc, &ladders.b, len);
    let abcba = convolve(&abcb, &ladders.a, len);
    let abcd = convolve(&abc, &ladders.d, len);
    let abcdc = convolve(&abcd, &ladders.c, len);
    let abcdcb = convolve(&abcdc, &ladders.b, len);
    let abcdcba = convolve(&abcdcb, &ladders.a, len);
    let lo = 2 - stage;
    let coeffs = (lo..=n + 2)
        .map(|t| {
            let mut m = Matrix::zeros(dim, dim);
            if t >= 1 {
                m = m.add(&ladders.a[(t - 1) as usize]);
            }
            if stage >= 2 && t >= 0 {
                m = m.add(&aba[t as usize]);
            }
            if stage >= 3 && t >= -1 {
                m = m.add(&abcba[(t + 1) as usize]);
            }
            if stage >= 4 {
                m = m.add(&abcdcba[(t + 2) as usize]);
            }
            m
        })
        .collect();
    Ok(MInverse { lo, coeffs, dim })
}

/// M⁻¹ by iterated reduction of the series κM(κ), with the reduction depth.
fn minv_from_series<T: Field>(pot: &FactorizedPotential<T>, n: i64) -> Result<(MInverse<T>, usize)> {
    let mut order = n + 3;
    loop {
        let mc = build_m_coefficients(pot, order);
        let inv = invert_laurent_with_history(&mc.series(), 4)?;
        if inv.series.valid_through() >= n + 2 {
            let depth = inv.depth();
            let series: &MatrixLaurentSeries<T> = &inv.series;
            let lo = series.lo().min(n + 2);
            let coeffs = (lo..=n + 2).map(|t| series.coeff(t)).collect::<Result<Vec<_>>>()?;
            return Ok((MInverse { lo, coeffs, dim: pot.dim() }, depth));
        }
        if order > n + 16 {
            return Err(Error::TruncationTooShort { requested: n + 2, valid: inv.series.valid_through() });
        }
        order += 2;
    }
}

/// G_j = [j ≥ −1] G_j⁰ − Σ_{j₁ + t + j₃ = j} X_{j₁} [M⁻¹]_t X_{j₃}ᵀ.
fn assemble<T: Field>(minv: &MInverse<T>, cols: &Columns<T>, j: i64) -> ExpansionCoefficient<T> {
    let mut op = OpBuilder::new(j, j >= -1);
    let minus = -T::one();
    for j1 in -1..=j - minv.lo + 1 {
        for j3 in -1..=j - minv.lo - j1 {
            let t = j - j1 - j3;
            if t < minv.lo || t > minv.hi() {
                continue;
            }
            let m = minv.get(t);
            if T::EXACT && m.is_zero() {
                continue;
            }
            op.block(j1, j3, &m.scale(&minus));
        }
    }
    op.finish(cols)
}

/// Coefficients G_j, j_min ≤ j ≤ N, in the κ-convention R(κ) = Σ κ^j G_j.
#[derive(Clone, Debug)]
pub struct ExpansionResult<T> {
    pub stage: Stage,
    pub order: i64,
    pub coefficients: Vec<ExpansionCoefficient<T>>,
    pub exact: bool,
}

impl<T: Field> ExpansionResult<T> {
    pub fn case_id(&self) -> u8 {
        self.stage.number()
    }

    pub fn j_min(&self) -> i64 {
        self.stage.j_min()
    }

    pub fn get(&self, j: i64) -> Option<&ExpansionCoefficient<T>> {
        self.coefficients.iter().find(|c| c.order == j)
    }

    /// The coefficient of order j, zero below j_min.
    pub fn coefficient(&self, j: i64) -> Result<ExpansionCoefficient<T>> {
        if j < self.j_min() {
            return Ok(ExpansionCoefficient::zero(j));
        }
        self.get(j)
            .cloned()
            .ok_or(Error::TruncationTooShort { requested: j, valid: self.order })
    }
}

/// Which M⁻¹ construction feeds the assembly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InversePath {
    Ladders,
    Series,
}

pub fn default_order(stage: Stage) -> i64 {
    if stage == Stage::Q0Singular {
        2
    } else {
        4
    }
}

pub fn expand<T: Field>(pot: &FactorizedPotential<T>, n: i64) -> Result<ExpansionResult<T>> {
    expand_via(pot, n, InversePath::Ladders)
}

pub fn expand_via<T: Field>(pot: &FactorizedPotential<T>, n: i64, path: InversePath) -> Result<ExpansionResult<T>> {
    if n < -2 {
        return Err(Error::DomainError(format!("expansion order must be at least -2, got {n}")));
    }
    let nn = n.max(0);
    let mc = build_m_coefficients(pot, nn + 6);
    let chain = build_projection_chain(pot, &mc)?;
    let minv = match path {
        InversePath::Ladders => minv_from_ladders(&chain, &mc, nn)?,
        InversePath::Series => {
            let (minv, depth) = minv_from_series(pot, nn)?;
            if depth + 1 != chain.stage.number() as usize {
                return Err(Error::CaseMismatch(format!(
                    "series inversion needed {depth} reductions, chain stopped at stage {}",
                    chain.stage.number()
                )));
            }
            minv
        }
    };
    let cols = Columns::new(pot, nn - minv.lo + 2);
    let j_min = chain.stage.j_min();
    for j in (minv.lo - 2)..j_min {
        if !assemble(&minv, &cols, j).is_zero_operator()? {
            return Err(Error::ChainInconsistent(format!("coefficient of order {j} does not cancel")));
        }
    }
    let coefficients = (j_min..=n).map(|j| assemble(&minv, &cols, j)).collect();
    Ok(ExpansionResult { stage: chain.stage, order: n, coefficients, exact: T::EXACT })
}

/// Closed forms of G₋₂, G₋₁ and (cases 1–3) G₀.
#[derive(Clone, Debug)]
pub struct SingularParts<T> {
    pub stage: Stage,
    pub g_minus2: ExpansionCoefficient<T>,
    pub g_minus1: ExpansionCoefficient<T>,
    pub g0: Option<ExpansionCoefficient<T>>,
    /// Whether the explicit q₀† agrees with the pseudoinverse (stages 3 and 4).
    pub q0_dagger_closed_form: Option<bool>,
}

/// q₀† from Φ₃*, Φ₄* and c = ⟨Φ₃*, Φ₂⟩.
pub fn q0_dagger_closed_form<T: Field>(chain: &ProjectionChain<T>) -> Matrix<T> {
    let c = crate::matrix::dot(&chain.phi3_star, &chain.phi2);
    let one_c2 = T::one() + c.clone() * c.clone();
    let minus_two = T::from_i64(-2);
    let p33 = Matrix::outer(&chain.phi3_star, &chain.phi3_star);
    if chain.phi4_zero {
        p33.scale(&(minus_two / one_c2))
    } else {
        let p44 = Matrix::outer(&chain.phi4_star, &chain.phi4_star);
        let p43 = Matrix::outer(&chain.phi4_star, &chain.phi3_star);
        let p34 = Matrix::outer(&chain.phi3_star, &chain.phi4_star);
        p33.add(&p44.scale(&one_c2)).sub(&p43.add(&p34).scale(&c)).scale(&minus_two)
    }
}

pub fn singular_parts<T: Field>(pot: &FactorizedPotential<T>) -> Result<SingularParts<T>> {
    let mc = build_m_coefficients(pot, 4);
    let chain = build_projection_chain(pot, &mc)?;
    let dim = chain.dim;
    let cols = Columns::new(pot, 1);
    let stage = chain.stage;
    let g = chain.gamma.clone();
    let one = T::one();
    let minus = -T::one();
    let id = Matrix::identity(dim);
    let m0 = &chain.big_m0;
    let m1 = mc.get(1);
    let xm1 = x_factor::<T>(dim, -1);
    let x0 = x_factor::<T>(dim, 0);
    // z = γ X₋₁ M₀ − X₀.
    let z: Factor<T> = vec![(-1, m0.scale(&g)), (0, id.neg())];
    // (1 − γ G₋₁⁰ v v*) G₁⁰ v = X₁ − γ X₋₁ M₁.
    let w1: Factor<T> = vec![(1, id.clone()), (-1, m1.scale(&g).neg())];

    let mut gm1 = OpBuilder::new(-1, true);
    gm1.outer(&xm1, &id, &xm1, &-g.clone());
    let mut gm2 = OpBuilder::new(-2, false);
    let mut closed_q0 = None;

    let mut g0 = OpBuilder::new(0, true);
    g0.outer(&xm1, m0, &xm1, &(g.clone() * g.clone()));
    g0.outer(&xm1, &id, &x0, &-g.clone());
    g0.outer(&x0, &id, &xm1, &-g.clone());
    if stage >= Stage::M0Invertible {
        g0.outer(&z, &chain.m0_dag, &z, &minus);
    }
    if stage >= Stage::Q0Invertible {
        let q0d = q0_dagger_closed_form(&chain);
        closed_q0 = Some(all_vanish(q0d.sub(&chain.q0_dag).entries(), chain.scale, "q0 dagger")?);
    }
    match stage {
        Stage::PInvertible | Stage::M0Invertible => {}
        Stage::Q0Invertible => {
            let q0d = &chain.q0_dag;
            gm1.outer(&z, q0d, &z, &minus);
            g0.outer(&z, &chain.s, &z, &one);
            g0.outer(&z, &q0d.mul(&chain.q1).mul(q0d), &z, &one);
            g0.outer(&z, &q0d.mul(&chain.m1).mul(&chain.m0_dag), &z, &one);
            g0.outer(&z, &chain.m0_dag.mul(&chain.m1).mul(q0d), &z, &one);
            g0.outer(&z, q0d, &w1, &one);
            g0.outer(&z, &q0d.mul(m0).mul(&chain.p), &z, &g);
            g0.outer(&w1, q0d, &z, &one);
            g0.outer(&z, &chain.p.mul(m0).mul(q0d), &z, &g);
        }
        Stage::Q0Singular => {
            let ladders = Ladders::build(&chain, &mc, 1)?;
            let r0d = &chain.r0_dag;
            let q0d = &chain.q0_dag;
            let r1 = &ladders.r[1];
            gm2.outer(&z, r0d, &z, &minus);
            gm1.outer(&z, &chain.t.add(&r0d.mul(r1).mul(r0d)), &z, &one);
            let mixed = q0d.neg().add(&q0d.mul(&chain.q1).mul(r0d)).add(&r0d.mul(&chain.q1).mul(q0d));
            gm1.outer(&z, &mixed, &z, &one);
            gm1.outer(&z, r0d, &w1, &one);
            gm1.outer(&w1, r0d, &z, &one);
        }
    }
    let g0 = (stage != Stage::Q0Singular).then(|| g0.finish(&cols));
    Ok(SingularParts {
        stage,
        g_minus2: gm2.finish(&cols),
        g_minus1: gm1.finish(&cols),
        g0,
        q0_dagger_closed_form: closed_q0,
    })
}

/// Symmetry, idempotence and rank of a compactly supported finite-rank operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProjectionCheck {
    pub symmetric: bool,
    pub idempotent: bool,
    pub rank: usize,
}

pub fn projection_check<T: Field>(op: &ExpansionCoefficient<T>) -> Result<ProjectionCheck> {
    if op.free {
        return Err(Error::DomainError("projection check needs a finite-rank operator".into()));
    }
    let (lo, hi) = op.window();
    let sc = op.scale();
    if op.corrections.iter().any(|c| !c.left.is_compact() || !c.right.is_compact()) {
        // Outside the factor cores a column is polynomial in its site, so
        // degree + 1 vanishing columns per side confine the operator.
        let degree = op
            .corrections
            .iter()
            .map(|c| c.left.tail_degree().unwrap_or(0) as i64)
            .max()
            .unwrap_or(0);
        let compact = (lo..=hi).all(|a| op.column(a).drop_negligible_tails(sc).is_some());
        let confined = (lo..=lo + degree).chain(hi - degree..=hi).all(|a| op.column(a).vanishes(sc));
        if !compact || !confined {
            return Err(Error::DomainError("projection check needs a compactly supported operator".into()));
        }
    }
    let m = op.matrix(lo, hi);
    let symmetric = all_vanish(m.sub(&m.transpose()).entries(), sc, "symmetry")?;
    let idempotent = all_vanish(m.mul(&m).sub(&m).entries(), sc, "idempotence")?;
    Ok(ProjectionCheck { symmetric, idempotent, rank: m.rank()? })
}

/// Outcome of H G₀ e_a = G₀ H e_a = e_a − G₋₂ e_a over a range of sites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreenReport {
    pub sites: (i64, i64),
    pub max_residual: f64,
    /// Cases 1–2: G₀ − G₀⁰ − ⟨Ψ₅,·⟩Ψ₁⁰ − ⟨Ψ₁⁰,·⟩Ψ₅ has bounded columns.
    pub bounded_remainder: Option<bool>,
}

pub fn green_identity_check<T: Field>(pot: &FactorizedPotential<T>, res: &ExpansionResult<T>, sites: (i64, i64)) -> Result<GreenReport> {
    let g0 = res.coefficient(0)?;
    let gm2 = res.coefficient(-2)?;
    let mut max_residual: f64 = 0.0;
    for a in sites.0..=sites.1 {
        let expected = PolyTailSequence::special(SpecialKind::Delta(a)).sub(&gm2.column(a));
        let col = g0.column(a);
        let left = pot.apply_h(&col).sub(&expected);
        let h_ea = pot.apply_h(&PolyTailSequence::special(SpecialKind::Delta(a)));
        let h_ea = h_ea.to_compact().ok_or_else(|| Error::DomainError("H e_a is not compact".into()))?;
        let right = g0.apply(&h_ea).sub(&expected);
        let sc = 1.0 + col.max_abs();
        for r in [&left, &right] {
            max_residual = max_residual.max(r.max_abs());
            if !r.vanishes(sc) {
                return Err(Error::IdentityViolated { site: a, residual: format!("{:e}", r.max_abs()) });
            }
        }
    }
    let bounded_remainder = if res.stage <= Stage::M0Invertible && pot.dim() > 0 {
        let mc = build_m_coefficients(pot, 2);
        let chain = build_projection_chain(pot, &mc)?;
        let psi5 = chain.reconstruct(pot, &chain.phi5)?;
        let one = PolyTailSequence::special(SpecialKind::One);
        let mut ok = true;
        for a in sites.0..=sites.1 {
            let r = g0
                .column(a)
                .sub(&apply_g0(0, &CompactSequence::delta(a)))
                .sub(&one.scale(&psi5.eval(a)))
                .sub(&psi5);
            let sc = 1.0 + r.max_abs();
            ok &= crate::threshold::effective_tail_degree(&r, sc).map_or(true, |d| d == 0);
        }
        Some(ok)
    } else {
        None
    };
    Ok(GreenReport { sites, max_residual, bounded_remainder })
}

/// Which alternative expression for G₀ was evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum G0Variant {
    /// (1 + G₀⁰V)⁻¹G₀⁰ + Δ†⟨Ψ₅,·⟩Ψ₅.
    Inverse,
    /// Projected inverse with π₁, π₂ plus ⟨Ψ₁⁰,·⟩Ψ₅.
    Projected,
    /// (1 + G₀⁰V)⁻¹G₀⁰ plus fitted Δ₁⟨Ψ₃,·⟩Ψ₃ + Δ₂(⟨Ψ₃,·⟩Ψ₆ + ⟨Ψ₆,·⟩Ψ₃).
    Fitted,
}

#[derive(Clone, Debug)]
pub struct G0ClosedForm<T> {
    pub variant: G0Variant,
    pub delta1: Option<T>,
    pub delta2: Option<T>,
    pub sites: (i64, i64),
    pub matches: bool,
}

fn dagger<T: Field>(x: &T, zero: bool) -> T {
    if zero {
        T::zero()
    } else {
        T::one() / x.clone()
    }
}

/// (1 + G₀⁰V)⁻¹G₀⁰ = G₀⁰ − X₀ M₀⁻¹ X₀ᵀ when M₀ is invertible.
fn inverse_part<T: Field>(chain: &ProjectionChain<T>) -> Result<OpBuilder<T>> {
    let mut op = OpBuilder::new(0, true);
    if chain.dim > 0 {
        let inv = chain.big_m0.inverse()?;
        let x0 = x_factor::<T>(chain.dim, 0);
        op.outer(&x0, &inv, &x0, &-T::one());
    }
    Ok(op)
}

pub fn g0_closed_forms<T: Field>(pot: &FactorizedPotential<T>, res: &ExpansionResult<T>) -> Result<G0ClosedForm<T>> {
    let sites = (-5, 5);
    if res.stage == Stage::Q0Singular {
        return Err(Error::NotApplicable("no closed form for G0 when q0 is singular".into()));
    }
    let expanded = res.coefficient(0)?;
    let mc = build_m_coefficients(pot, 2);
    let chain = build_projection_chain(pot, &mc)?;
    let cols = Columns::new(pot, 0);
    let dim = chain.dim;
    let kernel = if dim == 0 { Vec::new() } else { chain.big_m0.nullspace()? };
    let check_cols = |candidate: &dyn Fn(i64) -> Result<PolyTailSequence<T>>| -> Result<bool> {
        for a in sites.0..=sites.1 {
            let want = expanded.column(a);
            let got = candidate(a)?;
            if !got.sub(&want).vanishes(1.0 + want.max_abs()) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    if dim == 0 {
        let op: ExpansionCoefficient<T> = OpBuilder::new(0, true).finish(&cols);
        let matches = check_cols(&|a| Ok(op.column(a)))?;
        return Ok(G0ClosedForm { variant: G0Variant::Inverse, delta1: None, delta2: None, sites, matches });
    }
    let psi5 = chain.reconstruct(pot, &chain.phi5)?;
    match (res.stage, kernel.is_empty()) {
        (Stage::PInvertible | Stage::M0Invertible, true) => {
            let mut op = inverse_part(&chain)?;
            op.extra.push(Correction {
                left: psi5.clone(),
                right: psi5,
                weight: dagger(&chain.delta, chain.delta_zero),
            });
            let op = op.finish(&cols);
            let matches = check_cols(&|a| Ok(op.column(a)))?;
            Ok(G0ClosedForm { variant: G0Variant::Inverse, delta1: None, delta2: None, sites, matches })
        }
        (Stage::PInvertible | Stage::M0Invertible, false) => {
            let matches = check_cols(&|a| projected_column(pot, &chain, &psi5, a))?;
            Ok(G0ClosedForm { variant: G0Variant::Projected, delta1: None, delta2: None, sites, matches })
        }
        (_, true) => {
            let base = inverse_part(&chain)?.finish(&cols);
            let psi3 = chain.reconstruct(pot, &chain.phi3)?;
            let psi6 = chain.reconstruct(pot, &chain.phi6)?;
            let (d1, d2) = fit_case3(&expanded, &base, &psi3, &psi6)?;
            let mut op = inverse_part(&chain)?;
            op.extra.push(Correction { left: psi3.clone(), right: psi3.clone(), weight: d1.clone() });
            op.extra.push(Correction { left: psi3.clone(), right: psi6.clone(), weight: d2.clone() });
            op.extra.push(Correction { left: psi6, right: psi3, weight: d2.clone() });
            let op = op.finish(&cols);
            let matches = check_cols(&|a| Ok(op.column(a)))? && operators_agree(&op, &expanded)?;
            Ok(G0ClosedForm { variant: G0Variant::Fitted, delta1: Some(d1), delta2: Some(d2), sites, matches })
        }
        (_, false) => Err(Error::NotApplicable("quasi-symmetric space is nontrivial".into())),
    }
}

/// G₀ e_a = Y + Ψ₅ with π₂*Y = Y and π₁*(1 + G₀⁰V)Y = π₁*G₀⁰ e_a, solved as
/// Y = y₀ − G₀⁰vη, y₀ = π₁*G₀⁰e_a + c·1, M₀η = v*y₀, ⟨V1, Y⟩ = 0.
fn projected_column<T: Field>(
    pot: &FactorizedPotential<T>,
    chain: &ProjectionChain<T>,
    psi5: &PolyTailSequence<T>,
    a: i64,
) -> Result<PolyTailSequence<T>> {
    let dim = chain.dim;
    let one = PolyTailSequence::special(SpecialKind::One);
    let v_psi5 = pot.apply_v(psi5);
    let g = apply_g0(0, &CompactSequence::delta(a));
    let g1 = g.combine(&T::one(), &one, &-g.pair_compact(&v_psi5));
    let u = pot.sign_matrix();
    let m0 = &chain.big_m0;
    let phi1 = &chain.phi1;
    let vg = pot.v_star(&g1);
    let u_phi1 = u.mul_vec(phi1);
    let row_last: Vec<T> = m0.sub(&u).transpose().mul_vec(&u_phi1);
    let mut rows: Vec<Vec<T>> = (0..dim)
        .map(|i| {
            let mut r = m0.row(i);
            r.push(-phi1[i].clone());
            r
        })
        .collect();
    let mut last: Vec<T> = row_last.into_iter().map(|x| -x).collect();
    last.push(crate::matrix::dot(&u_phi1, phi1));
    rows.push(last);
    let mut rhs = vg.clone();
    rhs.push(-crate::matrix::dot(&u_phi1, &vg));
    let system = Matrix::from_rows(rows);
    let sol = system
        .solve(&rhs)
        .map_err(|_| Error::QsAssumptionViolated("projected inverse is not unique".into()))?;
    let eta = &sol[..dim];
    let c = sol[dim].clone();
    let y0 = g1.combine(&T::one(), &one, &c);
    let y = y0.sub(&apply_g0(0, &pot.v_apply(eta)));
    Ok(y.add(psi5))
}

/// Least-squares Δ₁, Δ₂ with G₀ − base = Δ₁⟨Ψ₃,·⟩Ψ₃ + Δ₂(⟨Ψ₃,·⟩Ψ₆ + ⟨Ψ₆,·⟩Ψ₃).
fn fit_case3<T: Field>(
    expanded: &ExpansionCoefficient<T>,
    base: &ExpansionCoefficient<T>,
    psi3: &PolyTailSequence<T>,
    psi6: &PolyTailSequence<T>,
) -> Result<(T, T)> {
    let (l1, h1) = expanded.window();
    let (l2, h2) = base.window();
    let (lo, hi) = (l1.min(l2), h1.max(h2));
    let diff = expanded.matrix(lo, hi).sub(&base.matrix(lo, hi));
    let p3 = psi3.values(lo, hi);
    let p6 = psi6.values(lo, hi);
    let n = p3.len();
    let mut ata = Matrix::<T>::zeros(2, 2);
    let mut atb = vec![T::zero(), T::zero()];
    for x in 0..n {
        for y in 0..n {
            let b1 = p3[x].clone() * p3[y].clone();
            let b2 = p6[x].clone() * p3[y].clone() + p3[x].clone() * p6[y].clone();
            let basis = [b1, b2];
            for i in 0..2 {
                atb[i] = atb[i].clone() + basis[i].clone() * diff.get(x, y).clone();
                for j in 0..2 {
                    let v = ata.get(i, j).clone() + basis[i].clone() * basis[j].clone();
                    ata.set(i, j, v);
                }
            }
        }
    }
    let sol = pseudo_inverse(&ata)?.dagger.mul_vec(&atb);
    Ok((sol[0].clone(), sol[1].clone()))
}

/// Expansion through order N by the ladder formulas and by series inversion,
/// compared elementwise on [lo, hi]².
pub fn dual_path_agreement<T: Field>(pot: &FactorizedPotential<T>, n: i64, lo: i64, hi: i64) -> Result<bool> {
    let a = expand_via(pot, n, InversePath::Ladders)?;
    let b = expand_via(pot, n, InversePath::Series)?;
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        if !operators_agree_on(x, y, lo, hi)? {
            return Ok(false);
        }
    }
    Ok(a.coefficients.len() == b.coefficients.len())
}
