//! The effective linearization trick: a half-degree step that trades a
//! polynomial supported on B_l for a square of one supported on B_{l/2},
//! its iteration down to a linear pencil, and the ε bookkeeping.
//!
//! The norm identity ‖Q‖² − θ = ‖P‖ holds when the top of the spectrum of P
//! attains its norm. Doubling a map with `hermitize` makes its spectrum
//! symmetric, so the chain always doubles before each step.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_group::{split_support, ReducedWord, SplitSupport, SupportSet};
use crate::linalg::{psd_sqrt, spectral_norm, CMatrix, LanczosOptions, C64};
use crate::operator_lab::{assemble, hermitize, CoefficientMap};
use crate::representations::RepresentationSample;

/// Default cap on the coefficient dimension of any level.
pub const DEFAULT_DIMENSION_CAP: usize = 2048;

/// Tolerance below which negative eigenvalues of ã + ‖ã‖Id are clamped.
pub const SQRT_CLAMP: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
pub struct MultiplicityEntry {
    pub g: ReducedWord,
    pub h: ReducedWord,
    pub count: usize,
}

/// One half-degree step.
#[derive(Clone, Debug)]
pub struct HalfStep {
    pub input_map: CoefficientMap,
    /// g ↦ b_g over S₁ᵉ, coefficient dimension m·|S₁ᵉ|.
    pub output_map: CoefficientMap,
    pub split: SplitSupport,
    /// S₁ᵉ in block order (∅ first).
    pub blocks: Vec<ReducedWord>,
    pub a_tilde: CMatrix,
    pub b_tilde: CMatrix,
    pub a_tilde_norm: f64,
    pub theta: f64,
    /// Pairs (g, h) with g⁻¹h in the support and their multiplicity.
    pub multiplicity_table: Vec<MultiplicityEntry>,
}

impl HalfStep {
    pub fn m(&self) -> usize {
        self.input_map.m()
    }

    /// |S₁ᵉ|.
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// max over w of |∑_{g⁻¹h=w} ã_{g,h} − a_w|.
    pub fn row_sum_defect(&self) -> f64 {
        let m = self.m();
        let mut sums: BTreeMap<ReducedWord, CMatrix> = BTreeMap::new();
        for (i, g) in self.blocks.iter().enumerate() {
            for (j, h) in self.blocks.iter().enumerate() {
                let w = g.left_quotient(h);
                let blk = self.a_tilde.view((i * m, j * m), (m, m));
                *sums.entry(w).or_insert_with(|| CMatrix::zeros(m, m)) += blk;
            }
        }
        let mut worst: f64 = 0.0;
        for (w, s) in &sums {
            let diff = match self.input_map.get(w) {
                Some(a) => s - a,
                None => s.clone(),
            };
            worst = worst.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        worst
    }

    /// ‖b̃² − (ã + ‖ã‖Id)‖_max.
    pub fn sqrt_defect(&self) -> f64 {
        let n = self.a_tilde.nrows();
        let target = &self.a_tilde + CMatrix::identity(n, n) * C64::new(self.a_tilde_norm, 0.0);
        (&self.b_tilde * &self.b_tilde - target).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue of ã + ‖ã‖Id.
    pub fn shifted_min_eigenvalue(&self) -> f64 {
        let n = self.a_tilde.nrows();
        let target = &self.a_tilde + CMatrix::identity(n, n) * C64::new(self.a_tilde_norm, 0.0);
        target.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// One step of the linearization: builds ã, its shifted square root b̃ and
/// the coefficients b_g = b̃(E_{g,∅} ⊗ Id_m).
pub fn half_step(cm: &CoefficientMap, l: usize) -> Result<HalfStep> {
    if !cm.is_hermitian() {
        return Err(Error::Symmetry { defect: cm.hermitian_defect() });
    }
    let support = cm.support();
    let split = split_support(&support, l)?;
    let blocks: Vec<ReducedWord> = split.elements.iter().cloned().collect();
    debug_assert!(blocks[0].is_identity());
    let m = cm.m();
    let k = blocks.len();
    let dim = m * k;

    let mut counts: BTreeMap<ReducedWord, usize> = BTreeMap::new();
    for g in &blocks {
        for h in &blocks {
            *counts.entry(g.left_quotient(h)).or_default() += 1;
        }
    }

    let mut a_tilde = CMatrix::zeros(dim, dim);
    let mut table = Vec::new();
    for (i, g) in blocks.iter().enumerate() {
        for (j, h) in blocks.iter().enumerate() {
            let w = g.left_quotient(h);
            if let Some(a) = cm.get(&w) {
                let c = counts[&w];
                a_tilde.view_mut((i * m, j * m), (m, m)).copy_from(&(a / C64::new(c as f64, 0.0)));
                table.push(MultiplicityEntry { g: g.clone(), h: h.clone(), count: c });
            }
        }
    }
    let sym = (&a_tilde + a_tilde.adjoint()) * C64::new(0.5, 0.0);
    let a_tilde = sym;
    let eig = a_tilde.clone().symmetric_eigen();
    let a_tilde_norm = eig.eigenvalues.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let shifted = &a_tilde + CMatrix::identity(dim, dim) * C64::new(a_tilde_norm, 0.0);
    let b_tilde = psd_sqrt(&shifted, SQRT_CLAMP * a_tilde_norm.max(1.0))?;

    let mut output_map = CoefficientMap::new(dim);
    for (gi, g) in blocks.iter().enumerate() {
        let mut b = CMatrix::zeros(dim, dim);
        b.view_mut((0, 0), (dim, m)).copy_from(&b_tilde.view((0, gi * m), (dim, m)));
        output_map.insert(g.clone(), b)?;
    }
    Ok(HalfStep {
        input_map: cm.clone(),
        output_map,
        split,
        blocks,
        a_tilde,
        b_tilde,
        a_tilde_norm,
        theta: k as f64 * a_tilde_norm,
        multiplicity_table: table,
    })
}

/// Outcome of checking a step against one representation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StepVerification {
    pub norm_p: f64,
    pub norm_q_squared: f64,
    pub theta: f64,
    /// |(‖Q‖² − θ) − ‖P‖|
    pub residual: f64,
}

/// Compares ‖Q_ρ‖² − θ with ‖P_ρ‖ for the two assemblies of a step.
pub fn verify_step(hs: &HalfStep, rep: &RepresentationSample, zero_mean: bool) -> Result<StepVerification> {
    let opts = LanczosOptions::default().with_tol(1e-13).with_seed(rep.seed ^ 0x9e37);
    let p = assemble(&hs.input_map, rep, zero_mean)?;
    let q = assemble(&hs.output_map, rep, zero_mean)?;
    let norm_p = spectral_norm(&p, &opts)?.value;
    let nq = spectral_norm(&q, &opts)?.value;
    let norm_q_squared = nq * nq;
    Ok(StepVerification {
        norm_p,
        norm_q_squared,
        theta: hs.theta,
        residual: ((norm_q_squared - hs.theta) - norm_p).abs(),
    })
}

/// Block structure of Q*Q: the (∅,∅) block against P + θ and the largest
/// entry outside it.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct BlockReport {
    pub diagonal_block_defect: f64,
    pub off_block_max: f64,
}

pub fn q_star_q_blocks(hs: &HalfStep, rep: &RepresentationSample, zero_mean: bool) -> Result<BlockReport> {
    let p = assemble(&hs.input_map, rep, zero_mean)?.to_dense()?;
    let q = assemble(&hs.output_map, rep, zero_mean)?.to_dense()?;
    let qq = q.adjoint() * &q;
    let m = hs.m();
    let big = hs.output_map.m();
    let n = rep.n;
    let mut off: f64 = 0.0;
    let mut diag: f64 = 0.0;
    for r in 0..big * n {
        for c in 0..big * n {
            let (ra, rj) = (r % big, r / big);
            let (ca, cj) = (c % big, c / big);
            let v = qq[(r, c)];
            if ra < m && ca < m {
                let mut want = p[(ra + m * rj, ca + m * cj)];
                if ra == ca {
                    // θ times the identity of the space ρ acts on
                    let mut id = if rj == cj { 1.0 } else { 0.0 };
                    if zero_mean {
                        id -= 1.0 / n as f64;
                    }
                    want += C64::new(hs.theta * id, 0.0);
                }
                diag = diag.max((v - want).norm());
            } else {
                off = off.max(v.norm());
            }
        }
    }
    Ok(BlockReport { diagonal_block_defect: diag, off_block_max: off })
}

/// ⌈log₂ l⌉ for l ≥ 1.
pub fn depth(l: usize) -> u32 {
    if l <= 1 {
        0
    } else {
        usize::BITS - (l - 1).leading_zeros()
    }
}

/// 2 l s^v l^(v−1), the stated bound on the final dimension multiplier.
pub fn dimension_bound(l: usize, s: usize) -> f64 {
    let v = depth(l) as i32;
    2.0 * l as f64 * (s as f64).powi(v) * (l as f64).powi(v - 1)
}

/// One level of a chain, with its step and running dimension multiplier.
#[derive(Clone, Debug)]
pub struct ChainLevel {
    pub nominal_radius: usize,
    pub step: HalfStep,
    /// n_k: coefficient dimension of this level's doubled output, relative
    /// to the doubled input of the chain.
    pub n: usize,
}

/// The full ladder from a polynomial on B_l to a self-adjoint linear pencil.
#[derive(Clone, Debug)]
pub struct LinearizationChain {
    pub original: CoefficientMap,
    /// The doubled input the first step acts on.
    pub initial_map: CoefficientMap,
    pub levels: Vec<ChainLevel>,
    pub v: u32,
    /// Doubled output of the last step; supported in B_1.
    pub final_map: CoefficientMap,
}

impl LinearizationChain {
    pub fn thetas(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.step.theta).collect()
    }

    pub fn dimensions(&self) -> Vec<usize> {
        std::iter::once(1).chain(self.levels.iter().map(|l| l.n)).collect()
    }

    /// Recovers the norm of the original polynomial from the norm of the
    /// final pencil: x_{k−1} = x_k² − θ_k.
    pub fn telescope(&self, final_norm: f64) -> f64 {
        self.levels.iter().rev().fold(final_norm, |x, lvl| x * x - lvl.step.theta)
    }

    pub fn ledger(&self) -> ChainLedger {
        let plan_bound_s = self.original.support().symmetric_closure().len();
        ChainLedger {
            v: self.v,
            levels: self
                .levels
                .iter()
                .map(|lvl| LedgerLevel {
                    nominal_radius: lvl.nominal_radius,
                    support_size: lvl.step.input_map.len(),
                    s1e_size: lvl.step.block_count(),
                    core_size: lvl.step.split.core_len(),
                    n: lvl.n,
                    theta: lvl.step.theta,
                    a_tilde_norm: lvl.step.a_tilde_norm,
                })
                .collect(),
            dimension_bound: dimension_bound(self.levels.first().map_or(1, |l| l.nominal_radius), plan_bound_s),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerLevel {
    pub nominal_radius: usize,
    pub support_size: usize,
    pub s1e_size: usize,
    pub core_size: usize,
    pub n: usize,
    pub theta: f64,
    pub a_tilde_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainLedger {
    pub v: u32,
    pub levels: Vec<LedgerLevel>,
    pub dimension_bound: f64,
}

/// Iterates `half_step` ⌈log₂ l⌉ times, doubling before every step.
pub fn build_chain(cm: &CoefficientMap, l: usize) -> Result<LinearizationChain> {
    build_chain_capped(cm, l, DEFAULT_DIMENSION_CAP)
}

pub fn build_chain_capped(cm: &CoefficientMap, l: usize, cap: usize) -> Result<LinearizationChain> {
    if l < 2 {
        return Err(Error::Domain(format!("chain needs l ≥ 2, got {l}")));
    }
    if cm.radius() > l {
        return Err(Error::Domain(format!("support radius {} exceeds l = {l}", cm.radius())));
    }
    let v = depth(l);
    let initial_map = hermitize(cm);
    let base_m = initial_map.m();
    let mut current = initial_map.clone();
    let mut radius = l;
    let mut levels = Vec::with_capacity(v as usize);
    for k in 1..=v {
        let blocks = split_support(&current.support(), radius)?.elements.len();
        let next_dim = current.m() * blocks;
        if 2 * next_dim > cap {
            return Err(Error::Budget {
                what: format!("linearization level {k} coefficient dimension"),
                needed: 2 * next_dim as u128,
                budget: cap,
            });
        }
        let step = half_step(&current, radius)?;
        current = hermitize(&step.output_map);
        levels.push(ChainLevel { nominal_radius: radius, n: current.m() / base_m, step });
        radius = radius.div_ceil(2);
    }
    Ok(LinearizationChain { original: cm.clone(), initial_map, levels, v, final_map: current })
}

/// Combinatorial ledger of a chain, without any numerics.
#[derive(Clone, Debug, Serialize)]
pub struct ChainPlan {
    pub l: usize,
    pub v: u32,
    /// Size of the symmetrized input support.
    pub support_size: usize,
    pub levels: Vec<PlanLevel>,
    pub n_v: usize,
    pub dimension_bound: f64,
    /// Dimension bound times the ∅ allowance (|S₁|+1)/|S₁| at every level.
    pub adjusted_bound: f64,
    pub final_support: SupportSet,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlanLevel {
    pub nominal_radius: usize,
    pub input_support: usize,
    pub s1e_size: usize,
    pub core_size: usize,
    pub identity_inserted: bool,
    pub n: usize,
}

impl ChainPlan {
    pub fn within_adjusted_bound(&self) -> bool {
        self.n_v as f64 <= self.adjusted_bound * (1.0 + 1e-12)
    }

    pub fn final_in_b1(&self) -> bool {
        self.final_support.radius() <= 1
    }
}

/// Support sizes and dimension multipliers a chain would produce.
pub fn plan_chain(support: &SupportSet, l: usize) -> Result<ChainPlan> {
    if l < 2 {
        return Err(Error::Domain(format!("chain needs l ≥ 2, got {l}")));
    }
    let v = depth(l);
    let mut current = support.symmetric_closure();
    let s = current.len();
    let mut radius = l;
    let mut n = 1usize;
    let mut adjust = 1.0;
    let mut levels = Vec::new();
    for _ in 0..v {
        let split = split_support(&current, radius)?;
        let e = split.elements.len();
        n = n.checked_mul(2 * e).ok_or_else(|| Error::Budget {
            what: "chain dimension".into(),
            needed: u128::MAX,
            budget: usize::MAX,
        })?;
        adjust *= (split.core_len() + 1) as f64 / split.core_len().max(1) as f64;
        levels.push(PlanLevel {
            nominal_radius: radius,
            input_support: current.len(),
            s1e_size: e,
            core_size: split.core_len(),
            identity_inserted: split.identity_inserted,
            n,
        });
        current = split.elements;
        radius = radius.div_ceil(2);
    }
    let dimension_bound = dimension_bound(l, s);
    Ok(ChainPlan {
        l,
        v,
        support_size: s,
        levels,
        n_v: n,
        dimension_bound,
        adjusted_bound: dimension_bound * adjust,
        final_support: current,
    })
}

/// ε propagated through the chain: the exact product and the closed form.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EpsilonPropagation {
    pub exact: f64,
    pub closed_form: f64,
    /// Decided on the exact product.
    pub admissible: bool,
    pub closed_form_admissible: bool,
}

pub fn propagate_epsilon(eps: f64, l: usize, s_size: usize) -> Result<EpsilonPropagation> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::Domain(format!("eps must lie in [0, 1), got {eps}")));
    }
    let v = depth(l.max(1)) as i32;
    let s = s_size as f64;
    let exact = (1..=v).fold(eps, |acc, i| acc * 4.0 * 4f64.powi(i) * s);
    let lf = l as f64;
    let closed_form = 2.0 * eps * lf * lf * s.powi(v) * lf.powi(v - 1);
    Ok(EpsilonPropagation { exact, closed_form, admissible: exact < 1.0, closed_form_admissible: closed_form < 1.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::Flavor;

    #[test]
    fn scalar_identity_step() {
        let cm = CoefficientMap::identity(1);
        let hs = half_step(&cm, 2).unwrap();
        assert_eq!(hs.block_count(), 1);
        assert!((hs.theta - 1.0).abs() < 1e-15);
        assert!((hs.a_tilde[(0, 0)].re - 1.0).abs() < 1e-15);
        let rep = RepresentationSample::sample(Flavor::Unitary, 3, 2, 1).unwrap();
        let v = verify_step(&hs, &rep, false).unwrap();
        assert!(v.residual < 1e-12);
    }

    #[test]
    fn non_hermitian_rejected() {
        let mut cm = CoefficientMap::new(1);
        cm.insert(ReducedWord::letter(1), CMatrix::identity(1, 1)).unwrap();
        assert!(matches!(half_step(&cm, 2), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn depth_values() {
        assert_eq!([1, 2, 3, 4, 5, 8, 9].map(depth), [0, 1, 2, 2, 3, 3, 4]);
    }

    #[test]
    fn epsilon_examples() {
        let e = propagate_epsilon(0.0, 4, 3).unwrap();
        assert_eq!(e.exact, 0.0);
        let e = propagate_epsilon(0.01, 2, 3).unwrap();
        assert!((e.closed_form - 0.24).abs() < 1e-15);
        assert!((e.exact - 0.48).abs() < 1e-15);
        let e = propagate_epsilon(0.2, 4, 5).unwrap();
        assert!((e.closed_form - 640.0).abs() < 1e-9);
        assert!(!e.admissible && !e.closed_form_admissible);
        assert!(propagate_epsilon(1.0, 2, 1).is_err());
    }

    #[test]
    fn chain_l4_dimension() {
        let s: SupportSet = [
            ReducedWord::reduce(&[1, 2, 1, 2], 2).unwrap(),
            ReducedWord::reduce(&[-2, -1, -2, -1], 2).unwrap(),
            ReducedWord::identity(),
        ]
        .into_iter()
        .collect();
        let plan = plan_chain(&s, 4).unwrap();
        assert_eq!(plan.v, 2);
        assert_eq!(plan.dimension_bound, 288.0);
        assert!(plan.n_v as f64 <= 288.0);
        assert!(plan.final_in_b1());
    }
}
