//! Noncommutative polynomials ∑ a_γ ⊗ ρ(γ): coefficient maps, assembly
//! against a sampled representation, and lower bounds for the norm in the
//! right regular representation of F_d by compression to word-metric balls.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::free_group::{ball_size, generator_letters, ReducedWord, SupportSet};
use crate::linalg::{
    dense_norm, hermitian_defect, spectral_norm, CMatrix, LanczosOptions, LinearOperator,
    NormEstimate, Scalar, StartVector, C64,
};
use crate::representations::{RepAction, RepresentationSample};

/// Default cap on entries of a materialized dense operator.
pub const DEFAULT_DENSE_CAP: usize = 4000 * 4000;

/// Default cap on the number of vertices in a compressed Cayley ball.
pub const DEFAULT_TREE_BUDGET: usize = 20_000_000;

/// Tolerance for treating a coefficient map as hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Finitely supported γ ↦ a_γ ∈ M_m(ℂ).
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMap {
    m: usize,
    entries: BTreeMap<ReducedWord, CMatrix>,
}

#[derive(Serialize, Deserialize)]
struct CoefficientWire {
    m: usize,
    entries: Vec<(ReducedWord, Vec<[f64; 2]>)>,
}

impl CoefficientMap {
    pub fn new(m: usize) -> Self {
        assert!(m > 0, "coefficient dimension must be positive");
        CoefficientMap { m, entries: BTreeMap::new() }
    }

    /// {∅ ↦ Id_m}.
    pub fn identity(m: usize) -> Self {
        let mut c = Self::new(m);
        c.entries.insert(ReducedWord::identity(), CMatrix::identity(m, m));
        c
    }

    /// m = 1, ∑_i (g_i + g_i⁻¹).
    pub fn generator_sum(d: usize) -> Self {
        let mut c = Self::new(1);
        for x in generator_letters(d) {
            c.entries.insert(ReducedWord::letter(x), CMatrix::from_element(1, 1, C64::new(1.0, 0.0)));
        }
        c
    }

    /// Adds `a` to the coefficient of `w`.
    pub fn insert(&mut self, w: ReducedWord, a: CMatrix) -> Result<()> {
        if a.nrows() != self.m || a.ncols() != self.m {
            return Err(Error::Shape(format!(
                "coefficient is {}x{}, expected {}x{}",
                a.nrows(),
                a.ncols(),
                self.m,
                self.m
            )));
        }
        match self.entries.get_mut(&w) {
            Some(e) => *e += a,
            None => {
                self.entries.insert(w, a);
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, w: &ReducedWord) -> Option<&CMatrix> {
        self.entries.get(w)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ReducedWord, &CMatrix)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn support(&self) -> SupportSet {
        self.entries.keys().cloned().collect()
    }

    pub fn radius(&self) -> usize {
        self.entries.keys().map(ReducedWord::len).max().unwrap_or(0)
    }

    /// max over γ of |a_γ − (a_{γ⁻¹})*|, absent entries read as zero.
    pub fn hermitian_defect(&self) -> f64 {
        let zero = CMatrix::zeros(self.m, self.m);
        let mut d: f64 = 0.0;
        for (w, a) in &self.entries {
            let b = self.entries.get(&w.inverse()).unwrap_or(&zero);
            let diff = a - b.adjoint();
            d = d.max(diff.iter().map(|z| z.norm()).fold(0.0, f64::max));
        }
        d
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.entries.values().flat_map(|a| a.iter()).map(|z| z.norm()).fold(1.0, f64::max);
        self.hermitian_defect() <= HERMITIAN_TOL * scale
    }

    /// True when every coefficient has zero imaginary part.
    pub fn is_real(&self) -> bool {
        self.entries.values().all(|a| a.iter().all(|z| z.im == 0.0))
    }

    /// ∑ ‖a_γ‖, an upper bound for the norm under any unitary representation.
    pub fn triangle_upper(&self) -> f64 {
        self.entries.values().map(dense_norm).sum()
    }

    /// Stable short content hash.
    pub fn id(&self) -> String {
        let json = self.to_json().unwrap_or_default();
        let digest = Sha256::digest(json.as_bytes());
        digest[..6].iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let wire = CoefficientWire {
            m: self.m,
            entries: self
                .entries
                .iter()
                .map(|(w, a)| {
                    let mut flat = Vec::with_capacity(self.m * self.m);
                    for i in 0..self.m {
                        for j in 0..self.m {
                            let z = a[(i, j)];
                            flat.push([z.re, z.im]);
                        }
                    }
                    (w.clone(), flat)
                })
                .collect(),
        };
        Ok(serde_json::to_string(&wire)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let wire: CoefficientWire = serde_json::from_str(s)?;
        if wire.m == 0 {
            return Err(Error::Shape("coefficient dimension must be positive".into()));
        }
        let mut c = Self::new(wire.m);
        for (w, flat) in wire.entries {
            if flat.len() != wire.m * wire.m {
                return Err(Error::Shape(format!("entry for {w} has {} values", flat.len())));
            }
            let a = CMatrix::from_row_iterator(wire.m, wire.m, flat.iter().map(|p| C64::new(p[0], p[1])));
            c.insert(w, a)?;
        }
        Ok(c)
    }

    /// The map γ ↦ a_{γ⁻¹}.
    pub fn reindex_inverse(&self) -> Self {
        CoefficientMap {
            m: self.m,
            entries: self.entries.iter().map(|(w, a)| (w.inverse(), a.clone())).collect(),
        }
    }
}

/// Antidiagonal doubling b_γ = [[0, a_γ], [(a_{γ⁻¹})*, 0]]; the result is
/// hermitian and has the same norm under every unitary representation.
pub fn hermitize(cm: &CoefficientMap) -> CoefficientMap {
    let m = cm.m;
    let zero = CMatrix::zeros(m, m);
    let mut out = CoefficientMap::new(2 * m);
    for w in cm.support().symmetric_closure().iter() {
        let a = cm.get(w).unwrap_or(&zero);
        let a_inv = cm.get(&w.inverse()).unwrap_or(&zero);
        let mut b = CMatrix::zeros(2 * m, 2 * m);
        b.view_mut((0, m), (m, m)).copy_from(a);
        b.view_mut((m, 0), (m, m)).copy_from(&a_inv.adjoint());
        out.entries.insert(w.clone(), b);
    }
    out
}

/// ∑ a_γ ⊗ ρ(γ) as a matrix-free operator. Vectors are laid out with the
/// coefficient index fastest: entry (a, j) sits at a + m·j.
#[derive(Clone, Debug)]
pub struct AssembledOperator {
    m: usize,
    dim: usize,
    terms: Vec<(CMatrix, RepAction)>,
    zero_mean: bool,
    self_adjoint: bool,
    pub provenance: (String, String),
}

/// Assembles ∑ a_γ ⊗ ρ(γ), optionally compressed to zero-mean vectors.
pub fn assemble(cm: &CoefficientMap, rep: &RepresentationSample, zero_mean: bool) -> Result<AssembledOperator> {
    if cm.support().max_generator() > rep.d {
        return Err(Error::Shape(format!(
            "coefficient support uses generator {} but the representation has rank {}",
            cm.support().max_generator(),
            rep.d
        )));
    }
    if zero_mean && rep.flavor != crate::representations::Flavor::Permutation {
        return Err(Error::Flavor("zero-mean restriction needs a permutation representation".into()));
    }
    let mut terms = Vec::with_capacity(cm.len());
    for (w, a) in cm.iter() {
        terms.push((a.clone(), rep.action(w)?));
    }
    Ok(AssembledOperator {
        m: cm.m,
        dim: rep.n,
        terms,
        zero_mean,
        self_adjoint: cm.is_hermitian(),
        provenance: (cm.id(), rep.id()),
    })
}

impl AssembledOperator {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Representation dimension.
    pub fn rep_dim(&self) -> usize {
        self.dim
    }

    pub fn zero_mean(&self) -> bool {
        self.zero_mean
    }

    fn project(&self, x: &[C64]) -> CMatrix {
        let mut xm = DMatrixView::from_slice(x, self.m, self.dim).into_owned();
        if self.zero_mean {
            for a in 0..self.m {
                let mean = xm.row(a).sum() / self.dim as f64;
                xm.row_mut(a).add_scalar_mut(-mean);
            }
        }
        xm
    }

    fn apply_impl(&self, x: &[C64], y: &mut [C64], adjoint: bool) {
        let xm = self.project(x);
        let mut ym = DMatrixViewMut::from_slice(y, self.m, self.dim);
        ym.fill(C64::new(0.0, 0.0));
        for (a, action) in &self.terms {
            let z = if adjoint { a.adjoint() * &xm } else { a * &xm };
            match action {
                RepAction::Permutation(p) => {
                    for (k, &img) in p.iter().enumerate() {
                        let (src, dst) = if adjoint { (img as usize, k) } else { (k, img as usize) };
                        let mut col = ym.column_mut(dst);
                        col += z.column(src);
                    }
                }
                RepAction::Dense(r) => {
                    if adjoint {
                        ym.gemm(C64::new(1.0, 0.0), &z, &r.map(|c| c.conj()), C64::new(1.0, 0.0));
                    } else {
                        ym.gemm(C64::new(1.0, 0.0), &z, &r.transpose(), C64::new(1.0, 0.0));
                    }
                }
            }
        }
    }

    /// Materializes the operator, refusing beyond `cap` entries.
    pub fn to_dense_capped(&self, cap: usize) -> Result<CMatrix> {
        let size = self.m * self.dim;
        if size.saturating_mul(size) > cap {
            return Err(Error::Budget { what: "dense assembly".into(), needed: (size * size) as u128, budget: cap });
        }
        let p = crate::representations::ZeroMeanProjector { n: self.dim }.matrix();
        let mut out = CMatrix::zeros(size, size);
        for (a, action) in &self.terms {
            let mut r = action.to_matrix();
            if self.zero_mean {
                r = &p * r * &p;
            }
            out += r.kronecker(a);
        }
        Ok(out)
    }

    pub fn to_dense(&self) -> Result<CMatrix> {
        self.to_dense_capped(DEFAULT_DENSE_CAP)
    }

    pub fn norm(&self, opts: &LanczosOptions) -> Result<NormEstimate> {
        spectral_norm(self, opts)
    }
}

impl LinearOperator<C64> for AssembledOperator {
    fn dim(&self) -> usize {
        self.m * self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, false)
    }

    fn apply_adjoint(&self, x: &[C64], y: &mut [C64]) {
        self.apply_impl(x, y, true)
    }

    fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }
}

/// The ball B_R in the Cayley tree of F_d, stored implicitly as a BFS
/// numbering with parent and child links.
#[derive(Clone, Debug)]
pub struct CayleyBall {
    d: usize,
    radius: usize,
    parent: Vec<u32>,
    last: Vec<i8>,
    first_child: Vec<u32>,
}

const NO_CHILD: u32 = u32::MAX;

fn letter_slot(x: i32) -> usize {
    2 * (x.unsigned_abs() as usize - 1) + usize::from(x < 0)
}

impl CayleyBall {
    pub fn new(d: usize, radius: usize, budget: usize) -> Result<Self> {
        if d == 0 || d > 127 {
            return Err(Error::Dimension(format!("unsupported rank {d}")));
        }
        let needed = ball_size(d, radius);
        if needed > budget as u128 || needed >= NO_CHILD as u128 {
            return Err(Error::Budget { what: format!("Cayley ball B_{radius} in F_{d}"), needed, budget });
        }
        let size = needed as usize;
        let letters = generator_letters(d);
        let mut parent = Vec::with_capacity(size);
        let mut last = Vec::with_capacity(size);
        let mut first_child = vec![NO_CHILD; size];
        parent.push(0);
        last.push(0i8);
        let mut level = 0..1usize;
        for _ in 0..radius {
            let start = parent.len();
            for v in level.clone() {
                first_child[v] = parent.len() as u32;
                let lv = last[v] as i32;
                for &x in &letters {
                    if v != 0 && x == -lv {
                        continue;
                    }
                    parent.push(v as u32);
                    last.push(x as i8);
                }
            }
            level = start..parent.len();
        }
        debug_assert_eq!(parent.len(), size);
        Ok(CayleyBall { d, radius, parent, last, first_child })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    /// Vertex x·s, if it lies in the ball.
    pub fn step(&self, v: u32, x: i32) -> Option<u32> {
        let vi = v as usize;
        if vi != 0 && self.last[vi] as i32 == -x {
            return Some(self.parent[vi]);
        }
        let fc = self.first_child[vi];
        if fc == NO_CHILD {
            return None;
        }
        let slot = letter_slot(x);
        let pos = if vi == 0 {
            slot
        } else {
            let banned = letter_slot(-(self.last[vi] as i32));
            slot - usize::from(slot > banned)
        };
        Some(fc + pos as u32)
    }

    pub fn walk(&self, mut v: u32, letters: &[i32]) -> Option<u32> {
        for &x in letters {
            v = self.step(v, x)?;
        }
        Some(v)
    }

    pub fn index_of(&self, w: &ReducedWord) -> Option<u32> {
        if w.max_generator() > self.d {
            return None;
        }
        self.walk(0, w.letters())
    }

    pub fn word(&self, mut v: u32) -> ReducedWord {
        let mut letters = Vec::new();
        while v != 0 {
            letters.push(self.last[v as usize] as i32);
            v = self.parent[v as usize];
        }
        letters.reverse();
        ReducedWord::reduce(&letters, self.d).expect("stored letters are valid")
    }
}

/// Compression of ∑ a_γ ⊗ λ(γ) to ℂ^m ⊗ ℓ²(B_R):
/// (Cf)(x) = ∑_γ a_γ f(xγ), terms leaving the ball dropped.
struct BallOperator<'a, T: Scalar> {
    ball: &'a CayleyBall,
    m: usize,
    terms: Vec<(Vec<i32>, DMatrix<T>)>,
    adjoint_terms: Vec<(Vec<i32>, DMatrix<T>)>,
}

impl<T: Scalar> BallOperator<'_, T> {
    fn apply_terms(&self, terms: &[(Vec<i32>, DMatrix<T>)], x: &[T], y: &mut [T]) {
        let m = self.m;
        for v in 0..self.ball.len() {
            let out = &mut y[v * m..(v + 1) * m];
            out.iter_mut().for_each(|z| *z = T::zero());
            for (letters, a) in terms {
                let Some(u) = self.ball.walk(v as u32, letters) else { continue };
                let src = &x[u as usize * m..(u as usize + 1) * m];
                for i in 0..m {
                    let mut acc = T::zero();
                    for j in 0..m {
                        acc += a[(i, j)] * src[j];
                    }
                    out[i] += acc;
                }
            }
        }
    }
}

impl<T: Scalar> LinearOperator<T> for BallOperator<'_, T> {
    fn dim(&self) -> usize {
        self.ball.len() * self.m
    }

    fn apply(&self, x: &[T], y: &mut [T]) {
        self.apply_terms(&self.terms, x, y)
    }

    fn apply_adjoint(&self, x: &[T], y: &mut [T]) {
        self.apply_terms(&self.adjoint_terms, x, y)
    }

    fn is_self_adjoint(&self) -> bool {
        true
    }
}

/// Options for `regular_norm_lower`.
#[derive(Clone, Copy, Debug)]
pub struct RegularNormOptions {
    pub lanczos: LanczosOptions,
    pub tree_budget: usize,
}

impl Default for RegularNormOptions {
    fn default() -> Self {
        RegularNormOptions { lanczos: LanczosOptions::default(), tree_budget: DEFAULT_TREE_BUDGET }
    }
}

/// Norm of the compression of ∑ a_γ ⊗ λ(γ) to B_R, a lower bound for the
/// norm on ℓ²(F_d) that is non-decreasing in R.
pub fn regular_norm_lower(cm: &CoefficientMap, radius: usize, tol: f64) -> Result<f64> {
    let opts = RegularNormOptions { lanczos: LanczosOptions::default().with_tol(tol), ..Default::default() };
    regular_norm_lower_with(cm, radius, &opts).map(|e| e.value)
}

pub fn regular_norm_lower_with(cm: &CoefficientMap, radius: usize, opts: &RegularNormOptions) -> Result<NormEstimate> {
    if radius < cm.radius() {
        return Err(Error::Domain(format!("radius {radius} is below the support radius {}", cm.radius())));
    }
    let herm;
    let cm = if cm.is_hermitian() {
        cm
    } else {
        herm = hermitize(cm);
        &herm
    };
    if cm.is_empty() {
        return Ok(NormEstimate { value: 0.0, lower: 0.0, upper: 0.0, iterations: 0 });
    }
    let d = cm.support().max_generator().max(1);
    let ball = CayleyBall::new(d, radius, opts.tree_budget)?;
    let mut lz = opts.lanczos;
    // Beyond the reorthogonalization budget a start vector constant along the
    // ball keeps the Krylov space inside the symmetric sector.
    if ball.len() * cm.m() * 64 > lz.reorth_budget {
        lz.start = StartVector::Tiled { period: cm.m() };
    }
    if cm.is_real() {
        let terms: Vec<(Vec<i32>, DMatrix<f64>)> =
            cm.iter().map(|(w, a)| (w.letters().to_vec(), a.map(|z| z.re))).collect();
        let adjoint_terms = terms.iter().map(|(w, a)| (inverse_letters(w), a.transpose())).collect();
        let op = BallOperator { ball: &ball, m: cm.m(), terms, adjoint_terms };
        spectral_norm(&op, &lz)
    } else {
        let terms: Vec<(Vec<i32>, CMatrix)> = cm.iter().map(|(w, a)| (w.letters().to_vec(), a.clone())).collect();
        let adjoint_terms = terms.iter().map(|(w, a)| (inverse_letters(w), a.adjoint())).collect();
        let op = BallOperator { ball: &ball, m: cm.m(), terms, adjoint_terms };
        spectral_norm(&op, &lz)
    }
}

fn inverse_letters(w: &[i32]) -> Vec<i32> {
    w.iter().rev().map(|x| -x).collect()
}

/// Dense compression to B_R, for cross-checks on small balls.
pub fn regular_compression_dense(cm: &CoefficientMap, radius: usize) -> Result<CMatrix> {
    let d = cm.support().max_generator().max(1);
    let ball = CayleyBall::new(d, radius, 20_000)?;
    let m = cm.m();
    let n = ball.len();
    let mut out = CMatrix::zeros(n * m, n * m);
    for v in 0..n {
        for (w, a) in cm.iter() {
            if let Some(u) = ball.walk(v as u32, w.letters()) {
                let mut blk = out.view_mut((v * m, u as usize * m), (m, m));
                blk += a;
            }
        }
    }
    Ok(out)
}

/// Self-adjointness defect of a dense assembly.
pub fn assembly_defect(a: &CMatrix) -> f64 {
    hermitian_defect(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::representations::Flavor;

    #[test]
    fn ball_navigation_matches_words() {
        let ball = CayleyBall::new(2, 4, 1000).unwrap();
        assert_eq!(ball.len(), 161);
        for v in 0..ball.len() as u32 {
            let w = ball.word(v);
            assert_eq!(ball.index_of(&w), Some(v));
            for x in [1, -1, 2, -2] {
                let wx = w.mul(&ReducedWord::letter(x));
                assert_eq!(ball.step(v, x), ball.index_of(&wx).filter(|_| wx.len() <= 4));
            }
        }
    }

    #[test]
    fn generator_sum_row_sums() {
        let cm = CoefficientMap::generator_sum(2);
        let rep = RepresentationSample::sample(Flavor::Permutation, 9, 2, 4).unwrap();
        let op = assemble(&cm, &rep, false).unwrap();
        let n = op.norm(&LanczosOptions::default()).unwrap();
        assert!((n.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_free_matches_dense() {
        let mut cm = CoefficientMap::new(2);
        cm.insert(ReducedWord::letter(1), CMatrix::from_fn(2, 2, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5))).unwrap();
        cm.insert(ReducedWord::reduce(&[2, -1], 2).unwrap(), CMatrix::from_fn(2, 2, |i, j| C64::new(0.3, (i * j) as f64))).unwrap();
        for (flavor, zm) in [(Flavor::Unitary, false), (Flavor::Permutation, true), (Flavor::Permutation, false)] {
            let rep = RepresentationSample::sample(flavor, 5, 2, 8).unwrap();
            let op = assemble(&cm, &rep, zm).unwrap();
            let dense = op.to_dense().unwrap();
            let x: Vec<C64> = (0..10).map(|k| C64::new(k as f64, 1.0 - k as f64)).collect();
            let mut y = vec![C64::new(0.0, 0.0); 10];
            op.apply(&x, &mut y);
            let want = &dense * nalgebra::DVector::from_vec(x.clone());
            for k in 0..10 {
                assert!((y[k] - want[k]).norm() < 1e-12);
            }
            op.apply_adjoint(&x, &mut y);
            let want = dense.adjoint() * nalgebra::DVector::from_vec(x);
            for k in 0..10 {
                assert!((y[k] - want[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hermitize_scalar_examples() {
        let rep = RepresentationSample::sample(Flavor::Unitary, 4, 1, 2).unwrap();
        for cm in [CoefficientMap::identity(1), {
            let mut c = CoefficientMap::new(1);
            c.insert(ReducedWord::letter(1), CMatrix::identity(1, 1)).unwrap();
            c
        }] {
            let h = hermitize(&cm);
            assert!(h.is_hermitian());
            let n = assemble(&h, &rep, false).unwrap().norm(&LanczosOptions::default()).unwrap();
            assert!((n.value - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn json_roundtrip() {
        let mut cm = CoefficientMap::generator_sum(2);
        cm.insert(ReducedWord::identity(), CMatrix::from_element(1, 1, C64::new(0.5, -0.25))).unwrap();
        let back = CoefficientMap::from_json(&cm.to_json().unwrap()).unwrap();
        assert_eq!(cm, back);
        assert_eq!(cm.id(), back.id());
    }

    #[test]
    fn regular_norm_trivial_cases() {
        let a = CMatrix::from_fn(2, 2, |i, j| C64::new((i + 2 * j) as f64, 0.0));
        let mut cm = CoefficientMap::new(2);
        cm.insert(ReducedWord::identity(), a.clone()).unwrap();
        let want = dense_norm(&a);
        for r in [0, 2, 4] {
            assert!((regular_norm_lower(&cm, r, 1e-10).unwrap() - want).abs() < 1e-8);
        }
        let mut cm = CoefficientMap::new(2);
        cm.insert(ReducedWord::reduce(&[1, 2], 2).unwrap(), a).unwrap();
        assert!((regular_norm_lower(&cm, 4, 1e-10).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn dense_compression_agrees() {
        let cm = CoefficientMap::generator_sum(2);
        let dense = regular_compression_dense(&cm, 4).unwrap();
        let want = dense_norm(&dense);
        let got = regular_norm_lower(&cm, 4, 1e-11).unwrap();
        assert!((want - got).abs() < 1e-9);
    }
}
