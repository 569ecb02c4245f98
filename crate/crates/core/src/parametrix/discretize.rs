//! Discretized remainder operators a_γ(s) on a truncated fundamental region.
//!
//! The region is the rectangle [−x₀, x₀] × [y_floor, L] with L = C/κ. Nodes
//! sit at cell centres in (x, 1/y); each weight is the midpoint estimate of
//! the cell's hyperbolic area. Matrices are written in the orthonormal basis
//! of normalized cell indicators, so A_ij = √w_i · 𝕃(s; d(γx_i, y_j)) ·
//! (1 − χ⁻(y_j)) · √w_j and the Frobenius norm of A is the HS norm.

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::free_group::ReducedWord;
use crate::hyperbolic::{hyp_distance, Point, SurfaceModel};
use crate::linalg::dense_norm;

use super::cutoffs::{build_cutoffs, CutoffPair};
use super::kernel::RemainderTable;

/// Allowed relative mismatch between the weight sum and the exact area.
pub const AREA_TOLERANCE: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_half_width: f64,
    pub y_floor: f64,
}

impl GridSpec {
    pub fn square(n: usize) -> Self {
        GridSpec { nx: n, ny: n, x_half_width: 1.0, y_floor: 0.5 }
    }

    pub fn refined(&self) -> Self {
        GridSpec { nx: 2 * self.nx, ny: 2 * self.ny, ..*self }
    }

    pub fn nodes(&self) -> usize {
        self.nx * self.ny
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::square(20)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegionGrid {
    pub spec: GridSpec,
    pub height: f64,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    pub exact_area: f64,
    pub weight_sum: f64,
    /// max_j d(w, y_j) for the model base point w.
    pub radius: f64,
}

impl RegionGrid {
    pub fn new(spec: GridSpec, height: f64, base_point: Point) -> Result<Self> {
        if spec.nx == 0 || spec.ny == 0 {
            return Err(Error::Grid("grid needs at least one cell per axis".into()));
        }
        if !(spec.x_half_width > 0.0 && spec.y_floor > 0.0) {
            return Err(Error::Grid("grid extents must be positive".into()));
        }
        if !(height > spec.y_floor) {
            return Err(Error::Grid(format!(
                "cusp height {height} is not above the floor {}",
                spec.y_floor
            )));
        }
        let (v_lo, v_hi) = (1.0 / height, 1.0 / spec.y_floor);
        let dx = 2.0 * spec.x_half_width / spec.nx as f64;
        let dv = (v_hi - v_lo) / spec.ny as f64;
        let mut nodes = Vec::with_capacity(spec.nodes());
        let mut weights = Vec::with_capacity(spec.nodes());
        for j in 0..spec.ny {
            let (a, b) = (v_lo + j as f64 * dv, v_lo + (j + 1) as f64 * dv);
            let vc = 0.5 * (a + b);
            let yc = 1.0 / vc;
            let w = dx * (1.0 / a - 1.0 / b) / (yc * yc);
            for i in 0..spec.nx {
                nodes.push([-spec.x_half_width + (i as f64 + 0.5) * dx, yc]);
                weights.push(w);
            }
        }
        let exact_area = 2.0 * spec.x_half_width * (v_hi - v_lo);
        let weight_sum: f64 = weights.iter().sum();
        if (weight_sum - exact_area).abs() > AREA_TOLERANCE * exact_area {
            return Err(Error::Grid(format!(
                "weight sum {weight_sum:.4} differs from region area {exact_area:.4} by more than 5%"
            )));
        }
        let radius = nodes
            .iter()
            .map(|p| hyp_distance(base_point, Point::new(p[0], p[1])))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(RegionGrid { spec, height, nodes, weights, exact_area, weight_sum, radius })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn point(&self, j: usize) -> Point {
        Point::new(self.nodes[j][0], self.nodes[j][1])
    }
}

/// Everything fixed across the (γ, s) jobs of one parametrix instance.
#[derive(Debug)]
pub struct ParametrixContext {
    pub model: SurfaceModel,
    pub t: f64,
    pub kappa: f64,
    pub grid: RegionGrid,
    pub cutoffs: CutoffPair,
    /// Budget for ‖a_γ‖_HS, C·Vol(X)² with Vol(X) = 2π.
    pub hs_budget: f64,
    tables: Mutex<BTreeMap<u64, Arc<RemainderTable>>>,
}

impl ParametrixContext {
    pub fn new(model: SurfaceModel, t: f64, kappa: f64, spec: GridSpec) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("T must be positive, got {t}")));
        }
        let cutoffs = build_cutoffs(kappa)?;
        let grid = RegionGrid::new(spec, model.cusp_region_height(kappa), model.base_point)?;
        let vol = 2.0 * std::f64::consts::PI;
        Ok(ParametrixContext {
            model,
            t,
            kappa,
            grid,
            cutoffs,
            hs_budget: vol * vol,
            tables: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn with_hs_budget(mut self, budget: f64) -> Self {
        self.hs_budget = budget;
        self
    }

    /// Cached interpolation table for 𝕃(s; ·).
    pub fn table(&self, s: f64) -> Result<Arc<RemainderTable>> {
        let key = s.to_bits();
        if let Some(t) = self.tables.lock().unwrap().get(&key) {
            return Ok(t.clone());
        }
        let table = Arc::new(RemainderTable::new(s, self.t, RemainderTable::DEFAULT_INTERVALS)?);
        self.tables.lock().unwrap().insert(key, table.clone());
        Ok(table)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct DiscretizedAGamma {
    pub gamma: ReducedWord,
    pub s: f64,
    pub t: f64,
    pub kappa: f64,
    pub nodes: usize,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
    pub hs_norm: f64,
    pub singular_values: Vec<f64>,
    /// Zero because d(γw, w) − 2·radius > T + 1, without evaluating the kernel.
    pub zero_by_support: bool,
    pub within_hs_budget: bool,
}

impl DiscretizedAGamma {
    pub fn is_zero(&self) -> bool {
        self.hs_norm == 0.0
    }

    pub fn write_spectrum_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["gamma", "s", "T", "index", "singular_value"])?;
        for (k, sv) in self.singular_values.iter().enumerate() {
            w.write_record([
                self.gamma.to_string(),
                self.s.to_string(),
                self.t.to_string(),
                k.to_string(),
                format!("{sv:e}"),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn kernel_matrix(ctx: &ParametrixContext, gamma: &ReducedWord, s: f64) -> Result<(DMatrix<f64>, bool)> {
    let g = ctx.model.word_to_moebius(gamma)?;
    let n = ctx.grid.len();
    let reach = ctx.model.displacement(&g) - 2.0 * ctx.grid.radius;
    if reach > ctx.t + 1.0 {
        return Ok((DMatrix::zeros(n, n), true));
    }
    let table = ctx.table(s)?;
    let sqrt_w: Vec<f64> = ctx.grid.weights.iter().map(|w| w.sqrt()).collect();
    let col_factor: Vec<f64> = (0..n)
        .map(|j| sqrt_w[j] * (1.0 - ctx.cutoffs.chi_minus(ctx.grid.nodes[j][1])))
        .collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let gx = g.apply(ctx.grid.point(i));
            (0..n)
                .map(|j| {
                    let r = hyp_distance(gx, ctx.grid.point(j)).unwrap_or(f64::NAN);
                    sqrt_w[i] * table.eval(r) * col_factor[j]
                })
                .collect()
        })
        .collect();
    let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric(format!("non-finite kernel entry for γ = {gamma}")));
    }
    Ok((m, false))
}

/// Builds a_γ(s) on the context grid.
pub fn discretize_a_gamma(ctx: &ParametrixContext, gamma: &ReducedWord, s: f64) -> Result<DiscretizedAGamma> {
    let (matrix, zero_by_support) = kernel_matrix(ctx, gamma, s)?;
    let hs_norm = matrix.norm();
    let singular_values = if hs_norm == 0.0 {
        vec![0.0; matrix.nrows()]
    } else {
        matrix.clone().svd(false, false).singular_values.iter().copied().collect()
    };
    Ok(DiscretizedAGamma {
        gamma: gamma.clone(),
        s,
        t: ctx.t,
        kappa: ctx.kappa,
        nodes: matrix.nrows(),
        hs_norm,
        singular_values,
        zero_by_support,
        within_hs_budget: hs_norm <= ctx.hs_budget,
        matrix,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Truncation {
    pub rank: usize,
    pub target: f64,
    /// s_{r+1}, the predicted residual norm.
    pub predicted_error: f64,
    /// Spectral norm of the residual matrix, computed afresh.
    pub residual_norm: f64,
    pub target_met: bool,
    /// ⌈400 · ‖a‖²_HS · |S(T)|²⌉.
    pub rank_bound: u128,
    #[serde(skip)]
    pub matrix: DMatrix<f64>,
}

/// Minimal-rank SVD truncation with residual ≤ 1/(20|S(T)|).
pub fn svd_truncate(ag: &DiscretizedAGamma, s_size: usize) -> Result<Truncation> {
    if s_size == 0 {
        return Err(Error::Domain("|S(T)| must be positive".into()));
    }
    let target = 1.0 / (20.0 * s_size as f64);
    let n = ag.matrix.nrows();
    let rank_bound = (400.0 * ag.hs_norm * ag.hs_norm * (s_size * s_size) as f64).ceil() as u128;
    if ag.hs_norm == 0.0 {
        return Ok(Truncation {
            rank: 0,
            target,
            predicted_error: 0.0,
            residual_norm: 0.0,
            target_met: true,
            rank_bound,
            matrix: DMatrix::zeros(n, ag.matrix.ncols()),
        });
    }
    let svd = ag.matrix.clone().svd(true, true);
    let sv = &svd.singular_values;
    let rank = (0..sv.len()).find(|&r| sv[r] <= target).unwrap_or(sv.len());
    let u = svd.u.as_ref().expect("requested");
    let vt = svd.v_t.as_ref().expect("requested");
    let mut out = DMatrix::zeros(n, ag.matrix.ncols());
    for k in 0..rank {
        out += (u.column(k) * sv[k]) * vt.row(k);
    }
    let residual_norm = dense_norm(&(&ag.matrix - &out));
    Ok(Truncation {
        rank,
        target,
        predicted_error: if rank < sv.len() { sv[rank] } else { 0.0 },
        residual_norm,
        target_met: residual_norm <= target,
        rank_bound,
        matrix: out,
    })
}

/// ‖a_γ(s₁) − a_γ(s₂)‖ / |s₁ − s₂|.
pub fn deviation_check(ctx: &ParametrixContext, gamma: &ReducedWord, s1: f64, s2: f64) -> Result<f64> {
    if s1 == s2 {
        return Err(Error::Domain("deviation needs s₁ ≠ s₂".into()));
    }
    for s in [s1, s2] {
        if !(0.5..=1.0).contains(&s) {
            return Err(Error::Domain(format!("s = {s} outside [1/2, 1]")));
        }
    }
    let (a, _) = kernel_matrix(ctx, gamma, s1)?;
    let (b, _) = kernel_matrix(ctx, gamma, s2)?;
    Ok(dense_norm(&(a - b)) / (s1 - s2).abs())
}

/// c₃ as the maximum deviation ratio over consecutive pairs of an s grid and
/// a set of words.
pub fn fit_deviation_constant(ctx: &ParametrixContext, words: &[ReducedWord], s_grid: &[f64]) -> Result<f64> {
    let mut c3: f64 = 0.0;
    for g in words {
        for pair in s_grid.windows(2) {
            c3 = c3.max(deviation_check(ctx, g, pair[0], pair[1])?);
        }
    }
    Ok(c3)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(n: usize) -> ParametrixContext {
        ParametrixContext::new(SurfaceModel::punctured_torus(), 3.0, 0.5, GridSpec::square(n)).unwrap()
    }

    #[test]
    fn weights_track_area() {
        let c = ctx(12);
        assert!((c.grid.weight_sum / c.grid.exact_area - 1.0).abs() < 0.01);
        assert_eq!(c.grid.len(), 144);
    }

    #[test]
    fn coarse_tall_grid_rejected() {
        let spec = GridSpec::square(3);
        assert!(matches!(RegionGrid::new(spec, 100.0, Point::new(0.0, 1.0)), Err(Error::Grid(_))));
    }

    #[test]
    fn far_word_is_zero() {
        let c = ctx(6);
        let w = ReducedWord::reduce(&[1, 1, 1, 1, 1, 1], 2).unwrap();
        let ag = discretize_a_gamma(&c, &w, 0.8).unwrap();
        assert!(ag.zero_by_support && ag.is_zero());
        assert_eq!(svd_truncate(&ag, 3).unwrap().rank, 0);
    }

    #[test]
    fn hs_matches_singular_values() {
        let c = ctx(8);
        let w = ReducedWord::reduce(&[1, 2], 2).unwrap();
        let ag = discretize_a_gamma(&c, &w, 0.7).unwrap();
        let s2: f64 = ag.singular_values.iter().map(|x| x * x).sum();
        assert!((s2 - ag.hs_norm * ag.hs_norm).abs() <= 1e-8 * s2.max(1e-300));
    }

    #[test]
    fn rank_one_truncation() {
        let mut m = DMatrix::zeros(4, 4);
        m[(0, 0)] = 1.0;
        let ag = DiscretizedAGamma {
            gamma: ReducedWord::identity(),
            s: 1.0,
            t: 1.0,
            kappa: 1.0,
            nodes: 4,
            matrix: m,
            hs_norm: 1.0,
            singular_values: vec![1.0, 0.0, 0.0, 0.0],
            zero_by_support: false,
            within_hs_budget: true,
        };
        let tr = svd_truncate(&ag, 1).unwrap();
        assert_eq!(tr.rank, 1);
        assert!(tr.residual_norm < 1e-14);
    }
}
