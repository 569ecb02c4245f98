//! Schedules κ(n), T(n), the admissibility inequalities for the strong
//! convergence inputs, the ε-net over s, and the Neumann-series verdict.
//!
//! Nothing here certifies a spectral gap: constants c₁, c₂, c₄, c₅ are
//! unknown and taken from configuration, and the toy pipeline replaces the
//! probabilistic norm bound by a measured norm.

use std::fmt::Write as _;
use std::io::Write;

use num_complex::Complex64;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::free_group::ReducedWord;
use crate::hyperbolic::{lattice_point_set, LatticeQuery, SurfaceModel};
use crate::linalg::{CMatrix, LanczosOptions};
use crate::operator_lab::{assemble, hermitize, CoefficientMap};
use crate::parametrix::{discretize_a_gamma, svd_truncate, GridSpec, ParametrixContext};
use crate::parametrix::discretize::fit_deviation_constant;
use crate::representations::{Flavor, RepresentationSample};

/// Upper bound on ‖𝕃^cusp(s)‖ from the cutoff derivative bounds.
pub const NORM_CUSP_BOUND: f64 = 0.125;
/// Target for sup_{s ∈ net} ‖𝕃^int(s)‖ before the Lipschitz extension.
pub const NET_TARGET: f64 = 0.4;
/// Slack spent on replacing each a_γ by its finite-rank truncation.
pub const FINITE_RANK_SLACK: f64 = 0.05;

/// Unknown constants, default 1. Always echoed in reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapConstants {
    pub c1: f64,
    pub c2: f64,
    pub c4: f64,
    pub c5: f64,
}

impl Default for GapConstants {
    fn default() -> Self {
        GapConstants { c1: 1.0, c2: 1.0, c4: 1.0, c5: 1.0 }
    }
}

fn flavor_name(f: Flavor) -> &'static str {
    match f {
        Flavor::Permutation => "cover",
        Flavor::Unitary => "bundle",
    }
}

/// T(n), κ(n) and the window [s_min, 1] for one flavor.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RateSchedule {
    pub flavor: Flavor,
    pub log10_n: f64,
    pub d: usize,
    pub t: f64,
    pub kappa: f64,
    pub s_min: f64,
    pub gap_bound: f64,
}

impl RateSchedule {
    /// s_min(1 − s_min) − (1/4 − κ).
    pub fn gap_identity_defect(&self) -> f64 {
        let s = self.s_min;
        s * (1.0 - s) - self.gap_bound
    }

    pub fn is_vacuous(&self) -> bool {
        self.gap_bound <= 0.0
    }
}

fn dim_const(d: usize) -> f64 {
    32.0 * d as f64 + 160.0
}

fn bundle_coefficient(d: usize) -> f64 {
    64.0 * dim_const(d)
}

const COVER_COEFFICIENT: f64 = 4.0 * 24.0 * 24.0;

pub fn rate_schedule(flavor: Flavor, n: f64, d: usize) -> Result<RateSchedule> {
    rate_schedule_log10(flavor, n.log10(), d)
}

/// Same as [`rate_schedule`] with n given as log₁₀ n, so astronomically
/// large n stay representable.
pub fn rate_schedule_log10(flavor: Flavor, log10_n: f64, d: usize) -> Result<RateSchedule> {
    if d == 0 {
        return Err(Error::Domain("d must be at least 1".into()));
    }
    if !(log10_n >= 16f64.log10()) || !log10_n.is_finite() {
        return Err(Error::Domain(format!("schedules need n ≥ 16, got 10^{log10_n}")));
    }
    let l1 = log10_n * std::f64::consts::LN_10;
    let l2 = l1.ln();
    let (t, kappa) = match flavor {
        Flavor::Unitary => (l1.sqrt() / (4.0 * dim_const(d).sqrt()), bundle_coefficient(d) * l2 * l2 / l1),
        Flavor::Permutation => {
            let l3 = l2.ln();
            (l2.sqrt() / 24.0, COVER_COEFFICIENT * l3 * l3 / l2)
        }
    };
    let s_min = 0.5 + kappa.sqrt();
    Ok(RateSchedule { flavor, log10_n, d, t, kappa, s_min, gap_bound: 0.25 - kappa })
}

/// Where a schedule turns decreasing and where it first gives a positive gap.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ScheduleCrossing {
    pub flavor: Flavor,
    pub d: usize,
    /// κ is decreasing for n beyond this point.
    pub turning_log10_n: f64,
    /// ln ln n*, where κ(n*) = 1/4.
    pub ln_ln_n_star: f64,
    /// log₁₀ n*; infinite when it overflows a double.
    pub log10_n_star: f64,
}

/// Solves c (ln u)²/u = 1/4 for u > e² by bisection in ln u.
fn quarter_crossing(c: f64) -> f64 {
    let f = |lu: f64| c * lu * lu / lu.exp() - 0.25;
    let (mut lo, mut hi) = (2.0, 2.0);
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn schedule_crossing(flavor: Flavor, d: usize) -> ScheduleCrossing {
    let e2 = std::f64::consts::E.powi(2);
    match flavor {
        Flavor::Unitary => {
            let ln_x = quarter_crossing(bundle_coefficient(d));
            ScheduleCrossing {
                flavor,
                d,
                turning_log10_n: e2 / std::f64::consts::LN_10,
                ln_ln_n_star: ln_x,
                log10_n_star: ln_x.exp() / std::f64::consts::LN_10,
            }
        }
        Flavor::Permutation => {
            let ln_y = quarter_crossing(COVER_COEFFICIENT);
            ScheduleCrossing {
                flavor,
                d,
                turning_log10_n: e2.exp() / std::f64::consts::LN_10,
                ln_ln_n_star: ln_y.exp(),
                log10_n_star: ln_y.exp().exp() / std::f64::consts::LN_10,
            }
        }
    }
}

/// κ strictly decreasing along an increasing grid of log₁₀ n.
pub fn schedule_is_decreasing(flavor: Flavor, d: usize, log10_grid: &[f64]) -> Result<bool> {
    let ks: Vec<f64> = log10_grid
        .iter()
        .map(|&x| rate_schedule_log10(flavor, x, d).map(|r| r.kappa))
        .collect::<Result<_>>()?;
    Ok(ks.windows(2).all(|w| w[1] < w[0]))
}

/// One inequality lhs ≤ rhs, both sides as natural logarithms.
#[derive(Clone, Debug, Serialize)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub ln_lhs: f64,
    pub ln_rhs: f64,
    pub holds: bool,
}

impl ConditionCheck {
    fn new(name: &'static str, ln_lhs: f64, ln_rhs: f64) -> Self {
        ConditionCheck { name, ln_lhs, ln_rhs, holds: ln_lhs <= ln_rhs }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    pub flavor: Flavor,
    pub log10_n: f64,
    pub d: usize,
    pub l: usize,
    pub s_size: usize,
    pub m: usize,
    pub constants: GapConstants,
    pub conditions: Vec<ConditionCheck>,
    /// Lower bound on the success probability.
    pub probability_floor: f64,
}

impl AdmissibilityReport {
    pub fn holds(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

pub fn admissibility(
    flavor: Flavor,
    n: f64,
    d: usize,
    l: usize,
    s_size: usize,
    m: usize,
    constants: &GapConstants,
) -> Result<AdmissibilityReport> {
    admissibility_log10(flavor, n.log10(), d, l, s_size, m, constants)
}

/// Evaluates the size and strength conditions in log scale.
pub fn admissibility_log10(
    flavor: Flavor,
    log10_n: f64,
    d: usize,
    l: usize,
    s_size: usize,
    m: usize,
    constants: &GapConstants,
) -> Result<AdmissibilityReport> {
    if d == 0 || l == 0 || s_size == 0 || m == 0 {
        return Err(Error::Domain("admissibility arguments must be positive".into()));
    }
    let ln_n = log10_n * std::f64::consts::LN_10;
    if !(ln_n > 1.0) || !ln_n.is_finite() {
        return Err(Error::Domain(format!("admissibility needs n > e, got 10^{log10_n}")));
    }
    let v = crate::linearization::depth(l) as f64;
    let (lf, sf) = (l as f64, s_size as f64);
    // ln(l |S|^v l^{v−1})
    let ln_core = lf.ln() + v * sf.ln() + (v - 1.0) * lf.ln();
    let ln_size = 2f64.ln() + (m as f64).ln() + ln_core;
    let ln_strength = |c: f64| 2f64.ln() + c.ln() + lf.ln() + ln_core;
    let (conditions, floor) = match flavor {
        Flavor::Unitary => {
            let ln_root = ln_n / dim_const(d);
            (
                vec![
                    ConditionCheck::new("size: 2ml|S|^v l^(v-1) <= exp(n^(1/(32d+160)))", ln_size, ln_root.exp()),
                    ConditionCheck::new("strength: 2c1 l^2|S|^v l^(v-1) <= n^(1/(32d+160))", ln_strength(constants.c1), ln_root),
                ],
                1.0 - (-(0.5 * ln_n).exp()).exp(),
            )
        }
        Flavor::Permutation => (
            vec![
                ConditionCheck::new("size: 2ml|S|^v l^(v-1) <= n^sqrt(log n)", ln_size, ln_n.sqrt() * ln_n),
                ConditionCheck::new("strength: 2c2 l^2|S|^v l^(v-1) <= (log n)^(1/4)", ln_strength(constants.c2), 0.25 * ln_n.ln()),
            ],
            1.0 - constants.c2 * (-0.5 * ln_n).exp(),
        ),
    };
    Ok(AdmissibilityReport {
        flavor,
        log10_n,
        d,
        l,
        s_size,
        m,
        constants: *constants,
        conditions,
        probability_floor: floor,
    })
}

/// Uniform net on [s_min, 1] with spacing ≤ 1/(5|S|c₃).
#[derive(Clone, Debug, Serialize)]
pub struct EpsilonNet {
    pub points: Vec<f64>,
    pub spacing: f64,
    pub max_spacing: f64,
}

pub fn epsilon_net(s_min: f64, s_size: usize, c3: f64) -> Result<EpsilonNet> {
    if !(s_min < 1.0) || s_size == 0 || !(c3 > 0.0) || !c3.is_finite() {
        return Err(Error::Domain(format!(
            "net needs s_min < 1, |S| ≥ 1, c₃ > 0 (got {s_min}, {s_size}, {c3})"
        )));
    }
    let max_spacing = 1.0 / (5.0 * s_size as f64 * c3);
    let width = 1.0 - s_min;
    let k = ((width / max_spacing).ceil() as usize).max(1);
    let spacing = width / k as f64;
    let mut points: Vec<f64> = (0..k).map(|i| s_min + i as f64 * spacing).collect();
    points.push(1.0);
    Ok(EpsilonNet { points, spacing, max_spacing })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct NeumannVerdict {
    pub norm_int: f64,
    pub norm_cusp: f64,
    pub total: f64,
    pub verdict: bool,
    /// Bound 1/(1 − total) on ‖(1 + 𝕃)⁻¹‖ when the series converges.
    pub inverse_bound: Option<f64>,
    pub gap_lower_bound: Option<f64>,
}

/// The Neumann series for (1 + 𝕃)⁻¹ converges iff ‖𝕃^int‖ + ‖𝕃^cusp‖ < 1.
pub fn neumann_verdict(norm_int: f64, norm_cusp: f64, schedule: Option<&RateSchedule>) -> Result<NeumannVerdict> {
    if !(norm_int >= 0.0 && norm_cusp >= 0.0) {
        return Err(Error::Domain("norms must be non-negative".into()));
    }
    let total = norm_int + norm_cusp;
    let verdict = total < 1.0;
    Ok(NeumannVerdict {
        norm_int,
        norm_cusp,
        total,
        verdict,
        inverse_bound: verdict.then(|| 1.0 / (1.0 - total)),
        gap_lower_bound: if verdict { schedule.map(|s| s.gap_bound) } else { None },
    })
}

/// The exact slack arithmetic behind the 4/5 bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SlackLedger {
    pub net: Ratio<i64>,
    pub lipschitz: Ratio<i64>,
    pub interval: Ratio<i64>,
    pub cusp: Ratio<i64>,
    pub total: Ratio<i64>,
    pub target: Ratio<i64>,
}

impl SlackLedger {
    pub fn standard() -> Self {
        let net = Ratio::new(2, 5);
        let lipschitz = Ratio::new(1, 5);
        let cusp = Ratio::new(1, 8);
        SlackLedger {
            net,
            lipschitz,
            interval: net + lipschitz,
            cusp,
            total: net + lipschitz + cusp,
            target: Ratio::new(4, 5),
        }
    }

    pub fn holds(&self) -> bool {
        self.interval == Ratio::new(3, 5) && self.total <= self.target && self.target < Ratio::from_integer(1)
    }

    /// Feeds the interval bound and the cusp bound to the verdict.
    pub fn verdict(&self) -> Result<NeumannVerdict> {
        let f = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
        neumann_verdict(f(self.interval), f(self.cusp), None)
    }
}

/// Parameters of the toy pipeline.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ToyConfig {
    pub flavor: Flavor,
    pub n: usize,
    pub t: f64,
    pub kappa: f64,
    pub grid: GridSpec,
    pub seed: u64,
    #[serde(default)]
    pub constants: GapConstants,
    /// Overrides the model's geometric constant C (cusp height C/κ).
    #[serde(default)]
    pub c_geo: Option<f64>,
    /// Points of the s grid used to fit c₃.
    #[serde(default = "default_fit_points")]
    pub deviation_points: usize,
}

fn default_fit_points() -> usize {
    4
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            flavor: Flavor::Permutation,
            n: 4,
            t: 0.3,
            kappa: 0.2,
            grid: GridSpec { nx: 10, ny: 10, x_half_width: 1.0, y_floor: 0.5 },
            seed: 1,
            constants: GapConstants::default(),
            c_geo: Some(0.15),
            deviation_points: default_fit_points(),
        }
    }
}

pub const TOY_MAX_N: usize = 64;
pub const TOY_MAX_SUPPORT: usize = 40;
pub const TOY_MAX_NODES: usize = 1600;
pub const TOY_MAX_NET: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct TruncationRow {
    pub s: f64,
    pub gamma: ReducedWord,
    pub hs_norm: f64,
    pub rank: usize,
    pub rank_bound: u128,
    pub target: f64,
    pub residual_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NetPointRow {
    pub s: f64,
    pub norm_full: f64,
    pub norm_truncated: f64,
    pub truncation_slack: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateReport {
    pub note: &'static str,
    pub model: String,
    pub flavor: Flavor,
    pub n: usize,
    pub seed: u64,
    pub t: f64,
    pub kappa: f64,
    pub grid: GridSpec,
    pub constants: GapConstants,
    pub schedule: Option<RateSchedule>,
    pub admissibility: AdmissibilityReport,
    pub support: Vec<ReducedWord>,
    pub c3: f64,
    /// The window was empty (κ ≥ 1/4) and only s = 1 was sampled.
    pub net_degenerate: bool,
    pub net: Vec<f64>,
    pub net_spacing: f64,
    pub rows: Vec<NetPointRow>,
    pub truncations: Vec<TruncationRow>,
    pub max_truncation_slack: f64,
    pub lipschitz_slack: f64,
    pub measured_norm_int: f64,
    pub norm_cusp_bound: f64,
    pub gap_bound: f64,
    pub verdict: NeumannVerdict,
}

const TOY_NOTE: &str = "measured norms replace the probabilistic strong-convergence bound; constants are fitted, not proved";

impl CertificateReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Per net point: s, norms and truncation slack.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["s", "norm_full", "norm_truncated", "truncation_slack"])?;
        for r in &self.rows {
            w.write_record([
                format!("{:.15e}", r.s),
                format!("{:.15e}", r.norm_full),
                format!("{:.15e}", r.norm_truncated),
                format!("{:.15e}", r.truncation_slack),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let c = &self.constants;
        let _ = writeln!(s, "# {}", self.note);
        let _ = writeln!(s, "model             {}", self.model);
        let _ = writeln!(s, "flavor            {} (n = {}, seed = {})", flavor_name(self.flavor), self.n, self.seed);
        let _ = writeln!(s, "T, kappa          {}, {}", self.t, self.kappa);
        let _ = writeln!(s, "constants         c1={} c2={} c4={} c5={}", c.c1, c.c2, c.c4, c.c5);
        let _ = writeln!(s, "|S(T)|            {}", self.support.len());
        let _ = writeln!(s, "c3                {:.6}", self.c3);
        let _ = writeln!(
            s,
            "net               {} points, spacing {:.6}{}",
            self.net.len(),
            self.net_spacing,
            if self.net_degenerate { " (empty window, s = 1 only)" } else { "" }
        );
        let _ = writeln!(s, "{:>10} {:>14} {:>14} {:>12}", "s", "norm_full", "norm_trunc", "slack");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>10.6} {:>14.8} {:>14.8} {:>12.3e}",
                r.s, r.norm_full, r.norm_truncated, r.truncation_slack
            );
        }
        let _ = writeln!(s, "finite-rank slack {:.3e} (allowed {})", self.max_truncation_slack, FINITE_RANK_SLACK);
        let _ = writeln!(s, "lipschitz slack   {:.6}", self.lipschitz_slack);
        let _ = writeln!(s, "norm_int          {:.8}", self.measured_norm_int);
        let _ = writeln!(s, "norm_cusp bound   {}", self.norm_cusp_bound);
        let _ = writeln!(s, "gap bound         {:.6} = 1/4 - kappa", self.gap_bound);
        let _ = writeln!(s, "admissible        {}", self.admissibility.holds());
        let _ = writeln!(s, "verdict           {}", self.verdict.verdict);
        s
    }
}

fn to_complex(m: &nalgebra::DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

fn assembled_norm(cm: &CoefficientMap, rep: &RepresentationSample, zero_mean: bool, seed: u64) -> Result<f64> {
    let op = assemble(&hermitize(cm), rep, zero_mean)?;
    Ok(op.norm(&LanczosOptions::default().with_tol(1e-12).with_seed(seed))?.value)
}

/// Lattice set → a_γ(s) on the net → truncation → assembly → verdict.
pub fn end_to_end_toy(model: &SurfaceModel, cfg: &ToyConfig) -> Result<CertificateReport> {
    if cfg.n == 0 || cfg.n > TOY_MAX_N {
        return Err(Error::Config(format!("toy n must lie in 1..={TOY_MAX_N}")));
    }
    if cfg.grid.nodes() > TOY_MAX_NODES {
        return Err(Error::Config(format!("toy grid is capped at {TOY_MAX_NODES} nodes")));
    }
    let model = &match cfg.c_geo {
        Some(c) => SurfaceModel::new(&model.name, model.generators.clone(), model.base_point, c).map_err(Error::at("model"))?,
        None => model.clone(),
    };
    let lps = lattice_point_set(model, &LatticeQuery::new(cfg.t, cfg.kappa, model.c_geo)).map_err(Error::at("lattice"))?;
    if lps.len() > TOY_MAX_SUPPORT {
        return Err(Error::Stage {
            stage: "lattice",
            source: Box::new(Error::Budget {
                what: "toy support S(T)".into(),
                needed: lps.len() as u128,
                budget: TOY_MAX_SUPPORT,
            }),
        });
    }
    let words: Vec<ReducedWord> = lps.words().cloned().collect();
    let s_size = words.len();
    let ctx = ParametrixContext::new(model.clone(), cfg.t, cfg.kappa, cfg.grid).map_err(Error::at("grid"))?;

    let s_min = 0.5 + cfg.kappa.sqrt();
    let net_degenerate = s_min >= 1.0;
    let fit_lo = if net_degenerate { 0.9 } else { s_min };
    let k = cfg.deviation_points.max(2);
    let fit_grid: Vec<f64> = (0..k).map(|i| fit_lo + (1.0 - fit_lo) * i as f64 / (k - 1) as f64).collect();
    let c3 = fit_deviation_constant(&ctx, &words, &fit_grid).map_err(Error::at("deviation"))?;
    let (net, spacing) = if net_degenerate {
        (vec![1.0], 0.0)
    } else if c3 == 0.0 {
        (vec![s_min, 1.0], 1.0 - s_min)
    } else {
        let e = epsilon_net(s_min, s_size, c3).map_err(Error::at("net"))?;
        (e.points, e.spacing)
    };
    if net.len() > TOY_MAX_NET {
        return Err(Error::Stage {
            stage: "net",
            source: Box::new(Error::Budget { what: "ε-net".into(), needed: net.len() as u128, budget: TOY_MAX_NET }),
        });
    }

    let rep = RepresentationSample::sample(cfg.flavor, cfg.n, model.rank(), cfg.seed).map_err(Error::at("representation"))?;
    let zero_mean = cfg.flavor == Flavor::Permutation;
    let m = ctx.grid.len();
    let mut rows = Vec::with_capacity(net.len());
    let mut truncations = Vec::new();
    for &s in &net {
        let mut full = CoefficientMap::new(m);
        let mut trunc = CoefficientMap::new(m);
        for g in &words {
            let ag = discretize_a_gamma(&ctx, g, s).map_err(Error::at("discretize"))?;
            let tr = svd_truncate(&ag, s_size).map_err(Error::at("truncate"))?;
            truncations.push(TruncationRow {
                s,
                gamma: g.clone(),
                hs_norm: ag.hs_norm,
                rank: tr.rank,
                rank_bound: tr.rank_bound,
                target: tr.target,
                residual_norm: tr.residual_norm,
            });
            full.insert(g.inverse(), to_complex(&ag.matrix))?;
            trunc.insert(g.inverse(), to_complex(&tr.matrix))?;
        }
        let nf = assembled_norm(&full, &rep, zero_mean, cfg.seed).map_err(Error::at("assemble"))?;
        let nt = assembled_norm(&trunc, &rep, zero_mean, cfg.seed).map_err(Error::at("assemble"))?;
        rows.push(NetPointRow { s, norm_full: nf, norm_truncated: nt, truncation_slack: (nf - nt).abs() });
    }

    let sup_trunc = rows.iter().map(|r| r.norm_truncated).fold(0.0, f64::max);
    let max_slack = rows.iter().map(|r| r.truncation_slack).fold(0.0, f64::max);
    let lipschitz_slack = s_size as f64 * c3 * spacing;
    let measured = sup_trunc + FINITE_RANK_SLACK + lipschitz_slack;
    let schedule = if cfg.n >= 16 { Some(rate_schedule(cfg.flavor, cfg.n as f64, model.rank())?) } else { None };
    let max_wl = words.iter().map(ReducedWord::len).max().unwrap_or(0).max(1);
    let admissibility = admissibility(cfg.flavor, cfg.n.max(3) as f64, model.rank(), max_wl, s_size, 2 * m, &cfg.constants)?;
    let gap_bound = 0.25 - cfg.kappa;
    let mut verdict = neumann_verdict(measured, NORM_CUSP_BOUND, None)?;
    if verdict.verdict {
        verdict.gap_lower_bound = Some(gap_bound);
    }
    Ok(CertificateReport {
        note: TOY_NOTE,
        model: model.name.clone(),
        flavor: cfg.flavor,
        n: cfg.n,
        seed: cfg.seed,
        t: cfg.t,
        kappa: cfg.kappa,
        grid: cfg.grid,
        constants: cfg.constants,
        schedule,
        admissibility,
        support: words,
        c3,
        net_degenerate,
        net,
        net_spacing: spacing,
        rows,
        truncations,
        max_truncation_slack: max_slack,
        lipschitz_slack,
        measured_norm_int: measured,
        norm_cusp_bound: NORM_CUSP_BOUND,
        gap_bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundle_kappa_at_a_million() {
        let r = rate_schedule(Flavor::Unitary, 1e6, 2).unwrap();
        let l1 = 1e6f64.ln();
        let want = 64.0 * 224.0 * l1.ln().powi(2) / l1;
        assert!((r.kappa - want).abs() < 1e-9 * want);
        assert!((r.kappa - 7.16e3).abs() < 10.0);
        assert!(r.is_vacuous());
    }

    #[test]
    fn small_n_rejected() {
        assert!(rate_schedule(Flavor::Permutation, 15.0, 2).is_err());
    }

    #[test]
    fn net_example() {
        let net = epsilon_net(0.9, 1, 1.0).unwrap();
        assert_eq!(net.points.len(), 2);
        assert!((net.points[0] - 0.9).abs() < 1e-15 && net.points[1] == 1.0);
    }

    #[test]
    fn verdict_examples() {
        assert!(neumann_verdict(0.6, 0.125, None).unwrap().verdict);
        assert!(!neumann_verdict(0.95, 0.1, None).unwrap().verdict);
        assert_eq!(neumann_verdict(0.0, 0.0, None).unwrap().inverse_bound, Some(1.0));
    }

    #[test]
    fn ledger() {
        let l = SlackLedger::standard();
        assert!(l.holds());
        assert_eq!(l.total, Ratio::new(29, 40));
        assert!(l.verdict().unwrap().verdict);
    }

    #[test]
    fn cover_example_fails() {
        let r = admissibility(Flavor::Permutation, 1e3, 2, 4, 5, 1, &GapConstants::default()).unwrap();
        let strength = &r.conditions[1];
        assert!((strength.ln_lhs.exp() - 3200.0).abs() < 1e-6);
        assert!((strength.ln_rhs.exp() - 1e3f64.ln().powf(0.25)).abs() < 1e-12);
        assert!(!r.holds());
    }
}
