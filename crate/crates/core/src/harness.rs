//! Batch driver behind the `gaplab` binary: seeded experiment suites that
//! write `results.csv` plus a `manifest.json` under `<out>/<subcommand>/`.
//!
//! Every CSV starts with a `# config_hash=…, seeds=[…]` line. Columns:
//!
//! * `norm-ratio`: n, seed, norm, regular_lower, ratio, transitive
//! * `linearize-verify`: case, seed, l, support, m, flavor, n, theta, norm_p,
//!   norm_q_squared, residual, off_block_max
//! * `kernel-check`: check, parameter, value, bound, pass
//! * `lattice-grow`: T, size, size_doubled_slack, stable, visited, max_word_length
//! * `rate-table`: flavor, log10_n, d, T, kappa, s_min, gap_bound
//! * `certify-toy`: s, norm_full, norm_truncated, truncation_slack

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::certificate::{
    end_to_end_toy, rate_schedule_log10, schedule_crossing, GapConstants, ToyConfig, FINITE_RANK_SLACK,
};
use crate::error::{Error, Result};
use crate::free_group::ReducedWord;
use crate::hyperbolic::{growth_slope, lattice_point_set, LatticeQuery, SurfaceModel};
use crate::linalg::{CMatrix, LanczosOptions};
use crate::linearization::{half_step, q_star_q_blocks, verify_step};
use crate::operator_lab::{assemble, hermitize, regular_norm_lower, CoefficientMap};
use crate::parametrix::kernel::{
    decay_condition, fit_envelope, kernel_s_derivative_check, kernel_table, remainder_bound_fit, remainder_kernel,
    resolvent_closed_form_s1, resolvent_kernel, support_grid,
};
use crate::parametrix::{build_cutoffs, GridSpec};
use crate::representations::{Flavor, RepresentationSample};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    NormRatio,
    LinearizeVerify,
    KernelCheck,
    LatticeGrow,
    RateTable,
    CertifyToy,
}

impl Subcommand {
    pub const ALL: [Subcommand; 6] = [
        Subcommand::NormRatio,
        Subcommand::LinearizeVerify,
        Subcommand::KernelCheck,
        Subcommand::LatticeGrow,
        Subcommand::RateTable,
        Subcommand::CertifyToy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Subcommand::NormRatio => "norm-ratio",
            Subcommand::LinearizeVerify => "linearize-verify",
            Subcommand::KernelCheck => "kernel-check",
            Subcommand::LatticeGrow => "lattice-grow",
            Subcommand::RateTable => "rate-table",
            Subcommand::CertifyToy => "certify-toy",
        }
    }
}

impl fmt::Display for Subcommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subcommand::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Caps for random linearization instances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearizationCaps {
    pub d: usize,
    pub l_min: usize,
    pub l_max: usize,
    pub support_max: usize,
    pub m_max: usize,
    pub n_max: usize,
}

impl Default for LinearizationCaps {
    fn default() -> Self {
        LinearizationCaps { d: 2, l_min: 2, l_max: 4, support_max: 6, m_max: 3, n_max: 8 }
    }
}

/// Structured run configuration. Every field has a default, so `{}` is a
/// valid config file; fields a subcommand does not use are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Option<Subcommand>,
    pub flavor: Flavor,
    /// n values; `rate-table` reads them as log₁₀ n.
    pub n_grid: Option<Vec<f64>>,
    pub d: usize,
    pub seeds: Vec<u64>,
    pub cases: usize,
    pub caps: LinearizationCaps,
    pub regular_radius: usize,
    pub t_values: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub grid: Option<GridSpec>,
    pub toy_n: usize,
    pub constants: GapConstants,
    pub c_geo: Option<f64>,
    pub c_hs: Option<f64>,
    /// Output root; the `--out` flag takes precedence.
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: None,
            flavor: Flavor::Permutation,
            n_grid: None,
            d: 2,
            seeds: (1..=20).collect(),
            cases: 100,
            caps: LinearizationCaps::default(),
            regular_radius: 14,
            t_values: None,
            kappa: None,
            grid: None,
            toy_n: 4,
            constants: GapConstants::default(),
            c_geo: None,
            c_hs: None,
            out: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("seeds must be non-empty".into()));
        }
        let c = &self.caps;
        if c.l_min < 2 || c.l_max < c.l_min || c.l_max > 8 {
            return Err(Error::Config("need 2 ≤ l_min ≤ l_max ≤ 8".into()));
        }
        if c.support_max == 0 || c.support_max > 6 || c.m_max == 0 || c.m_max > 4 || c.n_max < 3 || c.n_max > 16 {
            return Err(Error::Config("linearization caps outside module budgets".into()));
        }
        if self.d == 0 || self.d > 4 {
            return Err(Error::Config("d must lie in 1..=4".into()));
        }
        if self.regular_radius > 16 {
            return Err(Error::Config("regular_radius above the tree budget".into()));
        }
        Ok(())
    }

    /// First 16 hex digits of SHA-256 over the canonical JSON.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

/// One in-run assertion.
#[derive(Clone, Debug, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Assertion { name: name.into(), passed, detail: detail.into() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub subcommand: Subcommand,
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub version: &'static str,
    pub threads: usize,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub summary: serde_json::Value,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
}

impl RunOutcome {
    pub fn passed(&self) -> bool {
        self.manifest.passed
    }
}

/// CSV with the provenance comment line.
struct CsvOut {
    rows: Vec<Vec<String>>,
    header: Vec<&'static str>,
}

impl CsvOut {
    fn new(header: &[&'static str]) -> Self {
        CsvOut { rows: Vec::new(), header: header.to_vec() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn write(&self, path: &Path, hash: &str, seeds: &[u64]) -> Result<()> {
        let mut buf = Vec::new();
        writeln!(buf, "# config_hash={hash}, seeds={seeds:?}")?;
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header)?;
            for r in &self.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        fs::write(path, buf)?;
        Ok(())
    }
}

fn f(x: f64) -> String {
    format!("{x:.15e}")
}

/// Output of one subcommand before it is written to disk.
struct Produced {
    csv: CsvOut,
    extra_files: Vec<(String, String)>,
    assertions: Vec<Assertion>,
    summary: serde_json::Value,
    seeds: Vec<u64>,
}

/// Runs `sub` and writes its artifacts under `out_root/<sub>/`.
pub fn run(sub: Subcommand, cfg: &ExperimentConfig, out_root: &Path) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let produced = match sub {
        Subcommand::NormRatio => norm_ratio(cfg),
        Subcommand::LinearizeVerify => linearize_verify(cfg),
        Subcommand::KernelCheck => kernel_check(cfg),
        Subcommand::LatticeGrow => lattice_grow(cfg),
        Subcommand::RateTable => rate_table(cfg),
        Subcommand::CertifyToy => certify_toy(cfg),
    }
    .map_err(|e| Error::Stage { stage: sub.name(), source: Box::new(e) })?;
    let dir = out_root.join(sub.name());
    fs::create_dir_all(&dir)?;
    let hash = cfg.hash();
    produced.csv.write(&dir.join("results.csv"), &hash, &produced.seeds)?;
    let mut files = vec!["results.csv".to_string()];
    for (name, body) in &produced.extra_files {
        fs::write(dir.join(name), body)?;
        files.push(name.clone());
    }
    files.push("manifest.json".into());
    let passed = produced.assertions.iter().all(|a| a.passed);
    let manifest = Manifest {
        subcommand: sub,
        config: cfg.clone(),
        config_hash: hash,
        seeds: produced.seeds,
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_time_s: start.elapsed().as_secs_f64(),
        files,
        assertions: produced.assertions,
        passed,
        summary: produced.summary,
    };
    fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    Ok(RunOutcome { dir, manifest })
}

/// ‖∑ (g_i + g_i⁻¹)‖ on V_n⁰ for a random permutation representation.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZeroMeanTrial {
    pub n: usize,
    pub seed: u64,
    pub norm: f64,
    pub transitive: bool,
}

pub fn zero_mean_generator_sum(n: usize, d: usize, seed: u64) -> Result<ZeroMeanTrial> {
    let rep = RepresentationSample::sample(Flavor::Permutation, n, d, seed)?;
    let op = assemble(&CoefficientMap::generator_sum(d), &rep, true)?;
    let norm = op.norm(&LanczosOptions::default().with_tol(1e-10).with_seed(seed))?.value;
    Ok(ZeroMeanTrial { n, seed, norm, transitive: rep.is_transitive()? })
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn norm_ratio(cfg: &ExperimentConfig) -> Result<Produced> {
    let ns: Vec<usize> = cfg.n_grid.clone().unwrap_or(vec![100.0, 400.0, 1600.0]).iter().map(|&x| x as usize).collect();
    let limit = 2.0 * (2.0 * cfg.d as f64 - 1.0).sqrt();
    let regular = regular_norm_lower(&CoefficientMap::generator_sum(cfg.d), cfg.regular_radius, 1e-10)?;
    let mut csv = CsvOut::new(&["n", "seed", "norm", "regular_lower", "ratio", "transitive"]);
    let mut medians = Vec::new();
    let mut transitive_fraction = Vec::new();
    for &n in &ns {
        let trials: Vec<ZeroMeanTrial> =
            cfg.seeds.par_iter().map(|&s| zero_mean_generator_sum(n, cfg.d, rng::trial_seed(s, n as u64))).collect::<Result<_>>()?;
        for t in &trials {
            csv.push(vec![
                n.to_string(),
                t.seed.to_string(),
                f(t.norm),
                f(regular),
                f(t.norm / regular),
                t.transitive.to_string(),
            ]);
        }
        let norms: Vec<f64> = trials.iter().map(|t| t.norm).collect();
        medians.push(median(&norms));
        transitive_fraction.push(trials.iter().filter(|t| t.transitive).count() as f64 / trials.len() as f64);
    }
    let assertions = vec![
        Assertion::new(
            "regular lower bound below the limit",
            regular <= limit + 1e-9,
            format!("{regular} vs 2√(2d−1) = {limit}"),
        ),
        Assertion::new(
            "operator norms bounded by the trivial bound 2d",
            medians.iter().all(|&m| m <= 2.0 * cfg.d as f64 + 1e-9),
            format!("medians {medians:?}"),
        ),
    ];
    Ok(Produced {
        csv,
        extra_files: vec![],
        assertions,
        summary: serde_json::json!({
            "n": ns, "median_norm": medians, "transitive_fraction": transitive_fraction,
            "regular_lower": regular, "regular_radius": cfg.regular_radius, "limit": limit,
        }),
        seeds: cfg.seeds.clone(),
    })
}

/// Outcome of one random linearization instance.
#[derive(Clone, Debug, Serialize)]
pub struct LinearizationCase {
    pub seed: u64,
    pub l: usize,
    pub support: usize,
    pub m: usize,
    pub flavor: Flavor,
    pub n: usize,
    pub theta: f64,
    pub norm_p: f64,
    pub norm_q_squared: f64,
    pub residual: f64,
    pub off_block_max: Option<f64>,
}

/// Uniform-ish reduced word of exactly `len` letters.
pub fn random_word(rng: &mut impl Rng, d: usize, len: usize) -> ReducedWord {
    let mut letters: Vec<i32> = Vec::with_capacity(len);
    while letters.len() < len {
        let g = rng.random_range(1..=d as i32);
        let x = if rng.random_bool(0.5) { g } else { -g };
        if letters.last() != Some(&-x) {
            letters.push(x);
        }
    }
    ReducedWord::reduce(&letters, d).expect("letters in range")
}

/// A random coefficient map with support in B_l, at least one word of length l.
pub fn random_coefficient_map(rng: &mut impl Rng, d: usize, l: usize, support_max: usize, m: usize) -> CoefficientMap {
    let k = rng.random_range(1..=support_max);
    let mut cm = CoefficientMap::new(m);
    for i in 0..k {
        let len = if i == 0 { l } else { rng.random_range(0..=l) };
        let w = random_word(rng, d, len);
        let a = CMatrix::from_fn(m, m, |_, _| {
            Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        });
        cm.insert(w, a).expect("shapes agree");
    }
    cm
}

/// Builds one instance from `seed`, half-steps its hermitization and checks
/// ‖Q‖² − θ = ‖P‖; optionally also the block structure of Q*Q.
pub fn linearization_case(seed: u64, caps: &LinearizationCaps, blocks: bool) -> Result<LinearizationCase> {
    let mut r = rng::seeded(seed);
    let l = r.random_range(caps.l_min..=caps.l_max);
    let m = r.random_range(1..=caps.m_max);
    let cm = random_coefficient_map(&mut r, caps.d, l, caps.support_max, m);
    let flavor = if r.random_bool(0.5) { Flavor::Unitary } else { Flavor::Permutation };
    let n = r.random_range(3..=caps.n_max);
    let zero_mean = flavor == Flavor::Permutation;
    let rep = RepresentationSample::sample(flavor, n, caps.d, r.random())?;
    let hs = half_step(&hermitize(&cm), l)?;
    let v = verify_step(&hs, &rep, zero_mean)?;
    let off = if blocks { Some(q_star_q_blocks(&hs, &rep, zero_mean)?.off_block_max) } else { None };
    Ok(LinearizationCase {
        seed,
        l,
        support: cm.len(),
        m,
        flavor,
        n,
        theta: v.theta,
        norm_p: v.norm_p,
        norm_q_squared: v.norm_q_squared,
        residual: v.residual,
        off_block_max: off,
    })
}

fn linearize_verify(cfg: &ExperimentConfig) -> Result<Produced> {
    let base = cfg.seeds[0];
    let seeds: Vec<u64> = (0..cfg.cases as u64).map(|i| rng::trial_seed(base, i)).collect();
    let mut csv = CsvOut::new(&[
        "case", "seed", "l", "support", "m", "flavor", "n", "theta", "norm_p", "norm_q_squared", "residual", "off_block_max",
    ]);
    let cases: Vec<LinearizationCase> =
        seeds.par_iter().enumerate().map(|(i, &s)| linearization_case(s, &cfg.caps, i < 20)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut worst_off: f64 = 0.0;
    for (i, c) in cases.iter().enumerate() {
        let s = c.seed;
        worst = worst.max(c.residual);
        worst_off = worst_off.max(c.off_block_max.unwrap_or(0.0));
        csv.push(vec![
            i.to_string(),
            s.to_string(),
            c.l.to_string(),
            c.support.to_string(),
            c.m.to_string(),
            format!("{:?}", c.flavor).to_lowercase(),
            c.n.to_string(),
            f(c.theta),
            f(c.norm_p),
            f(c.norm_q_squared),
            format!("{:.3e}", c.residual),
            c.off_block_max.map(|x| format!("{x:.3e}")).unwrap_or_default(),
        ]);
    }
    Ok(Produced {
        csv,
        extra_files: vec![],
        assertions: vec![
            Assertion::new("residual ≤ 1e-7", worst <= 1e-7, format!("max residual {worst:e}")),
            Assertion::new("off-diagonal blocks ≤ 1e-9", worst_off <= 1e-9, format!("max {worst_off:e}")),
        ],
        summary: serde_json::json!({ "cases": cfg.cases, "max_residual": worst, "max_off_block": worst_off }),
        seeds,
    })
}

fn kernel_check(cfg: &ExperimentConfig) -> Result<Produced> {
    let mut csv = CsvOut::new(&["check", "parameter", "value", "bound", "pass"]);
    let mut assertions = Vec::new();
    let push = |csv: &mut CsvOut, check: &str, param: String, value: f64, bound: f64, pass: bool| {
        csv.push(vec![check.to_string(), param, f(value), f(bound), pass.to_string()]);
    };
    let mut closed_ok = true;
    for r in [0.5, 1.0, 2.0] {
        let got = resolvent_kernel(1.0, r)?;
        let want = resolvent_closed_form_s1(r);
        let rel = (got / want - 1.0).abs();
        closed_ok &= rel <= 1e-8;
        push(&mut csv, "closed_form_s1", format!("r={r}"), rel, 1e-8, rel <= 1e-8);
    }
    assertions.push(Assertion::new("R(1; r) matches the closed form", closed_ok, "three radii"));
    let ts = cfg.t_values.clone().unwrap_or(vec![2.0, 5.0, 10.0]);
    let ss = [0.6, 0.8, 1.0];
    let mut support_ok = true;
    for &t in &ts {
        for s in ss {
            let inside = remainder_kernel(s, t, t + 0.5)?;
            let ok = remainder_kernel(s, t, t - 0.1)? == 0.0 && remainder_kernel(s, t, t + 1.1)? == 0.0 && inside != 0.0;
            support_ok &= ok;
        }
    }
    push(&mut csv, "support_exact", format!("T={ts:?}"), support_ok as u8 as f64, 1.0, support_ok);
    assertions.push(Assertion::new("remainder supported on [T, T+1]", support_ok, ""));
    let c = remainder_bound_fit(&ts, &ss, 50)?;
    push(&mut csv, "remainder_constant", "|L| <= C e^{-s r}".into(), c, 10.0, c <= 10.0);
    assertions.push(Assertion::new("remainder constant ≤ 10", c <= 10.0, format!("C = {c}")));
    let dc = kernel_s_derivative_check(5.0, &support_grid(5.0, 21), &[0.6, 0.7, 0.8, 0.9, 1.0], 1e-4)?;
    push(&mut csv, "s_derivative", "T=5".into(), dc.max_abs, dc.relative_change, dc.stable());
    assertions.push(Assertion::new("∂L/∂s stable under h → h/2", dc.stable(), format!("{dc:?}")));
    for s in ss {
        let fit = fit_envelope(s, &[5.0, 10.0, 15.0])?;
        push(&mut csv, "envelope_constant", format!("s={s}"), fit.c_spherical, fit.spherical_spread, fit.spherical_spread <= 0.2);
        assertions.push(Assertion::new(
            format!("envelope constant stable within 20% at s = {s}"),
            fit.spherical_spread <= 0.2,
            format!("C = {}, spread {}", fit.c_spherical, fit.spherical_spread),
        ));
    }
    for t in [8.0, 10.0, 15.0] {
        let d = decay_condition(t)?;
        push(&mut csv, "decay_condition", format!("T={t}"), d.value, 0.2, d.holds);
        assertions.push(Assertion::new(format!("T e^(-T√κ) < 1/5 at T = {t}"), d.holds, format!("{}", d.value)));
    }
    for kappa in [1.0, 0.1, 0.01] {
        let cert = build_cutoffs(kappa)?.certificate(crate::parametrix::cutoffs::CERTIFICATE_GRID);
        push(&mut csv, "cutoff_d1", format!("kappa={kappa}"), cert.sup_d1, cert.bound, cert.holds());
        push(&mut csv, "cutoff_laplacian", format!("kappa={kappa}"), cert.sup_d2_minus_d1, cert.bound, cert.holds());
        assertions.push(Assertion::new(format!("cutoff bounds at κ = {kappa}"), cert.holds(), ""));
    }
    let mut table = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut table);
        w.write_record(["s", "T", "r", "R", "dR_dr", "L"])?;
        for &t in &ts {
            for s in ss {
                for row in kernel_table(s, t, 50)? {
                    w.write_record(row.iter().map(|x| f(*x)))?;
                }
            }
        }
        w.flush()?;
    }
    Ok(Produced {
        csv,
        extra_files: vec![("kernel_table.csv".into(), String::from_utf8(table).expect("ascii"))],
        assertions,
        summary: serde_json::json!({ "remainder_constant": c, "s_derivative": dc }),
        seeds: cfg.seeds.clone(),
    })
}

/// |S(T)| and, for T ≤ [`STABILITY_MAX_T`], its stability under doubled
/// prune slack.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct GrowthRow {
    pub t: f64,
    pub size: usize,
    pub size_doubled_slack: Option<usize>,
    /// Same element set under doubled slack.
    pub stable: Option<bool>,
    pub visited: usize,
    pub max_word_length: usize,
}

/// Beyond this T the doubled-slack search outgrows the enumeration budget.
pub const STABILITY_MAX_T: f64 = 4.0;

pub fn lattice_growth(model: &SurfaceModel, ts: &[f64], kappa: f64, c_geo: f64) -> Result<Vec<GrowthRow>> {
    ts.iter()
        .map(|&t| {
            let q = LatticeQuery::new(t, kappa, c_geo);
            let base = lattice_point_set(model, &q)?;
            let doubled = if t <= STABILITY_MAX_T {
                Some(lattice_point_set(model, &LatticeQuery { prune_slack: Some(2.0 * base.prune_slack), ..q })?)
            } else {
                None
            };
            Ok(GrowthRow {
                t,
                size: base.len(),
                size_doubled_slack: doubled.as_ref().map(|d| d.len()),
                stable: doubled.as_ref().map(|d| base.len() == d.len() && base.words().all(|w| d.contains(w))),
                visited: base.visited,
                max_word_length: base.words().map(ReducedWord::len).max().unwrap_or(0),
            })
        })
        .collect()
}

/// Defaults for the growth experiment: κ = 0.9 and C = 0 keep S(5) near 10⁴.
pub const GROWTH_KAPPA: f64 = 0.9;
pub const GROWTH_C_GEO: f64 = 0.0;

fn lattice_grow(cfg: &ExperimentConfig) -> Result<Produced> {
    let ts = cfg.t_values.clone().unwrap_or(vec![2.0, 3.0, 4.0, 5.0]);
    let kappa = cfg.kappa.unwrap_or(GROWTH_KAPPA);
    let c_geo = cfg.c_geo.unwrap_or(GROWTH_C_GEO);
    let rows = lattice_growth(&SurfaceModel::punctured_torus(), &ts, kappa, c_geo)?;
    let mut csv = CsvOut::new(&["T", "size", "size_doubled_slack", "stable", "visited", "max_word_length"]);
    for r in &rows {
        csv.push(vec![
            r.t.to_string(),
            r.size.to_string(),
            r.size_doubled_slack.map(|x| x.to_string()).unwrap_or_default(),
            r.stable.map(|x| x.to_string()).unwrap_or_default(),
            r.visited.to_string(),
            r.max_word_length.to_string(),
        ]);
    }
    let slope = growth_slope(&rows.iter().map(|r| (r.t, r.size)).collect::<Vec<_>>());
    Ok(Produced {
        csv,
        extra_files: vec![],
        assertions: vec![
            Assertion::new("growth slope in [1.6, 2.4]", (1.6..=2.4).contains(&slope), format!("slope {slope}")),
            Assertion::new(
                "stable under doubled slack",
                rows.iter().all(|r| r.stable != Some(false)),
                format!("checked for T ≤ {STABILITY_MAX_T}"),
            ),
        ],
        summary: serde_json::json!({ "slope": slope, "kappa": kappa, "c_geo": c_geo }),
        seeds: cfg.seeds.clone(),
    })
}

fn rate_table(cfg: &ExperimentConfig) -> Result<Produced> {
    let grid = cfg.n_grid.clone().unwrap_or(vec![3.0, 6.0, 9.0]);
    let mut csv = CsvOut::new(&["flavor", "log10_n", "d", "T", "kappa", "s_min", "gap_bound"]);
    let mut worst: f64 = 0.0;
    for &x in &grid {
        let r = rate_schedule_log10(cfg.flavor, x, cfg.d)?;
        worst = worst.max(r.gap_identity_defect().abs() / r.kappa.abs().max(1.0));
        csv.push(vec![
            if cfg.flavor == Flavor::Permutation { "cover" } else { "bundle" }.into(),
            x.to_string(),
            cfg.d.to_string(),
            format!("{:.17e}", r.t),
            format!("{:.17e}", r.kappa),
            format!("{:.17e}", r.s_min),
            format!("{:.17e}", r.gap_bound),
        ]);
    }
    let crossing = schedule_crossing(cfg.flavor, cfg.d);
    Ok(Produced {
        csv,
        extra_files: vec![],
        assertions: vec![Assertion::new("gap identity", worst <= 1e-12, format!("max relative defect {worst:e}"))],
        summary: serde_json::json!({ "crossing": crossing }),
        seeds: cfg.seeds.clone(),
    })
}

/// Toy configuration derived from an experiment config.
pub fn toy_config(cfg: &ExperimentConfig) -> ToyConfig {
    let mut toy = ToyConfig { flavor: cfg.flavor, n: cfg.toy_n, seed: cfg.seeds[0], constants: cfg.constants, ..Default::default() };
    if let Some(t) = cfg.t_values.as_ref().and_then(|v| v.first()) {
        toy.t = *t;
    }
    if let Some(k) = cfg.kappa {
        toy.kappa = k;
    }
    if let Some(g) = cfg.grid {
        toy.grid = g;
    }
    if cfg.c_geo.is_some() {
        toy.c_geo = cfg.c_geo;
    }
    toy
}

fn certify_toy(cfg: &ExperimentConfig) -> Result<Produced> {
    let toy = toy_config(cfg);
    let report = end_to_end_toy(&SurfaceModel::punctured_torus(), &toy)?;
    let mut csv = CsvOut::new(&["s", "norm_full", "norm_truncated", "truncation_slack"]);
    for r in &report.rows {
        csv.push(vec![f(r.s), f(r.norm_full), f(r.norm_truncated), f(r.truncation_slack)]);
    }
    let worst = report.truncations.iter().map(|t| t.residual_norm / t.target).fold(0.0, f64::max);
    let mut assertions = vec![
        Assertion::new("every truncation residual ≤ 1/(20|S(T)|)", worst <= 1.0, format!("max residual/target {worst}")),
        Assertion::new(
            "total truncation slack ≤ 1/20",
            report.max_truncation_slack <= FINITE_RANK_SLACK,
            format!("{:e}", report.max_truncation_slack),
        ),
    ];
    if let Some(c_hs) = cfg.c_hs {
        let budget = c_hs * (2.0 * std::f64::consts::PI).powi(2);
        let max_hs = report.truncations.iter().map(|t| t.hs_norm).fold(0.0, f64::max);
        assertions.push(Assertion::new("HS norms within budget", max_hs <= budget, format!("{max_hs} vs {budget}")));
    }
    let text = report.to_text();
    let json = report.to_json()?;
    Ok(Produced {
        csv,
        extra_files: vec![("report.txt".into(), text), ("report.json".into(), json)],
        assertions,
        summary: serde_json::json!({
            "support": report.support.len(), "net": report.net.len(), "c3": report.c3,
            "measured_norm_int": report.measured_norm_int, "verdict": report.verdict.verdict,
        }),
        seeds: vec![toy.seed],
    })
}
