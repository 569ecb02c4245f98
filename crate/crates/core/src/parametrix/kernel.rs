//! The free resolvent kernel on ℍ and the remainder left by truncating it
//! at radius T.
//!
//! R(s; r) = (1/4π) ∫₀¹ (t(1−t))^{s−1} (t + sinh²(r/2))^{−s} dt, which at
//! s = 1 integrates to (1/2π) log coth(r/2).

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;
use serde::Serialize;

use crate::error::{Error, Result};

use super::cutoffs::SmoothStep;

const FOUR_PI: f64 = 4.0 * std::f64::consts::PI;

fn rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(20).unwrap()))
}

/// Adaptive Gauss–Legendre on [a, b] to relative tolerance `tol`, measured
/// against the whole integral: each half of a rejected interval gets half of
/// its absolute error budget.
pub fn adaptive_integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, eps: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let left = rule().integrate(a, m, f);
        let right = rule().integrate(m, b, f);
        let both = left + right;
        let err = (both - whole).abs();
        if depth == 0 || err <= eps || err <= 64.0 * f64::EPSILON * (left.abs() + right.abs()) {
            return both;
        }
        recurse(f, a, m, left, 0.5 * eps, depth - 1) + recurse(f, m, b, right, 0.5 * eps, depth - 1)
    }
    let whole = rule().integrate(a, b, f);
    let eps = tol * whole.abs().max(f64::MIN_POSITIVE);
    recurse(f, a, b, whole, eps, 40)
}

const QUAD_TOL: f64 = 1e-13;

/// ∫₀¹ (t(1−t))^{s−1} (t + a)^{−p} dt.
///
/// Each half of [0, 1] is mapped by t = u^{1/s} (resp. 1 − t = u^{1/s}),
/// which absorbs the endpoint factor t^{s−1} exactly.
fn beta_like(s: f64, a: f64, p: f64) -> f64 {
    let inv = 1.0 / s;
    let top = 0.5f64.powf(s);
    let left = |u: f64| {
        let t = u.powf(inv);
        (1.0 - t).powf(s - 1.0) * (t + a).powf(-p)
    };
    let right = |u: f64| {
        let q = u.powf(inv);
        let t = 1.0 - q;
        t.powf(s - 1.0) * (t + a).powf(-p)
    };
    (adaptive_integrate(&left, 0.0, top, QUAD_TOL) + adaptive_integrate(&right, 0.0, top, QUAD_TOL)) * inv
}

fn check_args(s: f64, r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!("resolvent kernel needs r > 0, got {r}")));
    }
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("spectral parameter must be positive, got {s}")));
    }
    let sh = (0.5 * r).sinh();
    Ok(sh * sh)
}

/// R(s; r) for s > 0, r > 0.
pub fn resolvent_kernel(s: f64, r: f64) -> Result<f64> {
    let a = check_args(s, r)?;
    Ok(beta_like(s, a, s) / FOUR_PI)
}

/// ∂R/∂r = −(s sinh r / 8π) ∫₀¹ (t(1−t))^{s−1} (t + a)^{−s−1} dt.
pub fn resolvent_kernel_dr(s: f64, r: f64) -> Result<f64> {
    let a = check_args(s, r)?;
    Ok(-s * r.sinh() * beta_like(s, a, s + 1.0) / (2.0 * FOUR_PI))
}

/// (1/2π) log coth(r/2).
pub fn resolvent_closed_form_s1(r: f64) -> f64 {
    (1.0 / (0.5 * r).tanh()).ln() / (2.0 * std::f64::consts::PI)
}

/// 𝕃(s; r₀) = (−χ_T″ − coth r₀ χ_T′) R − 2 χ_T′ ∂R/∂r with χ_T(r) = 1 − S(r − T);
/// exactly zero off [T, T+1].
pub fn remainder_kernel(s: f64, t: f64, r0: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("T must be positive, got {t}")));
    }
    if !(0.5..=1.0).contains(&s) {
        // the derivative check steps slightly outside; only reject nonsense
        if !(s > 0.0) {
            return Err(Error::Domain(format!("spectral parameter must be positive, got {s}")));
        }
    }
    if r0 < t || r0 > t + 1.0 {
        return Ok(0.0);
    }
    let x = r0 - t;
    let d1 = -SmoothStep::d1(x);
    let d2 = -SmoothStep::d2(x);
    if d1 == 0.0 && d2 == 0.0 {
        return Ok(0.0);
    }
    let coth = 1.0 / r0.tanh();
    Ok((-d2 - coth * d1) * resolvent_kernel(s, r0)? - 2.0 * d1 * resolvent_kernel_dr(s, r0)?)
}

/// Central difference of 𝕃 in s.
pub fn kernel_s_derivative(s: f64, t: f64, r0: f64, h: f64) -> Result<f64> {
    Ok((remainder_kernel(s + h, t, r0)? - remainder_kernel(s - h, t, r0)?) / (2.0 * h))
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeCheck {
    pub t: f64,
    pub h: f64,
    pub max_abs: f64,
    pub max_abs_half_h: f64,
    pub relative_change: f64,
}

impl DerivativeCheck {
    pub fn stable(&self) -> bool {
        self.max_abs.is_finite() && self.relative_change <= 0.01
    }
}

/// max |∂𝕃/∂s| over an (s, r₀) grid, at steps h and h/2.
pub fn kernel_s_derivative_check(t: f64, r_grid: &[f64], s_grid: &[f64], h: f64) -> Result<DerivativeCheck> {
    let mut a: f64 = 0.0;
    let mut b: f64 = 0.0;
    for &s in s_grid {
        for &r in r_grid {
            a = a.max(kernel_s_derivative(s, t, r, h)?.abs());
            b = b.max(kernel_s_derivative(s, t, r, 0.5 * h)?.abs());
        }
    }
    let rel = if a == 0.0 && b == 0.0 { 0.0 } else { (a - b).abs() / a.max(b) };
    Ok(DerivativeCheck { t, h, max_abs: a, max_abs_half_h: b, relative_change: rel })
}

/// Uniform grid of `n` points on [T, T+1].
pub fn support_grid(t: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| t + i as f64 / (n - 1) as f64).collect()
}

/// Smallest C with |𝕃(s; r₀)| ≤ C e^{−s r₀} on the grid.
pub fn remainder_bound_fit(ts: &[f64], ss: &[f64], n_r: usize) -> Result<f64> {
    let mut c: f64 = 0.0;
    for &t in ts {
        for &s in ss {
            for r in support_grid(t, n_r) {
                c = c.max(remainder_kernel(s, t, r)?.abs() * (s * r).exp());
            }
        }
    }
    Ok(c)
}

/// Arithmetic–geometric mean.
fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let (na, nb) = (0.5 * (a + b), (a * b).sqrt());
        if (na - nb).abs() <= 1e-16 * na {
            return na;
        }
        a = na;
        b = nb;
    }
    a
}

/// Spherical function at the bottom of the spectrum, φ₀(r) = P_{−1/2}(cosh r)
/// = sech(r/2) / AGM(1, sech(r/2)).
pub fn spherical_phi0(r: f64) -> f64 {
    let k = 1.0 / (0.5 * r).cosh();
    k / agm(1.0, k)
}

/// Norm bounds for the convolution operator with kernel 𝕃(s; ·).
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnvelopeReport {
    pub s: f64,
    pub t: f64,
    /// 2π ∫ |𝕃| sinh r dr.
    pub schur_bound: f64,
    /// 2π ∫ |𝕃| φ₀(r) sinh r dr.
    pub spherical_bound: f64,
    /// T e^{(1/2 − s)T}.
    pub envelope_shape: f64,
}

pub fn operator_norm_envelope(s: f64, t: f64) -> Result<EnvelopeReport> {
    if !(s > 0.5) {
        return Err(Error::Domain(format!("envelope needs s > 1/2, got {s}")));
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let lk = |r: f64| remainder_kernel(s, t, r).map(f64::abs).unwrap_or(f64::NAN);
    let schur = two_pi * adaptive_integrate(&|r| lk(r) * r.sinh(), t, t + 1.0, 1e-10);
    let sph = two_pi * adaptive_integrate(&|r| lk(r) * spherical_phi0(r) * r.sinh(), t, t + 1.0, 1e-10);
    if !schur.is_finite() || !sph.is_finite() {
        return Err(Error::Numeric("envelope integral is not finite".into()));
    }
    Ok(EnvelopeReport {
        s,
        t,
        schur_bound: schur,
        spherical_bound: sph,
        envelope_shape: t * ((0.5 - s) * t).exp(),
    })
}

/// Least-squares constant in bound ≈ C · T e^{(1/2 − s)T}, with the
/// per-T ratios.
#[derive(Clone, Debug, Serialize)]
pub struct EnvelopeFit {
    pub s: f64,
    pub reports: Vec<EnvelopeReport>,
    pub c_spherical: f64,
    pub c_schur: f64,
    /// max_T |ratio_T / C − 1| for the spherical bound.
    pub spherical_spread: f64,
    pub schur_spread: f64,
}

pub fn fit_envelope(s: f64, ts: &[f64]) -> Result<EnvelopeFit> {
    let reports: Vec<EnvelopeReport> = ts.iter().map(|&t| operator_norm_envelope(s, t)).collect::<Result<_>>()?;
    let fit = |f: &dyn Fn(&EnvelopeReport) -> f64| {
        let num: f64 = reports.iter().map(|r| f(r) * r.envelope_shape).sum();
        let den: f64 = reports.iter().map(|r| r.envelope_shape * r.envelope_shape).sum();
        let c = num / den;
        let spread = reports.iter().map(|r| (f(r) / r.envelope_shape / c - 1.0).abs()).fold(0.0, f64::max);
        (c, spread)
    };
    let (c_sph, sp_sph) = fit(&|r| r.spherical_bound);
    let (c_sch, sp_sch) = fit(&|r| r.schur_bound);
    Ok(EnvelopeFit { s, reports, c_spherical: c_sph, c_schur: c_sch, spherical_spread: sp_sph, schur_spread: sp_sch })
}

/// T e^{−T√κ} < 1/5 under κ = 4(log T)²/T².
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayCondition {
    pub t: f64,
    pub kappa: f64,
    pub value: f64,
    pub holds: bool,
}

pub fn decay_condition(t: f64) -> Result<DecayCondition> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("pairing needs T > 1, got {t}")));
    }
    let kappa = 4.0 * t.ln().powi(2) / (t * t);
    let value = t * (-t * kappa.sqrt()).exp();
    Ok(DecayCondition { t, kappa, value, holds: value < 0.2 })
}

/// 𝕃(s; ·) tabulated on [T, T+1] and read back by four-point Lagrange
/// interpolation; zero off the support.
#[derive(Clone, Debug)]
pub struct RemainderTable {
    pub s: f64,
    pub t: f64,
    values: Vec<f64>,
}

impl RemainderTable {
    pub const DEFAULT_INTERVALS: usize = 1024;

    pub fn new(s: f64, t: f64, intervals: usize) -> Result<Self> {
        let values = (0..=intervals)
            .map(|i| remainder_kernel(s, t, t + i as f64 / intervals as f64))
            .collect::<Result<_>>()?;
        Ok(RemainderTable { s, t, values })
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r < self.t || r > self.t + 1.0 {
            return 0.0;
        }
        let n = self.values.len() - 1;
        let x = (r - self.t) * n as f64;
        let i = (x.floor() as usize).clamp(1, n.saturating_sub(2).max(1));
        let i0 = i - 1;
        let f = &self.values;
        let u = x - i0 as f64;
        // nodes at 0, 1, 2, 3 relative to i0
        let l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
        let l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
        let l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
        let l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
        l0 * f[i0] + l1 * f[i0 + 1] + l2 * f[i0 + 2] + l3 * f[i0 + 3]
    }
}

/// Rows (s, T, r, R, dR/dr, 𝕃) for export.
pub fn kernel_table(s: f64, t: f64, n: usize) -> Result<Vec<[f64; 6]>> {
    support_grid(t, n)
        .into_iter()
        .map(|r| Ok([s, t, r, resolvent_kernel(s, r)?, resolvent_kernel_dr(s, r)?, remainder_kernel(s, t, r)?]))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_at_s1() {
        for r in [0.5, 1.0, 2.0, 4.0] {
            let got = resolvent_kernel(1.0, r).unwrap();
            let want = resolvent_closed_form_s1(r);
            assert!((got - want).abs() <= 1e-10 * want, "r={r}");
        }
        assert!((resolvent_closed_form_s1(4.0) - 0.00575).abs() < 1e-4);
    }

    #[test]
    fn derivative_closed_form_at_s1() {
        for r in [0.3f64, 1.0, 3.0] {
            let want = -1.0 / (2.0 * std::f64::consts::PI * r.sinh());
            let got = resolvent_kernel_dr(1.0, r).unwrap();
            assert!((got - want).abs() <= 1e-10 * want.abs());
        }
    }

    #[test]
    fn exact_support() {
        assert_eq!(remainder_kernel(0.7, 3.0, 2.9).unwrap(), 0.0);
        assert_eq!(remainder_kernel(0.7, 3.0, 4.1).unwrap(), 0.0);
        assert!(remainder_kernel(0.7, 3.0, 3.5).unwrap() != 0.0);
    }

    #[test]
    fn phi0_matches_integral() {
        for r in [0.1f64, 1.0, 5.0, 12.0] {
            let f = |th: f64| ((-r).exp() + 2.0 * r.sinh() * (0.5 * th).sin().powi(2)).powf(-0.5);
            let want = adaptive_integrate(&f, 0.0, std::f64::consts::PI, 1e-13) / std::f64::consts::PI;
            assert!((spherical_phi0(r) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn table_interpolates() {
        let tab = RemainderTable::new(0.8, 2.0, RemainderTable::DEFAULT_INTERVALS).unwrap();
        for k in 0..37 {
            let r = 2.0 + k as f64 / 36.0 * 0.999 + 0.0003;
            let exact = remainder_kernel(0.8, 2.0, r).unwrap();
            assert!((tab.eval(r) - exact).abs() < 1e-9, "r={r}");
        }
        assert_eq!(tab.eval(1.9), 0.0);
        assert_eq!(tab.eval(3.2), 0.0);
    }

    #[test]
    fn domain_errors() {
        assert!(resolvent_kernel(0.7, 0.0).is_err());
        assert!(decay_condition(1.0).is_err());
    }
}
