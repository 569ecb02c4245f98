//! Cusp cutoffs χ⁺, χ⁻ built from the quintic smoothstep.

use serde::Serialize;

use crate::error::{Error, Result};

/// S(x) = 6x⁵ − 15x⁴ + 10x³ on [0, 1], clamped outside.
#[derive(Clone, Copy, Debug)]
pub struct SmoothStep;

impl SmoothStep {
    /// sup |S′| = S′(1/2).
    pub const SUP_D1: f64 = 1.875;
    /// sup |S″| = 60·x(1−x)(1−2x) at x = (3 − √3)/6, i.e. 10/√3.
    pub const SUP_D2: f64 = 5.773_502_691_896_258;

    pub fn value(x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else if x >= 1.0 {
            1.0
        } else {
            x * x * x * (x * (6.0 * x - 15.0) + 10.0)
        }
    }

    pub fn d1(x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            0.0
        } else {
            let y = x * (1.0 - x);
            30.0 * y * y
        }
    }

    pub fn d2(x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            0.0
        } else {
            60.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
        }
    }
}

/// Width of the template transition; chosen so both template derivative
/// bounds are at most one.
pub const TEMPLATE_WIDTH: f64 = 2.5;

/// Template end point τ₀: χ⁺₀ rises from 0 at τ = 1 to 1 at τ = τ₀.
pub const TAU0: f64 = 1.0 + TEMPLATE_WIDTH;

/// Grid size used for the build-time certificate.
pub const CERTIFICATE_GRID: usize = 10_000;

/// χ⁺ and χ⁻ at parameter κ.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CutoffPair {
    pub kappa: f64,
    pub tau0: f64,
    /// Height where χ⁺ reaches 1; χ⁻ rises on [τ_n, 2τ_n].
    pub tau_n: f64,
}

impl CutoffPair {
    fn scale(&self) -> f64 {
        self.kappa / 60.0
    }

    /// Template χ⁺₀(τ).
    pub fn template(tau: f64) -> f64 {
        SmoothStep::value((tau - 1.0) / TEMPLATE_WIDTH)
    }

    pub fn chi_plus(&self, t: f64) -> f64 {
        if t >= self.tau_n {
            return 1.0;
        }
        SmoothStep::value((self.scale() * (t - 1.0)) / TEMPLATE_WIDTH)
    }

    pub fn chi_plus_d1(&self, t: f64) -> f64 {
        let k = self.scale();
        SmoothStep::d1(k * (t - 1.0) / TEMPLATE_WIDTH) * k / TEMPLATE_WIDTH
    }

    pub fn chi_plus_d2(&self, t: f64) -> f64 {
        let k = self.scale() / TEMPLATE_WIDTH;
        SmoothStep::d2(self.scale() * (t - 1.0) / TEMPLATE_WIDTH) * k * k
    }

    pub fn chi_minus(&self, t: f64) -> f64 {
        SmoothStep::value((t - self.tau_n) / self.tau_n)
    }

    pub fn chi_minus_d1(&self, t: f64) -> f64 {
        SmoothStep::d1((t - self.tau_n) / self.tau_n) / self.tau_n
    }

    /// Analytic bounds: sup|χ⁺′| = (κ/60)·S′max/w and
    /// sup|χ⁺″ − χ⁺′| ≤ (κ/60)²·S″max/w² + sup|χ⁺′|.
    pub fn analytic_bounds(&self) -> (f64, f64) {
        let k = self.scale() / TEMPLATE_WIDTH;
        let d1 = k * SmoothStep::SUP_D1;
        (d1, k * k * SmoothStep::SUP_D2 + d1)
    }

    /// Samples the invariants on an `n`-point grid over [0, 2.5 τ_n].
    pub fn certificate(&self, n: usize) -> CutoffCertificate {
        let hi = 2.5 * self.tau_n;
        let bound = self.kappa / 30.0;
        let mut cert = CutoffCertificate {
            kappa: self.kappa,
            grid_points: n,
            bound,
            sup_d1: 0.0,
            sup_d2_minus_d1: 0.0,
            stagger_defect: 0.0,
            first_violation: None,
        };
        for i in 0..n {
            let t = hi * i as f64 / (n - 1) as f64;
            let d1 = self.chi_plus_d1(t).abs();
            let lap = (self.chi_plus_d2(t) - self.chi_plus_d1(t)).abs();
            let stagger = (self.chi_plus(t) * self.chi_minus(t) - self.chi_minus(t)).abs();
            cert.sup_d1 = cert.sup_d1.max(d1);
            cert.sup_d2_minus_d1 = cert.sup_d2_minus_d1.max(lap);
            cert.stagger_defect = cert.stagger_defect.max(stagger);
            if cert.first_violation.is_none() {
                let support_ok = (t > 1.0 || self.chi_plus(t) == 0.0)
                    && (t < self.tau_n || self.chi_plus(t) == 1.0)
                    && (t > self.tau_n || self.chi_minus(t) == 0.0)
                    && (t < 2.0 * self.tau_n || self.chi_minus(t) == 1.0);
                if d1 > bound {
                    cert.first_violation = Some((t, "|χ⁺′| exceeds κ/30".into()));
                } else if lap > bound {
                    cert.first_violation = Some((t, "|χ⁺″ − χ⁺′| exceeds κ/30".into()));
                } else if stagger != 0.0 {
                    cert.first_violation = Some((t, "χ⁺χ⁻ ≠ χ⁻".into()));
                } else if !support_ok {
                    cert.first_violation = Some((t, "support structure violated".into()));
                }
            }
        }
        cert
    }

    /// (sup|χ″ − χ′| + 2 sup|χ′|)·5/(4κ) from the certified bounds κ/30.
    pub fn cusp_remainder_bound(&self) -> f64 {
        (self.kappa / 30.0 + 2.0 * self.kappa / 30.0) * 5.0 / (4.0 * self.kappa)
    }

    /// Same quantity with the measured sups.
    pub fn cusp_remainder_measured(&self, cert: &CutoffCertificate) -> f64 {
        (cert.sup_d2_minus_d1 + 2.0 * cert.sup_d1) * 5.0 / (4.0 * self.kappa)
    }
}

/// Outcome of sampling the cutoff invariants.
#[derive(Clone, Debug, Serialize)]
pub struct CutoffCertificate {
    pub kappa: f64,
    pub grid_points: usize,
    pub bound: f64,
    pub sup_d1: f64,
    pub sup_d2_minus_d1: f64,
    pub stagger_defect: f64,
    pub first_violation: Option<(f64, String)>,
}

impl CutoffCertificate {
    pub fn holds(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Rescales the template to parameter κ and verifies it on a grid.
pub fn build_cutoffs(kappa: f64) -> Result<CutoffPair> {
    if !(kappa > 0.0 && kappa <= 1.0) {
        return Err(Error::Domain(format!("κ must lie in (0, 1], got {kappa}")));
    }
    let pair = CutoffPair { kappa, tau0: TAU0, tau_n: (60.0 / kappa) * (TAU0 - 1.0) + 1.0 };
    let cert = pair.certificate(CERTIFICATE_GRID);
    if let Some((point, reason)) = cert.first_violation {
        return Err(Error::Construction { point, reason });
    }
    Ok(pair)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_bounds_below_one() {
        assert!(SmoothStep::SUP_D1 / TEMPLATE_WIDTH <= 1.0);
        assert!(SmoothStep::SUP_D2 / (TEMPLATE_WIDTH * TEMPLATE_WIDTH) <= 1.0);
        let x = (3.0 - 3f64.sqrt()) / 6.0;
        assert!((SmoothStep::d2(x) - SmoothStep::SUP_D2).abs() < 1e-12);
    }

    #[test]
    fn support_structure() {
        for kappa in [1.0, 0.1, 0.01] {
            let p = build_cutoffs(kappa).unwrap();
            assert_eq!(p.chi_plus(0.5), 0.0);
            assert_eq!(p.chi_plus(2.0 * p.tau_n), 1.0);
            assert_eq!(p.chi_minus(p.tau_n), 0.0);
            assert_eq!(p.chi_minus(2.0 * p.tau_n), 1.0);
        }
        let p = build_cutoffs(0.01).unwrap();
        assert!((p.tau_n - (6000.0 * (p.tau0 - 1.0) + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn cusp_bound_is_one_eighth() {
        let p = build_cutoffs(0.3).unwrap();
        assert!((p.cusp_remainder_bound() - 0.125).abs() < 1e-15);
        let cert = p.certificate(CERTIFICATE_GRID);
        assert!(p.cusp_remainder_measured(&cert) <= 0.125);
    }

    #[test]
    fn out_of_range_kappa() {
        assert!(build_cutoffs(0.0).is_err());
        assert!(build_cutoffs(1.5).is_err());
    }
}
