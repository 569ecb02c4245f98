use gaplab::linalg::{CMatrix, C64};
use gaplab::representations::haar_unitary;
use gaplab::rng;
use statrs::distribution::{Beta, ContinuousCDF};

const N: usize = 8;
const SAMPLES: usize = 5000;
/// Kolmogorov distribution quantile at the 1% level.
const C_ALPHA: f64 = 1.628;

fn first_entry_weights(v: Option<&CMatrix>, seed: u64) -> Vec<f64> {
    let mut r = rng::seeded(seed);
    let mut xs: Vec<f64> = (0..SAMPLES)
        .map(|_| {
            let u = haar_unitary(N, &mut r);
            let m = match v {
                Some(v) => v * u,
                None => u,
            };
            m[(0, 0)].norm_sqr()
        })
        .collect();
    xs.sort_by(f64::total_cmp);
    xs
}

fn two_sample_ks(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn left_invariance() {
    let mut r = rng::seeded(99);
    let v = haar_unitary(N, &mut r);
    let vu = first_entry_weights(Some(&v), 1);
    let u = first_entry_weights(None, 2);
    let d = two_sample_ks(&vu, &u);
    let crit = C_ALPHA * ((2 * SAMPLES) as f64 / (SAMPLES * SAMPLES) as f64).sqrt();
    assert!(d < crit, "KS statistic {d} ≥ {crit}");
}

#[test]
fn entry_weight_is_beta() {
    // |U₁₁|² of a Haar unitary is Beta(1, n−1)
    let beta = Beta::new(1.0, (N - 1) as f64).unwrap();
    let xs = first_entry_weights(None, 3);
    let n = xs.len() as f64;
    let d = xs
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let f = beta.cdf(x);
            (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(d < C_ALPHA / n.sqrt(), "KS statistic {d}");
}

#[test]
fn columns_are_orthonormal() {
    let mut r = rng::seeded(5);
    let u = haar_unitary(N, &mut r);
    let defect = (u.adjoint() * &u - CMatrix::identity(N, N)).map(|z: C64| z.norm()).max();
    assert!(defect < 1e-12);
}
