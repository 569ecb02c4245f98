use gaplab::certificate::{epsilon_net, neumann_verdict, rate_schedule_log10};
use gaplab::free_group::{ball_size, ball, split_support};
use gaplab::hyperbolic::{hyp_distance, Moebius, Point};
use gaplab::linalg::{dense_norm, CMatrix, C64};
use gaplab::linearization::half_step;
use gaplab::operator_lab::{assemble, hermitize, CoefficientMap};
use gaplab::parametrix::kernel::remainder_kernel;
use gaplab::{Flavor, ReducedWord, RepresentationSample, SupportSet};
use proptest::prelude::*;

fn letters(d: i32, max_len: usize) -> impl Strategy<Value = Vec<i32>> {
    prop::collection::vec((1..=d, any::<bool>()).prop_map(|(g, neg)| if neg { -g } else { g }), 0..max_len)
}

fn word(d: i32, max_len: usize) -> impl Strategy<Value = ReducedWord> {
    letters(d, max_len).prop_map(move |l| ReducedWord::reduce(&l, d as usize).unwrap())
}

fn coeff_map(max_len: usize, max_support: usize, m: usize) -> impl Strategy<Value = CoefficientMap> {
    prop::collection::vec((word(2, max_len), prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), m * m)), 1..=max_support)
        .prop_map(move |entries| {
            let mut cm = CoefficientMap::new(m);
            for (w, xs) in entries {
                if cm.get(&w).is_none() {
                    let a = CMatrix::from_fn(m, m, |i, j| C64::new(xs[i * m + j].0, xs[i * m + j].1));
                    cm.insert(w, a).unwrap();
                }
            }
            cm
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reduced_words_have_no_cancellation(l in letters(3, 24)) {
        let w = ReducedWord::reduce(&l, 3).unwrap();
        prop_assert!(w.letters().windows(2).all(|p| p[0] != -p[1]));
        prop_assert_eq!(ReducedWord::reduce(w.letters(), 3).unwrap(), w.clone());
        prop_assert!(w.len() <= l.len() && (l.len() - w.len()) % 2 == 0);
    }

    #[test]
    fn group_laws(a in word(2, 10), b in word(2, 10), c in word(2, 10)) {
        prop_assert!(a.mul(&a.inverse()).is_identity());
        prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
        prop_assert_eq!(a.mul(&b).inverse(), b.inverse().mul(&a.inverse()));
        prop_assert_eq!(a.mul(&a.left_quotient(&b)), b.clone());
    }

    #[test]
    fn split_covers_support(ws in prop::collection::vec(word(2, 8), 1..6), extra in 0usize..3) {
        let l = ws.iter().map(ReducedWord::len).max().unwrap().max(2) + extra;
        let mut s = SupportSet::new();
        for w in ws { s.insert(w); }
        let s = s.symmetric_closure();
        let split = split_support(&s, l).unwrap();
        let half = l.div_ceil(2);
        prop_assert!(split.elements.radius() <= half);
        prop_assert!(split.elements.contains(&ReducedWord::identity()));
        for w in s.iter() {
            let found = split.elements.iter().any(|g| split.elements.iter().any(|h| g.inverse().mul(h) == *w));
            prop_assert!(found, "{:?} not a quotient of S₁", w);
        }
    }

    #[test]
    fn symmetric_closure_is_symmetric(ws in prop::collection::vec(word(3, 6), 0..8)) {
        let mut s = SupportSet::new();
        for w in ws { s.insert(w); }
        let c = s.symmetric_closure();
        prop_assert!(c.is_symmetric());
        prop_assert!(s.is_subset(&c));
        prop_assert!(c.len() <= 2 * s.len());
    }

    #[test]
    fn hermitize_preserves_norm(cm in coeff_map(3, 4, 2), seed in 0u64..1000) {
        let h = hermitize(&cm);
        prop_assert!(h.is_hermitian());
        let rep = RepresentationSample::sample(Flavor::Unitary, 4, 2, seed).unwrap();
        let a = assemble(&cm, &rep, false).unwrap().to_dense().unwrap();
        let b = assemble(&h, &rep, false).unwrap().to_dense().unwrap();
        prop_assert!((dense_norm(&a) - dense_norm(&b)).abs() <= 1e-9 * (1.0 + dense_norm(&a)));
    }

    #[test]
    fn half_step_row_sums(cm in coeff_map(4, 5, 1)) {
        let h = hermitize(&cm);
        let l = h.radius().max(2);
        let hs = half_step(&h, l).unwrap();
        prop_assert!(hs.row_sum_defect() <= 1e-12);
        prop_assert!(hs.sqrt_defect() <= 1e-9);
        prop_assert!(hs.shifted_min_eigenvalue() >= -1e-10);
        prop_assert!((hs.theta - hs.block_count() as f64 * hs.a_tilde_norm).abs() <= 1e-12 * (1.0 + hs.theta));
    }

    #[test]
    fn gap_identity(log10_n in 1.3f64..400.0, bundle in any::<bool>(), d in 1usize..4) {
        let flavor = if bundle { Flavor::Unitary } else { Flavor::Permutation };
        let r = rate_schedule_log10(flavor, log10_n, d).unwrap();
        prop_assert!((r.gap_bound - (0.25 - r.kappa)).abs() <= 1e-15 * r.kappa.abs().max(1.0));
        prop_assert!(r.gap_identity_defect().abs() <= 1e-12 * r.kappa.abs().max(1.0));
    }

    #[test]
    fn net_spacing(s_min in 0.5f64..0.99, s_size in 1usize..50, c3 in 0.01f64..20.0) {
        let net = epsilon_net(s_min, s_size, c3).unwrap();
        prop_assert!(net.spacing <= net.max_spacing * (1.0 + 1e-12));
        prop_assert_eq!(net.points[0], s_min);
        prop_assert_eq!(*net.points.last().unwrap(), 1.0);
        prop_assert!(net.points.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= net.max_spacing * (1.0 + 1e-9)));
    }

    #[test]
    fn verdict_is_monotone(a in 0.0f64..2.0, b in 0.0f64..2.0, da in 0.0f64..1.0) {
        let v1 = neumann_verdict(a, b, None).unwrap();
        let v2 = neumann_verdict(a + da, b, None).unwrap();
        prop_assert_eq!(v1.verdict, a + b < 1.0);
        prop_assert!(!v2.verdict || v1.verdict);
        if let Some(inv) = v1.inverse_bound {
            prop_assert!((inv * (1.0 - v1.total) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn remainder_support(s in 0.55f64..1.0, t in 1.0f64..12.0, r in 0.01f64..20.0) {
        let v = remainder_kernel(s, t, r).unwrap();
        if r < t || r > t + 1.0 {
            prop_assert_eq!(v, 0.0);
        }
        prop_assert!(v.is_finite());
    }

    #[test]
    fn isometries_preserve_distance(x1 in -2.0f64..2.0, y1 in 0.1f64..3.0, x2 in -2.0f64..2.0, y2 in 0.1f64..3.0, t in -1.0f64..1.0, k in 0.2f64..3.0) {
        let g = Moebius::new(k, t, 0.3, (1.0 + 0.3 * t) / k).unwrap();
        let (z, w) = (Point::new(x1, y1), Point::new(x2, y2));
        let d0 = hyp_distance(z, w).unwrap();
        let d1 = hyp_distance(g.apply(z), g.apply(w)).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
    }
}

#[test]
fn ball_sizes_match_formula() {
    for d in 1..=3 {
        for l in 0..=5 {
            assert_eq!(ball(d, l).unwrap().len() as u128, ball_size(d, l));
        }
    }
}
