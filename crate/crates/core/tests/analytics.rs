use ctgen_core::analytics::{
    exact_p_value, normal_p_value, relative_coverage, summarize, vargha_delaney_a12,
    ComplianceCounts, RunRecord, TimelineSample, Verdict,
};
use ctgen_core::Mode;
use proptest::prelude::*;

fn sample(max: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec((0i32..20).prop_map(f64::from), 1..=max)
}

proptest! {
    #[test]
    fn a12_is_antisymmetric(xs in sample(15), ys in sample(15)) {
        let a = vargha_delaney_a12(&xs, &ys).unwrap();
        let b = vargha_delaney_a12(&ys, &xs).unwrap();
        prop_assert!((a + b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn a12_ignores_monotone_transforms(xs in sample(15), ys in sample(15)) {
        let f = |v: &Vec<f64>| v.iter().map(|x| x * x * x + 3.0 * x - 7.0).collect::<Vec<_>>();
        prop_assert_eq!(
            vargha_delaney_a12(&xs, &ys).unwrap(),
            vargha_delaney_a12(&f(&xs), &f(&ys)).unwrap()
        );
    }

    #[test]
    fn relative_coverage_is_affine_invariant(
        a in 0.0f64..1.0, b in 0.0f64..1.0, t in 0.0f64..1.0,
        shift in -5.0f64..5.0, scale in 0.1f64..10.0,
    ) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let cov = lo + t * (hi - lo);
        let base = relative_coverage(cov, lo, hi).unwrap();
        let moved = relative_coverage(cov * scale + shift, lo * scale + shift, hi * scale + shift);
        if let Ok(moved) = moved {
            prop_assert!((base - moved).abs() < 1e-6, "{} vs {}", base, moved);
        }
        prop_assert!((0.0..=100.0).contains(&base));
    }

    #[test]
    fn exact_and_normal_agree_on_ten_by_ten(
        perm in Just((0..20).map(f64::from).collect::<Vec<_>>()).prop_shuffle()
    ) {
        let (xs, ys) = perm.split_at(10);
        let exact = exact_p_value(xs, ys).unwrap().unwrap();
        let approx = normal_p_value(xs, ys).unwrap();
        prop_assert!((exact - approx).abs() <= 0.02, "exact {} approx {}", exact, approx);
    }
}

fn run(module: &str, mode: Mode, seed: u64, covered: usize, compliant: usize) -> RunRecord {
    RunRecord {
        module: module.into(),
        mode,
        seed,
        coverage: covered as f64 / 10.0,
        covered,
        total: 10,
        iterations: 5,
        evaluations: 300,
        compliance: ComplianceCounts {
            generated: 4,
            compliant,
            non_compliant: 4 - compliant,
        },
        quarantined: Vec::new(),
        timeline: vec![
            TimelineSample {
                elapsed_s: 0.0,
                iteration: 0,
                covered: 0,
                total: 10,
            },
            TimelineSample {
                elapsed_s: 1.5,
                iteration: 3,
                covered,
                total: 10,
            },
        ],
    }
}

/// Two modules, two seeds each, aggregated by hand:
///
/// module `a`: constrained {0.8, 0.9}, unconstrained {0.5, 0.8}.
///   pairs: 0.8>0.5, 0.8=0.8, 0.9>0.5, 0.9>0.8 → A12 = 3.5/4 = 0.875.
///   min 0.5, max 0.9 → relative constrained (75 + 100)/2 = 87.5,
///   unconstrained (0 + 75)/2 = 37.5.
/// module `b`: constrained {0.4, 0.4}, unconstrained {0.6, 0.6}.
///   A12 = 0; relative constrained 0, unconstrained 100.
/// aggregate: mean A12 0.4375, mean relative constrained 43.75.
#[test]
fn toy_fixture_matches_hand_aggregation() {
    let records = vec![
        run("a", Mode::Constrained, 0, 8, 3),
        run("a", Mode::Constrained, 1, 9, 4),
        run("a", Mode::Unconstrained, 0, 5, 1),
        run("a", Mode::Unconstrained, 1, 8, 0),
        run("b", Mode::Constrained, 0, 4, 2),
        run("b", Mode::Constrained, 1, 4, 2),
        run("b", Mode::Unconstrained, 0, 6, 2),
        run("b", Mode::Unconstrained, 1, 6, 1),
    ];
    let s = summarize(&records, 0.05);
    let a = &s.modules[0];
    assert_eq!(a.a12, 0.875);
    assert!((a.mean_coverage_constrained - 0.85).abs() < 1e-12);
    assert!((a.mean_relative_coverage_constrained - 87.5).abs() < 1e-9);
    assert!((a.mean_relative_coverage_unconstrained - 37.5).abs() < 1e-9);
    assert_eq!(a.verdict, Verdict::Better);
    assert_eq!(a.significant, Some(false));
    let b = &s.modules[1];
    assert_eq!(b.a12, 0.0);
    assert_eq!(b.verdict, Verdict::Worse);
    assert_eq!(b.mean_relative_coverage_constrained, 0.0);
    assert_eq!(s.better, 1);
    assert_eq!(s.worse, 1);
    assert_eq!(s.mean_a12, 0.4375);
    assert!((s.mean_relative_coverage_constrained - 43.75).abs() < 1e-9);
    assert_eq!(s.compliance_constrained.compliant, 11);
    assert_eq!(s.compliance_unconstrained.compliant, 4);
    // Step interpolation: nothing covered before 1.5 s.
    assert_eq!(s.timeline.len(), 3);
    assert_eq!(s.timeline[1].constrained, 0.0);
    assert!((s.timeline[2].constrained - 0.6).abs() < 1e-12);
    assert!((s.timeline[2].unconstrained - 0.6).abs() < 1e-12);
}
