use super::*;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn t_test_all_zero_is_degenerate_null() {
    let r = paired_t_test(&[0.0; 5]).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.p, 1.0);
    assert_eq!(r.df, 4);
}

#[test]
fn t_test_constant_nonzero_is_degenerate_reject() {
    let r = paired_t_test(&[0.5; 3]).unwrap();
    assert!(r.degenerate);
    assert_eq!(r.p, 0.0);
}

#[test]
fn t_test_symmetric_differences() {
    let r = paired_t_test(&[1.0, -1.0, 1.0, -1.0]).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert!(close(r.p, 1.0, 1e-15));
}

#[test]
fn t_test_reference_values() {
    // Reference: scipy.stats.ttest_1samp
    let r = paired_t_test(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert!(close(r.statistic, 3.872983346207417, 1e-12));
    assert_eq!(r.df, 3);
    assert!(close(r.p, 0.030466291662170977, 1e-12));

    let r = paired_t_test(&[0.5, -0.2, 0.9, 1.4, 0.3, -0.1]).unwrap();
    assert!(close(r.statistic, 1.8775462327503702, 1e-12));
    assert!(close(r.p, 0.11925191052347242, 1e-12));
}

#[test]
fn t_test_needs_two() {
    assert_eq!(
        paired_t_test(&[1.0]),
        Err(StatsError::TooFewObservations { min: 2, got: 1 })
    );
}

#[test]
fn chi2_reference_values() {
    let r = chi_squared_gof(&[20.0, 10.0, 5.0, 5.0], &[10.0; 4]).unwrap();
    assert_eq!(r.statistic, 15.0);
    assert_eq!(r.df, 3);
    assert!(close(r.p, 0.0018166489665723214, 1e-12));

    let r = chi_squared_gof(&[10.0; 4], &[10.0; 4]).unwrap();
    assert_eq!(r.statistic, 0.0);
    assert_eq!(r.p, 1.0);
}

#[test]
fn chi2_doubling_counts_doubles_statistic() {
    let a = chi_squared_gof(&[20.0, 10.0, 5.0, 5.0], &[10.0; 4]).unwrap();
    let b = chi_squared_gof(&[40.0, 20.0, 10.0, 10.0], &[20.0; 4]).unwrap();
    assert_eq!(b.statistic, 2.0 * a.statistic);
    assert!(close(b.p, 1.3800570312932553e-06, 1e-15));
}

#[test]
fn chi2_rejects_zero_expected() {
    assert_eq!(
        chi_squared_gof(&[1.0, 2.0], &[1.0, 0.0]),
        Err(StatsError::NonPositiveExpected(1))
    );
    assert!(matches!(
        chi_squared_gof(&[1.0, 2.0], &[1.0]),
        Err(StatsError::LengthMismatch { .. })
    ));
}

#[test]
fn bh_examples() {
    assert_eq!(bh_correct(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap(), vec![true; 4]);
    assert_eq!(bh_correct(&[1.0; 6], 0.05).unwrap(), vec![false; 6]);
    assert_eq!(bh_correct(&[0.04], 0.05).unwrap(), vec![true]);
    // step-up: p(3) = 0.03 <= 3/4 * 0.05 admits the two smaller ones even though
    // 0.02 > 2/4 * 0.05 is false in isolation
    assert_eq!(
        bh_correct(&[0.2, 0.03, 0.011, 0.02], 0.05).unwrap(),
        vec![false, true, true, true]
    );
    assert!(bh_correct(&[], 0.05).unwrap().is_empty());
    assert_eq!(bh_correct(&[1.2], 0.05), Err(StatsError::InvalidPValue(1.2)));
}

#[test]
fn bonferroni_examples() {
    assert_eq!(
        bonferroni_correct(&[0.01, 0.02, 0.03, 0.04], 0.05).unwrap(),
        vec![true, false, false, false]
    );
    assert_eq!(bonferroni_correct(&[0.05], 0.05).unwrap(), vec![true]);
    assert_eq!(bonferroni_correct(&[0.051], 0.05).unwrap(), vec![false]);
}

fn label(model: &str, comparison: Comparison, measure: &str) -> TestLabel {
    TestLabel {
        model: model.into(),
        measure: measure.into(),
        comparison,
        temperature: 0.0,
        length: 100,
        pov: Pov::First,
    }
}

fn test_with_p(model: &str, comparison: Comparison, p: f64) -> LabeledTest {
    LabeledTest {
        label: label(model, comparison, "polarity"),
        n: 10,
        result: TestResult { statistic: 0.0, df: 9, p, degenerate: false },
    }
}

#[test]
fn violation_rate_all_degenerate_is_zero() {
    let tests: Vec<_> = Comparison::ALL
        .iter()
        .map(|&c| LabeledTest {
            label: label("m", c, "reading_ease"),
            n: 5,
            result: paired_t_test(&[0.0; 5]).unwrap(),
        })
        .collect();
    let (rates, _) =
        invariance_violation_rate(&tests, Correction::Bh, 0.05, CorrectionScope::Group).unwrap();
    assert_eq!(rates.len(), 2);
    assert!(rates.iter().all(|r| r.rate == 0.0 && r.total == 2));
}

#[test]
fn violation_rate_forty_tests_eight_rejected() {
    let mut tests = Vec::new();
    for i in 0..40 {
        let c = if i % 2 == 0 { Comparison::MwMb } else { Comparison::FwFb };
        let p = if i < 8 { 1e-6 } else { 0.9 };
        tests.push(test_with_p("m", c, p));
    }
    let (rates, decisions) =
        invariance_violation_rate(&tests, Correction::Bh, 0.05, CorrectionScope::Group).unwrap();
    assert_eq!(rates.len(), 1);
    assert_eq!(rates[0].comparison_kind, ComparisonKind::Race);
    assert_eq!((rates[0].rejected, rates[0].total), (8, 40));
    assert_eq!(rates[0].rate, 20.0);
    assert_eq!(decisions.iter().filter(|d| d.rejected).count(), 8);
}

#[test]
fn correction_families_are_per_group() {
    // Same p-values in two models: each family corrects independently.
    let mut tests = Vec::new();
    for model in ["a", "b"] {
        tests.push(test_with_p(model, Comparison::MwFw, 0.02));
        tests.push(test_with_p(model, Comparison::MbFb, 0.5));
    }
    let (group, _) =
        invariance_violation_rate(&tests, Correction::Bonferroni, 0.05, CorrectionScope::Group)
            .unwrap();
    // m = 2 per family: 0.02 <= 0.025
    assert!(group.iter().all(|r| r.rejected == 1));
    let (global, _) =
        invariance_violation_rate(&tests, Correction::Bonferroni, 0.05, CorrectionScope::Global)
            .unwrap();
    // m = 4 globally: 0.02 > 0.0125
    assert!(global.iter().all(|r| r.rejected == 0));
}

#[test]
fn ledger_round_trip() {
    let tests = vec![test_with_p("m", Comparison::MwFw, 0.01), test_with_p("m", Comparison::MbFb, 0.3)];
    let (_, decisions) =
        invariance_violation_rate(&tests, Correction::Bh, 0.05, CorrectionScope::Group).unwrap();
    let rows: Vec<_> = decisions
        .iter()
        .map(|d| TestLedgerRow::from_decision(d, Correction::Bh, CorrectionScope::Group, 0.05))
        .collect();
    let mut buf = Vec::new();
    write_test_ledger(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("schema_version,model,measure,comparison,comparison_type,"));
    let back = read_test_ledger(buf.as_slice()).unwrap();
    assert_eq!(back, rows);
    assert_eq!(back[0].to_test(), tests[0]);
}

proptest! {
    #[test]
    fn t_is_scale_invariant(d in prop::collection::vec(-10.0f64..10.0, 3..30), c in 0.01f64..100.0) {
        let a = paired_t_test(&d).unwrap();
        let scaled: Vec<f64> = d.iter().map(|x| x * c).collect();
        let b = paired_t_test(&scaled).unwrap();
        if !a.degenerate {
            prop_assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic.abs().max(1.0));
            prop_assert!((a.p - b.p).abs() <= 1e-9);
        }
    }

    #[test]
    fn bonferroni_subset_of_bh(ps in prop::collection::vec(0.0f64..=1.0, 1..50), alpha in 0.001f64..0.5) {
        let bh = bh_correct(&ps, alpha).unwrap();
        let bf = bonferroni_correct(&ps, alpha).unwrap();
        for (b, f) in bh.iter().zip(&bf) {
            prop_assert!(!f || *b);
        }
    }

    #[test]
    fn bh_monotone_in_alpha(ps in prop::collection::vec(0.0f64..=1.0, 1..50), a in 0.001f64..0.3, extra in 0.0f64..0.3) {
        let lo = bh_correct(&ps, a).unwrap();
        let hi = bh_correct(&ps, a + extra).unwrap();
        for (l, h) in lo.iter().zip(&hi) {
            prop_assert!(!l || *h);
        }
    }

    #[test]
    fn survival_monotone(df in 1usize..120, x in 0.0f64..50.0, dx in 0.001f64..5.0) {
        let df = df as f64;
        prop_assert!(special::chi2_sf(x + dx, df) <= special::chi2_sf(x, df));
        prop_assert!(special::student_t_two_sided(x + dx, df) <= special::student_t_two_sided(x, df));
        let p = special::chi2_sf(x, df);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn chi2_zero_iff_equal_counts(a in 1u32..50, b in 1u32..50, c in 1u32..50, d in 1u32..50) {
        let obs = [a as f64, b as f64, c as f64, d as f64];
        let total: f64 = obs.iter().sum();
        let r = chi_squared_gof(&obs, &[total / 4.0; 4]).unwrap();
        let equal = a == b && b == c && c == d;
        prop_assert_eq!(r.p == 1.0, equal);
        prop_assert!(r.statistic >= 0.0);
    }
}
