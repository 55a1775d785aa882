use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sleepstack::analysis::{
    emit_report, f_survival, kde, metrics, metrics_from, one_way_anova, spectral_rolloff, spectral_spread,
    AnalysisError, AnovaResult, AnovaRow, BandFeature, Bandwidth, ConfusionMatrix, Grid, RecordingPredictions,
    ReportInputs, SUMMARY_METRICS,
};
use sleepstack::baseline::BandName;
use sleepstack::edf::Subset;

/// `P(F > f)` by Simpson integration of the F density after substituting
/// `t = u^2`, which removes the singularity at zero for `d1 = 1`.
fn f_tail_by_integration(f: f64, d1: f64, d2: f64) -> f64 {
    let ln_c = 0.5 * d1 * d1.ln() + 0.5 * d2 * d2.ln() - statrs::function::beta::ln_beta(d1 / 2.0, d2 / 2.0);
    let g = |u: f64| 2.0 * (ln_c - 0.5 * (d1 + d2) * (d2 + d1 * u * u).ln()).exp() * u.powf(d1 - 1.0);
    let n = 200_000;
    let b = f.sqrt();
    let h = b / n as f64;
    let mut s = g(0.0) + g(b);
    for i in 1..n {
        s += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - s * h / 3.0
}

#[test]
fn f_tail_matches_numeric_integration() {
    for d1 in [1.0, 4.0, 10.0] {
        for d2 in [1.0, 4.0, 10.0] {
            for f in [0.05, 0.5, 1.0, 1.5, 3.0, 8.0, 40.0] {
                let ours = f_survival(f, d1, d2);
                let oracle = f_tail_by_integration(f, d1, d2);
                assert!((ours - oracle).abs() < 1e-6, "F({d1},{d2}) at {f}: {ours} vs {oracle}");
            }
        }
    }
}

#[test]
fn anova_hand_example() {
    let r = one_way_anova(&[&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]]).unwrap();
    // SSB = 1.5 and SSW = 4 over (1, 4) degrees of freedom.
    assert_eq!(r.f, 1.5);
    assert_eq!((r.df_between, r.df_within), (1, 4));
    assert!((r.p_value - f_tail_by_integration(1.5, 1.0, 4.0)).abs() < 1e-6);
}

#[test]
fn kde_of_standard_normal_peaks_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let s: Vec<f64> = (0..10_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let c = kde(&s, Bandwidth::Silverman, Grid::Auto { points: 401 }).unwrap();
    assert!(c.peak().abs() < 0.1, "{}", c.peak());
    assert!((c.integral() - 1.0).abs() < 0.02);
    let fixed = kde(&s, Bandwidth::Fixed(0.3), Grid::Range { lo: -6.0, hi: 6.0, points: 601 }).unwrap();
    assert_eq!(fixed.bandwidth, 0.3);
}

#[test]
fn spectral_features_ignore_amplitude() {
    let x: Vec<f64> = (0..3000).map(|i| ((i * 7919) % 101) as f64 - 50.0).collect();
    let y: Vec<f64> = x.iter().map(|v| v * 37.5).collect();
    assert!((spectral_rolloff(&x, 100.0).unwrap() - spectral_rolloff(&y, 100.0).unwrap()).abs() < 1e-12);
    assert!((spectral_spread(&x, 100.0).unwrap() - spectral_spread(&y, 100.0).unwrap()).abs() < 1e-9);
}

fn sample_report() -> sleepstack::analysis::MetricsReport {
    let groups = vec![
        RecordingPredictions {
            recording_id: "SC4001E0".into(),
            subject_id: "SC00".into(),
            subset: Subset::SC,
            preds: vec![0, 1, 2, 3, 4, 4, 1],
            labels: vec![0, 1, 2, 3, 4, 3, 2],
        },
        RecordingPredictions {
            recording_id: "ST7011J0".into(),
            subject_id: "ST01".into(),
            subset: Subset::ST,
            preds: vec![0, 0, 1, 2],
            labels: vec![0, 1, 1, 2],
        },
    ];
    metrics(&groups, &["W", "S1", "S2", "S3", "REM"]).unwrap()
}

fn sample_anova() -> Vec<AnovaRow> {
    let r = AnovaResult {
        f: 12.5,
        df_between: 1,
        df_within: 40,
        p_value: 1e-320,
        zero_within: false,
    };
    vec![
        AnovaRow {
            feature: BandFeature::Mmd,
            band: BandName::Delta,
            result: r,
        },
        AnovaRow {
            feature: BandFeature::EnergySis,
            band: BandName::Gamma,
            result: AnovaResult { p_value: 0.2, ..r },
        },
    ]
}

fn emit(dir: &std::path::Path) -> Vec<std::path::PathBuf> {
    let m = sample_report();
    let anova = sample_anova();
    let c = kde(&[0.1, 0.3, 0.35, 0.8], Bandwidth::Silverman, Grid::Auto { points: 50 }).unwrap();
    let inputs = ReportInputs {
        metrics: Some(&m),
        compare: vec![("baseline", &m)],
        anova: &anova,
        kde: vec![("gamma_rolloff".into(), vec![("SC", &c), ("ST & co", &c)])],
        ..Default::default()
    };
    emit_report(dir, &inputs).unwrap()
}

#[test]
fn report_is_byte_deterministic_and_well_formed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let fa = emit(a.path());
    let fb = emit(b.path());
    assert_eq!(fa.len(), fb.len());
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap(), "{}", x.display());
        if x.extension().is_some_and(|e| e == "svg") {
            let text = std::fs::read_to_string(x).unwrap();
            let doc = roxmltree::Document::parse(&text).unwrap();
            assert_eq!(doc.root_element().tag_name().name(), "svg");
        }
    }
    let summary = std::fs::read_to_string(a.path().join("summary.csv")).unwrap();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    assert_eq!(&header[1..], SUMMARY_METRICS);
    assert_eq!(summary.lines().count(), 3);
    let anova = std::fs::read_to_string(a.path().join("anova.csv")).unwrap();
    assert!(anova.starts_with("feature,band,F,df_b,df_w,p\n"));
    assert!(anova.contains("<1e-300"));
    let per_rec = std::fs::read_to_string(a.path().join("per_recording.csv")).unwrap();
    assert!(per_rec.starts_with("recording_id,subject_id,subset,accuracy\n"));
}

#[test]
fn empty_report_is_an_error_and_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report");
    assert_eq!(emit_report(&out, &ReportInputs::default()), Err(AnalysisError::EmptyMetrics));
    assert!(!out.exists());
}

fn arb_confusion() -> impl Strategy<Value = ConfusionMatrix> {
    (2usize..6).prop_flat_map(|k| {
        prop::collection::vec(prop::collection::vec(0u64..50, k), k)
            .prop_filter("non-empty", |c| c.iter().flatten().sum::<u64>() > 0)
            .prop_map(|counts| ConfusionMatrix { counts })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn accuracy_is_the_row_weighted_sensitivity(cm in arb_confusion()) {
        let k = cm.num_classes();
        let names: Vec<String> = (0..k).map(|c| format!("c{c}")).collect();
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let total = cm.total() as f64;
        let rows: Vec<f64> = (0..k).map(|c| cm.row_total(c) as f64).collect();
        let r = metrics_from(cm, &[], &names).unwrap();
        let weighted: f64 = r.sensitivity.iter().zip(&rows).map(|(s, n)| s.unwrap_or(0.0) * n / total).sum();
        prop_assert!((weighted - r.epoch_accuracy).abs() < 1e-9);
        for v in r.sensitivity.iter().chain(&r.specificity).flatten() {
            prop_assert!((0.0..=100.0).contains(v));
        }
    }

    #[test]
    fn metrics_ignore_epoch_order(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..80), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut shuffled = pairs.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let group = |p: &[(usize, usize)]| RecordingPredictions {
            recording_id: "r".into(),
            subject_id: "s".into(),
            subset: Subset::SC,
            preds: p.iter().map(|x| x.0).collect(),
            labels: p.iter().map(|x| x.1).collect(),
        };
        let names = ["a", "b", "c", "d"];
        prop_assert_eq!(metrics(&[group(&pairs)], &names).unwrap(), metrics(&[group(&shuffled)], &names).unwrap());
    }

    #[test]
    fn anova_is_shift_and_scale_invariant(
        a in prop::collection::vec(-50.0f64..50.0, 2..20),
        b in prop::collection::vec(-50.0f64..50.0, 2..20),
        shift in -1e3f64..1e3,
        scale in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
    ) {
        let base = one_way_anova(&[&a, &b]).unwrap();
        prop_assume!(!base.zero_within && base.f > 1e-6);
        let moved = |g: &[f64]| g.iter().map(|v| (v + shift) * scale).collect::<Vec<_>>();
        let (ma, mb) = (moved(&a), moved(&b));
        let other = one_way_anova(&[&ma, &mb]).unwrap();
        prop_assert!((other.f - base.f).abs() <= 1e-6 * base.f.max(1.0), "{} vs {}", other.f, base.f);
        prop_assert!((0.0..=1.0).contains(&other.p_value));
    }
}
