use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sleepstack::baseline::{
    balanced_bagging_train, design_bandpass, draw_bag, extract_all, filter_signal, mmd, train_tree,
    write_features_csv, BagDescriptor, BandName, BandSpec, BaggingEnsemble, BaselineError, FilterBank, Node,
    TreeParams, ENSEMBLE_SIZE, NUM_FEATURES,
};
use sleepstack::seed::rng_for;
use sleepstack::synthetic::band_limited_epochs;

fn random_rows(rng: &mut ChaCha8Rng, n: usize, f: usize, k: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let rows = (0..n).map(|_| (0..f).map(|_| rng.random_range(0..6) as f64).collect()).collect();
    let labels = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
    (rows, labels)
}

#[test]
fn bags_are_balanced_and_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (rows, labels) = random_rows(&mut rng, 120, 3, 4);
    let e = balanced_bagging_train(&rows, &labels, 4, ENSEMBLE_SIZE, &TreeParams::default(), 17).unwrap();
    assert_eq!(e.trees.len(), 71);
    let mut by_class = vec![Vec::new(); 4];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let smallest = by_class.iter().map(Vec::len).min().unwrap();
    for &BagDescriptor { seed, per_class } in &e.bags {
        assert_eq!(per_class, smallest);
        let bag = draw_bag(&by_class, per_class, &mut rng_for(seed, "draw"));
        let mut counts = [0usize; 4];
        bag.iter().for_each(|&i| counts[labels[i]] += 1);
        assert!(counts.iter().all(|&c| c == smallest), "{counts:?}");
    }
}

#[test]
fn tree_fits_separable_data_exactly() {
    let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
    let labels: Vec<usize> = (0..40).map(|i| usize::from(i >= 13) + usize::from(i >= 29)).collect();
    let t = train_tree(&rows, &labels, 3, &TreeParams { max_depth: 5, min_leaf: 1 }).unwrap();
    for (r, &l) in rows.iter().zip(&labels) {
        assert_eq!(t.predict(r), l);
    }
    let Node::Split { feature, .. } = t.root else { panic!("root should split") };
    assert_eq!(feature, 0);
}

#[test]
fn identical_rows_with_mixed_labels_are_degenerate() {
    let rows = vec![vec![1.0, 2.0]; 6];
    let labels = vec![0, 1, 0, 1, 0, 1];
    assert!(matches!(
        train_tree(&rows, &labels, 2, &TreeParams::default()),
        Err(BaselineError::DegenerateData)
    ));
}

#[test]
fn ensemble_json_round_trip_keeps_predictions() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (rows, labels) = random_rows(&mut rng, 80, 4, 3);
    let e = balanced_bagging_train(&rows, &labels, 3, 11, &TreeParams::default(), 1).unwrap();
    let back = BaggingEnsemble::from_json(&e.to_json()).unwrap();
    assert_eq!(back, e);
    for _ in 0..200 {
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..7.0)).collect();
        assert_eq!(back.predict(&x).unwrap(), e.predict(&x).unwrap());
    }
}

#[test]
fn feature_csv_has_ten_feature_columns() {
    let epochs = band_limited_epochs(2, 3, 5);
    let feats = extract_all(&epochs, &FilterBank::default_bands()).unwrap();
    assert!(feats.iter().all(|f| f.values.len() == NUM_FEATURES));
    let mut buf = Vec::new();
    write_features_csv(&feats, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 3 + NUM_FEATURES);
    assert_eq!(&header[3..5], ["f0", "f1"]);
    assert_eq!(text.lines().count(), epochs.len() + 1);
}

#[test]
fn invalid_bands_are_rejected() {
    let bad = BandSpec {
        name: BandName::Gamma,
        low_hz: 30.0,
        high_hz: 60.0,
        order: 4,
    };
    assert!(design_bandpass(&bad, 100.0).is_err());
    assert!(design_bandpass(&BandSpec { low_hz: 8.0, high_hz: 4.0, ..bad }, 100.0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn designed_filters_are_stable(low in 0.3f64..40.0, width in 0.5f64..20.0, order in 1usize..7, seed in any::<u64>()) {
        let high = (low + width).min(49.5);
        prop_assume!(high - low > 0.2);
        let spec = BandSpec { name: BandName::Beta, low_hz: low, high_hz: high, order };
        let chain = design_bandpass(&spec, 100.0).unwrap();
        prop_assert!(chain.max_pole_radius() < 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..3000).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y = filter_signal(&x, &chain);
        prop_assert!(y.iter().all(|v| v.is_finite() && v.abs() < 1e3));
    }

    #[test]
    fn mmd_ignores_offsets(x in prop::collection::vec(-100.0f64..100.0, 300), offset in -1e3f64..1e3) {
        let shifted: Vec<f64> = x.iter().map(|v| v + offset).collect();
        let (a, b) = (mmd(&x, 100).unwrap(), mmd(&shifted, 100).unwrap());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn mmd_of_a_constant_is_zero(c in -1e3f64..1e3, windows in 1usize..5) {
        prop_assert_eq!(mmd(&vec![c; 100 * windows], 100).unwrap(), 0.0);
    }
}
