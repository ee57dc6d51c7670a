mod common;

use proptest::prelude::*;
use pqwf::classifiers::svm::BinaryMachine;
use pqwf::classifiers::{
    rf_train, svm_train, tree_train, Classifier, ForestParams, KnnModel, LabeledDataset, LabeledRow,
    SvmParams,
};
use pqwf::eval::split_dataset;
use pqwf::rng::{self, Domain};
use pqwf::signal_gen::DisturbanceClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn blobs(seed: u64, per_class: usize, spread: f64) -> LabeledDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = [DisturbanceClass::Swell, DisturbanceClass::Sag, DisturbanceClass::Notch];
    let mut rows = Vec::new();
    for (c, &label) in classes.iter().enumerate() {
        for _ in 0..per_class {
            let mut x = [0.0; 5];
            for (f, v) in x.iter_mut().enumerate() {
                let centre = if f == c { 4.0 } else { 0.0 };
                *v = centre + spread * rng.random_range(-1.0..1.0);
            }
            rows.push(LabeledRow { id: rows.len() as u64, x, label });
        }
    }
    LabeledDataset::new(rows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn knn_matches_exhaustive_scan(seed in any::<u64>(), n in 5usize..60, classes in 2usize..=11) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = common::random_dataset(&mut rng, n, classes);
        let queries = common::random_dataset(&mut rng, 10, classes);
        for k in [1, 3, 5] {
            let m = KnnModel::fit(&train, k).unwrap();
            for q in &queries.rows {
                prop_assert_eq!(m.predict_values(&q.x), common::oracle_knn(&train, k, &q.x));
            }
        }
    }

    #[test]
    fn knn_is_invariant_to_feature_scaling(seed in any::<u64>(), c in 0.001f64..1000.0, f in 0usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = common::random_dataset(&mut rng, 40, 4);
        let queries = common::random_dataset(&mut rng, 10, 4);
        let scale = |d: &LabeledDataset| {
            let mut d = d.clone();
            for r in &mut d.rows {
                r.x[f] *= c;
            }
            d
        };
        let (m0, m1) = (KnnModel::fit(&train, 1).unwrap(), KnnModel::fit(&scale(&train), 1).unwrap());
        for (q0, q1) in queries.rows.iter().zip(&scale(&queries).rows) {
            prop_assert_eq!(m0.predict_values(&q0.x), m1.predict_values(&q1.x));
        }
    }

    #[test]
    fn full_feature_tree_fits_consistent_data(seed in any::<u64>(), n in 2usize..120, classes in 1usize..=11) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let train = common::random_dataset(&mut rng, n, classes);
        let tree = tree_train(&train, 5, &mut rng).unwrap();
        for r in &train.rows {
            prop_assert_eq!(tree.predict(&r.x), r.label);
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint(seed in any::<u64>(), per_class in 3usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        for c in DisturbanceClass::ALL {
            for _ in 0..per_class {
                rows.push(LabeledRow { id: rows.len() as u64, x: [rng.random(); 5], label: c });
            }
        }
        let data = LabeledDataset::new(rows);
        let train_n = per_class - 2;
        let (train, test) = split_dataset(&data, train_n, 2, seed).unwrap();
        for c in DisturbanceClass::ALL {
            prop_assert_eq!(train.rows.iter().filter(|r| r.label == c).count(), train_n);
            prop_assert_eq!(test.rows.iter().filter(|r| r.label == c).count(), 2);
        }
        let mut ids: Vec<u64> = train.rows.iter().chain(&test.rows).map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        prop_assert_eq!(ids.len(), data.len());
        prop_assert_eq!(split_dataset(&data, train_n, 2, seed).unwrap(), (train, test));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// Swapping the two labels negates the decision function.
    #[test]
    fn svm_label_swap_symmetry(seed in any::<u64>()) {
        let d = blobs(seed, 15, 3.0);
        let rows: Vec<&LabeledRow> = d.rows.iter().filter(|r| r.label != DisturbanceClass::Notch).collect();
        let x: Vec<_> = rows.iter().map(|r| r.x).collect();
        let y: Vec<_> = rows.iter().map(|r| r.label).collect();
        let p = SvmParams { tolerance: 1e-6, ..Default::default() };
        let a = BinaryMachine::train(&x, &y, DisturbanceClass::Swell, DisturbanceClass::Sag, &p).unwrap();
        let b = BinaryMachine::train(&x, &y, DisturbanceClass::Sag, DisturbanceClass::Swell, &p).unwrap();
        for q in &x {
            let (fa, fb) = (a.decision(q, p.gamma), b.decision(q, p.gamma));
            prop_assert!((fa + fb).abs() < 1e-3 * (1.0 + fa.abs()), "{fa} vs {fb}");
        }
    }
}

#[test]
fn svm_separates_toy_set_and_stays_feasible() {
    let d = blobs(7, 30, 0.5);
    let p = SvmParams::default();
    let m = svm_train(&d, &p).unwrap();
    assert_eq!(m.machines.len(), 3);
    for r in &d.rows {
        assert_eq!(m.predict_values(&r.x), r.label);
    }
    for mach in &m.machines {
        assert!(mach.dual_coef.iter().all(|c| c.abs() > 0.0 && c.abs() <= p.c));
        assert!(mach.equality_residual() <= 1e-3);
    }
}

#[test]
fn unbagged_single_tree_forest_is_plain_cart() {
    let d = blobs(3, 40, 3.0);
    for max_features in [2, 5] {
        let p = ForestParams { n_trees: 1, max_features, seed: 11, bootstrap: false };
        let forest = rf_train(&d, &p).unwrap();
        let mut rng = rng::stream(Domain::Tree, &[11, 0]);
        let cart = tree_train(&d, max_features, &mut rng).unwrap();
        assert_eq!(forest.trees[0], cart);
        assert!(forest.oob_indices[0].is_empty());
    }
}

#[test]
fn forest_training_is_deterministic_across_thread_counts() {
    let d = blobs(5, 30, 3.0);
    let p = ForestParams { n_trees: 16, ..Default::default() };
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| rf_train(&d, &p).unwrap());
    let b = four.install(|| rf_train(&d, &p).unwrap());
    assert_eq!(a, b);
}
