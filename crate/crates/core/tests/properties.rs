mod common;

use std::sync::atomic::{AtomicUsize, Ordering};

use common::{ds, names};
use proptest::prelude::*;
use xmlkit::data::FnPredictor;
use xmlkit::dataset::{fit_minmax, stratified_split_indices, SplitSpec};
use xmlkit::ensemble::{fit_forest, fit_gbt, ForestConfig, GbtConfig};
use xmlkit::knn::{KnnModel, DISTANCE_EPS};
use xmlkit::lime::{fit_surrogate, kernel_weight, LimeConfig, TrainStats};
use xmlkit::linear::{train_logistic, LinearTrainConfig, LogisticModel};
use xmlkit::metrics::{classification_report, confusion, roc_auc};
use xmlkit::mlp::{init_network, Activation};
use xmlkit::shap::{shapley_exact, shapley_permutation, BackgroundSet, Link};
use xmlkit::tree::{fit_tree, Criterion, Node, TreeConfig};
use xmlkit::{Dataset, FeatureMatrix, Predictor, RngSeed};

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3f64..1e3, cols), rows)
}

/// Rows with random binary labels; at least one of each class.
fn labelled(n: std::ops::Range<usize>, cols: usize) -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<u8>)> {
    n.prop_flat_map(move |n| (matrix(n, cols), prop::collection::vec(0u8..=1, n))).prop_map(|(rows, mut y)| {
        y[0] = 0;
        y[1] = 1;
        (rows, y)
    })
}

fn all_models(d: &Dataset) -> Vec<Box<dyn Predictor + Send>> {
    vec![
        Box::new(train_logistic(d, &LinearTrainConfig::default()).unwrap().model),
        Box::new(fit_tree(d, &TreeConfig::default()).unwrap()),
        Box::new(fit_forest(d, &ForestConfig { n_estimators: 5, ..Default::default() }).unwrap()),
        Box::new(fit_gbt(d, &GbtConfig { n_rounds: 10, ..Default::default() }).unwrap()),
        Box::new(KnnModel::fit(d, 3.min(d.len())).unwrap()),
        Box::new(init_network(&[d.n_features(), 5, 1], Activation::Relu, RngSeed(1)).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn minmax_round_trip(rows in matrix(12, 4)) {
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let s = fit_minmax(&x);
        let t = s.apply(&x).unwrap();
        for j in 0..4 {
            let (lo, hi) = t.column(j).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
            if s.max[j] > s.min[j] {
                prop_assert!(lo.abs() <= 1e-12 && (hi - 1.0).abs() <= 1e-12);
            } else {
                prop_assert!(lo == 0.0 && hi == 0.0);
            }
        }
    }

    #[test]
    fn test_transform_depends_only_on_train(train in matrix(8, 3), test in matrix(4, 3), bump in 1.0f64..10.0) {
        let tx = FeatureMatrix::from_rows(&test).unwrap();
        let before = fit_minmax(&FeatureMatrix::from_rows(&train).unwrap()).apply(&tx).unwrap();
        let mut moved = train.clone();
        moved[0] = moved[0].iter().map(|v| v + 2e3 * bump).collect();
        let after = fit_minmax(&FeatureMatrix::from_rows(&moved).unwrap()).apply(&tx).unwrap();
        prop_assert_ne!(before, after);
    }

    #[test]
    fn accuracy_invariant_under_label_swap(pairs in prop::collection::vec((0u8..=1, 0u8..=1), 1..100)) {
        let (t, p): (Vec<u8>, Vec<u8>) = pairs.into_iter().unzip();
        let flip = |v: &[u8]| v.iter().map(|x| 1 - x).collect::<Vec<_>>();
        let a = classification_report(&confusion(&t, &p).unwrap()).unwrap();
        let b = classification_report(&confusion(&flip(&t), &flip(&p)).unwrap()).unwrap();
        let cm = confusion(&t, &p).unwrap();
        prop_assert_eq!(a.accuracy, (cm.tp + cm.tn) as f64 / cm.total() as f64);
        prop_assert_eq!(a.accuracy, b.accuracy);
        prop_assert_eq!(cm.total(), t.len());
    }

    #[test]
    fn auc_in_unit_interval((s, y) in labelled(2..80, 1)) {
        let scores: Vec<f64> = s.iter().map(|r| r[0]).collect();
        let a = roc_auc(&y, &scores).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        let neg: Vec<f64> = scores.iter().map(|v| -v).collect();
        let tie_free = {
            let mut v = scores.clone();
            v.sort_by(f64::total_cmp);
            v.windows(2).all(|w| w[0] != w[1])
        };
        if tie_free {
            prop_assert!((a + roc_auc(&y, &neg).unwrap() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn logistic_fit_ignores_row_order((rows, y) in labelled(6..30, 3), seed in any::<u64>()) {
        let d = ds(&rows, &y);
        let mut perm: Vec<usize> = (0..rows.len()).collect();
        use rand::seq::SliceRandom;
        perm.shuffle(&mut RngSeed(seed).rng());
        let shuffled = d.subset(&perm).unwrap();
        let cfg = LinearTrainConfig { learning_rate: 0.01, epochs: 20, ..Default::default() };
        let a = train_logistic(&d, &cfg).unwrap().model;
        let b = train_logistic(&shuffled, &cfg).unwrap().model;
        prop_assert_eq!(a.bias.to_bits(), b.bias.to_bits());
        for (p, q) in a.weights.iter().zip(&b.weights) {
            prop_assert_eq!(p.to_bits(), q.to_bits());
        }
    }

    #[test]
    fn tree_memorizes_consistent_data((rows, y) in labelled(4..40, 3), entropy in any::<bool>()) {
        // Random real rows are distinct, so labels are consistent.
        let d = ds(&rows, &y);
        let crit = if entropy { Criterion::Entropy } else { Criterion::Gini };
        let t = fit_tree(&d, &TreeConfig { criterion: crit, ..Default::default() }).unwrap();
        for (r, &label) in rows.iter().zip(&y) {
            prop_assert_eq!(t.predict(r).unwrap(), label);
        }
        prop_assert!((t.importance.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        prop_assert!(t.importance.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn tree_respects_structure_limits(
        (rows, y) in labelled(10..60, 3), depth in 1usize..5, leaf in 1usize..6
    ) {
        let d = ds(&rows, &y);
        let t = fit_tree(&d, &TreeConfig { criterion: Criterion::Gini, max_depth: Some(depth), min_samples_leaf: leaf }).unwrap();
        prop_assert!(t.root.depth() <= depth);
        for l in t.root.leaves() {
            prop_assert!(l.samples() >= leaf);
        }
        fn thresholds_finite(n: &Node) -> bool {
            match n {
                Node::Leaf { .. } => true,
                Node::Split { threshold, left, right, .. } => {
                    threshold.is_finite() && thresholds_finite(left) && thresholds_finite(right)
                }
            }
        }
        prop_assert!(thresholds_finite(&t.root));
        let s: f64 = t.importance.iter().sum();
        if matches!(t.root, Node::Leaf { .. }) {
            prop_assert_eq!(s, 0.0);
        } else {
            prop_assert!((s - 1.0).abs() <= 1e-9);
        }
    }

    #[test]
    fn knn_full_k_is_global_share((rows, y) in labelled(3..25, 2), x in prop::collection::vec(-1e3f64..1e3, 2)) {
        let d = ds(&rows, &y);
        let m = KnnModel::fit(&d, rows.len()).unwrap();
        let (mut num, mut den) = (0.0, 0.0);
        for (r, &l) in rows.iter().zip(&y) {
            let dist = r.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let w = 1.0 / (dist + DISTANCE_EPS);
            num += w * f64::from(l);
            den += w;
        }
        prop_assert!((m.proba(&x) - num / den).abs() <= 1e-9);
    }

    #[test]
    fn knn_scale_invariant(
        (rows, y) in labelled(5..30, 3), x in prop::collection::vec(-1e3f64..1e3, 3), c in 0.01f64..100.0, k in 1usize..5
    ) {
        let d = ds(&rows, &y);
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let sx: Vec<f64> = x.iter().map(|v| v * c).collect();
        let a = KnnModel::fit(&d, k).unwrap();
        let b = KnnModel::fit(&ds(&scaled, &y), k).unwrap();
        prop_assert_eq!(a.predict(&x).unwrap(), b.predict(&sx).unwrap());
        let p = a.proba(&x);
        prop_assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn every_model_returns_finite_probabilities(
        (rows, y) in labelled(6..20, 3),
        probes in prop::collection::vec(prop::collection::vec(-1e6f64..1e6, 3), 20),
    ) {
        let d = ds(&rows, &y);
        for m in all_models(&d) {
            for p in &probes {
                let v = m.predict_proba(p).unwrap();
                prop_assert!(v.is_finite() && (0.0..=1.0).contains(&v));
                prop_assert_eq!(m.predict(p).unwrap(), u8::from(v >= 0.5));
                prop_assert_eq!(v.to_bits(), m.predict_proba(p).unwrap().to_bits());
            }
        }
    }

    #[test]
    fn mlp_output_independent_of_batch(seed in any::<u64>(), rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 4), 1..10)) {
        let net = init_network(&[4, 6, 3, 1], Activation::Tanh, RngSeed(seed)).unwrap();
        let x = FeatureMatrix::from_rows(&rows).unwrap();
        let batch = net.proba_rows(&x).unwrap();
        let reversed = net.proba_rows(&x.select_rows(&(0..rows.len()).rev().collect::<Vec<_>>()).unwrap()).unwrap();
        for (i, r) in rows.iter().enumerate() {
            let p = net.proba(r);
            prop_assert_eq!(batch[i].to_bits(), p.to_bits());
            prop_assert_eq!(reversed[rows.len() - 1 - i].to_bits(), p.to_bits());
            prop_assert!(p > 0.0 && p < 1.0);
            prop_assert!((p - 1.0 / (1.0 + (-net.logit(r)).exp())).abs() <= 1e-15);
        }
    }
}

fn random_net(d: usize, seed: u64) -> xmlkit::mlp::Network {
    init_network(&[d, 5, 1], Activation::Tanh, RngSeed(seed)).unwrap()
}

fn random_rows(n: usize, d: usize, seed: u64) -> FeatureMatrix {
    use rand::Rng as _;
    let mut rng = RngSeed(seed).rng();
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
    FeatureMatrix::from_rows(&rows).unwrap()
}

#[test]
fn stratification_over_100_seeds() {
    let y: Vec<u8> = (0..569).map(|i| u8::from(i % 8 < 3)).collect();
    let rows: Vec<Vec<f64>> = (0..569).map(|i| vec![i as f64]).collect();
    let d = ds(&rows, &y);
    let (n0, n1) = d.y.class_counts();
    for seed in 0..100 {
        for spec in [SplitSpec::two_way(0.7, 0.3, RngSeed(seed)), SplitSpec::three_way(0.7, 0.2, 0.1, RngSeed(seed))] {
            let idx = stratified_split_indices(&d, &spec).unwrap();
            let mut all = idx.partitions.concat();
            all.sort_unstable();
            assert_eq!(all, (0..569).collect::<Vec<_>>());
            for (part, f) in idx.partitions.iter().zip(spec.fractions()) {
                let ones = part.iter().filter(|&&i| y[i] == 1).count() as f64;
                let zeros = part.len() as f64 - ones;
                assert!((ones - f * n1 as f64).abs() <= 1.0);
                assert!((zeros - f * n0 as f64).abs() <= 1.0);
            }
        }
    }
}

#[test]
fn exact_additivity_on_many_instances() {
    let net = random_net(6, 3);
    let bg = BackgroundSet::new(random_rows(20, 6, 4));
    let xs = random_rows(100, 6, 5);
    for link in [Link::Probability, Link::Logit] {
        for x in xs.iter_rows() {
            let a = shapley_exact(&net, &bg, x, &names(6), link).unwrap();
            assert!(a.additivity_gap().abs() <= 1e-9);
        }
    }
}

#[test]
fn permutation_estimates_telescope() {
    let net = random_net(8, 6);
    let bg = BackgroundSet::new(random_rows(10, 8, 7));
    for (i, x) in random_rows(20, 8, 8).iter_rows().enumerate() {
        let a = shapley_permutation(&net, &bg, x, &names(8), 1 + i, RngSeed(i as u64), Link::Probability).unwrap();
        assert!(a.additivity_gap().abs() <= 1e-12);
    }
}

#[test]
fn dummy_and_symmetry_axioms() {
    let m = LogisticModel { weights: vec![1.5, 0.0, -0.7, 1.5], bias: 0.1 };
    let bg = BackgroundSet::new(random_rows(15, 4, 9));
    let x = [0.3, 0.9, 0.2, 0.3];
    let a = shapley_exact(&m, &bg, &x, &names(4), Link::Probability).unwrap();
    assert_eq!(a.phi[1], 0.0);
    // Features 0 and 3 are exchangeable only if the background treats them
    // alike, so use a background that is symmetric in them.
    let sym: Vec<Vec<f64>> =
        random_rows(8, 4, 10).iter_rows().flat_map(|r| [r.to_vec(), vec![r[3], r[1], r[2], r[0]]]).collect();
    let bg = BackgroundSet::new(FeatureMatrix::from_rows(&sym).unwrap());
    let a = shapley_exact(&m, &bg, &x, &names(4), Link::Logit).unwrap();
    assert!((a.phi[0] - a.phi[3]).abs() <= 1e-12);
    assert_eq!(a.phi[1], 0.0);
}

#[test]
fn monte_carlo_is_unbiased() {
    let net = random_net(5, 11);
    let bg = BackgroundSet::new(random_rows(10, 5, 12));
    let x = [0.9, 0.1, 0.5, 0.7, 0.3];
    let exact = shapley_exact(&net, &bg, &x, &names(5), Link::Probability).unwrap();
    let runs: Vec<_> = (0..50)
        .map(|s| shapley_permutation(&net, &bg, &x, &names(5), 40, RngSeed(1000 + s), Link::Probability).unwrap())
        .collect();
    for j in 0..5 {
        let mean = runs.iter().map(|r| r.phi[j]).sum::<f64>() / 50.0;
        let pooled =
            (runs.iter().map(|r| r.stderr.as_ref().unwrap()[j].powi(2)).sum::<f64>() / 50.0).sqrt() / 50f64.sqrt();
        assert!((mean - exact.phi[j]).abs() <= 3.0 * pooled + 1e-12, "feature {j}");
    }
}

#[test]
fn exact_mode_evaluates_each_coalition_once() {
    let calls = AtomicUsize::new(0);
    let m = FnPredictor::new(6, |x: &[f64]| {
        calls.fetch_add(1, Ordering::Relaxed);
        x.iter().sum::<f64>() / 6.0
    });
    let bg = BackgroundSet::new(random_rows(3, 6, 13));
    shapley_exact(&m, &bg, &[0.5; 6], &names(6), Link::Probability).unwrap();
    // One model call per background row per coalition, plus f(x) itself.
    assert!(calls.load(Ordering::Relaxed) <= (1 << 6) * 3 + 1);
}

#[test]
fn lime_recovers_affine_model_as_lambda_vanishes() {
    let beta = [0.02, -0.03, 0.01, 0.0, 0.04];
    let m = FnPredictor::new(5, |x: &[f64]| 0.5 + x.iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>());
    let cfg = LimeConfig { n_samples: 500, ridge_lambda: 0.0, seed: RngSeed(2), ..Default::default() };
    let stats = TrainStats { std: vec![0.3; 5] };
    let e = fit_surrogate(&m, &[0.4, 0.6, 0.2, 0.8, 0.5], &names(5), &stats, &cfg).unwrap();
    for j in 0..5 {
        assert!((e.weights[j] - beta[j]).abs() <= 1e-6);
    }
    assert!((e.intercept - 0.5).abs() <= 1e-6);
    assert!(e.fidelity > 0.999_999);
    assert_eq!(e, fit_surrogate(&m, &[0.4, 0.6, 0.2, 0.8, 0.5], &names(5), &stats, &cfg).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kernel_weight_grows_with_width(
        x in prop::collection::vec(-3.0f64..3.0, 4), z in prop::collection::vec(-3.0f64..3.0, 4), w in 0.05f64..10.0
    ) {
        prop_assert!(kernel_weight(&x, &z, 2.0 * w).unwrap() >= kernel_weight(&x, &z, w).unwrap());
    }

    #[test]
    fn lime_fidelity_at_most_one(seed in any::<u64>()) {
        let net = random_net(4, seed);
        let cfg = LimeConfig { n_samples: 200, top_k: 3, seed: RngSeed(seed), ..Default::default() };
        let e = fit_surrogate(&net, &[0.5; 4], &names(4), &TrainStats { std: vec![0.2; 4] }, &cfg).unwrap();
        prop_assert!(e.fidelity <= 1.0);
        prop_assert_eq!(e.top_k.len(), 3);
        for p in e.top_k.windows(2) {
            prop_assert!(p[0].weight.abs() >= p[1].weight.abs());
        }
    }
}
