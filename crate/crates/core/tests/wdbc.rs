//! Checks against the bundled WDBC file.

mod common;

use common::wdbc;
use xmlkit::dataset::{fit_minmax, stratified_kfold, stratified_split, SplitSpec};
use xmlkit::ensemble::{fit_forest, train_gbt, ForestConfig, GbtConfig};
use xmlkit::knn::sweep_k;
use xmlkit::linear::{train_logistic, LinearTrainConfig};
use xmlkit::mlp::{init_network, optimizer_step, Activation, AdamState, Optimizer};
use xmlkit::pipeline::{cross_validate, run_experiment, ExperimentConfig, ModelSpec};
use xmlkit::{Dataset, Predictor, RngSeed};

fn scaled_split(d: &Dataset, spec: &SplitSpec) -> Vec<Dataset> {
    let parts = stratified_split(d, spec).unwrap();
    let s = fit_minmax(&parts[0].x);
    parts.iter().map(|p| s.apply_dataset(p).unwrap()).collect()
}

fn test_accuracy(model: &str, split: &str, seed: u64) -> f64 {
    let cfg = ExperimentConfig::new(ModelSpec::named(model).unwrap(), split, RngSeed(seed));
    run_experiment(&cfg, &wdbc()).unwrap().metrics.test.metrics.accuracy
}

#[test]
fn class_counts() {
    let d = wdbc();
    assert_eq!((d.len(), d.n_features()), (569, 30));
    assert_eq!(d.y.class_counts(), (357, 212));
}

#[test]
fn area_mean_range_matches_text_scan() {
    let text = std::fs::read_to_string(common::wdbc_path()).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "area_mean").unwrap();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for line in lines.filter(|l| !l.is_empty()) {
        let v: f64 = line.split(',').nth(col).unwrap().parse().unwrap();
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let d = wdbc();
    let j = d.x.feature_names().iter().position(|n| n == "area_mean").unwrap();
    let s = fit_minmax(&d.x);
    assert_eq!((s.min[j], s.max[j]), (lo, hi));
}

#[test]
fn seventy_thirty_counts() {
    let d = wdbc();
    for seed in 0..20 {
        let parts = stratified_split(&d, &SplitSpec::two_way(0.7, 0.3, RngSeed(seed))).unwrap();
        let (b, m) = parts[0].y.class_counts();
        assert!((249..=250).contains(&b), "{b}");
        assert!((148..=149).contains(&m), "{m}");
    }
}

#[test]
fn five_fold_sizes() {
    let d = wdbc();
    let f = stratified_kfold(&d, 5, RngSeed(3)).unwrap();
    for fold in 0..5 {
        let (_, held) = f.split(fold);
        assert!((113..=114).contains(&held.len()));
        let m = held.iter().filter(|&&i| d.y[i] == 1).count();
        assert!((42..=43).contains(&m));
    }
}

#[test]
fn full_batch_logistic_loss_never_rises() {
    let train = &scaled_split(&wdbc(), &SplitSpec::two_way(0.8, 0.2, RngSeed(0)))[0];
    for lr in [0.001, 0.01, 0.1] {
        let cfg = LinearTrainConfig { learning_rate: lr, epochs: 200, ..Default::default() };
        let h = train_logistic(train, &cfg).unwrap().loss_history;
        assert_eq!(h.len(), 200);
        for w in h.windows(2) {
            assert!(w[1] <= w[0], "lr {lr}: {} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn gbt_loss_never_rises() {
    let train = &stratified_split(&wdbc(), &SplitSpec::two_way(0.7, 0.3, RngSeed(0))).unwrap()[0];
    for lr in [0.1, 0.3] {
        let h = train_gbt(train, &GbtConfig { learning_rate: lr, ..Default::default() }).unwrap().loss_history;
        for w in h.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}

#[test]
fn mlp_full_batch_gd_decreases_loss() {
    let train = &scaled_split(&wdbc(), &SplitSpec::two_way(0.7, 0.3, RngSeed(0)))[0];
    let mut net = init_network(&[30, 30, 30, 1], Activation::Relu, RngSeed(5)).unwrap();
    let rows: Vec<usize> = (0..train.len()).collect();
    let mut state = AdamState::new(net.params().len());
    let mut prev = net.loss(train, &rows);
    for _ in 0..10 {
        let (_, g) = net.loss_and_gradient(train, &rows);
        optimizer_step(net.params_mut(), &g, &mut state, 1e-3, Optimizer::Gd).unwrap();
        let loss = net.loss(train, &rows);
        assert!(loss < prev);
        prev = loss;
    }
}

#[test]
fn forest_out_of_bag_beats_first_tree() {
    let train = &stratified_split(&wdbc(), &SplitSpec::two_way(0.7, 0.3, RngSeed(0))).unwrap()[0];
    let n = train.len();
    let mut wins = 0;
    for seed in 0..10 {
        let f =
            fit_forest(train, &ForestConfig { n_estimators: 100, seed: RngSeed(seed), ..Default::default() }).unwrap();
        let in_bag: Vec<Vec<bool>> = (0..100)
            .map(|t| {
                let mut b = vec![false; n];
                f.bootstrap_of(t, n).into_iter().for_each(|i| b[i] = true);
                b
            })
            .collect();
        let (mut ok, mut seen, mut first_ok, mut first_seen) = (0, 0, 0, 0);
        for i in 0..n {
            let x = train.x.row(i);
            let oob: Vec<usize> = (0..100).filter(|&t| !in_bag[t][i]).collect();
            if !oob.is_empty() {
                let votes = oob.iter().filter(|&&t| f.trees[t].value(x) >= 0.5).count();
                seen += 1;
                ok += usize::from(u8::from(2 * votes >= oob.len()) == train.y[i]);
            }
            if !in_bag[0][i] {
                first_seen += 1;
                first_ok += usize::from(f.trees[0].predict(x).unwrap() == train.y[i]);
            }
        }
        if ok as f64 / seen as f64 >= first_ok as f64 / first_seen as f64 {
            wins += 1;
        }
    }
    assert!(wins >= 9, "{wins}/10");
}

#[test]
fn single_seed_reference_bands() {
    assert!((0.93..=1.0).contains(&test_accuracy("logistic", "8:2", 1)));
    assert!((0.88..=0.98).contains(&test_accuracy("tree", "7:3", 1)));
    assert!((0.92..=1.0).contains(&test_accuracy("forest", "7:3", 1)));
    assert!((0.92..=1.0).contains(&test_accuracy("gbt", "7:3", 1)));
}

#[test]
fn ann_reference_band() {
    let r = run_experiment(&ExperimentConfig::preset("paper-ann", RngSeed(1)).unwrap(), &wdbc()).unwrap();
    assert!((0.94..=1.0).contains(&r.metrics.test.metrics.accuracy));
    assert_eq!(r.partition_sizes, vec![399, 114, 56]);
    assert!(r.training.best_epoch.is_some());
}

#[test]
fn knn_sweep_prefers_small_k() {
    let train = &stratified_split(&wdbc(), &SplitSpec::two_way(0.7, 0.3, RngSeed(0))).unwrap()[0];
    let s = sweep_k(train, 20, 5, RngSeed(2)).unwrap();
    assert_eq!(s.accuracy.len(), 20);
    assert!(s.best_k <= 10);
}

#[test]
fn logistic_cross_validation_band() {
    let train = &stratified_split(&wdbc(), &SplitSpec::two_way(0.7, 0.3, RngSeed(0))).unwrap()[0];
    let cv = cross_validate(train, &ModelSpec::named("logistic").unwrap(), 5, RngSeed(4)).unwrap();
    assert_eq!(cv.fold_scores.len(), 5);
    assert!((0.94..=0.99).contains(&cv.mean), "{}", cv.mean);
}
