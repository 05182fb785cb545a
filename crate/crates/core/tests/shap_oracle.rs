mod support;

use cdo_xai::forest::{
    train_gradient_boosting, train_random_forest, BoostingParams, EnsembleKind, ForestParams, Node, Tree, TreeEnsemble,
};
use cdo_xai::matrix::Matrix;
use cdo_xai::shapley::{class_specific_shap, ensemble_shap, tree_shap, wasserstein_1d};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_row(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-1.2..1.2)).collect()
}

#[test]
fn tree_shap_matches_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let nf = rng.random_range(1..=5);
        let t = support::random_tree(&mut rng, nf, 3, 2);
        for _ in 0..10 {
            let row = random_row(&mut rng, nf);
            let fast = tree_shap(&t, &row).unwrap();
            let slow = support::brute_force_shap(&t, &row);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn local_accuracy_and_dummy_on_random_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let t = support::random_tree(&mut rng, 4, 4, 3);
        let row = random_row(&mut rng, 6);
        let phi = tree_shap(&t, &row).unwrap();
        let ev = t.expected_value();
        let out = t.predict(&row);
        for k in 0..3 {
            let s: f64 = (0..6).map(|f| phi[f * 3 + k]).sum();
            assert!((s + ev[k] - out[k]).abs() < 1e-9);
        }
        // features 4 and 5 never appear in the tree
        assert!(phi[12..].iter().all(|&v| v == 0.0));
    }
}

#[test]
fn duplicate_columns_get_equal_credit() {
    // x0 and x1 carry the same value and are split on symmetrically
    let leaf = |v: f64, c: f64| Node::Leaf {
        value: vec![v],
        cover: c,
    };
    let t = Tree {
        nodes: vec![
            Node::Split {
                feature: 0,
                threshold: 0.0,
                left: 1,
                right: 4,
                cover: 8.0,
            },
            Node::Split {
                feature: 1,
                threshold: 0.0,
                left: 2,
                right: 3,
                cover: 4.0,
            },
            leaf(0.0, 2.0),
            leaf(1.0, 2.0),
            Node::Split {
                feature: 1,
                threshold: 0.0,
                left: 5,
                right: 6,
                cover: 4.0,
            },
            leaf(1.0, 2.0),
            leaf(3.0, 2.0),
        ],
    };
    let t_swapped = Tree {
        nodes: t
            .nodes
            .iter()
            .map(|n| match n {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    cover,
                } => Node::Split {
                    feature: 1 - feature,
                    threshold: *threshold,
                    left: *left,
                    right: *right,
                    cover: *cover,
                },
                leaf => leaf.clone(),
            })
            .collect(),
    };
    for x in [-0.5, 0.5] {
        let phi = tree_shap(&t, &[x, x]).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
        let phi_s = tree_shap(&t_swapped, &[x, x]).unwrap();
        assert!((phi[0] - phi_s[0]).abs() < 1e-12);
    }
}

fn blobs(n: usize, seed: u64) -> (Matrix, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for i in 0..n {
        let c = i % 3;
        let mut r = random_row(&mut rng, 5);
        r[c] += 1.5;
        rows.push(r);
        y.push(c);
    }
    (Matrix::from_rows(&rows, 5), y)
}

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

#[test]
fn ensemble_local_accuracy_for_both_kinds() {
    let (x, y) = blobs(150, 2);
    let ids: Vec<String> = (0..x.n_rows()).map(|i| i.to_string()).collect();
    let rf = train_random_forest(
        &x,
        &y,
        3,
        &names(5),
        &ForestParams {
            n_trees: 30,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let gb = train_gradient_boosting(
        &x,
        &y,
        3,
        &names(5),
        &BoostingParams {
            n_rounds: 30,
            seed: 1,
            ..Default::default()
        },
    )
    .unwrap();
    for m in [&rf, &gb] {
        let shap = ensemble_shap(m, &x, ids.clone()).unwrap();
        for s in 0..x.n_rows() {
            let out = m.raw_output(x.row(s)).unwrap();
            for (k, o) in out.iter().enumerate() {
                assert!((shap.reconstruct(s, k) - o).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn ensemble_reduction_and_additivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let t = support::random_tree(&mut rng, 3, 3, 2);
    let model = |trees: Vec<Tree>, kind| TreeEnsemble {
        format_version: 1,
        kind,
        n_classes: 2,
        feature_names: names(3),
        base_value: vec![0.0, 0.0],
        trees,
        seed: 0,
    };
    let x = Matrix::from_rows(&[random_row(&mut rng, 3), random_row(&mut rng, 3)], 3);
    let ids = vec!["a".to_string(), "b".to_string()];
    let one = ensemble_shap(&model(vec![t.clone()], EnsembleKind::GradientBoosting), &x, ids.clone()).unwrap();
    let two = ensemble_shap(
        &model(vec![t.clone(), t.clone()], EnsembleKind::GradientBoosting),
        &x,
        ids.clone(),
    )
    .unwrap();
    let rf1 = ensemble_shap(&model(vec![t.clone()], EnsembleKind::RandomForest), &x, ids).unwrap();
    for s in 0..2 {
        let direct = tree_shap(&t, x.row(s)).unwrap();
        for f in 0..3 {
            for k in 0..2 {
                assert_eq!(one.value(s, f, k), direct[f * 2 + k]);
                assert_eq!(rf1.value(s, f, k), direct[f * 2 + k]);
                assert!((two.value(s, f, k) - 2.0 * direct[f * 2 + k]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn dependence_sign_flips_at_threshold() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let n = 300;
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..n {
        let r = random_row(&mut rng, 3);
        y.push(usize::from(r[0] > 0.1));
        rows.push(r);
    }
    let x = Matrix::from_rows(&rows, 3);
    let ids: Vec<String> = (0..n).map(|i| i.to_string()).collect();
    let gb = train_gradient_boosting(
        &x,
        &y,
        2,
        &names(3),
        &BoostingParams {
            n_rounds: 40,
            max_depth: 2,
            seed: 4,
            ..Default::default()
        },
    )
    .unwrap();
    let shap = ensemble_shap(&gb, &x, ids).unwrap();
    let pairs = class_specific_shap(&[shap], "f0", 1).unwrap();
    for (v, s) in pairs {
        if v > 0.2 {
            assert!(s > 0.0, "value {v} shap {s}");
        } else if v < 0.0 {
            assert!(s < 0.0, "value {v} shap {s}");
        }
    }
}

fn sample() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 1..60)
}

proptest! {
    #[test]
    fn wasserstein_matches_quantile_oracle(a in sample(), b in sample()) {
        let fast = wasserstein_1d(&a, &b).unwrap();
        let slow = support::wasserstein_quantile(&a, &b);
        prop_assert!((fast - slow).abs() < 1e-9 * (1.0 + slow));
    }

    #[test]
    fn wasserstein_metric_axioms(a in sample(), b in sample(), c in sample()) {
        let ab = wasserstein_1d(&a, &b).unwrap();
        let ba = wasserstein_1d(&b, &a).unwrap();
        let ac = wasserstein_1d(&a, &c).unwrap();
        let cb = wasserstein_1d(&c, &b).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-9);
        prop_assert!(ab <= ac + cb + 1e-9);
        prop_assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn equal_sizes_reduce_to_sorted_differences(pairs in prop::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 1..80)) {
        let (mut a, mut b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let w = wasserstein_1d(&a, &b).unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let direct = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64;
        prop_assert!((w - direct).abs() < 1e-9);
    }
}
