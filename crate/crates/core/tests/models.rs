use fanlink_core::evaluation::{
    candidate_thresholds, prf, select_threshold, stratified_kfold, Confusion,
};
use fanlink_core::features::{FeatureVector, NUM_FEATURES};
use fanlink_core::learners::forest::{bootstrap_plan, rows_with_oob_tree, train_random_forest};
use fanlink_core::learners::logistic::{gradient, objective};
use fanlink_core::learners::svm::train_linear_svm_traced;
use fanlink_core::learners::{
    CostMatrix, Dataset, ForestParams, LearnerSpec, ModelKind, SvmParams,
};
use fanlink_core::score::{decide, score, ScoreConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_vec() -> impl Strategy<Value = [f64; NUM_FEATURES]> {
    prop::array::uniform12(0.0f64..=1.0)
}

fn random_data(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect()).collect();
    let mut labels: Vec<bool> = rows.iter().map(|r| r[0] + 0.5 * r[1] + rng.gen_range(-0.5..0.5) > 0.0).collect();
    labels[0] = true;
    labels[1] = false;
    Dataset::new(rows, labels).unwrap()
}

proptest! {
    #[test]
    fn score_in_range_and_monotone(v in unit_vec(), i in 0..NUM_FEATURES, bump in 0.0f64..=1.0) {
        let cfg = ScoreConfig::default();
        let s = score(&FeatureVector::from_array(v), &cfg);
        prop_assert!((0.0..=10.0).contains(&s));
        let mut w = v;
        w[i] = (w[i] + bump).min(1.0);
        prop_assert!(score(&FeatureVector::from_array(w), &cfg) >= s);
    }

    #[test]
    fn decision_ignores_order_within_groups(v in unit_vec(), seed in any::<u64>()) {
        let cfg = ScoreConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut w = v;
        for g in cfg.groups() {
            let mut vals: Vec<f64> = g.iter().map(|&i| v[i]).collect();
            rand::seq::SliceRandom::shuffle(vals.as_mut_slice(), &mut rng);
            for (&i, x) in g.iter().zip(vals) {
                w[i] = x;
            }
        }
        let a = decide(score(&FeatureVector::from_array(v), &cfg), &cfg);
        let b = decide(score(&FeatureVector::from_array(w), &cfg), &cfg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn kfold_balanced(labels in prop::collection::vec(any::<bool>(), 0..80), k in 2usize..8, seed in any::<u64>()) {
        let pos = labels.iter().filter(|&&l| l).count();
        let neg = labels.len() - pos;
        prop_assume!(pos * 2 >= k && neg * 2 >= k);
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in 0..k {
            for r in plan.test_rows(f) {
                seen[r] += 1;
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for class in [true, false] {
            let counts: Vec<usize> = (0..k)
                .map(|f| plan.test_rows(f).iter().filter(|&&r| labels[r] == class).count())
                .collect();
            prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
        }
    }

    #[test]
    fn threshold_matches_brute_force(
        rows in prop::collection::vec((0u8..=20, any::<bool>()), 1..50),
        c_fp in 0.1f64..3.0,
        c_fn in 0.1f64..3.0,
    ) {
        let conf: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 20.0).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let cm = CostMatrix::new(c_fp, c_fn).unwrap();
        let choice = select_threshold(&conf, &labels, &cm).unwrap();
        let brute = candidate_thresholds(&conf)
            .into_iter()
            .map(|t| {
                let mut c = Confusion::default();
                for (x, &y) in conf.iter().zip(&labels) {
                    c.add(*x >= t, y);
                }
                c.cost(&cm)
            })
            .fold(f64::INFINITY, f64::min);
        prop_assert!((choice.cost - brute).abs() < 1e-9);
    }

    #[test]
    fn higher_fp_cost_never_adds_positives(
        rows in prop::collection::vec((0u8..=20, any::<bool>()), 1..50),
        c_fp in 0.1f64..3.0,
        extra in 0.0f64..3.0,
    ) {
        let conf: Vec<f64> = rows.iter().map(|r| r.0 as f64 / 20.0).collect();
        let labels: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let positives = |cm: CostMatrix| {
            let t = select_threshold(&conf, &labels, &cm).unwrap().threshold;
            conf.iter().filter(|&&c| c >= t).count()
        };
        let low = positives(CostMatrix::new(c_fp, 1.0).unwrap());
        let high = positives(CostMatrix::new(c_fp + extra, 1.0).unwrap());
        prop_assert!(high <= low);
    }

    #[test]
    fn f1_zero_without_true_positives(fp in 0usize..10, fn_ in 0usize..10) {
        prop_assume!(fp + fn_ > 0);
        prop_assert_eq!(prf(0, fp, fn_).2, 0.0);
    }
}

#[test]
fn logistic_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let h = 1e-5;
    for _ in 0..20 {
        let data = random_data(&mut rng, 30, NUM_FEATURES);
        let c: Vec<f64> = data.labels().iter().map(|&l| if l { 1.0 } else { 1.2 }).collect();
        let w: Vec<f64> = (0..NUM_FEATURES).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = rng.gen_range(-1.0..1.0);
        let f = |w: &[f64], b: f64| objective(data.rows(), data.labels(), &c, w, b, 0.01);
        let (gw, gb) = gradient(data.rows(), data.labels(), &c, &w, b, 0.01);
        for j in 0..=NUM_FEATURES {
            let (mut wp, mut wm, mut bp, mut bm) = (w.clone(), w.clone(), b, b);
            if j < NUM_FEATURES {
                wp[j] += h;
                wm[j] -= h;
            } else {
                bp += h;
                bm -= h;
            }
            let numeric = (f(&wp, bp) - f(&wm, bm)) / (2.0 * h);
            let analytic = if j < NUM_FEATURES { gw[j] } else { gb };
            let rel = (numeric - analytic).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-6, "coordinate {j}: {analytic} vs {numeric}");
        }
    }
}

#[test]
fn svm_running_minimum_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = random_data(&mut rng, 40, 4);
    let (_, trace) =
        train_linear_svm_traced(&data, &CostMatrix::default(), &SvmParams { epochs: 30, ..Default::default() })
            .unwrap();
    let mut best = f64::INFINITY;
    for v in trace {
        let next = best.min(v);
        assert!(next <= best);
        best = next;
    }
}

#[test]
fn trainers_are_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = random_data(&mut rng, 40, NUM_FEATURES);
    for kind in [ModelKind::Logistic, ModelKind::LinearSvm, ModelKind::RandomForest] {
        let spec = LearnerSpec::default_for(kind).with_seed(3);
        let a = spec.train(&data, &CostMatrix::default()).unwrap();
        let b = spec.train(&data, &CostMatrix::default()).unwrap();
        assert_eq!(a.to_json(), b.to_json(), "{}", kind.name());
    }
}

#[test]
fn forest_has_out_of_bag_rows() {
    let plan = bootstrap_plan(20, 10, 42);
    assert_eq!(rows_with_oob_tree(20, &plan).len(), 20);
}

#[test]
fn forest_ignores_row_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let data = random_data(&mut rng, 30, 5);
    let mut order: Vec<usize> = (0..data.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
    let shuffled = data.subset(&order);
    let hp = ForestParams { n_trees: 15, seed: 4, ..Default::default() };
    let a = train_random_forest(&data, &hp).unwrap();
    let b = train_random_forest(&shuffled, &hp).unwrap();
    for row in data.rows() {
        assert_eq!(a.predict_proba(row).unwrap(), b.predict_proba(row).unwrap());
    }
}

#[test]
fn model_round_trips_through_json() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = random_data(&mut rng, 30, NUM_FEATURES);
    for kind in [ModelKind::Logistic, ModelKind::LinearSvm, ModelKind::RandomForest] {
        let m = LearnerSpec::default_for(kind).train(&data, &CostMatrix::default()).unwrap();
        let back = fanlink_core::Model::from_json(&m.to_json()).unwrap();
        for row in data.rows() {
            assert_eq!(m.predict_proba(row).unwrap(), back.predict_proba(row).unwrap());
        }
    }
}
