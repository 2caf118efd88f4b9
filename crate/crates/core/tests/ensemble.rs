use imbf_core::data::make_synthetic;
use imbf_core::ensemble::{make_oof_meta_features, train_stacked_ensemble};
use imbf_core::evaluation::{crossval_audited, roc_auc, Estimator, SamplerChoice};
use imbf_core::learners::{ClassifierSpec, ForestParams, GbtParams, LogisticParams, TreeParams};
use imbf_core::rng::rng_for;
use imbf_core::{Dataset, EnsembleSpec, Scorer, SmoteKmeansConfig};
use rand::Rng;

fn light_spec() -> EnsembleSpec {
    EnsembleSpec {
        base_specs: vec![
            ClassifierSpec::DecisionTree(TreeParams { max_depth: 4, min_leaf: 2 }),
            ClassifierSpec::Logistic(LogisticParams { epochs: 5, ..LogisticParams::default() }),
        ],
        meta_spec: ClassifierSpec::Gbt(GbtParams { n_rounds: 30, ..GbtParams::default() }),
        oof_folds: 5,
        bootstrap: true,
    }
}

#[test]
fn twenty_seeded_stacking_runs_never_leak() {
    for seed in 0..20 {
        let ds = make_synthetic(120, 40, 3, 1.5, seed);
        let oof = make_oof_meta_features(&ds, &light_spec(), seed).unwrap();
        oof.check_no_leakage().unwrap();
        assert_eq!(oof.meta.len(), ds.n_rows() * 2);
        assert!(oof.meta.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn outer_folds_never_feed_test_rows_to_the_sampler() {
    let ds = make_synthetic(400, 20, 3, 2.0, 5);
    let sampler = SamplerChoice::SmoteKmeans(SmoteKmeansConfig::default());
    let est = Estimator::Ensemble(light_spec());
    for seed in 0..3 {
        let (_, audits) = crossval_audited(&ds, &sampler, &est, 5, seed).unwrap();
        for a in &audits {
            a.check_hygiene().unwrap();
        }
    }
}

#[test]
fn perfect_base_gives_perfect_ensemble() {
    let base = make_synthetic(150, 150, 2, 0.0, 1);
    let mut feats = Vec::new();
    for i in 0..base.n_rows() {
        feats.push(f64::from(base.label(i)) * 10.0 - 5.0);
        feats.extend_from_slice(base.row(i));
    }
    let names = vec!["signal".into(), "n1".into(), "n2".into()];
    let ds = Dataset::new(feats, 3, base.labels().to_vec(), names).unwrap();
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..ds.n_rows()).partition(|i| i % 3 != 0);
    let (train, test) = (ds.subset(&train_idx), ds.subset(&test_idx));
    let spec = EnsembleSpec {
        base_specs: vec![ClassifierSpec::DecisionTree(TreeParams::default())],
        ..light_spec()
    };
    let model = train_stacked_ensemble(&train, &spec, 3).unwrap();
    let (_, auc) = roc_auc(test.labels(), &model.predict_many(&test)).unwrap();
    assert_eq!(auc, 1.0);
}

#[test]
fn ensemble_keeps_up_with_its_best_member() {
    let train = make_synthetic(250, 250, 4, 1.5, 10);
    let test = make_synthetic(250, 250, 4, 1.5, 20);
    let spec = EnsembleSpec::default();
    let best_single = spec
        .base_specs
        .iter()
        .map(|b| {
            let m = b.fit(&train, 1).unwrap();
            roc_auc(test.labels(), &m.predict_many(&test)).unwrap().1
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let ens = train_stacked_ensemble(&train, &spec, 1).unwrap();
    let auc = roc_auc(test.labels(), &ens.predict_many(&test)).unwrap().1;
    assert!(auc >= best_single - 0.02, "ensemble {auc} vs best member {best_single}");
}

#[test]
fn same_seed_same_bytes() {
    let ds = make_synthetic(100, 50, 3, 1.0, 2);
    let spec = EnsembleSpec {
        base_specs: vec![
            ClassifierSpec::RandomForest(ForestParams { n_trees: 5, ..ForestParams::default() }),
            ClassifierSpec::Logistic(LogisticParams::default()),
        ],
        ..light_spec()
    };
    let a = train_stacked_ensemble(&ds, &spec, 77).unwrap();
    let b = train_stacked_ensemble(&ds, &spec, 77).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let c = train_stacked_ensemble(&ds, &spec, 78).unwrap();
    assert_ne!(a.to_json(), c.to_json());
}

#[test]
fn scores_in_unit_interval_for_random_inputs() {
    let ds = make_synthetic(80, 40, 3, 1.0, 4);
    let model = train_stacked_ensemble(&ds, &light_spec(), 4).unwrap();
    let mut rng = rng_for(4, "probe", 0);
    for _ in 0..1000 {
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-100.0..100.0)).collect();
        let s = model.predict_ensemble(&x).unwrap();
        assert!((0.0..=1.0).contains(&s));
    }
    assert!(model.predict_ensemble(&[0.0; 2]).is_err());
}
