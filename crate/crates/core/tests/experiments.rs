use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gradrev::adversarial::{AdversarialConfig, BundleShape, NetworkBundle};
use gradrev::datasets::{gen_two_domain_toy, Domain, Role, Sample, SampleInput, SplitBundle, ToyShiftConfig};
use gradrev::experiments::{evaluate, mean_std, run_experiment, run_matrix, ExperimentMode, NetConfig};
use gradrev::nn::{Activation, DenseMatrix, Layer, LayerSpec, ParameterSet};
use gradrev::Error;

fn identity_layer(n: usize, activation: Activation) -> Layer {
    Layer {
        spec: LayerSpec::new(n, n, activation).unwrap(),
        weights: DenseMatrix::identity(n),
        biases: vec![0.0; n],
    }
}

/// F and C are identities, so one-hot inputs come out as their own logits.
fn oracle_net(classes: usize, permute: bool) -> NetworkBundle {
    let f = ParameterSet::from_layers(vec![identity_layer(classes, Activation::Relu)]).unwrap();
    let mut c_layer = identity_layer(classes, Activation::Linear);
    if permute {
        // class i's logit lands on i + 1
        let mut w = DenseMatrix::zeros(classes, classes);
        for i in 0..classes {
            w.set(i, (i + 1) % classes, 1.0);
        }
        c_layer.weights = w;
    }
    let c = ParameterSet::from_layers(vec![c_layer]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let d = ParameterSet::init(&LayerSpec::stack(&[classes, 2]).unwrap(), &mut rng).unwrap();
    NetworkBundle::new(f, c, d).unwrap()
}

fn one_hot_samples(classes: usize, per_class: usize) -> Vec<Sample> {
    (0..classes * per_class)
        .map(|i| {
            let c = i % classes;
            let mut x = vec![0.0; classes];
            x[c] = 1.0;
            Sample::real(format!("x{i}"), SampleInput::Features(x), Some(c), Domain::Target)
        })
        .collect()
}

#[test]
fn evaluate_perfect_and_adversarial_classifiers() {
    let test = one_hot_samples(5, 4);
    assert_eq!(evaluate(&oracle_net(5, false), &test).unwrap(), 1.0);
    assert_eq!(evaluate(&oracle_net(5, true), &test).unwrap(), 0.0);
}

#[test]
fn evaluate_random_classifier_is_near_chance() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let shape = BundleShape {
        input_dim: 6,
        feature_hidden: vec![],
        feature_dim: 8,
        classifier_hidden: vec![],
        num_classes: 10,
        discriminator_hidden: vec![],
    };
    let net = NetworkBundle::init(&shape, &mut rng).unwrap();
    let test: Vec<Sample> = (0..10_000)
        .map(|i| {
            let x = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            Sample::real(
                format!("r{i}"),
                SampleInput::Features(x),
                Some(rng.random_range(0..10)),
                Domain::Target,
            )
        })
        .collect();
    let acc = evaluate(&net, &test).unwrap();
    assert!((acc - 0.1).abs() <= 0.02, "{acc}");
}

/// Four well separated quadrant clusters, identical in both domains.
fn separable_bundle() -> SplitBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let centers = [[2.0, 2.0], [-2.0, 2.0], [-2.0, -2.0], [2.0, -2.0]];
    let mut draw = |id: String, c: usize, domain: Domain, keep_label: bool| {
        let x = vec![
            centers[c][0] + rng.random_range(-0.8..0.8),
            centers[c][1] + rng.random_range(-0.8..0.8),
        ];
        Sample::real(id, SampleInput::Features(x), keep_label.then_some(c), domain)
    };
    let mut b = SplitBundle::default();
    for c in 0..4 {
        b.source.push(draw(format!("s{c}"), c, Domain::Source, true));
        for i in 0..3 {
            b.target_labeled
                .push(draw(format!("l{c}-{i}"), c, Domain::Target, true));
        }
        for i in 0..40 {
            b.target.push(draw(format!("t{c}-{i}"), c, Domain::Target, false));
            b.withheld_labels.push(Some(c));
            b.test.push(draw(format!("e{c}-{i}"), c, Domain::Target, true));
        }
    }
    b.validate().unwrap();
    b
}

#[test]
fn train_on_target_separable() {
    let b = separable_bundle();
    let r = run_experiment(
        ExperimentMode::TrainOnTarget,
        &b,
        &NetConfig::default(),
        &AdversarialConfig::default(),
        1,
    )
    .unwrap();
    assert!(r.target_test_accuracy >= 0.95, "{}", r.target_test_accuracy);
    assert_eq!(r.loss_history.len(), AdversarialConfig::default().total_steps());
    assert!(r.loss_history.iter().all(|b| b.domain_loss == 0.0));
}

#[test]
fn zero_shift_adaptation_changes_little() {
    let bundle = gen_two_domain_toy(&ToyShiftConfig::zero_shift()).unwrap();
    let seeds = [1, 2, 3, 4, 5];
    let modes = [ExperimentMode::SourceOnly, ExperimentMode::Dan];
    let m = run_matrix(
        &bundle,
        &modes,
        &NetConfig::default(),
        &AdversarialConfig::default(),
        &seeds,
        4,
    )
    .unwrap();
    let so = m.summary_for(ExperimentMode::SourceOnly).unwrap().mean_accuracy;
    let dan = m.summary_for(ExperimentMode::Dan).unwrap().mean_accuracy;
    assert!((so - dan).abs() <= 0.05, "source-only {so} vs dan {dan}");
}

fn quick() -> AdversarialConfig {
    AdversarialConfig {
        epochs: 2,
        steps_per_epoch: 5,
        ..AdversarialConfig::default()
    }
}

fn small_toy() -> SplitBundle {
    gen_two_domain_toy(&ToyShiftConfig {
        samples_per_class_target: 30,
        num_classes: 5,
        ..ToyShiftConfig::default()
    })
    .unwrap()
}

#[test]
fn matrix_contract_and_summary_arithmetic() {
    let bundle = small_toy();
    let seeds = [1, 2, 3, 4, 5];
    let m = run_matrix(
        &bundle,
        &ExperimentMode::ALL,
        &NetConfig::default(),
        &quick(),
        &seeds,
        3,
    )
    .unwrap();
    assert_eq!(m.cells.len(), 35);
    assert_eq!(m.reports().count(), 35);
    let order: Vec<ExperimentMode> = m.summary.iter().map(|r| r.mode).collect();
    assert_eq!(order, ExperimentMode::ALL);
    for row in &m.summary {
        let accs: Vec<f64> = m
            .reports()
            .filter(|r| r.mode == row.mode)
            .map(|r| r.target_test_accuracy)
            .collect();
        let mean = accs.iter().sum::<f64>() / accs.len() as f64;
        assert!((row.mean_accuracy - mean).abs() < 1e-15);
        assert_eq!(row.std_accuracy, mean_std(&accs).1);
    }
    for r in m.reports() {
        assert!((0.0..=1.0).contains(&r.target_test_accuracy));
        assert!((0.0..=1.0).contains(&r.domain_confusion));
        assert_eq!(r.loss_history.len(), quick().total_steps());
    }
}

#[test]
fn matrix_independent_of_thread_count() {
    let bundle = small_toy();
    let modes = [ExperimentMode::SsppDan, ExperimentMode::SourceOnly];
    let one = run_matrix(&bundle, &modes, &NetConfig::default(), &quick(), &[3, 4], 1).unwrap();
    let many = run_matrix(&bundle, &modes, &NetConfig::default(), &quick(), &[3, 4], 4).unwrap();
    assert_eq!(one, many);
}

#[test]
fn matrix_records_failures_and_continues() {
    let mut bundle = small_toy();
    bundle.virtual_source.clear();
    let m = run_matrix(&bundle, &ExperimentMode::ALL, &NetConfig::default(), &quick(), &[1], 2).unwrap();
    let failed: Vec<ExperimentMode> = m.cells.iter().filter(|c| c.outcome.is_err()).map(|c| c.mode).collect();
    assert_eq!(
        failed,
        [
            ExperimentMode::SourceOnlyPlusVirtual,
            ExperimentMode::SsppDan,
            ExperimentMode::SemiSsppDan
        ]
    );
    assert_eq!(m.reports().count(), 4);
}

#[test]
fn reports_are_reproducible() {
    let bundle = small_toy();
    for mode in ExperimentMode::ALL {
        let a = run_experiment(mode, &bundle, &NetConfig::default(), &quick(), 11).unwrap();
        let b = run_experiment(mode, &bundle, &NetConfig::default(), &quick(), 11).unwrap();
        assert_eq!(a, b, "{mode}");
    }
}

#[test]
fn modes_touch_only_their_sets() {
    // Emptying every set a mode does not name must not change its run.
    // S stays because the domain-confusion diagnostic reads it.
    let full = small_toy();
    for mode in ExperimentMode::ALL {
        let mut trimmed = full.clone();
        for role in [Role::Virtual, Role::Target, Role::TargetLabeled] {
            if !mode.required_sets().contains(&role) {
                match role {
                    Role::Virtual => trimmed.virtual_source.clear(),
                    Role::Target => {
                        trimmed.target.clear();
                        trimmed.withheld_labels.clear();
                    }
                    Role::TargetLabeled => trimmed.target_labeled.clear(),
                    _ => unreachable!(),
                }
            }
        }
        let a = run_experiment(mode, &full, &NetConfig::default(), &quick(), 2).unwrap();
        let b = run_experiment(mode, &trimmed, &NetConfig::default(), &quick(), 2).unwrap();
        assert_eq!(a, b, "{mode}");

        for &role in mode.required_sets() {
            let mut missing = full.clone();
            match role {
                Role::Source => missing.source.clear(),
                Role::Virtual => missing.virtual_source.clear(),
                Role::Target => {
                    missing.target.clear();
                    missing.withheld_labels.clear();
                }
                Role::TargetLabeled => missing.target_labeled.clear(),
                Role::Test => unreachable!(),
            }
            let err = run_experiment(mode, &missing, &NetConfig::default(), &quick(), 2).unwrap_err();
            assert!(matches!(err, Error::Configuration(_)), "{mode}: {err}");
            assert!(err.to_string().contains(&format!("split {} ", role.as_str())), "{err}");
        }
    }
}

#[test]
fn paper_reference_attached() {
    let r = run_experiment(
        ExperimentMode::SsppDan,
        &small_toy(),
        &NetConfig::default(),
        &quick(),
        1,
    )
    .unwrap();
    assert_eq!(r.paper_reference_accuracy.unwrap().percent, 58.53);
}
