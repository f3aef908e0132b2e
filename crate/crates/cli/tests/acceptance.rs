//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use gradrev::adversarial::{
    adversarial_grad_check, dan_train_step, grl_backward, grl_forward, supervised_step, AdversarialConfig, Batch,
    BundleShape, BundleVelocity, GrlFault, LambdaMode, NetworkBundle,
};
use gradrev::datasets::{gen_two_domain_toy, ToyShiftConfig};
use gradrev::experiments::{run_experiment, run_matrix, ExperimentMode, NetConfig};
use gradrev::nn::DenseMatrix;
use gradrev::pose::{
    border_anchors, determinant, fit_camera, orthonormality_error, project, rotate_model, synthesize_views, test_card,
    warp_piecewise_affine, AffineCamera, GrayImage, LandmarkModel3D, PoseSpec,
};

/// Outcome of one criterion: pass flag and a short measurement summary.
type Verdict = (bool, String);

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::from_vec(rows, cols, data).unwrap()
}

fn check_shape() -> BundleShape {
    BundleShape {
        input_dim: 8,
        feature_hidden: vec![16],
        feature_dim: 8,
        classifier_hidden: vec![],
        num_classes: 4,
        discriminator_hidden: vec![8],
    }
}

fn gradients() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let bundle = NetworkBundle::init(&check_shape(), &mut rng).unwrap();
    // a batch whose pre-activations all sit clear of the ReLU kink, where
    // central differences would not be a valid reference
    let inputs = loop {
        let x = random_matrix(&mut rng, 8, 8);
        if bundle.relu_margin(&x).unwrap() >= 1e-3 {
            break x;
        }
    };
    let labels: Vec<Option<usize>> = (0..8).map(|i| (i < 4).then(|| rng.random_range(0..4))).collect();
    let domains: Vec<usize> = (0..8).map(|i| usize::from(i >= 4)).collect();
    let mut worst: f64 = 0.0;
    for lambda in [0.0, 0.5, 1.0] {
        let r = adversarial_grad_check(&bundle, &inputs, &labels, &domains, lambda, GrlFault::None).unwrap();
        worst = worst.max(r.max());
    }
    (worst < 1e-4, format!("max relative error {worst:.2e}"))
}

fn grl_exactness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut x = random_matrix(&mut rng, 16, 9);
    // awkward values: subnormal, signed zero, huge
    x.set(0, 0, f64::MIN_POSITIVE / 8.0);
    x.set(0, 1, -0.0);
    x.set(0, 2, 1e300);
    let forward = grl_forward(&x);
    let fwd_ok = forward
        .as_slice()
        .iter()
        .zip(x.as_slice())
        .all(|(a, b)| a.to_bits() == b.to_bits());
    let mut bwd_ok = true;
    for lambda in [0.0, 0.25, 1.0, 2.0] {
        let g = grl_backward(&x, lambda);
        bwd_ok &= g
            .as_slice()
            .iter()
            .zip(x.as_slice())
            .all(|(a, b)| a.to_bits() == (-lambda * b).to_bits());
    }
    (fwd_ok && bwd_ok, format!("forward {fwd_ok}, backward {bwd_ok}"))
}

fn zero_lambda() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let start = NetworkBundle::init(&check_shape(), &mut rng).unwrap();
    let source = Batch::labeled(random_matrix(&mut rng, 6, 8), &[0, 1, 2, 3, 1, 0]).unwrap();
    let target = Batch::unlabeled(random_matrix(&mut rng, 6, 8));
    let config = AdversarialConfig {
        lambda_mode: LambdaMode::Fixed,
        lambda_value: 0.0,
        ..AdversarialConfig::default()
    };
    let (mut dan, mut plain) = (start.clone(), start);
    let mut v_dan = BundleVelocity::zeros_like(&dan);
    let mut v_plain = BundleVelocity::zeros_like(&plain);
    for step in 0..5 {
        dan_train_step(&mut dan, &mut v_dan, &source, &target, &config, step as f64 / 5.0).unwrap();
        supervised_step(&mut plain, &mut v_plain, &source, &config).unwrap();
    }
    let ok = dan.feature_extractor == plain.feature_extractor && dan.label_classifier == plain.label_classifier;
    (ok, format!("F and C bit-identical after 5 steps: {ok}"))
}

fn random_camera(rng: &mut ChaCha8Rng) -> AffineCamera {
    let mut m = [[0.0; 4]; 2];
    for row in &mut m {
        for v in row.iter_mut().take(3) {
            *v = rng.random_range(-1.5..1.5);
        }
        row[3] = rng.random_range(20.0..60.0);
    }
    AffineCamera::new(m).unwrap()
}

fn camera_fit() -> Verdict {
    let model = LandmarkModel3D::bundled();
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let (mut entry_err, mut clean_rms): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let truth = random_camera(&mut rng);
        let (cam, rms) = fit_camera(&project(&truth, &model), &model).unwrap();
        for r in 0..2 {
            for c in 0..4 {
                entry_err = entry_err.max((cam.matrix[r][c] - truth.matrix[r][c]).abs());
            }
        }
        clean_rms = clean_rms.max(rms);
    }
    let noise = Normal::new(0.0, 0.5).unwrap();
    let mut noisy: Vec<f64> = (0..100)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let truth = random_camera(&mut rng);
            let mut lm = project(&truth, &model);
            for p in &mut lm.points {
                p[0] += noise.sample(&mut rng);
                p[1] += noise.sample(&mut rng);
            }
            fit_camera(&lm, &model).unwrap().1
        })
        .collect();
    noisy.sort_by(f64::total_cmp);
    let median = (noisy[49] + noisy[50]) / 2.0;
    let ok = entry_err < 1e-8 && clean_rms < 1e-9 && (0.2..=1.5).contains(&median);
    (
        ok,
        format!("entry error {entry_err:.1e}, clean rms {clean_rms:.1e}, noisy median {median:.3} px"),
    )
}

fn rotations() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut ortho, mut det): (f64, f64) = (0.0, 0.0);
    for _ in 0..1000 {
        let pose = PoseSpec::new(
            rng.random_range(-90.0..=90.0),
            rng.random_range(-90.0..=90.0),
            rng.random_range(-90.0..=90.0),
        )
        .unwrap();
        let r = pose.rotation();
        ortho = ortho.max(orthonormality_error(&r));
        det = det.max((determinant(&r) - 1.0).abs());
    }
    let model = LandmarkModel3D::bundled();
    let camera = random_camera(&mut rng);
    let zero = rotate_model(&model, &PoseSpec::frontal()) == model
        && project(&camera, &rotate_model(&model, &PoseSpec::frontal())) == project(&camera, &model);
    (
        ortho < 1e-12 && det < 1e-12 && zero,
        format!("max |RtR-I| {ortho:.1e}, max |det-1| {det:.1e}, zero pose exact {zero}"),
    )
}

fn synthesis() -> Verdict {
    let model = LandmarkModel3D::bundled();
    let (card, lm) = test_card(64, 64, &model).unwrap();
    let mut noisy = lm;
    noisy.points[2][0] += 0.6;
    noisy.points[7][1] -= 0.5;
    let out = synthesize_views(&card, &noisy, &model, &[PoseSpec::frontal()], 5.0).unwrap();
    let zero = out.views[0].image.max_abs_diff(&card).unwrap();

    let (w, h) = (64, 48);
    let img = GrayImage::from_fn(w, h, |x, y| ((x * 7 + y * 3) % 97) as f64 / 96.0).unwrap();
    let mut pts: Vec<[f64; 2]> = (0..9)
        .map(|i| [20.0 + 6.0 * (i % 3) as f64, 14.0 + 8.0 * (i / 3) as f64])
        .collect();
    pts.extend(border_anchors(w, h));
    let identity = warp_piecewise_affine(&img, &pts, &pts)
        .unwrap()
        .image
        .max_abs_diff(&img)
        .unwrap();
    let mut shift: f64 = 0.0;
    for (dx, dy) in [(3.0, 0.0), (0.0, -2.0), (1.0, 4.0)] {
        let dst: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] + dx, p[1] + dy]).collect();
        let warped = warp_piecewise_affine(&img, &pts, &dst).unwrap().image;
        for y in 5..h - 5 {
            for x in 5..w - 5 {
                let expect = img.get((x as f64 - dx) as usize, (y as f64 - dy) as usize);
                shift = shift.max((warped.get(x, y) - expect).abs());
            }
        }
    }
    (
        zero <= 1e-9 && identity <= 1e-12 && shift <= 1e-12,
        format!("zero pose {zero:.1e}, identity warp {identity:.1e}, shift warps {shift:.1e}"),
    )
}

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

fn adaptation(means: &[(ExperimentMode, f64)], elapsed: Duration) -> (Verdict, Verdict) {
    let m = |mode| means.iter().find(|(x, _)| *x == mode).unwrap().1;
    let (so, dan, sspp, semi, tot) = (
        m(ExperimentMode::SourceOnly),
        m(ExperimentMode::Dan),
        m(ExperimentMode::SsppDan),
        m(ExperimentMode::SemiSsppDan),
        m(ExperimentMode::TrainOnTarget),
    );
    let trend = sspp > so + 0.10 && sspp > dan + 0.05 && elapsed < Duration::from_secs(300);
    let best_other = means
        .iter()
        .filter(|(x, _)| *x != ExperimentMode::TrainOnTarget)
        .map(|(_, v)| *v)
        .fold(f64::NEG_INFINITY, f64::max);
    let bounds = semi >= sspp - 0.02 && tot >= best_other - 0.02;
    (
        (
            trend,
            format!(
                "source-only {so:.3}, dan {dan:.3}, sspp-dan {sspp:.3} ({:.1} s)",
                elapsed.as_secs_f64()
            ),
        ),
        (
            bounds,
            format!(
                "semi-sspp-dan {semi:.3} vs sspp-dan {sspp:.3}; train-on-target {tot:.3} vs best other {best_other:.3}"
            ),
        ),
    )
}

fn cli(args: &[&str]) -> bool {
    Command::new(env!("CARGO_BIN_EXE_gradrev"))
        .args(args)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn same_file(a: &Path, b: &Path) -> bool {
    matches!((fs::read(a), fs::read(b)), (Ok(x), Ok(y)) if x == y)
}

fn determinism() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let p = |name: &str| tmp.path().join(name).to_str().unwrap().to_string();
    let mut identical = Vec::new();
    for run in ["1", "2"] {
        let data = p(&format!("data{run}"));
        assert!(cli(&[
            "gen-data",
            "--seed",
            "3",
            "--classes",
            "5",
            "--target-per-class",
            "40",
            "--out",
            &data
        ]));
        assert!(cli(&[
            "train",
            "--mode",
            "semi-sspp-dan",
            "--data",
            &data,
            "--seed",
            "3",
            "--out",
            &p(&format!("train{run}"))
        ]));
        assert!(cli(&[
            "matrix",
            "--data",
            &data,
            "--seeds",
            "1,2",
            "--epochs",
            "10",
            "--out",
            &p(&format!("matrix{run}"))
        ]));
    }
    for (a, b) in [
        ("data1/samples.csv", "data2/samples.csv"),
        ("data1/manifest.csv", "data2/manifest.csv"),
        ("train1/report.csv", "train2/report.csv"),
        ("matrix1/report.csv", "matrix2/report.csv"),
    ] {
        identical.push(same_file(&tmp.path().join(a), &tmp.path().join(b)));
    }
    let ok = identical.iter().all(|&x| x);
    (
        ok,
        format!(
            "{}/{} output pairs byte-identical",
            identical.iter().filter(|&&x| x).count(),
            identical.len()
        ),
    )
}

fn confusion() -> Verdict {
    let bundle = gen_two_domain_toy(&ToyShiftConfig::zero_shift()).unwrap();
    let r = run_experiment(
        ExperimentMode::Dan,
        &bundle,
        &NetConfig::default(),
        &AdversarialConfig::default(),
        1,
    )
    .unwrap();
    let c = r.domain_confusion;
    ((0.45..=0.60).contains(&c), format!("domain confusion {c:.3}"))
}

fn timed(limit: Duration, f: impl FnOnce() -> Verdict) -> Verdict {
    let start = Instant::now();
    let (ok, msg) = f();
    let elapsed = start.elapsed();
    (
        ok && elapsed < limit,
        format!("{msg} [{:.2} s, limit {} s]", elapsed.as_secs_f64(), limit.as_secs()),
    )
}

fn main() -> ExitCode {
    let secs = Duration::from_secs;
    let mut results: Vec<(usize, &str, Verdict)> = vec![
        (1, "gradient correctness", timed(secs(10), gradients)),
        (2, "reversal layer exactness", timed(secs(1), grl_exactness)),
        (3, "zero-lambda decoupling", timed(secs(5), zero_lambda)),
        (4, "camera fit", timed(secs(10), camera_fit)),
        (5, "rotation invariants", timed(secs(5), rotations)),
        (6, "synthesis round trip", timed(secs(10), synthesis)),
    ];

    let start = Instant::now();
    let toy = gen_two_domain_toy(&ToyShiftConfig::default()).unwrap();
    let matrix = run_matrix(
        &toy,
        &ExperimentMode::ALL,
        &NetConfig::default(),
        &AdversarialConfig::default(),
        &SEEDS,
        gradrev::experiments::default_threads(),
    )
    .unwrap();
    let elapsed = start.elapsed();
    let means: Vec<(ExperimentMode, f64)> = matrix
        .summary
        .iter()
        .map(|row| (row.mode, if row.failures == 0 { row.mean_accuracy } else { f64::NAN }))
        .collect();
    let (trend, bounds) = adaptation(&means, elapsed);
    results.push((7, "adaptation trend", trend));
    results.push((8, "semi-supervised and upper bound", bounds));
    results.push((9, "cli determinism", timed(secs(60), determinism)));
    results.push((10, "zero-shift domain confusion", timed(secs(120), confusion)));

    let mut failed = 0;
    for (id, name, (ok, detail)) in &results {
        if !ok {
            failed += 1;
        }
        println!(
            "criterion {id:>2} {:<4} {name}: {detail}",
            if *ok { "PASS" } else { "FAIL" }
        );
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
