use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gradrev::adversarial::{adversarial_grad_check, BundleShape, GrlFault, NetworkBundle};
use gradrev::datasets::{gen_two_domain_toy, load_feature_bundle, save_feature_bundle, Role, SplitBundle};
use gradrev::experiments::{
    confusion_diagnostic, default_threads, evaluate, format_table, loss_log_lines, report_csv, run_matrix,
    train_experiment, MatrixCell,
};
use gradrev::nn::DenseMatrix;
use gradrev::pose::{
    read_landmark_csv, read_pgm, synthesize_views, write_landmark_csv, write_pgm, LandmarkModel3D, LandmarkRecord,
};

use crate::config::{ensure_valid, CliConfig};
use crate::{Cli, Command, EvalArgs, Failure, GenDataArgs, GradcheckArgs, MatrixArgs, SynthArgs, TrainArgs};

pub const REPORT_FILE: &str = "report.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const LOSS_LOG_FILE: &str = "losses.jsonl";
pub const MODEL_FILE: &str = "model.json";
pub const EVAL_FILE: &str = "eval.csv";
pub const LANDMARKS_FILE: &str = "landmarks.csv";
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
/// Minimum distance of any ReLU pre-activation from zero, 100x the step.
const GRADCHECK_KINK_MARGIN: f64 = 1e-3;
const GRADCHECK_DRAWS: usize = 100;

type Outcome = Result<ExitCode, Failure>;

struct Session {
    config: CliConfig,
    out: Option<PathBuf>,
    verbose: bool,
}

impl Session {
    fn out(&self, command: &str) -> Result<&Path, Failure> {
        self.out
            .as_deref()
            .ok_or_else(|| Failure::Usage(format!("{command} requires --out <DIR>")))
    }
}

pub fn run(cli: Cli) -> Outcome {
    let mut config =
        CliConfig::load(cli.config.as_deref(), &cli.overrides).map_err(|e| Failure::Usage(format!("{e:#}")))?;
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    let mut ctx = Session {
        config,
        out: cli.out,
        verbose: cli.verbose,
    };
    match cli.command {
        Command::GenData(a) => gen_data(&mut ctx, a),
        Command::Synth(a) => synth(&mut ctx, a),
        Command::Train(a) => train(&mut ctx, a),
        Command::Matrix(a) => matrix(&mut ctx, a),
        Command::Eval(a) => eval(&mut ctx, a),
        Command::Gradcheck(a) => gradcheck(&mut ctx, a),
    }
}

fn validated(ctx: &Session) -> Result<(), Failure> {
    ensure_valid(&ctx.config).map_err(|e| Failure::Usage(format!("{e:#}")))
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare_out(ctx: &Session, command: &str) -> Result<PathBuf, Failure> {
    let out = ctx.out(command)?.to_path_buf();
    ctx.config.echo(&out)?;
    Ok(out)
}

fn dataset(ctx: &Session, data: Option<&Path>) -> anyhow::Result<SplitBundle> {
    match data {
        Some(dir) => load_feature_bundle(dir).with_context(|| format!("loading dataset {}", dir.display())),
        None => Ok(gen_two_domain_toy(&ctx.config.data)?),
    }
}

fn gen_data(ctx: &mut Session, a: GenDataArgs) -> Outcome {
    let d = &mut ctx.config.data;
    if let Some(v) = a.classes {
        d.num_classes = v;
    }
    if let Some(v) = a.source_per_class {
        d.samples_per_class_source = v;
    }
    if let Some(v) = a.target_per_class {
        d.samples_per_class_target = v;
    }
    if let Some(v) = a.shift {
        d.shift_rotation = v;
    }
    if let Some(v) = a.noise {
        d.noise_sigma = v;
    }
    if let Some(v) = a.k {
        d.k_labels_per_class = v;
    }
    validated(ctx)?;
    let out = prepare_out(ctx, "gen-data")?;
    let bundle = gen_two_domain_toy(&ctx.config.data)?;
    save_feature_bundle(&out, &bundle)?;
    println!("seed: {}", ctx.config.seed);
    for role in Role::ALL {
        println!("{:<5} {}", role.as_str(), bundle.set(role).len());
    }
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn synth(ctx: &mut Session, a: SynthArgs) -> Outcome {
    if !a.poses.is_empty() {
        ctx.config.synth.poses = a.poses;
    }
    if let Some(t) = a.fit_threshold {
        ctx.config.synth.fit_threshold = t;
    }
    if let Some(m) = a.model {
        ctx.config.synth.model = Some(m);
    }
    validated(ctx)?;
    let out = prepare_out(ctx, "synth")?;
    let poses = ctx.config.synth.pose_specs()?;
    let model = match &ctx.config.synth.model {
        Some(p) => LandmarkModel3D::load(p)?,
        None => LandmarkModel3D::bundled(),
    };
    let records = read_landmark_csv(&a.landmarks)?;

    let mut images: Vec<PathBuf> = fs::read_dir(&a.gallery)
        .with_context(|| format!("reading gallery {}", a.gallery.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pgm"))
        .collect();
    images.sort();

    let (mut written, mut warnings, mut errors) = (0usize, 0usize, 0usize);
    let mut out_records: Vec<LandmarkRecord> = Vec::new();
    for path in &images {
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let stem = path
            .file_stem()
            .and_then(|n| n.to_str())
            .unwrap_or_default()
            .to_string();
        let Some(record) = records.iter().find(|r| r.image_name == name || r.image_name == stem) else {
            eprintln!("error: {name}: no landmark row");
            errors += 1;
            continue;
        };
        let image = match read_pgm(path) {
            Ok(img) => img,
            Err(e) => {
                eprintln!("error: {e}");
                errors += 1;
                continue;
            }
        };
        let output = match synthesize_views(
            &image,
            &record.landmarks,
            &model,
            &poses,
            ctx.config.synth.fit_threshold,
        ) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("warning: {name}: skipped ({e})");
                warnings += 1;
                continue;
            }
        };
        out_records.push(record.clone());
        for skip in &output.skipped {
            eprintln!(
                "warning: {name}: pose yaw {} pitch {} roll {} skipped ({})",
                skip.pose.yaw, skip.pose.pitch, skip.pose.roll, skip.reason
            );
            warnings += 1;
        }
        for view in &output.views {
            if !view.warnings.is_empty() {
                warnings += view.warnings.len();
                if ctx.verbose {
                    eprintln!(
                        "warning: {name}: {} warp warnings at yaw {}",
                        view.warnings.len(),
                        view.pose.yaw
                    );
                }
            }
            let file = format!("{stem}_yaw{}_pitch{}.pgm", view.pose.yaw, view.pose.pitch);
            write_pgm(&out.join(&file), &view.image)?;
            out_records.push(LandmarkRecord {
                image_name: file,
                landmarks: view.landmarks,
            });
            written += 1;
        }
    }
    write_landmark_csv(&out.join(LANDMARKS_FILE), &out_records)?;
    println!("views: {written}  warnings: {warnings}  errors: {errors}");
    Ok(if errors > 0 {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn train(ctx: &mut Session, a: TrainArgs) -> Outcome {
    if let Some(e) = a.epochs {
        ctx.config.train.epochs = e;
    }
    validated(ctx)?;
    let out = prepare_out(ctx, "train")?;
    let bundle = dataset(ctx, a.data.as_deref())?;
    let c = &ctx.config;
    let verbose = ctx.verbose;
    let steps_per_epoch = c.train.steps_per_epoch;
    let (report, model) = train_experiment(a.mode, &bundle, &c.net, &c.train, c.seed, |step, b| {
        if verbose && (step + 1) % steps_per_epoch == 0 {
            eprintln!(
                "epoch {:>4}  L_C {:.4}  L_D {:.4}  lambda {:.3}",
                (step + 1) / steps_per_epoch,
                b.label_loss,
                b.domain_loss,
                b.lambda_used
            );
        }
    })?;
    let cell = MatrixCell {
        mode: a.mode,
        seed: c.seed,
        outcome: Ok(report),
    };
    write(&out.join(REPORT_FILE), &report_csv(std::slice::from_ref(&cell))?)?;
    let json = serde_json::to_string(&model).context("serializing model")?;
    write(&out.join(MODEL_FILE), &json)?;
    let report = cell.outcome.as_ref().expect("just built");
    if ctx.verbose {
        write(&out.join(LOSS_LOG_FILE), &loss_log_lines(report))?;
    }
    println!(
        "{}: accuracy {:.4}  domain confusion {:.4}",
        a.mode, report.target_test_accuracy, report.domain_confusion
    );
    Ok(ExitCode::SUCCESS)
}

fn matrix(ctx: &mut Session, a: MatrixArgs) -> Outcome {
    if !a.seeds.is_empty() {
        ctx.config.matrix.seeds = a.seeds;
    }
    if !a.modes.is_empty() {
        ctx.config.matrix.modes = a.modes;
    }
    if let Some(e) = a.epochs {
        ctx.config.train.epochs = e;
    }
    if ctx.config.matrix.seeds.is_empty() {
        return Err(Failure::Usage("matrix needs at least one seed".into()));
    }
    validated(ctx)?;
    let out = prepare_out(ctx, "matrix")?;
    let bundle = dataset(ctx, a.data.as_deref())?;
    let c = &ctx.config;
    let result = run_matrix(
        &bundle,
        &c.matrix.modes,
        &c.net,
        &c.train,
        &c.matrix.seeds,
        default_threads(),
    )?;
    write(&out.join(REPORT_FILE), &report_csv(&result.cells)?)?;
    let table = format_table(&result.summary);
    write(&out.join(SUMMARY_FILE), &table)?;
    if ctx.verbose {
        let log: String = result.reports().map(loss_log_lines).collect();
        write(&out.join(LOSS_LOG_FILE), &log)?;
    }
    print!("{table}");
    let failed: Vec<&MatrixCell> = result.cells.iter().filter(|c| c.outcome.is_err()).collect();
    for cell in &failed {
        if let Err(e) = &cell.outcome {
            eprintln!("warning: {} seed {} failed: {e}", cell.mode, cell.seed);
        }
    }
    Ok(if failed.len() == result.cells.len() {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn eval(ctx: &mut Session, a: EvalArgs) -> Outcome {
    validated(ctx)?;
    let text = fs::read_to_string(&a.model).with_context(|| format!("reading {}", a.model.display()))?;
    let model: NetworkBundle = serde_json::from_str(&text).with_context(|| format!("parsing {}", a.model.display()))?;
    let bundle = dataset(ctx, a.data.as_deref())?;
    let accuracy = evaluate(&model, &bundle.test)?;
    let confusion = confusion_diagnostic(&model, &bundle).map_err(|e| anyhow!("domain confusion: {e}"))?;
    if let Some(out) = &ctx.out {
        ctx.config.echo(out)?;
        let csv = format!(
            "accuracy,domain_confusion,test_samples\n{accuracy:.6},{confusion:.6},{}\n",
            bundle.test.len()
        );
        write(&out.join(EVAL_FILE), &csv)?;
    }
    println!(
        "accuracy {accuracy:.4}  domain confusion {confusion:.4}  ({} test samples)",
        bundle.test.len()
    );
    Ok(ExitCode::SUCCESS)
}

/// Shape used by the diagnostic: F 8-16-8, C 8-4, D 8-8-2.
pub fn gradcheck_shape() -> BundleShape {
    BundleShape {
        input_dim: 8,
        feature_hidden: vec![16],
        feature_dim: 8,
        classifier_hidden: Vec::new(),
        num_classes: 4,
        discriminator_hidden: vec![8],
    }
}

fn gradcheck(ctx: &mut Session, a: GradcheckArgs) -> Outcome {
    let fault = match a.corrupt.as_deref() {
        Some("grl-sign") => GrlFault::SignFlip,
        _ => GrlFault::None,
    };
    if let Some(out) = &ctx.out {
        ctx.config.echo(out)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.config.seed);
    let bundle = NetworkBundle::init(&gradcheck_shape(), &mut rng)?;
    let rows = 8;
    // finite differences are meaningless across a ReLU kink; redraw inputs
    // until every pre-activation is well clear of zero
    let mut inputs = None;
    for _ in 0..GRADCHECK_DRAWS {
        let x = DenseMatrix::from_vec(rows, 8, (0..rows * 8).map(|_| rng.random_range(-1.0..1.0)).collect())?;
        if bundle.relu_margin(&x)? >= GRADCHECK_KINK_MARGIN {
            inputs = Some(x);
            break;
        }
    }
    let inputs =
        inputs.ok_or_else(|| anyhow!("no input batch kept clear of ReLU kinks after {GRADCHECK_DRAWS} draws"))?;
    let labels: Vec<Option<usize>> = (0..rows)
        .map(|i| (i < rows / 2).then(|| rng.random_range(0..4)))
        .collect();
    let domains: Vec<usize> = (0..rows).map(|i| usize::from(i >= rows / 2)).collect();

    let (mut lc, mut ld, mut grl) = (0.0f64, 0.0f64, 0.0f64);
    for lambda in [0.0, 0.5, 1.0] {
        let r = adversarial_grad_check(&bundle, &inputs, &labels, &domains, lambda, fault)?;
        lc = lc.max(r.label_path);
        ld = ld.max(r.domain_path);
        grl = grl.max(r.grl_path);
    }
    println!("{:<10} {:>14}  status", "objective", "max_rel_error");
    let mut ok = true;
    for (name, err) in [("L_C path", lc), ("L_D path", ld), ("GRL path", grl)] {
        let pass = err < GRADCHECK_TOLERANCE;
        ok &= pass;
        println!("{name:<10} {err:>14.3e}  {}", if pass { "ok" } else { "FAIL" });
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
