use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::mode::{ExperimentMode, PaperReference};
use crate::adversarial::{
    dan_train_step, domain_confusion, predict_labels, supervised_step, AdversarialConfig, Batch, BundleShape,
    BundleVelocity, LossBreakdown, NetworkBundle,
};
use crate::datasets::{Role, Sample, SplitBundle};
use crate::error::{Error, Result};
use crate::nn::DenseMatrix;

/// Hidden widths of the three heads; input width and class count come from
/// the data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetConfig {
    pub feature_hidden: Vec<usize>,
    pub feature_dim: usize,
    pub classifier_hidden: Vec<usize>,
    pub discriminator_hidden: Vec<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            feature_hidden: vec![64],
            feature_dim: 32,
            classifier_hidden: Vec::new(),
            discriminator_hidden: vec![32],
        }
    }
}

impl NetConfig {
    pub fn shape(&self, input_dim: usize, num_classes: usize) -> BundleShape {
        BundleShape {
            input_dim,
            feature_hidden: self.feature_hidden.clone(),
            feature_dim: self.feature_dim,
            classifier_hidden: self.classifier_hidden.clone(),
            num_classes,
            discriminator_hidden: self.discriminator_hidden.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub mode: ExperimentMode,
    pub seed: u64,
    pub epochs: usize,
    pub target_test_accuracy: f64,
    pub domain_confusion: f64,
    pub loss_history: Vec<LossBreakdown>,
    pub paper_reference_accuracy: Option<PaperReference>,
}

/// Rows and optional labels drawn from one or more sets.
#[derive(Debug, Clone)]
struct Pool {
    inputs: DenseMatrix,
    labels: Vec<Option<usize>>,
}

/// Samples plus, optionally, labels that replace theirs (withheld target
/// labels).
type PoolPart<'a> = (&'a [Sample], Option<&'a [Option<usize>]>);

impl Pool {
    fn new(parts: &[PoolPart<'_>]) -> Result<Self> {
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut labels = Vec::new();
        for (samples, override_labels) in parts {
            for (i, s) in samples.iter().enumerate() {
                rows.push(s.features());
                labels.push(match override_labels {
                    Some(l) => l[i],
                    None => s.class_label,
                });
            }
        }
        Ok(Self {
            inputs: stack(&rows)?,
            labels,
        })
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    /// `n` rows drawn uniformly with replacement.
    fn draw(&self, n: usize, rng: &mut ChaCha8Rng) -> Result<Batch> {
        let idx: Vec<usize> = (0..n).map(|_| rng.random_range(0..self.len())).collect();
        Batch::new(
            self.inputs.select_rows(&idx),
            idx.iter().map(|&i| self.labels[i]).collect(),
        )
    }
}

fn stack(rows: &[&[f64]]) -> Result<DenseMatrix> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut data = Vec::with_capacity(rows.len() * cols);
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::dim(format!("input row {i}"), cols, r.len()));
        }
        data.extend_from_slice(r);
    }
    DenseMatrix::from_vec(rows.len(), cols, data)
}

/// Feature rows of `samples` as one matrix.
pub fn samples_matrix(samples: &[Sample]) -> Result<DenseMatrix> {
    stack(&samples.iter().map(Sample::features).collect::<Vec<_>>())
}

/// `n` evenly spaced rows (all rows if `n >= len`).
fn spread_subset(m: &DenseMatrix, n: usize) -> Result<DenseMatrix> {
    let len = m.rows();
    let n = n.min(len);
    let idx: Vec<usize> = (0..n).map(|i| i * len / n).collect();
    Ok(m.select_rows(&idx))
}

fn require(bundle: &SplitBundle, mode: ExperimentMode) -> Result<()> {
    for &role in mode.required_sets() {
        if bundle.set(role).is_empty() {
            return Err(Error::Configuration(format!(
                "mode {mode} needs split {} but it is empty",
                role.as_str()
            )));
        }
    }
    if bundle.test.is_empty() {
        return Err(Error::Configuration(format!(
            "mode {mode} needs split test but it is empty"
        )));
    }
    if mode == ExperimentMode::TrainOnTarget && bundle.withheld_labels.iter().any(Option::is_none) {
        return Err(Error::Configuration(
            "train-on-target needs the withheld labels of T".into(),
        ));
    }
    Ok(())
}

/// Fraction of test samples whose predicted class equals their label.
pub fn evaluate(net: &NetworkBundle, test: &[Sample]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Validation("evaluation set is empty".into()));
    }
    let truth: Vec<usize> = test
        .iter()
        .map(|s| {
            s.class_label
                .ok_or_else(|| Error::Validation(format!("test sample {} has no label", s.id)))
        })
        .collect::<Result<_>>()?;
    let predicted = predict_labels(net, &samples_matrix(test)?)?;
    let hits = predicted.iter().zip(&truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / test.len() as f64)
}

/// Trains a fresh bundle for `mode` and scores it on `bundle.test`.
///
/// Adversarial modes draw half of every batch from the source pool and
/// half from the target pool; in semi-supervised modes a
/// `labeled_target_share` of that target half comes from `T_l`. Other modes
/// run supervised steps with the discriminator frozen.
pub fn run_experiment(
    mode: ExperimentMode,
    bundle: &SplitBundle,
    net: &NetConfig,
    adv: &AdversarialConfig,
    seed: u64,
) -> Result<ExperimentReport> {
    train_experiment(mode, bundle, net, adv, seed, |_, _| {}).map(|(report, _)| report)
}

/// [`run_experiment`] that also returns the trained bundle and calls `log`
/// after every step.
pub fn train_experiment<L: FnMut(usize, &LossBreakdown)>(
    mode: ExperimentMode,
    bundle: &SplitBundle,
    net: &NetConfig,
    adv: &AdversarialConfig,
    seed: u64,
    mut log: L,
) -> Result<(ExperimentReport, NetworkBundle)> {
    adv.validate()?;
    require(bundle, mode)?;
    let input_dim = bundle
        .input_dim()
        .ok_or_else(|| Error::Configuration("bundle holds no samples".into()))?;
    let num_classes = bundle.num_classes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = NetworkBundle::init(&net.shape(input_dim, num_classes), &mut rng)?;
    let mut velocity = BundleVelocity::zeros_like(&model);

    let source_parts: Vec<PoolPart<'_>> = if mode.uses_virtual() {
        vec![(&bundle.source, None), (&bundle.virtual_source, None)]
    } else {
        vec![(&bundle.source, None)]
    };
    let total = adv.total_steps();
    let mut history = Vec::with_capacity(total);

    if mode.is_adversarial() {
        let source = Pool::new(&source_parts)?;
        let unlabeled = Pool::new(&[(&bundle.target, None)])?;
        let labeled = mode
            .uses_target_labels()
            .then(|| Pool::new(&[(&bundle.target_labeled, None)]))
            .transpose()?;
        let half = adv.batch_size / 2;
        let n_labeled = labeled
            .as_ref()
            .map_or(0, |_| (adv.labeled_target_share * half as f64).round() as usize);
        for step in 0..total {
            let progress = step as f64 / total as f64;
            let src = source.draw(half, &mut rng)?;
            let tgt = match &labeled {
                Some(l) if n_labeled > 0 => {
                    let a = l.draw(n_labeled, &mut rng)?;
                    let b = unlabeled.draw(half - n_labeled, &mut rng)?;
                    concat(a, b)?
                }
                _ => unlabeled.draw(half, &mut rng)?,
            };
            let b = dan_train_step(&mut model, &mut velocity, &src, &tgt, adv, progress)?;
            log(step, &b);
            history.push(b);
        }
    } else {
        let pool = if mode == ExperimentMode::TrainOnTarget {
            Pool::new(&[
                (&bundle.target_labeled, None),
                (&bundle.target, Some(&bundle.withheld_labels)),
            ])?
        } else {
            Pool::new(&source_parts)?
        };
        for step in 0..total {
            let batch = pool.draw(adv.batch_size, &mut rng)?;
            let b = supervised_step(&mut model, &mut velocity, &batch, adv)?;
            log(step, &b);
            history.push(b);
        }
    }

    let accuracy = evaluate(&model, &bundle.test)?;
    let confusion = confusion_diagnostic(&model, bundle)?;
    let report = ExperimentReport {
        mode,
        seed,
        epochs: adv.epochs,
        target_test_accuracy: accuracy,
        domain_confusion: confusion,
        loss_history: history,
        paper_reference_accuracy: mode.paper_reference(),
    };
    Ok((report, model))
}

fn concat(a: Batch, b: Batch) -> Result<Batch> {
    let cols = a.inputs.cols();
    let mut data = a.inputs.into_vec();
    data.extend_from_slice(b.inputs.as_slice());
    let rows = a.labels.len() + b.labels.len();
    let mut labels = a.labels;
    labels.extend(b.labels);
    Batch::new(DenseMatrix::from_vec(rows, cols, data)?, labels)
}

/// Discriminator accuracy on equally many real source and test rows.
pub fn confusion_diagnostic(model: &NetworkBundle, bundle: &SplitBundle) -> Result<f64> {
    let source = samples_matrix(bundle.set(Role::Source))?;
    let test = samples_matrix(&bundle.test)?;
    let n = source.rows().min(test.rows());
    domain_confusion(model, &spread_subset(&source, n)?, &spread_subset(&test, n)?)
}
