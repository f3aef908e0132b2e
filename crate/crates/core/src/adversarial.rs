//! Domain-adversarial training over a feature extractor `F`, label
//! classifier `C` and domain discriminator `D`.
//!
//! The discriminator is attached to the features through a gradient
//! reversal layer (GRL). One backward pass then yields all three update
//! directions at once:
//!
//! - `D` descends `L_D`;
//! - `C` descends `L_C`;
//! - `F` descends `L_C - λ·L_D`, because the GRL hands it `-λ·∂L_D`.
//!
//! `L_C` is the mean softmax cross-entropy over the labeled rows of a batch
//! and `L_D` the mean softmax cross-entropy of the source/target prediction
//! over every row.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::datasets::Domain;
use crate::error::{Error, Result};
use crate::nn::{self, DenseMatrix, LayerSpec, ParameterSet, Sgd};

/// Feature width of the original heads (`C`: 1024-30, `D`: 1024-1024-1024-2).
pub const PAPER_FEATURE_DIM: usize = 1024;
pub const PAPER_NUM_CLASSES: usize = 30;

/// Layer widths for the three heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleShape {
    pub input_dim: usize,
    /// Hidden widths of `F`, excluding input and feature width.
    pub feature_hidden: Vec<usize>,
    pub feature_dim: usize,
    pub classifier_hidden: Vec<usize>,
    pub num_classes: usize,
    pub discriminator_hidden: Vec<usize>,
}

impl BundleShape {
    /// Full-width heads on top of an `input_dim -> 1024` extractor.
    pub fn paper_heads(input_dim: usize) -> Self {
        Self {
            input_dim,
            feature_hidden: Vec::new(),
            feature_dim: PAPER_FEATURE_DIM,
            classifier_hidden: Vec::new(),
            num_classes: PAPER_NUM_CLASSES,
            discriminator_hidden: vec![PAPER_FEATURE_DIM, PAPER_FEATURE_DIM],
        }
    }

    fn dims(first: usize, hidden: &[usize], last: usize) -> Vec<usize> {
        let mut d = vec![first];
        d.extend_from_slice(hidden);
        d.push(last);
        d
    }

    /// `F` uses relu on every layer, including the feature layer.
    pub fn feature_specs(&self) -> Result<Vec<LayerSpec>> {
        let dims = Self::dims(self.input_dim, &self.feature_hidden, self.feature_dim);
        dims.windows(2)
            .map(|w| LayerSpec::new(w[0], w[1], nn::Activation::Relu))
            .collect()
    }

    pub fn classifier_specs(&self) -> Result<Vec<LayerSpec>> {
        LayerSpec::stack(&Self::dims(self.feature_dim, &self.classifier_hidden, self.num_classes))
    }

    pub fn discriminator_specs(&self) -> Result<Vec<LayerSpec>> {
        LayerSpec::stack(&Self::dims(self.feature_dim, &self.discriminator_hidden, 2))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkBundle {
    pub feature_extractor: ParameterSet,
    pub label_classifier: ParameterSet,
    pub domain_discriminator: ParameterSet,
}

impl NetworkBundle {
    pub fn new(
        feature_extractor: ParameterSet,
        label_classifier: ParameterSet,
        domain_discriminator: ParameterSet,
    ) -> Result<Self> {
        let fdim = feature_extractor.output_dim();
        if label_classifier.input_dim() != fdim {
            return Err(Error::dim("label classifier input", fdim, label_classifier.input_dim()));
        }
        if domain_discriminator.input_dim() != fdim {
            return Err(Error::dim(
                "domain discriminator input",
                fdim,
                domain_discriminator.input_dim(),
            ));
        }
        if domain_discriminator.output_dim() != 2 {
            return Err(Error::dim(
                "domain discriminator output",
                2,
                domain_discriminator.output_dim(),
            ));
        }
        Ok(Self {
            feature_extractor,
            label_classifier,
            domain_discriminator,
        })
    }

    /// Initializes `F`, then `C`, then `D` from the same generator.
    pub fn init<R: Rng + ?Sized>(shape: &BundleShape, rng: &mut R) -> Result<Self> {
        let f = ParameterSet::init(&shape.feature_specs()?, rng)?;
        let c = ParameterSet::init(&shape.classifier_specs()?, rng)?;
        let d = ParameterSet::init(&shape.discriminator_specs()?, rng)?;
        Self::new(f, c, d)
    }

    /// Smallest `|z|` over every ReLU pre-activation of `F` and `D` (and
    /// `C`, if it has any) on `inputs`; infinite when there are none.
    ///
    /// Finite differences straddle the kink when this is below the step,
    /// so gradient checks pick inputs that keep it comfortably larger.
    pub fn relu_margin(&self, inputs: &DenseMatrix) -> Result<f64> {
        let (features, f_trace) = nn::forward(&self.feature_extractor, inputs)?;
        let (_, c_trace) = nn::forward(&self.label_classifier, &features)?;
        let (_, d_trace) = nn::forward(&self.domain_discriminator, &features)?;
        let mut margin = f64::INFINITY;
        for (set, trace) in [
            (&self.feature_extractor, &f_trace),
            (&self.label_classifier, &c_trace),
            (&self.domain_discriminator, &d_trace),
        ] {
            for (layer, z) in set.layers.iter().zip(&trace.pre_activations) {
                if layer.spec.activation == nn::Activation::Relu {
                    margin = z.as_slice().iter().fold(margin, |m, v| m.min(v.abs()));
                }
            }
        }
        Ok(margin)
    }

    pub fn input_dim(&self) -> usize {
        self.feature_extractor.input_dim()
    }

    pub fn num_classes(&self) -> usize {
        self.label_classifier.output_dim()
    }

    pub fn features(&self, inputs: &DenseMatrix) -> Result<DenseMatrix> {
        nn::predict(&self.feature_extractor, inputs)
    }

    pub fn class_logits(&self, inputs: &DenseMatrix) -> Result<DenseMatrix> {
        nn::predict(&self.label_classifier, &self.features(inputs)?)
    }
}

/// Momentum buffers for the three parameter sets.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleVelocity {
    pub feature_extractor: ParameterSet,
    pub label_classifier: ParameterSet,
    pub domain_discriminator: ParameterSet,
}

impl BundleVelocity {
    pub fn zeros_like(bundle: &NetworkBundle) -> Self {
        Self {
            feature_extractor: bundle.feature_extractor.zeros_like(),
            label_classifier: bundle.label_classifier.zeros_like(),
            domain_discriminator: bundle.domain_discriminator.zeros_like(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaMode {
    Fixed,
    Scheduled,
}

/// How one adversarial step applies the two objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateScheme {
    /// Single backward pass through the GRL updates `F`, `C` and `D` together.
    Joint,
    /// Update `D` on `L_D` first, then recompute and update `F`, `C` on
    /// `L_C - λ·L_D` against the new `D`.
    Alternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarialConfig {
    pub lambda_mode: LambdaMode,
    /// The fixed λ, or the ceiling the schedule ramps toward.
    pub lambda_value: f64,
    pub schedule_gamma: f64,
    pub lr: f64,
    pub momentum: f64,
    /// Rows per adversarial batch; half source, half target.
    pub batch_size: usize,
    pub epochs: usize,
    pub steps_per_epoch: usize,
    pub update_scheme: UpdateScheme,
    /// Share of the target half filled with labeled target samples in
    /// semi-supervised modes. Their domain loss is kept.
    pub labeled_target_share: f64,
}

impl Default for AdversarialConfig {
    fn default() -> Self {
        Self {
            lambda_mode: LambdaMode::Scheduled,
            lambda_value: 1.0,
            schedule_gamma: 10.0,
            lr: 0.01,
            momentum: 0.9,
            batch_size: 64,
            epochs: 100,
            steps_per_epoch: 10,
            update_scheme: UpdateScheme::Joint,
            labeled_target_share: 0.25,
        }
    }
}

impl AdversarialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_value >= 0.0 && self.lambda_value.is_finite()) {
            return Err(Error::Validation(format!(
                "lambda_value must be >= 0, got {}",
                self.lambda_value
            )));
        }
        if !self.schedule_gamma.is_finite() {
            return Err(Error::Validation("schedule_gamma must be finite".into()));
        }
        if self.batch_size < 2 || !self.batch_size.is_multiple_of(2) {
            return Err(Error::Validation(format!(
                "batch_size must be even and >= 2, got {}",
                self.batch_size
            )));
        }
        if self.epochs == 0 || self.steps_per_epoch == 0 {
            return Err(Error::Validation("epochs and steps_per_epoch must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.labeled_target_share) {
            return Err(Error::Validation(format!(
                "labeled_target_share must be in [0, 1], got {}",
                self.labeled_target_share
            )));
        }
        Sgd::new(self.lr, self.momentum).map(|_| ())
    }

    pub fn total_steps(&self) -> usize {
        self.epochs * self.steps_per_epoch
    }

    /// λ in effect at `progress` through training.
    pub fn lambda_at(&self, progress: f64) -> Result<f64> {
        match self.lambda_mode {
            LambdaMode::Fixed => Ok(self.lambda_value),
            LambdaMode::Scheduled => Ok(self.lambda_value * lambda_schedule(progress, self.schedule_gamma)?),
        }
    }

    fn sgd(&self) -> Result<Sgd> {
        Sgd::new(self.lr, self.momentum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub label_loss: f64,
    pub domain_loss: f64,
    /// `label_loss - lambda_used * domain_loss`.
    pub combined_fc_objective: f64,
    pub lambda_used: f64,
}

impl LossBreakdown {
    pub fn new(label_loss: f64, domain_loss: f64, lambda: f64) -> Self {
        Self {
            label_loss,
            domain_loss,
            combined_fc_objective: label_loss - lambda * domain_loss,
            lambda_used: lambda,
        }
    }
}

/// Identity.
pub fn grl_forward(features: &DenseMatrix) -> DenseMatrix {
    features.clone()
}

/// `-lambda * upstream_grad`, elementwise.
pub fn grl_backward(upstream_grad: &DenseMatrix, lambda: f64) -> DenseMatrix {
    let neg = -lambda;
    upstream_grad.map(|g| neg * g)
}

/// `2 / (1 + exp(-gamma * progress)) - 1`; rises from 0 toward 1.
pub fn lambda_schedule(progress: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&progress) {
        return Err(Error::Validation(format!("progress must be in [0, 1], got {progress}")));
    }
    Ok(2.0 / (1.0 + (-gamma * progress).exp()) - 1.0)
}

/// Rows of one domain fed to a training step. Labels may be partially
/// missing on target batches.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub inputs: DenseMatrix,
    pub labels: Vec<Option<usize>>,
}

impl Batch {
    pub fn new(inputs: DenseMatrix, labels: Vec<Option<usize>>) -> Result<Self> {
        if inputs.rows() != labels.len() {
            return Err(Error::dim("batch labels", inputs.rows(), labels.len()));
        }
        Ok(Self { inputs, labels })
    }

    pub fn labeled(inputs: DenseMatrix, labels: &[usize]) -> Result<Self> {
        Self::new(inputs, labels.iter().map(|&l| Some(l)).collect())
    }

    pub fn unlabeled(inputs: DenseMatrix) -> Self {
        let n = inputs.rows();
        Self {
            inputs,
            labels: vec![None; n],
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Fault injection for gradient diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GrlFault {
    #[default]
    None,
    /// Backward passes `+λ·g` instead of `-λ·g`.
    SignFlip,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BundleGradients {
    pub feature_extractor: ParameterSet,
    pub label_classifier: ParameterSet,
    pub domain_discriminator: ParameterSet,
}

/// Gradients from one backward pass plus the values around the GRL.
#[derive(Debug, Clone)]
pub struct AdversarialGradients {
    pub grads: BundleGradients,
    pub breakdown: LossBreakdown,
    /// `∂L_D/∂features` as seen at the discriminator input.
    pub discriminator_input_grad: DenseMatrix,
    /// What the GRL hands back to the feature extractor.
    pub reversed_grad: DenseMatrix,
}

/// Stacks rows of `source` above rows of `target` and returns the combined
/// inputs, class labels and domain indices.
fn stack_domains(source: &Batch, target: &Batch) -> Result<(DenseMatrix, Vec<Option<usize>>, Vec<usize>)> {
    if source.inputs.cols() != target.inputs.cols() {
        return Err(Error::dim(
            "target batch width",
            source.inputs.cols(),
            target.inputs.cols(),
        ));
    }
    let cols = source.inputs.cols();
    let mut data = Vec::with_capacity((source.len() + target.len()) * cols);
    data.extend_from_slice(source.inputs.as_slice());
    data.extend_from_slice(target.inputs.as_slice());
    let inputs = DenseMatrix::from_vec(source.len() + target.len(), cols, data)?;
    let labels = source.labels.iter().chain(&target.labels).copied().collect();
    let domains = std::iter::repeat_n(Domain::Source.index(), source.len())
        .chain(std::iter::repeat_n(Domain::Target.index(), target.len()))
        .collect();
    Ok((inputs, labels, domains))
}

/// One forward/backward pass over a batch tagged with class labels (where
/// known) and domain indices.
///
/// `L_C` averages over the labeled rows; with no labeled rows it is zero.
pub fn adversarial_gradients(
    bundle: &NetworkBundle,
    inputs: &DenseMatrix,
    labels: &[Option<usize>],
    domains: &[usize],
    lambda: f64,
    fault: GrlFault,
) -> Result<AdversarialGradients> {
    let n = inputs.rows();
    if n == 0 {
        return Err(Error::Validation("empty batch".into()));
    }
    if labels.len() != n || domains.len() != n {
        return Err(Error::dim(
            "batch tags",
            n,
            format!("{} labels / {} domains", labels.len(), domains.len()),
        ));
    }
    let (features, f_trace) = nn::forward(&bundle.feature_extractor, inputs)?;

    // label branch, labeled rows only
    let labeled: Vec<usize> = (0..n).filter(|&i| labels[i].is_some()).collect();
    let mut feature_grad = DenseMatrix::zeros(n, features.cols());
    let (label_loss, c_grads) = if labeled.is_empty() {
        (0.0, bundle.label_classifier.zeros_like())
    } else {
        let class_targets: Vec<usize> = labeled.iter().map(|&i| labels[i].unwrap()).collect();
        let (logits, c_trace) = nn::forward(&bundle.label_classifier, &features.select_rows(&labeled))?;
        let (loss, logit_grad) = nn::softmax_xent(&logits, &class_targets)?;
        let (grads, input_grad) = nn::backward(&bundle.label_classifier, &c_trace, &logit_grad)?;
        for (k, &row) in labeled.iter().enumerate() {
            feature_grad.row_mut(row).copy_from_slice(input_grad.row(k));
        }
        (loss, grads)
    };

    // domain branch through the GRL
    let (domain_logits, d_trace) = nn::forward(&bundle.domain_discriminator, &grl_forward(&features))?;
    let (domain_loss, domain_logit_grad) = nn::softmax_xent(&domain_logits, domains)?;
    let (d_grads, discriminator_input_grad) = nn::backward(&bundle.domain_discriminator, &d_trace, &domain_logit_grad)?;
    let reversed_grad = match fault {
        GrlFault::None => grl_backward(&discriminator_input_grad, lambda),
        GrlFault::SignFlip => grl_backward(&discriminator_input_grad, -lambda),
    };
    feature_grad.add_assign(&reversed_grad)?;
    let (f_grads, _) = nn::backward(&bundle.feature_extractor, &f_trace, &feature_grad)?;

    let breakdown = LossBreakdown::new(label_loss, domain_loss, lambda);
    if !breakdown.label_loss.is_finite() || !breakdown.domain_loss.is_finite() {
        return Err(Error::Training(format!(
            "non-finite loss (label {}, domain {})",
            breakdown.label_loss, breakdown.domain_loss
        )));
    }
    Ok(AdversarialGradients {
        grads: BundleGradients {
            feature_extractor: f_grads,
            label_classifier: c_grads,
            domain_discriminator: d_grads,
        },
        breakdown,
        discriminator_input_grad,
        reversed_grad,
    })
}

/// The two objectives evaluated without gradients: `(L_C, L_D)`.
pub fn objectives(
    bundle: &NetworkBundle,
    inputs: &DenseMatrix,
    labels: &[Option<usize>],
    domains: &[usize],
) -> Result<(f64, f64)> {
    let features = bundle.features(inputs)?;
    let labeled: Vec<usize> = (0..inputs.rows()).filter(|&i| labels[i].is_some()).collect();
    let label_loss = if labeled.is_empty() {
        0.0
    } else {
        let targets: Vec<usize> = labeled.iter().map(|&i| labels[i].unwrap()).collect();
        let logits = nn::predict(&bundle.label_classifier, &features.select_rows(&labeled))?;
        nn::softmax_xent(&logits, &targets)?.0
    };
    let d_logits = nn::predict(&bundle.domain_discriminator, &features)?;
    let domain_loss = nn::softmax_xent(&d_logits, domains)?.0;
    Ok((label_loss, domain_loss))
}

/// Largest relative error between analytic gradients and central
/// differences along each of the three gradient routes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradCheckReport {
    /// `∂L_C/∂θ_C`, and `∂L_C/∂θ_F` with the adversarial term switched off.
    pub label_path: f64,
    /// `∂L_D/∂θ_D`.
    pub domain_path: f64,
    /// `∂(L_C − λ·L_D)/∂θ_F`, through the reversal layer.
    pub grl_path: f64,
}

impl GradCheckReport {
    pub fn max(&self) -> f64 {
        self.label_path.max(self.domain_path).max(self.grl_path)
    }
}

/// Finite-difference check of all three routes at the given `λ`.
pub fn adversarial_grad_check(
    bundle: &NetworkBundle,
    inputs: &DenseMatrix,
    labels: &[Option<usize>],
    domains: &[usize],
    lambda: f64,
    fault: GrlFault,
) -> Result<GradCheckReport> {
    let with = |f: ParameterSet, c: ParameterSet, d: ParameterSet| NetworkBundle {
        feature_extractor: f,
        label_classifier: c,
        domain_discriminator: d,
    };
    let b = bundle;
    let plain = adversarial_gradients(b, inputs, labels, domains, 0.0, fault)?;
    let full = adversarial_gradients(b, inputs, labels, domains, lambda, fault)?;

    let lc = |n: &NetworkBundle| objectives(n, inputs, labels, domains).map(|o| o.0);
    let ld = |n: &NetworkBundle| objectives(n, inputs, labels, domains).map(|o| o.1);
    let c_err = nn::check_gradient(
        &b.label_classifier,
        |p| {
            lc(&with(
                b.feature_extractor.clone(),
                p.clone(),
                b.domain_discriminator.clone(),
            ))
        },
        &plain.grads.label_classifier,
    )?;
    let f_label_err = nn::check_gradient(
        &b.feature_extractor,
        |p| {
            lc(&with(
                p.clone(),
                b.label_classifier.clone(),
                b.domain_discriminator.clone(),
            ))
        },
        &plain.grads.feature_extractor,
    )?;
    let domain_path = nn::check_gradient(
        &b.domain_discriminator,
        |p| {
            ld(&with(
                b.feature_extractor.clone(),
                b.label_classifier.clone(),
                p.clone(),
            ))
        },
        &full.grads.domain_discriminator,
    )?;
    let grl_path = nn::check_gradient(
        &b.feature_extractor,
        |p| {
            objectives(
                &with(p.clone(), b.label_classifier.clone(), b.domain_discriminator.clone()),
                inputs,
                labels,
                domains,
            )
            .map(|(c, d)| c - lambda * d)
        },
        &full.grads.feature_extractor,
    )?;
    Ok(GradCheckReport {
        label_path: c_err.max(f_label_err),
        domain_path,
        grl_path,
    })
}

/// One adversarial update on a source batch (fully labeled) and a target
/// batch (labels optional; labeled rows join `L_C`).
pub fn dan_train_step(
    bundle: &mut NetworkBundle,
    velocity: &mut BundleVelocity,
    source: &Batch,
    target: &Batch,
    config: &AdversarialConfig,
    progress: f64,
) -> Result<LossBreakdown> {
    if source.is_empty() || target.is_empty() {
        return Err(Error::Validation(format!(
            "adversarial step needs non-empty source and target batches (got {} / {})",
            source.len(),
            target.len()
        )));
    }
    if let Some(i) = source.labels.iter().position(Option::is_none) {
        return Err(Error::Validation(format!("source row {i} has no class label")));
    }
    let lambda = config.lambda_at(progress)?;
    let sgd = config.sgd()?;
    let (inputs, labels, domains) = stack_domains(source, target)?;

    match config.update_scheme {
        UpdateScheme::Joint => {
            let g = adversarial_gradients(bundle, &inputs, &labels, &domains, lambda, GrlFault::None)?;
            sgd.step(
                &mut bundle.domain_discriminator,
                &g.grads.domain_discriminator,
                &mut velocity.domain_discriminator,
            )?;
            sgd.step(
                &mut bundle.label_classifier,
                &g.grads.label_classifier,
                &mut velocity.label_classifier,
            )?;
            sgd.step(
                &mut bundle.feature_extractor,
                &g.grads.feature_extractor,
                &mut velocity.feature_extractor,
            )?;
            Ok(g.breakdown)
        }
        UpdateScheme::Alternating => {
            let first = adversarial_gradients(bundle, &inputs, &labels, &domains, lambda, GrlFault::None)?;
            sgd.step(
                &mut bundle.domain_discriminator,
                &first.grads.domain_discriminator,
                &mut velocity.domain_discriminator,
            )?;
            let second = adversarial_gradients(bundle, &inputs, &labels, &domains, lambda, GrlFault::None)?;
            sgd.step(
                &mut bundle.label_classifier,
                &second.grads.label_classifier,
                &mut velocity.label_classifier,
            )?;
            sgd.step(
                &mut bundle.feature_extractor,
                &second.grads.feature_extractor,
                &mut velocity.feature_extractor,
            )?;
            Ok(first.breakdown)
        }
    }
}

/// Supervised update of `F` and `C` only; `D` is left untouched and the
/// reported domain loss is zero.
pub fn supervised_step(
    bundle: &mut NetworkBundle,
    velocity: &mut BundleVelocity,
    batch: &Batch,
    config: &AdversarialConfig,
) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::Validation("empty batch".into()));
    }
    let targets: Vec<usize> = batch
        .labels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| Error::Validation(format!("row {i} has no class label"))))
        .collect::<Result<_>>()?;
    let sgd = config.sgd()?;
    let (features, f_trace) = nn::forward(&bundle.feature_extractor, &batch.inputs)?;
    let (logits, c_trace) = nn::forward(&bundle.label_classifier, &features)?;
    let (loss, logit_grad) = nn::softmax_xent(&logits, &targets)?;
    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite label loss {loss}")));
    }
    let (c_grads, feature_grad) = nn::backward(&bundle.label_classifier, &c_trace, &logit_grad)?;
    let (f_grads, _) = nn::backward(&bundle.feature_extractor, &f_trace, &feature_grad)?;
    sgd.step(&mut bundle.label_classifier, &c_grads, &mut velocity.label_classifier)?;
    sgd.step(&mut bundle.feature_extractor, &f_grads, &mut velocity.feature_extractor)?;
    Ok(LossBreakdown::new(loss, 0.0, 0.0))
}

/// Argmax of `C(F(x))` per row.
pub fn predict_labels(bundle: &NetworkBundle, inputs: &DenseMatrix) -> Result<Vec<usize>> {
    if inputs.cols() != bundle.input_dim() {
        return Err(Error::dim("predict_labels input", bundle.input_dim(), inputs.cols()));
    }
    Ok(bundle.class_logits(inputs)?.argmax_rows())
}

/// Accuracy of `D` at telling source rows from target rows. Values near 0.5
/// mean the features carry little domain signal.
pub fn domain_confusion(
    bundle: &NetworkBundle,
    source_inputs: &DenseMatrix,
    target_inputs: &DenseMatrix,
) -> Result<f64> {
    if source_inputs.rows() == 0 || target_inputs.rows() == 0 {
        return Err(Error::Validation(
            "domain_confusion needs non-empty source and target sets".into(),
        ));
    }
    let mut correct = 0usize;
    for (inputs, domain) in [(source_inputs, Domain::Source), (target_inputs, Domain::Target)] {
        let logits = nn::predict(&bundle.domain_discriminator, &bundle.features(inputs)?)?;
        correct += logits.argmax_rows().iter().filter(|&&p| p == domain.index()).count();
    }
    Ok(correct as f64 / (source_inputs.rows() + target_inputs.rows()) as f64)
}
