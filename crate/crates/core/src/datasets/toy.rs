//! Seeded two-domain toy standing in for a gallery/surveillance face set.
//!
//! Each class is a 2-D Gaussian cluster of "identity" coordinates. A sample
//! also has a pose in [-1, 1] (yaw / 45°). Identity and pose are pushed
//! through a fixed random tanh layer into feature space, with pose
//! interacting with identity so that a posed face is not a frontal face plus
//! a constant offset.
//!
//! Target samples go through the same map, then each consecutive pair of
//! feature coordinates is rotated by `shift_rotation`, the features are
//! smoothed along the feature axis and get additive Gaussian noise. With a single source sample
//! per class that sample is frontal. Virtual views re-render each source
//! sample's identity at the yaws in `virtual_yaws`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::sample::{Domain, Origin, Sample, SampleInput};
use super::splits::{build_splits, SplitBundle};
use crate::error::{Error, Result};

/// Yaw (degrees) that maps to pose coordinate 1.
pub const MAX_YAW: f64 = 45.0;

const CLUSTER_SPREAD: f64 = 0.25;
const CENTER_BOX: f64 = 2.5;
const MIN_CENTER_GAP: f64 = 1.0;
const POSE_GAIN: f64 = 1.5;
const INTERACTION_GAIN: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyShiftConfig {
    pub num_classes: usize,
    pub samples_per_class_source: usize,
    pub samples_per_class_target: usize,
    /// Degrees.
    pub shift_rotation: f64,
    pub noise_sigma: f64,
    /// Moving-average window over features; 1 disables smoothing.
    pub blur_kernel_width: usize,
    pub seed: u64,
    pub feature_dim: usize,
    /// Yaws (degrees) of the virtual views rendered per source sample.
    pub virtual_yaws: Vec<f64>,
    pub k_labels_per_class: usize,
    pub test_fraction: f64,
}

impl Default for ToyShiftConfig {
    fn default() -> Self {
        Self {
            num_classes: 10,
            samples_per_class_source: 1,
            samples_per_class_target: 200,
            shift_rotation: 35.0,
            noise_sigma: 0.3,
            blur_kernel_width: 3,
            seed: 0,
            feature_dim: 32,
            virtual_yaws: vec![-45.0, -30.0, -15.0, 15.0, 30.0, 45.0],
            k_labels_per_class: 3,
            test_fraction: 0.33,
        }
    }
}

impl ToyShiftConfig {
    /// Source and target from the same distribution: no rotation, noise or
    /// smoothing, and a full source pool instead of one frontal sample.
    pub fn zero_shift() -> Self {
        Self {
            samples_per_class_source: 200,
            shift_rotation: 0.0,
            noise_sigma: 0.0,
            blur_kernel_width: 1,
            virtual_yaws: Vec::new(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("num_classes", self.num_classes),
            ("samples_per_class_source", self.samples_per_class_source),
            ("samples_per_class_target", self.samples_per_class_target),
            ("blur_kernel_width", self.blur_kernel_width),
            ("feature_dim", self.feature_dim),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Validation(format!("{name} must be at least 1")));
            }
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Validation(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        if !self.shift_rotation.is_finite() {
            return Err(Error::Validation("shift_rotation must be finite".into()));
        }
        if let Some(y) = self.virtual_yaws.iter().find(|y| !(-90.0..=90.0).contains(*y)) {
            return Err(Error::Validation(format!("virtual yaw {y} outside [-90, 90]")));
        }
        if self.k_labels_per_class > self.samples_per_class_target {
            return Err(Error::Validation(format!(
                "k_labels_per_class {} exceeds samples_per_class_target {}",
                self.k_labels_per_class, self.samples_per_class_target
            )));
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(Error::Validation("test_fraction must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// The fixed random map from (identity, pose) to features.
#[derive(Debug, Clone)]
struct Renderer {
    centers: Vec<[f64; 2]>,
    w_id: Vec<[f64; 2]>,
    w_pose: Vec<f64>,
    w_mix: Vec<[f64; 2]>,
    bias: Vec<f64>,
}

impl Renderer {
    fn new(config: &ToyShiftConfig, rng: &mut ChaCha8Rng) -> Self {
        let mut centers: Vec<[f64; 2]> = Vec::with_capacity(config.num_classes);
        while centers.len() < config.num_classes {
            let mut candidate = [0.0; 2];
            for attempt in 0..1000 {
                candidate = [
                    rng.random_range(-CENTER_BOX..CENTER_BOX),
                    rng.random_range(-CENTER_BOX..CENTER_BOX),
                ];
                let clear = centers
                    .iter()
                    .all(|c| (c[0] - candidate[0]).hypot(c[1] - candidate[1]) >= MIN_CENTER_GAP);
                if clear || attempt == 999 {
                    break;
                }
            }
            centers.push(candidate);
        }
        let std = Normal::new(0.0, 1.0).expect("unit normal");
        let d = config.feature_dim;
        let mut pair = |scale: f64| [std.sample(rng) * scale, std.sample(rng) * scale];
        let w_id: Vec<[f64; 2]> = (0..d).map(|_| pair(0.7)).collect();
        let w_mix: Vec<[f64; 2]> = (0..d).map(|_| pair(INTERACTION_GAIN * 0.7)).collect();
        let w_pose = (0..d).map(|_| std.sample(rng) * POSE_GAIN).collect();
        let bias = (0..d).map(|_| std.sample(rng) * 0.3).collect();
        Self {
            centers,
            w_id,
            w_pose,
            w_mix,
            bias,
        }
    }

    fn render(&self, z: [f64; 2], pose: f64) -> Vec<f64> {
        (0..self.bias.len())
            .map(|j| {
                let id = self.w_id[j][0] * z[0] + self.w_id[j][1] * z[1];
                let mix = self.w_mix[j][0] * z[0] + self.w_mix[j][1] * z[1];
                (id + pose * (self.w_pose[j] + mix) + self.bias[j]).tanh()
            })
            .collect()
    }
}

/// Rotates each consecutive coordinate pair `(x[2i], x[2i+1])` by `degrees`;
/// a trailing odd coordinate is left alone.
pub fn rotate_pairs(x: &mut [f64], degrees: f64) {
    if degrees == 0.0 {
        return;
    }
    let (s, c) = degrees.to_radians().sin_cos();
    for pair in x.chunks_exact_mut(2) {
        let (a, b) = (pair[0], pair[1]);
        pair[0] = c * a - s * b;
        pair[1] = s * a + c * b;
    }
}

/// Centered moving average; windows are truncated at the ends.
pub fn smooth(features: &[f64], width: usize) -> Vec<f64> {
    if width <= 1 {
        return features.to_vec();
    }
    let half = width / 2;
    let n = features.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + width - half).min(n);
            features[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

/// All samples of the toy before splitting.
pub fn gen_toy_samples(config: &ToyShiftConfig) -> Result<Vec<Sample>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let renderer = Renderer::new(config, &mut rng);
    let spread = Normal::new(0.0, CLUSTER_SPREAD).expect("positive spread");
    let noise = (config.noise_sigma > 0.0).then(|| Normal::new(0.0, config.noise_sigma).expect("checked"));

    let mut samples = Vec::new();
    for (class, center) in renderer.centers.iter().enumerate() {
        for i in 0..config.samples_per_class_source {
            let z = [center[0] + spread.sample(&mut rng), center[1] + spread.sample(&mut rng)];
            let pose = if config.samples_per_class_source == 1 {
                0.0
            } else {
                rng.random_range(-1.0..=1.0)
            };
            let id = format!("s-c{class}-{i}");
            for &yaw in &config.virtual_yaws {
                samples.push(Sample {
                    id: format!("{id}-yaw{yaw}"),
                    input: SampleInput::Features(renderer.render(z, yaw / MAX_YAW)),
                    class_label: Some(class),
                    domain: Domain::Source,
                    origin: Origin::Virtual,
                    derived_from: Some(id.clone()),
                });
            }
            samples.push(Sample::real(
                id,
                SampleInput::Features(renderer.render(z, pose)),
                Some(class),
                Domain::Source,
            ));
        }
        for i in 0..config.samples_per_class_target {
            let z = [center[0] + spread.sample(&mut rng), center[1] + spread.sample(&mut rng)];
            let pose = rng.random_range(-1.0..=1.0);
            let mut x = renderer.render(z, pose);
            rotate_pairs(&mut x, config.shift_rotation);
            let mut x = smooth(&x, config.blur_kernel_width);
            if let Some(noise) = &noise {
                for v in &mut x {
                    *v += noise.sample(&mut rng);
                }
            }
            samples.push(Sample::real(
                format!("t-c{class}-{i}"),
                SampleInput::Features(x),
                Some(class),
                Domain::Target,
            ));
        }
    }
    Ok(samples)
}

/// Generates the toy and splits it with the config's `k` and test fraction.
pub fn gen_two_domain_toy(config: &ToyShiftConfig) -> Result<SplitBundle> {
    let samples = gen_toy_samples(config)?;
    build_splits(
        samples,
        config.k_labels_per_class,
        config.test_fraction,
        config.seed.wrapping_add(0x5eed),
    )
}
