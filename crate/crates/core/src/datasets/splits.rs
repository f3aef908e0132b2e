use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sample::{Domain, Origin, Sample, SampleInput};
use crate::error::{Error, Result};
use crate::pose::VirtualView;

/// Role of a sample in a split, as written to manifests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Source,
    Virtual,
    Target,
    TargetLabeled,
    Test,
}

impl Role {
    pub const ALL: [Role; 5] = [
        Role::Source,
        Role::Virtual,
        Role::Target,
        Role::TargetLabeled,
        Role::Test,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Role::Source => "S",
            Role::Virtual => "S_v",
            Role::Target => "T",
            Role::TargetLabeled => "T_l",
            Role::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Role::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

/// The training and evaluation sets of one experiment.
///
/// `T` never carries class labels. Their ground truth is held in
/// `withheld_labels` (aligned with `target`) and is only read by the fully
/// supervised train-on-target reference.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SplitBundle {
    /// `S`: labeled source (gallery) samples.
    pub source: Vec<Sample>,
    /// `S_v`: virtual samples synthesized from `S`.
    pub virtual_source: Vec<Sample>,
    /// `T`: unlabeled target samples.
    pub target: Vec<Sample>,
    /// `T_l`: k labeled target samples per class.
    pub target_labeled: Vec<Sample>,
    /// Labeled target evaluation samples.
    pub test: Vec<Sample>,
    pub withheld_labels: Vec<Option<usize>>,
}

impl SplitBundle {
    pub fn set(&self, role: Role) -> &[Sample] {
        match role {
            Role::Source => &self.source,
            Role::Virtual => &self.virtual_source,
            Role::Target => &self.target,
            Role::TargetLabeled => &self.target_labeled,
            Role::Test => &self.test,
        }
    }

    /// `(sample_id, role)` for every sample, sets in `Role::ALL` order.
    pub fn manifest(&self) -> Vec<(String, Role)> {
        Role::ALL
            .into_iter()
            .flat_map(|role| self.set(role).iter().map(move |s| (s.id.clone(), role)))
            .collect()
    }

    /// Number of classes seen among labeled samples.
    pub fn num_classes(&self) -> usize {
        self.source
            .iter()
            .chain(&self.virtual_source)
            .chain(&self.target_labeled)
            .chain(&self.test)
            .filter_map(|s| s.class_label)
            .chain(self.withheld_labels.iter().flatten().copied())
            .max()
            .map_or(0, |m| m + 1)
    }

    pub fn input_dim(&self) -> Option<usize> {
        Role::ALL
            .into_iter()
            .flat_map(|r| self.set(r).first())
            .next()
            .map(|s| s.input.dim())
    }

    /// Checks pairwise disjointness, label hygiene and virtual provenance.
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for (id, role) in self.manifest() {
            if !seen.insert(id.clone()) {
                return Err(Error::Validation(format!(
                    "sample {id} appears more than once (again in {})",
                    role.as_str()
                )));
            }
        }
        if let Some(s) = self.target.iter().find(|s| s.class_label.is_some()) {
            return Err(Error::Validation(format!("T sample {} carries a label", s.id)));
        }
        if self.withheld_labels.len() != self.target.len() {
            return Err(Error::dim(
                "withheld labels",
                self.target.len(),
                self.withheld_labels.len(),
            ));
        }
        let source_ids: HashSet<&str> = self.source.iter().map(|s| s.id.as_str()).collect();
        for v in &self.virtual_source {
            if v.origin != Origin::Virtual || v.domain != Domain::Source {
                return Err(Error::Validation(format!(
                    "S_v sample {} must be virtual and source-domain",
                    v.id
                )));
            }
            match &v.derived_from {
                Some(g) if source_ids.contains(g.as_str()) => {}
                _ => {
                    return Err(Error::Validation(format!(
                        "S_v sample {} does not reference a sample of S",
                        v.id
                    )))
                }
            }
        }
        for s in self.source.iter().chain(&self.target_labeled).chain(&self.test) {
            if s.class_label.is_none() {
                return Err(Error::Validation(format!("sample {} needs a class label", s.id)));
            }
        }
        Ok(())
    }
}

/// Partitions samples into `S`, `S_v`, `T`, `T_l` and `test`.
///
/// Labeled real target samples form the pool: `k_labels_per_class` of each
/// class go to `T_l` (seeded shuffle), then `test_fraction` of what is left
/// becomes `test` and the remainder becomes `T` with labels stripped.
/// Target samples that arrive unlabeled go straight to `T`.
pub fn build_splits(
    samples: Vec<Sample>,
    k_labels_per_class: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitBundle> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::Validation(format!(
            "test_fraction must be in [0, 1], got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bundle = SplitBundle::default();
    let mut pool: BTreeMap<usize, Vec<Sample>> = BTreeMap::new();
    let mut unlabeled_target = Vec::new();
    let mut classes = BTreeSet::new();

    for s in samples {
        match (s.domain, s.origin, s.class_label) {
            (Domain::Source, _, None) => return Err(Error::Validation(format!("source sample {} has no label", s.id))),
            (Domain::Source, Origin::Real, Some(c)) => {
                classes.insert(c);
                bundle.source.push(s);
            }
            (Domain::Source, Origin::Virtual, Some(_)) => bundle.virtual_source.push(s),
            (Domain::Target, _, Some(c)) => {
                classes.insert(c);
                pool.entry(c).or_default().push(s);
            }
            (Domain::Target, _, None) => unlabeled_target.push(s),
        }
    }

    if k_labels_per_class > 0 {
        let short: Vec<String> = classes
            .iter()
            .map(|c| (c, pool.get(c).map_or(0, Vec::len)))
            .filter(|&(_, n)| n < k_labels_per_class)
            .map(|(c, n)| format!("class {c}: {n}"))
            .collect();
        if !short.is_empty() {
            return Err(Error::Validation(format!(
                "need {k_labels_per_class} labeled target samples per class; short: {}",
                short.join(", ")
            )));
        }
    }

    let mut rest = Vec::new();
    for (_, mut members) in pool {
        members.shuffle(&mut rng);
        let tail = members.split_off(k_labels_per_class.min(members.len()));
        bundle.target_labeled.extend(members);
        rest.extend(tail);
    }
    rest.shuffle(&mut rng);
    let n_test = (test_fraction * rest.len() as f64).round() as usize;
    let train = rest.split_off(n_test);
    bundle.test = rest;
    for mut s in train.into_iter().chain(unlabeled_target) {
        bundle.withheld_labels.push(s.class_label.take());
        bundle.target.push(s);
    }
    bundle.validate()?;
    Ok(bundle)
}

/// Virtual views rendered from one gallery image of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub gallery_id: String,
    pub views: Vec<VirtualView>,
}

/// Adds synthesized views to `S_v`, each labeled like its gallery image.
pub fn attach_virtual(mut bundle: SplitBundle, view_sets: &[ViewSet]) -> Result<SplitBundle> {
    for set in view_sets {
        let gallery = bundle
            .source
            .iter()
            .find(|s| s.id == set.gallery_id)
            .ok_or_else(|| Error::Validation(format!("views reference {} which is not in S", set.gallery_id)))?;
        let label = gallery.class_label;
        let new: Vec<Sample> = set
            .views
            .iter()
            .map(|v| Sample {
                id: virtual_id(&set.gallery_id, v.pose.yaw, v.pose.pitch),
                input: SampleInput::Image(v.image.clone()),
                class_label: label,
                domain: Domain::Source,
                origin: Origin::Virtual,
                derived_from: Some(set.gallery_id.clone()),
            })
            .collect();
        bundle.virtual_source.extend(new);
    }
    bundle.validate()?;
    Ok(bundle)
}

/// `<stem>_yaw<y>_pitch<p>`, the naming used for virtual images.
pub fn virtual_id(gallery_id: &str, yaw: f64, pitch: f64) -> String {
    let stem = gallery_id.strip_suffix(".pgm").unwrap_or(gallery_id);
    format!("{stem}_yaw{yaw}_pitch{pitch}")
}
