use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::Role;

/// The seven rows of the recognition-rate comparison, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentMode {
    SourceOnly,
    #[serde(rename = "source-only-virtual")]
    SourceOnlyPlusVirtual,
    Dan,
    SsppDan,
    SemiDan,
    SemiSsppDan,
    TrainOnTarget,
}

/// A published accuracy quoted for context; not expected to be reproduced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaperReference {
    pub percent: f64,
    pub citation: &'static str,
}

impl ExperimentMode {
    pub const ALL: [ExperimentMode; 7] = [
        ExperimentMode::SourceOnly,
        ExperimentMode::SourceOnlyPlusVirtual,
        ExperimentMode::Dan,
        ExperimentMode::SsppDan,
        ExperimentMode::SemiDan,
        ExperimentMode::SemiSsppDan,
        ExperimentMode::TrainOnTarget,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentMode::SourceOnly => "source-only",
            ExperimentMode::SourceOnlyPlusVirtual => "source-only-virtual",
            ExperimentMode::Dan => "dan",
            ExperimentMode::SsppDan => "sspp-dan",
            ExperimentMode::SemiDan => "semi-dan",
            ExperimentMode::SemiSsppDan => "semi-sspp-dan",
            ExperimentMode::TrainOnTarget => "train-on-target",
        }
    }

    /// Table-style row name.
    pub fn label(self) -> &'static str {
        match self {
            ExperimentMode::SourceOnly => "Source only",
            ExperimentMode::SourceOnlyPlusVirtual => "Source only + virtual",
            ExperimentMode::Dan => "DAN",
            ExperimentMode::SsppDan => "SSPP-DAN",
            ExperimentMode::SemiDan => "Semi-DAN",
            ExperimentMode::SemiSsppDan => "Semi-SSPP-DAN",
            ExperimentMode::TrainOnTarget => "Train on target",
        }
    }

    pub fn formula(self) -> &'static str {
        match self {
            ExperimentMode::SourceOnly => "S",
            ExperimentMode::SourceOnlyPlusVirtual => "S+S_v",
            ExperimentMode::Dan => "S+T",
            ExperimentMode::SsppDan => "S+S_v+T",
            ExperimentMode::SemiDan => "S+T+T_l",
            ExperimentMode::SemiSsppDan => "S+S_v+T+T_l",
            ExperimentMode::TrainOnTarget => "T_l+T",
        }
    }

    /// Sets the mode trains on. `TrainOnTarget` reads `T` only for its
    /// withheld labels, as the fully labeled target pool.
    pub fn required_sets(self) -> &'static [Role] {
        use Role::*;
        match self {
            ExperimentMode::SourceOnly => &[Source],
            ExperimentMode::SourceOnlyPlusVirtual => &[Source, Virtual],
            ExperimentMode::Dan => &[Source, Target],
            ExperimentMode::SsppDan => &[Source, Virtual, Target],
            ExperimentMode::SemiDan => &[Source, Target, TargetLabeled],
            ExperimentMode::SemiSsppDan => &[Source, Virtual, Target, TargetLabeled],
            ExperimentMode::TrainOnTarget => &[TargetLabeled, Target],
        }
    }

    pub fn is_adversarial(self) -> bool {
        !matches!(
            self,
            ExperimentMode::SourceOnly | ExperimentMode::SourceOnlyPlusVirtual | ExperimentMode::TrainOnTarget
        )
    }

    pub fn uses_virtual(self) -> bool {
        self.required_sets().contains(&Role::Virtual)
    }

    pub fn uses_target_labels(self) -> bool {
        self.required_sets().contains(&Role::TargetLabeled)
    }

    pub fn paper_reference(self) -> Option<PaperReference> {
        let percent = match self {
            ExperimentMode::SourceOnly => 39.22,
            ExperimentMode::SourceOnlyPlusVirtual => 37.15,
            ExperimentMode::Dan => 31.11,
            ExperimentMode::SsppDan => 58.53,
            ExperimentMode::SemiDan => 67.28,
            ExperimentMode::SemiSsppDan => 72.08,
            ExperimentMode::TrainOnTarget => 88.31,
        };
        Some(PaperReference {
            percent,
            citation: "EK-LFH, Table 2",
        })
    }
}

impl fmt::Display for ExperimentMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        ExperimentMode::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| {
                let valid: Vec<&str> = ExperimentMode::ALL.iter().map(|m| m.as_str()).collect();
                format!("unknown mode '{s}'; valid modes: {}", valid.join(", "))
            })
    }
}
