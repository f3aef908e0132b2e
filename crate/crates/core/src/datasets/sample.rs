use serde::{Deserialize, Serialize};

use crate::pose::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Source,
    Target,
}

impl Domain {
    /// Class index used by the domain discriminator.
    pub fn index(self) -> usize {
        match self {
            Domain::Source => 0,
            Domain::Target => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Source => "source",
            Domain::Target => "target",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Real,
    Virtual,
}

impl Origin {
    pub fn as_str(self) -> &'static str {
        match self {
            Origin::Real => "real",
            Origin::Virtual => "virtual",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleInput {
    Features(Vec<f64>),
    Image(GrayImage),
}

impl SampleInput {
    pub fn dim(&self) -> usize {
        match self {
            SampleInput::Features(v) => v.len(),
            SampleInput::Image(img) => img.width() * img.height(),
        }
    }

    /// Feature vector view; images are flattened row-major.
    pub fn features(&self) -> &[f64] {
        match self {
            SampleInput::Features(v) => v,
            SampleInput::Image(img) => img.pixels(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    /// Unique identity within a dataset.
    pub id: String,
    pub input: SampleInput,
    pub class_label: Option<usize>,
    pub domain: Domain,
    pub origin: Origin,
    /// For virtual samples, the id of the gallery sample they were made from.
    pub derived_from: Option<String>,
}

impl Sample {
    pub fn real(id: impl Into<String>, input: SampleInput, class_label: Option<usize>, domain: Domain) -> Self {
        Self {
            id: id.into(),
            input,
            class_label,
            domain,
            origin: Origin::Real,
            derived_from: None,
        }
    }

    pub fn features(&self) -> &[f64] {
        self.input.features()
    }
}
