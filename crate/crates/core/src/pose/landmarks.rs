//! Nine-point facial landmark sets in 2D (pixels) and 3D (model units).
//!
//! Point order, for both sets: outer corner of the left eye, inner corner of
//! the left eye, inner corner of the right eye, outer corner of the right
//! eye, nose tip, left and right nose wing, left and right mouth corner
//! ("left" meaning smaller model x).

use std::path::Path;

use crate::error::{Error, Result};

pub const NUM_LANDMARKS: usize = 9;

/// Generic face shape shipped with the crate, one `x y z` line per point.
/// Model axes: x to the face's right, y up, z out of the face toward the
/// viewer.
pub const BUNDLED_MODEL: &str = include_str!("../../assets/face_model_9.txt");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkSet2D {
    pub points: [[f64; 2]; NUM_LANDMARKS],
}

impl LandmarkSet2D {
    pub fn new(points: [[f64; 2]; NUM_LANDMARKS]) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite landmark coordinate".into()));
        }
        Ok(Self { points })
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        if coords.len() != 2 * NUM_LANDMARKS {
            return Err(Error::dim("landmark coordinates", 2 * NUM_LANDMARKS, coords.len()));
        }
        let mut points = [[0.0; 2]; NUM_LANDMARKS];
        for (p, c) in points.iter_mut().zip(coords.chunks_exact(2)) {
            *p = [c[0], c[1]];
        }
        Self::new(points)
    }

    /// Whether every point lies inside the image grown by 10% on each side.
    pub fn within_margin(&self, width: usize, height: usize) -> bool {
        let (w, h) = (width as f64, height as f64);
        self.points
            .iter()
            .all(|&[x, y]| x >= -0.1 * w && x <= 1.1 * w && y >= -0.1 * h && y <= 1.1 * h)
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let mut points = self.points;
        for p in &mut points {
            p[0] += dx;
            p[1] += dy;
        }
        Self { points }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandmarkModel3D {
    points: [[f64; 3]; NUM_LANDMARKS],
}

impl LandmarkModel3D {
    /// Centers the points at their centroid and rejects shapes that
    /// collapse to a line or a point.
    pub fn new(points: [[f64; 3]; NUM_LANDMARKS]) -> Result<Self> {
        if points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite model coordinate".into()));
        }
        let n = NUM_LANDMARKS as f64;
        let mut centroid = [0.0; 3];
        for p in &points {
            for k in 0..3 {
                centroid[k] += p[k] / n;
            }
        }
        let mut centered = points;
        for p in &mut centered {
            for k in 0..3 {
                p[k] -= centroid[k];
            }
        }
        let m = nalgebra::DMatrix::from_fn(NUM_LANDMARKS, 3, |i, j| centered[i][j]);
        let sv = m.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-9 * top.max(1.0)).count();
        if rank < 2 {
            return Err(Error::Validation(format!(
                "3D landmark model is degenerate (rank {rank}); points are collinear"
            )));
        }
        Ok(Self { points: centered })
    }

    pub(crate) fn from_centered(points: [[f64; 3]; NUM_LANDMARKS]) -> Self {
        Self { points }
    }

    pub fn points(&self) -> &[[f64; 3]; NUM_LANDMARKS] {
        &self.points
    }

    /// Parses nine whitespace-separated `x y z` lines. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut points = Vec::with_capacity(NUM_LANDMARKS);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let vals: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Validation(format!("model line {}: {e}", lineno + 1)))?;
            if vals.len() != 3 {
                return Err(Error::Validation(format!(
                    "model line {}: expected 3 values, got {}",
                    lineno + 1,
                    vals.len()
                )));
            }
            points.push([vals[0], vals[1], vals[2]]);
        }
        let points: [[f64; 3]; NUM_LANDMARKS] = points
            .try_into()
            .map_err(|v: Vec<_>| Error::Validation(format!("model needs {NUM_LANDMARKS} points, got {}", v.len())))?;
        Self::new(points)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text).map_err(|e| Error::Ingestion {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn bundled() -> Self {
        Self::parse(BUNDLED_MODEL).expect("bundled model is valid")
    }

    pub fn to_text(&self) -> String {
        self.points
            .iter()
            .map(|p| format!("{} {} {}\n", p[0], p[1], p[2]))
            .collect()
    }
}

/// One row of a landmark CSV: `image_name, x1, y1, ..., x9, y9`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkRecord {
    pub image_name: String,
    pub landmarks: LandmarkSet2D,
}

/// Reads a headerless landmark CSV. A first row whose second field is not a
/// number is treated as a header and skipped.
pub fn read_landmark_csv(path: &Path) -> Result<Vec<LandmarkRecord>> {
    let ingest = |message: String| Error::Ingestion {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| ingest(e.to_string()))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| ingest(e.to_string()))?;
        if i == 0 && row.get(1).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if row.len() != 1 + 2 * NUM_LANDMARKS {
            return Err(ingest(format!(
                "row {}: expected {} fields, got {}",
                i + 1,
                1 + 2 * NUM_LANDMARKS,
                row.len()
            )));
        }
        let coords: Vec<f64> = row
            .iter()
            .skip(1)
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| ingest(format!("row {}: {e}", i + 1)))?;
        out.push(LandmarkRecord {
            image_name: row[0].to_string(),
            landmarks: LandmarkSet2D::from_slice(&coords).map_err(|e| ingest(e.to_string()))?,
        });
    }
    Ok(out)
}

pub fn write_landmark_csv(path: &Path, records: &[LandmarkRecord]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(|e| Error::io(path, e.into()))?;
    for r in records {
        let mut fields = vec![r.image_name.clone()];
        for p in &r.landmarks.points {
            fields.push(p[0].to_string());
            fields.push(p[1].to_string());
        }
        writer.write_record(&fields).map_err(|e| Error::io(path, e.into()))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}
