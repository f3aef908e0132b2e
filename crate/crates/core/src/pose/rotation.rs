use serde::{Deserialize, Serialize};

use super::landmarks::{LandmarkModel3D, NUM_LANDMARKS};
use crate::error::{Error, Result};

/// Head pose in degrees. Yaw turns about the model y axis (up), pitch
/// about x, roll about z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoseSpec {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

pub type Rotation = [[f64; 3]; 3];

impl PoseSpec {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Result<Self> {
        for (name, v) in [("yaw", yaw), ("pitch", pitch), ("roll", roll)] {
            if !(-90.0..=90.0).contains(&v) {
                return Err(Error::Validation(format!("{name} {v} outside [-90, 90] degrees")));
            }
        }
        Ok(Self { yaw, pitch, roll })
    }

    pub fn frontal() -> Self {
        Self {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    pub fn yaw_only(yaw: f64) -> Result<Self> {
        Self::new(yaw, 0.0, 0.0)
    }

    /// Yaw sweep at ±15, ±30, ±45 degrees with zero pitch and roll.
    pub fn default_grid() -> Vec<Self> {
        [-45.0, -30.0, -15.0, 15.0, 30.0, 45.0]
            .into_iter()
            .map(|y| Self::yaw_only(y).expect("in range"))
            .collect()
    }

    /// `Rz(roll) · Rx(pitch) · Ry(yaw)`, right-handed.
    pub fn rotation(&self) -> Rotation {
        matmul3(
            &matmul3(&rot_z(self.roll.to_radians()), &rot_x(self.pitch.to_radians())),
            &rot_y(self.yaw.to_radians()),
        )
    }
}

pub fn rot_x(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]]
}

pub fn rot_y(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

pub fn rot_z(a: f64) -> Rotation {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

pub fn matmul3(a: &Rotation, b: &Rotation) -> Rotation {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

#[inline]
pub fn rotate_point(r: &Rotation, p: [f64; 3]) -> [f64; 3] {
    [
        r[0][0] * p[0] + r[0][1] * p[1] + r[0][2] * p[2],
        r[1][0] * p[0] + r[1][1] * p[1] + r[1][2] * p[2],
        r[2][0] * p[0] + r[2][1] * p[1] + r[2][2] * p[2],
    ]
}

/// Rotates the model about its centroid (the origin).
pub fn rotate_model(model: &LandmarkModel3D, pose: &PoseSpec) -> LandmarkModel3D {
    let r = pose.rotation();
    let mut points = [[0.0; 3]; NUM_LANDMARKS];
    for (out, p) in points.iter_mut().zip(model.points()) {
        *out = rotate_point(&r, *p);
    }
    LandmarkModel3D::from_centered(points)
}

/// `‖RᵀR − I‖∞` (largest absolute entry).
pub fn orthonormality_error(r: &Rotation) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            let dot = r[0][i] * r[0][j] + r[1][i] * r[1][j] + r[2][i] * r[2][j];
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot - target).abs());
        }
    }
    worst
}

pub fn determinant(r: &Rotation) -> f64 {
    r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1]) - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
        + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0])
}
