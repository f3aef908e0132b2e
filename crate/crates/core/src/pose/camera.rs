//! Affine (weak-perspective) camera fitted to 2D-3D landmark pairs.

use nalgebra::{DMatrix, Matrix2x3};

use super::landmarks::{LandmarkModel3D, LandmarkSet2D, NUM_LANDMARKS};
use crate::error::{Error, Result};

/// Relative singular value threshold used for rank decisions.
const RANK_TOL: f64 = 1e-10;

/// 2x4 matrix `[L | t]` mapping a model point `X` to pixels as `L·X + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineCamera {
    pub matrix: [[f64; 4]; 2],
}

impl AffineCamera {
    pub fn new(matrix: [[f64; 4]; 2]) -> Result<Self> {
        if matrix.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite camera entry".into()));
        }
        Ok(Self { matrix })
    }

    pub fn linear(&self) -> [[f64; 3]; 2] {
        let m = &self.matrix;
        [[m[0][0], m[0][1], m[0][2]], [m[1][0], m[1][1], m[1][2]]]
    }

    pub fn translation(&self) -> [f64; 2] {
        [self.matrix[0][3], self.matrix[1][3]]
    }

    /// Rank of the 2x3 linear part.
    pub fn linear_rank(&self) -> usize {
        let l = self.linear();
        let m = Matrix2x3::new(l[0][0], l[0][1], l[0][2], l[1][0], l[1][1], l[1][2]);
        let sv = m.singular_values();
        let top = sv.max();
        if top == 0.0 {
            return 0;
        }
        sv.iter().filter(|&&s| s > RANK_TOL * top).count()
    }

    #[inline]
    pub fn apply(&self, p: [f64; 3]) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2] + m[0][3],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2] + m[1][3],
        ]
    }

    /// Shifts the translation column.
    pub fn shifted(&self, dx: f64, dy: f64) -> Self {
        let mut matrix = self.matrix;
        matrix[0][3] += dx;
        matrix[1][3] += dy;
        Self { matrix }
    }
}

/// Each 2D point is `L·X + t`.
pub fn project(camera: &AffineCamera, model: &LandmarkModel3D) -> LandmarkSet2D {
    let mut points = [[0.0; 2]; NUM_LANDMARKS];
    for (out, p) in points.iter_mut().zip(model.points()) {
        *out = camera.apply(*p);
    }
    LandmarkSet2D { points }
}

/// Root mean square pixel distance between `camera`'s projection of the
/// model and the observed landmarks.
pub fn rms_residual(camera: &AffineCamera, landmarks: &LandmarkSet2D, model: &LandmarkModel3D) -> f64 {
    let projected = project(camera, model);
    let sq: f64 = projected
        .points
        .iter()
        .zip(&landmarks.points)
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum();
    (sq / NUM_LANDMARKS as f64).sqrt()
}

/// Least-squares camera over the nine correspondences, solved by SVD of
/// the `9x4` design matrix `[X Y Z 1]`. When the model is planar the
/// minimum-norm solution is returned (the out-of-plane column is zero).
pub fn fit_camera(landmarks: &LandmarkSet2D, model: &LandmarkModel3D) -> Result<(AffineCamera, f64)> {
    let design = DMatrix::from_fn(NUM_LANDMARKS, 4, |i, j| if j == 3 { 1.0 } else { model.points()[i][j] });
    let rhs = DMatrix::from_fn(NUM_LANDMARKS, 2, |i, j| landmarks.points[i][j]);
    let svd = design.svd(true, true);
    let top = svd.singular_values.max();
    let rank = svd.singular_values.iter().filter(|&&s| s > RANK_TOL * top).count();
    if rank < 3 {
        return Err(Error::Fit(format!("design matrix has rank {rank}, need at least 3")));
    }
    let solution = svd.solve(&rhs, RANK_TOL * top).map_err(|e| Error::Fit(e.to_string()))?;
    let mut matrix = [[0.0; 4]; 2];
    for (r, row) in matrix.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = solution[(c, r)];
        }
    }
    let camera = AffineCamera::new(matrix).map_err(|e| Error::Fit(e.to_string()))?;
    if camera.linear_rank() < 2 {
        return Err(Error::Fit("fitted linear part is rank deficient".into()));
    }
    let rms = rms_residual(&camera, landmarks, model);
    Ok((camera, rms))
}
