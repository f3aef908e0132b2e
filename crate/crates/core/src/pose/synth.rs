//! Virtual posed views from a single gallery image.
//!
//! A camera is fitted between the detected landmarks and the 3D model. For
//! each requested pose the model is rotated and reprojected with that camera,
//! and the image is warped from the frontal reprojection to the posed one
//! while the eight border anchors stay fixed.

use super::camera::{fit_camera, project, AffineCamera};
use super::image::GrayImage;
use super::landmarks::{LandmarkModel3D, LandmarkSet2D};
use super::rotation::{rotate_model, PoseSpec};
use super::warp::{border_anchors, warp_piecewise_affine, WarpWarning};
use crate::error::{Error, Result};

pub const DEFAULT_FIT_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualView {
    pub image: GrayImage,
    pub landmarks: LandmarkSet2D,
    pub pose: PoseSpec,
    pub warnings: Vec<WarpWarning>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SkippedView {
    pub pose: PoseSpec,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisOutput {
    pub camera: AffineCamera,
    pub rms_residual: f64,
    pub views: Vec<VirtualView>,
    pub skipped: Vec<SkippedView>,
}

fn with_anchors(landmarks: &LandmarkSet2D, anchors: &[[f64; 2]; 8]) -> Vec<[f64; 2]> {
    landmarks.points.iter().chain(anchors).copied().collect()
}

/// Renders one view per pose. Poses whose landmarks leave the image margin
/// are skipped and reported rather than failing the whole call.
pub fn synthesize_views(
    image: &GrayImage,
    landmarks: &LandmarkSet2D,
    model: &LandmarkModel3D,
    poses: &[PoseSpec],
    fit_threshold: f64,
) -> Result<SynthesisOutput> {
    let (w, h) = (image.width(), image.height());
    if !landmarks.within_margin(w, h) {
        return Err(Error::Validation(format!(
            "input landmarks fall outside the {w}x{h} image margin"
        )));
    }
    let (camera, rms_residual) = fit_camera(landmarks, model)?;
    if rms_residual > fit_threshold {
        return Err(Error::Fit(format!(
            "rms residual {rms_residual:.3} px exceeds threshold {fit_threshold} px"
        )));
    }
    let anchors = border_anchors(w, h);
    let frontal = project(&camera, model);
    let src = with_anchors(&frontal, &anchors);

    let mut views = Vec::with_capacity(poses.len());
    let mut skipped = Vec::new();
    for &pose in poses {
        let posed = project(&camera, &rotate_model(model, &pose));
        if !posed.within_margin(w, h) {
            skipped.push(SkippedView {
                pose,
                reason: "projected landmarks outside image margin".into(),
            });
            continue;
        }
        let warped = match warp_piecewise_affine(image, &src, &with_anchors(&posed, &anchors)) {
            Ok(w) => w,
            Err(e) => {
                skipped.push(SkippedView {
                    pose,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        views.push(VirtualView {
            image: warped.image,
            landmarks: posed,
            pose,
            warnings: warped.warnings,
        });
    }
    Ok(SynthesisOutput {
        camera,
        rms_residual,
        views,
        skipped,
    })
}

/// Synthetic face-like card: bright ellipse with dark blobs at each of the
/// model's landmarks as seen frontally by a camera centred in the image.
/// Returns the card and its exact landmarks.
pub fn test_card(width: usize, height: usize, model: &LandmarkModel3D) -> Result<(GrayImage, LandmarkSet2D)> {
    let scale = 0.35 * width.min(height) as f64 / 50.0;
    let camera = AffineCamera::new([
        [scale, 0.0, 0.0, (width as f64 - 1.0) / 2.0],
        [0.0, -scale, 0.0, (height as f64 - 1.0) / 2.0],
    ])?;
    let landmarks = project(&camera, model);
    let (cx, cy) = ((width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0);
    let (rx, ry) = (0.38 * width as f64, 0.46 * height as f64);
    let blob = 1.2 + 0.02 * width as f64;
    let image = GrayImage::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64, y as f64);
        let e = ((fx - cx) / rx).powi(2) + ((fy - cy) / ry).powi(2);
        let mut v: f64 = if e <= 1.0 { 0.8 } else { 0.15 };
        for p in &landmarks.points {
            let d2 = (fx - p[0]).powi(2) + (fy - p[1]).powi(2);
            v -= 0.6 * (-d2 / (2.0 * blob * blob)).exp();
        }
        v.clamp(0.0, 1.0)
    })?;
    Ok((image, landmarks))
}
