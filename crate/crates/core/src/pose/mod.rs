//! Landmark-driven pose synthesis: least-squares affine camera fit between
//! nine 2D landmarks and a 3D landmark model, model rotation, reprojection
//! and piecewise-affine image warping.

mod camera;
mod image;
mod landmarks;
mod rotation;
mod synth;
mod warp;

pub use camera::{fit_camera, project, rms_residual, AffineCamera};
pub use image::{decode_pgm, encode_pgm, read_pgm, write_pgm, GrayImage, MIN_IMAGE_SIDE};
pub use landmarks::{
    read_landmark_csv, write_landmark_csv, LandmarkModel3D, LandmarkRecord, LandmarkSet2D, BUNDLED_MODEL, NUM_LANDMARKS,
};
pub use rotation::{
    determinant, matmul3, orthonormality_error, rot_x, rot_y, rot_z, rotate_model, rotate_point, PoseSpec, Rotation,
};
pub use synth::{synthesize_views, test_card, SkippedView, SynthesisOutput, VirtualView, DEFAULT_FIT_THRESHOLD};
pub use warp::{border_anchors, triangulate, warp_piecewise_affine, WarpOutput, WarpWarning, WarpWarningKind};
