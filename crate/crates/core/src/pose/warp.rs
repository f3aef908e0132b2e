//! Piecewise-affine image warping over a Delaunay triangulation of control
//! points.
//!
//! The triangulation is built on the source points; the same vertex triples
//! are then laid over the destination points. Every output pixel inside a
//! destination triangle is pulled back through that triangle's affine map
//! and sampled bilinearly from the source image.

use spade::{DelaunayTriangulation, Point2, Triangulation};

use super::image::GrayImage;
use crate::error::{Error, Result};

const INSIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarpWarningKind {
    /// Destination triangle has the opposite orientation of its source.
    Flipped,
    /// Destination triangle has (near) zero area and is not rendered.
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WarpWarning {
    pub triangle: [usize; 3],
    pub kind: WarpWarningKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WarpOutput {
    pub image: GrayImage,
    pub warnings: Vec<WarpWarning>,
}

/// The four corners and four edge midpoints of the pixel grid.
pub fn border_anchors(width: usize, height: usize) -> [[f64; 2]; 8] {
    let (w, h) = ((width - 1) as f64, (height - 1) as f64);
    [
        [0.0, 0.0],
        [w / 2.0, 0.0],
        [w, 0.0],
        [w, h / 2.0],
        [w, h],
        [w / 2.0, h],
        [0.0, h],
        [0.0, h / 2.0],
    ]
}

/// Delaunay triangles over `points`, as index triples into `points`.
pub fn triangulate(points: &[[f64; 2]]) -> Result<Vec<[usize; 3]>> {
    let mut tri: DelaunayTriangulation<Point2<f64>> = DelaunayTriangulation::new();
    let mut index_of = Vec::with_capacity(points.len());
    for (i, p) in points.iter().enumerate() {
        if points[..i].contains(p) {
            return Err(Error::Validation(format!("duplicate control point {p:?} at index {i}")));
        }
        let handle = tri
            .insert(Point2::new(p[0], p[1]))
            .map_err(|e| Error::Validation(format!("control point {i}: {e:?}")))?;
        if index_of.len() <= handle.index() {
            index_of.resize(handle.index() + 1, usize::MAX);
        }
        index_of[handle.index()] = i;
    }
    let faces: Vec<[usize; 3]> = tri
        .inner_faces()
        .map(|f| f.vertices().map(|v| index_of[v.fix().index()]))
        .collect();
    if faces.is_empty() {
        return Err(Error::Validation("control points do not span a triangle".into()));
    }
    Ok(faces)
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Pull-back from destination pixel coordinates to source coordinates for
/// one triangle.
#[derive(Debug, Clone, Copy)]
enum PullBack {
    /// All three vertices move by the same offset; sampling stays exact.
    Translation { dx: f64, dy: f64 },
    Affine {
        dst: [[f64; 2]; 3],
        src: [[f64; 2]; 3],
        area: f64,
    },
}

impl PullBack {
    fn new(src: [[f64; 2]; 3], dst: [[f64; 2]; 3]) -> Self {
        let dx = src[0][0] - dst[0][0];
        let dy = src[0][1] - dst[0][1];
        let same_shift = (0..3).all(|k| src[k][0] - dst[k][0] == dx && src[k][1] - dst[k][1] == dy);
        if same_shift {
            PullBack::Translation { dx, dy }
        } else {
            PullBack::Affine {
                dst,
                src,
                area: signed_area(dst[0], dst[1], dst[2]),
            }
        }
    }

    fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            PullBack::Translation { dx, dy } => (x + dx, y + dy),
            PullBack::Affine { dst, src, area } => {
                let [a, b, c] = barycentric(dst, area, [x, y]);
                (
                    a * src[0][0] + b * src[1][0] + c * src[2][0],
                    a * src[0][1] + b * src[1][1] + c * src[2][1],
                )
            }
        }
    }
}

fn barycentric(t: [[f64; 2]; 3], area: f64, p: [f64; 2]) -> [f64; 3] {
    let a = signed_area(p, t[1], t[2]) / area;
    let b = signed_area(t[0], p, t[2]) / area;
    [a, b, 1.0 - a - b]
}

/// Warps `image` so that content at `src[i]` lands at `dst[i]`.
///
/// Pixels outside every destination triangle are extrapolated with the map
/// of the nearest triangle. Source lookups outside the image replicate the
/// edge.
pub fn warp_piecewise_affine(image: &GrayImage, src: &[[f64; 2]], dst: &[[f64; 2]]) -> Result<WarpOutput> {
    if src.len() != dst.len() {
        return Err(Error::dim("warp control points", src.len(), dst.len()));
    }
    if src.iter().chain(dst).flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite control point".into()));
    }
    let triangles = triangulate(src)?;
    let (w, h) = (image.width(), image.height());
    let mut warnings = Vec::new();
    let mut maps = Vec::with_capacity(triangles.len());
    for &t in &triangles {
        let s = t.map(|i| src[i]);
        let d = t.map(|i| dst[i]);
        let src_area = signed_area(s[0], s[1], s[2]);
        let dst_area = signed_area(d[0], d[1], d[2]);
        if dst_area.abs() < 1e-12 {
            warnings.push(WarpWarning {
                triangle: t,
                kind: WarpWarningKind::Degenerate,
            });
            continue;
        }
        if dst_area.signum() != src_area.signum() {
            warnings.push(WarpWarning {
                triangle: t,
                kind: WarpWarningKind::Flipped,
            });
        }
        maps.push((d, dst_area, PullBack::new(s, d)));
    }
    if maps.is_empty() {
        return Err(Error::Validation("every destination triangle is degenerate".into()));
    }

    let mut out = vec![f64::NAN; w * h];
    let mut assigned = vec![false; w * h];
    for (d, area, map) in &maps {
        let min_x = d.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let max_x = d.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max).ceil();
        let min_y = d.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
        let max_y = d.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max).ceil();
        if max_x < 0.0 || max_y < 0.0 {
            continue;
        }
        let max_x = (max_x as usize).min(w - 1);
        let max_y = (max_y as usize).min(h - 1);
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let idx = y * w + x;
                if assigned[idx] {
                    continue;
                }
                let bary = barycentric(*d, *area, [x as f64, y as f64]);
                if bary.iter().all(|&b| b >= -INSIDE_TOL) {
                    let (sx, sy) = map.apply(x as f64, y as f64);
                    out[idx] = image.sample_bilinear(sx, sy);
                    assigned[idx] = true;
                }
            }
        }
    }

    for y in 0..h {
        for x in 0..w {
            let idx = y * w + x;
            if assigned[idx] {
                continue;
            }
            let p = [x as f64, y as f64];
            // least-outside triangle
            let (_, map) = maps
                .iter()
                .map(|(d, area, map)| {
                    let b = barycentric(*d, *area, p);
                    (b[0].min(b[1]).min(b[2]), map)
                })
                .fold((f64::NEG_INFINITY, None), |best, (score, map)| {
                    if score > best.0 {
                        (score, Some(map))
                    } else {
                        best
                    }
                });
            let (sx, sy) = map.expect("at least one triangle").apply(x as f64, y as f64);
            out[idx] = image.sample_bilinear(sx, sy);
        }
    }
    for v in &mut out {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(WarpOutput {
        image: GrayImage::from_raw_unchecked(w, h, out),
        warnings,
    })
}
