//! Grayscale images with `f64` intensities and binary PGM (P5) I/O.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

pub const MIN_IMAGE_SIDE: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width < MIN_IMAGE_SIDE || height < MIN_IMAGE_SIDE {
            return Err(Error::Validation(format!(
                "image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(Error::dim("image pixels", width * height, pixels.len()));
        }
        if let Some(i) = pixels.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Validation(format!(
                "pixel {i} intensity {} outside [0, 1]",
                pixels[i]
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    /// Builds an image from a function of pixel coordinates.
    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Bilinear interpolation with edge replication outside the image.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        let max_x = (self.width - 1) as f64;
        let max_y = (self.height - 1) as f64;
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (xi, yi) = (x0 as usize, y0 as usize);
        let xi1 = (xi + 1).min(self.width - 1);
        let yi1 = (yi + 1).min(self.height - 1);
        let p00 = self.get(xi, yi);
        let p10 = self.get(xi1, yi);
        let p01 = self.get(xi, yi1);
        let p11 = self.get(xi1, yi1);
        (1.0 - fx) * (1.0 - fy) * p00 + fx * (1.0 - fy) * p10 + (1.0 - fx) * fy * p01 + fx * fy * p11
    }

    /// Largest absolute per-pixel difference; `None` when sizes differ.
    pub fn max_abs_diff(&self, other: &GrayImage) -> Option<f64> {
        if self.width != other.width || self.height != other.height {
            return None;
        }
        Some(
            self.pixels
                .iter()
                .zip(&other.pixels)
                .fold(0.0, |m, (a, b)| m.max((a - b).abs())),
        )
    }

    pub(crate) fn from_raw_unchecked(width: usize, height: usize, pixels: Vec<f64>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self { width, height, pixels }
    }
}

/// Parses a binary PGM. Intensities are divided by the file's maxval.
pub fn decode_pgm(bytes: &[u8]) -> std::result::Result<GrayImage, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("bad magic number, expected P5".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // whitespace and comments between header tokens
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err("truncated header".into()),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        if start == pos {
            return Err(format!("expected a number in header at byte {start}"));
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .expect("ascii digits")
            .parse()
            .map_err(|e| format!("header number: {e}"))?;
    }
    let [width, height, maxval] = fields;
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}, expected 1..=255"));
    }
    // exactly one whitespace byte ends the header
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err("missing whitespace after maxval".into());
    }
    pos += 1;
    let need = width * height;
    let data = &bytes[pos..];
    if data.len() < need {
        return Err(format!("expected {need} pixel bytes, found {}", data.len()));
    }
    let scale = maxval as f64;
    let pixels = data[..need].iter().map(|&b| (b as f64 / scale).min(1.0)).collect();
    GrayImage::new(width, height, pixels).map_err(|e| e.to_string())
}

/// Quantizes to 8 bits by rounding.
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend(
        image
            .pixels
            .iter()
            .map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8),
    );
    out
}

pub fn read_pgm(path: &Path) -> Result<GrayImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::Ingestion {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    decode_pgm(&bytes).map_err(|message| Error::Ingestion {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write_pgm(path: &Path, image: &GrayImage) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_pgm(image)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_out_of_range_images() {
        assert!(GrayImage::filled(15, 20, 0.5).is_err());
        assert!(GrayImage::filled(16, 16, 1.5).is_err());
        assert!(GrayImage::new(16, 16, vec![0.0; 10]).is_err());
    }

    #[test]
    fn pgm_roundtrip_quantizes_by_rounding() {
        let img = GrayImage::from_fn(16, 17, |x, y| ((x * 17 + y) % 256) as f64 / 255.0).unwrap();
        let back = decode_pgm(&encode_pgm(&img)).unwrap();
        assert_eq!(back.max_abs_diff(&img), Some(0.0));

        let odd = GrayImage::filled(16, 16, 0.3).unwrap();
        let back = decode_pgm(&encode_pgm(&odd)).unwrap();
        assert_eq!(back.get(0, 0), 77.0 / 255.0); // 76.5 rounds up
    }

    #[test]
    fn header_comments_and_maxval() {
        let mut bytes = b"P5\n# made by hand\n16 16\n# max\n100\n".to_vec();
        bytes.extend(std::iter::repeat_n(50u8, 256));
        let img = decode_pgm(&bytes).unwrap();
        assert_eq!(img.get(3, 3), 0.5);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode_pgm(b"P2\n16 16\n255\n").unwrap_err().contains("magic"));
        assert!(decode_pgm(b"P5\n16 16\n255\n\x00").is_err());
        assert!(decode_pgm(b"P5\n16 16\n999\n").is_err());
        assert!(decode_pgm(b"P5\n16").is_err());
    }

    #[test]
    fn bilinear_hits_pixels_exactly_and_replicates_edges() {
        let img = GrayImage::from_fn(16, 16, |x, y| (x as f64 + 16.0 * y as f64) / 256.0).unwrap();
        assert_eq!(img.sample_bilinear(3.0, 4.0), img.get(3, 4));
        assert_eq!(img.sample_bilinear(-5.0, 0.0), img.get(0, 0));
        assert_eq!(img.sample_bilinear(40.0, 40.0), img.get(15, 15));
        let mid = img.sample_bilinear(3.5, 4.0);
        assert!((mid - (img.get(3, 4) + img.get(4, 4)) / 2.0).abs() < 1e-15);
    }
}
