//! Grayscale image representation, PGM/PNG loading, border handling, and the
//! 3x3 cross-correlation primitive every descriptor is built on.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Creates an image from row-major pixel data.
    ///
    /// Panics if `pixels.len() != width * height` or either dimension is zero.
    pub fn from_pixels(width: usize, height: usize, pixels: Vec<u8>) -> Self {
        assert!(width >= 1 && height >= 1, "image dimensions must be positive");
        assert_eq!(
            pixels.len(),
            width * height,
            "pixel buffer length must equal width * height"
        );
        Self {
            width,
            height,
            pixels,
        }
    }

    /// Builds an image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(row, col));
            }
        }
        Self::from_pixels(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    /// Pixel value at (row, col). Panics if out of bounds.
    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> u8 {
        debug_assert!(row < self.height && col < self.width);
        self.pixels[row * self.width + col]
    }

    /// Pixel value with coordinates clamped to the image rectangle, which is
    /// equivalent to replicate padding.
    #[inline]
    pub fn pixel_clamped(&self, row: isize, col: isize) -> u8 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.pixels[r * self.width + c]
    }

    /// Returns a copy grown by `margin` pixels on every side; new border
    /// pixels replicate the nearest edge pixel.
    pub fn pad_replicate(&self, margin: usize) -> GrayImage {
        if margin == 0 {
            return self.clone();
        }
        let m = margin as isize;
        GrayImage::from_fn(self.width + 2 * margin, self.height + 2 * margin, |row, col| {
            self.pixel_clamped(row as isize - m, col as isize - m)
        })
    }

    /// Loads a grayscale image from a PGM (P2/P5) or PNG file.
    ///
    /// Color inputs are reduced with integer BT.601 luma weights,
    /// `round(0.299 R + 0.587 G + 0.114 B)`.
    pub fn load(path: impl AsRef<Path>) -> Result<GrayImage> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        if data.starts_with(b"P2") || data.starts_with(b"P5") {
            decode_pgm(&data)
        } else if data.starts_with(&PNG_SIGNATURE) {
            decode_png(&data)
        } else {
            Err(Error::UnsupportedFormat(format!(
                "{}: not a PGM (P2/P5) or PNG file",
                path.display()
            )))
        }
    }

    /// Writes the image as a binary PGM (P5, maxval 255).
    pub fn save_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(self.pixels.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend_from_slice(&self.pixels);
        fs::write(path, out)?;
        Ok(())
    }
}

/// Integer BT.601 luma: round(0.299 R + 0.587 G + 0.114 B).
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    ((299 * r as u32 + 587 * g as u32 + 114 * b as u32 + 500) / 1000) as u8
}

const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

fn decode_png(data: &[u8]) -> Result<GrayImage> {
    let decoded = image::load_from_memory_with_format(data, image::ImageFormat::Png)
        .map_err(|e| Error::CorruptImage(format!("PNG decode failed: {e}")))?;
    let (width, height) = (decoded.width() as usize, decoded.height() as usize);
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage("PNG has zero dimension".into()));
    }
    let pixels = match decoded {
        image::DynamicImage::ImageLuma8(gray) => gray.into_raw(),
        other => other
            .into_rgb8()
            .pixels()
            .map(|p| luma_bt601(p.0[0], p.0[1], p.0[2]))
            .collect(),
    };
    Ok(GrayImage::from_pixels(width, height, pixels))
}

fn decode_pgm(data: &[u8]) -> Result<GrayImage> {
    let mut tokens = PnmTokens::new(data);
    let magic = tokens.next_token()?;
    let binary = match magic {
        b"P5" => true,
        b"P2" => false,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "unknown PNM magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let width = tokens.next_usize("width")?;
    let height = tokens.next_usize("height")?;
    let maxval = tokens.next_usize("maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::CorruptImage(format!(
            "PGM has zero dimension ({width}x{height})"
        )));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!(
            "PGM maxval must be 255, got {maxval}"
        )));
    }
    let count = width
        .checked_mul(height)
        .ok_or_else(|| Error::CorruptImage("PGM dimensions overflow".into()))?;

    let pixels = if binary {
        // One whitespace byte separates the header from the raster.
        let start = tokens.skip_single_whitespace()?;
        let payload = &data[start..];
        if payload.len() < count {
            return Err(Error::CorruptImage(format!(
                "P5 payload holds {} bytes, header promises {count}",
                payload.len()
            )));
        }
        if payload.len() > count {
            return Err(Error::CorruptImage(format!(
                "P5 payload holds {} trailing bytes past the promised {count}",
                payload.len() - count
            )));
        }
        payload.to_vec()
    } else {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = tokens.next_usize("pixel")?;
            if v > 255 {
                return Err(Error::CorruptImage(format!("P2 pixel value {v} exceeds 255")));
            }
            pixels.push(v as u8);
        }
        if !tokens.at_end() {
            return Err(Error::CorruptImage("P2 has trailing data past the raster".into()));
        }
        pixels
    };
    Ok(GrayImage::from_pixels(width, height, pixels))
}

/// Whitespace/comment-aware token reader for PNM headers.
struct PnmTokens<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> PnmTokens<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn skip_filler(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_token(&mut self) -> Result<&'a [u8]> {
        self.skip_filler();
        if self.pos >= self.data.len() {
            return Err(Error::CorruptImage("PGM header ended early".into()));
        }
        let start = self.pos;
        while self.pos < self.data.len()
            && !self.data[self.pos].is_ascii_whitespace()
            && self.data[self.pos] != b'#'
        {
            self.pos += 1;
        }
        Ok(&self.data[start..self.pos])
    }

    fn next_usize(&mut self, what: &str) -> Result<usize> {
        let token = self.next_token()?;
        std::str::from_utf8(token)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| {
                Error::CorruptImage(format!(
                    "PGM {what} is not a number: {:?}",
                    String::from_utf8_lossy(token)
                ))
            })
    }

    /// After the maxval token a single whitespace byte precedes the P5 raster.
    fn skip_single_whitespace(&mut self) -> Result<usize> {
        if self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
            Ok(self.pos + 1)
        } else {
            Err(Error::CorruptImage("P5 raster must follow a single whitespace".into()))
        }
    }

    fn at_end(&mut self) -> bool {
        self.skip_filler();
        self.pos >= self.data.len()
    }
}

/// A 3x3 integer kernel stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Kernel3x3 {
    weights: [i32; 9],
}

impl Kernel3x3 {
    pub const fn new(weights: [i32; 9]) -> Self {
        Self { weights }
    }

    pub fn weights(&self) -> &[i32; 9] {
        &self.weights
    }

    /// Weight at offset (dr, dc), each in {-1, 0, 1}.
    #[inline]
    pub fn weight(&self, dr: isize, dc: isize) -> i32 {
        debug_assert!((-1..=1).contains(&dr) && (-1..=1).contains(&dc));
        self.weights[((dr + 1) * 3 + (dc + 1)) as usize]
    }

    /// Sum of all nine weights; zero for every compass mask, which is what
    /// makes the descriptor codes invariant to additive intensity offsets.
    pub fn weight_sum(&self) -> i32 {
        self.weights.iter().sum()
    }

    /// Rotates the ring of eight outer weights one step counter-clockwise
    /// (a 45-degree kernel rotation); the center weight stays put.
    pub fn rotated_45_ccw(&self) -> Kernel3x3 {
        // Ring positions in clockwise order starting at the top-left cell.
        const RING: [usize; 8] = [0, 1, 2, 5, 8, 7, 6, 3];
        let mut out = self.weights;
        for i in 0..8 {
            out[RING[i]] = self.weights[RING[(i + 1) % 8]];
        }
        Kernel3x3::new(out)
    }

    pub fn rotated_180(&self) -> Kernel3x3 {
        let w = &self.weights;
        Kernel3x3::new([w[8], w[7], w[6], w[5], w[4], w[3], w[2], w[1], w[0]])
    }
}

impl std::fmt::Display for Kernel3x3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for row in 0..3 {
            if row > 0 {
                writeln!(f)?;
            }
            write!(
                f,
                "{} {} {}",
                self.weights[row * 3],
                self.weights[row * 3 + 1],
                self.weights[row * 3 + 2]
            )?;
        }
        Ok(())
    }
}

/// Signed per-pixel responses of a kernel pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseImage {
    width: usize,
    height: usize,
    values: Vec<i32>,
}

impl ResponseImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[i32] {
        &self.values
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> i32 {
        debug_assert!(row < self.height && col < self.width);
        self.values[row * self.width + col]
    }

    /// Value with coordinates clamped to the valid rectangle.
    #[inline]
    pub fn value_clamped(&self, row: isize, col: isize) -> i32 {
        let r = row.clamp(0, self.height as isize - 1) as usize;
        let c = col.clamp(0, self.width as isize - 1) as usize;
        self.values[r * self.width + c]
    }
}

/// Cross-correlates `img` with a 3x3 kernel (no kernel flip), producing the
/// valid region: output is (width-2) x (height-2), entry (i, j) centered on
/// input pixel (i+1, j+1). Callers wanting full-size output replicate-pad by
/// one pixel first.
pub fn correlate3x3(img: &GrayImage, kernel: &Kernel3x3) -> Result<ResponseImage> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min_width: 3,
            min_height: 3,
        });
    }
    let (ow, oh) = (w - 2, h - 2);
    let mut values = Vec::with_capacity(ow * oh);
    let px = img.pixels();
    for row in 1..h - 1 {
        for col in 1..w - 1 {
            let mut sum = 0i32;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    let p = px[(row as isize + dr) as usize * w + (col as isize + dc) as usize];
                    sum += kernel.weight(dr, dc) * p as i32;
                }
            }
            values.push(sum);
        }
    }
    Ok(ResponseImage {
        width: ow,
        height: oh,
        values,
    })
}
