//! Per-pixel code map encoders: the RETRAIN descriptor plus the LBP,
//! CS-LBP, LDP, and LDN baselines it is compared against.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::compass::{Direction, ResponseStack, DIRECTION_COUNT};
use crate::error::{Error, Result};
use crate::imaging::GrayImage;

/// Descriptor identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Retrain,
    Lbp,
    CsLbp,
    Ldp,
    Ldn,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Retrain,
        Method::Lbp,
        Method::CsLbp,
        Method::Ldp,
        Method::Ldn,
    ];

    /// Exclusive upper bound on code values produced by this method.
    pub fn code_count(self) -> u16 {
        match self {
            Method::Retrain => 64,        // 8 primary x 8 secondary directions
            Method::Lbp => 256,           // 8-bit neighborhood sign word
            Method::CsLbp => 16,          // 4 center-symmetric comparisons
            Method::Ldp => 56,            // 8 choose 3 top-direction sets
            Method::Ldn => 56,            // 8 * 7 ordered (max, min) pairs
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Retrain => "RETRAIN",
            Method::Lbp => "LBP",
            Method::CsLbp => "CSLBP",
            Method::Ldp => "LDP",
            Method::Ldn => "LDN",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            Method::Retrain => 0,
            Method::Lbp => 1,
            Method::CsLbp => 2,
            Method::Ldp => 3,
            Method::Ldn => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Method> {
        Method::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Method> {
        match s.to_ascii_uppercase().as_str() {
            "RETRAIN" => Ok(Method::Retrain),
            "LBP" => Ok(Method::Lbp),
            "CSLBP" | "CS-LBP" => Ok(Method::CsLbp),
            "LDP" => Ok(Method::Ldp),
            "LDN" => Ok(Method::Ldn),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Image-sized grid of descriptor codes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    width: usize,
    height: usize,
    codes: Vec<u16>,
    code_count: u16,
    method: Method,
}

impl CodeMap {
    pub(crate) fn new(width: usize, height: usize, codes: Vec<u16>, method: Method) -> Self {
        let code_count = method.code_count();
        debug_assert_eq!(codes.len(), width * height);
        debug_assert!(codes.iter().all(|&c| c < code_count));
        Self {
            width,
            height,
            codes,
            code_count,
            method,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u16] {
        &self.codes
    }

    #[inline]
    pub fn code(&self, row: usize, col: usize) -> u16 {
        debug_assert!(row < self.height && col < self.width);
        self.codes[row * self.width + col]
    }

    pub fn code_count(&self) -> u16 {
        self.code_count
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Renders the codes as a grayscale image, scaling each code by
    /// floor(255 / (code_count - 1)) so the full range stays visible.
    pub fn to_visualization(&self) -> GrayImage {
        let scale = 255 / (self.code_count as u32 - 1);
        let pixels = self.codes.iter().map(|&c| (c as u32 * scale) as u8).collect();
        GrayImage::from_pixels(self.width, self.height, pixels)
    }

    /// Writes the code map in the DPCM binary format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(24 + self.codes.len() * 2);
        out.extend_from_slice(CODEMAP_MAGIC);
        out.extend_from_slice(&(self.width as u32).to_le_bytes());
        out.extend_from_slice(&(self.height as u32).to_le_bytes());
        out.extend_from_slice(&self.code_count.to_le_bytes());
        out.push(self.method.tag());
        for code in &self.codes {
            out.extend_from_slice(&code.to_le_bytes());
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads a code map written by [`CodeMap::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<CodeMap> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let corrupt = |msg: &str| Error::CorruptImage(format!("{}: {msg}", path.display()));
        if data.len() < 19 || &data[..8] != CODEMAP_MAGIC {
            return Err(corrupt("missing DPCM0001 header"));
        }
        let width = u32::from_le_bytes(data[8..12].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(data[12..16].try_into().unwrap()) as usize;
        let code_count = u16::from_le_bytes(data[16..18].try_into().unwrap());
        let method = Method::from_tag(data[18]).ok_or_else(|| corrupt("unknown method tag"))?;
        if method.code_count() != code_count {
            return Err(corrupt("code count does not match method"));
        }
        let body = &data[19..];
        let expect = width
            .checked_mul(height)
            .ok_or_else(|| corrupt("dimension overflow"))?;
        if body.len() != expect * 2 {
            return Err(corrupt("payload length does not match dimensions"));
        }
        let codes: Vec<u16> = body
            .chunks_exact(2)
            .map(|b| u16::from_le_bytes([b[0], b[1]]))
            .collect();
        if codes.iter().any(|&c| c >= code_count) {
            return Err(corrupt("code value out of range"));
        }
        Ok(CodeMap {
            width,
            height,
            codes,
            code_count,
            method,
        })
    }
}

const CODEMAP_MAGIC: &[u8; 8] = b"DPCM0001";

fn check_encoder_size(img: &GrayImage) -> Result<()> {
    if img.width() < 5 || img.height() < 5 {
        return Err(Error::ImageTooSmall {
            width: img.width(),
            height: img.height(),
            min_width: 5,
            min_height: 5,
        });
    }
    Ok(())
}

/// Encodes an image with the requested descriptor.
pub fn encode(img: &GrayImage, method: Method) -> Result<CodeMap> {
    match method {
        Method::Retrain => encode_retrain(img),
        baseline => encode_baseline(img, baseline),
    }
}

/// RETRAIN: six-bit code 8 * primary + secondary per pixel.
pub fn encode_retrain(img: &GrayImage) -> Result<CodeMap> {
    check_encoder_size(img)?;
    let stack = ResponseStack::from_image(img)?;
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let p = stack.primary_direction_unchecked(row, col).index() as u16;
            let s = stack.secondary_direction_unchecked(row, col).index() as u16;
            codes.push(8 * p + s);
        }
    }
    Ok(CodeMap::new(w, h, codes, Method::Retrain))
}

/// One of the comparison descriptors (LBP, CS-LBP, LDP, LDN).
pub fn encode_baseline(img: &GrayImage, method: Method) -> Result<CodeMap> {
    check_encoder_size(img)?;
    match method {
        Method::Retrain => Err(Error::UnknownMethod(
            "RETRAIN is not a baseline method".into(),
        )),
        Method::Lbp => Ok(encode_lbp(img)),
        Method::CsLbp => Ok(encode_cslbp(img)),
        Method::Ldp => Ok(encode_ldp(img)),
        Method::Ldn => Ok(encode_ldn(img)),
    }
}

/// LBP: bit k set when the neighbor in direction k is >= the center pixel.
fn encode_lbp(img: &GrayImage) -> CodeMap {
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let center = img.pixel(row, col);
            let mut code = 0u16;
            for dir in Direction::ALL {
                let (dr, dc) = dir.offset();
                let neighbor = img.pixel_clamped(row as isize + dr, col as isize + dc);
                if neighbor >= center {
                    code |= 1 << dir.index();
                }
            }
            codes.push(code);
        }
    }
    CodeMap::new(w, h, codes, Method::Lbp)
}

/// Comparison threshold for CS-LBP.
pub const CSLBP_THRESHOLD: i32 = 1;

/// CS-LBP: bit k set when the direction-k neighbor exceeds the opposite
/// neighbor by more than the threshold.
fn encode_cslbp(img: &GrayImage) -> CodeMap {
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let mut code = 0u16;
            for k in 0..4 {
                let (dr, dc) = Direction::from_index(k).offset();
                let first = img.pixel_clamped(row as isize + dr, col as isize + dc) as i32;
                let second = img.pixel_clamped(row as isize - dr, col as isize - dc) as i32;
                if first > second + CSLBP_THRESHOLD {
                    code |= 1 << k;
                }
            }
            codes.push(code);
        }
    }
    CodeMap::new(w, h, codes, Method::CsLbp)
}

/// Number of top directions kept by LDP.
pub const LDP_TOP_K: usize = 3;

/// Lexicographic rank of the 3-subset {a < b < c} of {0..7}, in [0, 55].
fn subset3_rank(a: usize, b: usize, c: usize) -> u16 {
    debug_assert!(a < b && b < c && c < DIRECTION_COUNT);
    let choose2 = |n: usize| n * (n.saturating_sub(1)) / 2;
    let mut rank = 0;
    for x in 0..a {
        rank += choose2(DIRECTION_COUNT - 1 - x);
    }
    for y in a + 1..b {
        rank += DIRECTION_COUNT - 1 - y;
    }
    rank += c - b - 1;
    rank as u16
}

/// LDP: rank the compass magnitudes, keep the top three directions, and
/// number the resulting 3-subset by lexicographic rank.
fn encode_ldp(img: &GrayImage) -> CodeMap {
    let stack = ResponseStack::from_image(img).expect("size checked by caller");
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let mut order: [usize; DIRECTION_COUNT] = [0, 1, 2, 3, 4, 5, 6, 7];
            let mags: Vec<i64> = Direction::ALL
                .iter()
                .map(|&d| (stack.response(d, row, col) as i64).abs())
                .collect();
            // Sort by magnitude descending, index ascending on ties.
            order.sort_by(|&x, &y| mags[y].cmp(&mags[x]).then(x.cmp(&y)));
            let mut top = [0usize; LDP_TOP_K];
            top.copy_from_slice(&order[..LDP_TOP_K]);
            top.sort_unstable();
            codes.push(subset3_rank(top[0], top[1], top[2]));
        }
    }
    CodeMap::new(w, h, codes, Method::Ldp)
}

/// Dense rank of the ordered pair (i, j), i != j, in [0, 55].
fn pair_rank(i: usize, j: usize) -> u16 {
    debug_assert!(i != j && i < DIRECTION_COUNT && j < DIRECTION_COUNT);
    (i * 7 + if j < i { j } else { j - 1 }) as u16
}

/// LDN: pair the strongest positive response direction with the strongest
/// negative one (signed argmax and argmin, ties to the lowest index; the
/// argmin skips the argmax index so the pair is always distinct).
fn encode_ldn(img: &GrayImage) -> CodeMap {
    let stack = ResponseStack::from_image(img).expect("size checked by caller");
    let (w, h) = (img.width(), img.height());
    let mut codes = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let responses: Vec<i32> = Direction::ALL
                .iter()
                .map(|&d| stack.response(d, row, col))
                .collect();
            let mut max_idx = 0;
            for i in 1..DIRECTION_COUNT {
                if responses[i] > responses[max_idx] {
                    max_idx = i;
                }
            }
            let mut min_idx = usize::MAX;
            for i in 0..DIRECTION_COUNT {
                if i != max_idx && (min_idx == usize::MAX || responses[i] < responses[min_idx]) {
                    min_idx = i;
                }
            }
            codes.push(pair_rank(max_idx, min_idx));
        }
    }
    CodeMap::new(w, h, codes, Method::Ldn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::compass::compass_masks;
    use proptest::prelude::*;

    fn step5x5() -> GrayImage {
        GrayImage::from_fn(5, 5, |_, col| if col < 2 { 0 } else { 100 })
    }

    #[test]
    fn method_strings_round_trip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!("retrain".parse::<Method>().unwrap(), Method::Retrain);
        assert!(matches!(
            "SIFT".parse::<Method>(),
            Err(Error::UnknownMethod(_))
        ));
    }

    #[test]
    fn constant_image_codes() {
        let img = GrayImage::from_fn(8, 8, |_, _| 77);
        assert!(encode_retrain(&img).unwrap().codes().iter().all(|&c| c == 0));
        assert!(encode_baseline(&img, Method::Lbp)
            .unwrap()
            .codes()
            .iter()
            .all(|&c| c == 255));
        assert!(encode_baseline(&img, Method::CsLbp)
            .unwrap()
            .codes()
            .iter()
            .all(|&c| c == 0));
        assert!(encode_baseline(&img, Method::Ldp)
            .unwrap()
            .codes()
            .iter()
            .all(|&c| c == 0));
        assert!(encode_baseline(&img, Method::Ldn)
            .unwrap()
            .codes()
            .iter()
            .all(|&c| c == 0));
    }

    #[test]
    fn step_image_center_code_is_35() {
        // Primary West (4), secondary NorthWest (3): 8 * 4 + 3 = 35.
        let map = encode_retrain(&step5x5()).unwrap();
        assert_eq!(map.code(2, 2), 35);
    }

    #[test]
    fn retrain_matches_composed_compass_ops() {
        let img = GrayImage::from_fn(11, 9, |r, c| ((r * 67 + c * 23 + r * c * 3) % 256) as u8);
        let map = encode_retrain(&img).unwrap();
        let stack = ResponseStack::from_image(&img).unwrap();
        for row in 0..img.height() {
            for col in 0..img.width() {
                let p = stack.primary_direction(row, col).unwrap().index() as u16;
                let s = stack.secondary_direction(row, col).unwrap().index() as u16;
                assert_eq!(map.code(row, col), 8 * p + s);
            }
        }
    }

    /// Naive per-pixel RETRAIN oracle: no shared response stack, every value
    /// recomputed from replicate-clamped pixel reads.
    fn oracle_retrain_code(img: &GrayImage, row: usize, col: usize) -> u16 {
        let masks = compass_masks();
        let patch_response = |cr: isize, cc: isize, dir: usize| -> i64 {
            let mut sum = 0i64;
            for dr in -1isize..=1 {
                for dc in -1isize..=1 {
                    sum += masks[dir].weight(dr, dc) as i64
                        * img.pixel_clamped(cr + dr, cc + dc) as i64;
                }
            }
            sum
        };
        let argmax_abs = |vals: [i64; 8]| -> usize {
            let mut best = 0;
            for i in 1..8 {
                if vals[i].abs() > vals[best].abs() {
                    best = i;
                }
            }
            best
        };
        let mut local = [0i64; 8];
        for (dir, slot) in local.iter_mut().enumerate() {
            *slot = patch_response(row as isize, col as isize, dir);
        }
        let p = argmax_abs(local);
        let mut extended = [0i64; 8];
        for (dir, slot) in extended.iter_mut().enumerate() {
            let (dr, dc) = Direction::from_index(dir).offset();
            let nr = (row as isize + dr).clamp(0, img.height() as isize - 1);
            let nc = (col as isize + dc).clamp(0, img.width() as isize - 1);
            *slot = patch_response(nr, nc, dir);
        }
        let s = argmax_abs(extended);
        (8 * p + s) as u16
    }

    #[test]
    fn retrain_matches_naive_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..40 {
            let img = GrayImage::from_fn(8, 8, |_, _| rng.gen());
            let map = encode_retrain(&img).unwrap();
            for row in 0..8 {
                for col in 0..8 {
                    assert_eq!(map.code(row, col), oracle_retrain_code(&img, row, col));
                }
            }
        }
    }

    #[test]
    fn subset3_rank_is_the_lexicographic_enumeration() {
        let mut expected = 0u16;
        for a in 0..8 {
            for b in a + 1..8 {
                for c in b + 1..8 {
                    assert_eq!(subset3_rank(a, b, c), expected, "{{{a},{b},{c}}}");
                    expected += 1;
                }
            }
        }
        assert_eq!(expected, 56);
        assert_eq!(subset3_rank(0, 1, 2), 0);
        assert_eq!(subset3_rank(0, 1, 3), 1);
        assert_eq!(subset3_rank(5, 6, 7), 55);
    }

    #[test]
    fn pair_rank_is_dense_and_bijective() {
        let mut seen = [false; 56];
        for i in 0..8 {
            for j in 0..8 {
                if i == j {
                    continue;
                }
                let r = pair_rank(i, j) as usize;
                assert!(r < 56);
                assert!(!seen[r], "({i},{j}) collides");
                seen[r] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn code_bounds_hold_for_every_method() {
        let img = GrayImage::from_fn(16, 12, |r, c| ((r * 91 + c * 53) % 256) as u8);
        for method in Method::ALL {
            let map = encode(&img, method).unwrap();
            assert_eq!((map.width(), map.height()), (16, 12));
            assert_eq!(map.code_count(), method.code_count());
            assert!(map.codes().iter().all(|&c| c < map.code_count()));
        }
    }

    #[test]
    fn small_images_rejected_by_every_encoder() {
        let img = GrayImage::from_fn(4, 4, |_, _| 0);
        for method in Method::ALL {
            assert!(matches!(
                encode(&img, method),
                Err(Error::ImageTooSmall { .. })
            ));
        }
    }

    #[test]
    fn gain_offset_invariance_of_directional_codes() {
        let img = GrayImage::from_fn(10, 10, |r, c| ((r * 17 + c * 29) % 61) as u8);
        let mapped = GrayImage::from_fn(10, 10, |r, c| 3 * img.pixel(r, c) + 10);
        for method in [Method::Retrain, Method::Ldp, Method::Ldn] {
            assert_eq!(
                encode(&img, method).unwrap().codes(),
                encode(&mapped, method).unwrap().codes(),
                "{method}"
            );
        }
    }

    #[test]
    fn monotone_remap_invariance_of_lbp() {
        let img = GrayImage::from_fn(10, 10, |r, c| ((r * 37 + c * 13) % 101) as u8);
        // Strictly increasing lookup: f(v) = v + floor(v / 2).
        let mapped = GrayImage::from_fn(10, 10, |r, c| {
            let v = img.pixel(r, c) as u16;
            (v + v / 2) as u8
        });
        assert_eq!(
            encode(&img, Method::Lbp).unwrap().codes(),
            encode(&mapped, Method::Lbp).unwrap().codes()
        );
        // CS-LBP thresholds intensity gaps, so offsets are the safe remap.
        let offset = GrayImage::from_fn(10, 10, |r, c| img.pixel(r, c) + 50);
        assert_eq!(
            encode(&img, Method::CsLbp).unwrap().codes(),
            encode(&offset, Method::CsLbp).unwrap().codes()
        );
    }

    #[test]
    fn visualization_scales_codes() {
        let map = encode_retrain(&step5x5()).unwrap();
        let vis = map.to_visualization();
        // floor(255 / 63) = 4 per code step.
        assert_eq!(vis.pixel(2, 2), 35 * 4);
        let flat = encode_retrain(&GrayImage::from_fn(5, 5, |_, _| 9)).unwrap();
        assert!(flat.to_visualization().pixels().iter().all(|&p| p == 0));
    }

    #[test]
    fn codemap_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.dpcm");
        let map = encode_retrain(&step5x5()).unwrap();
        map.save(&path).unwrap();
        assert_eq!(CodeMap::load(&path).unwrap(), map);
    }

    #[test]
    fn codemap_load_rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.dpcm");
        std::fs::write(&path, b"not a code map at all").unwrap();
        assert!(matches!(
            CodeMap::load(&path),
            Err(Error::CorruptImage(_))
        ));
    }

    proptest! {
        // The composed encoder and the naive oracle agree everywhere.
        #[test]
        fn oracle_equivalence_on_random_images(
            pixels in proptest::collection::vec(any::<u8>(), 64)
        ) {
            let img = GrayImage::from_pixels(8, 8, pixels);
            let map = encode_retrain(&img).unwrap();
            for row in 0..8 {
                for col in 0..8 {
                    prop_assert_eq!(map.code(row, col), oracle_retrain_code(&img, row, col));
                }
            }
        }
    }
}
