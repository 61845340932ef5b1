//! # dirpat
//!
//! Directional-pattern texture descriptors for facial expression
//! recognition, built around the RETRAIN encoder: eight compass masks
//! produce per-direction edge responses, the strongest response indices in
//! the local and extended neighborhood form a six-bit code per pixel, and
//! region histograms of those codes feed a one-vs-one linear SVM.
//!
//! The crate also ships the LBP, CS-LBP, LDP, and LDN baselines the
//! descriptor is usually compared against, a chi-square nearest-neighbor
//! classifier, a stratified cross-validation harness with confusion-matrix
//! reports, and a deterministic synthetic-grating dataset generator for
//! benchmarking without licensed face databases.
//!
//! ```
//! use dirpat::encoders::{encode_retrain, Method};
//! use dirpat::features::{region_histograms, Normalization, RegionGrid};
//! use dirpat::imaging::GrayImage;
//!
//! let img = GrayImage::from_fn(32, 32, |r, c| ((r * 7 + c * 13) % 256) as u8);
//! let codes = encode_retrain(&img).unwrap();
//! assert_eq!(codes.code_count(), 64);
//! let features =
//!     region_histograms(&codes, RegionGrid::new(4, 4), Normalization::Raw).unwrap();
//! assert_eq!(features.len(), 4 * 4 * 64);
//! ```

pub mod classifier;
pub mod compass;
pub mod encoders;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod imaging;

#[cfg(test)]
pub(crate) mod test_util;

pub use error::{Error, Result};
