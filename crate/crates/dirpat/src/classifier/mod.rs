//! Multiclass classification of feature vectors: one-vs-one linear SVMs
//! trained by a deterministic primal subgradient schedule, plus a chi-square
//! nearest-neighbor baseline.

mod knn;
mod svm;

pub use knn::{chi_square_distance, knn_predict};
pub use svm::{train_ovo_svm, LinearModel, OvoSvmModel, Standardizer, SvmConfig};
