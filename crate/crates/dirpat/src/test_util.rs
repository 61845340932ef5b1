//! Helpers shared by unit tests.

use crate::encoders::Method;
use crate::features::{FeatureMeta, FeatureVector, Normalization, RegionGrid};

/// Bare feature vectors for classifier tests, bypassing image encoding.
pub(crate) fn raw_features(rows: &[Vec<f64>]) -> Vec<FeatureVector> {
    rows.iter()
        .map(|values| {
            FeatureVector::new(
                values.clone(),
                FeatureMeta {
                    method: Method::Retrain,
                    grid: RegionGrid::new(1, 1),
                    norm: Normalization::Raw,
                    code_count: 64,
                },
            )
        })
        .collect()
}
