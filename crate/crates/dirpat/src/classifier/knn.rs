//! Chi-square nearest-neighbor baseline classifier.

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Additive smoothing term in the chi-square denominator.
pub const CHI_SQUARE_EPSILON: f64 = 1e-10;

/// Chi-square histogram distance: sum of (x - y)^2 / (x + y + epsilon).
pub fn chi_square_distance(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter()
        .zip(y)
        .map(|(a, b)| {
            let d = a - b;
            d * d / (a + b + CHI_SQUARE_EPSILON)
        })
        .sum()
}

/// Majority label among the k chi-square-nearest training vectors.
///
/// Distance ties resolve to the earlier training index, vote ties to the
/// smallest label.
pub fn knn_predict<'a>(
    train: &'a [(FeatureVector, String)],
    query: &FeatureVector,
    k: usize,
) -> Result<&'a str> {
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    if k > train.len() {
        return Err(Error::KTooLarge {
            k,
            size: train.len(),
        });
    }
    for (i, (f, _)) in train.iter().enumerate() {
        if f.meta() != query.meta() || f.len() != query.len() {
            return Err(Error::InconsistentFeatureMeta(format!(
                "training vector {i} does not match the query layout"
            )));
        }
    }
    let mut scored: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, (f, _))| (chi_square_distance(f.values(), query.values()), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut winner: Option<&str> = None;
    let mut best_count = 0;
    for (_, idx) in &scored[..k] {
        let label = train[*idx].1.as_str();
        let count = scored[..k]
            .iter()
            .filter(|(_, j)| train[*j].1 == label)
            .count();
        let better = count > best_count
            || (count == best_count && winner.is_none_or(|w| label < w));
        if better {
            winner = Some(label);
            best_count = count;
        }
    }
    Ok(winner.expect("k >= 1 guarantees a winner"))
}
