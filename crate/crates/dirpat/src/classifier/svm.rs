//! Soft-margin linear SVMs trained one-vs-one with a Pegasos-style
//! deterministic subgradient schedule.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::Method;
use crate::error::{Error, Result};
use crate::features::{FeatureMeta, FeatureVector, Normalization, RegionGrid};

/// Training knobs. Defaults: C = 1, 100 epochs, seed 42.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 100,
            seed: 42,
        }
    }
}

/// One pairwise hyperplane. `class_pair` holds indices into the model's
/// class list, lower index first; a positive decision votes for the second.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub class_pair: (usize, usize),
}

impl LinearModel {
    fn decision(&self, x: &[f64]) -> f64 {
        let dot: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        dot + self.bias
    }
}

/// Per-dimension standardization fitted on training data and stored in the
/// model so prediction applies the identical transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(vectors: &[&FeatureVector]) -> Standardizer {
        let n = vectors.len() as f64;
        let dim = vectors[0].len();
        let mut mean = vec![0.0; dim];
        for v in vectors {
            for (m, x) in mean.iter_mut().zip(v.values()) {
                *m += x;
            }
        }
        for m in mean.iter_mut() {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(v.values()).zip(&mean) {
                let d = x - m;
                *s += d * d;
            }
        }
        let scale = var
            .iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    fn apply(&self, values: &[f64]) -> Vec<f64> {
        values
            .iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((x, m), s)| (x - m) / s)
            .collect()
    }
}

/// One-vs-one multiclass linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvoSvmModel {
    classes: Vec<String>,
    feature_meta: FeatureMeta,
    config: SvmConfig,
    standardizer: Standardizer,
    models: Vec<LinearModel>,
}

/// Trains one pairwise hyperplane per unordered class pair.
///
/// Features are standardized per dimension (statistics from this training
/// set only; the transform is stored in the model). Each pair trains by
/// primal subgradient descent on hinge loss with L2 regularization
/// lambda = 1 / (C n), step 1/(lambda t), sample order reshuffled every
/// epoch by a generator seeded with `seed + pair_index`, so results are
/// identical regardless of how many pairs train concurrently.
pub fn train_ovo_svm(
    features: &[FeatureVector],
    labels: &[String],
    config: &SvmConfig,
) -> Result<OvoSvmModel> {
    if features.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if features.len() != labels.len() {
        return Err(Error::InvalidConfig(format!(
            "{} feature vectors but {} labels",
            features.len(),
            labels.len()
        )));
    }
    if config.c <= 0.0 || config.epochs == 0 {
        return Err(Error::InvalidConfig(
            "C must be positive and epochs at least 1".into(),
        ));
    }
    let meta = *features[0].meta();
    let dim = features[0].len();
    for (i, f) in features.iter().enumerate() {
        if *f.meta() != meta || f.len() != dim {
            return Err(Error::InconsistentFeatureMeta(format!(
                "vector {i} does not match the first vector's layout"
            )));
        }
    }

    // Classes in first-appearance order.
    let mut classes: Vec<String> = Vec::new();
    let class_of: Vec<usize> = labels
        .iter()
        .map(|label| {
            if let Some(pos) = classes.iter().position(|c| c == label) {
                pos
            } else {
                classes.push(label.clone());
                classes.len() - 1
            }
        })
        .collect();
    if classes.len() < 2 {
        return Err(Error::SingleClass);
    }

    let standardizer = Standardizer::fit(&features.iter().collect::<Vec<_>>());
    let standardized: Vec<Vec<f64>> = features
        .iter()
        .map(|f| standardizer.apply(f.values()))
        .collect();

    let pairs: Vec<(usize, usize)> = (0..classes.len())
        .flat_map(|a| (a + 1..classes.len()).map(move |b| (a, b)))
        .collect();

    let models: Vec<LinearModel> = pairs
        .par_iter()
        .enumerate()
        .map(|(pair_index, &(a, b))| {
            let members: Vec<usize> = (0..features.len())
                .filter(|&i| class_of[i] == a || class_of[i] == b)
                .collect();
            let seed = config.seed.wrapping_add(pair_index as u64);
            train_pair(&standardized, &class_of, &members, (a, b), config, seed)
        })
        .collect();

    Ok(OvoSvmModel {
        classes,
        feature_meta: meta,
        config: *config,
        standardizer,
        models,
    })
}

fn train_pair(
    standardized: &[Vec<f64>],
    class_of: &[usize],
    members: &[usize],
    (a, b): (usize, usize),
    config: &SvmConfig,
    seed: u64,
) -> LinearModel {
    let dim = standardized[0].len();
    let n = members.len() as f64;
    let lambda = 1.0 / (config.c * n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = members.to_vec();
    let mut weights = vec![0.0f64; dim];
    let mut bias = 0.0f64;
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let step = 1.0 / (lambda * t as f64);
            let x = &standardized[i];
            let y = if class_of[i] == b { 1.0 } else { -1.0 };
            let margin = y * (weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + bias);
            let shrink = 1.0 - 1.0 / t as f64;
            if margin < 1.0 {
                for (w, v) in weights.iter_mut().zip(x) {
                    *w = shrink * *w + step * y * v;
                }
                bias += step * y;
            } else {
                for w in weights.iter_mut() {
                    *w *= shrink;
                }
            }
        }
    }
    LinearModel {
        weights,
        bias,
        class_pair: (a, b),
    }
}

impl OvoSvmModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn feature_meta(&self) -> &FeatureMeta {
        &self.feature_meta
    }

    pub fn config(&self) -> &SvmConfig {
        &self.config
    }

    pub fn pairwise_models(&self) -> &[LinearModel] {
        &self.models
    }

    /// Majority vote over all pairwise hyperplanes. A positive decision
    /// votes for the pair's higher class, zero or negative for the lower;
    /// vote ties resolve to the class appearing first in [`Self::classes`].
    pub fn predict(&self, feature: &FeatureVector) -> Result<&str> {
        if *feature.meta() != self.feature_meta || feature.len() != self.standardizer.mean.len() {
            return Err(Error::InconsistentFeatureMeta(
                "query vector does not match the model's feature layout".into(),
            ));
        }
        let x = self.standardizer.apply(feature.values());
        let mut votes = vec![0usize; self.classes.len()];
        for model in &self.models {
            let (a, b) = model.class_pair;
            if model.decision(&x) > 0.0 {
                votes[b] += 1;
            } else {
                votes[a] += 1;
            }
        }
        let mut best = 0;
        for k in 1..votes.len() {
            if votes[k] > votes[best] {
                best = k;
            }
        }
        Ok(&self.classes[best])
    }

    /// Serializes to the DPSVM single-file binary format.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::new();
        out.extend_from_slice(MODEL_MAGIC);
        write_u32(&mut out, self.classes.len() as u32);
        for class in &self.classes {
            write_bytes(&mut out, class.as_bytes());
        }
        out.extend_from_slice(&self.config.c.to_le_bytes());
        out.extend_from_slice(&(self.config.epochs as u64).to_le_bytes());
        out.extend_from_slice(&self.config.seed.to_le_bytes());
        out.push(self.feature_meta.method.tag());
        write_u32(&mut out, self.feature_meta.grid.rows as u32);
        write_u32(&mut out, self.feature_meta.grid.cols as u32);
        out.push(self.feature_meta.norm.tag());
        out.extend_from_slice(&self.feature_meta.code_count.to_le_bytes());
        write_u32(&mut out, self.standardizer.mean.len() as u32);
        for v in self.standardizer.mean.iter().chain(&self.standardizer.scale) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        write_u32(&mut out, self.models.len() as u32);
        for model in &self.models {
            write_u32(&mut out, model.class_pair.0 as u32);
            write_u32(&mut out, model.class_pair.1 as u32);
            out.extend_from_slice(&model.bias.to_le_bytes());
            write_u32(&mut out, model.weights.len() as u32);
            for w in &model.weights {
                out.extend_from_slice(&w.to_le_bytes());
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Loads a model written by [`OvoSvmModel::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<OvoSvmModel> {
        let path = path.as_ref();
        let data = fs::read(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::FileNotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let mut r = ByteReader::new(&data);
        if r.take(8)? != MODEL_MAGIC {
            return Err(Error::CorruptModel("missing DPSVM001 header".into()));
        }
        let class_count = r.u32()? as usize;
        let mut classes = Vec::new();
        for _ in 0..class_count {
            classes.push(
                String::from_utf8(r.bytes()?.to_vec())
                    .map_err(|_| Error::CorruptModel("class name is not UTF-8".into()))?,
            );
        }
        let config = SvmConfig {
            c: r.f64()?,
            epochs: r.u64()? as usize,
            seed: r.u64()?,
        };
        let method = Method::from_tag(r.take(1)?[0])
            .ok_or_else(|| Error::CorruptModel("unknown method tag".into()))?;
        let grid = RegionGrid {
            rows: r.u32()? as usize,
            cols: r.u32()? as usize,
        };
        let norm = Normalization::from_tag(r.take(1)?[0])
            .ok_or_else(|| Error::CorruptModel("unknown normalization tag".into()))?;
        let code_count = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
        if grid.rows == 0 || grid.cols == 0 {
            return Err(Error::CorruptModel("zero grid dimension".into()));
        }
        let feature_meta = FeatureMeta {
            method,
            grid,
            norm,
            code_count,
        };
        let dim = r.u32()? as usize;
        let mean = r.f64_vec(dim)?;
        let scale = r.f64_vec(dim)?;
        let model_count = r.u32()? as usize;
        if class_count < 2 || model_count != class_count * (class_count - 1) / 2 {
            return Err(Error::CorruptModel(format!(
                "{model_count} pairwise models for {class_count} classes"
            )));
        }
        let mut models = Vec::new();
        for _ in 0..model_count {
            let a = r.u32()? as usize;
            let b = r.u32()? as usize;
            let bias = r.f64()?;
            let wlen = r.u32()? as usize;
            if a >= b || b >= class_count || wlen != dim {
                return Err(Error::CorruptModel("inconsistent pairwise model".into()));
            }
            models.push(LinearModel {
                weights: r.f64_vec(wlen)?,
                bias,
                class_pair: (a, b),
            });
        }
        if !r.at_end() {
            return Err(Error::CorruptModel("trailing bytes after model".into()));
        }
        Ok(OvoSvmModel {
            classes,
            feature_meta,
            config,
            standardizer: Standardizer { mean, scale },
            models,
        })
    }

    /// Lossless JSON export for inspection.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(json: &str) -> Result<OvoSvmModel> {
        serde_json::from_str(json).map_err(|e| Error::CorruptModel(format!("bad model JSON: {e}")))
    }
}

const MODEL_MAGIC: &[u8; 8] = b"DPSVM001";

fn write_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn write_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    write_u32(out, bytes.len() as u32);
    out.extend_from_slice(bytes);
}

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.data.len() {
            return Err(Error::CorruptModel("file truncated".into()));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64_vec(&mut self, n: usize) -> Result<Vec<f64>> {
        // Validate before `collect` reserves n slots from an untrusted count.
        if n.checked_mul(8).is_none_or(|bytes| self.pos + bytes > self.data.len()) {
            return Err(Error::CorruptModel("file truncated".into()));
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    fn at_end(&self) -> bool {
        self.pos == self.data.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_util::raw_features;
    use rand::Rng;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn separable_pair_classifies_training_points() {
        let features = raw_features(&[vec![-1.0], vec![1.0]]);
        let model = train_ovo_svm(
            &features,
            &labels(&["A", "B"]),
            &SvmConfig::default(),
        )
        .unwrap();
        assert_eq!(model.predict(&features[0]).unwrap(), "A");
        assert_eq!(model.predict(&features[1]).unwrap(), "B");
    }

    #[test]
    fn three_classes_give_three_pairwise_models() {
        let features = raw_features(&[vec![0.0, 0.0], vec![4.0, 0.0], vec![0.0, 4.0]]);
        let model = train_ovo_svm(
            &features,
            &labels(&["A", "B", "C"]),
            &SvmConfig::default(),
        )
        .unwrap();
        assert_eq!(model.pairwise_models().len(), 3);
        assert_eq!(
            model
                .pairwise_models()
                .iter()
                .map(|m| m.class_pair)
                .collect::<Vec<_>>(),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }

    /// Two well-separated 2-D clusters, 20 points each, fixed seed.
    fn gaussian_ish_clusters() -> (Vec<FeatureVector>, Vec<String>) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut rows = Vec::new();
        let mut names = Vec::new();
        for (center, label) in [([0.0, 0.0], "low"), ([10.0, 10.0], "high")] {
            for _ in 0..20 {
                rows.push(vec![
                    center[0] + rng.gen_range(-1.0..1.0),
                    center[1] + rng.gen_range(-1.0..1.0),
                ]);
                names.push(label.to_string());
            }
        }
        (raw_features(&rows), names)
    }

    #[test]
    fn separable_clusters_reach_full_training_accuracy() {
        let (features, names) = gaussian_ish_clusters();
        let model = train_ovo_svm(&features, &names, &SvmConfig::default()).unwrap();
        for (f, want) in features.iter().zip(&names) {
            assert_eq!(model.predict(f).unwrap(), want);
        }
    }

    #[test]
    fn vote_tie_resolves_to_first_class() {
        // Hand-built cyclic hyperplanes: A-B votes B, B-C votes C, A-C votes
        // A, a perfect 1-1-1 tie that must resolve to the first class.
        let features = raw_features(&[vec![0.0, 0.0]]);
        let meta = *features[0].meta();
        let cyclic = |a_c_bias: f64| OvoSvmModel {
            classes: vec!["A".into(), "B".into(), "C".into()],
            feature_meta: meta,
            config: SvmConfig::default(),
            standardizer: Standardizer {
                mean: vec![0.0, 0.0],
                scale: vec![1.0, 1.0],
            },
            models: vec![
                LinearModel { weights: vec![0.0, 0.0], bias: 1.0, class_pair: (0, 1) },
                LinearModel { weights: vec![0.0, 0.0], bias: a_c_bias, class_pair: (0, 2) },
                LinearModel { weights: vec![0.0, 0.0], bias: 1.0, class_pair: (1, 2) },
            ],
        };
        let model = cyclic(-1.0);
        assert_eq!(model.predict(&features[0]).unwrap(), "A");

        // Zero decisions count for the pair's lower class.
        let zero_decision = cyclic(0.0);
        assert_eq!(zero_decision.predict(&features[0]).unwrap(), "A");

        // Prediction does not depend on pairwise model storage order.
        let mut reordered = model.clone();
        reordered.models.reverse();
        assert_eq!(reordered.predict(&features[0]).unwrap(), "A");

        // Plain majority: A-B -> A, A-C -> A, B-C -> B gives votes 2-1-0.
        let mut majority = model.clone();
        majority.models[0].bias = -1.0;
        majority.models[1].bias = -1.0;
        majority.models[2].bias = -1.0;
        assert_eq!(majority.predict(&features[0]).unwrap(), "A");
    }

    #[test]
    fn single_class_and_empty_inputs_are_rejected() {
        let features = raw_features(&[vec![1.0], vec![2.0]]);
        assert!(matches!(
            train_ovo_svm(&features, &labels(&["A", "A"]), &SvmConfig::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            train_ovo_svm(&[], &[], &SvmConfig::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn mismatched_meta_is_rejected_in_training_and_prediction() {
        let mut features = raw_features(&[vec![1.0], vec![2.0]]);
        let other = FeatureVector::new(
            vec![3.0],
            FeatureMeta {
                method: Method::Lbp,
                grid: RegionGrid::new(1, 1),
                norm: Normalization::Raw,
                code_count: 256,
            },
        );
        features.push(other.clone());
        assert!(matches!(
            train_ovo_svm(&features, &labels(&["A", "B", "A"]), &SvmConfig::default()),
            Err(Error::InconsistentFeatureMeta(_))
        ));

        let model = train_ovo_svm(
            &raw_features(&[vec![-1.0], vec![1.0]]),
            &labels(&["A", "B"]),
            &SvmConfig::default(),
        )
        .unwrap();
        assert!(matches!(
            model.predict(&other),
            Err(Error::InconsistentFeatureMeta(_))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (features, names) = gaussian_ish_clusters();
        let a = train_ovo_svm(&features, &names, &SvmConfig::default()).unwrap();
        let b = train_ovo_svm(&features, &names, &SvmConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binary_and_json_round_trips_predict_identically() {
        let (features, names) = gaussian_ish_clusters();
        let model = train_ovo_svm(&features, &names, &SvmConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.dpsvm");
        model.save(&path).unwrap();
        let reloaded = OvoSvmModel::load(&path).unwrap();
        assert_eq!(model, reloaded);

        let from_json = OvoSvmModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, from_json);

        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let meta = *features[0].meta();
        for _ in 0..100 {
            let q = FeatureVector::new(
                vec![rng.gen_range(-5.0..15.0), rng.gen_range(-5.0..15.0)],
                meta,
            );
            assert_eq!(model.predict(&q).unwrap(), reloaded.predict(&q).unwrap());
            assert_eq!(model.predict(&q).unwrap(), from_json.predict(&q).unwrap());
        }
    }

    #[test]
    fn corrupt_model_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.dpsvm");
        std::fs::write(&path, b"DPSVM001 but then garbage").unwrap();
        assert!(matches!(
            OvoSvmModel::load(&path),
            Err(Error::CorruptModel(_))
        ));
    }
}
