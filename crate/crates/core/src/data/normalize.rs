use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Features whose population std falls below this are treated as constant
/// and mapped to zero.
pub const CONSTANT_STD: f64 = 1e-12;

/// Which rows the z-normalization statistics are computed from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    /// Whole dataset, test rows included.
    #[default]
    Global,
    /// Training folds only, applied to validation and test rows.
    TrainOnly,
    /// Features are used as given.
    None,
}

/// Per-feature mean and population standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl NormStats {
    /// Statistics over the given rows, accumulated in utterance-id order.
    pub fn fit(ds: &Dataset, indices: &[usize]) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "z-normalization needs at least 2 utterances, got {}",
                indices.len()
            )));
        }
        let mut idx = indices.to_vec();
        idx.sort_by(|&a, &b| ds.utterances()[a].id.cmp(&ds.utterances()[b].id));
        let n = idx.len() as f64;
        let dim = ds.feature_dim();
        let mut mean = vec![0.0; dim];
        for &i in &idx {
            for (m, v) in mean.iter_mut().zip(&ds.utterances()[i].features) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for &i in &idx {
            for ((s, v), m) in var.iter_mut().zip(&ds.utterances()[i].features).zip(&mean) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Self { mean, std })
    }

    pub fn apply_one(&self, features: &mut [f64]) {
        for ((v, m), s) in features.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if *s < CONSTANT_STD { 0.0 } else { (*v - m) / s };
        }
    }

    /// Normalizes each row of a feature matrix in place.
    pub fn apply_matrix(&self, x: &mut ndarray::Array2<f64>) {
        for mut row in x.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = if *s < CONSTANT_STD { 0.0 } else { (*v - m) / s };
            }
        }
    }

    /// Normalized copy of `ds`; the stats are recorded on the result.
    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        if self.mean.len() != ds.feature_dim() {
            return Err(Error::Shape(format!(
                "stats cover {} features, dataset has {}",
                self.mean.len(),
                ds.feature_dim()
            )));
        }
        let utterances = ds
            .utterances()
            .iter()
            .map(|u| {
                let mut u = u.clone();
                self.apply_one(&mut u.features);
                u
            })
            .collect();
        Ok(Dataset::new(utterances, ds.feature_dim())?.with_normalization(self.clone()))
    }
}

/// Global per-feature z-normalization with population std.
pub fn znormalize(ds: &Dataset) -> Result<(Dataset, NormStats)> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("cannot normalize an empty dataset".into()));
    }
    let all: Vec<usize> = (0..ds.len()).collect();
    let stats = NormStats::fit(ds, &all)?;
    Ok((stats.apply(ds)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{toy_utterance, Emotion};

    fn column_ds(values: &[(f64, f64)]) -> Dataset {
        let utts = values
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| toy_utterance(&format!("u{i}"), "s", Emotion::Sad, vec![a, b]))
            .collect();
        Dataset::new(utts, 2).unwrap()
    }

    #[test]
    fn worked_column_and_constant_column() {
        let ds = column_ds(&[(1.0, 5.0), (2.0, 5.0), (3.0, 5.0)]);
        let (norm, stats) = znormalize(&ds).unwrap();
        let expected = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];
        for (u, e) in norm.utterances().iter().zip(expected) {
            assert!((u.features[0] - e).abs() < 1e-12);
            assert_eq!(u.features[1], 0.0);
        }
        assert!((stats.std[0] - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(norm.normalization().is_some());
    }

    #[test]
    fn idempotent() {
        let ds = column_ds(&[(0.3, -2.0), (7.1, 4.0), (-1.0, 0.5), (2.2, 9.0)]);
        let (once, _) = znormalize(&ds).unwrap();
        let (twice, _) = znormalize(&once).unwrap();
        for (a, b) in once.utterances().iter().zip(twice.utterances()) {
            for (x, y) in a.features.iter().zip(&b.features) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn too_few_rows() {
        let empty = Dataset::new(vec![], 2).unwrap();
        assert!(matches!(znormalize(&empty), Err(Error::EmptyInput(_))));
        let one = column_ds(&[(1.0, 1.0)]);
        assert!(matches!(znormalize(&one), Err(Error::EmptyInput(_))));
    }
}
