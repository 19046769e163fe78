//! Utterance records, datasets, task labels and the preprocessing that feeds
//! training: normalization, speaker-stratified folds and synthetic corpora.

mod csv_io;
mod folds;
mod normalize;
mod synth;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use csv_io::{load_csv, read_csv, write_csv, write_csv_file};
pub use folds::{make_folds, split_roles, subset_train_folds, FoldPlan, FoldRoles, Stratification};
pub use normalize::{znormalize, NormStats, NormalizationMode, CONSTANT_STD};
pub use synth::{gen_synthetic, SynthConfig, SyntheticPair};

pub const DEFAULT_FEATURE_DIM: usize = 88;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Gender {
    Male,
    Female,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Male, Gender::Female];

    pub fn code(self) -> &'static str {
        match self {
            Gender::Male => "M",
            Gender::Female => "F",
        }
    }
}

impl FromStr for Gender {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "M" => Ok(Gender::Male),
            "F" => Ok(Gender::Female),
            other => Err(format!("unknown gender {other:?} (expected M or F)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Emotion {
    Angry,
    Neutral,
    Sad,
    Happy,
}

impl Emotion {
    pub const ALL: [Emotion; 4] = [Emotion::Angry, Emotion::Neutral, Emotion::Sad, Emotion::Happy];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Angry => "angry",
            Emotion::Neutral => "neutral",
            Emotion::Sad => "sad",
            Emotion::Happy => "happy",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for Emotion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown emotion {s:?} (expected angry, neutral, sad or happy)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Utterance {
    pub id: String,
    pub dataset_id: String,
    pub speaker_id: String,
    pub gender: Gender,
    pub emotion: Emotion,
    pub features: Vec<f64>,
}

/// Which label of an utterance a model is trained to predict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskLabel {
    Emotion,
    Speaker,
    Gender,
}

impl fmt::Display for TaskLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TaskLabel::Emotion => "emotion",
            TaskLabel::Speaker => "speaker",
            TaskLabel::Gender => "gender",
        })
    }
}

/// Ordered class names for a task; a class index is a position in `classes`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVocab {
    pub task: TaskLabel,
    pub classes: Vec<String>,
}

impl LabelVocab {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn index_of(&self, utt: &Utterance) -> Result<usize> {
        match self.task {
            TaskLabel::Emotion => Ok(utt.emotion.index()),
            TaskLabel::Gender => Ok(utt.gender as usize),
            TaskLabel::Speaker => self
                .classes
                .binary_search(&utt.speaker_id)
                .map_err(|_| Error::DegenerateSplit(format!("speaker {} not in vocabulary", utt.speaker_id))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    utterances: Vec<Utterance>,
    feature_dim: usize,
    normalization: Option<NormStats>,
}

impl Dataset {
    pub fn new(utterances: Vec<Utterance>, feature_dim: usize) -> Result<Self> {
        if feature_dim == 0 {
            return Err(Error::InvalidArchitecture("feature_dim must be >= 1".into()));
        }
        let mut seen = HashSet::with_capacity(utterances.len());
        for (i, u) in utterances.iter().enumerate() {
            if u.features.len() != feature_dim {
                return Err(Error::Shape(format!(
                    "utterance {} has {} features, expected {feature_dim}",
                    u.id,
                    u.features.len()
                )));
            }
            if u.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("utterance {} has non-finite features", u.id)));
            }
            if u.speaker_id.is_empty() {
                return Err(Error::DegenerateSplit(format!("utterance {i} has an empty speaker id")));
            }
            if !seen.insert(u.id.as_str()) {
                return Err(Error::DegenerateSplit(format!("duplicate utterance id {}", u.id)));
            }
        }
        Ok(Self {
            utterances,
            feature_dim,
            normalization: None,
        })
    }

    pub fn utterances(&self) -> &[Utterance] {
        &self.utterances
    }

    pub fn len(&self) -> usize {
        self.utterances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.utterances.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn normalization(&self) -> Option<&NormStats> {
        self.normalization.as_ref()
    }

    pub(crate) fn with_normalization(mut self, stats: NormStats) -> Self {
        self.normalization = Some(stats);
        self
    }

    /// Distinct speaker ids, sorted.
    pub fn speakers(&self) -> Vec<String> {
        self.utterances
            .iter()
            .map(|u| u.speaker_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn vocab(&self, task: TaskLabel) -> LabelVocab {
        let classes = match task {
            TaskLabel::Emotion => Emotion::ALL.iter().map(|e| e.name().to_string()).collect(),
            TaskLabel::Gender => Gender::ALL.iter().map(|g| g.code().to_string()).collect(),
            TaskLabel::Speaker => self.speakers(),
        };
        LabelVocab { task, classes }
    }

    /// Row indices sorted by utterance id, so everything derived from them is
    /// independent of the file's row order.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| self.utterances[a].id.cmp(&self.utterances[b].id));
        idx
    }

    pub fn features_matrix(&self, indices: &[usize]) -> Array2<f64> {
        let mut x = Array2::zeros((indices.len(), self.feature_dim));
        for (mut row, &i) in x.rows_mut().into_iter().zip(indices) {
            row.assign(&ndarray::ArrayView1::from(&self.utterances[i].features[..]));
        }
        x
    }

    /// Labelled training/evaluation matrix for the given rows.
    pub fn task_data(&self, indices: &[usize], vocab: &LabelVocab) -> Result<TaskData> {
        TaskData::from_dataset(self, indices, vocab)
    }

    /// Same records in a different row order.
    pub fn permuted(&self, order: &[usize]) -> Result<Dataset> {
        let utterances = order.iter().map(|&i| self.utterances[i].clone()).collect();
        let mut ds = Dataset::new(utterances, self.feature_dim)?;
        ds.normalization = self.normalization.clone();
        Ok(ds)
    }
}

/// A labelled slice of a dataset: features as rows, labels as class indices.
///
/// Rows are always held in utterance-id order.
#[derive(Clone, Debug, PartialEq)]
pub struct TaskData {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl TaskData {
    pub fn new(x: Array2<f64>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.nrows() != y.len() {
            return Err(Error::Shape(format!("{} rows for {} labels", x.nrows(), y.len())));
        }
        if let Some(&bad) = y.iter().find(|&&c| c >= n_classes) {
            return Err(Error::Label {
                label: bad,
                classes: n_classes,
            });
        }
        Ok(Self { x, y, n_classes })
    }

    pub fn from_dataset(ds: &Dataset, indices: &[usize], vocab: &LabelVocab) -> Result<Self> {
        let mut idx = indices.to_vec();
        idx.sort_by(|&a, &b| ds.utterances[a].id.cmp(&ds.utterances[b].id));
        let y = idx
            .iter()
            .map(|&i| vocab.index_of(&ds.utterances[i]))
            .collect::<Result<Vec<_>>>()?;
        Self::new(ds.features_matrix(&idx), y, vocab.len())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.ncols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &c in &self.y {
            counts[c] += 1;
        }
        counts
    }
}

#[cfg(test)]
pub(crate) fn toy_utterance(id: &str, speaker: &str, emotion: Emotion, features: Vec<f64>) -> Utterance {
    Utterance {
        id: id.into(),
        dataset_id: "toy".into(),
        speaker_id: speaker.into(),
        gender: Gender::Female,
        emotion,
        features,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_parsing() {
        assert_eq!("happy".parse::<Emotion>().unwrap(), Emotion::Happy);
        assert!("fear".parse::<Emotion>().is_err());
        assert_eq!("M".parse::<Gender>().unwrap(), Gender::Male);
        assert!("x".parse::<Gender>().is_err());
    }

    #[test]
    fn vocab_sizes() {
        let ds = Dataset::new(
            vec![
                toy_utterance("a", "s2", Emotion::Sad, vec![0.0]),
                toy_utterance("b", "s1", Emotion::Sad, vec![0.0]),
                toy_utterance("c", "s2", Emotion::Angry, vec![0.0]),
            ],
            1,
        )
        .unwrap();
        assert_eq!(ds.vocab(TaskLabel::Emotion).len(), 4);
        assert_eq!(ds.vocab(TaskLabel::Gender).len(), 2);
        let spk = ds.vocab(TaskLabel::Speaker);
        assert_eq!(spk.classes, vec!["s1", "s2"]);
        let td = ds.task_data(&[2, 0, 1], &spk).unwrap();
        assert_eq!(td.y, vec![1, 0, 1]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let r = Dataset::new(
            vec![
                toy_utterance("a", "s", Emotion::Sad, vec![0.0]),
                toy_utterance("a", "s", Emotion::Sad, vec![1.0]),
            ],
            1,
        );
        assert!(matches!(r, Err(Error::DegenerateSplit(_))));
    }
}
