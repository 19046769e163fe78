use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::nn::seeded_rng;
use crate::seed::fnv1a;
use crate::{Error, Result};

/// How speaker identity constrains fold assignment.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratification {
    /// Each speaker's utterances are dealt across all folds.
    #[default]
    Proportional,
    /// Each speaker lives in exactly one fold.
    SpeakerDisjoint,
}

/// Assignment of every utterance of a dataset to one of `k` folds.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    seed: u64,
    stratification: Stratification,
    /// Fold index per dataset row.
    assignment: Vec<usize>,
    ids: Vec<String>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stratification(&self) -> Stratification {
        self.stratification
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.assignment[i])
    }

    /// Dataset rows belonging to any of `folds`, in row order.
    pub fn indices(&self, folds: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.k];
        for &f in folds {
            member[f] = true;
        }
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &f)| member[f])
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    /// Hash of the (utterance id → fold) map, independent of row order.
    pub fn fingerprint(&self) -> u64 {
        let sorted: BTreeMap<&str, usize> = self
            .ids
            .iter()
            .map(String::as_str)
            .zip(self.assignment.iter().copied())
            .collect();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&(self.k as u64).to_le_bytes());
        for (id, fold) in sorted {
            bytes.extend_from_slice(id.as_bytes());
            bytes.push(0);
            bytes.extend_from_slice(&(fold as u64).to_le_bytes());
        }
        fnv1a(&bytes)
    }
}

/// Speaker-stratified `k`-fold plan.
///
/// Proportional mode shuffles each speaker's utterances (taken in id order)
/// with `seed` and deals them round-robin, continuing the deal from speaker to
/// speaker so overall fold sizes also stay within one of each other.
pub fn make_folds(ds: &Dataset, k: usize, seed: u64, mode: Stratification) -> Result<FoldPlan> {
    if k < 3 {
        return Err(Error::InvalidK(k));
    }
    if ds.is_empty() {
        return Err(Error::EmptyInput("cannot build folds for an empty dataset".into()));
    }
    let mut by_speaker: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for i in ds.canonical_order() {
        by_speaker.entry(ds.utterances()[i].speaker_id.as_str()).or_default().push(i);
    }
    let mut rng = seeded_rng(seed);
    let mut assignment = vec![usize::MAX; ds.len()];
    match mode {
        Stratification::Proportional => {
            let mut next = 0usize;
            for (speaker, rows) in by_speaker.iter_mut() {
                if rows.len() < k {
                    log::warn!(
                        "speaker {speaker} has {} utterances (< k = {k}); it will be missing from some folds",
                        rows.len()
                    );
                }
                rows.shuffle(&mut rng);
                for &row in rows.iter() {
                    assignment[row] = next;
                    next = (next + 1) % k;
                }
            }
        }
        Stratification::SpeakerDisjoint => {
            if by_speaker.len() < k {
                return Err(Error::DegenerateSplit(format!(
                    "speaker-disjoint folds need at least k = {k} speakers, found {}",
                    by_speaker.len()
                )));
            }
            let mut speakers: Vec<&Vec<usize>> = by_speaker.values().collect();
            speakers.shuffle(&mut rng);
            for (j, rows) in speakers.into_iter().enumerate() {
                for &row in rows {
                    assignment[row] = j % k;
                }
            }
        }
    }
    Ok(FoldPlan {
        k,
        seed,
        stratification: mode,
        assignment,
        ids: ds.utterances().iter().map(|u| u.id.clone()).collect(),
    })
}

/// Test, early-stopping and training folds for one cross-validation step.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldRoles {
    pub test: usize,
    pub early_stop: usize,
    pub train: Vec<usize>,
}

/// Early-stop fold is `(test + 1) mod k`; the remaining `k − 2` folds train.
pub fn split_roles(k: usize, test_fold: usize) -> Result<FoldRoles> {
    if k < 3 {
        return Err(Error::InvalidK(k));
    }
    if test_fold >= k {
        return Err(Error::FoldIndex { index: test_fold, k });
    }
    let early_stop = (test_fold + 1) % k;
    let train = (0..k).filter(|&f| f != test_fold && f != early_stop).collect();
    Ok(FoldRoles {
        test: test_fold,
        early_stop,
        train,
    })
}

/// Uniformly samples `n` of the training folds without replacement; the
/// result is sorted.
pub fn subset_train_folds(train_folds: &[usize], n: usize, seed: u64) -> Result<Vec<usize>> {
    if n == 0 || n > train_folds.len() {
        return Err(Error::InvalidSubset {
            requested: n,
            available: train_folds.len(),
        });
    }
    let mut rng = seeded_rng(seed);
    let mut picked: Vec<usize> = index::sample(&mut rng, train_folds.len(), n)
        .into_iter()
        .map(|i| train_folds[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}
