use ndarray::Array2;

use crate::{Error, Result};

/// Class-by-class counts; rows are true classes, columns predictions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Array2<u64>,
}

impl ConfusionMatrix {
    pub fn new(n_classes: usize) -> Self {
        Self {
            counts: Array2::zeros((n_classes, n_classes)),
        }
    }

    pub fn from_counts(counts: Array2<u64>) -> Result<Self> {
        if counts.nrows() != counts.ncols() {
            return Err(Error::Shape(format!("confusion matrix must be square, got {:?}", counts.dim())));
        }
        Ok(Self { counts })
    }

    pub fn from_predictions(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape(format!(
                "{} labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut cm = Self::new(n_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.record(t, p)?;
        }
        Ok(cm)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let n = self.n_classes();
        for label in [truth, predicted] {
            if label >= n {
                return Err(Error::Label { label, classes: n });
            }
        }
        self.counts[[truth, predicted]] += 1;
        Ok(())
    }

    pub fn n_classes(&self) -> usize {
        self.counts.nrows()
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.sum()
    }
}

/// UAR together with the classes left out because they had no true instances.
#[derive(Clone, Debug, PartialEq)]
pub struct UarBreakdown {
    pub uar: f64,
    pub recalls: Vec<Option<f64>>,
    pub excluded: Vec<usize>,
}

pub fn uar_breakdown(cm: &ConfusionMatrix) -> Result<UarBreakdown> {
    if cm.total() == 0 {
        return Err(Error::EmptyEvaluation);
    }
    let recalls: Vec<Option<f64>> = cm
        .counts
        .rows()
        .into_iter()
        .enumerate()
        .map(|(c, row)| {
            let support = row.sum();
            (support > 0).then(|| row[c] as f64 / support as f64)
        })
        .collect();
    let present: Vec<f64> = recalls.iter().flatten().copied().collect();
    let excluded = recalls
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(c, _)| c)
        .collect();
    Ok(UarBreakdown {
        uar: present.iter().sum::<f64>() / present.len() as f64,
        recalls,
        excluded,
    })
}

/// Unweighted average recall: the mean of per-class recalls over classes
/// that occur in the ground truth.
pub fn uar(cm: &ConfusionMatrix) -> Result<f64> {
    let b = uar_breakdown(cm)?;
    if !b.excluded.is_empty() {
        log::debug!("classes {:?} absent from evaluation data; excluded from UAR", b.excluded);
    }
    Ok(b.uar)
}

pub fn uar_from_labels(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<f64> {
    uar(&ConfusionMatrix::from_predictions(truth, predicted, n_classes)?)
}
