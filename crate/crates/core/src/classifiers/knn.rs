use serde::{Deserialize, Serialize};

use super::{majority, standardize_fit, Classifier, Features, LabeledDataset, Standardization};
use crate::error::{PqError, Result};
use crate::features::FeatureVector;
use crate::signal_gen::DisturbanceClass;

/// Lazy learner: the standardized training rows are the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub standardization: Standardization,
    pub rows: Vec<(Features, DisturbanceClass)>,
}

impl KnnModel {
    /// Fits a z-score transform on `train` and stores the transformed rows.
    pub fn fit(train: &LabeledDataset, k: usize) -> Result<Self> {
        train.check()?;
        let s = standardize_fit(train)?;
        Self::with_standardization(train, k, s)
    }

    pub fn with_standardization(train: &LabeledDataset, k: usize, s: Standardization) -> Result<Self> {
        train.check()?;
        if k == 0 || k.is_multiple_of(2) {
            return Err(PqError::Parameter(format!("k must be odd and >= 1, got {k}")));
        }
        let rows = train.rows.iter().map(|r| (s.apply(&r.x), r.label)).collect();
        Ok(KnnModel { k, standardization: s, rows })
    }

    /// Indices of the k nearest rows, ordered by (distance, row index).
    pub fn neighbors(&self, x: &Features) -> Vec<usize> {
        let q = self.standardization.apply(x);
        let k = self.k.min(self.rows.len());
        // (squared distance, index), kept sorted; strict comparison keeps the
        // lower index on equal distances
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        for (i, (row, _)) in self.rows.iter().enumerate() {
            let d: f64 = row.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
            if best.len() == k && d >= best[k - 1].0 {
                continue;
            }
            let pos = best.partition_point(|&(bd, _)| bd <= d);
            best.insert(pos, (d, i));
            best.truncate(k);
        }
        best.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn predict_values(&self, x: &Features) -> DisturbanceClass {
        let mut votes = [0usize; DisturbanceClass::COUNT];
        for i in self.neighbors(x) {
            votes[self.rows[i].1.index()] += 1;
        }
        majority(&votes)
    }
}

pub fn knn_predict(model: &KnnModel, query: &FeatureVector) -> DisturbanceClass {
    model.predict(query)
}
