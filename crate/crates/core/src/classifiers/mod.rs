//! KNN, one-vs-one RBF SVM and random-forest classifiers over the five
//! wavelet features.

pub mod forest;
pub mod knn;
pub mod svm;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::error::{PqError, Result};
use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::signal_gen::DisturbanceClass;

pub use forest::{rf_oob_error, rf_predict, rf_train, ForestParams, OobEstimate, RandomForestModel};
pub use knn::{knn_predict, KnnModel};
pub use svm::{svm_predict, svm_train, BinaryMachine, SvmModel, SvmParams};
pub use tree::{gini, tree_train, DecisionTree, Node};

pub type Features = [f64; FEATURE_COUNT];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub id: u64,
    pub x: Features,
    pub label: DisturbanceClass,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub rows: Vec<LabeledRow>,
    /// Set when `rows` have been transformed by a fit on training rows.
    pub standardization: Option<Standardization>,
}

impl LabeledDataset {
    pub fn new(rows: Vec<LabeledRow>) -> Self {
        LabeledDataset { rows, standardization: None }
    }

    pub fn from_features(rows: impl IntoIterator<Item = (u64, FeatureVector)>) -> Result<Self> {
        let rows = rows
            .into_iter()
            .map(|(id, fv)| {
                let label = fv
                    .label
                    .ok_or_else(|| PqError::Parameter(format!("row {id} has no label")))?;
                Ok(LabeledRow { id, x: fv.values(), label })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(rows))
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn check(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(PqError::Shape("empty training set".into()));
        }
        if let Some(r) = self.rows.iter().find(|r| r.x.iter().any(|v| !v.is_finite())) {
            return Err(PqError::Parameter(format!("row {} has non-finite features", r.id)));
        }
        Ok(())
    }

    pub fn standardized(&self, s: &Standardization) -> LabeledDataset {
        LabeledDataset {
            rows: self
                .rows
                .iter()
                .map(|r| LabeledRow { x: s.apply(&r.x), ..*r })
                .collect(),
            standardization: Some(s.clone()),
        }
    }

    /// Classes present, ascending by code.
    pub fn classes(&self) -> Vec<DisturbanceClass> {
        let mut seen = [false; DisturbanceClass::COUNT];
        for r in &self.rows {
            seen[r.label.index()] = true;
        }
        DisturbanceClass::ALL
            .into_iter()
            .filter(|c| seen[c.index()])
            .collect()
    }
}

/// Per-feature z-score transform.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardization {
    pub mean: Features,
    pub scale: Features,
}

impl Standardization {
    pub fn identity() -> Self {
        Standardization {
            mean: [0.0; FEATURE_COUNT],
            scale: [1.0; FEATURE_COUNT],
        }
    }

    pub fn apply(&self, x: &Features) -> Features {
        let mut out = [0.0; FEATURE_COUNT];
        for f in 0..FEATURE_COUNT {
            out[f] = (x[f] - self.mean[f]) / self.scale[f];
        }
        out
    }
}

/// Population mean and standard deviation per feature; a zero scale
/// becomes 1.
pub fn standardize_fit(train: &LabeledDataset) -> Result<Standardization> {
    if train.is_empty() {
        return Err(PqError::Shape("cannot standardize an empty set".into()));
    }
    let n = train.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    for r in &train.rows {
        for f in 0..FEATURE_COUNT {
            mean[f] += r.x[f];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut scale = [0.0; FEATURE_COUNT];
    for r in &train.rows {
        for f in 0..FEATURE_COUNT {
            scale[f] += (r.x[f] - mean[f]).powi(2);
        }
    }
    for s in &mut scale {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Ok(Standardization { mean, scale })
}

/// Label with the most votes; ties go to the smallest class code.
pub fn majority(votes: &[usize; DisturbanceClass::COUNT]) -> DisturbanceClass {
    let mut best = 0;
    for (i, &v) in votes.iter().enumerate() {
        if v > votes[best] {
            best = i;
        }
    }
    DisturbanceClass::ALL[best]
}

pub trait Classifier {
    fn predict_values(&self, x: &Features) -> DisturbanceClass;

    fn predict(&self, query: &FeatureVector) -> DisturbanceClass {
        self.predict_values(&query.values())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Knn,
    Svm,
    Forest,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 3] = [ClassifierKind::Knn, ClassifierKind::Svm, ClassifierKind::Forest];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "knn",
            ClassifierKind::Svm => "svm",
            ClassifierKind::Forest => "forest",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            ClassifierKind::Knn => "KNN",
            ClassifierKind::Svm => "SVM",
            ClassifierKind::Forest => "Random Forest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Knn(KnnModel),
    Svm(SvmModel),
    RandomForest(RandomForestModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Knn(_) => ClassifierKind::Knn,
            TrainedModel::Svm(_) => ClassifierKind::Svm,
            TrainedModel::RandomForest(_) => ClassifierKind::Forest,
        }
    }
}

impl Classifier for TrainedModel {
    fn predict_values(&self, x: &Features) -> DisturbanceClass {
        match self {
            TrainedModel::Knn(m) => m.predict_values(x),
            TrainedModel::Svm(m) => m.predict_values(x),
            TrainedModel::RandomForest(m) => m.predict_values(x),
        }
    }
}
