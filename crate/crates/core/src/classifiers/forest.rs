//! Bagged CART ensemble with per-split feature subsampling and out-of-bag
//! error estimation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::tree_train_on;
use super::{majority, Classifier, DecisionTree, Features, LabeledDataset};
use crate::error::{PqError, Result};
use crate::features::{FeatureVector, FEATURE_COUNT};
use crate::rng::{self, Domain};
use crate::signal_gen::DisturbanceClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: usize,
    pub seed: u64,
    /// When false every tree sees the full training set (no OOB rows).
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: 2,
            seed: 1159,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub params: ForestParams,
    pub n_train: usize,
    pub trees: Vec<DecisionTree>,
    /// Sorted training-row indices absent from each tree's bootstrap draw.
    pub oob_indices: Vec<Vec<usize>>,
}

/// Bootstrap draw of tree `tree` and the stream left positioned for growth.
fn tree_stream(params: &ForestParams, tree: usize, n: usize) -> (rand_chacha::ChaCha8Rng, Vec<usize>) {
    let mut rng = rng::stream(Domain::Tree, &[params.seed, tree as u64]);
    let sample = if params.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    (rng, sample)
}

/// Replays the bootstrap draw of one tree.
pub fn bootstrap_sample(params: &ForestParams, tree: usize, n: usize) -> Vec<usize> {
    tree_stream(params, tree, n).1
}

fn out_of_bag(sample: &[usize], n: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    for &i in sample {
        seen[i] = true;
    }
    (0..n).filter(|&i| !seen[i]).collect()
}

pub fn rf_train(train: &LabeledDataset, params: &ForestParams) -> Result<RandomForestModel> {
    train.check()?;
    if params.n_trees == 0 {
        return Err(PqError::Parameter("n_trees must be >= 1".into()));
    }
    if !(1..=FEATURE_COUNT).contains(&params.max_features) {
        return Err(PqError::Parameter(format!(
            "max_features must lie in 1..={FEATURE_COUNT}, got {}",
            params.max_features
        )));
    }
    let n = train.len();
    let grown: Vec<(DecisionTree, Vec<usize>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let (mut rng, sample) = tree_stream(params, t, n);
            let tree = tree_train_on(train, &sample, params.max_features, &mut rng)?;
            Ok((tree, out_of_bag(&sample, n)))
        })
        .collect::<Result<_>>()?;
    let (trees, oob_indices) = grown.into_iter().unzip();
    Ok(RandomForestModel {
        params: *params,
        n_train: n,
        trees,
        oob_indices,
    })
}

impl RandomForestModel {
    pub fn votes(&self, x: &Features) -> [usize; DisturbanceClass::COUNT] {
        let mut v = [0; DisturbanceClass::COUNT];
        for t in &self.trees {
            v[t.predict(x).index()] += 1;
        }
        v
    }

    /// Fraction of training rows left out of each tree's bootstrap draw.
    pub fn oob_fractions(&self) -> Vec<f64> {
        self.oob_indices
            .iter()
            .map(|o| o.len() as f64 / self.n_train as f64)
            .collect()
    }
}

impl Classifier for RandomForestModel {
    fn predict_values(&self, x: &Features) -> DisturbanceClass {
        majority(&self.votes(x))
    }
}

pub fn rf_predict(model: &RandomForestModel, query: &FeatureVector) -> DisturbanceClass {
    model.predict(query)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OobEstimate {
    /// Misclassification fraction over rows with at least one OOB vote.
    pub error: f64,
    pub voted_rows: usize,
    /// Rows that were in every tree's bootstrap draw.
    pub skipped_rows: usize,
}

/// Out-of-bag error: each row is voted on only by trees that did not see it.
pub fn rf_oob_error(model: &RandomForestModel, train: &LabeledDataset) -> Result<OobEstimate> {
    if train.len() != model.n_train {
        return Err(PqError::Shape(format!(
            "forest was trained on {} rows, got {}",
            model.n_train,
            train.len()
        )));
    }
    let mut votes = vec![[0usize; DisturbanceClass::COUNT]; train.len()];
    for (tree, oob) in model.trees.iter().zip(&model.oob_indices) {
        for &i in oob {
            votes[i][tree.predict(&train.rows[i].x).index()] += 1;
        }
    }
    let (mut voted, mut wrong) = (0usize, 0usize);
    for (row, v) in train.rows.iter().zip(&votes) {
        if v.iter().all(|&c| c == 0) {
            continue;
        }
        voted += 1;
        if majority(v) != row.label {
            wrong += 1;
        }
    }
    let skipped = train.len() - voted;
    if skipped > 0 {
        log::warn!("{skipped} training rows are in every bootstrap draw and have no OOB vote");
    }
    Ok(OobEstimate {
        error: if voted > 0 { wrong as f64 / voted as f64 } else { 0.0 },
        voted_rows: voted,
        skipped_rows: skipped,
    })
}
