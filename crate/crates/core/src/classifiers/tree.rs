//! CART classification tree grown greedily on Gini impurity.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{majority, Classifier, Features, LabeledDataset};
use crate::error::{PqError, Result};
use crate::features::FEATURE_COUNT;
use crate::signal_gen::DisturbanceClass;

const K: usize = DisturbanceClass::COUNT;
/// Smallest impurity decrease accepted as a real improvement.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
    Leaf { class: DisturbanceClass, samples: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: Node,
}

impl DecisionTree {
    pub fn predict(&self, x: &Features) -> DisturbanceClass {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { class, .. } => return *class,
                Node::Split { feature, threshold, left, right } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }

    pub fn leaf_count(&self) -> usize {
        fn count(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 1,
                Node::Split { left, right, .. } => count(left) + count(right),
            }
        }
        count(&self.root)
    }
}

impl Classifier for DecisionTree {
    fn predict_values(&self, x: &Features) -> DisturbanceClass {
        self.predict(x)
    }
}

/// `1 − Σ p_c²` of a class histogram.
pub fn gini(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Grower<'a, R> {
    x: &'a [Features],
    y: &'a [usize],
    max_features: usize,
    rng: &'a mut R,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl<R: Rng> Grower<'_, R> {
    fn histogram(&self, idx: &[usize]) -> [usize; K] {
        let mut h = [0; K];
        for &i in idx {
            h[self.y[i]] += 1;
        }
        h
    }

    /// Samples `max_features` distinct features, returned in ascending order
    /// so impurity ties resolve to the lowest feature index.
    fn candidate_features(&mut self) -> Vec<usize> {
        let mut f: [usize; FEATURE_COUNT] = std::array::from_fn(|i| i);
        for i in 0..self.max_features {
            let j = self.rng.random_range(i..FEATURE_COUNT);
            f.swap(i, j);
        }
        let mut chosen = f[..self.max_features].to_vec();
        chosen.sort_unstable();
        chosen
    }

    fn best_split(&mut self, idx: &[usize], parent: &[usize; K]) -> Option<BestSplit> {
        let n = idx.len();
        let mut best: Option<BestSplit> = None;
        let mut order = idx.to_vec();
        for feature in self.candidate_features() {
            let x = self.x;
            order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
            let mut left = [0usize; K];
            let mut right = *parent;
            // Σ c² per side, updated incrementally
            let mut sq_left = 0.0f64;
            let mut sq_right: f64 = right.iter().map(|&c| (c * c) as f64).sum();
            for p in 1..n {
                let c = self.y[order[p - 1]];
                sq_left += (2 * left[c] + 1) as f64;
                sq_right -= (2 * right[c] - 1) as f64;
                left[c] += 1;
                right[c] -= 1;
                let lo = x[order[p - 1]][feature];
                let hi = x[order[p]][feature];
                if lo >= hi {
                    continue;
                }
                let (nl, nr) = (p as f64, (n - p) as f64);
                let impurity = (n as f64 - sq_left / nl - sq_right / nr) / n as f64;
                if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(BestSplit { feature, threshold, impurity });
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: &[usize]) -> Node {
        let hist = self.histogram(idx);
        let leaf = Node::Leaf {
            class: majority(&hist),
            samples: idx.len(),
        };
        let parent_gini = gini(&hist);
        if idx.len() < 2 || parent_gini == 0.0 {
            return leaf;
        }
        let Some(split) = self.best_split(idx, &hist) else {
            return leaf;
        };
        if split.impurity >= parent_gini - MIN_DECREASE {
            return leaf;
        }
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.x[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.grow(&left)),
            right: Box::new(self.grow(&right)),
        }
    }
}

/// Grows a tree on the rows of `train` selected by `sample` (duplicates
/// allowed, as in a bootstrap draw).
pub fn tree_train_on<R: Rng>(
    train: &LabeledDataset,
    sample: &[usize],
    max_features: usize,
    rng: &mut R,
) -> Result<DecisionTree> {
    train.check()?;
    if !(1..=FEATURE_COUNT).contains(&max_features) {
        return Err(PqError::Parameter(format!(
            "max_features must lie in 1..={FEATURE_COUNT}, got {max_features}"
        )));
    }
    if sample.is_empty() || sample.iter().any(|&i| i >= train.len()) {
        return Err(PqError::Shape("tree sample indices out of range".into()));
    }
    let x: Vec<Features> = train.rows.iter().map(|r| r.x).collect();
    let y: Vec<usize> = train.rows.iter().map(|r| r.label.index()).collect();
    let mut grower = Grower { x: &x, y: &y, max_features, rng };
    Ok(DecisionTree { root: grower.grow(sample) })
}

pub fn tree_train<R: Rng>(train: &LabeledDataset, max_features: usize, rng: &mut R) -> Result<DecisionTree> {
    let all: Vec<usize> = (0..train.len()).collect();
    tree_train_on(train, &all, max_features, rng)
}
