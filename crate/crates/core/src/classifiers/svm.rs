//! Soft-margin RBF support vector machine, one-vs-one over all class pairs.
//!
//! Each binary machine solves the dual
//!
//! ```text
//! min  ½ Σ_ij α_i α_j o_i o_j K(s_i, s_j) − Σ_i α_i
//! s.t. 0 ≤ α_i ≤ C,  Σ_i α_i o_i = 0
//! ```
//!
//! with sequential minimal optimization using second-order working-set
//! selection. The decision function is `f(s) = Σ α_i o_i K(s_i, s) + b`, with
//! `b` averaged over the free (margin) support vectors.

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{majority, standardize_fit, Classifier, Features, LabeledDataset, Standardization};
use crate::error::{PqError, Result};
use crate::features::FeatureVector;
use crate::signal_gen::DisturbanceClass;

const TAU: f64 = 1e-12;
/// Above this many rows a binary problem computes kernel rows on demand
/// instead of holding the full matrix.
const FULL_KERNEL_MAX_ROWS: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub gamma: f64,
    /// Stop when the maximal KKT violation `m(α) − M(α)` drops below this.
    pub tolerance: f64,
    /// Iteration budget in multiples of the binary problem size.
    pub max_passes: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams {
            c: 10.0,
            gamma: 0.2,
            tolerance: 1e-3,
            max_passes: 10_000,
        }
    }
}

impl SvmParams {
    fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(PqError::Parameter(format!("C must be positive, got {}", self.c)));
        }
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(PqError::Parameter(format!("gamma must be positive, got {}", self.gamma)));
        }
        if !(self.tolerance > 0.0) || self.max_passes == 0 {
            return Err(PqError::Parameter("tolerance and max_passes must be positive".into()));
        }
        Ok(())
    }
}

pub fn rbf(a: &Features, b: &Features, gamma: f64) -> f64 {
    let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (-gamma * d2).exp()
}

/// Solution of one binary dual problem.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `m(α) − M(α)` at termination.
    pub kkt_gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

enum Kernel<'a> {
    Full { n: usize, k: Vec<f64> },
    OnDemand { x: &'a [Features], gamma: f64, row_i: Vec<f64>, row_j: Vec<f64> },
}

impl<'a> Kernel<'a> {
    fn new(x: &'a [Features], gamma: f64) -> Self {
        let n = x.len();
        if n <= FULL_KERNEL_MAX_ROWS {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                k[i * n + i] = 1.0;
                for j in 0..i {
                    let v = rbf(&x[i], &x[j], gamma);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            Kernel::Full { n, k }
        } else {
            Kernel::OnDemand { x, gamma, row_i: vec![0.0; n], row_j: vec![0.0; n] }
        }
    }

    /// Rows `i` and `j` of the kernel matrix.
    fn rows(&mut self, i: usize, j: usize) -> (&[f64], &[f64]) {
        match self {
            Kernel::Full { n, k } => {
                let n = *n;
                (&k[i * n..(i + 1) * n], &k[j * n..(j + 1) * n])
            }
            Kernel::OnDemand { x, gamma, row_i, row_j } => {
                for (t, xt) in x.iter().enumerate() {
                    row_i[t] = rbf(&x[i], xt, *gamma);
                    row_j[t] = rbf(&x[j], xt, *gamma);
                }
                (row_i.as_slice(), row_j.as_slice())
            }
        }
    }

    fn row(&mut self, i: usize) -> &[f64] {
        self.rows(i, i).0
    }
}

/// SMO on a binary problem with labels `y ∈ {+1, −1}`. The RBF diagonal is 1.
pub fn solve_dual(x: &[Features], y: &[f64], params: &SvmParams) -> Result<DualSolution> {
    params.validate()?;
    let n = x.len();
    if n != y.len() || n < 2 {
        return Err(PqError::Shape(format!("binary problem needs >= 2 rows, got {n}")));
    }
    if !y.iter().any(|&v| v > 0.0) || !y.iter().any(|&v| v < 0.0) {
        return Err(PqError::Parameter("binary problem needs both labels".into()));
    }
    let c = params.c;
    let mut kernel = Kernel::new(x, params.gamma);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let max_iter = params.max_passes.saturating_mul(n).max(1);

    let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
    let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);

    let mut iterations = 0;
    let mut kkt_gap;
    let mut converged = false;
    loop {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut sel_i = None;
        for t in 0..n {
            if up(alpha[t], y[t]) {
                let v = -y[t] * grad[t];
                if v > gmax {
                    gmax = v;
                    sel_i = Some(t);
                }
            }
        }
        let Some(i) = sel_i else {
            kkt_gap = 0.0;
            converged = true;
            break;
        };

        // j: second-order gain among I_low
        let ki = kernel.row(i);
        let mut gmax2 = f64::NEG_INFINITY;
        let mut obj_min = f64::INFINITY;
        let mut sel_j = None;
        for t in 0..n {
            if !low(alpha[t], y[t]) {
                continue;
            }
            let v = y[t] * grad[t];
            if v > gmax2 {
                gmax2 = v;
            }
            let b = gmax + v;
            if b > 0.0 {
                let mut a = 2.0 - 2.0 * ki[t];
                if a <= 0.0 {
                    a = TAU;
                }
                let obj = -(b * b) / a;
                if obj < obj_min {
                    obj_min = obj;
                    sel_j = Some(t);
                }
            }
        }
        kkt_gap = gmax + gmax2;
        if kkt_gap < params.tolerance {
            converged = true;
            break;
        }
        let Some(j) = sel_j else {
            converged = true;
            break;
        };
        if iterations >= max_iter {
            break;
        }
        iterations += 1;

        let (ki, kj) = kernel.rows(i, j);
        let kij = ki[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let (mut ai, mut aj) = (old_i, old_j);
        let mut quad = 2.0 - 2.0 * kij;
        if quad <= 0.0 {
            quad = TAU;
        }
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai;
        alpha[j] = aj;
        let (dai, daj) = (ai - old_i, aj - old_j);
        for t in 0..n {
            grad[t] += y[t] * (y[i] * ki[t] * dai + y[j] * kj[t] * daj);
        }
    }

    // bias: mean of y·G over free vectors, else the midpoint of the bounds
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free, mut sum_free) = (0usize, 0.0);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            free += 1;
            sum_free += yg;
        }
    }
    let rho = if free > 0 { sum_free / free as f64 } else { (ub + lb) / 2.0 };

    Ok(DualSolution {
        alpha,
        bias: -rho,
        kkt_gap: kkt_gap.max(0.0),
        iterations,
        converged,
    })
}

/// One pairwise machine; positive decisions vote for `positive`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    pub positive: DisturbanceClass,
    pub negative: DisturbanceClass,
    pub support_vectors: Vec<Features>,
    /// `α_i · o_i` per support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl BinaryMachine {
    /// Trains on standardized rows; `o = +1` for `positive`.
    pub fn train(
        x: &[Features],
        labels: &[DisturbanceClass],
        positive: DisturbanceClass,
        negative: DisturbanceClass,
        params: &SvmParams,
    ) -> Result<Self> {
        let y: Vec<f64> = labels
            .iter()
            .map(|&l| if l == positive { 1.0 } else { -1.0 })
            .collect();
        let sol = solve_dual(x, &y, params)?;
        if !sol.converged {
            warn!(
                "SVM {positive} vs {negative}: stopped after {} iterations with KKT gap {:.3e}",
                sol.iterations, sol.kkt_gap
            );
        }
        let mut support_vectors = Vec::new();
        let mut dual_coef = Vec::new();
        for (t, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support_vectors.push(x[t]);
                dual_coef.push(a * y[t]);
            }
        }
        Ok(BinaryMachine {
            positive,
            negative,
            support_vectors,
            dual_coef,
            bias: sol.bias,
            kkt_gap: sol.kkt_gap,
            iterations: sol.iterations,
        })
    }

    /// `Σ α_i o_i K(s_i, s) + b` for an already standardized `s`.
    pub fn decision(&self, s: &Features, gamma: f64) -> f64 {
        self.support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &c)| c * rbf(sv, s, gamma))
            .sum::<f64>()
            + self.bias
    }

    /// `|Σ α_i o_i|`, zero at exact dual feasibility.
    pub fn equality_residual(&self) -> f64 {
        self.dual_coef.iter().sum::<f64>().abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub params: SvmParams,
    pub standardization: Standardization,
    pub classes: Vec<DisturbanceClass>,
    pub machines: Vec<BinaryMachine>,
}

/// Trains one machine per class pair (i < j by code) on standardized rows.
pub fn svm_train(train: &LabeledDataset, params: &SvmParams) -> Result<SvmModel> {
    train.check()?;
    params.validate()?;
    let classes = train.classes();
    if classes.len() < 2 {
        return Err(PqError::Parameter(format!(
            "SVM needs at least two classes, got {}",
            classes.len()
        )));
    }
    let s = standardize_fit(train)?;
    let z = train.standardized(&s);

    let pairs: Vec<(DisturbanceClass, DisturbanceClass)> = classes
        .iter()
        .enumerate()
        .flat_map(|(a, &ca)| classes[a + 1..].iter().map(move |&cb| (ca, cb)))
        .collect();

    let machines: Vec<Option<BinaryMachine>> = pairs
        .par_iter()
        .map(|&(pos, neg)| {
            let (x, labels): (Vec<Features>, Vec<DisturbanceClass>) = z
                .rows
                .iter()
                .filter(|r| r.label == pos || r.label == neg)
                .map(|r| (r.x, r.label))
                .unzip();
            match BinaryMachine::train(&x, &labels, pos, neg, params) {
                Ok(m) => Ok(Some(m)),
                Err(PqError::Parameter(msg)) | Err(PqError::Shape(msg)) => {
                    warn!("skipping SVM pair {pos} vs {neg}: {msg}");
                    Ok(None)
                }
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;

    Ok(SvmModel {
        params: *params,
        standardization: s,
        classes,
        machines: machines.into_iter().flatten().collect(),
    })
}

impl SvmModel {
    /// Votes per class and summed |f| of the winning decisions.
    pub fn votes(&self, x: &Features) -> ([usize; DisturbanceClass::COUNT], [f64; DisturbanceClass::COUNT]) {
        let s = self.standardization.apply(x);
        let mut votes = [0usize; DisturbanceClass::COUNT];
        let mut strength = [0.0; DisturbanceClass::COUNT];
        for m in &self.machines {
            let f = m.decision(&s, self.params.gamma);
            let winner = if f >= 0.0 { m.positive } else { m.negative };
            votes[winner.index()] += 1;
            strength[winner.index()] += f.abs();
        }
        (votes, strength)
    }

    pub fn max_equality_residual(&self) -> f64 {
        self.machines
            .iter()
            .map(BinaryMachine::equality_residual)
            .fold(0.0, f64::max)
    }

    pub fn max_kkt_gap(&self) -> f64 {
        self.machines.iter().map(|m| m.kkt_gap).fold(0.0, f64::max)
    }
}

impl Classifier for SvmModel {
    fn predict_values(&self, x: &Features) -> DisturbanceClass {
        let (votes, strength) = self.votes(x);
        let top = votes.iter().copied().max().unwrap_or(0);
        let mut best: Option<usize> = None;
        for i in 0..DisturbanceClass::COUNT {
            if votes[i] != top {
                continue;
            }
            match best {
                Some(b) if strength[i] <= strength[b] => {}
                _ => best = Some(i),
            }
        }
        match best {
            Some(i) => DisturbanceClass::ALL[i],
            None => majority(&votes),
        }
    }
}

pub fn svm_predict(model: &SvmModel, query: &FeatureVector) -> DisturbanceClass {
    model.predict(query)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::LabeledRow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cluster(rng: &mut ChaCha8Rng, centre: [f64; 2], n: usize, label: DisturbanceClass, id0: u64) -> Vec<LabeledRow> {
        (0..n)
            .map(|i| LabeledRow {
                id: id0 + i as u64,
                x: [
                    centre[0] + rng.random_range(-0.1..0.1),
                    centre[1] + rng.random_range(-0.1..0.1),
                    0.0,
                    0.0,
                    0.0,
                ],
                label,
            })
            .collect()
    }

    #[test]
    fn separable_toy_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows = cluster(&mut rng, [0.0, 0.0], 20, DisturbanceClass::Swell, 0);
        rows.extend(cluster(&mut rng, [5.0, 5.0], 20, DisturbanceClass::Sag, 20));
        let d = LabeledDataset::new(rows);
        let m = svm_train(&d, &SvmParams::default()).unwrap();
        assert_eq!(m.machines.len(), 1);
        for r in &d.rows {
            assert_eq!(m.predict_values(&r.x), r.label);
        }
        for mach in &m.machines {
            for &c in &mach.dual_coef {
                assert!(c.abs() > 0.0 && c.abs() <= m.params.c);
            }
            assert!(mach.equality_residual() <= 1e-3);
        }
    }

    #[test]
    fn conflicting_duplicates_saturate_at_c() {
        let x = vec![[1.0, 0.0, 0.0, 0.0, 0.0]; 4];
        let y = vec![1.0, -1.0, 1.0, -1.0];
        let p = SvmParams { c: 0.5, ..Default::default() };
        let sol = solve_dual(&x, &y, &p).unwrap();
        for &a in &sol.alpha {
            assert!((0.0..=0.5).contains(&a));
        }
        assert!(sol.converged);
    }

    #[test]
    fn two_class_prediction_is_the_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut rows = cluster(&mut rng, [0.0, 0.0], 15, DisturbanceClass::Notch, 0);
        rows.extend(cluster(&mut rng, [0.4, 0.3], 15, DisturbanceClass::Spike, 15));
        let d = LabeledDataset::new(rows);
        let m = svm_train(&d, &SvmParams::default()).unwrap();
        let mach = &m.machines[0];
        assert_eq!(mach.positive, DisturbanceClass::Spike);
        for _ in 0..50 {
            let q = [rng.random_range(-1.0..1.5), rng.random_range(-1.0..1.5), 0.0, 0.0, 0.0];
            let f = mach.decision(&m.standardization.apply(&q), m.params.gamma);
            let expected = if f >= 0.0 { mach.positive } else { mach.negative };
            assert_eq!(m.predict_values(&q), expected);
        }
    }

    #[test]
    fn three_clusters() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let centres = [([0.0, 0.0], DisturbanceClass::Sag), ([4.0, 0.0], DisturbanceClass::Swell), ([0.0, 4.0], DisturbanceClass::Flicker)];
        let mut rows = Vec::new();
        for (k, &(c, l)) in centres.iter().enumerate() {
            rows.extend(cluster(&mut rng, c, 10, l, 10 * k as u64));
        }
        let m = svm_train(&LabeledDataset::new(rows), &SvmParams::default()).unwrap();
        assert_eq!(m.machines.len(), 3);
        for &(c, l) in &centres {
            assert_eq!(m.predict_values(&[c[0], c[1], 0.0, 0.0, 0.0]), l);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = LabeledDataset::new(cluster(&mut rng, [0.0, 0.0], 5, DisturbanceClass::Sag, 0));
        assert!(matches!(svm_train(&d, &SvmParams::default()), Err(PqError::Parameter(_))));
        let p = SvmParams { c: 0.0, ..Default::default() };
        let d2 = LabeledDataset::new(vec![
            LabeledRow { id: 0, x: [0.0; 5], label: DisturbanceClass::Sag },
            LabeledRow { id: 1, x: [1.0; 5], label: DisturbanceClass::Swell },
        ]);
        assert!(svm_train(&d2, &p).is_err());
    }

    #[test]
    fn on_demand_kernel_matches_full() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x: Vec<Features> = (0..30).map(|_| [rng.random(), rng.random(), rng.random(), 0.0, 0.0]).collect();
        let mut full = Kernel::new(&x, 0.7);
        let mut lazy = Kernel::OnDemand { x: &x, gamma: 0.7, row_i: vec![0.0; 30], row_j: vec![0.0; 30] };
        let (a, b) = full.rows(3, 17);
        let (a, b) = (a.to_vec(), b.to_vec());
        let (c, d) = lazy.rows(3, 17);
        for t in 0..30 {
            assert!((a[t] - c[t]).abs() < 1e-15);
            assert!((b[t] - d[t]).abs() < 1e-15);
        }
    }
}
