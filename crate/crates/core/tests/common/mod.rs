//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the library's numeric code.

#![allow(dead_code)]

use pqwf::classifiers::{Features, LabeledDataset, LabeledRow};
use pqwf::signal_gen::DisturbanceClass;
use rand::Rng;

/// Dense periodic analysis matrix of one DWT level: rows 0..N/2 produce the
/// approximation, rows N/2..N the detail.
pub fn analysis_matrix(lowpass: &[f64], highpass: &[f64], n: usize) -> Vec<Vec<f64>> {
    let half = n / 2;
    let mut m = vec![vec![0.0; n]; n];
    for r in 0..half {
        for k in 0..lowpass.len() {
            let col = (2 * r + k) % n;
            m[r][col] += lowpass[k];
            m[half + r][col] += highpass[k];
        }
    }
    m
}

pub fn mat_vec(m: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Multi-level decomposition by repeated matrix products; returns
/// (approximation, details with level 1 first).
pub fn oracle_wavedec(x: &[f64], levels: usize, lowpass: &[f64], highpass: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let mut approx = x.to_vec();
    let mut details = Vec::new();
    for _ in 0..levels {
        let n = approx.len();
        let y = mat_vec(&analysis_matrix(lowpass, highpass, n), &approx);
        details.push(y[n / 2..].to_vec());
        approx = y[..n / 2].to_vec();
    }
    (approx, details)
}

/// Direct-summation statistics. Each returns `(value, scale)` where `scale`
/// is the magnitude of the summed terms, so a relative tolerance stays
/// meaningful when the value itself is near zero.
pub struct Oracle {
    pub n: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl Oracle {
    pub fn new(d: &[f64]) -> Self {
        let n = d.len() as f64;
        let mut s = 0.0;
        for v in d {
            s += v;
        }
        let mu = s / n;
        let mut ss = 0.0;
        for v in d {
            ss += (v - mu) * (v - mu);
        }
        Oracle { n, mu, sigma: (ss / n).sqrt() }
    }

    pub fn mean(&self, d: &[f64]) -> (f64, f64) {
        let scale = d.iter().map(|v| v.abs()).sum::<f64>() / self.n;
        (self.mu, scale)
    }

    pub fn std_dev(&self, d: &[f64]) -> (f64, f64) {
        let scale = (d.iter().map(|v| v * v).sum::<f64>() / self.n).sqrt();
        (self.sigma, scale)
    }

    fn moment(&self, d: &[f64], p: i32) -> (f64, f64) {
        if self.sigma == 0.0 {
            return (0.0, 1.0);
        }
        let mut num = 0.0;
        let mut abs = 0.0;
        for v in d {
            let c = v - self.mu;
            let t = c.powi(p);
            num += t;
            abs += t.abs();
        }
        let denom = self.n * self.sigma.powi(p);
        (num / denom, (abs / denom).max(1.0))
    }

    pub fn skewness(&self, d: &[f64]) -> (f64, f64) {
        self.moment(d, 3)
    }

    pub fn kurtosis(&self, d: &[f64]) -> (f64, f64) {
        self.moment(d, 4)
    }

    /// `−Σ p ln p / ln 2` with `p_i = d_i² / Σ d²`.
    pub fn entropy(&self, d: &[f64]) -> (f64, f64) {
        let e: f64 = d.iter().map(|v| v * v).sum();
        let mut h = 0.0;
        for v in d {
            let p = v * v / e;
            if p > 0.0 {
                h -= p * p.ln();
            }
        }
        let h = h / std::f64::consts::LN_2;
        (h, h.abs().max(1.0))
    }
}

/// `|a − b| ≤ tol · scale`.
pub fn close(a: f64, b: f64, scale: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * scale.max(f64::MIN_POSITIVE)
}

/// Exhaustive k-NN: z-score with the training population moments, full sort
/// of (distance, index), majority with ties to the smallest class code.
pub fn oracle_knn(train: &LabeledDataset, k: usize, q: &Features) -> DisturbanceClass {
    let n = train.len() as f64;
    let mut mean = [0.0; 5];
    let mut scale = [0.0; 5];
    for f in 0..5 {
        mean[f] = train.rows.iter().map(|r| r.x[f]).sum::<f64>() / n;
        let var = train.rows.iter().map(|r| (r.x[f] - mean[f]).powi(2)).sum::<f64>() / n;
        scale[f] = if var.sqrt() > 0.0 { var.sqrt() } else { 1.0 };
    }
    let z = |x: &Features| -> Features {
        let mut o = [0.0; 5];
        for f in 0..5 {
            o[f] = (x[f] - mean[f]) / scale[f];
        }
        o
    };
    let zq = z(q);
    let mut all: Vec<(f64, usize)> = train
        .rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let zr = z(&r.x);
            (zr.iter().zip(&zq).map(|(a, b)| (a - b) * (a - b)).sum(), i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut votes = [0usize; 11];
    for &(_, i) in all.iter().take(k) {
        votes[train.rows[i].label.index()] += 1;
    }
    let best = *votes.iter().max().unwrap();
    DisturbanceClass::ALL[votes.iter().position(|&v| v == best).unwrap()]
}

pub fn random_dataset<R: Rng>(rng: &mut R, n: usize, classes: usize) -> LabeledDataset {
    LabeledDataset::new(
        (0..n)
            .map(|i| {
                let mut x = [0.0; 5];
                for v in &mut x {
                    *v = rng.random_range(-3.0..3.0);
                }
                x[1] *= 100.0;
                LabeledRow {
                    id: i as u64,
                    x,
                    label: DisturbanceClass::ALL[rng.random_range(0..classes)],
                }
            })
            .collect(),
    )
}

/// Magnitude of the DFT of `x` at bin `k` (direct sum).
pub fn dft_magnitude(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let th = 2.0 * std::f64::consts::PI * k as f64 * i as f64 / n;
        re += v * th.cos();
        im -= v * th.sin();
    }
    (re * re + im * im).sqrt()
}
