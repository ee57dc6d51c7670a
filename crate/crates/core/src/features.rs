//! Five population statistics of the level-3 detail band.
//!
//! Moments are standardized population moments (1/N normalization);
//! entropy is the Shannon entropy, in bits, of the energy distribution
//! `p_i = d_i² / Σ d_j²`.

use serde::{Deserialize, Serialize};

use crate::dwt::DecompositionResult;
use crate::error::{PqError, Result};
use crate::signal_gen::DisturbanceClass;

/// Detail level the classifier features are taken from.
pub const FEATURE_LEVEL: usize = 3;
pub const FEATURE_COUNT: usize = 5;
/// Band energy, relative to the whole decomposition, treated as zero.
const NUMERICAL_ZERO_ENERGY: f64 = 1e-24;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = ["entropy", "std_dev", "mean", "skewness", "kurtosis"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub entropy: f64,
    pub std_dev: f64,
    pub mean: f64,
    pub skewness: f64,
    pub kurtosis: f64,
    pub label: Option<DisturbanceClass>,
}

impl FeatureVector {
    /// Values in serialization order: entropy, std_dev, mean, skewness, kurtosis.
    pub fn values(&self) -> [f64; FEATURE_COUNT] {
        [self.entropy, self.std_dev, self.mean, self.skewness, self.kurtosis]
    }

    pub fn from_values(v: [f64; FEATURE_COUNT], label: Option<DisturbanceClass>) -> Self {
        FeatureVector {
            entropy: v[0],
            std_dev: v[1],
            mean: v[2],
            skewness: v[3],
            kurtosis: v[4],
            label,
        }
    }
}

fn nonempty(coeffs: &[f64]) -> Result<()> {
    if coeffs.is_empty() {
        Err(PqError::Shape("statistic of an empty coefficient array".into()))
    } else {
        Ok(())
    }
}

pub fn mean(coeffs: &[f64]) -> Result<f64> {
    nonempty(coeffs)?;
    Ok(coeffs.iter().sum::<f64>() / coeffs.len() as f64)
}

pub fn std_dev(coeffs: &[f64]) -> Result<f64> {
    let m = mean(coeffs)?;
    let var = coeffs.iter().map(|d| (d - m).powi(2)).sum::<f64>() / coeffs.len() as f64;
    Ok(var.sqrt())
}

/// Mean of the `order`-th power of the z-scores; 0 when σ = 0.
fn standardized_moment(coeffs: &[f64], order: i32) -> Result<f64> {
    let m = mean(coeffs)?;
    let s = std_dev(coeffs)?;
    if s == 0.0 {
        return Ok(0.0);
    }
    let total: f64 = coeffs.iter().map(|d| ((d - m) / s).powi(order)).sum();
    Ok(total / coeffs.len() as f64)
}

pub fn skewness(coeffs: &[f64]) -> Result<f64> {
    standardized_moment(coeffs, 3)
}

pub fn kurtosis(coeffs: &[f64]) -> Result<f64> {
    standardized_moment(coeffs, 4)
}

/// Wavelet energy entropy in bits. Errors on an all-zero band.
pub fn entropy(coeffs: &[f64]) -> Result<f64> {
    nonempty(coeffs)?;
    let energy: f64 = coeffs.iter().map(|d| d * d).sum();
    if energy == 0.0 {
        return Err(PqError::DegenerateInput(
            "entropy of an all-zero coefficient array".into(),
        ));
    }
    let h: f64 = coeffs
        .iter()
        .map(|d| d * d / energy)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum();
    // -0.0 for a single nonzero coefficient
    Ok(h.max(0.0))
}

/// All five statistics of one coefficient array.
pub fn statistics(coeffs: &[f64], label: Option<DisturbanceClass>) -> Result<FeatureVector> {
    Ok(FeatureVector {
        entropy: entropy(coeffs)?,
        std_dev: std_dev(coeffs)?,
        mean: mean(coeffs)?,
        skewness: skewness(coeffs)?,
        kurtosis: kurtosis(coeffs)?,
        label,
    })
}

pub fn extract_features(
    decomp: &DecompositionResult,
    label: Option<DisturbanceClass>,
) -> Result<FeatureVector> {
    let band = decomp.detail(FEATURE_LEVEL).ok_or_else(|| {
        PqError::Shape(format!(
            "feature extraction needs {FEATURE_LEVEL} levels, decomposition has {}",
            decomp.levels
        ))
    })?;
    let band_energy: f64 = band.iter().map(|d| d * d).sum();
    let total_energy: f64 = decomp
        .details
        .iter()
        .flatten()
        .chain(&decomp.approx)
        .map(|d| d * d)
        .sum();
    // rounding residue of a band the signal has no energy in (e.g. a constant)
    if band_energy <= NUMERICAL_ZERO_ENERGY * total_energy {
        return Err(PqError::DegenerateInput(format!(
            "level-{FEATURE_LEVEL} detail band carries no energy"
        )));
    }
    statistics(band, label)
}
