//! Periodized Daubechies-4 (8 taps, 4 vanishing moments) wavelet pyramid.

use serde::{Deserialize, Serialize};

use crate::error::{PqError, Result};

pub const DB4_TAPS: usize = 8;

/// Analysis filter pair. `highpass[k] = (-1)^k · lowpass[7 - k]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletFilterPair {
    pub lowpass: [f64; DB4_TAPS],
    pub highpass: [f64; DB4_TAPS],
}

// Daubechies scaling coefficients for N = 4 vanishing moments, sum = √2.
const DB4_SCALING: [f64; DB4_TAPS] = [
    0.230_377_813_308_896_5,
    0.714_846_570_552_915_4,
    0.630_880_767_929_858_7,
    -0.027_983_769_416_859_85,
    -0.187_034_811_719_093_1,
    0.030_841_381_835_560_76,
    0.032_883_011_666_885_2,
    -0.010_597_401_785_069_03,
];

pub fn db4_filters() -> WaveletFilterPair {
    let lowpass = DB4_SCALING;
    let mut highpass = [0.0; DB4_TAPS];
    for (k, h) in highpass.iter_mut().enumerate() {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        *h = sign * lowpass[DB4_TAPS - 1 - k];
    }
    WaveletFilterPair { lowpass, highpass }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryMode {
    /// Circular extension; lengths halve exactly and energy is preserved.
    #[default]
    Periodic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionResult {
    pub approx: Vec<f64>,
    /// `details[0]` is level 1 (finest), `details[levels - 1]` the coarsest.
    pub details: Vec<Vec<f64>>,
    pub levels: usize,
    pub boundary_mode: BoundaryMode,
}

impl DecompositionResult {
    /// Detail band at 1-based `level`.
    pub fn detail(&self, level: usize) -> Option<&[f64]> {
        if level == 0 {
            return None;
        }
        self.details.get(level - 1).map(Vec::as_slice)
    }
}

/// One analysis step:
/// `approx[n] = Σ_k lowpass[k]·x[(2n+k) mod N]`, likewise for `detail`.
pub fn dwt_level(
    signal: &[f64],
    filters: &WaveletFilterPair,
    mode: BoundaryMode,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = signal.len();
    match mode {
        BoundaryMode::Periodic => {
            if n < 2 || !n.is_multiple_of(2) {
                return Err(PqError::Shape(format!(
                    "periodic DWT needs an even length >= 2, got {n}"
                )));
            }
        }
    }
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for i in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for k in 0..DB4_TAPS {
            let x = signal[(2 * i + k) % n];
            a += filters.lowpass[k] * x;
            d += filters.highpass[k] * x;
        }
        approx[i] = a;
        detail[i] = d;
    }
    Ok((approx, detail))
}

/// Inverse of [`dwt_level`] (transpose of the orthogonal analysis operator).
pub fn idwt_level(
    approx: &[f64],
    detail: &[f64],
    filters: &WaveletFilterPair,
    mode: BoundaryMode,
) -> Result<Vec<f64>> {
    if approx.len() != detail.len() || approx.is_empty() {
        return Err(PqError::Shape(format!(
            "approximation ({}) and detail ({}) lengths must match and be nonzero",
            approx.len(),
            detail.len()
        )));
    }
    let BoundaryMode::Periodic = mode;
    let n = 2 * approx.len();
    let mut out = vec![0.0; n];
    for (i, (&a, &d)) in approx.iter().zip(detail).enumerate() {
        for k in 0..DB4_TAPS {
            out[(2 * i + k) % n] += filters.lowpass[k] * a + filters.highpass[k] * d;
        }
    }
    Ok(out)
}

/// Multi-level decomposition by iterating [`dwt_level`] on the approximation.
pub fn wavedec(
    signal: &[f64],
    levels: usize,
    filters: &WaveletFilterPair,
    mode: BoundaryMode,
) -> Result<DecompositionResult> {
    if levels == 0 {
        return Err(PqError::Shape("wavedec needs at least one level".into()));
    }
    let block = 1usize
        .checked_shl(levels as u32)
        .filter(|b| *b > 0)
        .ok_or_else(|| PqError::Shape(format!("{levels} levels is too many")))?;
    if signal.is_empty() || !signal.len().is_multiple_of(block) {
        return Err(PqError::Shape(format!(
            "length {} is not a positive multiple of 2^{levels}",
            signal.len()
        )));
    }

    let mut details = Vec::with_capacity(levels);
    let mut approx = signal.to_vec();
    for _ in 0..levels {
        let (a, d) = dwt_level(&approx, filters, mode)?;
        details.push(d);
        approx = a;
    }
    Ok(DecompositionResult {
        approx,
        details,
        levels,
        boundary_mode: mode,
    })
}

pub fn waverec(result: &DecompositionResult, filters: &WaveletFilterPair) -> Result<Vec<f64>> {
    if result.details.len() != result.levels || result.levels == 0 {
        return Err(PqError::Shape(format!(
            "decomposition claims {} levels but holds {} detail bands",
            result.levels,
            result.details.len()
        )));
    }
    let mut current = result.approx.clone();
    for detail in result.details.iter().rev() {
        current = idwt_level(&current, detail, filters, result.boundary_mode)?;
    }
    Ok(current)
}
