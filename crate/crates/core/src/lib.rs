//! Power-quality waveform toolkit.
//!
//! Synthesizes labelled voltage disturbances, decomposes them with a
//! three-level Daubechies (8-tap) wavelet pyramid, summarizes the coarsest
//! detail band with five statistics and classifies the result with KNN,
//! one-vs-one RBF SVM and random-forest models.

pub mod classifiers;
pub mod cli;
pub mod dwt;
pub mod error;
pub mod eval;
pub mod features;
pub mod io;
pub mod rng;
pub mod signal_gen;

pub use error::{PqError, Result};
