//! Self-similarity features for long one-dimensional spectra.
//!
//! Signals are decomposed with an orthogonal wavelet transform, level energies
//! are estimated with either the mean square or the distance variance, and the
//! slope of the resulting log2 energy spectrum is used as a feature. Rolling
//! windows turn one long spectrum into a vector of local slopes, which are
//! ranked by Fisher's criterion and fed to simple classifiers.

pub mod energy;
pub mod error;
pub mod features;
pub mod io;
pub mod ml;
pub mod pipeline;
pub mod spectra;
pub mod synth;
pub mod wavelet;

pub use error::{Error, Result};
