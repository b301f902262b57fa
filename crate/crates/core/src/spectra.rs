//! Wavelet spectra: per-level log2 energies and their least-squares slope.

use serde::{Deserialize, Serialize};

use crate::energy::EnergyEstimator;
use crate::error::{Error, Result};
use crate::wavelet::WaveletDecomposition;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub level: u32,
    pub log_energy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletSpectrum {
    /// One point per detail level, levels strictly increasing.
    pub points: Vec<SpectrumPoint>,
    pub estimator: EnergyEstimator,
    pub signal_length: usize,
}

impl WaveletSpectrum {
    pub fn level_range(&self) -> Option<(u32, u32)> {
        Some((self.points.first()?.level, self.points.last()?.level))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub level_range: (u32, u32),
    pub residual_sum_squares: f64,
}

/// Which detail levels enter the slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum FitRange {
    /// All levels except the two coarsest, or all levels when that would leave fewer than two.
    #[default]
    Default,
    /// Every detail level of the decomposition.
    All,
    Explicit { min: u32, max: u32 },
}

impl FitRange {
    /// Resolves the range against the levels `coarsest..=finest` of a decomposition.
    pub fn resolve(&self, coarsest: u32, finest: u32) -> (u32, u32) {
        match *self {
            FitRange::Default if finest >= coarsest + 3 => (coarsest + 2, finest),
            FitRange::Default | FitRange::All => (coarsest, finest),
            FitRange::Explicit { min, max } => (min, max),
        }
    }
}

/// Level energies at or below this fraction of the signal's mean square count as zero.
pub const DEGENERATE_ENERGY_RATIO: f64 = 1e-24;

/// One `(level, log2 energy)` point per detail level of `decomp`.
///
/// A level whose energy is below `DEGENERATE_ENERGY_RATIO` times the signal's
/// mean square holds nothing but rounding noise and is reported as degenerate.
pub fn wavelet_spectrum(decomp: &WaveletDecomposition, estimator: EnergyEstimator) -> Result<WaveletSpectrum> {
    let flat = decomp.to_flat();
    let signal_energy = flat.iter().map(|c| c * c).sum::<f64>() / flat.len() as f64;
    let points = decomp
        .levels()
        .map(|(level, coeffs)| {
            if coeffs.len() < estimator.min_len() {
                return Err(Error::input(format!(
                    "level {level} has {} coefficients; the {} estimator needs at least {}",
                    coeffs.len(),
                    estimator.tag(),
                    estimator.min_len()
                )));
            }
            let energy = estimator.estimate(coeffs)?;
            if energy <= DEGENERATE_ENERGY_RATIO * signal_energy || !energy.is_finite() {
                return Err(Error::DegenerateEnergy { level, window: None });
            }
            Ok(SpectrumPoint { level, log_energy: energy.log2() })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveletSpectrum { points, estimator, signal_length: decomp.signal_length() })
}

/// Ordinary least-squares line through the points with `j_min <= level <= j_max`.
pub fn fit_slope(spectrum: &WaveletSpectrum, j_min: u32, j_max: u32) -> Result<SlopeFit> {
    if j_min >= j_max {
        return Err(Error::input(format!("fit range [{j_min}, {j_max}] needs j_min < j_max")));
    }
    let selected: Vec<(f64, f64)> = spectrum
        .points
        .iter()
        .filter(|p| (j_min..=j_max).contains(&p.level))
        .map(|p| (f64::from(p.level), p.log_energy))
        .collect();
    if selected.len() < 2 {
        return Err(Error::input(format!(
            "fit range [{j_min}, {j_max}] contains {} spectrum points, need at least 2",
            selected.len()
        )));
    }
    let n = selected.len() as f64;
    let mean_x = selected.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = selected.iter().map(|p| p.1).sum::<f64>() / n;
    let (sxx, sxy) = selected.iter().fold((0.0, 0.0), |(sxx, sxy), &(x, y)| {
        let dx = x - mean_x;
        (sxx + dx * dx, sxy + dx * (y - mean_y))
    });
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual_sum_squares = selected
        .iter()
        .map(|&(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(SlopeFit { slope, intercept, level_range: (j_min, j_max), residual_sum_squares })
}

/// Decomposition → spectrum → slope fit over the resolved range.
pub fn spectrum_slope(
    decomp: &WaveletDecomposition,
    estimator: EnergyEstimator,
    range: FitRange,
) -> Result<SlopeFit> {
    let spectrum = wavelet_spectrum(decomp, estimator)?;
    let (lo, hi) = range.resolve(decomp.coarsest_level(), decomp.finest_level());
    fit_slope(&spectrum, lo, hi)
}
