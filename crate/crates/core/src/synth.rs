//! Synthetic signals and the contaminated Brownian-motion slope experiment.

use std::io::Write;
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{Algorithm, EnergyEstimator, EstimatorKind};
use crate::error::{Error, Result};
use crate::features::{Label, MassSpectrum, SpectraDataset};
use crate::io::write_atomic;
use crate::spectra::{spectrum_slope, FitRange};
use crate::wavelet::{daubechies_filter, dwt, WaveletDecomposition};

/// Theoretical wavelet-spectrum slope of standard Brownian motion.
pub const BROWNIAN_SLOPE: f64 = -2.0;

/// Standard Brownian motion on `[0, 1]` sampled at `length` points, starting at 0.
pub fn brownian_motion(length: usize, seed: u64) -> Result<Vec<f64>> {
    brownian_motion_with(&mut ChaCha8Rng::seed_from_u64(seed), length)
}

pub fn brownian_motion_with<R: Rng + ?Sized>(rng: &mut R, length: usize) -> Result<Vec<f64>> {
    if length < 2 {
        return Err(Error::param(format!("Brownian path needs length >= 2, got {length}")));
    }
    let sd = (1.0 / length as f64).sqrt();
    let mut path = Vec::with_capacity(length);
    let mut level = 0.0;
    path.push(level);
    for _ in 1..length {
        level += sd * rng.sample::<f64, _>(StandardNormal);
        path.push(level);
    }
    Ok(path)
}

/// What to do when a level has fewer coefficients than the requested count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelOverflow {
    #[default]
    Reject,
    /// Contaminate every coefficient of such a level.
    Saturate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContaminationSpec {
    /// Coefficients hit per detail level; 0 disables contamination.
    pub coefficients_per_level: usize,
    pub noise_sd: f64,
    pub seed: u64,
    pub overflow: LevelOverflow,
}

impl Default for ContaminationSpec {
    fn default() -> Self {
        Self { coefficients_per_level: 4, noise_sd: 1.0, seed: 0, overflow: LevelOverflow::Reject }
    }
}

/// Adds `N(0, noise_sd²)` to `coefficients_per_level` distinct, uniformly chosen
/// coefficients at every detail level. The smooth coefficients are untouched.
pub fn contaminate(decomp: &WaveletDecomposition, spec: &ContaminationSpec) -> Result<WaveletDecomposition> {
    let mut out = decomp.clone();
    contaminate_in_place(&mut out, spec, &mut ChaCha8Rng::seed_from_u64(spec.seed))?;
    Ok(out)
}

pub fn contaminate_in_place<R: Rng + ?Sized>(
    decomp: &mut WaveletDecomposition,
    spec: &ContaminationSpec,
    rng: &mut R,
) -> Result<()> {
    if !(spec.noise_sd >= 0.0 && spec.noise_sd.is_finite()) {
        return Err(Error::param(format!("noise_sd must be finite and non-negative, got {}", spec.noise_sd)));
    }
    if spec.overflow == LevelOverflow::Reject {
        if let Some((level, d)) = decomp.levels().find(|(_, d)| d.len() < spec.coefficients_per_level) {
            return Err(Error::param(format!(
                "cannot contaminate {} coefficients at level {level}, which has {}",
                spec.coefficients_per_level,
                d.len()
            )));
        }
    }
    if spec.coefficients_per_level == 0 {
        return Ok(());
    }
    for level in decomp.coarsest_level()..=decomp.finest_level() {
        let coeffs = decomp.detail_mut(level).expect("level within range");
        let count = spec.coefficients_per_level.min(coeffs.len());
        for k in index::sample(rng, coeffs.len(), count) {
            coeffs[k] += spec.noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeBiasConfig {
    pub reps: usize,
    pub length: usize,
    pub wavelet_order: usize,
    pub num_levels: usize,
    pub fit_range: FitRange,
    /// `coefficients_per_level == 0` runs the uncontaminated control.
    pub contamination: ContaminationSpec,
    pub dvar_algorithm: Algorithm,
    /// Base seed; realization `r` draws from stream `r` of this seed.
    pub seed: u64,
}

impl Default for SlopeBiasConfig {
    fn default() -> Self {
        Self {
            reps: 1000,
            length: 1024,
            wavelet_order: 6,
            num_levels: 9,
            fit_range: FitRange::All,
            contamination: ContaminationSpec { overflow: LevelOverflow::Saturate, ..Default::default() },
            dvar_algorithm: Algorithm::Fast,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSlopes {
    pub estimator: String,
    pub mean: f64,
    pub sd: f64,
    pub slopes: Vec<f64>,
}

impl EstimatorSlopes {
    fn from_slopes(estimator: &str, slopes: Vec<f64>) -> Self {
        let n = slopes.len() as f64;
        let mean = slopes.iter().sum::<f64>() / n;
        let sd = if slopes.len() > 1 {
            (slopes.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Self { estimator: estimator.to_string(), mean, sd, slopes }
    }

    pub fn bias(&self) -> f64 {
        self.mean - BROWNIAN_SLOPE
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeBiasSummary {
    pub reps: usize,
    pub theoretical_slope: f64,
    /// Mean-square estimator.
    pub variance: EstimatorSlopes,
    /// Distance-variance estimator.
    pub distance_variance: EstimatorSlopes,
}

impl SlopeBiasSummary {
    /// Rows of `rep,estimator,slope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rep,estimator,slope\n");
        for est in [&self.variance, &self.distance_variance] {
            for (rep, s) in est.slopes.iter().enumerate() {
                out.push_str(&format!("{rep},{},{s}\n", est.estimator));
            }
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv().as_bytes())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(self)?;
        buf.write_all(b"\n")?;
        write_atomic(path, &buf)
    }
}

/// Generates Brownian paths, optionally contaminates their wavelet coefficients,
/// and fits the spectrum slope under both energy estimators.
pub fn slope_bias_experiment(config: &SlopeBiasConfig) -> Result<SlopeBiasSummary> {
    if config.reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let filter = daubechies_filter(config.wavelet_order)?;
    let ms = EnergyEstimator { kind: EstimatorKind::MeanSquare, algorithm: Algorithm::Fast };
    let dv = EnergyEstimator { kind: EstimatorKind::DistanceVariance, algorithm: config.dvar_algorithm };

    let pairs = (0..config.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(rep as u64);
            let path = brownian_motion_with(&mut rng, config.length)?;
            let mut decomp = dwt(&path, &filter, config.num_levels)?;
            contaminate_in_place(&mut decomp, &config.contamination, &mut rng)?;
            let a = spectrum_slope(&decomp, ms, config.fit_range)?.slope;
            let b = spectrum_slope(&decomp, dv, config.fit_range)?.slope;
            Ok((a, b))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;

    let (var_slopes, dvar_slopes) = pairs.into_iter().unzip();
    Ok(SlopeBiasSummary {
        reps: config.reps,
        theoretical_slope: BROWNIAN_SLOPE,
        variance: EstimatorSlopes::from_slopes(ms.tag(), var_slopes),
        distance_variance: EstimatorSlopes::from_slopes(dv.tag(), dvar_slopes),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapInterval {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
}

/// Percentile bootstrap for `|bias(variance)| - |bias(distance variance)|`,
/// resampling realizations in pairs. A lower bound above zero means the
/// distance-variance slopes are significantly less biased.
pub fn bias_gap_bootstrap(
    summary: &SlopeBiasSummary,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapInterval> {
    if resamples == 0 || !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::param("bootstrap needs resamples >= 1 and confidence in (0, 1)"));
    }
    let a = &summary.variance.slopes;
    let b = &summary.distance_variance.slopes;
    let n = a.len();
    let gap = |idx: &mut dyn Iterator<Item = usize>| {
        let (mut sa, mut sb) = (0.0, 0.0);
        for i in idx {
            sa += a[i];
            sb += b[i];
        }
        (sa / n as f64 - BROWNIAN_SLOPE).abs() - (sb / n as f64 - BROWNIAN_SLOPE).abs()
    };
    let estimate = gap(&mut (0..n));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            let draws: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            gap(&mut draws.into_iter())
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - confidence) / 2.0;
    let pick = |q: f64| stats[((q * resamples as f64).floor() as usize).min(resamples - 1)];
    Ok(BootstrapInterval { estimate, lower: pick(tail), upper: pick(1.0 - tail), confidence })
}

/// Knobs for [`synthetic_spectra`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpectraConfig {
    pub n_case: usize,
    pub n_control: usize,
    pub length: usize,
    /// Index range whose local roughness differs between groups.
    pub rough_region: (usize, usize),
    /// SD of the white noise added to case samples inside `rough_region`.
    pub roughness: f64,
    /// Index of a peak whose height is raised in case samples.
    pub shifted_peak: usize,
    pub peak_shift: f64,
    pub seed: u64,
}

impl Default for SyntheticSpectraConfig {
    fn default() -> Self {
        Self {
            n_case: 30,
            n_control: 30,
            length: 4096,
            rough_region: (1024, 2048),
            roughness: 2.0,
            shifted_peak: 3000,
            peak_shift: 3.0,
            seed: 0,
        }
    }
}

/// Labelled toy spectra: a random-walk baseline with peaks, a per-sample
/// intensity scale, extra local roughness in case samples, and one raised peak.
pub fn synthetic_spectra(config: &SyntheticSpectraConfig) -> Result<SpectraDataset> {
    let (lo, hi) = config.rough_region;
    if lo >= hi || hi > config.length || config.shifted_peak >= config.length {
        return Err(Error::param("synthetic spectra regions must lie inside the signal"));
    }
    let step = 19_700.0 / config.length as f64;
    let mz: Vec<f64> = (0..config.length).map(|i| 300.0 + step * i as f64).collect();
    let peak_sites: Vec<usize> = (1..12).map(|k| k * config.length / 12).chain([config.shifted_peak]).collect();

    let samples = (0..config.n_case + config.n_control)
        .map(|i| {
            let label = if i < config.n_case { Label::Case } else { Label::Control };
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(i as u64);
            let scale = (0.5 * rng.sample::<f64, _>(StandardNormal)).exp();
            let mut level = 0.0;
            let mut intensity: Vec<f64> = (0..config.length)
                .map(|_| {
                    level += rng.sample::<f64, _>(StandardNormal);
                    level
                })
                .collect();
            for (k, &site) in peak_sites.iter().enumerate() {
                let mut height = 20.0 * (0.3 * rng.sample::<f64, _>(StandardNormal)).exp();
                if site == config.shifted_peak && k == peak_sites.len() - 1 && label.is_case() {
                    height *= 1.0 + config.peak_shift;
                }
                let width = 6.0;
                let from = site.saturating_sub(30);
                let to = (site + 30).min(config.length);
                for (j, v) in intensity.iter_mut().enumerate().take(to).skip(from) {
                    let d = (j as f64 - site as f64) / width;
                    *v += height * (-0.5 * d * d).exp();
                }
            }
            if label.is_case() {
                for v in &mut intensity[lo..hi] {
                    *v += config.roughness * rng.sample::<f64, _>(StandardNormal);
                }
            }
            let intensity = intensity.into_iter().map(|v| scale * (v + 100.0)).collect();
            MassSpectrum { name: format!("{label}_{i:03}"), mz: mz.clone(), intensity, label }
        })
        .collect();
    SpectraDataset::new(samples)
}
