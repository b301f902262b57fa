//! End-to-end classification runs driven by a [`PipelineConfig`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::energy::EnergyEstimator;
use crate::error::{Error, Result};
use crate::features::{
    combine_features, direct_magnitude_features, magnitude_candidates, plan_windows, slope_features, FeatureKind,
    FeatureMatrix, Label, SlopeSettings, SpectraDataset, WindowPlan,
};
use crate::io::write_atomic;
use crate::ml::{repeat_experiment, ClassifierSpec, EvaluationReport, ExperimentConfig, SelectionGroup, SelectionScope};
use crate::spectra::FitRange;
use crate::wavelet::daubechies_filter;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    #[default]
    SlopeOnly,
    DirectOnly,
    Combined,
}

/// Every knob of a classification run. Missing TOML keys take the defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Daubechies order, as vanishing moments.
    pub wavelet_order: usize,
    pub num_levels: usize,
    pub window_length: usize,
    pub step: usize,
    pub estimator: EnergyEstimator,
    pub fit_range: FitRange,
    pub p_slope: usize,
    pub p_direct: usize,
    /// Direct features are only drawn from m/z values at or above this.
    pub mz_min: f64,
    pub classifier: ClassifierSpec,
    pub train_fraction: f64,
    pub balance: bool,
    pub reps: usize,
    pub seed: u64,
    pub feature_set: FeatureSet,
    pub selection_scope: SelectionScope,
    /// Values of `p` for the accuracy sweep. Empty disables it. The sweep
    /// varies `p_slope`, or `p_direct` for [`FeatureSet::DirectOnly`].
    pub sweep: Vec<usize>,
    pub include_roc: bool,
    pub keep_per_rep: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            wavelet_order: 6,
            num_levels: 6,
            window_length: 1024,
            step: 500,
            estimator: EnergyEstimator::default(),
            fit_range: FitRange::Default,
            p_slope: 5,
            p_direct: 10,
            mz_min: 500.0,
            classifier: ClassifierSpec::default(),
            train_fraction: 0.67,
            balance: true,
            reps: 200,
            seed: 0,
            feature_set: FeatureSet::SlopeOnly,
            selection_scope: SelectionScope::Training,
            sweep: Vec::new(),
            include_roc: true,
            keep_per_rep: true,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Checks the settings that do not depend on the dataset.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        daubechies_filter(self.wavelet_order).map_err(|e| Error::Config(e.to_string()))?;
        if self.num_levels == 0 {
            return bad("num_levels must be at least 1".into());
        }
        if !self.window_length.is_power_of_two() || self.window_length < 1 << (self.num_levels + 1) {
            return bad(format!(
                "window_length {} must be a power of two of at least 2^(num_levels + 1)",
                self.window_length
            ));
        }
        if self.step == 0 {
            return bad("step must be at least 1".into());
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} is not in (0, 1)", self.train_fraction));
        }
        if self.reps == 0 {
            return bad("reps must be at least 1".into());
        }
        if !self.mz_min.is_finite() {
            return bad("mz_min must be finite".into());
        }
        let uses_slope = self.feature_set != FeatureSet::DirectOnly;
        let uses_direct = self.feature_set != FeatureSet::SlopeOnly;
        if (uses_slope && self.p_slope == 0) || (uses_direct && self.p_direct == 0) {
            return bad("feature counts p_slope and p_direct must be at least 1 when used".into());
        }
        if self.sweep.contains(&0) {
            return bad("sweep values must be at least 1".into());
        }
        if self.classifier.knn_k.is_multiple_of(2) {
            return bad(format!("knn_k must be odd, got {}", self.classifier.knn_k));
        }
        if self.classifier.svm_regularization.is_nan() || self.classifier.svm_regularization <= 0.0 {
            return bad("svm_regularization must be positive".into());
        }
        Ok(())
    }

    pub fn slope_settings(&self) -> Result<SlopeSettings> {
        Ok(SlopeSettings {
            filter: daubechies_filter(self.wavelet_order)?,
            num_levels: self.num_levels,
            estimator: self.estimator,
            fit_range: self.fit_range,
        })
    }

    fn selection(&self, p_slope: usize, p_direct: usize) -> Vec<SelectionGroup> {
        let slope = SelectionGroup { kind: FeatureKind::Slope, p: p_slope };
        let direct = SelectionGroup { kind: FeatureKind::Magnitude, p: p_direct };
        match self.feature_set {
            FeatureSet::SlopeOnly => vec![slope],
            FeatureSet::DirectOnly => vec![direct],
            FeatureSet::Combined => vec![direct, slope],
        }
    }

    fn experiment(&self, p_slope: usize, p_direct: usize) -> ExperimentConfig {
        ExperimentConfig {
            train_fraction: self.train_fraction,
            balance: self.balance,
            classifier: self.classifier,
            selection: self.selection(p_slope, p_direct),
            selection_scope: self.selection_scope,
            keep_per_rep: self.keep_per_rep,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub samples: usize,
    pub cases: usize,
    pub controls: usize,
    pub grid_length: usize,
}

impl DatasetSummary {
    pub fn of(dataset: &SpectraDataset) -> Self {
        Self {
            samples: dataset.len(),
            cases: dataset.count(Label::Case),
            controls: dataset.count(Label::Control),
            grid_length: dataset.grid_len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: usize,
    pub accuracy: f64,
    pub accuracy_sd: f64,
    pub sensitivity: f64,
    pub specificity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub config: PipelineConfig,
    pub dataset: DatasetSummary,
    pub windows: Option<WindowPlan>,
    pub evaluation: EvaluationReport,
    pub sweep: Vec<SweepPoint>,
}

impl PipelineReport {
    pub fn to_json(&self) -> Result<String> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        Ok(text)
    }

    pub fn sweep_csv(&self) -> String {
        let mut out = String::from("p,accuracy,accuracy_sd,sensitivity,specificity\n");
        for s in &self.sweep {
            out.push_str(&format!("{},{},{},{},{}\n", s.p, s.accuracy, s.accuracy_sd, s.sensitivity, s.specificity));
        }
        out
    }

    /// Writes the JSON report, plus `<stem>_sweep.csv` when a sweep was run.
    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json()?.as_bytes())?;
        if !self.sweep.is_empty() {
            let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
            write_atomic(&path.with_file_name(format!("{stem}_sweep.csv")), self.sweep_csv().as_bytes())?;
        }
        Ok(())
    }
}

/// Candidate features for the configured feature set: every rolling slope
/// and/or every magnitude at or above `mz_min`. Selection happens later.
pub fn candidate_features(config: &PipelineConfig, dataset: &SpectraDataset) -> Result<(FeatureMatrix, Option<WindowPlan>)> {
    let slopes = || -> Result<(FeatureMatrix, WindowPlan)> {
        let plan = plan_windows(dataset.grid_len(), config.window_length, config.step).map_err(|e| e.at_stage("windows"))?;
        let settings = config.slope_settings()?;
        let m = slope_features(dataset, &plan, &settings).map_err(|e| e.at_stage("slope features"))?;
        Ok((m, plan))
    };
    let direct = || magnitude_candidates(dataset, config.mz_min).map_err(|e| e.at_stage("direct features"));
    Ok(match config.feature_set {
        FeatureSet::SlopeOnly => {
            let (m, plan) = slopes()?;
            (m, Some(plan))
        }
        FeatureSet::DirectOnly => (direct()?, None),
        FeatureSet::Combined => {
            let (s, plan) = slopes()?;
            (combine_features(&direct()?, &s).map_err(|e| e.at_stage("combine features"))?, Some(plan))
        }
    })
}

/// The feature matrix written by the `features` command: all rolling slopes
/// and the `p_direct` best magnitudes ranked on the whole dataset.
pub fn extracted_features(config: &PipelineConfig, dataset: &SpectraDataset) -> Result<FeatureMatrix> {
    config.validate()?;
    let slopes = || -> Result<FeatureMatrix> {
        let plan = plan_windows(dataset.grid_len(), config.window_length, config.step).map_err(|e| e.at_stage("windows"))?;
        slope_features(dataset, &plan, &config.slope_settings()?).map_err(|e| e.at_stage("slope features"))
    };
    let direct = || direct_magnitude_features(dataset, config.p_direct, config.mz_min).map_err(|e| e.at_stage("direct features"));
    match config.feature_set {
        FeatureSet::SlopeOnly => slopes(),
        FeatureSet::DirectOnly => direct(),
        FeatureSet::Combined => combine_features(&direct()?, &slopes()?).map_err(|e| e.at_stage("combine features")),
    }
}

/// Feature extraction, per-repetition selection and repeated hold-out evaluation.
pub fn run_pipeline(config: &PipelineConfig, dataset: &SpectraDataset) -> Result<PipelineReport> {
    config.validate()?;
    let (candidates, windows) = candidate_features(config, dataset)?;
    let mut evaluation = repeat_experiment(&candidates, &config.experiment(config.p_slope, config.p_direct), config.reps, config.seed)
        .map_err(|e| e.at_stage("classification"))?;
    if !config.include_roc {
        evaluation.roc.clear();
    }

    let mut sweep = Vec::with_capacity(config.sweep.len());
    for &p in &config.sweep {
        let (ps, pd) = match config.feature_set {
            FeatureSet::DirectOnly => (config.p_slope, p),
            _ => (p, config.p_direct),
        };
        let experiment = ExperimentConfig { keep_per_rep: false, ..config.experiment(ps, pd) };
        let r = repeat_experiment(&candidates, &experiment, config.reps, config.seed).map_err(|e| e.at_stage("sweep"))?;
        sweep.push(SweepPoint {
            p,
            accuracy: r.accuracy,
            accuracy_sd: r.accuracy_sd,
            sensitivity: r.sensitivity,
            specificity: r.specificity,
        });
    }

    Ok(PipelineReport { config: config.clone(), dataset: DatasetSummary::of(dataset), windows, evaluation, sweep })
}
