//! Rolling-window slope features, direct magnitude features and Fisher ranking.

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::EnergyEstimator;
use crate::error::{Error, Result};
use crate::spectra::{spectrum_slope, FitRange};
use crate::wavelet::{dwt, dyadic_exponent, FilterPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Case,
    Control,
}

impl Label {
    pub fn is_case(self) -> bool {
        self == Label::Case
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Case => "case",
            Label::Control => "control",
        })
    }
}

/// One sample: intensities on an ascending m/z grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MassSpectrum {
    pub name: String,
    pub mz: Vec<f64>,
    pub intensity: Vec<f64>,
    pub label: Label,
}

/// Samples sharing one m/z grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectraDataset {
    samples: Vec<MassSpectrum>,
}

impl SpectraDataset {
    pub fn new(samples: Vec<MassSpectrum>) -> Result<Self> {
        let first = samples.first().ok_or_else(|| Error::input("dataset has no samples"))?;
        for s in &samples {
            if s.mz.len() != s.intensity.len() {
                return Err(Error::input(format!(
                    "sample {} has {} m/z values but {} intensities",
                    s.name,
                    s.mz.len(),
                    s.intensity.len()
                )));
            }
            if s.mz.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::input(format!("sample {} has a non-ascending m/z grid", s.name)));
            }
            if s.mz.len() != first.mz.len() {
                return Err(Error::input(format!(
                    "sample {} has grid length {}, expected {}",
                    s.name,
                    s.mz.len(),
                    first.mz.len()
                )));
            }
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[MassSpectrum] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn grid_len(&self) -> usize {
        self.samples[0].mz.len()
    }

    pub fn mz(&self) -> &[f64] {
        &self.samples[0].mz
    }

    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    /// Same dataset with every sample's intensities multiplied by `factor(i)`.
    pub fn rescaled(&self, factor: impl Fn(usize) -> f64) -> Self {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let c = factor(i);
                MassSpectrum { intensity: s.intensity.iter().map(|v| v * c).collect(), ..s.clone() }
            })
            .collect();
        Self { samples }
    }
}

/// Start offsets of the overlapping windows slid along a signal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowPlan {
    pub window_length: usize,
    pub step: usize,
    pub num_windows: usize,
    pub window_starts: Vec<usize>,
}

impl WindowPlan {
    /// One past the last index covered by any window.
    pub fn covered_len(&self) -> usize {
        self.window_starts.last().map_or(0, |s| s + self.window_length)
    }
}

pub fn plan_windows(signal_length: usize, window_length: usize, step: usize) -> Result<WindowPlan> {
    if step == 0 {
        return Err(Error::param("window step must be at least 1"));
    }
    if dyadic_exponent(window_length).is_none_or(|j| j < 1) {
        return Err(Error::param(format!("window length {window_length} is not a power of two >= 2")));
    }
    if window_length > signal_length {
        return Err(Error::input(format!(
            "window length {window_length} exceeds signal length {signal_length}"
        )));
    }
    let num_windows = (signal_length - window_length) / step + 1;
    let window_starts = (0..num_windows).map(|w| w * step).collect();
    Ok(WindowPlan { window_length, step, num_windows, window_starts })
}

/// Wavelet settings used to turn a window of intensities into one slope.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeSettings {
    pub filter: FilterPair,
    pub num_levels: usize,
    pub estimator: EnergyEstimator,
    pub fit_range: FitRange,
}

/// The evolutionary spectrum of one signal: one wavelet-spectrum slope per window.
pub fn rolling_slopes(intensity: &[f64], plan: &WindowPlan, settings: &SlopeSettings) -> Result<Vec<f64>> {
    if plan.covered_len() > intensity.len() {
        return Err(Error::input(format!(
            "window plan covers {} points but the signal has {}",
            plan.covered_len(),
            intensity.len()
        )));
    }
    plan.window_starts
        .iter()
        .enumerate()
        .map(|(w, &start)| {
            let window = &intensity[start..start + plan.window_length];
            let decomp = dwt(window, &settings.filter, settings.num_levels)?;
            spectrum_slope(&decomp, settings.estimator, settings.fit_range)
                .map(|fit| fit.slope)
                .map_err(|e| match e {
                    Error::DegenerateEnergy { level, .. } => Error::DegenerateEnergy { level, window: Some(w) },
                    other => other,
                })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Slope,
    Magnitude,
}

/// Provenance of a feature column: window start index for slopes, m/z index for magnitudes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FeatureId {
    pub kind: FeatureKind,
    pub index: usize,
}

impl FeatureId {
    pub fn slope(window_start: usize) -> Self {
        Self { kind: FeatureKind::Slope, index: window_start }
    }

    pub fn magnitude(mz_index: usize) -> Self {
        Self { kind: FeatureKind::Magnitude, index: mz_index }
    }
}

impl fmt::Display for FeatureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            FeatureKind::Slope => write!(f, "slope@{}", self.index),
            FeatureKind::Magnitude => write!(f, "mag@{}", self.index),
        }
    }
}

impl std::str::FromStr for FeatureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, index) = s.split_once('@').ok_or_else(|| Error::input(format!("bad feature id '{s}'")))?;
        let index = index.parse().map_err(|_| Error::input(format!("bad feature id '{s}'")))?;
        match kind {
            "slope" => Ok(Self::slope(index)),
            "mag" => Ok(Self::magnitude(index)),
            _ => Err(Error::input(format!("bad feature id '{s}'"))),
        }
    }
}

/// Samples × features table with labelled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    rows: Vec<Vec<f64>>,
    feature_ids: Vec<FeatureId>,
    labels: Vec<Label>,
}

impl FeatureMatrix {
    pub fn new(rows: Vec<Vec<f64>>, feature_ids: Vec<FeatureId>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::Structure(format!("{} rows but {} labels", rows.len(), labels.len())));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != feature_ids.len()) {
            return Err(Error::Structure(format!(
                "row {r} has {} values, expected {}",
                rows[r].len(),
                feature_ids.len()
            )));
        }
        let mut seen = HashSet::with_capacity(feature_ids.len());
        if let Some(dup) = feature_ids.iter().find(|id| !seen.insert(**id)) {
            return Err(Error::Structure(format!("duplicate feature id {dup}")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::input("feature matrix contains non-finite values"));
        }
        Ok(Self { rows, feature_ids, labels })
    }

    /// Zero-column matrix for the given samples.
    pub fn empty(labels: Vec<Label>) -> Self {
        Self { rows: vec![Vec::new(); labels.len()], feature_ids: Vec::new(), labels }
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_ids.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    pub fn feature_ids(&self) -> &[FeatureId] {
        &self.feature_ids
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[j]).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn select_columns(&self, columns: &[usize]) -> Self {
        Self {
            rows: self.rows.iter().map(|r| columns.iter().map(|&c| r[c]).collect()).collect(),
            feature_ids: columns.iter().map(|&c| self.feature_ids[c]).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
            feature_ids: self.feature_ids.clone(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Column indices whose feature kind is `kind`.
    pub fn columns_of_kind(&self, kind: FeatureKind) -> Vec<usize> {
        self.feature_ids.iter().enumerate().filter(|(_, id)| id.kind == kind).map(|(j, _)| j).collect()
    }

    /// `(case rows, control rows)`, each in original order.
    pub fn split_by_label(&self) -> (Self, Self) {
        let pick = |label| {
            let idx: Vec<usize> = (0..self.n_samples()).filter(|&i| self.labels[i] == label).collect();
            self.select_rows(&idx)
        };
        (pick(Label::Case), pick(Label::Control))
    }
}

/// Rolling slopes for every sample, one column per window.
pub fn slope_features(dataset: &SpectraDataset, plan: &WindowPlan, settings: &SlopeSettings) -> Result<FeatureMatrix> {
    let rows = dataset
        .samples()
        .par_iter()
        .map(|s| {
            rolling_slopes(&s.intensity, plan, settings).map_err(|e| match e {
                Error::DegenerateEnergy { .. } => Error::Ingestion {
                    path: s.name.clone().into(),
                    message: e.to_string(),
                },
                other => other,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ids = plan.window_starts.iter().map(|&s| FeatureId::slope(s)).collect();
    FeatureMatrix::new(rows, ids, dataset.labels())
}

/// Raw intensities at every m/z index with `mz >= mz_min`.
pub fn magnitude_candidates(dataset: &SpectraDataset, mz_min: f64) -> Result<FeatureMatrix> {
    if mz_min.is_nan() || mz_min < 0.0 {
        return Err(Error::param(format!("mz_min must be non-negative, got {mz_min}")));
    }
    let columns: Vec<usize> = dataset.mz().iter().enumerate().filter(|(_, &m)| m >= mz_min).map(|(i, _)| i).collect();
    if columns.is_empty() {
        return Err(Error::input(format!("no m/z values at or above {mz_min}")));
    }
    let rows = dataset.samples().iter().map(|s| columns.iter().map(|&c| s.intensity[c]).collect()).collect();
    FeatureMatrix::new(rows, columns.iter().map(|&c| FeatureId::magnitude(c)).collect(), dataset.labels())
}

/// `(μ_case − μ_control)² / (σ²_case + σ²_control)` with unbiased variances.
pub fn fisher_criterion(case_values: &[f64], control_values: &[f64]) -> Result<f64> {
    if case_values.len() < 2 || control_values.len() < 2 {
        return Err(Error::input("Fisher's criterion needs at least 2 values per group"));
    }
    let (m1, v1) = mean_and_variance(case_values);
    let (m0, v0) = mean_and_variance(control_values);
    let pooled = v1 + v0;
    if pooled <= 0.0 {
        return Err(Error::Degenerate("zero pooled variance in Fisher's criterion".into()));
    }
    Ok((m1 - m0).powi(2) / pooled)
}

pub(crate) fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (mean, ss / (n - 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherScore {
    pub feature_id: FeatureId,
    pub f_value: f64,
}

/// Result of top-p selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    /// Selected features in decreasing F order.
    pub scores: Vec<FisherScore>,
    /// Column positions of the selected features in the input matrices.
    pub columns: Vec<usize>,
    pub case: FeatureMatrix,
    pub control: FeatureMatrix,
}

impl Selection {
    pub fn feature_ids(&self) -> Vec<FeatureId> {
        self.scores.iter().map(|s| s.feature_id).collect()
    }
}

/// Fisher score of every column. Columns with zero pooled variance score 0.
pub fn fisher_scores(case: &FeatureMatrix, control: &FeatureMatrix) -> Result<Vec<f64>> {
    if case.feature_ids() != control.feature_ids() {
        return Err(Error::Structure("case and control matrices have different features".into()));
    }
    if case.n_samples() < 2 || control.n_samples() < 2 {
        return Err(Error::input("Fisher ranking needs at least 2 samples per group"));
    }
    (0..case.n_features())
        .into_par_iter()
        .map(|j| match fisher_criterion(&case.column(j), &control.column(j)) {
            Ok(f) => Ok(f),
            Err(Error::Degenerate(_)) => Ok(0.0),
            Err(e) => Err(e),
        })
        .collect()
}

/// The `p` features with the largest F, ties going to the lower column index.
pub fn select_top_features(case: &FeatureMatrix, control: &FeatureMatrix, p: usize) -> Result<Selection> {
    if p == 0 || p > case.n_features() {
        return Err(Error::param(format!("p must be in 1..={}, got {p}", case.n_features())));
    }
    let scores = fisher_scores(case, control)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(p);
    Ok(Selection {
        scores: order
            .iter()
            .map(|&j| FisherScore { feature_id: case.feature_ids()[j], f_value: scores[j] })
            .collect(),
        case: case.select_columns(&order),
        control: control.select_columns(&order),
        columns: order,
    })
}

/// Top-`p` raw-intensity features by Fisher's criterion, ignoring m/z below `mz_min`.
/// Returns the reduced matrix over all samples in dataset order.
pub fn direct_magnitude_features(dataset: &SpectraDataset, p: usize, mz_min: f64) -> Result<FeatureMatrix> {
    if p == 0 {
        return Err(Error::param("p must be at least 1"));
    }
    let candidates = magnitude_candidates(dataset, mz_min)?;
    let (case, control) = candidates.split_by_label();
    let selection = select_top_features(&case, &control, p.min(candidates.n_features()))?;
    Ok(candidates.select_columns(&selection.columns))
}

/// Column-wise concatenation of two matrices over the same samples.
pub fn combine_features(a: &FeatureMatrix, b: &FeatureMatrix) -> Result<FeatureMatrix> {
    if b.n_features() == 0 && (b.n_samples() == 0 || b.labels == a.labels) {
        return Ok(a.clone());
    }
    if a.n_features() == 0 && (a.n_samples() == 0 || a.labels == b.labels) {
        return Ok(b.clone());
    }
    if a.labels != b.labels {
        return Err(Error::input(format!(
            "cannot combine feature matrices over different samples ({} vs {} rows)",
            a.n_samples(),
            b.n_samples()
        )));
    }
    let rows = a.rows.iter().zip(&b.rows).map(|(ra, rb)| ra.iter().chain(rb).copied().collect()).collect();
    let ids = a.feature_ids.iter().chain(&b.feature_ids).copied().collect();
    FeatureMatrix::new(rows, ids, a.labels.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavelet::daubechies_filter;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn settings() -> SlopeSettings {
        SlopeSettings {
            filter: daubechies_filter(6).unwrap(),
            num_levels: 6,
            estimator: EnergyEstimator::DISTANCE_VARIANCE,
            fit_range: FitRange::Default,
        }
    }

    fn walk(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = 0.0;
        (0..len)
            .map(|_| {
                acc += rng.sample::<f64, _>(StandardNormal);
                acc
            })
            .collect()
    }

    #[test]
    fn nci_window_plan() {
        let plan = plan_windows(15153, 1024, 500).unwrap();
        assert_eq!(plan.num_windows, 29);
        assert_eq!(plan.covered_len(), 15024);
        assert_eq!(15153 - plan.covered_len(), 129);
    }

    #[test]
    fn small_plans() {
        for step in [1, 7, 500, 5000] {
            let plan = plan_windows(1024, 1024, step).unwrap();
            assert_eq!(plan.window_starts, vec![0]);
        }
        assert_eq!(plan_windows(2048, 1024, 512).unwrap().window_starts, vec![0, 512, 1024]);
        assert!(matches!(plan_windows(1000, 1024, 1), Err(Error::Input(_))));
        assert!(matches!(plan_windows(4096, 1000, 1), Err(Error::Parameter(_))));
        assert!(matches!(plan_windows(4096, 1024, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_criterion(&[1.0, 2.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(fisher_criterion(&[0.0, 1.0], &[1.0, 2.0]).unwrap(), 1.0);
        assert_eq!(fisher_criterion(&[1.0, 3.0, 2.0], &[0.0, 4.0]).unwrap(), 0.0);
        assert!(matches!(fisher_criterion(&[1.0, 1.0], &[2.0, 2.0]), Err(Error::Degenerate(_))));
        assert!(matches!(fisher_criterion(&[1.0], &[2.0, 3.0]), Err(Error::Input(_))));
    }

    #[test]
    fn fisher_shift_and_scale_invariant() {
        let case = [1.3, 2.9, 0.4, 5.5];
        let control = [0.1, -0.7, 1.2];
        let base = fisher_criterion(&case, &control).unwrap();
        let shift = |v: &[f64]| v.iter().map(|x| x + 17.0).collect::<Vec<_>>();
        let scale = |v: &[f64]| v.iter().map(|x| x * -4.0).collect::<Vec<_>>();
        assert!((fisher_criterion(&shift(&case), &shift(&control)).unwrap() - base).abs() < 1e-12);
        assert!((fisher_criterion(&scale(&case), &scale(&control)).unwrap() - base).abs() < 1e-12);
    }

    fn two_group_matrix(seed: u64, informative: usize, features: usize) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let label = if i % 2 == 0 { Label::Case } else { Label::Control };
            let row = (0..features)
                .map(|j| {
                    let noise: f64 = rng.sample(StandardNormal);
                    if j == informative && label.is_case() {
                        noise + 10.0
                    } else {
                        noise
                    }
                })
                .collect();
            rows.push(row);
            labels.push(label);
        }
        FeatureMatrix::new(rows, (0..features).map(FeatureId::slope).collect(), labels).unwrap()
    }

    #[test]
    fn separating_feature_ranks_first() {
        let m = two_group_matrix(3, 4, 12);
        let (case, control) = m.split_by_label();
        let sel = select_top_features(&case, &control, 3).unwrap();
        assert_eq!(sel.scores[0].feature_id, FeatureId::slope(4));
        assert_eq!(sel.case.n_features(), 3);
        assert_eq!(sel.case.n_samples(), 20);
        assert!(sel.scores.windows(2).all(|w| w[0].f_value >= w[1].f_value));
    }

    #[test]
    fn full_selection_is_sorted_identity() {
        let m = two_group_matrix(5, 2, 6);
        let (case, control) = m.split_by_label();
        let sel = select_top_features(&case, &control, 6).unwrap();
        let mut cols = sel.columns.clone();
        cols.sort();
        assert_eq!(cols, (0..6).collect::<Vec<_>>());
        assert!(matches!(select_top_features(&case, &control, 7), Err(Error::Parameter(_))));
        assert!(matches!(select_top_features(&case, &control, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn ties_prefer_lower_index() {
        let rows = vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.5], vec![0.0, 0.0, 0.1], vec![1.0, 1.0, 0.2]];
        let labels = vec![Label::Case, Label::Case, Label::Control, Label::Control];
        let m = FeatureMatrix::new(rows, (0..3).map(FeatureId::magnitude).collect(), labels).unwrap();
        let (case, control) = m.split_by_label();
        let sel = select_top_features(&case, &control, 2).unwrap();
        assert_eq!(sel.columns, vec![0, 1]);
    }

    #[test]
    fn selection_invariant_to_column_permutation() {
        let m = two_group_matrix(9, 7, 10);
        let perm = [3, 9, 0, 7, 1, 8, 2, 6, 4, 5];
        let permuted = m.select_columns(&perm);
        let pick = |m: &FeatureMatrix| {
            let (c, k) = m.split_by_label();
            let mut ids = select_top_features(&c, &k, 4).unwrap().feature_ids();
            ids.sort();
            ids
        };
        assert_eq!(pick(&m), pick(&permuted));
    }

    #[test]
    fn feature_matrix_validation() {
        let ids = vec![FeatureId::slope(0), FeatureId::slope(0)];
        assert!(FeatureMatrix::new(vec![vec![1.0, 2.0]], ids, vec![Label::Case]).is_err());
        assert!(FeatureMatrix::new(vec![vec![f64::NAN]], vec![FeatureId::slope(0)], vec![Label::Case]).is_err());
        assert!(FeatureMatrix::new(vec![vec![1.0]], vec![FeatureId::slope(0)], vec![]).is_err());
    }

    #[test]
    fn combine_and_empty() {
        let a = two_group_matrix(1, 0, 3);
        let mags = FeatureMatrix::new(
            a.rows().iter().map(|r| vec![r[0] * 2.0, r[1]]).collect(),
            vec![FeatureId::magnitude(10), FeatureId::magnitude(11)],
            a.labels().to_vec(),
        )
        .unwrap();
        assert_eq!(combine_features(&a, &FeatureMatrix::empty(a.labels().to_vec())).unwrap(), a);
        let both = combine_features(&mags, &a).unwrap();
        assert_eq!(both.n_features(), 5);
        assert_eq!(both.columns_of_kind(FeatureKind::Magnitude), vec![0, 1]);
        let other = two_group_matrix(1, 0, 3).select_rows(&[0, 1, 2]);
        assert!(matches!(combine_features(&a, &other), Err(Error::Input(_))));
    }

    #[test]
    fn feature_id_text_round_trip() {
        for id in [FeatureId::slope(500), FeatureId::magnitude(15152)] {
            assert_eq!(id.to_string().parse::<FeatureId>().unwrap(), id);
        }
        assert!("peak@3".parse::<FeatureId>().is_err());
    }

    #[test]
    fn rolling_slopes_scale_invariant() {
        let x = walk(4096, 11);
        let plan = plan_windows(x.len(), 1024, 500).unwrap();
        let base = rolling_slopes(&x, &plan, &settings()).unwrap();
        let scaled: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        let again = rolling_slopes(&scaled, &plan, &settings()).unwrap();
        assert_eq!(base.len(), plan.num_windows);
        for (a, b) in base.iter().zip(&again) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn tiled_segment_gives_similar_slopes() {
        // windows at multiples of 1024 see exactly the same segment
        let segment = walk(1024, 2);
        let offset = segment[1023] - segment[0];
        let mut x = Vec::new();
        for t in 0..4 {
            x.extend(segment.iter().map(|v| v + offset * t as f64));
        }
        let plan = plan_windows(x.len(), 1024, 1024).unwrap();
        let slopes = rolling_slopes(&x, &plan, &settings()).unwrap();
        for s in &slopes {
            assert!((s - slopes[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn degenerate_window_reports_index() {
        let mut x = walk(2048, 4);
        for v in &mut x[1024..] {
            *v = 1.0;
        }
        let plan = plan_windows(x.len(), 1024, 1024).unwrap();
        match rolling_slopes(&x, &plan, &settings()) {
            Err(Error::DegenerateEnergy { window: Some(1), .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    fn toy_dataset(shifted_index: usize) -> SpectraDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mz: Vec<f64> = (0..64).map(|i| 100.0 + 20.0 * i as f64).collect();
        let samples = (0..30)
            .map(|i| {
                let label = if i < 15 { Label::Case } else { Label::Control };
                let intensity = (0..64)
                    .map(|j| {
                        let v: f64 = rng.sample(StandardNormal);
                        if j == shifted_index && label.is_case() {
                            v + 5.0
                        } else {
                            v
                        }
                    })
                    .collect();
                MassSpectrum { name: format!("s{i:02}"), mz: mz.clone(), intensity, label }
            })
            .collect();
        SpectraDataset::new(samples).unwrap()
    }

    #[test]
    fn direct_features_find_shifted_index() {
        let ds = toy_dataset(3);
        let m = direct_magnitude_features(&ds, 4, 0.0).unwrap();
        assert_eq!(m.feature_ids()[0], FeatureId::magnitude(3));
        assert_eq!(m.n_samples(), 30);
        // index 3 sits at m/z 160, which a cut at 500 excludes
        let cut = direct_magnitude_features(&ds, 4, 500.0).unwrap();
        assert!(cut.feature_ids().iter().all(|id| ds.mz()[id.index] >= 500.0));
        assert!(matches!(direct_magnitude_features(&ds, 4, 1e6), Err(Error::Input(_))));
    }

    #[test]
    fn dataset_validation() {
        let ok = MassSpectrum { name: "a".into(), mz: vec![1.0, 2.0], intensity: vec![0.0, 1.0], label: Label::Case };
        let bad_grid = MassSpectrum { mz: vec![2.0, 1.0], ..ok.clone() };
        assert!(SpectraDataset::new(vec![ok.clone(), bad_grid]).is_err());
        let short = MassSpectrum { mz: vec![1.0], intensity: vec![0.0], ..ok.clone() };
        assert!(SpectraDataset::new(vec![ok, short]).is_err());
        assert!(SpectraDataset::new(vec![]).is_err());
    }
}
