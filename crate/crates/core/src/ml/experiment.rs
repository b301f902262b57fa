use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{evaluate, roc_and_youden, split_and_balance, ClassifierKind, ClassifierSpec, RocPoint, SplitConfig};
use crate::error::{Error, Result};
use crate::features::{select_top_features, FeatureId, FeatureKind, FeatureMatrix};

/// Keep the `p` best features (by Fisher's criterion) among columns of one kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionGroup {
    pub kind: FeatureKind,
    pub p: usize,
}

/// Which rows feed the Fisher ranking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionScope {
    /// Rank on each repetition's training rows only.
    #[default]
    Training,
    /// Rank once on the whole dataset before any split.
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_fraction: f64,
    pub balance: bool,
    pub classifier: ClassifierSpec,
    /// Empty means every column is used.
    pub selection: Vec<SelectionGroup>,
    pub selection_scope: SelectionScope,
    /// Keep one record per repetition in the report.
    pub keep_per_rep: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            train_fraction: 0.67,
            balance: true,
            classifier: ClassifierSpec::default(),
            selection: Vec::new(),
            selection_scope: SelectionScope::Training,
            keep_per_rep: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub rep: usize,
    pub seed: u64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    /// Youden threshold chosen on the training ROC (logistic regression only).
    pub threshold: Option<f64>,
    pub selected: Vec<FeatureId>,
}

/// Averages over repetitions of a hold-out experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub classifier: ClassifierKind,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Mean test-set rates, in percent.
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub accuracy_sd: f64,
    /// Mean logistic-regression threshold.
    pub threshold: Option<f64>,
    /// Test-set ROC of the first repetition.
    pub roc: Vec<RocPoint>,
    /// The most frequently selected features across repetitions.
    pub modal_features: Vec<FeatureId>,
    pub per_rep: Vec<RepetitionRecord>,
}

struct RepOutcome {
    record: RepetitionRecord,
    roc: Vec<RocPoint>,
}

/// Column indices chosen by the selection groups, in group order.
fn select_columns(matrix: &FeatureMatrix, groups: &[SelectionGroup]) -> Result<Vec<usize>> {
    if groups.is_empty() {
        return Ok((0..matrix.n_features()).collect());
    }
    let mut chosen = Vec::new();
    for group in groups {
        let columns = matrix.columns_of_kind(group.kind);
        if columns.is_empty() {
            return Err(Error::input(format!("no {:?} features available for selection", group.kind)));
        }
        let (case, control) = matrix.select_columns(&columns).split_by_label();
        let selection = select_top_features(&case, &control, group.p)?;
        chosen.extend(selection.columns.iter().map(|&c| columns[c]));
    }
    Ok(chosen)
}

fn run_repetition(
    matrix: &FeatureMatrix,
    config: &ExperimentConfig,
    fixed_columns: Option<&[usize]>,
    rep: usize,
    seed: u64,
) -> Result<RepOutcome> {
    let split_config = SplitConfig { train_fraction: config.train_fraction, balance: config.balance, seed };
    let split = split_and_balance(matrix, &split_config)?;
    let columns = match fixed_columns {
        Some(c) => c.to_vec(),
        None => select_columns(&split.train, &config.selection)?,
    };
    let train = split.train.select_columns(&columns);
    let test = split.test.select_columns(&columns);

    let model = config.classifier.fit(&train)?;
    let threshold = match model.kind {
        ClassifierKind::LogisticRegression => Some(roc_and_youden(&model.scores(&train), train.labels())?.best_threshold),
        _ => None,
    };
    let cut = threshold.unwrap_or_else(|| model.default_threshold());
    let predicted: Vec<_> = test.rows().iter().map(|r| model.predict_with_threshold(r, cut)).collect();
    let metrics = evaluate(&predicted, test.labels())?;
    let roc = roc_and_youden(&model.scores(&test), test.labels())?.points;
    Ok(RepOutcome {
        record: RepetitionRecord {
            rep,
            seed,
            sensitivity: metrics.sensitivity,
            specificity: metrics.specificity,
            accuracy: metrics.accuracy,
            threshold,
            selected: train.feature_ids().to_vec(),
        },
        roc,
    })
}

/// Repeated balanced hold-out evaluation. Repetition `r` uses seed `base_seed + r`,
/// so results do not depend on scheduling or thread count.
pub fn repeat_experiment(
    matrix: &FeatureMatrix,
    config: &ExperimentConfig,
    reps: usize,
    base_seed: u64,
) -> Result<EvaluationReport> {
    if reps == 0 {
        return Err(Error::param("reps must be at least 1"));
    }
    let fixed = match config.selection_scope {
        SelectionScope::Full => Some(select_columns(matrix, &config.selection)?),
        SelectionScope::Training => None,
    };
    let outcomes: Vec<Result<RepOutcome>> = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let seed = base_seed.wrapping_add(rep as u64);
            run_repetition(matrix, config, fixed.as_deref(), rep, seed)
                .map_err(|e| Error::Repetition { seed, source: Box::new(e) })
        })
        .collect();
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let n = reps as f64;
    let mean = |f: fn(&RepetitionRecord) -> f64| outcomes.iter().map(|o| f(&o.record)).sum::<f64>() / n;
    let accuracy = mean(|r| r.accuracy);
    let accuracy_sd = if reps > 1 {
        (outcomes.iter().map(|o| (o.record.accuracy - accuracy).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let thresholds: Vec<f64> = outcomes.iter().filter_map(|o| o.record.threshold).collect();
    let threshold = (!thresholds.is_empty()).then(|| thresholds.iter().sum::<f64>() / thresholds.len() as f64);
    let records: Vec<RepetitionRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    let modal_len = records[0].selected.len();

    Ok(EvaluationReport {
        classifier: config.classifier.kind,
        repetitions: reps,
        base_seed,
        sensitivity: mean(|r| r.sensitivity),
        specificity: mean(|r| r.specificity),
        accuracy,
        accuracy_sd,
        threshold,
        roc: outcomes[0].roc.clone(),
        modal_features: modal_features(&records, modal_len),
        per_rep: if config.keep_per_rep { records } else { Vec::new() },
    })
}

/// The `count` features selected most often; ties go to the smaller feature id.
pub fn modal_features(records: &[RepetitionRecord], count: usize) -> Vec<FeatureId> {
    let mut freq: BTreeMap<FeatureId, usize> = BTreeMap::new();
    for r in records {
        for id in &r.selected {
            *freq.entry(*id).or_default() += 1;
        }
    }
    let mut ranked: Vec<(FeatureId, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(count).map(|(id, _)| id).collect()
}

#[cfg(test)]
mod tests {
    use super::super::test_data::blobs;
    use super::super::{fit_logistic, ClassifierModel};
    use super::*;
    use crate::features::Label;

    fn with_noise_columns(base: &FeatureMatrix) -> FeatureMatrix {
        let rows = base
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = r.clone();
                row.push(((i * 37) % 11) as f64);
                row.push(((i * 53) % 7) as f64);
                row
            })
            .collect();
        let ids = vec![FeatureId::slope(0), FeatureId::slope(500), FeatureId::magnitude(3), FeatureId::magnitude(9)];
        FeatureMatrix::new(rows, ids, base.labels().to_vec()).unwrap()
    }

    #[test]
    fn single_rep_matches_manual_pipeline() {
        let m = blobs(40, 2.0, 3);
        let cfg = ExperimentConfig::default();
        let report = repeat_experiment(&m, &cfg, 1, 77).unwrap();

        let split = split_and_balance(&m, &SplitConfig { train_fraction: 0.67, balance: true, seed: 77 }).unwrap();
        let model: ClassifierModel = fit_logistic(&split.train).unwrap();
        let t = roc_and_youden(&model.scores(&split.train), split.train.labels()).unwrap().best_threshold;
        let pred: Vec<Label> = split.test.rows().iter().map(|r| model.predict_with_threshold(r, t)).collect();
        let metrics = evaluate(&pred, split.test.labels()).unwrap();
        assert_eq!(report.accuracy, metrics.accuracy);
        assert_eq!(report.sensitivity, metrics.sensitivity);
        assert_eq!(report.threshold, Some(t));
    }

    #[test]
    fn same_seed_same_report() {
        let m = with_noise_columns(&blobs(30, 1.0, 4));
        let cfg = ExperimentConfig {
            selection: vec![
                SelectionGroup { kind: FeatureKind::Magnitude, p: 1 },
                SelectionGroup { kind: FeatureKind::Slope, p: 1 },
            ],
            ..Default::default()
        };
        let a = repeat_experiment(&m, &cfg, 12, 5).unwrap();
        let b = repeat_experiment(&m, &cfg, 12, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.per_rep.len(), 12);
        assert_eq!(a.modal_features.len(), 2);
        assert!(a.per_rep.iter().all(|r| r.selected[0].kind == FeatureKind::Magnitude));
    }

    #[test]
    fn thread_count_does_not_matter() {
        let m = blobs(30, 1.0, 6);
        let cfg = ExperimentConfig::default();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| repeat_experiment(&m, &cfg, 16, 9).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    #[test]
    fn failing_rep_reports_seed() {
        let m = blobs(30, 1.0, 6);
        let cfg = ExperimentConfig {
            selection: vec![SelectionGroup { kind: FeatureKind::Magnitude, p: 1 }],
            ..Default::default()
        };
        match repeat_experiment(&m, &cfg, 3, 40) {
            Err(Error::Repetition { seed: 40, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(repeat_experiment(&m, &ExperimentConfig::default(), 0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn modal_ties_break_by_id() {
        let rec = |ids: Vec<FeatureId>| RepetitionRecord {
            rep: 0,
            seed: 0,
            sensitivity: 0.0,
            specificity: 0.0,
            accuracy: 0.0,
            threshold: None,
            selected: ids,
        };
        let records = vec![
            rec(vec![FeatureId::slope(500), FeatureId::slope(0)]),
            rec(vec![FeatureId::slope(1000), FeatureId::slope(500)]),
        ];
        assert_eq!(modal_features(&records, 2), vec![FeatureId::slope(500), FeatureId::slope(0)]);
    }
}
