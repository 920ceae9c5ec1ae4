//! The two estimation methods (collective model over all 21 parameters,
//! individual per-step models summed into a total), hold-out and k-fold
//! evaluation, and MAE/accuracy reporting.

use std::collections::BTreeMap;
use std::fmt;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::catalog::{make_feature_mask, CatalogError, FeatureMask, ParameterVector};
use crate::dataset::{build_dataset, step_window_features, Dataset, DatasetError};
use crate::estimators::{fit_model, EstimatorError, FitParams, Model, ModelKind};
use crate::seeding::derive_seed;
use crate::simulator::{OffloadTrace, StepKind};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("predictions ({predictions}) and truths ({truths}) must be equal-length and non-empty")]
    LengthMismatch { predictions: usize, truths: usize },
    #[error("mape accuracy needs strictly positive truths, got {0}")]
    NonPositiveTruth(f64),
    #[error("r2 accuracy needs non-constant truths")]
    ZeroVarianceTruths,
    #[error("k-fold split needs 2 <= k <= n, got k = {k}, n = {n}")]
    InvalidFoldCount { k: usize, n: usize },
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    InvalidTrainFraction(f64),
    #[error("degenerate split: {n_train} train / {n_test} test instances")]
    DegenerateSplit { n_train: usize, n_test: usize },
    #[error("step-feature table has {got} entries for a dataset of {expected}")]
    StepFeatureMismatch { expected: usize, got: usize },
    #[error("report io")]
    Io(#[from] std::io::Error),
    #[error("report parse: {0}")]
    ReportParse(String),
}

/// Estimation method: one collective model or five summed per-step models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cm,
    Im,
}

impl Method {
    pub const ALL: [Method; 2] = [Method::Cm, Method::Im];

    pub fn name(self) -> &'static str {
        match self {
            Method::Cm => "cm",
            Method::Im => "im",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cm" => Ok(Method::Cm),
            "im" => Ok(Method::Im),
            other => Err(format!("unknown method {other:?} (use cm|im)")),
        }
    }
}

/// How accuracy is computed; the reports always state the mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AccuracyMode {
    /// 100 * max(0, 1 - mean(|err| / truth)).
    Mape,
    /// 100 * max(0, 1 - SSE / SST).
    R2,
}

impl AccuracyMode {
    pub fn name(self) -> &'static str {
        match self {
            AccuracyMode::Mape => "mape",
            AccuracyMode::R2 => "r2",
        }
    }
}

impl fmt::Display for AccuracyMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AccuracyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mape" => Ok(AccuracyMode::Mape),
            "r2" => Ok(AccuracyMode::R2),
            other => Err(format!("unknown accuracy mode {other:?} (use mape|r2)")),
        }
    }
}

/// Which runtime averages feed the per-step models.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImAggregation {
    /// Whole-offload means (the dataset's own features).
    #[default]
    WholeOffload,
    /// Means over each step's own sample window.
    PerStepWindow,
}


/// Training options shared by both methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainOptions {
    pub fit: FitParams,
    /// Give the dedicated transfer model a derived ideal-wire-seconds
    /// column (image_mb * 8e6 / bandwidth_bps) so linear families can
    /// represent the inverse-bandwidth term. The collective model always
    /// sees the raw 21 parameters.
    pub augment_transfer: bool,
    /// Replacement masks per step name (1-based parameter indices).
    pub mask_overrides: BTreeMap<String, Vec<usize>>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            fit: FitParams::default(),
            augment_transfer: true,
            mask_overrides: BTreeMap::new(),
        }
    }
}

/// Per-step feature vectors of one instance, indexed by [`StepKind::index`].
pub type StepFeatureSet = [ParameterVector; 5];

/// Dataset plus the optional per-step-window feature table aligned with it.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalData {
    dataset: Dataset,
    step_features: Option<Vec<StepFeatureSet>>,
}

impl EvalData {
    pub fn new(dataset: Dataset) -> Self {
        EvalData {
            dataset,
            step_features: None,
        }
    }

    pub fn with_step_features(
        dataset: Dataset,
        step_features: Vec<StepFeatureSet>,
    ) -> Result<Self, EvalError> {
        if step_features.len() != dataset.len() {
            return Err(EvalError::StepFeatureMismatch {
                expected: dataset.len(),
                got: step_features.len(),
            });
        }
        Ok(EvalData {
            dataset,
            step_features: Some(step_features),
        })
    }

    /// Build from raw traces, attaching step-window features when requested.
    pub fn from_traces(
        traces: &[OffloadTrace],
        aggregation: ImAggregation,
    ) -> Result<Self, EvalError> {
        let dataset = build_dataset(traces)?;
        match aggregation {
            ImAggregation::WholeOffload => Ok(EvalData::new(dataset)),
            ImAggregation::PerStepWindow => {
                let features = traces
                    .iter()
                    .map(step_window_features)
                    .collect::<Result<Vec<_>, _>>()?;
                EvalData::with_step_features(dataset, features)
            }
        }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn len(&self) -> usize {
        self.dataset.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dataset.is_empty()
    }

    fn step_features_for(&self, row: usize, step: StepKind) -> &ParameterVector {
        match &self.step_features {
            Some(table) => &table[row][step.index()],
            None => &self.dataset.instances()[row].features,
        }
    }

    fn subset(&self, indices: &[usize]) -> EvalData {
        let instances = indices
            .iter()
            .map(|&i| self.dataset.instances()[i])
            .collect();
        EvalData {
            dataset: Dataset::from_instances(instances).expect("non-empty subset"),
            step_features: self
                .step_features
                .as_ref()
                .map(|table| indices.iter().map(|&i| table[i]).collect()),
        }
    }
}

/// Ideal uncompressed wire time of the image, seconds.
pub fn wire_seconds(pv: &ParameterVector) -> f64 {
    pv.value(13) * 8e6 / pv.value(20)
}

fn design_row(pv: &ParameterVector, mask: &FeatureMask, augmented: bool) -> Vec<f64> {
    let mut row = mask.project(pv);
    if augmented {
        row.push(wire_seconds(pv));
    }
    row
}

/// Single model mapping all 21 parameters to the total offload time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectiveEstimator {
    pub kind: ModelKind,
    pub mask: FeatureMask,
    pub model: Model,
}

impl CollectiveEstimator {
    pub fn predict(&self, pv: &ParameterVector) -> Result<f64, EvalError> {
        Ok(self.model.predict(&design_row(pv, &self.mask, false))?)
    }
}

/// One fitted per-step model with its feature mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepComponent {
    pub step: StepKind,
    pub mask: FeatureMask,
    pub augmented: bool,
    pub model: Model,
}

/// Five per-step models; the offload-time estimate is the sum of the five
/// component predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndividualEstimator {
    pub kind: ModelKind,
    pub components: Vec<StepComponent>,
}

/// Total plus per-step breakdown; the total is the exact sum of the parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImPrediction {
    pub total: f64,
    pub per_step: [f64; 5],
}

impl IndividualEstimator {
    pub fn component(&self, step: StepKind) -> &StepComponent {
        &self.components[step.index()]
    }

    pub fn predict(&self, pv: &ParameterVector) -> Result<ImPrediction, EvalError> {
        self.predict_with(|_| pv)
    }

    pub fn predict_with_step_features(
        &self,
        features: &StepFeatureSet,
    ) -> Result<ImPrediction, EvalError> {
        self.predict_with(|step| &features[step.index()])
    }

    fn predict_with<'a, F>(&self, features_for: F) -> Result<ImPrediction, EvalError>
    where
        F: Fn(StepKind) -> &'a ParameterVector,
    {
        let mut per_step = [0.0; 5];
        for component in &self.components {
            let pv = features_for(component.step);
            let row = design_row(pv, &component.mask, component.augmented);
            per_step[component.step.index()] = component.model.predict(&row)?;
        }
        Ok(ImPrediction {
            total: per_step.iter().sum(),
            per_step,
        })
    }
}

/// A trained estimator of either method, as serialized by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum OffloadEstimator {
    Cm(CollectiveEstimator),
    Im(IndividualEstimator),
}

impl OffloadEstimator {
    pub fn method(&self) -> Method {
        match self {
            OffloadEstimator::Cm(_) => Method::Cm,
            OffloadEstimator::Im(_) => Method::Im,
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            OffloadEstimator::Cm(e) => e.kind,
            OffloadEstimator::Im(e) => e.kind,
        }
    }

    /// Total offload-time prediction (the IM breakdown is available via
    /// [`IndividualEstimator::predict`]).
    pub fn predict_total(&self, pv: &ParameterVector) -> Result<f64, EvalError> {
        match self {
            OffloadEstimator::Cm(e) => e.predict(pv),
            OffloadEstimator::Im(e) => Ok(e.predict(pv)?.total),
        }
    }

    pub fn save_json(&self, path: &Path) -> Result<(), EvalError> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)
            .map_err(|e| EvalError::ReportParse(e.to_string()))?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, EvalError> {
        let reader = BufReader::new(File::open(path)?);
        serde_json::from_reader(reader).map_err(|e| EvalError::ReportParse(e.to_string()))
    }
}

fn step_mask(step: StepKind, opts: &TrainOptions) -> Result<FeatureMask, EvalError> {
    match opts.mask_overrides.get(step.name()) {
        Some(indices) => Ok(FeatureMask::new(indices.iter().copied())?),
        None => Ok(make_feature_mask(step.into())),
    }
}

/// Fit one model of `kind` on P1..P21 against the total offload time.
pub fn train_collective(
    ds: &Dataset,
    kind: ModelKind,
    opts: &TrainOptions,
    seed: u64,
) -> Result<CollectiveEstimator, EvalError> {
    let mask = make_feature_mask(crate::catalog::MaskKind::Collective);
    let x: Vec<Vec<f64>> = ds
        .instances()
        .iter()
        .map(|i| design_row(&i.features, &mask, false))
        .collect();
    let y = ds.total_targets();
    let model = fit_model(kind, &x, &y, &opts.fit, derive_seed(seed, 5))?;
    Ok(CollectiveEstimator { kind, mask, model })
}

/// Fit five per-step models, each on its own masked columns against its
/// own step duration.
pub fn train_individual(
    data: &EvalData,
    kind: ModelKind,
    opts: &TrainOptions,
    seed: u64,
) -> Result<IndividualEstimator, EvalError> {
    let ds = data.dataset();
    let mut components = Vec::with_capacity(5);
    for step in StepKind::ALL {
        let mask = step_mask(step, opts)?;
        let augmented = opts.augment_transfer
            && step == StepKind::Transfer
            && mask.contains(13)
            && mask.contains(20);
        let x: Vec<Vec<f64>> = (0..ds.len())
            .map(|row| design_row(data.step_features_for(row, step), &mask, augmented))
            .collect();
        let y = ds.step_targets(step);
        let model = fit_model(kind, &x, &y, &opts.fit, derive_seed(seed, step.index() as u64))?;
        components.push(StepComponent {
            step,
            mask,
            augmented,
            model,
        });
    }
    Ok(IndividualEstimator { kind, components })
}

/// Mean absolute error, seconds.
pub fn mae(predictions: &[f64], truths: &[f64]) -> Result<f64, EvalError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let total: f64 = predictions
        .iter()
        .zip(truths)
        .map(|(p, t)| (p - t).abs())
        .sum();
    Ok(total / predictions.len() as f64)
}

/// Accuracy percentage in the requested mode, clamped to [0, 100].
pub fn accuracy(predictions: &[f64], truths: &[f64], mode: AccuracyMode) -> Result<f64, EvalError> {
    if predictions.len() != truths.len() || predictions.is_empty() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truths: truths.len(),
        });
    }
    let value = match mode {
        AccuracyMode::Mape => {
            for &t in truths {
                if t <= 0.0 || !t.is_finite() {
                    return Err(EvalError::NonPositiveTruth(t));
                }
            }
            let mean_rel: f64 = predictions
                .iter()
                .zip(truths)
                .map(|(p, t)| (p - t).abs() / t)
                .sum::<f64>()
                / truths.len() as f64;
            100.0 * (1.0 - mean_rel).max(0.0)
        }
        AccuracyMode::R2 => {
            let mean: f64 = truths.iter().sum::<f64>() / truths.len() as f64;
            let sst: f64 = truths.iter().map(|t| (t - mean) * (t - mean)).sum();
            if sst <= 0.0 {
                return Err(EvalError::ZeroVarianceTruths);
            }
            let sse: f64 = predictions
                .iter()
                .zip(truths)
                .map(|(p, t)| (p - t) * (p - t))
                .sum();
            100.0 * (1.0 - sse / sst).max(0.0)
        }
    };
    Ok(value.clamp(0.0, 100.0))
}

/// Shuffle 0..n by `seed` and cut into k folds whose sizes differ by at
/// most one (the first n mod k folds take the extra element).
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || k > n {
        return Err(EvalError::InvalidFoldCount { k, n });
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        folds.push(indices[at..at + size].to_vec());
        at += size;
    }
    Ok(folds)
}

/// How a dataset was split for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "split", rename_all = "lowercase")]
pub enum SplitSpec {
    Holdout { train_fraction: f64 },
    Kfold { k: usize },
}

impl fmt::Display for SplitSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SplitSpec::Holdout { train_fraction } => write!(f, "holdout {train_fraction}"),
            SplitSpec::Kfold { k } => write!(f, "kfold {k}"),
        }
    }
}

/// One evaluation result row. For k-fold runs the metrics are unweighted
/// means over folds and `n_train`/`n_test` report the first fold's sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: Method,
    pub kind: ModelKind,
    pub split: SplitSpec,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    pub accuracy_mode: AccuracyMode,
    pub mae_seconds: f64,
    pub accuracy_percent: f64,
    /// Per-step MAEs (commit, save, transfer, load, start); IM only.
    pub per_step_mae: Option<[f64; 5]>,
}

struct FoldOutcome {
    mae: f64,
    accuracy: f64,
    per_step_mae: Option<[f64; 5]>,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_split(
    data: &EvalData,
    train_idx: &[usize],
    test_idx: &[usize],
    kind: ModelKind,
    method: Method,
    opts: &TrainOptions,
    fit_seed: u64,
    mode: AccuracyMode,
) -> Result<FoldOutcome, EvalError> {
    let train = data.subset(train_idx);
    let truths: Vec<f64> = test_idx
        .iter()
        .map(|&i| data.dataset().instances()[i].targets.t_offload)
        .collect();
    match method {
        Method::Cm => {
            let estimator = train_collective(train.dataset(), kind, opts, fit_seed)?;
            let predictions: Vec<f64> = test_idx
                .iter()
                .map(|&i| estimator.predict(&data.dataset().instances()[i].features))
                .collect::<Result<_, _>>()?;
            Ok(FoldOutcome {
                mae: mae(&predictions, &truths)?,
                accuracy: accuracy(&predictions, &truths, mode)?,
                per_step_mae: None,
            })
        }
        Method::Im => {
            let estimator = train_individual(&train, kind, opts, fit_seed)?;
            let mut predictions = Vec::with_capacity(test_idx.len());
            let mut step_abs_err = [0.0; 5];
            for &i in test_idx {
                let prediction = match &data.step_features {
                    Some(table) => estimator.predict_with_step_features(&table[i])?,
                    None => estimator.predict(&data.dataset().instances()[i].features)?,
                };
                let target_steps = data.dataset().instances()[i].targets.steps();
                for s in 0..5 {
                    step_abs_err[s] += (prediction.per_step[s] - target_steps[s]).abs();
                }
                predictions.push(prediction.total);
            }
            let count = test_idx.len() as f64;
            Ok(FoldOutcome {
                mae: mae(&predictions, &truths)?,
                accuracy: accuracy(&predictions, &truths, mode)?,
                per_step_mae: Some(step_abs_err.map(|e| e / count)),
            })
        }
    }
}

/// k-fold cross validation: train on each fold's complement, test on the
/// fold, and average the metrics over folds (unweighted).
pub fn cross_validate(
    data: &EvalData,
    kind: ModelKind,
    method: Method,
    k: usize,
    seed: u64,
    opts: &TrainOptions,
    mode: AccuracyMode,
) -> Result<EvalReport, EvalError> {
    let n = data.len();
    let folds = kfold_split(n, k, seed)?;
    let mut in_fold = vec![false; n];
    let mut mae_sum = 0.0;
    let mut acc_sum = 0.0;
    let mut step_sum = [0.0; 5];
    let mut has_steps = false;
    for (f, fold) in folds.iter().enumerate() {
        for &i in fold {
            in_fold[i] = true;
        }
        let train_idx: Vec<usize> = (0..n).filter(|&i| !in_fold[i]).collect();
        let outcome = evaluate_split(
            data,
            &train_idx,
            fold,
            kind,
            method,
            opts,
            derive_seed(seed, 1000 + f as u64),
            mode,
        )?;
        mae_sum += outcome.mae;
        acc_sum += outcome.accuracy;
        if let Some(step_mae) = outcome.per_step_mae {
            has_steps = true;
            for s in 0..5 {
                step_sum[s] += step_mae[s];
            }
        }
        for &i in fold {
            in_fold[i] = false;
        }
    }
    let folds_f = folds.len() as f64;
    Ok(EvalReport {
        method,
        kind,
        split: SplitSpec::Kfold { k },
        n_train: n - folds[0].len(),
        n_test: folds[0].len(),
        seed,
        accuracy_mode: mode,
        mae_seconds: mae_sum / folds_f,
        accuracy_percent: acc_sum / folds_f,
        per_step_mae: has_steps.then(|| step_sum.map(|s| s / folds_f)),
    })
}

/// Single shuffled train/test split at the given training fraction.
pub fn holdout_evaluate(
    data: &EvalData,
    kind: ModelKind,
    method: Method,
    train_fraction: f64,
    seed: u64,
    opts: &TrainOptions,
    mode: AccuracyMode,
) -> Result<EvalReport, EvalError> {
    if !train_fraction.is_finite() || train_fraction <= 0.0 || train_fraction >= 1.0 {
        return Err(EvalError::InvalidTrainFraction(train_fraction));
    }
    let n = data.len();
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let n_train = (train_fraction * n as f64).round() as usize;
    if n_train == 0 || n_train >= n {
        return Err(EvalError::DegenerateSplit {
            n_train,
            n_test: n - n_train,
        });
    }
    let (train_idx, test_idx) = indices.split_at(n_train);
    let outcome = evaluate_split(
        data,
        train_idx,
        test_idx,
        kind,
        method,
        opts,
        derive_seed(seed, 999),
        mode,
    )?;
    Ok(EvalReport {
        method,
        kind,
        split: SplitSpec::Holdout { train_fraction },
        n_train,
        n_test: n - n_train,
        seed,
        accuracy_mode: mode,
        mae_seconds: outcome.mae,
        accuracy_percent: outcome.accuracy,
        per_step_mae: outcome.per_step_mae,
    })
}

pub const REPORT_CSV_HEADER: &str = "method,kind,split,split_value,n_train,n_test,seed,accuracy_mode,mae_seconds,accuracy_percent,mae_commit,mae_save,mae_transfer,mae_load,mae_start";

/// Write evaluation reports as a CSV table, one row per report.
pub fn write_report_csv(reports: &[EvalReport], path: &Path) -> Result<(), EvalError> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{REPORT_CSV_HEADER}")?;
    for r in reports {
        let (split, value) = match r.split {
            SplitSpec::Holdout { train_fraction } => ("holdout", format!("{train_fraction}")),
            SplitSpec::Kfold { k } => ("kfold", format!("{k}")),
        };
        let mut line = format!(
            "{},{},{},{},{},{},{},{},{},{}",
            r.method,
            r.kind,
            split,
            value,
            r.n_train,
            r.n_test,
            r.seed,
            r.accuracy_mode,
            r.mae_seconds,
            r.accuracy_percent
        );
        match r.per_step_mae {
            Some(steps) => {
                for s in steps {
                    write!(line, ",{s}").unwrap();
                }
            }
            None => line.push_str(",,,,,"),
        }
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_report_csv(path: &Path) -> Result<Vec<EvalReport>, EvalError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| EvalError::ReportParse("report file is empty".into()))??;
    if header != REPORT_CSV_HEADER {
        return Err(EvalError::ReportParse(format!(
            "unexpected report header: {header}"
        )));
    }
    let mut reports = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != 15 {
            return Err(EvalError::ReportParse(format!(
                "line {line_no}: expected 15 columns, found {}",
                cells.len()
            )));
        }
        let bad = |what: &str| EvalError::ReportParse(format!("line {line_no}: bad {what}"));
        let method = cells[0].parse::<Method>().map_err(|_| bad("method"))?;
        let kind = cells[1].parse::<ModelKind>().map_err(|_| bad("kind"))?;
        let split = match cells[2] {
            "holdout" => SplitSpec::Holdout {
                train_fraction: cells[3].parse().map_err(|_| bad("split_value"))?,
            },
            "kfold" => SplitSpec::Kfold {
                k: cells[3].parse().map_err(|_| bad("split_value"))?,
            },
            _ => return Err(bad("split")),
        };
        let per_step_mae = if cells[10].is_empty() {
            None
        } else {
            let mut steps = [0.0; 5];
            for (s, cell) in cells[10..15].iter().enumerate() {
                steps[s] = cell.parse().map_err(|_| bad("per-step mae"))?;
            }
            Some(steps)
        };
        reports.push(EvalReport {
            method,
            kind,
            split,
            n_train: cells[4].parse().map_err(|_| bad("n_train"))?,
            n_test: cells[5].parse().map_err(|_| bad("n_test"))?,
            seed: cells[6].parse().map_err(|_| bad("seed"))?,
            accuracy_mode: cells[7].parse().map_err(|_| bad("accuracy_mode"))?,
            mae_seconds: cells[8].parse().map_err(|_| bad("mae_seconds"))?,
            accuracy_percent: cells[9].parse().map_err(|_| bad("accuracy_percent"))?,
            per_step_mae,
        });
    }
    Ok(reports)
}

/// Lower MAE wins; ties break on higher accuracy, then on kind name.
fn better(a: &EvalReport, b: &EvalReport) -> bool {
    if a.mae_seconds != b.mae_seconds {
        return a.mae_seconds < b.mae_seconds;
    }
    if a.accuracy_percent != b.accuracy_percent {
        return a.accuracy_percent > b.accuracy_percent;
    }
    a.kind.name() < b.kind.name()
}

pub fn best_report<'a>(reports: impl IntoIterator<Item = &'a EvalReport>) -> Option<&'a EvalReport> {
    let mut best: Option<&EvalReport> = None;
    for r in reports {
        if best.is_none_or(|b| better(r, b)) {
            best = Some(r);
        }
    }
    best
}

/// Human-readable summary: per-row table, best kind per method, and the
/// IM-vs-CM deltas.
pub fn render_summary(reports: &[EvalReport]) -> String {
    let mut text = String::new();
    writeln!(
        text,
        "{:<6} {:<5} {:<14} {:>8} {:>10} {:>9} {:>8}",
        "method", "kind", "split", "mae_s", "accuracy%", "n_train", "n_test"
    )
    .unwrap();
    for r in reports {
        writeln!(
            text,
            "{:<6} {:<5} {:<14} {:>8.3} {:>10.2} {:>9} {:>8}",
            r.method.name(),
            r.kind.name(),
            r.split.to_string(),
            r.mae_seconds,
            r.accuracy_percent,
            r.n_train,
            r.n_test
        )
        .unwrap();
    }
    let best_cm = best_report(reports.iter().filter(|r| r.method == Method::Cm));
    let best_im = best_report(reports.iter().filter(|r| r.method == Method::Im));
    for (label, best) in [("cm", best_cm), ("im", best_im)] {
        if let Some(r) = best {
            writeln!(
                text,
                "best {label}: {} (mae {:.3} s, accuracy {:.2}%, {})",
                r.kind.name(),
                r.mae_seconds,
                r.accuracy_percent,
                r.split
            )
            .unwrap();
        }
    }
    if let (Some(cm), Some(im)) = (best_cm, best_im) {
        writeln!(
            text,
            "im-vs-cm: mae {:+.3} s, accuracy {:+.2} points",
            im.mae_seconds - cm.mae_seconds,
            im.accuracy_percent - cm.accuracy_percent
        )
        .unwrap();
        let overall = if better(im, cm) { im } else { cm };
        writeln!(
            text,
            "overall best: {} {}",
            overall.method.name(),
            overall.kind.name()
        )
        .unwrap();
    }
    text
}
