//! From-scratch regressors behind one interface: multivariate linear
//! ridge regression, polynomial expansion, random forest, and
//! epsilon-insensitive SVR trained by sequential minimal optimization.
//!
//! All fits are deterministic given (data, hyperparameters, seed), and all
//! fitted models serialize to self-describing JSON that reproduces
//! predictions exactly on reload.

mod forest;
mod linear;
mod svr;

pub use forest::{fit_rfr, ForestModel, RfrParams, Tree, TreeNode};
pub use linear::{
    fit_mlr, fit_pmr, LinearModel, PolyModel, DEFAULT_POLY_DEGREE, DEFAULT_RIDGE_LAMBDA,
    DEFAULT_TERM_BUDGET, RIDGE_FLOOR,
};
pub use svr::{fit_svr, KernelKind, KernelSpec, SvrFitInfo, SvrModel, SvrParams};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EstimatorError {
    #[error("design matrix must have at least one row")]
    EmptyDesign,
    #[error("design matrix rows ({rows}) do not match targets ({targets})")]
    LengthMismatch { rows: usize, targets: usize },
    #[error("row {row} has {got} columns, expected {expected}")]
    RaggedRow {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("design matrix or targets contain non-finite values")]
    NonFinite,
    #[error("input has {got} features but the model expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(
        "polynomial expansion would need {terms} terms, above the budget of {budget}; \
         lower the degree"
    )]
    TermBudgetExceeded { terms: u128, budget: usize },
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparameter(String),
    #[error("normal equations could not be solved")]
    SingularSystem,
}

/// Per-column standardization fitted on the training design matrix.
/// Zero-variance columns keep a standard deviation of 1 so they pass
/// through unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Scaler {
    pub fn fit(rows: &[Vec<f64>]) -> Scaler {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.len());
        let mut means = vec![0.0; d];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; d];
        for row in rows {
            for ((s, v), m) in stds.iter_mut().zip(row).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        for (s, m) in stds.iter_mut().zip(&means) {
            *s = (*s / n as f64).sqrt();
            if *s <= 1e-12 * (1.0 + m.abs()) {
                *s = 1.0;
            }
        }
        Scaler { means, stds }
    }

    /// A no-op scaler (zero means, unit stds) for models built directly
    /// from raw-space coefficients.
    pub fn identity(dim: usize) -> Scaler {
        Scaler {
            means: vec![0.0; dim],
            stds: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform_rows(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Check shape and finiteness of a design matrix; returns the column count.
pub(crate) fn validate_design(x: &[Vec<f64>], y: &[f64]) -> Result<usize, EstimatorError> {
    if x.is_empty() {
        return Err(EstimatorError::EmptyDesign);
    }
    if x.len() != y.len() {
        return Err(EstimatorError::LengthMismatch {
            rows: x.len(),
            targets: y.len(),
        });
    }
    let d = x[0].len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != d {
            return Err(EstimatorError::RaggedRow {
                row,
                expected: d,
                got: r.len(),
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(EstimatorError::NonFinite);
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(EstimatorError::NonFinite);
    }
    Ok(d)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<(), EstimatorError> {
    if expected != got {
        return Err(EstimatorError::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// The four regression families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlr,
    Pmr,
    Rfr,
    Svr,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Mlr, ModelKind::Pmr, ModelKind::Rfr, ModelKind::Svr];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlr => "mlr",
            ModelKind::Pmr => "pmr",
            ModelKind::Rfr => "rfr",
            ModelKind::Svr => "svr",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlr" => Ok(ModelKind::Mlr),
            "pmr" => Ok(ModelKind::Pmr),
            "rfr" => Ok(ModelKind::Rfr),
            "svr" => Ok(ModelKind::Svr),
            other => Err(format!("unknown model kind {other:?} (use mlr|pmr|rfr|svr)")),
        }
    }
}

/// A fitted regressor of any of the four kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Mlr(LinearModel),
    Pmr(PolyModel),
    Rfr(ForestModel),
    Svr(SvrModel),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Mlr(_) => ModelKind::Mlr,
            Model::Pmr(_) => ModelKind::Pmr,
            Model::Rfr(_) => ModelKind::Rfr,
            Model::Svr(_) => ModelKind::Svr,
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Model::Mlr(m) => m.input_dim(),
            Model::Pmr(m) => m.input_dim(),
            Model::Rfr(m) => m.input_dim(),
            Model::Svr(m) => m.input_dim(),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, EstimatorError> {
        match self {
            Model::Mlr(m) => m.predict(x),
            Model::Pmr(m) => m.predict(x),
            Model::Rfr(m) => m.predict(x),
            Model::Svr(m) => m.predict(x),
        }
    }
}

/// Hyperparameters for all four families; every field has a default so
/// configs may set only what they change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitParams {
    pub ridge_lambda: f64,
    pub poly_degree: usize,
    pub poly_term_budget: usize,
    pub rfr: RfrParams,
    pub svr: SvrParams,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            ridge_lambda: DEFAULT_RIDGE_LAMBDA,
            poly_degree: DEFAULT_POLY_DEGREE,
            poly_term_budget: DEFAULT_TERM_BUDGET,
            rfr: RfrParams::default(),
            svr: SvrParams::default(),
        }
    }
}

/// Fit a model of the requested kind. `seed` only affects the forest;
/// the other fits are deterministic on their own.
pub fn fit_model(
    kind: ModelKind,
    x: &[Vec<f64>],
    y: &[f64],
    params: &FitParams,
    seed: u64,
) -> Result<Model, EstimatorError> {
    match kind {
        ModelKind::Mlr => fit_mlr(x, y, params.ridge_lambda).map(Model::Mlr),
        ModelKind::Pmr => fit_pmr(
            x,
            y,
            params.poly_degree,
            params.ridge_lambda,
            params.poly_term_budget,
        )
        .map(Model::Pmr),
        ModelKind::Rfr => fit_rfr(x, y, &params.rfr, seed).map(Model::Rfr),
        ModelKind::Svr => fit_svr(x, y, &params.svr).map(Model::Svr),
    }
}
