//! Ridge least squares on standardized columns, plain and with a full
//! monomial expansion.
//!
//! Columns are standardized and centered before solving, so the intercept
//! is unpenalized and the normal equations stay well conditioned even when
//! offline parameters are constant within a platform (rank-deficient raw
//! designs). A small lambda floor keeps the system solvable at lambda = 0.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{check_dim, validate_design, EstimatorError, Scaler};

pub const DEFAULT_RIDGE_LAMBDA: f64 = 1e-6;
pub const RIDGE_FLOOR: f64 = 1e-8;
pub const DEFAULT_POLY_DEGREE: usize = 2;
pub const DEFAULT_TERM_BUDGET: usize = 5000;

/// Multivariate linear ridge model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub scaler: Scaler,
    /// Intercept in standardized column space.
    pub intercept: f64,
    /// One coefficient per standardized input column.
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

impl LinearModel {
    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, EstimatorError> {
        check_dim(self.input_dim(), x.len())?;
        let z = self.scaler.transform_row(x);
        Ok(self.intercept + dot(&self.coefficients, &z))
    }

    /// Slopes mapped back to raw (unstandardized) input units.
    pub fn raw_coefficients(&self) -> Vec<f64> {
        self.coefficients
            .iter()
            .zip(self.scaler.stds())
            .map(|(c, s)| c / s)
            .collect()
    }

    /// Intercept in raw input units.
    pub fn raw_intercept(&self) -> f64 {
        let shift: f64 = self
            .coefficients
            .iter()
            .zip(self.scaler.means().iter().zip(self.scaler.stds()))
            .map(|(c, (m, s))| c * m / s)
            .sum();
        self.intercept - shift
    }
}

/// Polynomial ridge model over all monomials of total degree <= `degree`
/// in the standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    pub scaler: Scaler,
    pub degree: usize,
    /// Exponent vector per expanded term (constant term excluded; it is
    /// folded into the intercept).
    pub terms: Vec<Vec<u8>>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub lambda: f64,
}

impl PolyModel {
    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, EstimatorError> {
        check_dim(self.input_dim(), x.len())?;
        let z = self.scaler.transform_row(x);
        let mut value = self.intercept;
        for (term, coef) in self.terms.iter().zip(&self.coefficients) {
            value += coef * eval_term(term, &z);
        }
        Ok(value)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn eval_term(exponents: &[u8], z: &[f64]) -> f64 {
    let mut value = 1.0;
    for (&e, &v) in exponents.iter().zip(z) {
        match e {
            0 => {}
            1 => value *= v,
            _ => value *= v.powi(e as i32),
        }
    }
    value
}

/// Ridge fit with unpenalized intercept: columns are centered, the slope
/// system `(C'C + lambda I) b = C'(y - mean(y))` is solved, and the column
/// means are folded back into the intercept.
fn ridge_fit(
    columns: &[Vec<f64>],
    y: &[f64],
    lambda: f64,
) -> Result<(f64, Vec<f64>), EstimatorError> {
    let n = y.len();
    let d = columns.len();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    if d == 0 {
        return Ok((y_mean, Vec::new()));
    }
    let col_means: Vec<f64> = columns
        .iter()
        .map(|c| c.iter().sum::<f64>() / n as f64)
        .collect();

    let lambda_eff = lambda.max(RIDGE_FLOOR);
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let acc: f64 = columns[i]
                .iter()
                .zip(&columns[j])
                .map(|(a, b)| (a - col_means[i]) * (b - col_means[j]))
                .sum();
            gram[(i, j)] = acc;
            gram[(j, i)] = acc;
        }
        gram[(i, i)] += lambda_eff;
    }
    let mut rhs = DMatrix::<f64>::zeros(d, 1);
    for i in 0..d {
        rhs[(i, 0)] = columns[i]
            .iter()
            .zip(y)
            .map(|(a, t)| (a - col_means[i]) * (t - y_mean))
            .sum();
    }

    let solution = match gram.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        None => gram
            .lu()
            .solve(&rhs)
            .ok_or(EstimatorError::SingularSystem)?,
    };
    let coefficients: Vec<f64> = solution.column(0).iter().copied().collect();
    let intercept = y_mean - dot(&coefficients, &col_means);
    Ok((intercept, coefficients))
}

fn column_major(rows: &[Vec<f64>], d: usize) -> Vec<Vec<f64>> {
    let mut columns = vec![Vec::with_capacity(rows.len()); d];
    for row in rows {
        for (col, v) in columns.iter_mut().zip(row) {
            col.push(*v);
        }
    }
    columns
}

/// Fit a multivariate linear ridge regression.
pub fn fit_mlr(x: &[Vec<f64>], y: &[f64], lambda: f64) -> Result<LinearModel, EstimatorError> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(EstimatorError::InvalidHyperparameter(format!(
            "ridge lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let d = validate_design(x, y)?;
    let scaler = Scaler::fit(x);
    let z = scaler.transform_rows(x);
    let columns = column_major(&z, d);
    let (intercept, coefficients) = ridge_fit(&columns, y, lambda)?;
    Ok(LinearModel {
        scaler,
        intercept,
        coefficients,
        lambda,
    })
}

/// Number of monomials of total degree <= `degree` in `d` variables,
/// including the constant: C(d + degree, degree).
pub(crate) fn monomial_count(d: usize, degree: usize) -> u128 {
    let mut count: u128 = 1;
    for i in 1..=degree {
        count = count.saturating_mul((d + i) as u128) / i as u128;
    }
    count
}

/// All exponent vectors with 1 <= total degree <= `degree`, graded by
/// total degree and ordered with earlier columns carrying higher powers
/// first, so degree 1 reproduces the input column order.
fn monomial_exponents(d: usize, degree: usize) -> Vec<Vec<u8>> {
    fn emit(d: usize, pos: usize, remaining: u8, current: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if pos == d - 1 {
            current[pos] = remaining;
            out.push(current.clone());
            current[pos] = 0;
            return;
        }
        let mut e = remaining;
        loop {
            current[pos] = e;
            emit(d, pos + 1, remaining - e, current, out);
            if e == 0 {
                break;
            }
            e -= 1;
        }
        current[pos] = 0;
    }

    let mut terms = Vec::new();
    let mut current = vec![0u8; d];
    for total in 1..=degree {
        emit(d, 0, total as u8, &mut current, &mut terms);
    }
    terms
}

/// Fit polynomial ridge regression on the full monomial expansion.
/// Degree 1 reduces exactly to [`fit_mlr`].
pub fn fit_pmr(
    x: &[Vec<f64>],
    y: &[f64],
    degree: usize,
    lambda: f64,
    term_budget: usize,
) -> Result<PolyModel, EstimatorError> {
    if degree < 1 {
        return Err(EstimatorError::InvalidHyperparameter(
            "polynomial degree must be >= 1".into(),
        ));
    }
    if degree > u8::MAX as usize {
        return Err(EstimatorError::InvalidHyperparameter(format!(
            "polynomial degree {degree} is unreasonably large"
        )));
    }
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(EstimatorError::InvalidHyperparameter(format!(
            "ridge lambda must be finite and >= 0, got {lambda}"
        )));
    }
    let d = validate_design(x, y)?;
    let terms_needed = monomial_count(d, degree);
    if terms_needed > term_budget as u128 {
        return Err(EstimatorError::TermBudgetExceeded {
            terms: terms_needed,
            budget: term_budget,
        });
    }

    let scaler = Scaler::fit(x);
    let z = scaler.transform_rows(x);
    let terms = monomial_exponents(d, degree);
    let columns: Vec<Vec<f64>> = terms
        .iter()
        .map(|term| z.iter().map(|row| eval_term(term, row)).collect())
        .collect();
    let (intercept, coefficients) = ridge_fit(&columns, y, lambda)?;
    Ok(PolyModel {
        scaler,
        degree,
        terms,
        intercept,
        coefficients,
        lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless_line(n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let x: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        let y = x.iter().map(|r| 2.0 * r[0] + 3.0).collect();
        (x, y)
    }

    #[test]
    fn mlr_recovers_exact_line() {
        let (x, y) = noiseless_line(25);
        let model = fit_mlr(&x, &y, DEFAULT_RIDGE_LAMBDA).unwrap();
        let raw = model.raw_coefficients();
        assert!((raw[0] - 2.0).abs() < 1e-6, "slope {}", raw[0]);
        assert!((model.raw_intercept() - 3.0).abs() < 1e-6);
        for probe in [-4.0, 0.5, 100.0] {
            let p = model.predict(&[probe]).unwrap();
            assert!((p - (2.0 * probe + 3.0)).abs() < 1e-5, "at {probe}: {p}");
        }
    }

    #[test]
    fn hand_built_model_predicts_intercept_plus_dot() {
        let model = LinearModel {
            scaler: Scaler::identity(1),
            intercept: 3.0,
            coefficients: vec![2.0],
            lambda: 0.0,
        };
        assert_eq!(model.predict(&[4.0]).unwrap(), 11.0);
        assert!(model.predict(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn mlr_constant_targets_give_flat_model() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, (i * 3 % 7) as f64]).collect();
        let y = vec![5.0; 10];
        let model = fit_mlr(&x, &y, 0.0).unwrap();
        for c in model.raw_coefficients() {
            assert!(c.abs() < 1e-9, "slope {c}");
        }
        assert!((model.predict(&[100.0, -3.0]).unwrap() - 5.0).abs() < 1e-7);
    }

    #[test]
    fn mlr_single_row_predicts_that_target() {
        let model = fit_mlr(&[vec![4.0, 9.0]], &[6.25], 1e-6).unwrap();
        assert!((model.predict(&[1.0, 2.0]).unwrap() - 6.25).abs() < 1e-12);
    }

    #[test]
    fn mlr_rejects_non_finite_input() {
        assert!(fit_mlr(&[vec![1.0], vec![f64::INFINITY]], &[1.0, 2.0], 0.0).is_err());
        assert!(fit_mlr(&[vec![1.0], vec![2.0]], &[1.0, f64::NAN], 0.0).is_err());
    }

    #[test]
    fn predictions_invariant_under_affine_column_rescaling() {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| vec![i as f64, ((i * 7) % 13) as f64])
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 1.5 * r[0] - 2.0 * r[1] + 4.0).collect();
        let rescaled: Vec<Vec<f64>> = x
            .iter()
            .map(|r| vec![1000.0 * r[0] - 17.0, r[1]])
            .collect();

        let base = fit_mlr(&x, &y, DEFAULT_RIDGE_LAMBDA).unwrap();
        let scaled = fit_mlr(&rescaled, &y, DEFAULT_RIDGE_LAMBDA).unwrap();
        for (orig, resc) in x.iter().zip(&rescaled) {
            let a = base.predict(orig).unwrap();
            let b = scaled.predict(resc).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "{a} vs {b}");
        }

        let pmr_base = fit_pmr(&x, &y, 2, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET).unwrap();
        let pmr_scaled =
            fit_pmr(&rescaled, &y, 2, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET).unwrap();
        for (orig, resc) in x.iter().zip(&rescaled) {
            let a = pmr_base.predict(orig).unwrap();
            let b = pmr_scaled.predict(resc).unwrap();
            assert!((a - b).abs() <= 1e-8 * a.abs().max(1.0), "pmr {a} vs {b}");
        }
    }

    #[test]
    fn pmr_recovers_exact_quadratic() {
        let x: Vec<Vec<f64>> = (-12..=12).map(|i| vec![i as f64 * 0.5]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0] * r[0]).collect();
        let model = fit_pmr(&x, &y, 2, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET).unwrap();
        for probe in [-3.3, 0.1, 2.7, 5.0] {
            let p = model.predict(&[probe]).unwrap();
            assert!((p - probe * probe).abs() < 1e-6, "at {probe}: {p}");
        }
        // Second central difference recovers the quadratic coefficient.
        let h = 0.5;
        let (a, b, c) = (
            model.predict(&[1.0 - h]).unwrap(),
            model.predict(&[1.0]).unwrap(),
            model.predict(&[1.0 + h]).unwrap(),
        );
        let quad_coef = (a - 2.0 * b + c) / (h * h) / 2.0;
        assert!((quad_coef - 1.0).abs() < 1e-6, "quad coef {quad_coef}");
    }

    #[test]
    fn pmr_degree_one_equals_mlr() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64, ((i * 5) % 11) as f64, (i % 3) as f64])
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| 0.3 * r[0] - 1.2 * r[1] + 2.5 * r[2] + 0.7 + (r[0] * 0.01).sin())
            .collect();
        let mlr = fit_mlr(&x, &y, DEFAULT_RIDGE_LAMBDA).unwrap();
        let pmr = fit_pmr(&x, &y, 1, DEFAULT_RIDGE_LAMBDA, DEFAULT_TERM_BUDGET).unwrap();
        for probe in &x {
            let a = mlr.predict(probe).unwrap();
            let b = pmr.predict(probe).unwrap();
            assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn monomial_count_matches_brute_force_enumeration() {
        // Independently count exponent vectors with total degree <= 2 over
        // 21 variables: constant + linear + squares + pairwise products.
        let d = 21u128;
        let brute = 1 + d + d + d * (d - 1) / 2;
        assert_eq!(monomial_count(21, 2), brute);
        assert_eq!(monomial_count(21, 2), 253);
        // The generated table excludes the constant.
        assert_eq!(monomial_exponents(21, 2).len(), 252);
    }

    #[test]
    fn monomial_order_is_deterministic_and_graded() {
        let terms = monomial_exponents(2, 2);
        assert_eq!(
            terms,
            vec![
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2],
            ]
        );
    }

    #[test]
    fn pmr_term_budget_is_enforced() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| (0..21).map(|j| (i * j) as f64).collect()).collect();
        let y = vec![1.0; 30];
        let err = fit_pmr(&x, &y, 5, 1e-6, DEFAULT_TERM_BUDGET).unwrap_err();
        match err {
            EstimatorError::TermBudgetExceeded { terms, budget } => {
                assert_eq!(budget, DEFAULT_TERM_BUDGET);
                assert_eq!(terms, monomial_count(21, 5));
            }
            other => panic!("unexpected error {other:?}"),
        }
        assert!(err.to_string().contains("lower the degree"));
    }

    #[test]
    fn pmr_rejects_degree_zero() {
        assert!(fit_pmr(&[vec![1.0]], &[1.0], 0, 1e-6, 100).is_err());
    }
}
