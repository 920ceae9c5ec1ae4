//! Epsilon-insensitive support vector regression trained by sequential
//! minimal optimization on the dual.
//!
//! The dual is posed over 2n box-constrained variables (the alpha and
//! alpha* blocks) with the single equality constraint sum(alpha - alpha*)
//! = 0. Each iteration picks the maximal-KKT-violating pair, solves the
//! two-variable subproblem in closed form, clips to the box and updates
//! the gradient; training stops when the violation drops below `tol` or
//! the pass cap is reached (a pass = one pair update).

use serde::{Deserialize, Serialize};

use super::{check_dim, validate_design, EstimatorError, Scaler};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf { gamma: f64 },
}

impl KernelKind {
    fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            KernelKind::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            KernelKind::Rbf { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

/// Kernel requested in configuration; an RBF width of `None` resolves to
/// 1/d at fit time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvrParams {
    pub kernel: KernelSpec,
    /// Box constraint on each dual coefficient.
    pub c: f64,
    /// Half-width of the insensitive tube.
    pub epsilon: f64,
    /// Maximal KKT violation accepted as converged.
    pub tol: f64,
    /// Cap on pair updates.
    pub max_passes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            kernel: KernelSpec::Rbf { gamma: None },
            c: 10.0,
            epsilon: 0.1,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

/// Diagnostics recorded while fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrFitInfo {
    pub iterations: usize,
    pub converged: bool,
    pub final_kkt_violation: f64,
    /// Dual objective (minimization form) sampled once per n iterations;
    /// non-increasing by construction.
    pub objective_per_sweep: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub kernel: KernelKind,
    /// Standardized support-vector inputs.
    pub support_vectors: Vec<Vec<f64>>,
    /// Dual coefficients alpha - alpha*, one per support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub epsilon: f64,
    pub scaler: Scaler,
    pub info: SvrFitInfo,
}

impl SvrModel {
    pub fn input_dim(&self) -> usize {
        self.scaler.dim()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64, EstimatorError> {
        check_dim(self.input_dim(), x.len())?;
        let z = self.scaler.transform_row(x);
        let mut value = self.bias;
        for (sv, beta) in self.support_vectors.iter().zip(&self.coefficients) {
            value += beta * self.kernel.eval(sv, &z);
        }
        Ok(value)
    }
}

/// Index of a movable dual variable and its selection score.
type Candidate = Option<(usize, f64)>;

struct Smo<'a> {
    n: usize,
    c: f64,
    kernel_matrix: &'a [f64],
    /// 2n dual variables: alpha block then alpha* block.
    a: Vec<f64>,
    /// Gradient of the minimization objective.
    g: Vec<f64>,
    /// Linear term of the objective.
    p: Vec<f64>,
}

impl<'a> Smo<'a> {
    fn k(&self, i: usize, j: usize) -> f64 {
        self.kernel_matrix[(i % self.n) * self.n + (j % self.n)]
    }

    fn label(&self, t: usize) -> f64 {
        if t < self.n {
            1.0
        } else {
            -1.0
        }
    }

    /// Maximal violating pair: argmax of -z*G over the up set and argmin
    /// over the low set. Returns None for an empty set.
    fn select(&self) -> (Candidate, Candidate) {
        let mut up: Candidate = None;
        let mut low: Candidate = None;
        for t in 0..2 * self.n {
            let z = self.label(t);
            let score = -z * self.g[t];
            let movable_up = (z > 0.0 && self.a[t] < self.c) || (z < 0.0 && self.a[t] > 0.0);
            let movable_down = (z > 0.0 && self.a[t] > 0.0) || (z < 0.0 && self.a[t] < self.c);
            if movable_up && up.is_none_or(|(_, best)| score > best) {
                up = Some((t, score));
            }
            if movable_down && low.is_none_or(|(_, best)| score < best) {
                low = Some((t, score));
            }
        }
        (up, low)
    }

    /// 0.5 a'Qa + p'a, computed from the maintained gradient.
    fn objective(&self) -> f64 {
        0.5 * self
            .a
            .iter()
            .zip(self.g.iter().zip(&self.p))
            .map(|(a, (g, p))| a * (g + p))
            .sum::<f64>()
    }

    /// One pair update along the equality-preserving direction; returns
    /// the step size actually taken.
    fn update(&mut self, i: usize, j: usize, violation: f64) -> f64 {
        let quad = (self.k(i, i) + self.k(j, j) - 2.0 * self.k(i, j)).max(1e-12);
        let zi = self.label(i);
        let zj = self.label(j);
        let room_i = if zi > 0.0 { self.c - self.a[i] } else { self.a[i] };
        let room_j = if zj > 0.0 { self.a[j] } else { self.c - self.a[j] };
        let step = (violation / quad).min(room_i).min(room_j);
        if step <= 0.0 {
            return 0.0;
        }
        self.a[i] = (self.a[i] + zi * step).clamp(0.0, self.c);
        self.a[j] = (self.a[j] - zj * step).clamp(0.0, self.c);
        for t in 0..2 * self.n {
            let delta = self.k(t, i) - self.k(t, j);
            self.g[t] += self.label(t) * step * delta;
        }
        step
    }
}

pub fn fit_svr(x: &[Vec<f64>], y: &[f64], params: &SvrParams) -> Result<SvrModel, EstimatorError> {
    let bad = |msg: String| Err(EstimatorError::InvalidHyperparameter(msg));
    if !params.c.is_finite() || params.c <= 0.0 {
        return bad(format!("svr C must be > 0, got {}", params.c));
    }
    if !params.epsilon.is_finite() || params.epsilon <= 0.0 {
        return bad(format!("svr epsilon must be > 0, got {}", params.epsilon));
    }
    if !params.tol.is_finite() || params.tol <= 0.0 {
        return bad(format!("svr tol must be > 0, got {}", params.tol));
    }
    if params.max_passes == 0 {
        return bad("svr max_passes must be >= 1".into());
    }
    if let KernelSpec::Rbf { gamma: Some(g) } = params.kernel {
        if !g.is_finite() || g <= 0.0 {
            return bad(format!("svr gamma must be > 0, got {g}"));
        }
    }

    let d = validate_design(x, y)?;
    let n = x.len();
    let kernel = match params.kernel {
        KernelSpec::Linear => KernelKind::Linear,
        KernelSpec::Rbf { gamma } => KernelKind::Rbf {
            gamma: gamma.unwrap_or(1.0 / d as f64),
        },
    };

    let scaler = Scaler::fit(x);
    let z = scaler.transform_rows(x);
    let mut kernel_matrix = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = kernel.eval(&z[i], &z[j]);
            kernel_matrix[i * n + j] = v;
            kernel_matrix[j * n + i] = v;
        }
    }

    let mut p = Vec::with_capacity(2 * n);
    p.extend(y.iter().map(|t| params.epsilon - t));
    p.extend(y.iter().map(|t| params.epsilon + t));
    let mut smo = Smo {
        n,
        c: params.c,
        kernel_matrix: &kernel_matrix,
        a: vec![0.0; 2 * n],
        g: p.clone(),
        p,
    };

    let mut objective_per_sweep = vec![smo.objective()];
    let mut iterations = 0;
    let mut converged = false;
    let mut violation = f64::NEG_INFINITY;
    let (final_up, final_low) = loop {
        let (up, low) = smo.select();
        let (Some((i, m_up)), Some((j, m_low))) = (up, low) else {
            converged = true;
            break (up, low);
        };
        violation = m_up - m_low;
        if violation <= params.tol {
            converged = true;
            break (up, low);
        }
        if iterations >= params.max_passes {
            break (up, low);
        }
        if smo.update(i, j, violation) == 0.0 {
            // Numerically stuck; the recorded violation tells the caller.
            break (up, low);
        }
        iterations += 1;
        if iterations % n == 0 {
            objective_per_sweep.push(smo.objective());
        }
    };
    objective_per_sweep.push(smo.objective());

    let bias = match (final_up, final_low) {
        (Some((_, m_up)), Some((_, m_low))) => 0.5 * (m_up + m_low),
        (Some((_, m_up)), None) => m_up,
        (None, Some((_, m_low))) => m_low,
        (None, None) => y.iter().sum::<f64>() / n as f64,
    };

    let mut support_vectors = Vec::new();
    let mut coefficients = Vec::new();
    for (i, row) in z.iter().enumerate() {
        let beta = smo.a[i] - smo.a[n + i];
        if beta.abs() > 1e-12 {
            support_vectors.push(row.clone());
            coefficients.push(beta);
        }
    }

    Ok(SvrModel {
        kernel,
        support_vectors,
        coefficients,
        bias,
        c: params.c,
        epsilon: params.epsilon,
        scaler,
        info: SvrFitInfo {
            iterations,
            converged,
            final_kkt_violation: violation.max(0.0),
            objective_per_sweep,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_params(c: f64, epsilon: f64) -> SvrParams {
        SvrParams {
            kernel: KernelSpec::Linear,
            c,
            epsilon,
            ..SvrParams::default()
        }
    }

    #[test]
    fn constant_targets_put_everything_in_the_tube() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64]).collect();
        let y = vec![5.0; 12];
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        assert_eq!(model.bias, 5.0);
        assert!(model.coefficients.is_empty());
        assert!(model.info.converged);
        assert_eq!(model.predict(&[3.0]).unwrap(), 5.0);
    }

    #[test]
    fn linear_kernel_tracks_linear_target_within_tube() {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.1]).collect();
        let y: Vec<f64> = x.iter().map(|r| r[0]).collect();
        let model = fit_svr(&x, &y, &linear_params(1000.0, 0.01)).unwrap();
        assert!(model.info.converged, "violation {}", model.info.final_kkt_violation);
        let mae: f64 = x
            .iter()
            .zip(&y)
            .map(|(r, t)| (model.predict(r).unwrap() - t).abs())
            .sum::<f64>()
            / y.len() as f64;
        assert!(mae <= 0.01 + 1e-6, "mae {mae}");
    }

    fn random_problem(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| vec![rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0])
            .collect();
        let y = x
            .iter()
            .map(|r| (r[0] - r[1]).sin() * 3.0 + r[0] + rng.gen::<f64>() * 0.2)
            .collect();
        (x, y)
    }

    #[test]
    fn dual_solution_is_feasible() {
        let (x, y) = random_problem(120, 5);
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        let total: f64 = model.coefficients.iter().sum();
        assert!(total.abs() <= 1e-6, "sum of dual coefficients {total}");
        for beta in &model.coefficients {
            assert!(beta.abs() <= model.c + 1e-9, "|beta| {} > C", beta.abs());
        }
        assert!(!model.coefficients.is_empty());
    }

    #[test]
    fn objective_never_increases_across_sweeps() {
        let (x, y) = random_problem(80, 9);
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        let curve = &model.info.objective_per_sweep;
        assert!(curve.len() >= 2);
        for pair in curve.windows(2) {
            assert!(
                pair[1] <= pair[0] + 1e-9 * pair[0].abs().max(1.0),
                "objective rose: {} -> {}",
                pair[0],
                pair[1]
            );
        }
    }

    #[test]
    fn pass_cap_is_reported() {
        let (x, y) = random_problem(60, 2);
        let params = SvrParams {
            max_passes: 3,
            ..SvrParams::default()
        };
        let model = fit_svr(&x, &y, &params).unwrap();
        assert!(!model.info.converged);
        assert_eq!(model.info.iterations, 3);
        assert!(model.info.final_kkt_violation > params.tol);
    }

    #[test]
    fn invalid_hyperparameters_are_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        let y = vec![0.0, 1.0];
        for params in [
            SvrParams { c: 0.0, ..SvrParams::default() },
            SvrParams { epsilon: -0.1, ..SvrParams::default() },
            SvrParams {
                kernel: KernelSpec::Rbf { gamma: Some(0.0) },
                ..SvrParams::default()
            },
            SvrParams { tol: 0.0, ..SvrParams::default() },
        ] {
            assert!(fit_svr(&x, &y, &params).is_err());
        }
    }

    #[test]
    fn predict_checks_dimension() {
        let (x, y) = random_problem(30, 7);
        let model = fit_svr(&x, &y, &SvrParams::default()).unwrap();
        assert!(matches!(
            model.predict(&[1.0]),
            Err(EstimatorError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_row_training_is_degenerate_but_valid() {
        let model = fit_svr(&[vec![2.0, 3.0]], &[7.5], &SvrParams::default()).unwrap();
        assert!((model.predict(&[0.0, 0.0]).unwrap() - 7.5).abs() <= 0.1 + 1e-9);
    }
}
