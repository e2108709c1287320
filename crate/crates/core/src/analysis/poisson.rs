//! Poisson log-linear regression by iteratively reweighted least squares,
//! with the HC0 sandwich covariance.

use nalgebra::{DMatrix, DVector};

use crate::error::AnalysisError;

pub const MAX_ITERATIONS: usize = 100;
pub const STEP_TOLERANCE: f64 = 1e-10;
const START_EPSILON: f64 = 1e-8;

/// Regressor matrix with named columns. The first column is the intercept.
///
/// Designs built from binary indicators also know their cells (distinct
/// regressor patterns) so identification failures can name the cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    names: Vec<String>,
    /// Row-major, `n * p`.
    values: Vec<f64>,
    cells: Option<Cells>,
}

#[derive(Debug, Clone, PartialEq)]
struct Cells {
    labels: Vec<String>,
    of_row: Vec<usize>,
}

impl Design {
    /// `log E(Y) = α + β·Z`.
    pub fn treatment(z: &[bool]) -> Self {
        let mut values = Vec::with_capacity(z.len() * 2);
        for &t in z {
            values.extend([1.0, f64::from(u8::from(t))]);
        }
        Self {
            names: vec!["intercept".into(), "Z".into()],
            values,
            cells: Some(Cells {
                labels: vec!["Z=0".into(), "Z=1".into()],
                of_row: z.iter().map(|&t| usize::from(t)).collect(),
            }),
        }
    }

    /// `log E(Y) = α + β·Z + η·X + γ·Z·X`.
    pub fn interaction(z: &[bool], x: &[bool], covariate: &str) -> Result<Self, AnalysisError> {
        if z.len() != x.len() {
            return Err(AnalysisError::LengthMismatch { design: z.len(), outcome: x.len() });
        }
        let mut values = Vec::with_capacity(z.len() * 4);
        for (&t, &c) in z.iter().zip(x) {
            let (t, c) = (f64::from(u8::from(t)), f64::from(u8::from(c)));
            values.extend([1.0, t, c, t * c]);
        }
        Ok(Self {
            names: vec!["intercept".into(), "Z".into(), covariate.into(), format!("Z:{covariate}")],
            values,
            cells: Some(Cells {
                labels: vec![
                    format!("Z=0, {covariate}=0"),
                    format!("Z=1, {covariate}=0"),
                    format!("Z=0, {covariate}=1"),
                    format!("Z=1, {covariate}=1"),
                ],
                of_row: z.iter().zip(x).map(|(&t, &c)| usize::from(t) + 2 * usize::from(c)).collect(),
            }),
        })
    }

    /// Arbitrary real-valued columns; the intercept is prepended.
    pub fn from_columns(names: &[&str], columns: &[Vec<f64>]) -> Result<Self, AnalysisError> {
        let n = columns.first().map_or(0, Vec::len);
        if let Some(bad) = columns.iter().find(|c| c.len() != n) {
            return Err(AnalysisError::LengthMismatch { design: n, outcome: bad.len() });
        }
        let mut values = Vec::with_capacity(n * (columns.len() + 1));
        for i in 0..n {
            values.push(1.0);
            values.extend(columns.iter().map(|c| c[i]));
        }
        let mut all = vec!["intercept".to_string()];
        all.extend(names.iter().map(|s| s.to_string()));
        Ok(Self { names: all, values, cells: None })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_obs(&self) -> usize {
        self.values.len() / self.p()
    }

    pub fn p(&self) -> usize {
        self.names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.p();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.p())
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n_obs(), self.p(), &self.values)
    }

    /// Checks that every cell has observations and a positive total.
    fn check_cells(&self, y: &[f64]) -> Result<(), AnalysisError> {
        let Some(cells) = &self.cells else { return Ok(()) };
        let mut count = vec![0usize; cells.labels.len()];
        let mut total = vec![0.0; cells.labels.len()];
        for (&c, &v) in cells.of_row.iter().zip(y) {
            count[c] += 1;
            total[c] += v;
        }
        for (i, label) in cells.labels.iter().enumerate() {
            if count[i] == 0 {
                return Err(AnalysisError::EmptyCell { cell: label.clone() });
            }
            if total[i] <= 0.0 {
                return Err(AnalysisError::ZeroCell { cell: label.clone() });
            }
        }
        Ok(())
    }

    /// `Σ w_i x_i x_iᵀ`.
    fn weighted_gram(&self, weights: impl Iterator<Item = f64>) -> DMatrix<f64> {
        let p = self.p();
        let mut m = DMatrix::zeros(p, p);
        for (x, w) in self.rows().zip(weights) {
            for a in 0..p {
                let wa = w * x[a];
                if wa == 0.0 {
                    continue;
                }
                for b in a..p {
                    m[(a, b)] += wa * x[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                m[(a, b)] = m[(b, a)];
            }
        }
        m
    }

    /// Columns that are linear combinations of earlier ones.
    pub fn collinear_columns(&self) -> Vec<String> {
        let gram = self.weighted_gram(std::iter::repeat(1.0));
        let mut kept: Vec<usize> = Vec::new();
        let mut dependent = Vec::new();
        for j in 0..self.p() {
            let mut trial = kept.clone();
            trial.push(j);
            let sub = DMatrix::from_fn(trial.len(), trial.len(), |a, b| gram[(trial[a], trial[b])]);
            let scale = sub.diagonal().max().max(1.0);
            let smallest = sub.symmetric_eigenvalues().min();
            if smallest > 1e-10 * scale {
                kept.push(j);
            } else {
                dependent.push(self.names[j].clone());
            }
        }
        dependent
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    /// HC0 covariance once computed; symmetric, in coefficient order.
    pub covariance: Option<DMatrix<f64>>,
    pub fitted: Vec<f64>,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|i| self.coefficients[i])
    }

    pub fn std_error(&self, index: usize) -> Option<f64> {
        self.covariance.as_ref().map(|c| c[(index, index)].max(0.0).sqrt())
    }
}

fn check_outcome(design: &Design, y: &[f64]) -> Result<(), AnalysisError> {
    if design.n_obs() != y.len() {
        return Err(AnalysisError::LengthMismatch { design: design.n_obs(), outcome: y.len() });
    }
    if let Some(row) = y.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(AnalysisError::InvalidOutcome { row });
    }
    if y.is_empty() {
        return Err(AnalysisError::NotIdentifiable("no observations".into()));
    }
    Ok(())
}

/// Cholesky factor of an information matrix, refusing near-singular ones
/// whose pivots vanish relative to the diagonal.
fn factor(m: DMatrix<f64>) -> Option<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let scale = m.diagonal().amax();
    let chol = m.cholesky()?;
    let smallest = chol.l_dirty().diagonal().iter().map(|d| d * d).fold(f64::INFINITY, f64::min);
    (scale > 0.0 && smallest > 1e-12 * scale).then_some(chol)
}

fn singular(design: &Design) -> AnalysisError {
    let mut columns = design.collinear_columns();
    if columns.is_empty() {
        columns = design.names.clone();
    }
    AnalysisError::Singular { columns }
}

/// Maximizes the Poisson log-likelihood of `y` under the log link.
///
/// Starts from `α = log(ȳ + 1e-8)` with other coefficients at zero and
/// takes Newton steps (equivalently IRLS) until the largest coefficient
/// change is below `1e-10` or 100 iterations pass. A fit that hits the
/// iteration cap comes back with `converged = false`.
pub fn fit_poisson(y: &[f64], design: &Design) -> Result<RegressionFit, AnalysisError> {
    check_outcome(design, y)?;
    design.check_cells(y)?;
    let p = design.p();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = DVector::zeros(p);
    beta[0] = (mean + START_EPSILON).ln();

    let linear = |beta: &DVector<f64>| -> Vec<f64> {
        design.rows().map(|x| x.iter().zip(beta.iter()).map(|(a, b)| a * b).sum::<f64>().exp()).collect()
    };
    let mut mu = linear(&beta);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let info = design.weighted_gram(mu.iter().copied());
        let mut score = DVector::zeros(p);
        for ((x, &yi), &mi) in design.rows().zip(y).zip(&mu) {
            let r = yi - mi;
            for a in 0..p {
                score[a] += x[a] * r;
            }
        }
        let step = factor(info).ok_or_else(|| singular(design))?.solve(&score);
        if step.iter().any(|s| !s.is_finite()) {
            return Err(singular(design));
        }
        beta += &step;
        mu = linear(&beta);
        if step.amax() < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    Ok(RegressionFit {
        names: design.names.clone(),
        coefficients: beta.iter().copied().collect(),
        covariance: None,
        fitted: mu,
        n_obs: y.len(),
        converged,
        iterations,
    })
}

/// Huber–White HC0 sandwich `A⁻¹ B A⁻¹` with `A = Σ x xᵀ μ` and
/// `B = Σ x xᵀ (y − μ)²`, symmetrized.
pub fn hc0_covariance(design: &Design, y: &[f64], fitted: &[f64]) -> Result<DMatrix<f64>, AnalysisError> {
    check_outcome(design, y)?;
    if fitted.len() != y.len() {
        return Err(AnalysisError::LengthMismatch { design: fitted.len(), outcome: y.len() });
    }
    let bread = design.weighted_gram(fitted.iter().copied());
    let meat = design.weighted_gram(y.iter().zip(fitted).map(|(y, m)| (y - m) * (y - m)));
    let inv = factor(bread).ok_or_else(|| singular(design))?.inverse();
    let cov = &inv * meat * &inv;
    Ok((&cov + cov.transpose()) * 0.5)
}

/// Fits and attaches the HC0 covariance.
pub fn fit_poisson_robust(y: &[f64], design: &Design) -> Result<RegressionFit, AnalysisError> {
    let mut fit = fit_poisson(y, design)?;
    fit.covariance = Some(hc0_covariance(design, y, &fit.fitted)?);
    Ok(fit)
}
