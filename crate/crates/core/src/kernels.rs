use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("invalid {kind} kernel: {message}")]
    InvalidParameter { kind: &'static str, message: String },
    #[error("input of dimension {found}, expected {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

fn one() -> f64 {
    1.0
}

/// Kernel on `R^d`. Inputs of tuples are the concatenated sample vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelSpec {
    /// `x . y + c`
    Linear {
        #[serde(default = "one")]
        c: f64,
    },
    /// `(x . y + c)^degree`
    Polynomial {
        degree: u32,
        #[serde(default = "one")]
        c: f64,
    },
    /// `exp(-|x - y|^2 / (2 sigma^2))`
    Rbf { sigma: f64 },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::Linear { c: 1.0 }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), KernelError> {
        match *self {
            KernelSpec::Linear { c } if !c.is_finite() || c < 0.0 => Err(KernelError::InvalidParameter {
                kind: "linear",
                message: format!("offset c = {c} must be finite and non-negative"),
            }),
            KernelSpec::Polynomial { degree, c } if degree == 0 || !c.is_finite() || c < 0.0 => {
                Err(KernelError::InvalidParameter {
                    kind: "polynomial",
                    message: format!("need degree >= 1 and c >= 0, got degree {degree}, c = {c}"),
                })
            }
            KernelSpec::Rbf { sigma } if !(sigma.is_finite() && sigma > 0.0) => Err(KernelError::InvalidParameter {
                kind: "rbf",
                message: format!("sigma = {sigma} must be positive"),
            }),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let dot = || x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>();
        match *self {
            KernelSpec::Linear { c } => dot() + c,
            KernelSpec::Polynomial { degree, c } => (dot() + c).powi(degree as i32),
            KernelSpec::Rbf { sigma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

fn check_dims(rows: &[Vec<f64>], expected: usize) -> Result<(), KernelError> {
    match rows.iter().find(|r| r.len() != expected) {
        Some(r) => Err(KernelError::DimensionMismatch {
            expected,
            found: r.len(),
        }),
        None => Ok(()),
    }
}

/// `K_ij = k(x_i, x_j)`.
pub fn gram(spec: &KernelSpec, inputs: &[Vec<f64>]) -> Result<DMatrix<f64>, KernelError> {
    spec.validate()?;
    if let Some(first) = inputs.first() {
        check_dims(inputs, first.len())?;
    }
    let n = inputs.len();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = spec.eval(&inputs[i], &inputs[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

/// `K_ij = k(a_i, b_j)`.
pub fn cross_gram(spec: &KernelSpec, a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<DMatrix<f64>, KernelError> {
    spec.validate()?;
    if let Some(first) = b.first() {
        check_dims(a, first.len())?;
        check_dims(b, first.len())?;
    }
    Ok(DMatrix::from_fn(a.len(), b.len(), |i, j| spec.eval(&a[i], &b[j])))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum Definiteness {
    PositiveDefinite { min_eigenvalue: f64 },
    PositiveSemidefinite { min_eigenvalue: f64 },
    Indefinite { min_eigenvalue: f64 },
}

impl Definiteness {
    pub fn is_positive_definite(&self) -> bool {
        matches!(self, Definiteness::PositiveDefinite { .. })
    }

    pub fn min_eigenvalue(&self) -> f64 {
        match *self {
            Definiteness::PositiveDefinite { min_eigenvalue }
            | Definiteness::PositiveSemidefinite { min_eigenvalue }
            | Definiteness::Indefinite { min_eigenvalue } => min_eigenvalue,
        }
    }
}

/// Classifies a symmetric matrix by its smallest eigenvalue, with `tol`
/// scaled by the largest eigenvalue magnitude (at least 1).
pub fn psd_check(k: &DMatrix<f64>, tol: f64) -> Definiteness {
    if k.nrows() == 0 {
        return Definiteness::PositiveDefinite {
            min_eigenvalue: f64::INFINITY,
        };
    }
    let eig = SymmetricEigen::new(k.clone()).eigenvalues;
    let min = eig.min();
    let scale = eig.amax().max(1.0);
    if min > tol * scale {
        Definiteness::PositiveDefinite { min_eigenvalue: min }
    } else if min >= -tol * scale {
        Definiteness::PositiveSemidefinite { min_eigenvalue: min }
    } else {
        Definiteness::Indefinite { min_eigenvalue: min }
    }
}
