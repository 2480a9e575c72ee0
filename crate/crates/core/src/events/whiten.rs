//! Reduction of half-space constraints on `y ~ N(η, Σ)` to standard form.
//!
//! With `y = η + Σ^{1/2} x`, the constraint `γᵀy >= κ` becomes `ωᵀx >= τ`
//! where `ω = Σ^{1/2}γ / |Σ^{1/2}γ|` and `τ = (κ - γᵀη) / |Σ^{1/2}γ|`.
//! `Σ^{1/2}` is the symmetric square root from an eigendecomposition, with
//! eigenvalues below `1e-12·λ_max` (including small negative round-off) set
//! to zero.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::HalfSpaceProblem;
use crate::error::{AloeError, Result};

const SYMMETRY_TOLERANCE: f64 = 1e-10;
const NEGATIVE_EIGEN_TOLERANCE: f64 = 1e-10;
/// Eigenvalue (and constraint-variance) ratio treated as numerically zero.
const SINGULAR_RATIO: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralGaussianSpec {
    pub eta: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
    pub gamma: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

impl GeneralGaussianSpec {
    pub fn dim(&self) -> usize {
        self.eta.len()
    }
}

/// Whitened problem together with the map back to the original variables.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub problem: HalfSpaceProblem,
    pub eta: DVector<f64>,
    pub sqrt_sigma: DMatrix<f64>,
    /// `|Σ^{1/2}γ_j|`, the standard deviation of `γ_jᵀy`.
    pub scales: Vec<f64>,
}

impl Whitening {
    /// `y = η + Σ^{1/2} x`.
    pub fn to_original(&self, x: &[f64]) -> Vec<f64> {
        let y = &self.eta + &self.sqrt_sigma * DVector::from_column_slice(x);
        y.iter().copied().collect()
    }
}

/// Result of whitening one constraint row.
#[derive(Debug, Clone, PartialEq)]
pub enum RowWhitening {
    Random {
        omega: Vec<f64>,
        tau: f64,
        scale: f64,
    },
    /// `γᵀy` has (numerically) zero variance; `mean` is `γᵀη`.
    Deterministic { mean: f64, variance_ratio: f64 },
}

/// Symmetric PSD square root after validating symmetry and sign.
/// Returns `(Σ^{1/2}, λ_max)`.
fn sqrt_psd(sigma: &DMatrix<f64>) -> Result<(DMatrix<f64>, f64)> {
    let d = sigma.nrows();
    let scale = sigma.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sigma.iter().any(|v| !v.is_finite()) {
        return Err(AloeError::InvalidInput(
            "covariance has non-finite entries".into(),
        ));
    }
    for i in 0..d {
        for j in 0..i {
            if (sigma[(i, j)] - sigma[(j, i)]).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(AloeError::InvalidInput(format!(
                    "covariance is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    let sym = (sigma + sigma.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().copied().fold(0.0f64, f64::max);
    if lmax <= 0.0 {
        return Err(AloeError::InvalidInput(
            "covariance has no positive eigenvalue".into(),
        ));
    }
    let lmin = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    if lmin < -NEGATIVE_EIGEN_TOLERANCE * lmax {
        return Err(AloeError::InvalidInput(format!(
            "covariance is not positive semidefinite (eigenvalue {lmin:e})"
        )));
    }
    let roots = eig.eigenvalues.map(|l| {
        if l > SINGULAR_RATIO * lmax {
            l.sqrt()
        } else {
            0.0
        }
    });
    let v = &eig.eigenvectors;
    let root = v * DMatrix::from_diagonal(&roots) * v.transpose();
    Ok((root, lmax))
}

fn to_matrix(rows: &[Vec<f64>], d: usize, what: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(AloeError::InvalidInput(format!("{what} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

/// Whitens every row of `Γ` against `N(η, Σ)`, classifying rows whose
/// variance ratio `|Σ^{1/2}γ|² / (λ_max |γ|²)` is below 1e-12 as
/// deterministic.
pub fn whiten_rows(
    eta: &[f64],
    sigma: &DMatrix<f64>,
    gamma: &[Vec<f64>],
    kappa: &[f64],
) -> Result<(Vec<RowWhitening>, DMatrix<f64>)> {
    let d = eta.len();
    if d == 0 {
        return Err(AloeError::InvalidInput(
            "dimension must be at least 1".into(),
        ));
    }
    if sigma.nrows() != d || sigma.ncols() != d {
        return Err(AloeError::InvalidInput(format!(
            "covariance must be {d}x{d}"
        )));
    }
    if gamma.len() != kappa.len() {
        return Err(AloeError::InvalidInput(format!(
            "{} constraint rows but {} bounds",
            gamma.len(),
            kappa.len()
        )));
    }
    if eta.iter().any(|v| !v.is_finite()) {
        return Err(AloeError::InvalidInput(
            "mean has non-finite entries".into(),
        ));
    }
    let (root, lmax) = sqrt_psd(sigma)?;
    let eta_v = DVector::from_column_slice(eta);
    let mut rows = Vec::with_capacity(gamma.len());
    for (j, (g, &k)) in gamma.iter().zip(kappa).enumerate() {
        if g.len() != d {
            return Err(AloeError::InvalidInput(format!(
                "constraint {j} has length {}, expected {d}",
                g.len()
            )));
        }
        if g.iter().any(|v| !v.is_finite()) || k.is_nan() {
            return Err(AloeError::InvalidInput(format!(
                "constraint {j} has non-finite entries"
            )));
        }
        let gv = DVector::from_column_slice(g);
        let mean = gv.dot(&eta_v);
        let w = &root * &gv;
        let scale = w.norm();
        let g2 = gv.norm_squared();
        let ratio = if g2 > 0.0 {
            scale * scale / (lmax * g2)
        } else {
            0.0
        };
        if ratio < SINGULAR_RATIO {
            rows.push(RowWhitening::Deterministic {
                mean,
                variance_ratio: ratio,
            });
        } else {
            rows.push(RowWhitening::Random {
                omega: (w / scale).iter().copied().collect(),
                tau: (k - mean) / scale,
                scale,
            });
        }
    }
    Ok((rows, root))
}

/// Whitens a general Gaussian half-space system.
pub fn whiten(spec: &GeneralGaussianSpec) -> Result<HalfSpaceProblem> {
    whiten_with_transform(spec).map(|w| w.problem)
}

/// Like [`whiten`], also returning `η` and `Σ^{1/2}`.
pub fn whiten_with_transform(spec: &GeneralGaussianSpec) -> Result<Whitening> {
    let d = spec.dim();
    let sigma = to_matrix(&spec.sigma, d, "sigma")?;
    if spec.gamma.is_empty() {
        return Err(AloeError::InvalidInput(
            "at least one constraint is required".into(),
        ));
    }
    let (rows, root) = whiten_rows(&spec.eta, &sigma, &spec.gamma, &spec.kappa)?;
    let mut normals = Vec::with_capacity(rows.len() * d);
    let mut taus = Vec::with_capacity(rows.len());
    let mut scales = Vec::with_capacity(rows.len());
    for (j, row) in rows.into_iter().enumerate() {
        match row {
            RowWhitening::Random { omega, tau, scale } => {
                normals.extend(omega);
                taus.push(tau);
                scales.push(scale);
            }
            RowWhitening::Deterministic { variance_ratio, .. } => {
                let g = DVector::from_column_slice(&spec.gamma[j]);
                let variance = g.dot(&(&sigma * &g));
                return Err(if variance <= 0.0 {
                    AloeError::DegenerateConstraint { index: j, variance }
                } else {
                    AloeError::NearSingularCovariance {
                        index: j,
                        ratio: variance_ratio,
                    }
                });
            }
        }
    }
    let problem = HalfSpaceProblem::from_flat(d, normals, taus)?;
    Ok(Whitening {
        problem,
        eta: DVector::from_column_slice(&spec.eta),
        sqrt_sigma: root,
        scales,
    })
}
