//! PSD matrix square roots and the Fréchet distance between Gaussians.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::stats::{symmetrize, GaussianStats};

/// Maximum asymmetry `max|m - mᵀ|`, relative to `max|m|`, accepted as
/// floating-point noise.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigenvalues in `[-EIGEN_CLAMP_TOL * max|λ|, 0)` are clamped to zero.
pub const EIGEN_CLAMP_TOL: f64 = 1e-10;

/// Ridge added to both covariances when the square root fails.
pub const FALLBACK_RIDGE: f64 = 1e-6;

/// Negative trace terms down to `-ROUNDOFF_TOL * max(1, tr εa + tr εb)` are
/// treated as round-off and clamped to zero.
pub const ROUNDOFF_TOL: f64 = 1e-8;

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NonSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let scale = m.amax();
    let asymmetry = (m - m.transpose()).amax();
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok(())
}

/// Clamps round-off negatives to zero, rejecting anything further below.
fn clamp_eigenvalues(values: &mut DVector<f64>) -> Result<()> {
    if values.is_empty() {
        return Ok(());
    }
    let max_abs = values.amax();
    let min = values.min();
    if min < -EIGEN_CLAMP_TOL * max_abs {
        return Err(Error::IndefiniteMatrix {
            min_eigenvalue: min,
            max_eigenvalue: values.max(),
        });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    values.apply(|v| *v = v.max(0.0));
    Ok(())
}

/// Principal square root of a symmetric positive semidefinite matrix via
/// symmetric eigendecomposition.
pub fn sqrtm_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(m)?;
    let SymmetricEigen {
        eigenvectors,
        mut eigenvalues,
    } = SymmetricEigen::new(symmetrize(m));
    clamp_eigenvalues(&mut eigenvalues)?;
    let roots = eigenvalues.map(f64::sqrt);
    let scaled = &eigenvectors * DMatrix::from_diagonal(&roots);
    Ok(symmetrize(&(scaled * eigenvectors.transpose())))
}

/// `Tr √(a·b)` for PSD `a`, `b`, computed as `Tr √(a^½ b a^½)` so the root
/// stays real and symmetric.
pub fn trace_sqrt_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    check_symmetric(b)?;
    let root = sqrtm_psd(a)?;
    let inner = symmetrize(&(&root * b * &root));
    let mut eigenvalues = inner.symmetric_eigenvalues();
    clamp_eigenvalues(&mut eigenvalues)?;
    Ok(eigenvalues.iter().map(|v| v.sqrt()).sum())
}

/// A Fréchet distance together with whether the ridge fallback was needed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrechetDistance {
    pub value: f64,
    pub regularized: bool,
}

fn check_dims(a: &GaussianStats, b: &GaussianStats) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

fn trace_term(cov_a: &DMatrix<f64>, cov_b: &DMatrix<f64>) -> Result<f64> {
    let cross = trace_sqrt_product(cov_a, cov_b)?;
    let traces = cov_a.trace() + cov_b.trace();
    let term = traces - 2.0 * cross;
    if term >= 0.0 {
        return Ok(term);
    }
    if term >= -ROUNDOFF_TOL * traces.max(1.0) {
        Ok(0.0)
    } else {
        Err(Error::NumericalFailure(format!(
            "covariance trace term is {term:e}, below round-off tolerance"
        )))
    }
}

/// `‖μa − μb‖² + Tr(εa + εb − 2√(εa εb))`, retrying once with a small ridge
/// on both covariances if the square root fails.
pub fn frechet_distance_detailed(a: &GaussianStats, b: &GaussianStats) -> Result<FrechetDistance> {
    check_dims(a, b)?;
    let mean_term = (a.mean() - b.mean()).norm_squared();
    let (trace, regularized) = match trace_term(a.cov(), b.cov()) {
        Ok(t) => (t, false),
        Err(Error::IndefiniteMatrix { .. }) | Err(Error::NotSymmetric { .. }) => {
            let ridge = DMatrix::<f64>::identity(a.dim(), a.dim()) * FALLBACK_RIDGE;
            let t = trace_term(&(a.cov() + &ridge), &(b.cov() + &ridge))?;
            (t, true)
        }
        Err(e) => return Err(e),
    };
    Ok(FrechetDistance {
        value: mean_term + trace,
        regularized,
    })
}

pub fn frechet_distance(a: &GaussianStats, b: &GaussianStats) -> Result<f64> {
    frechet_distance_detailed(a, b).map(|d| d.value)
}
