//! Signal-subspace estimation.
//!
//! Two routes are provided: the sampled covariance of many observations with
//! a Hermitian eigendecomposition, and the Hankel (trajectory) matrix of a
//! single observation with a truncated SVD.

pub(crate) mod iterative;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::SnapshotSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, left_svd, CMatrix};
use crate::signals::ComplexSignal;

/// Hermitian sampled covariance `(1/m) sum_j y^(j) y^(j)^H`.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    entries: CMatrix,
    snapshot_count: usize,
}

impl CovarianceMatrix {
    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn snapshot_count(&self) -> usize {
        self.snapshot_count
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }
}

/// Sampled covariance of the observations, symmetrized once so it is
/// Hermitian to rounding.
pub fn sample_covariance(snapshots: &SnapshotSet) -> Result<CovarianceMatrix> {
    covariance_of_columns(snapshots.matrix())
}

/// Sampled covariance of the columns of `y` (`N x m`).
pub fn covariance_of_columns(y: &CMatrix) -> Result<CovarianceMatrix> {
    let m = y.ncols();
    if m == 0 {
        return Err(Error::Dimension("no snapshots".into()));
    }
    // Real products: (A + iB)(A + iB)^H = (AA' + BB') + i(BA' - AB').
    let a = y.map(|z| z.re);
    let b = y.map(|z| z.im);
    let real = &a * a.transpose() + &b * b.transpose();
    let cross = &b * a.transpose();
    let n = y.nrows();
    let scale = 1.0 / m as f64;
    let entries = CMatrix::from_fn(n, n, |i, j| {
        Complex64::new(
            0.5 * (real[(i, j)] + real[(j, i)]) * scale,
            (cross[(i, j)] - cross[(j, i)]) * scale,
        )
    });
    Ok(CovarianceMatrix {
        entries,
        snapshot_count: m,
    })
}

/// Orthonormal basis of an estimated signal subspace with its spectrum.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    basis: CMatrix,
    spectrum: Vec<f64>,
    kept_energy_fraction: f64,
}

impl SubspaceBasis {
    pub(crate) fn new(basis: CMatrix, spectrum: Vec<f64>, kept_energy_fraction: f64) -> Self {
        debug_assert_eq!(basis.ncols(), spectrum.len());
        Self {
            basis,
            spectrum,
            kept_energy_fraction,
        }
    }

    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> CMatrix {
        self.basis
    }

    pub fn dimension(&self) -> usize {
        self.basis.ncols()
    }

    /// Retained eigenvalues or singular values, descending.
    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// Smallest retained eigenvalue or singular value.
    pub fn smallest_retained(&self) -> f64 {
        self.spectrum.last().copied().unwrap_or(0.0)
    }

    pub fn kept_energy_fraction(&self) -> f64 {
        self.kept_energy_fraction
    }
}

/// Eigenvectors of the `dim` largest eigenvalues of `r`.
pub fn covariance_signal_subspace(r: &CovarianceMatrix, dim: usize) -> Result<SubspaceBasis> {
    let n = r.dim();
    if dim == 0 || dim >= n {
        return Err(Error::OutOfRange(format!(
            "subspace dimension {dim} must be in 1..{n}"
        )));
    }
    let (values, vectors) = hermitian_eigen(&r.entries);
    let total: f64 = values.iter().map(|v| v.max(0.0)).sum();
    let kept: f64 = values[..dim].iter().map(|v| v.max(0.0)).sum();
    let fraction = if total > 0.0 { kept / total } else { 0.0 };
    Ok(SubspaceBasis::new(
        vectors.columns(0, dim).into_owned(),
        values[..dim].iter().map(|v| v.max(0.0)).collect(),
        fraction,
    ))
}

/// Model order with the largest ratio between consecutive eigenvalues.
///
/// An exploration aid only; estimators take their dimensions from the caller.
pub fn eigen_gap_order(spectrum: &[f64], max_order: usize) -> Option<usize> {
    let limit = max_order.min(spectrum.len().saturating_sub(1));
    (1..=limit).filter(|&k| spectrum[k] > 0.0).max_by(|&a, &b| {
        let ra = spectrum[a - 1] / spectrum[a];
        let rb = spectrum[b - 1] / spectrum[b];
        ra.total_cmp(&rb).then(b.cmp(&a))
    })
}

/// Window length `M` of a Hankel matrix; the column count follows from the
/// record length as `K = N - M + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HankelConfig {
    pub window_m: usize,
}

impl HankelConfig {
    pub fn new(window_m: usize) -> Self {
        Self { window_m }
    }

    pub fn columns(&self, n: usize) -> usize {
        n + 1 - self.window_m
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.window_m <= 1 || self.window_m >= n {
            return Err(Error::OutOfRange(format!(
                "Hankel window {} must satisfy 1 < M < {n}",
                self.window_m
            )));
        }
        Ok(())
    }
}

pub fn hankel_from_slice(x: &[Complex64], window_m: usize) -> CMatrix {
    let k = x.len() + 1 - window_m;
    CMatrix::from_fn(window_m, k, |r, c| x[r + c])
}

/// Trajectory matrix with entry `(r, c) = x[r + c]`, size `M x (N - M + 1)`.
pub fn build_hankel(x: &ComplexSignal, cfg: HankelConfig) -> Result<CMatrix> {
    cfg.validate(x.len())?;
    Ok(hankel_from_slice(x.samples(), cfg.window_m))
}

/// Left singular vectors of the `dim` largest singular values of `x`.
pub fn hankel_signal_subspace(x: &CMatrix, dim: usize) -> Result<SubspaceBasis> {
    let limit = x.nrows().min(x.ncols());
    if dim == 0 || dim > limit {
        return Err(Error::OutOfRange(format!(
            "subspace dimension {dim} must be in 1..={limit}"
        )));
    }
    let (u, sigma) = left_svd(x);
    let total: f64 = sigma.iter().map(|s| s * s).sum();
    let kept: f64 = sigma[..dim].iter().map(|s| s * s).sum();
    let fraction = if total > 0.0 { kept / total } else { 0.0 };
    Ok(SubspaceBasis::new(
        u.columns(0, dim).into_owned(),
        sigma[..dim].to_vec(),
        fraction,
    ))
}
