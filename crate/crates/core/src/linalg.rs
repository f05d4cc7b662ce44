//! Matrix volumes, principal angles and the volume cross-correlation (VCC).
//!
//! The volume of an `n x d` matrix is the product of its `d` singular values,
//! i.e. the `d`-dimensional measure of the parallelotope spanned by its
//! columns. The VCC of two matrices compares the volume of their column
//! concatenation with the product of the individual volumes:
//!
//! ```text
//! vcc(X1, X2) = Vol(X1 | X2) / (Vol(X1) * Vol(X2)) = prod_j sin(theta_j)
//! ```
//!
//! where `theta_j` are the principal angles between the two column spaces.
//! A value of 0 means the subspaces intersect, 1 means they are orthogonal.
//!
//! Inner products are conjugate-linear in the first argument everywhere in
//! this crate: `<a, b> = a^H b`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense complex matrix, column-major.
pub type CMatrix = DMatrix<Complex64>;

/// Singular values at or below this fraction of the largest one count as zero.
pub const VOLUME_RANK_FLOOR: f64 = 1e-14;

/// Tolerance used by [`principal_angles`] to reject non-orthonormal input.
pub const ORTHONORMAL_TOL: f64 = 1e-8;

/// Denominators of the VCC below this value are reported as degenerate.
pub const VCC_DENOMINATOR_FLOOR: f64 = 1e-300;

/// Principal angles in radians, ascending, each in `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalAngleSet {
    angles: Vec<f64>,
}

impl PrincipalAngleSet {
    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Product of the sines of all angles.
    pub fn sine_product(&self) -> f64 {
        self.angles.iter().map(|a| a.sin()).product()
    }
}

pub(crate) fn ensure_finite(x: &CMatrix, what: &'static str) -> Result<()> {
    if x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Singular values of `x` in descending order.
pub fn singular_values(x: &CMatrix) -> Vec<f64> {
    if x.nrows() == 0 || x.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = x
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Thin SVD with the left singular vectors, sorted by descending singular value.
///
/// Returns `(U, sigma)` where `U` has `min(n, d)` orthonormal columns.
pub fn left_svd(x: &CMatrix) -> (CMatrix, Vec<f64>) {
    let svd = x.clone().svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let u_sorted = CMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let s_sorted = order.iter().map(|&i| sigma[i]).collect();
    (u_sorted, s_sorted)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
///
/// Ties are broken by the solver's original index so the ordering is
/// reproducible.
pub fn hermitian_eigen(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = h.clone().symmetric_eigen();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let vectors = CMatrix::from_fn(h.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (order.iter().map(|&i| values[i]).collect(), vectors)
}

/// Product of singular values with the relative rank floor applied.
fn volume_from_singular_values(sigma: &[f64], d: usize) -> f64 {
    if sigma.len() < d {
        return 0.0;
    }
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return 0.0;
    }
    let floor = VOLUME_RANK_FLOOR * smax;
    let mut vol = 1.0;
    for &s in &sigma[..d] {
        if s <= floor {
            return 0.0;
        }
        vol *= s;
    }
    vol
}

/// Volume of all columns of `x`; zero when there are more columns than rows.
pub(crate) fn volume_of(x: &CMatrix) -> f64 {
    volume_from_singular_values(&singular_values(x), x.ncols())
}

/// `d`-dimensional volume of `x`: the product of its `d` singular values.
///
/// Returns 0 for numerically rank-deficient input.
pub fn matrix_volume(x: &CMatrix, d: usize) -> Result<f64> {
    if d != x.ncols() {
        return Err(Error::Dimension(format!(
            "volume dimension {d} does not match {} columns",
            x.ncols()
        )));
    }
    if d > x.nrows() {
        return Err(Error::Dimension(format!(
            "{d} columns exceed ambient dimension {}",
            x.nrows()
        )));
    }
    ensure_finite(x, "matrix")?;
    Ok(volume_of(x))
}

/// Orthonormal basis for the numerical column space of `x`.
///
/// Directions whose singular value is at most `rank_tol * sigma_max` are dropped.
pub fn orthonormal_basis(x: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    ensure_finite(x, "matrix")?;
    let (u, sigma) = left_svd(x);
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Err(Error::Degenerate(
            "all-zero matrix has no column space".into(),
        ));
    }
    let rank = sigma.iter().take_while(|&&s| s > rank_tol * smax).count();
    Ok(u.columns(0, rank).into_owned())
}

/// Largest absolute entry of `U^H U - I`.
pub fn orthonormality_error(u: &CMatrix) -> f64 {
    let g = u.adjoint() * u;
    let mut worst = 0.0f64;
    for r in 0..g.nrows() {
        for c in 0..g.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((g[(r, c)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// Principal angles between the column spaces of two orthonormal bases.
///
/// The cosines are the singular values of `U1^H U2`, clamped to `[0, 1]`.
pub fn principal_angles(u1: &CMatrix, u2: &CMatrix) -> Result<PrincipalAngleSet> {
    if u1.nrows() != u2.nrows() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            u1.nrows(),
            u2.nrows()
        )));
    }
    ensure_finite(u1, "first basis")?;
    ensure_finite(u2, "second basis")?;
    let deviation = orthonormality_error(u1).max(orthonormality_error(u2));
    if deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { deviation });
    }
    let k = u1.ncols().min(u2.ncols());
    if k == 0 {
        return Ok(PrincipalAngleSet { angles: Vec::new() });
    }
    let cosines = singular_values(&(u1.adjoint() * u2));
    let mut angles: Vec<f64> = cosines
        .iter()
        .take(k)
        .map(|c| c.clamp(0.0, 1.0).acos())
        .collect();
    angles.sort_by(f64::total_cmp);
    Ok(PrincipalAngleSet { angles })
}

/// Horizontal concatenation `[a, b]`.
pub fn hstack(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.nrows(), b.nrows(), "hstack needs equal row counts");
    let mut out = CMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

/// Volume cross-correlation of the column spaces of `x1` and `x2`, in `[0, 1]`.
pub fn vcc(x1: &CMatrix, x2: &CMatrix) -> Result<f64> {
    if x1.nrows() != x2.nrows() {
        return Err(Error::Dimension(format!(
            "ambient dimensions differ: {} vs {}",
            x1.nrows(),
            x2.nrows()
        )));
    }
    let n = x1.nrows();
    if x1.ncols() > n || x2.ncols() > n {
        return Err(Error::Dimension("more columns than rows".into()));
    }
    ensure_finite(x1, "first matrix")?;
    ensure_finite(x2, "second matrix")?;
    let v1 = volume_of(x1);
    let v2 = volume_of(x2);
    let denom = v1 * v2;
    if denom < VCC_DENOMINATOR_FLOOR {
        return Err(Error::Degenerate(format!(
            "rank-deficient argument (volumes {v1:.3e}, {v2:.3e})"
        )));
    }
    let joint = volume_of(&hstack(x1, x2));
    let ratio = joint / denom;
    debug_assert!(ratio <= 1.0 + 1e-9, "vcc rounding excess {ratio}");
    Ok(ratio.clamp(0.0, 1.0))
}

/// Orthonormalizes the columns of `x` in place by modified Gram-Schmidt with
/// one reorthogonalization pass. Returns the norms seen before normalization.
pub(crate) fn gram_schmidt(x: &mut CMatrix) -> Vec<f64> {
    let (n, p) = x.shape();
    let mut norms = Vec::with_capacity(p);
    for j in 0..p {
        for _ in 0..2 {
            for i in 0..j {
                let mut dot = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    dot += x[(r, i)].conj() * x[(r, j)];
                }
                for r in 0..n {
                    let q = x[(r, i)];
                    x[(r, j)] -= q * dot;
                }
            }
        }
        let norm = x.column(j).norm();
        norms.push(norm);
        if norm > 0.0 {
            let inv = 1.0 / norm;
            for r in 0..n {
                x[(r, j)] *= inv;
            }
        }
    }
    norms
}
