//! Volumes, principal angles and the VCC of two small subspaces.

use num_complex::Complex64;
use vcc_tdoa::linalg::{matrix_volume, orthonormal_basis, principal_angles, vcc, CMatrix};

fn main() -> vcc_tdoa::Result<()> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    // Two planes in C^4 sharing the first axis.
    let a = CMatrix::from_row_slice(
        4,
        2,
        &[
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
    );
    let b = CMatrix::from_row_slice(
        4,
        2,
        &[
            c(2.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.5, 0.5),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ],
    );
    println!(
        "Vol(A) = {:.4}, Vol(B) = {:.4}",
        matrix_volume(&a, 2)?,
        matrix_volume(&b, 2)?
    );
    let angles = principal_angles(
        &orthonormal_basis(&a, 1e-12)?,
        &orthonormal_basis(&b, 1e-12)?,
    )?;
    let degrees: Vec<f64> = angles.angles().iter().map(|t| t.to_degrees()).collect();
    println!("principal angles (deg): {degrees:.2?}");
    println!("vcc(A, B) = {:.3e}  (shared direction)", vcc(&a, &b)?);
    let mut tilted = b.clone();
    tilted[(0, 0)] = c(0.0, 0.0);
    tilted[(3, 0)] = c(1.0, 0.0);
    println!(
        "vcc(A, B') = {:.4}  (no shared direction)",
        vcc(&a, &tilted)?
    );
    Ok(())
}
