use num_complex::Complex64;

use super::{joint_volume, reciprocal_volume, DelayGrid, DelayProfile, RANK_DEFICIENCY_TOL};
use crate::channel::SnapshotSet;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, CMatrix};
use crate::signals::{interpolation_taps, KERNEL_HALF_LENGTH};
use crate::subspace::iterative::{SplitMatrix, SubspaceIteration, TopEigen};
use crate::subspace::sample_covariance;

const START_SEED: u64 = 0x7664_6363;

/// Reciprocal-volume profile from two sets of snapshots.
///
/// For each lag every snapshot of receiver 1 is delayed, the covariance of
/// the delayed set gives `U1` (dimension `l1`) and `U2` (dimension `l2`) is
/// taken once from receiver 2. `r_vol = 1 / Vol([U1, U2])`, capped.
///
/// The delayed covariance at lag `q` fine steps is a principal window of
/// `H_r R1 H_r^H` for the residue `r = q mod F`, where `H_r` applies the
/// fractional part of the delay, so each lag costs one windowed dominant
/// eigenvector solve warm-started from its neighbour.
pub fn vcc_profile_slow(
    snaps1: &SnapshotSet,
    snaps2: &SnapshotSet,
    l1: usize,
    l2: usize,
    grid: &DelayGrid,
) -> Result<DelayProfile> {
    let n = snaps1.grid().length;
    check_inputs(snaps1, snaps2, l1, l2, grid)?;
    let r1 = sample_covariance(snaps1)?;
    let r2 = sample_covariance(snaps2)?;
    let u2 = dominant(&SplitMatrix::from_cmatrix(r2.entries()), l2, 0, n, None)?.vectors;

    let f = grid.interpolation_factor() as i64;
    let mut r_vol = vec![0.0; grid.len()];
    let mut degenerate = Vec::new();
    for residue in 0..f {
        let mut lags: Vec<(usize, i64)> = (0..grid.len())
            .filter(|&i| grid.steps(i).rem_euclid(f) == residue)
            .map(|i| (i, grid.steps(i).div_euclid(f)))
            .collect();
        if lags.is_empty() {
            continue;
        }
        let base = if residue == 0 {
            r1.entries().clone()
        } else {
            delayed_covariance(r1.entries(), residue as f64 / f as f64)
        };
        let size = base.nrows();
        let split = SplitMatrix::from_cmatrix(&base);
        let solver = SubspaceIteration::new(l1);
        // Chains move away from shift 0 so each window shrinks by one row.
        lags.sort_by_key(|&(_, shift)| (shift < 0, shift.abs()));
        let mut state = solver.initial_state(size, START_SEED ^ residue as u64);
        let mut origin_state: Option<CMatrix> = None;
        for &(index, shift) in &lags {
            if shift < 0 {
                if let Some(s) = origin_state.take() {
                    state = s;
                }
            }
            let lo = (-shift).max(0) as usize;
            let hi = (size as i64 - 1).min(n as i64 - 1 - shift) as usize;
            let w = hi + 1 - lo;
            if w <= l1 {
                r_vol[index] = reciprocal_volume(0.0);
                degenerate.push(index);
                continue;
            }
            let top = dominant(&split, l1, lo, w, Some((&solver, &mut state)))?;
            if shift >= 0 && origin_state.is_none() {
                origin_state = Some(state.clone());
            }
            let mut u1 = CMatrix::zeros(n, l1);
            let offset = (lo as i64 + shift) as usize;
            u1.view_mut((offset, 0), (w, l1)).copy_from(&top.vectors);
            if is_rank_deficient(&top.values) {
                degenerate.push(index);
                r_vol[index] = reciprocal_volume(0.0);
            } else {
                r_vol[index] = reciprocal_volume(joint_volume(&u1, &u2));
            }
        }
    }
    degenerate.sort_unstable();
    DelayProfile::from_values(grid.clone(), r_vol, degenerate)
}

fn check_inputs(
    snaps1: &SnapshotSet,
    snaps2: &SnapshotSet,
    l1: usize,
    l2: usize,
    grid: &DelayGrid,
) -> Result<()> {
    let (g1, g2) = (snaps1.grid(), snaps2.grid());
    if g1.length != g2.length {
        return Err(Error::Dimension(format!(
            "record lengths {} and {} differ",
            g1.length, g2.length
        )));
    }
    if (g1.sample_interval_s - g2.sample_interval_s).abs() > 1e-12 * g1.sample_interval_s
        || (grid.sample_interval_s() - g1.sample_interval_s).abs() > 1e-9 * g1.sample_interval_s
    {
        return Err(Error::Dimension(
            "sample intervals of snapshots and grid differ".into(),
        ));
    }
    let n = g1.length;
    if l1 == 0 || l2 == 0 || l1 + l2 > n {
        return Err(Error::OutOfRange(format!(
            "subspace dimensions {l1}, {l2} invalid for length {n}"
        )));
    }
    grid.check_within(n, "the record length N")
}

fn is_rank_deficient(values: &[f64]) -> bool {
    let first = values[0];
    !(first > 0.0) || values[values.len() - 1] <= RANK_DEFICIENCY_TOL * first
}

/// Dominant eigenvectors of a window, falling back to a dense solve when the
/// iteration stalls.
fn dominant(
    a: &SplitMatrix,
    dim: usize,
    lo: usize,
    w: usize,
    warm: Option<(&SubspaceIteration, &mut CMatrix)>,
) -> Result<TopEigen> {
    let top = match warm {
        Some((solver, state)) => solver.solve(a, lo, w, state),
        None => {
            let solver = SubspaceIteration::new(dim);
            let mut state = solver.initial_state(a.dim(), START_SEED);
            solver.solve(a, lo, w, &mut state)
        }
    };
    if top.converged {
        return Ok(top);
    }
    let (values, vectors) = hermitian_eigen(&a.window(lo, w));
    Ok(TopEigen {
        values: values[..dim].iter().map(|v| v.max(0.0)).collect(),
        vectors: vectors.columns(0, dim).into_owned(),
        iterations: top.iterations,
        converged: true,
    })
}

/// `H R H^H` where `H` maps a length-`N` record to the `N + 1` samples
/// `x(j - delta)`, `j = 0..=N`, zero where `j - delta` leaves `[0, N)`.
pub(crate) fn delayed_covariance(r: &CMatrix, delta: f64) -> CMatrix {
    let n = r.nrows();
    let taps = interpolation_taps(1.0 - delta);
    let filt = |x: &[Complex64]| -> Vec<Complex64> {
        let h = KERNEL_HALF_LENGTH as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); n + 1];
        for (j, y) in out.iter_mut().enumerate().skip(1) {
            let lo = (j as i64 - h).max(0);
            let hi = (j as i64 + h - 1).min(n as i64 - 1);
            let mut acc = Complex64::new(0.0, 0.0);
            for c in lo..=hi {
                acc += x[c as usize] * taps[(c - j as i64 + h) as usize];
            }
            *y = acc;
        }
        out
    };
    // T = H R, column by column.
    let mut t = CMatrix::zeros(n + 1, n);
    for c in 0..n {
        let col: Vec<Complex64> = r.column(c).iter().copied().collect();
        t.column_mut(c).copy_from_slice(&filt(&col));
    }
    // H T^H = (T H^H)^H.
    let th = t.adjoint();
    let mut out = CMatrix::zeros(n + 1, n + 1);
    for c in 0..n + 1 {
        let col: Vec<Complex64> = th.column(c).iter().copied().collect();
        out.column_mut(c).copy_from_slice(&filt(&col));
    }
    let out = out.adjoint();
    (&out + out.adjoint()) * Complex64::new(0.5, 0.0)
}
