//! Generalized cross-correlation with the phase transform (GCC-PHAT).
//!
//! Sign convention: a peak at positive lag means the signal reaches
//! receiver 2 later, `lag = tau_2 - tau_1`. The correlation is
//! `IFFT(X2 conj(X1) / |X2 conj(X1)|)`, zero-padded against circular wrap and
//! evaluated on fine grids by zero-padding the weighted spectrum.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signals::ComplexSignal;
use crate::tdoa::{DelayGrid, DelayProfile};

/// Bins whose cross-spectral magnitude falls below this fraction of the
/// largest get zero weight.
pub const SPECTRAL_FLOOR: f64 = 1e-12;

/// PHAT-weighted cross-correlation magnitude on `grid`.
///
/// Raw values are `|g(lag)|` scaled so that a perfectly phase-aligned
/// spectrum gives 1 at its lag.
pub fn gcc_phat(x1: &ComplexSignal, x2: &ComplexSignal, grid: &DelayGrid) -> Result<DelayProfile> {
    let n = x1.len();
    if x2.len() != n {
        return Err(Error::Dimension(format!(
            "record lengths {n} and {} differ",
            x2.len()
        )));
    }
    let ts = x1.grid().sample_interval_s;
    if (x2.grid().sample_interval_s - ts).abs() > 1e-12 * ts
        || (grid.sample_interval_s() - ts).abs() > 1e-9 * ts
    {
        return Err(Error::Dimension(
            "sample intervals of records and grid differ".into(),
        ));
    }
    grid.check_within(n, "the record length N")?;

    let len = (2 * n).next_power_of_two();
    let f = grid.interpolation_factor();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(len);
    let spectrum = |x: &ComplexSignal| {
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        buf[..n].copy_from_slice(x.samples());
        forward.process(&mut buf);
        buf
    };
    let s1 = spectrum(x1);
    let s2 = spectrum(x2);
    let cross: Vec<Complex64> = s2.iter().zip(&s1).map(|(a, b)| a * b.conj()).collect();
    let peak = cross.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(peak > 0.0) {
        return Err(Error::Degenerate(
            "cross spectrum is identically zero".into(),
        ));
    }
    let weighted: Vec<Complex64> = cross
        .iter()
        .map(|c| {
            let m = c.norm();
            if m < SPECTRAL_FLOOR * peak {
                Complex64::new(0.0, 0.0)
            } else {
                c / m
            }
        })
        .collect();
    let active = weighted
        .iter()
        .filter(|w| w.re != 0.0 || w.im != 0.0)
        .count() as f64;

    // Zero-pad the spectrum by the interpolation factor; the Nyquist bin is
    // split between the positive and negative edges.
    let fine = len * f;
    let mut padded = vec![Complex64::new(0.0, 0.0); fine];
    let half = len / 2;
    padded[..half].copy_from_slice(&weighted[..half]);
    padded[fine - half + 1..].copy_from_slice(&weighted[half + 1..]);
    if f == 1 {
        padded[half] = weighted[half];
    } else {
        padded[half] = weighted[half] * 0.5;
        padded[fine - half] = weighted[half] * 0.5;
    }
    planner.plan_fft_inverse(fine).process(&mut padded);

    let values = (0..grid.len())
        .map(|i| {
            let q = grid.steps(i).rem_euclid(fine as i64) as usize;
            padded[q].norm() / active
        })
        .collect();
    DelayProfile::from_values(grid.clone(), values, Vec::new())
}
