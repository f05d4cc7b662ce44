//! A delay halfway between samples, resolved on a 4x interpolated grid.

use num_complex::Complex64;
use vcc_tdoa::channel::{apply_channel, MultipathChannel};
use vcc_tdoa::signals::{generate_fm_surrogate, SignalGrid, WaveformSpec};
use vcc_tdoa::subspace::HankelConfig;
use vcc_tdoa::tdoa::{vcc_profile_fast, DelayGrid};

fn main() -> vcc_tdoa::Result<()> {
    let grid = SignalGrid::from_rate(1.024e6, 544)?;
    let ts = grid.sample_interval_s;
    let s = generate_fm_surrogate(&WaveformSpec::fm_surrogate(15e3, 8), &grid)?;
    let one = [Complex64::new(1.0, 0.0)];
    let x1 = apply_channel(
        &s,
        &MultipathChannel::new(0, vec![0.0], vec![1.0], 1e6)?,
        &one,
    )?;
    let x2 = apply_channel(
        &s,
        &MultipathChannel::new(1, vec![25.5 * ts], vec![1.0], 1e6)?,
        &one,
    )?;
    for factor in [1, 2, 4] {
        let lags = DelayGrid::symmetric(ts, factor, 40)?;
        let p = vcc_profile_fast(&x1, &x2, HankelConfig::new(512), 3, 3, &lags)?;
        println!(
            "factor {factor}: peak at {:.3} Ts (true 25.5 Ts)",
            p.grid().lags_s()[p.argmax()] / ts
        );
    }
    Ok(())
}
