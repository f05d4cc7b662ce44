//! Single-record Hankel VCC scan with a fine delay grid.

use std::time::Instant;

use num_complex::Complex64;
use vcc_tdoa::channel::{add_awgn, apply_channel, MultipathChannel};
use vcc_tdoa::signals::{generate_fm_surrogate, SignalGrid, WaveformSpec};
use vcc_tdoa::subspace::HankelConfig;
use vcc_tdoa::tdoa::{vcc_profile_fast, DelayGrid};

fn main() -> vcc_tdoa::Result<()> {
    let grid = SignalGrid::from_rate(1.024e6, 544)?;
    let ts = grid.sample_interval_s;
    let s = generate_fm_surrogate(&WaveformSpec::fm_surrogate(15e3, 4), &grid)?;
    let one = [Complex64::new(1.0, 0.0)];
    let c1 = MultipathChannel::new(0, vec![0.0], vec![1.0], 1e6)?;
    let c2 = MultipathChannel::new(1, vec![25.0 * ts], vec![1.0], 1e6)?;
    let x1 = add_awgn(&apply_channel(&s, &c1, &one)?, 20.0, 1)?;
    let x2 = add_awgn(&apply_channel(&s, &c2, &one)?, 20.0, 2)?;
    let lags = DelayGrid::symmetric(ts, 4, 60)?;
    let t = Instant::now();
    let profile = vcc_profile_fast(&x1, &x2, HankelConfig::new(512), 3, 3, &lags)?;
    println!("{} lags in {:.2?}", lags.len(), t.elapsed());
    let best = profile.grid().lags_s()[profile.argmax()];
    println!("strongest peak at {:.2} Ts (true 25 Ts)", best / ts);
    println!(
        "width at 1/sqrt(2): {:.2} Ts",
        profile.peak_width_s(std::f64::consts::FRAC_1_SQRT_2) / ts
    );
    Ok(())
}
