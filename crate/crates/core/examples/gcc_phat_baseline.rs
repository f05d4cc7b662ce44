//! GCC-PHAT and VCC on the same single-path records.

use num_complex::Complex64;
use vcc_tdoa::baseline_gcc::gcc_phat;
use vcc_tdoa::channel::{add_awgn, apply_channel, MultipathChannel};
use vcc_tdoa::signals::{generate_fm_surrogate, SignalGrid, WaveformSpec};
use vcc_tdoa::subspace::HankelConfig;
use vcc_tdoa::tdoa::{vcc_profile_fast, DelayGrid};

fn main() -> vcc_tdoa::Result<()> {
    let grid = SignalGrid::from_rate(1.024e6, 544)?;
    let ts = grid.sample_interval_s;
    let level = std::f64::consts::FRAC_1_SQRT_2;
    let lags = DelayGrid::symmetric(ts, 4, 60)?;
    let one = [Complex64::new(1.0, 0.0)];
    let c1 = MultipathChannel::new(0, vec![0.0], vec![1.0], 1e6)?;
    let c2 = MultipathChannel::new(1, vec![25.0 * ts], vec![1.0], 1e6)?;
    println!("seed  gcc peak  gcc width  vcc peak  vcc width   (Ts)");
    for seed in 0..5 {
        let s = generate_fm_surrogate(&WaveformSpec::fm_surrogate(15e3, seed), &grid)?;
        let x1 = add_awgn(&apply_channel(&s, &c1, &one)?, 20.0, 10 + seed)?;
        let x2 = add_awgn(&apply_channel(&s, &c2, &one)?, 20.0, 20 + seed)?;
        let g = gcc_phat(&x1, &x2, &lags)?;
        let v = vcc_profile_fast(&x1, &x2, HankelConfig::new(512), 3, 3, &lags)?;
        let peak = |p: &vcc_tdoa::tdoa::DelayProfile| p.grid().lags_s()[p.argmax()] / ts;
        println!(
            "{seed:>4}  {:>8.2}  {:>9.2}  {:>8.2}  {:>9.2}",
            peak(&g),
            g.peak_width_s(level) / ts,
            peak(&v),
            v.peak_width_s(level) / ts
        );
    }
    Ok(())
}
