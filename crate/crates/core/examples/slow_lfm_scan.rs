//! Multi-snapshot VCC scan of a multipath LFM scenario.

use std::time::Instant;

use vcc_tdoa::channel::{generate_snapshots, MultipathChannel};
use vcc_tdoa::signals::{generate_lfm, SignalGrid, WaveformSpec};
use vcc_tdoa::tdoa::{vcc_profile_slow, DelayGrid};

fn main() -> vcc_tdoa::Result<()> {
    let snr_db: f64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().unwrap())
        .unwrap_or(0.0);
    let grid = SignalGrid::from_rate(1e6, 512)?;
    let ts = grid.sample_interval_s;
    let s = generate_lfm(
        &WaveformSpec::lfm(50e3, 500e3).with_pulse(256e-6, 512e-6),
        &grid,
    )?;
    let us = |v: &[f64]| v.iter().map(|d| d * ts).collect::<Vec<_>>();
    let c1 = MultipathChannel::with_direct_dominance(0, us(&[40.0, 75.0, 200.0]), 2.0, 10.0)?;
    let c2 =
        MultipathChannel::with_direct_dominance(1, us(&[50.0, 100.0, 185.0, 250.0]), 2.0, 10.0)?;
    let y1 = generate_snapshots(&s, &c1, 512, snr_db, 11)?;
    let y2 = generate_snapshots(&s, &c2, 512, snr_db, 12)?;
    let lags = DelayGrid::symmetric(ts, 1, 260)?;
    let t = Instant::now();
    let profile = vcc_profile_slow(&y1, &y2, 3, 4, &lags)?;
    println!("scan took {:.2?}", t.elapsed());
    for p in profile.peaks() {
        println!(
            "peak at {:>5.0} Ts  normalized {:.3}",
            p.lag_s / ts,
            p.value
        );
    }
    Ok(())
}
