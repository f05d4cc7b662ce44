//! Full-rank condition and volume bounds for a two-path LFM scenario.

use vcc_tdoa::bounds::{check_lemma1, check_theorem1, theorem1_epsilon};
use vcc_tdoa::signals::{autocorrelation, generate_lfm, SignalGrid, WaveformSpec};

fn main() -> vcc_tdoa::Result<()> {
    let grid = SignalGrid::from_rate(1e6, 512)?;
    let ts = grid.sample_interval_s;
    let s = generate_lfm(
        &WaveformSpec::lfm(-400e3, 400e3).with_pulse(128e-6, 512e-6),
        &grid,
    )?;
    let acf = autocorrelation(&s, 511)?;
    println!(
        "autocorrelation mainlobe width at 1/2: {:.2} Ts",
        acf.mainlobe_width(0.5)
    );
    let d1 = [20.0 * ts, 50.0 * ts];
    let d2 = [35.0 * ts, 90.0 * ts];
    let lemma = check_lemma1(&acf, ts, &d1, &d2)?;
    println!(
        "full-rank condition holds: {} (max sidelobe {:.3} from lag {})",
        lemma.condition_holds, lemma.acf_max, lemma.checked_from_lag
    );
    for mu in [0.05, 0.1, 0.2, 0.3] {
        println!("mu {mu:.2}: eps {:.4}", theorem1_epsilon(2, 2, mu));
    }
    for cand in [19.0, 22.0, 28.0] {
        let r = check_theorem1(&acf, ts, &d1, &d2, cand * ts, 0.3)?;
        println!(
            "lag {cand:>4} Ts: condition {}, off-TDOA volume >= {:.3}",
            r.condition_holds,
            r.volume_lower_bound.unwrap_or(0.0)
        );
    }
    Ok(())
}
