//! Monte-Carlo run from a JSON configuration, written to an output directory.
//!
//! `cargo run --release --example run_experiment -- configs/single_path.json /tmp/out`

use std::path::PathBuf;

use vcc_tdoa::harness::{run_experiment, write_outputs, ExperimentConfig};

fn main() -> vcc_tdoa::Result<()> {
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/single_path.json")
    });
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("vcc-tdoa-run"));
    let cfg = ExperimentConfig::load(&config)?;
    let results = run_experiment(&cfg)?;
    for r in &results {
        println!(
            "snr {}, trial {}: hits {}/{}, false {}, mse {:.3}",
            r.snr_db
                .map_or("noiseless".to_string(), |v| format!("{v} dB")),
            r.trial_index,
            r.detection.hits,
            r.true_tdoas_s.len(),
            r.detection.false_peaks,
            r.mse
        );
    }
    write_outputs(&out, &cfg, &results)?;
    println!("wrote {}", out.display());
    Ok(())
}
