//! Writes two receiver records as IQ files, reads them back and scans them.

use vcc_tdoa::harness::{synthesize_records, ExperimentConfig};
use vcc_tdoa::signals::{read_iq, write_iq};
use vcc_tdoa::subspace::HankelConfig;
use vcc_tdoa::tdoa::{vcc_profile_fast, DelayGrid};

fn main() -> vcc_tdoa::Result<()> {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/single_path.json");
    let cfg = ExperimentConfig::load(&path)?;
    let (x1, x2) = synthesize_records(&cfg, Some(15.0), 3)?;
    let dir = std::env::temp_dir();
    let (p1, p2) = (dir.join("vcc_rx1.iq"), dir.join("vcc_rx2.iq"));
    write_iq(&p1, &x1)?;
    write_iq(&p2, &x2)?;
    let (y1, y2) = (read_iq(&p1)?, read_iq(&p2)?);
    let ts = y1.grid().sample_interval_s;
    let profile = vcc_profile_fast(
        &y1,
        &y2,
        HankelConfig::new(512),
        3,
        3,
        &DelayGrid::symmetric(ts, 2, 40)?,
    )?
    .with_peaks(0.3, 3);
    for p in profile.peaks() {
        println!("peak {:.2} Ts, normalized {:.3}", p.lag_s / ts, p.value);
    }
    println!("same scan from the CLI:");
    println!("  vcc-tdoa scan --iq1 {} --iq2 {} --algo vcc-fast --m 512 --k 3 --grid-step-div 2 --max-lag 40", p1.display(), p2.display());
    Ok(())
}
