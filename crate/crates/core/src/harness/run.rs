use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{Algorithm, Dims, ExperimentConfig};
use crate::baseline_gcc::gcc_phat;
use crate::bounds::{
    check_lemma1, check_theorem1, check_theorem34, BoundReport, HankelBoundInputs,
};
use crate::channel::{
    apply_channel, draw_fading, generate_snapshots, noise_realization, noise_variance,
    MultipathChannel, SnapshotSet,
};
use crate::error::{Error, Result};
use crate::seeds::{mix, mix2, tag};
use crate::signals::{
    autocorrelation, fractional_delay, generate, ComplexSignal, WaveformKind, KERNEL_HALF_LENGTH,
};
use crate::subspace::{build_hankel, hankel_signal_subspace, HankelConfig};
use crate::tdoa::{vcc_profile_fast, vcc_profile_slow, DelayGrid, DelayProfile};

const RECEIVER_1: u64 = 1;
const RECEIVER_2: u64 = 2;

/// Hit, miss and false-peak counts against the true TDOA set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Detection {
    pub hits: usize,
    pub misses: usize,
    pub false_peaks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub snr_index: usize,
    pub trial_index: usize,
    pub snr_db: Option<f64>,
    pub seed: u64,
    #[serde(skip)]
    pub profile: DelayProfile,
    pub peaks_s: Vec<f64>,
    pub degenerate_lags: usize,
    pub true_tdoas_s: Vec<f64>,
    pub mse: f64,
    pub detection: Detection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound_report: Option<BoundReport>,
    /// Wall-clock time of the estimator; not part of the serialized record.
    #[serde(skip)]
    pub runtime_ms: f64,
}

/// All `L1 * L2` differences `tau_2 - tau_1`, ascending, with values closer
/// than half a grid step merged.
pub fn cross_difference_tdoas(
    ch1: &MultipathChannel,
    ch2: &MultipathChannel,
    step_s: f64,
) -> Vec<f64> {
    let mut all: Vec<f64> = ch1
        .delays_s
        .iter()
        .flat_map(|a| ch2.delays_s.iter().map(move |b| b - a))
        .collect();
    all.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(all.len());
    for v in all {
        if out.last().is_none_or(|last| v - last >= 0.5 * step_s) {
            out.push(v);
        }
    }
    out
}

/// Grid index nearest to `lag_s`, or `None` outside the grid.
fn nearest_index(grid: &DelayGrid, lag_s: f64) -> Option<usize> {
    let lags = grid.lags_s();
    let pos = ((lag_s - lags[0]) / grid.step_s()).round();
    (pos >= 0.0 && (pos as usize) < lags.len()).then_some(pos as usize)
}

/// `sum (normalized - I)^2` over the grid, `I` the indicator of the true
/// TDOAs rounded to their nearest grid lags.
pub fn mse_metric(profile: &DelayProfile, true_tdoas_s: &[f64]) -> Result<f64> {
    let grid = profile.grid();
    if grid.is_empty() {
        return Err(Error::Dimension("empty profile".into()));
    }
    let mut indicator = vec![0.0; grid.len()];
    for &t in true_tdoas_s {
        let i = nearest_index(grid, t)
            .ok_or_else(|| Error::OutOfRange(format!("true TDOA {t} s outside the delay grid")))?;
        indicator[i] = 1.0;
    }
    Ok(profile
        .normalized()
        .iter()
        .zip(&indicator)
        .map(|(r, i)| (r - i) * (r - i))
        .sum())
}

/// Peaks within one grid step of a true TDOA count as hits.
pub fn detection_counts(profile: &DelayProfile, true_tdoas_s: &[f64]) -> Detection {
    let step = profile.grid().step_s();
    let close = |a: f64, b: f64| (a - b).abs() <= step * (1.0 + 1e-9);
    let peaks = profile.peak_lags_s();
    let hits = true_tdoas_s
        .iter()
        .filter(|t| peaks.iter().any(|p| close(*p, **t)))
        .count();
    let false_peaks = peaks
        .iter()
        .filter(|p| !true_tdoas_s.iter().any(|t| close(**p, *t)))
        .count();
    Detection {
        hits,
        misses: true_tdoas_s.len() - hits,
        false_peaks,
    }
}

/// One record per receiver: the source is synthesized with a lead-in long
/// enough for the largest delay and the interpolation kernel, passed
/// through the channel, and cropped to the configured length.
pub fn synthesize_records(
    cfg: &ExperimentConfig,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<(ComplexSignal, ComplexSignal)> {
    let ts = cfg.grid.sample_interval_s;
    let n = cfg.grid.length;
    let (ch1, ch2) = cfg.channel_pair();
    let max_delay = ch1
        .delays_s
        .iter()
        .chain(&ch2.delays_s)
        .copied()
        .fold(0.0, f64::max);
    let lead = (max_delay / ts).ceil() as usize + KERNEL_HALF_LENGTH + 1;
    let source = source_waveform(cfg, seed, n + lead)?;
    let power = source.mean_power();
    let receive = |ch: &MultipathChannel, receiver: u64| -> Result<ComplexSignal> {
        let full = apply_channel(&source, ch, &realized_gains(ch, seed, receiver))?;
        let mut x = full.slice(lead, n)?.into_samples();
        if let Some(snr) = snr_db {
            let expected: f64 = ch.mean_square_gains().iter().sum::<f64>() * power;
            let noise = noise_realization(
                n,
                noise_variance(expected, snr),
                mix(mix(seed, receiver), tag::NOISE),
            );
            for (v, w) in x.iter_mut().zip(noise) {
                *v += w;
            }
        }
        ComplexSignal::new(x, ts)
    };
    Ok((receive(ch1, RECEIVER_1)?, receive(ch2, RECEIVER_2)?))
}

fn realized_gains(ch: &MultipathChannel, seed: u64, receiver: u64) -> Vec<Complex64> {
    draw_fading(ch, 1, mix(mix(seed, receiver), tag::FADING))
        .row(0)
        .iter()
        .copied()
        .collect()
}

/// Snapshot sets for both receivers.
pub fn synthesize_snapshots(
    cfg: &ExperimentConfig,
    snr_db: Option<f64>,
    seed: u64,
) -> Result<(SnapshotSet, SnapshotSet)> {
    let source = source_waveform(cfg, seed, cfg.grid.length)?;
    let snr = snr_db.unwrap_or(f64::INFINITY);
    let (ch1, ch2) = cfg.channel_pair();
    Ok((
        generate_snapshots(&source, ch1, cfg.snapshots_m, snr, mix(seed, RECEIVER_1))?,
        generate_snapshots(&source, ch2, cfg.snapshots_m, snr, mix(seed, RECEIVER_2))?,
    ))
}

fn source_waveform(cfg: &ExperimentConfig, seed: u64, length: usize) -> Result<ComplexSignal> {
    let mut spec = cfg.waveform.clone();
    if spec.kind == WaveformKind::FmSurrogate {
        spec.seed = mix(spec.seed ^ seed, tag::WAVEFORM);
    }
    generate(&spec, &cfg.grid.with_length(length))
}

/// Runs the configured estimator on one synthesized trial.
pub fn run_trial(
    cfg: &ExperimentConfig,
    snr_index: usize,
    trial_index: usize,
) -> Result<TrialResult> {
    let snr_db = cfg.snr_db_list[snr_index];
    let seed = mix2(cfg.seed, snr_index as u64, trial_index as u64);
    let grid = cfg.delay_grid()?;
    let (ch1, ch2) = cfg.channel_pair();
    let truth = cross_difference_tdoas(ch1, ch2, grid.step_s());
    let start = Instant::now();
    let profile = match (cfg.algorithm, cfg.dims) {
        (Algorithm::VccSlow, Some(Dims::Snapshot { l1, l2 })) => {
            let (y1, y2) = synthesize_snapshots(cfg, snr_db, seed)?;
            vcc_profile_slow(&y1, &y2, l1, l2, &grid)?
        }
        (Algorithm::VccFast, Some(Dims::Hankel { m, k1, k2 })) => {
            let (x1, x2) = synthesize_records(cfg, snr_db, seed)?;
            vcc_profile_fast(&x1, &x2, HankelConfig::new(m), k1, k2, &grid)?
        }
        (Algorithm::GccPhat, _) => {
            let (x1, x2) = synthesize_records(cfg, snr_db, seed)?;
            gcc_phat(&x1, &x2, &grid)?
        }
        _ => {
            return Err(Error::config(
                "dims",
                "dimensions do not match the algorithm",
            ))
        }
    }
    .require_informative()?
    .with_peaks(cfg.peak_threshold, cfg.min_separation);
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;
    let bound_report = if cfg.attach_bounds {
        Some(lemma_report(cfg, seed)?)
    } else {
        None
    };
    Ok(TrialResult {
        snr_index,
        trial_index,
        snr_db,
        seed,
        peaks_s: profile.peak_lags_s(),
        degenerate_lags: profile.degenerate().len(),
        mse: mse_metric(&profile, &truth)?,
        detection: detection_counts(&profile, &truth),
        true_tdoas_s: truth,
        profile,
        bound_report,
        runtime_ms,
    })
}

/// Full-rank lemma report on the trial's noiseless source.
pub fn lemma_report(cfg: &ExperimentConfig, seed: u64) -> Result<BoundReport> {
    let source = source_waveform(cfg, seed, cfg.grid.length)?;
    let (ch1, ch2) = cfg.channel_pair();
    let ts = cfg.grid.sample_interval_s;
    let spread = ch1
        .delays_s
        .iter()
        .chain(&ch2.delays_s)
        .copied()
        .fold(0.0, f64::max);
    let max_lag = ((spread / ts).ceil() as usize + 1).min(cfg.grid.length - 1);
    let acf = autocorrelation(&source, max_lag)?;
    check_lemma1(&acf, ts, &ch1.delays_s, &ch2.delays_s)
}

/// Bound reports for the first trial of a configuration.
#[derive(Debug, Clone, Serialize)]
pub struct BoundsSummary {
    pub lemma: BoundReport,
    /// Candidate-lag report: snapshot bounds for `VCC_SLOW`, Hankel bounds
    /// for `VCC_FAST`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub candidate: Option<BoundReport>,
}

/// Full-rank lemma and, given a candidate lag and `mu`, the volume bound
/// for that lag, evaluated on the noiseless first trial.
pub fn bounds_summary(
    cfg: &ExperimentConfig,
    candidate: Option<(f64, f64)>,
) -> Result<BoundsSummary> {
    cfg.validate()?;
    let seed = mix2(cfg.seed, 0, 0);
    let lemma = lemma_report(cfg, seed)?;
    let Some((lag_s, mu)) = candidate else {
        return Ok(BoundsSummary {
            lemma,
            candidate: None,
        });
    };
    let (ch1, ch2) = cfg.channel_pair();
    let ts = cfg.grid.sample_interval_s;
    let n = cfg.grid.length;
    let source = source_waveform(cfg, seed, n)?;
    let acf = autocorrelation(&source, n - 1)?;
    let report = match (cfg.algorithm, cfg.dims) {
        (Algorithm::VccFast, Some(Dims::Hankel { m, k1, k2 })) => {
            let grid = cfg.delay_grid()?;
            let hankel = HankelConfig::new(m);
            let (x1, x2) = synthesize_records(cfg, None, seed)?;
            let x1d = fractional_delay(&x1, lag_s, grid.interpolation_factor())?;
            let sigma1 =
                hankel_signal_subspace(&build_hankel(&x1d, hankel)?, k1)?.smallest_retained();
            let sigma2 =
                hankel_signal_subspace(&build_hankel(&x2, hankel)?, k2)?.smallest_retained();
            let truth = cross_difference_tdoas(ch1, ch2, grid.step_s());
            let is_true = truth
                .iter()
                .any(|t| (t - lag_s).abs() < 0.5 * grid.step_s());
            let (g1, g2) = (
                realized_gains(ch1, seed, RECEIVER_1),
                realized_gains(ch2, seed, RECEIVER_2),
            );
            let inputs = HankelBoundInputs {
                acf: &acf,
                sample_interval_s: ts,
                delays1_s: &ch1.delays_s,
                delays2_s: &ch2.delays_s,
                gains1: &g1,
                gains2: &g2,
                hankel,
                record_len: n,
                k1,
                k2,
                sigma1,
                sigma2,
                column_norms: None,
                signal_power: source.mean_power(),
            };
            check_theorem34(&inputs, lag_s, is_true, mu)?
        }
        _ => check_theorem1(&acf, ts, &ch1.delays_s, &ch2.delays_s, lag_s, mu)?,
    };
    Ok(BoundsSummary {
        lemma,
        candidate: Some(report),
    })
}

/// Every `(snr_index, trial_index)` pair in parallel; results are ordered by
/// SNR index, then trial index.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..cfg.snr_db_list.len())
        .flat_map(|s| (0..cfg.trials).map(move |t| (s, t)))
        .collect();
    jobs.into_par_iter()
        .map(|(s, t)| run_trial(cfg, s, t))
        .collect()
}
