use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::MultipathChannel;
use crate::error::{Error, Result};
use crate::signals::{SignalGrid, WaveformKind, WaveformSpec};
use crate::tdoa::{DelayGrid, DEFAULT_MIN_SEPARATION, DEFAULT_PEAK_THRESHOLD};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Scenario {
    /// Multipath LFM pulse train observed as snapshots.
    SlowLfm,
    /// Multipath FM-like surrogate observed as one record per receiver.
    FastSurrogate,
    /// One path per receiver.
    SinglePath,
    /// Delays off the sampling grid.
    Noninteger,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Algorithm {
    VccSlow,
    VccFast,
    GccPhat,
}

impl Algorithm {
    /// Whether the estimator consumes snapshot sets rather than single records.
    pub fn uses_snapshots(self) -> bool {
        self == Algorithm::VccSlow
    }
}

/// Subspace dimensions: `{l1, l2}` for snapshots, `{m, k1, k2}` for Hankel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    Hankel { m: usize, k1: usize, k2: usize },
    Snapshot { l1: usize, l2: usize },
}

/// Lags `min_steps..=max_steps` in steps of `Ts / interpolation_factor`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelayGridSpec {
    #[serde(default = "one")]
    pub interpolation_factor: usize,
    pub min_steps: i64,
    pub max_steps: i64,
}

fn one() -> usize {
    1
}

fn default_threshold() -> f64 {
    DEFAULT_PEAK_THRESHOLD
}

fn default_separation() -> usize {
    DEFAULT_MIN_SEPARATION
}

impl DelayGridSpec {
    pub fn build(&self, sample_interval_s: f64) -> Result<DelayGrid> {
        DelayGrid::new(
            sample_interval_s,
            self.interpolation_factor,
            self.min_steps,
            self.max_steps,
        )
    }
}

/// One experiment: a scenario, an estimator, an SNR list and a trial count.
///
/// `snr_db_list` entries of `null` mean noiseless. Per-trial seeds are
/// derived from `seed`, the SNR index and the trial index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub waveform: WaveformSpec,
    pub grid: SignalGrid,
    pub channels: Vec<MultipathChannel>,
    #[serde(default = "one")]
    pub snapshots_m: usize,
    pub snr_db_list: Vec<Option<f64>>,
    pub algorithm: Algorithm,
    #[serde(default)]
    pub dims: Option<Dims>,
    pub delay_grid: DelayGridSpec,
    #[serde(default = "default_threshold")]
    pub peak_threshold: f64,
    #[serde(default = "default_separation")]
    pub min_separation: usize,
    #[serde(default = "one")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Attach a full-rank lemma report to every trial.
    #[serde(default)]
    pub attach_bounds: bool,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::config("$", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("$", format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn channel_pair(&self) -> (&MultipathChannel, &MultipathChannel) {
        (&self.channels[0], &self.channels[1])
    }

    pub fn delay_grid(&self) -> Result<DelayGrid> {
        self.delay_grid.build(self.grid.sample_interval_s)
    }

    /// Checks every field, reporting the first failure with its path.
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.waveform
            .validate(&self.grid)
            .map_err(|e| retag(e, "waveform"))?;
        if self.channels.len() != 2 {
            return Err(Error::config("channels", "exactly two receivers required"));
        }
        for (i, ch) in self.channels.iter().enumerate() {
            let mut c = ch.clone();
            c.receiver_id = i;
            c.validate()?;
            if let Some(d) = c
                .delays_s
                .iter()
                .find(|d| **d < 0.0 || **d >= self.grid.duration_s())
            {
                return Err(Error::config(
                    format!("channels[{i}].delays_s"),
                    format!("delay {d} s outside the record"),
                ));
            }
        }
        if self.snr_db_list.is_empty() {
            return Err(Error::config("snr_db_list", "needs at least one entry"));
        }
        if let Some(i) = self
            .snr_db_list
            .iter()
            .position(|s| matches!(s, Some(v) if !v.is_finite()))
        {
            return Err(Error::config(
                format!("snr_db_list[{i}]"),
                "must be finite or null",
            ));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold < 1.0) {
            return Err(Error::config("peak_threshold", "must lie in (0, 1)"));
        }
        if self.min_separation == 0 {
            return Err(Error::config("min_separation", "must be at least 1"));
        }
        self.validate_scenario()?;
        self.validate_algorithm()?;
        let grid = self.delay_grid().map_err(|e| retag(e, "delay_grid"))?;
        let limit = match self.dims {
            Some(Dims::Hankel { m, .. }) if self.algorithm == Algorithm::VccFast => m,
            _ => self.grid.length,
        };
        grid.check_within(limit, "the admissible lag range")
            .map_err(|e| retag(e, "delay_grid"))?;
        Ok(())
    }

    fn validate_scenario(&self) -> Result<()> {
        let kind = self.waveform.kind;
        match self.scenario {
            Scenario::SlowLfm if kind != WaveformKind::Lfm => Err(Error::config(
                "waveform.kind",
                "SLOW_LFM needs an LFM waveform",
            )),
            Scenario::FastSurrogate | Scenario::SinglePath if kind != WaveformKind::FmSurrogate => {
                Err(Error::config(
                    "waveform.kind",
                    "scenario needs an FM_SURROGATE waveform",
                ))
            }
            Scenario::SinglePath => match self.channels.iter().position(|c| c.path_count() != 1) {
                Some(i) => Err(Error::config(
                    format!("channels[{i}].delays_s"),
                    "SINGLE_PATH needs exactly one path",
                )),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    fn validate_algorithm(&self) -> Result<()> {
        let n = self.grid.length;
        match (self.algorithm, self.dims) {
            (Algorithm::VccSlow, dims) => {
                if self.snapshots_m < 2 {
                    return Err(Error::config(
                        "snapshots_m",
                        "VCC_SLOW needs at least 2 snapshots",
                    ));
                }
                let Some(Dims::Snapshot { l1, l2 }) = dims else {
                    return Err(Error::config("dims", "VCC_SLOW needs {\"l1\", \"l2\"}"));
                };
                if l1 == 0 || l2 == 0 || l1 >= n || l2 >= n {
                    return Err(Error::config("dims", format!("l1, l2 must lie in 1..{n}")));
                }
            }
            (Algorithm::VccFast, dims) => {
                let Some(Dims::Hankel { m, k1, k2 }) = dims else {
                    return Err(Error::config(
                        "dims",
                        "VCC_FAST needs {\"m\", \"k1\", \"k2\"}",
                    ));
                };
                if !(m > 1 && m < n) {
                    return Err(Error::config("dims.m", format!("must lie in 2..{n}")));
                }
                let limit = m.min(n + 1 - m);
                if k1 == 0 || k1 > limit {
                    return Err(Error::config("dims.k1", format!("must lie in 1..={limit}")));
                }
                if k2 == 0 || k2 > limit {
                    return Err(Error::config("dims.k2", format!("must lie in 1..={limit}")));
                }
                if k1 + k2 > m {
                    return Err(Error::config("dims", "k1 + k2 must not exceed m"));
                }
            }
            (Algorithm::GccPhat, _) => {}
        }
        Ok(())
    }
}

/// Prefixes a field path onto config errors raised by nested validation.
fn retag(e: Error, prefix: &str) -> Error {
    match e {
        Error::Config { path, reason } if !path.starts_with(prefix) => {
            Error::config(format!("{prefix}.{path}"), reason)
        }
        Error::Config { .. } => e,
        other => Error::config(prefix, other.to_string()),
    }
}
