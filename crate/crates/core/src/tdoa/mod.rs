//! Delay-grid scans of the reciprocal VCC function and peak extraction.

mod fast;
mod slow;

pub use fast::vcc_profile_fast;
pub use slow::vcc_profile_slow;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{singular_values, CMatrix};

/// Volumes below this are clamped before taking the reciprocal.
pub const VOLUME_FLOOR: f64 = 1e-12;

/// Largest reported `r_vol`, reached when the volume hits [`VOLUME_FLOOR`].
pub const R_VOL_CAP: f64 = 1.0 / VOLUME_FLOOR;

/// A retained eigen- or singular value below this fraction of the largest
/// marks the lag as rank deficient.
pub const RANK_DEFICIENCY_TOL: f64 = 1e-10;

pub const DEFAULT_PEAK_THRESHOLD: f64 = 0.3;
pub const DEFAULT_MIN_SEPARATION: usize = 3;

/// Candidate lags `q * Ts / F` for consecutive integers `q`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayGrid {
    lags_s: Vec<f64>,
    step_s: f64,
    interpolation_factor: usize,
    #[serde(skip)]
    first_step: i64,
}

impl DelayGrid {
    /// Lags from `min_steps` to `max_steps` fine steps of `Ts / factor`.
    pub fn new(
        sample_interval_s: f64,
        factor: usize,
        min_steps: i64,
        max_steps: i64,
    ) -> Result<Self> {
        if factor == 0 {
            return Err(Error::OutOfRange(
                "interpolation factor must be at least 1".into(),
            ));
        }
        if !(sample_interval_s > 0.0 && sample_interval_s.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "sample interval {sample_interval_s} must be positive"
            )));
        }
        if min_steps > max_steps {
            return Err(Error::OutOfRange(format!(
                "empty lag range {min_steps}..={max_steps}"
            )));
        }
        let step_s = sample_interval_s / factor as f64;
        Ok(Self {
            lags_s: (min_steps..=max_steps).map(|q| q as f64 * step_s).collect(),
            step_s,
            interpolation_factor: factor,
            first_step: min_steps,
        })
    }

    /// Lags `-span_samples * Ts ..= span_samples * Ts` at `Ts / factor`.
    pub fn symmetric(sample_interval_s: f64, factor: usize, span_samples: usize) -> Result<Self> {
        let q = (span_samples * factor) as i64;
        Self::new(sample_interval_s, factor, -q, q)
    }

    /// Every fine-grid lag strictly inside `(-(limit-1) Ts, (limit-1) Ts)`.
    pub fn full(sample_interval_s: f64, factor: usize, limit: usize) -> Result<Self> {
        if limit < 2 {
            return Err(Error::OutOfRange(format!(
                "no admissible lags for length {limit}"
            )));
        }
        let q = ((limit - 1) * factor) as i64 - 1;
        Self::new(sample_interval_s, factor, -q, q)
    }

    pub fn lags_s(&self) -> &[f64] {
        &self.lags_s
    }

    pub fn step_s(&self) -> f64 {
        self.step_s
    }

    pub fn sample_interval_s(&self) -> f64 {
        self.step_s * self.interpolation_factor as f64
    }

    pub fn interpolation_factor(&self) -> usize {
        self.interpolation_factor
    }

    pub fn len(&self) -> usize {
        self.lags_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lags_s.is_empty()
    }

    /// Lag `i` in fine-grid steps.
    pub fn steps(&self, i: usize) -> i64 {
        self.first_step + i as i64
    }

    /// Index of the grid lag nearest to `lag_s`, if it lies within half a step.
    pub fn index_of(&self, lag_s: f64) -> Option<usize> {
        let q = (lag_s / self.step_s).round() as i64 - self.first_step;
        if q < 0 || q as usize >= self.len() {
            return None;
        }
        let i = q as usize;
        ((self.lags_s[i] - lag_s).abs() <= 0.5 * self.step_s * (1.0 + 1e-9)).then_some(i)
    }

    /// Errors unless every lag lies in `(-(limit-1) Ts, (limit-1) Ts)`.
    pub fn check_within(&self, limit: usize, what: &str) -> Result<()> {
        let bound = (limit as i64 - 1) * self.interpolation_factor as i64;
        let lo = self.first_step;
        let hi = self.first_step + self.len() as i64 - 1;
        if lo <= -bound || hi >= bound {
            return Err(Error::OutOfRange(format!(
                "lag grid [{lo}, {hi}] fine steps leaves the admissible range of {what} (|lag| < {bound} steps)"
            )));
        }
        Ok(())
    }
}

/// A detected peak.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub index: usize,
    pub lag_s: f64,
    pub value: f64,
}

/// Raw and max-normalized profile over a delay grid, with detected peaks.
#[derive(Debug, Clone, Serialize)]
pub struct DelayProfile {
    grid: DelayGrid,
    r_vol: Vec<f64>,
    normalized: Vec<f64>,
    peaks: Vec<Peak>,
    degenerate: Vec<usize>,
    threshold: f64,
    min_separation: usize,
}

impl DelayProfile {
    /// Builds a profile from raw nonnegative values; `degenerate` lists the
    /// indices of rank-deficient lags.
    pub fn from_values(grid: DelayGrid, r_vol: Vec<f64>, degenerate: Vec<usize>) -> Result<Self> {
        if r_vol.len() != grid.len() || r_vol.is_empty() {
            return Err(Error::Dimension(format!(
                "{} values for {} lags",
                r_vol.len(),
                grid.len()
            )));
        }
        if r_vol.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite("profile values"));
        }
        let max = r_vol.iter().copied().fold(0.0, f64::max);
        let normalized = if max > 0.0 {
            r_vol.iter().map(|v| v / max).collect()
        } else {
            vec![0.0; r_vol.len()]
        };
        let mut profile = Self {
            grid,
            r_vol,
            normalized,
            peaks: Vec::new(),
            degenerate,
            threshold: DEFAULT_PEAK_THRESHOLD,
            min_separation: DEFAULT_MIN_SEPARATION,
        };
        profile.repick(DEFAULT_PEAK_THRESHOLD, DEFAULT_MIN_SEPARATION);
        Ok(profile)
    }

    /// Re-runs peak detection with other settings.
    pub fn repick(&mut self, threshold: f64, min_separation: usize) {
        self.threshold = threshold;
        self.min_separation = min_separation;
        self.peaks = pick_peaks(&self.r_vol, &self.grid, threshold, min_separation);
    }

    pub fn with_peaks(mut self, threshold: f64, min_separation: usize) -> Self {
        self.repick(threshold, min_separation);
        self
    }

    pub fn grid(&self) -> &DelayGrid {
        &self.grid
    }

    pub fn r_vol(&self) -> &[f64] {
        &self.r_vol
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn peak_lags_s(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.lag_s).collect()
    }

    /// Indices of lags whose subspace was rank deficient.
    pub fn degenerate(&self) -> &[usize] {
        &self.degenerate
    }

    /// Fails when every lag is degenerate, leaving nothing to locate.
    pub fn require_informative(self) -> Result<Self> {
        if !self.degenerate.is_empty() && self.degenerate.len() == self.r_vol.len() {
            return Err(Error::Degenerate(
                "every lag of the profile is rank deficient".into(),
            ));
        }
        Ok(self)
    }

    /// Index of the global maximum (first one on ties).
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.r_vol.iter().enumerate() {
            if *v > self.r_vol[best] {
                best = i;
            }
        }
        best
    }

    /// Width in seconds of the dominant peak where the normalized profile
    /// stays at or above `level`, with linear interpolation between lags.
    pub fn peak_width_s(&self, level: f64) -> f64 {
        let y = &self.normalized;
        let c = self.argmax();
        let crossing = |a: usize, b: usize| {
            let t = (y[a] - level) / (y[a] - y[b]);
            a as f64 + t * (b as f64 - a as f64)
        };
        let mut left = 0.0;
        let mut i = c;
        while i > 0 {
            if y[i - 1] < level {
                left = crossing(i, i - 1);
                break;
            }
            i -= 1;
        }
        let mut right = (y.len() - 1) as f64;
        let mut j = c;
        while j + 1 < y.len() {
            if y[j + 1] < level {
                right = crossing(j, j + 1);
                break;
            }
            j += 1;
        }
        (right - left) * self.grid.step_s
    }

    /// CSV with columns `lag_seconds,r_vol,normalized`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lag_seconds,r_vol,normalized\n");
        for ((lag, r), n) in self
            .grid
            .lags_s
            .iter()
            .zip(&self.r_vol)
            .zip(&self.normalized)
        {
            out.push_str(&format!("{lag:e},{r:e},{n:e}\n"));
        }
        out
    }

    /// JSON form of the profile with a configuration echo.
    pub fn to_json(&self, config: serde_json::Value) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("profile serializes");
        v["config"] = config;
        v
    }
}

/// Local maxima strictly above both neighbours and at or above
/// `threshold_fraction` of the global maximum, thinned greedily (largest
/// first) to be at least `min_separation` grid steps apart.
pub fn pick_peaks(
    values: &[f64],
    grid: &DelayGrid,
    threshold_fraction: f64,
    min_separation: usize,
) -> Vec<Peak> {
    let max = values.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 || values.len() < 3 {
        return Vec::new();
    }
    let mut candidates: Vec<usize> = (1..values.len() - 1)
        .filter(|&i| {
            values[i] > values[i - 1]
                && values[i] > values[i + 1]
                && values[i] / max >= threshold_fraction
        })
        .collect();
    candidates.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for c in candidates {
        if kept.iter().all(|&k| k.abs_diff(c) >= min_separation) {
            kept.push(c);
        }
    }
    kept.sort_unstable();
    kept.into_iter()
        .map(|i| Peak {
            index: i,
            lag_s: grid.lags_s[i],
            value: values[i] / max,
        })
        .collect()
}

/// `Vol([U1, U2])` for orthonormal `U1`, `U2`, computed as the volume of the
/// component of `U1` orthogonal to `span(U2)`.
pub(crate) fn joint_volume(u1: &CMatrix, u2: &CMatrix) -> f64 {
    let residual = u1 - u2 * (u2.adjoint() * u1);
    singular_values(&residual).iter().product()
}

pub(crate) fn reciprocal_volume(volume: f64) -> f64 {
    1.0 / volume.max(VOLUME_FLOOR)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::{random_orthonormal, rng};
    use crate::linalg::{hstack, matrix_volume};

    fn grid(n: usize) -> DelayGrid {
        DelayGrid::new(1.0, 1, 0, n as i64 - 1).unwrap()
    }

    #[test]
    fn grid_layout() {
        let g = DelayGrid::symmetric(1e-6, 4, 2).unwrap();
        assert_eq!(g.len(), 17);
        assert!((g.step_s() - 0.25e-6).abs() < 1e-20);
        assert!((g.lags_s()[0] + 2e-6).abs() < 1e-18);
        assert_eq!(g.steps(0), -8);
        assert_eq!(g.index_of(0.25e-6), Some(9));
        assert_eq!(g.index_of(5e-6), None);
        assert!(g.check_within(4, "x").is_ok());
        assert!(g.check_within(3, "x").is_err());
        let f = DelayGrid::full(1.0, 2, 5).unwrap();
        assert_eq!(f.steps(0), -7);
        assert!(f.check_within(5, "x").is_ok());
    }

    #[test]
    fn triangular_bump_apex() {
        let v = [0.0, 1.0, 2.0, 3.0, 2.0, 1.0, 0.0];
        let peaks = pick_peaks(&v, &grid(7), 0.3, 3);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].index, 3);
        assert_eq!(peaks[0].value, 1.0);
    }

    #[test]
    fn flat_profile_has_no_peaks() {
        assert!(pick_peaks(&[1.0; 9], &grid(9), 0.3, 3).is_empty());
    }

    #[test]
    fn close_peaks_thinned_and_threshold_applied() {
        let v = [0.0, 1.0, 0.5, 0.9, 0.0, 0.0, 0.0, 0.2, 0.0, 0.6, 0.0];
        let peaks: Vec<usize> = pick_peaks(&v, &grid(11), 0.3, 3)
            .iter()
            .map(|p| p.index)
            .collect();
        assert_eq!(peaks, vec![1, 9]);
        let peaks: Vec<usize> = pick_peaks(&v, &grid(11), 0.1, 1)
            .iter()
            .map(|p| p.index)
            .collect();
        assert_eq!(peaks, vec![1, 3, 7, 9]);
    }

    #[test]
    fn profile_normalization_and_width() {
        let g = grid(7);
        let p =
            DelayProfile::from_values(g, vec![0.0, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0], vec![]).unwrap();
        assert_eq!(p.normalized()[3], 1.0);
        assert_eq!(p.argmax(), 3);
        // Linear crossings of 0.75 at 2.5 and 3.5.
        assert!((p.peak_width_s(0.75) - 1.0).abs() < 1e-12);
        let csv = p.to_csv();
        assert!(csv.starts_with("lag_seconds,r_vol,normalized\n"));
        assert_eq!(csv.lines().count(), 8);
        let json = p.to_json(serde_json::json!({"algorithm": "test"}));
        assert_eq!(json["config"]["algorithm"], "test");
        assert_eq!(json["peaks"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(DelayProfile::from_values(grid(3), vec![1.0, f64::NAN, 0.0], vec![]).is_err());
        assert!(DelayProfile::from_values(grid(3), vec![1.0], vec![]).is_err());
    }

    #[test]
    fn joint_volume_matches_direct_volume() {
        let mut rng = rng(9);
        for (n, a, b) in [(10, 3, 4), (12, 4, 2), (6, 1, 1)] {
            let u1 = random_orthonormal(&mut rng, n, a);
            let u2 = random_orthonormal(&mut rng, n, b);
            let direct = matrix_volume(&hstack(&u1, &u2), a + b).unwrap();
            assert!((joint_volume(&u1, &u2) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn reciprocal_is_capped() {
        assert_eq!(reciprocal_volume(0.0), R_VOL_CAP);
        assert_eq!(reciprocal_volume(0.5), 2.0);
    }
}
