//! Waveform synthesis, autocorrelation and band-limited delay.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-length, in input samples, of the interpolation kernel.
pub const KERNEL_HALF_LENGTH: usize = 64;

/// Kaiser window shape parameter of the interpolation kernel.
pub const KAISER_BETA: f64 = 12.0;

/// Upsampling factors accepted by [`fractional_delay`].
pub const SUPPORTED_FACTORS: [usize; 5] = [1, 2, 4, 5, 8];

/// Uniform sampling grid: interval and record length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalGrid {
    pub sample_interval_s: f64,
    pub length: usize,
}

impl SignalGrid {
    pub fn new(sample_interval_s: f64, length: usize) -> Result<Self> {
        let grid = Self {
            sample_interval_s,
            length,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn from_rate(sample_rate_hz: f64, length: usize) -> Result<Self> {
        Self::new(1.0 / sample_rate_hz, length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sample_interval_s.is_finite() && self.sample_interval_s > 0.0) {
            return Err(Error::config("grid.sample_interval_s", "must be positive"));
        }
        if self.length < 2 {
            return Err(Error::config("grid.length", "must be at least 2"));
        }
        Ok(())
    }

    pub fn sample_rate_hz(&self) -> f64 {
        1.0 / self.sample_interval_s
    }

    pub fn nyquist_hz(&self) -> f64 {
        0.5 * self.sample_rate_hz()
    }

    pub fn duration_s(&self) -> f64 {
        self.sample_interval_s * self.length as f64
    }

    /// Same interval, different length.
    pub fn with_length(&self, length: usize) -> Self {
        Self {
            sample_interval_s: self.sample_interval_s,
            length,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum WaveformKind {
    Lfm,
    FmSurrogate,
}

fn default_power() -> f64 {
    1.0
}

fn default_modulation_index() -> f64 {
    4.0
}

/// Parameters of a synthesized transmit waveform.
///
/// `pri_s` and `pulse_duration_s` only apply to [`WaveformKind::Lfm`]; when
/// absent the pulse fills the whole record. `message_bandwidth_hz` and
/// `modulation_index` only apply to [`WaveformKind::FmSurrogate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformSpec {
    pub kind: WaveformKind,
    #[serde(default = "default_power")]
    pub power: f64,
    #[serde(default)]
    pub pri_s: Option<f64>,
    #[serde(default)]
    pub pulse_duration_s: Option<f64>,
    #[serde(default)]
    pub f_start_hz: f64,
    #[serde(default)]
    pub f_stop_hz: f64,
    #[serde(default)]
    pub message_bandwidth_hz: f64,
    #[serde(default = "default_modulation_index")]
    pub modulation_index: f64,
    #[serde(default)]
    pub seed: u64,
}

impl WaveformSpec {
    pub fn lfm(f_start_hz: f64, f_stop_hz: f64) -> Self {
        Self {
            kind: WaveformKind::Lfm,
            power: 1.0,
            pri_s: None,
            pulse_duration_s: None,
            f_start_hz,
            f_stop_hz,
            message_bandwidth_hz: 0.0,
            modulation_index: default_modulation_index(),
            seed: 0,
        }
    }

    pub fn fm_surrogate(message_bandwidth_hz: f64, seed: u64) -> Self {
        Self {
            kind: WaveformKind::FmSurrogate,
            power: 1.0,
            pri_s: None,
            pulse_duration_s: None,
            f_start_hz: 0.0,
            f_stop_hz: 0.0,
            message_bandwidth_hz,
            modulation_index: default_modulation_index(),
            seed,
        }
    }

    pub fn with_pulse(mut self, pulse_duration_s: f64, pri_s: f64) -> Self {
        self.pulse_duration_s = Some(pulse_duration_s);
        self.pri_s = Some(pri_s);
        self
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn validate(&self, grid: &SignalGrid) -> Result<()> {
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(Error::config("waveform.power", "must be positive"));
        }
        match self.kind {
            WaveformKind::Lfm => {
                let nyq = grid.nyquist_hz();
                if self.f_stop_hz < self.f_start_hz {
                    return Err(Error::config(
                        "waveform.f_stop_hz",
                        "must not be below f_start_hz",
                    ));
                }
                if self.f_start_hz.abs() > nyq || self.f_stop_hz.abs() > nyq {
                    return Err(Error::OutOfRange(format!(
                        "sweep {}..{} Hz exceeds Nyquist {nyq} Hz",
                        self.f_start_hz, self.f_stop_hz
                    )));
                }
                let pulse = self.pulse_duration_s.unwrap_or(grid.duration_s());
                if !(pulse > 0.0) {
                    return Err(Error::config(
                        "waveform.pulse_duration_s",
                        "must be positive",
                    ));
                }
                if let Some(pri) = self.pri_s {
                    if pri + 1e-12 < pulse {
                        return Err(Error::config("waveform.pri_s", "shorter than the pulse"));
                    }
                }
            }
            WaveformKind::FmSurrogate => {
                let limit = grid.nyquist_hz() / 4.0;
                if !(self.message_bandwidth_hz > 0.0 && self.message_bandwidth_hz < limit) {
                    return Err(Error::OutOfRange(format!(
                        "message bandwidth {} Hz outside (0, {limit}) Hz",
                        self.message_bandwidth_hz
                    )));
                }
                if !(self.modulation_index.is_finite() && self.modulation_index > 0.0) {
                    return Err(Error::config(
                        "waveform.modulation_index",
                        "must be positive",
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Sampled complex baseband record.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    grid: SignalGrid,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_interval_s: f64) -> Result<Self> {
        let grid = SignalGrid::new(sample_interval_s, samples.len())?;
        if samples
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::NonFinite("signal samples"));
        }
        Ok(Self { samples, grid })
    }

    pub(crate) fn from_parts(samples: Vec<Complex64>, grid: SignalGrid) -> Self {
        debug_assert_eq!(samples.len(), grid.length);
        Self { samples, grid }
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn grid(&self) -> SignalGrid {
        self.grid
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        self.energy() / self.len() as f64
    }

    /// Contiguous sub-record `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        if len < 2 || start + len > self.len() {
            return Err(Error::OutOfRange(format!(
                "slice {start}+{len} outside record of {}",
                self.len()
            )));
        }
        Ok(Self::from_parts(
            self.samples[start..start + len].to_vec(),
            self.grid.with_length(len),
        ))
    }
}

/// Linear chirp pulse train with constant modulus `sqrt(power)`.
///
/// Inside each pulse the instantaneous frequency runs linearly from
/// `f_start_hz` at the first sample to `f_stop_hz` at the last; between
/// pulses the signal is zero.
pub fn generate_lfm(spec: &WaveformSpec, grid: &SignalGrid) -> Result<ComplexSignal> {
    if spec.kind != WaveformKind::Lfm {
        return Err(Error::config("waveform.kind", "expected LFM"));
    }
    spec.validate(grid)?;
    let ts = grid.sample_interval_s;
    let pulse_len = spec
        .pulse_duration_s
        .map(|d| ((d / ts).round() as usize).clamp(1, grid.length))
        .unwrap_or(grid.length);
    let pri_len = spec
        .pri_s
        .map(|p| ((p / ts).round() as usize).max(pulse_len))
        .unwrap_or(usize::MAX);
    let sweep_time = (pulse_len.saturating_sub(1)).max(1) as f64 * ts;
    let rate = (spec.f_stop_hz - spec.f_start_hz) / sweep_time;
    let amp = spec.power.sqrt();
    let samples = (0..grid.length)
        .map(|k| {
            let offset = if pri_len == usize::MAX {
                k
            } else {
                k % pri_len
            };
            if offset >= pulse_len {
                return Complex64::new(0.0, 0.0);
            }
            let t = offset as f64 * ts;
            let phase = 2.0 * PI * (spec.f_start_hz * t + 0.5 * rate * t * t);
            Complex64::from_polar(amp, phase)
        })
        .collect();
    Ok(ComplexSignal::from_parts(samples, *grid))
}

/// Zero-mean, unit-RMS Gaussian noise band-limited to `|f| <= bandwidth_hz`.
fn band_limited_gaussian(
    len: usize,
    bandwidth_hz: f64,
    sample_rate_hz: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let mut spectrum: Vec<Complex64> = (0..len)
        .map(|_| Complex64::new(StandardNormal.sample(rng), 0.0))
        .collect();
    let mut planner = FftPlanner::<f64>::new();
    planner.plan_fft_forward(len).process(&mut spectrum);
    for (i, bin) in spectrum.iter_mut().enumerate() {
        let idx = if i <= len / 2 {
            i as f64
        } else {
            i as f64 - len as f64
        };
        let freq = idx * sample_rate_hz / len as f64;
        if freq.abs() > bandwidth_hz {
            *bin = Complex64::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut spectrum);
    let mut message: Vec<f64> = spectrum.iter().map(|z| z.re).collect();
    let mean = message.iter().sum::<f64>() / len as f64;
    message.iter_mut().for_each(|m| *m -= mean);
    let rms = (message.iter().map(|m| m * m).sum::<f64>() / len as f64).sqrt();
    if rms > 0.0 {
        message.iter_mut().for_each(|m| *m /= rms);
    }
    message
}

/// Angle-modulated stand-in for a broadcast signal.
///
/// The phase is `modulation_index` times a seeded, unit-RMS Gaussian message
/// band-limited to `message_bandwidth_hz`; the modulus is `sqrt(power)`.
pub fn generate_fm_surrogate(spec: &WaveformSpec, grid: &SignalGrid) -> Result<ComplexSignal> {
    if spec.kind != WaveformKind::FmSurrogate {
        return Err(Error::config("waveform.kind", "expected FM_SURROGATE"));
    }
    spec.validate(grid)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let message = band_limited_gaussian(
        grid.length,
        spec.message_bandwidth_hz,
        grid.sample_rate_hz(),
        &mut rng,
    );
    let amp = spec.power.sqrt();
    let samples = message
        .iter()
        .map(|m| Complex64::from_polar(amp, spec.modulation_index * m))
        .collect();
    Ok(ComplexSignal::from_parts(samples, *grid))
}

/// Dispatches on [`WaveformSpec::kind`].
pub fn generate(spec: &WaveformSpec, grid: &SignalGrid) -> Result<ComplexSignal> {
    match spec.kind {
        WaveformKind::Lfm => generate_lfm(spec, grid),
        WaveformKind::FmSurrogate => generate_fm_surrogate(spec, grid),
    }
}

/// Autocorrelation `R(tau) = sum_k x[k] conj(x[k - tau])` on integer lags.
#[derive(Debug, Clone, PartialEq)]
pub struct AutocorrelationProfile {
    max_lag: usize,
    values: Vec<Complex64>,
    peak_value: f64,
}

impl AutocorrelationProfile {
    pub fn max_lag(&self) -> usize {
        self.max_lag
    }

    pub fn lags(&self) -> impl Iterator<Item = i64> + '_ {
        let m = self.max_lag as i64;
        -m..=m
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// `|R(0)|`.
    pub fn peak_value(&self) -> f64 {
        self.peak_value
    }

    pub fn value(&self, lag: i64) -> Option<Complex64> {
        let idx = lag + self.max_lag as i64;
        (0..self.values.len() as i64)
            .contains(&idx)
            .then(|| self.values[idx as usize])
    }

    /// `|R(lag)| / |R(0)|`.
    pub fn normalized(&self, lag: i64) -> Option<f64> {
        self.value(lag).map(|v| {
            if self.peak_value > 0.0 {
                v.norm() / self.peak_value
            } else {
                0.0
            }
        })
    }

    /// Largest normalized magnitude over `min_lag <= |tau| <= max_lag`.
    pub fn max_normalized_beyond(&self, min_lag: usize) -> f64 {
        (min_lag..=self.max_lag)
            .flat_map(|l| [l as i64, -(l as i64)])
            .filter_map(|l| self.normalized(l))
            .fold(0.0, f64::max)
    }

    /// Width in lags of the main lobe at `level` (fraction of `|R(0)|`),
    /// linearly interpolated between integer lags.
    pub fn mainlobe_width(&self, level: f64) -> f64 {
        let side = |sign: i64| {
            let mut prev = 1.0;
            for l in 1..=self.max_lag as i64 {
                let v = self.normalized(sign * l).unwrap_or(0.0);
                if v < level {
                    return (l - 1) as f64 + (prev - level) / (prev - v);
                }
                prev = v;
            }
            self.max_lag as f64
        };
        side(1) + side(-1)
    }
}

/// Autocorrelation of `x` for lags `-max_lag..=max_lag`, out-of-record
/// samples taken as zero.
pub fn autocorrelation(x: &ComplexSignal, max_lag: usize) -> Result<AutocorrelationProfile> {
    let n = x.len();
    if max_lag >= n {
        return Err(Error::OutOfRange(format!(
            "max_lag {max_lag} must be below length {n}"
        )));
    }
    let s = x.samples();
    let values: Vec<Complex64> = (-(max_lag as i64)..=max_lag as i64)
        .map(|tau| {
            let lo = tau.max(0) as usize;
            let hi = (n as i64 + tau.min(0)) as usize;
            (lo..hi)
                .map(|k| s[k] * s[(k as i64 - tau) as usize].conj())
                .sum()
        })
        .collect();
    let peak_value = values[max_lag].norm();
    Ok(AutocorrelationProfile {
        max_lag,
        values,
        peak_value,
    })
}

/// Zeroth-order modified Bessel function of the first kind.
pub(crate) fn bessel_i0(x: f64) -> f64 {
    let y = 0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= y / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

fn kernel(u: f64, i0_beta: f64) -> f64 {
    let half = KERNEL_HALF_LENGTH as f64;
    if u.abs() >= half {
        return 0.0;
    }
    let r = u / half;
    let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / i0_beta;
    let sinc = if u == 0.0 {
        1.0
    } else {
        (PI * u).sin() / (PI * u)
    };
    sinc * window
}

/// Interpolation taps for a delay with fractional part `frac` in `(0, 1)`.
///
/// Output sample `k` reads `x[floor(k - delay) + i]` weighted by `taps[i + H - 1]`
/// for `i` in `1-H..=H`.
pub(crate) fn interpolation_taps(frac: f64) -> Vec<f64> {
    let h = KERNEL_HALF_LENGTH as i64;
    let i0_beta = bessel_i0(KAISER_BETA);
    (1 - h..=h)
        .map(|i| kernel(frac - i as f64, i0_beta))
        .collect()
}

/// Delays `x` by `delay` samples (any real value), zero outside the record.
///
/// Output sample `k` is the band-limited reconstruction of `x` at time
/// `t = k - delay`, and zero whenever `t` falls outside `[0, N)`. Integer
/// delays reduce to an exact shift.
pub fn shift_samples(x: &[Complex64], delay: f64) -> Vec<Complex64> {
    let n = x.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    let rounded = delay.round();
    if (delay - rounded).abs() < 1e-12 {
        let d = rounded as i64;
        for (k, y) in out.iter_mut().enumerate() {
            let src = k as i64 - d;
            if (0..n as i64).contains(&src) {
                *y = x[src as usize];
            }
        }
        return out;
    }
    let base = (-delay).floor();
    let frac = -delay - base;
    let taps = interpolation_taps(frac);
    let h = KERNEL_HALF_LENGTH as i64;
    for (k, y) in out.iter_mut().enumerate() {
        let t = k as f64 - delay;
        if t < 0.0 || t >= n as f64 {
            continue;
        }
        let j0 = k as i64 + base as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in (1 - h)..=h {
            let j = j0 + i;
            if (0..n as i64).contains(&j) {
                acc += x[j as usize] * taps[(i + h - 1) as usize];
            }
        }
        *y = acc;
    }
    out
}

/// Number of fine-grid steps `delay_s` rounds to at the given factor.
pub fn fine_steps(delay_s: f64, sample_interval_s: f64, factor: usize) -> i64 {
    (delay_s / sample_interval_s * factor as f64).round() as i64
}

/// Band-limited delay by `delay_s` seconds.
///
/// Equivalent to upsampling by `factor`, shifting by the nearest whole number
/// of fine-grid steps and decimating back, so the applied delay is quantized
/// to `Ts / factor`. Samples that would come from outside the record are zero.
pub fn fractional_delay(x: &ComplexSignal, delay_s: f64, factor: usize) -> Result<ComplexSignal> {
    if !SUPPORTED_FACTORS.contains(&factor) {
        return Err(Error::OutOfRange(format!(
            "interpolation factor {factor} not in {SUPPORTED_FACTORS:?}"
        )));
    }
    let ts = x.grid().sample_interval_s;
    if !delay_s.is_finite() || delay_s.abs() >= x.len() as f64 * ts {
        return Err(Error::OutOfRange(format!(
            "delay {delay_s} s not shorter than the record"
        )));
    }
    let q = fine_steps(delay_s, ts, factor);
    let delay = q as f64 / factor as f64;
    Ok(ComplexSignal::from_parts(
        shift_samples(x.samples(), delay),
        x.grid(),
    ))
}

/// Grid metadata stored next to an IQ file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IqSidecar {
    pub sample_rate_hz: f64,
    pub length: usize,
}

/// Path of the JSON sidecar for an IQ file (`<file>.json`).
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes interleaved little-endian `f32` I/Q pairs plus the JSON sidecar.
pub fn write_iq(path: &Path, x: &ComplexSignal) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * x.len());
    for z in x.samples() {
        bytes.extend_from_slice(&(z.re as f32).to_le_bytes());
        bytes.extend_from_slice(&(z.im as f32).to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let meta = IqSidecar {
        sample_rate_hz: x.grid().sample_rate_hz(),
        length: x.len(),
    };
    std::fs::write(sidecar_path(path), serde_json::to_vec_pretty(&meta)?)?;
    Ok(())
}

/// Decodes headerless interleaved little-endian `f32` I/Q pairs.
pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Complex64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Dimension(format!(
            "IQ payload of {} bytes is not a whole number of f32 pairs",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
            Complex64::new(re as f64, im as f64)
        })
        .collect())
}

/// Reads an IQ file and its sidecar.
pub fn read_iq(path: &Path) -> Result<ComplexSignal> {
    let meta: IqSidecar = serde_json::from_slice(&std::fs::read(sidecar_path(path))?)?;
    let samples = decode_iq(&std::fs::read(path)?)?;
    if samples.len() != meta.length {
        return Err(Error::Dimension(format!(
            "sidecar length {} but file holds {} samples",
            meta.length,
            samples.len()
        )));
    }
    ComplexSignal::new(samples, 1.0 / meta.sample_rate_hz)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(fs: f64, n: usize) -> SignalGrid {
        SignalGrid::from_rate(fs, n).unwrap()
    }

    fn tone(freq_norm: f64, n: usize) -> ComplexSignal {
        let s = (0..n)
            .map(|k| Complex64::from_polar(1.0, 2.0 * PI * freq_norm * k as f64))
            .collect();
        ComplexSignal::new(s, 1.0).unwrap()
    }

    #[test]
    fn lfm_has_constant_modulus() {
        let g = grid(1e6, 2048);
        let spec = WaveformSpec::lfm(50e3, 500e3).with_power(2.5);
        let x = generate_lfm(&spec, &g).unwrap();
        assert_eq!(x.len(), 2048);
        for z in x.samples() {
            assert!((z.norm() - 2.5f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn lfm_degenerate_sweep_is_a_tone() {
        let g = grid(1e6, 1024);
        let x = generate_lfm(&WaveformSpec::lfm(125e3, 125e3), &g).unwrap();
        let mut bins = x.samples().to_vec();
        FftPlanner::<f64>::new()
            .plan_fft_forward(1024)
            .process(&mut bins);
        let peak = (0..1024)
            .max_by(|&a, &b| bins[a].norm().total_cmp(&bins[b].norm()))
            .unwrap();
        assert_eq!(peak, 128);
    }

    #[test]
    fn lfm_instantaneous_frequency_endpoints() {
        let g = grid(1e6, 2048);
        let x = generate_lfm(&WaveformSpec::lfm(50e3, 500e3), &g).unwrap();
        let s = x.samples();
        let inst = |k: usize| {
            let mut d = s[k + 1].arg() - s[k].arg();
            while d < -1e-9 {
                d += 2.0 * PI;
            }
            d / (2.0 * PI * g.sample_interval_s)
        };
        assert!((inst(0) - 50e3).abs() < 1e3);
        assert!((inst(2046) - 500e3).abs() < 1e3);
    }

    #[test]
    fn lfm_pulse_energy() {
        let g = grid(1e6, 512);
        let spec = WaveformSpec::lfm(50e3, 500e3)
            .with_pulse(256e-6, 512e-6)
            .with_power(3.0);
        let x = generate_lfm(&spec, &g).unwrap();
        let expected = 3.0 * 256.0;
        assert!((x.energy() - expected).abs() <= 1e-12 * expected);
        assert_eq!(x.samples()[300], Complex64::new(0.0, 0.0));
    }

    #[test]
    fn lfm_pulse_train_repeats() {
        let g = grid(1e6, 400);
        let spec = WaveformSpec::lfm(50e3, 200e3).with_pulse(50e-6, 100e-6);
        let x = generate_lfm(&spec, &g).unwrap();
        for k in 0..100 {
            assert!((x.samples()[k] - x.samples()[k + 200]).norm() < 1e-12);
        }
    }

    #[test]
    fn lfm_rejects_sweep_beyond_nyquist() {
        let g = grid(1e6, 64);
        let err = generate_lfm(&WaveformSpec::lfm(50e3, 600e3), &g).unwrap_err();
        assert!(matches!(err, Error::OutOfRange(_)));
    }

    #[test]
    fn surrogate_is_deterministic_and_constant_modulus() {
        let g = grid(256e3, 1024);
        let spec = WaveformSpec::fm_surrogate(10e3, 42).with_power(4.0);
        let a = generate_fm_surrogate(&spec, &g).unwrap();
        let b = generate_fm_surrogate(&spec, &g).unwrap();
        assert_eq!(a, b);
        for z in a.samples() {
            assert!((z.norm() - 2.0).abs() < 1e-12);
        }
        let c = generate_fm_surrogate(&WaveformSpec::fm_surrogate(10e3, 43), &g).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn surrogate_mainlobe_narrows_with_bandwidth() {
        let g = grid(256e3, 4096);
        let width = |bw: f64| {
            let mut total = 0.0;
            for seed in 0..4 {
                let x = generate_fm_surrogate(&WaveformSpec::fm_surrogate(bw, seed), &g).unwrap();
                let acf = autocorrelation(&x, 200).unwrap();
                total += acf.mainlobe_width(0.5f64.sqrt());
            }
            total / 4.0
        };
        let narrow = width(8e3);
        let wide = width(16e3);
        assert!(wide < narrow, "width at 16 kHz {wide} vs 8 kHz {narrow}");
    }

    #[test]
    fn surrogate_rejects_wide_message() {
        let g = grid(256e3, 256);
        let err = generate_fm_surrogate(&WaveformSpec::fm_surrogate(40e3, 1), &g).unwrap_err();
        assert!(matches!(err, Error::OutOfRange(_)));
    }

    #[test]
    fn autocorrelation_zero_lag_is_energy() {
        let g = grid(1e6, 300);
        let x = generate_lfm(&WaveformSpec::lfm(10e3, 300e3), &g).unwrap();
        let acf = autocorrelation(&x, 20).unwrap();
        let r0 = acf.value(0).unwrap();
        assert!((r0.re - x.energy()).abs() < 1e-9 && r0.im.abs() < 1e-9);
    }

    #[test]
    fn autocorrelation_of_impulse_is_delta() {
        let mut s = vec![Complex64::new(0.0, 0.0); 16];
        s[0] = Complex64::new(1.0, 0.0);
        let x = ComplexSignal::new(s, 1.0).unwrap();
        let acf = autocorrelation(&x, 10).unwrap();
        for lag in -10..=10 {
            let expect = if lag == 0 { 1.0 } else { 0.0 };
            assert_eq!(acf.value(lag).unwrap(), Complex64::new(expect, 0.0));
        }
    }

    #[test]
    fn autocorrelation_is_hermitian() {
        let g = grid(256e3, 512);
        for seed in 0..3 {
            let x = generate_fm_surrogate(&WaveformSpec::fm_surrogate(20e3, seed), &g).unwrap();
            let acf = autocorrelation(&x, 100).unwrap();
            for lag in 1..=100 {
                let d = acf.value(-lag).unwrap() - acf.value(lag).unwrap().conj();
                assert!(d.norm() <= 1e-10 * acf.peak_value());
            }
        }
    }

    #[test]
    fn lfm_sidelobes_regression() {
        // Full-band chirp over a 512-sample record.
        let g = grid(1e6, 512);
        let x = generate_lfm(&WaveformSpec::lfm(50e3, 500e3), &g).unwrap();
        let acf = autocorrelation(&x, 511).unwrap();
        assert!(acf.max_normalized_beyond(11) < 0.1);
    }

    #[test]
    fn autocorrelation_rejects_long_lag() {
        let x = tone(0.1, 8);
        assert!(autocorrelation(&x, 8).is_err());
    }

    #[test]
    fn zero_delay_is_identity() {
        let x = tone(0.13, 256);
        let y = fractional_delay(&x, 0.0, 4).unwrap();
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn integer_delay_is_exact_shift() {
        let x = tone(0.21, 64);
        let y = fractional_delay(&x, 3.0, 1).unwrap();
        for k in 0..64 {
            let expect = if k >= 3 {
                x.samples()[k - 3]
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert_eq!(y.samples()[k], expect);
        }
    }

    #[test]
    fn half_sample_delay_matches_tone_phase() {
        let f = 0.11;
        let x = tone(f, 1024);
        let y = fractional_delay(&x, 0.5, 4).unwrap();
        let rot = Complex64::from_polar(1.0, -2.0 * PI * f * 0.5);
        for k in 200..824 {
            let expect = x.samples()[k] * rot;
            assert!((y.samples()[k] - expect).norm() <= 1e-3 * expect.norm());
        }
    }

    #[test]
    fn delay_quantizes_to_fine_grid() {
        assert_eq!(fine_steps(0.3, 1.0, 4), 1);
        assert_eq!(fine_steps(-0.38, 1.0, 4), -2);
        assert_eq!(fine_steps(25.5, 1.0, 4), 102);
    }

    #[test]
    fn delay_errors() {
        let x = tone(0.1, 32);
        assert!(fractional_delay(&x, 32.0, 1).is_err());
        assert!(fractional_delay(&x, 1.0, 3).is_err());
    }

    #[test]
    fn iq_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.iq");
        let g = grid(256e3, 100);
        let x = generate_fm_surrogate(&WaveformSpec::fm_surrogate(5e3, 7), &g).unwrap();
        write_iq(&path, &x).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 800);
        let y = read_iq(&path).unwrap();
        assert_eq!(y.len(), 100);
        assert!((y.grid().sample_rate_hz() - 256e3).abs() < 1e-6);
        for (a, b) in x.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() < 1e-6);
        }
    }

    #[test]
    fn iq_rejects_ragged_payload() {
        assert!(decode_iq(&[0u8; 12]).is_err());
    }
}
