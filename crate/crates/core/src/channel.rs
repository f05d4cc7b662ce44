//! Multipath channels, fading draws, noise and snapshot synthesis.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::seeds::{mix, tag};
use crate::signals::{shift_samples, ComplexSignal, SignalGrid};

/// Rician factors at or above this value are treated as a fixed gain.
pub const DETERMINISTIC_K: f64 = 1e6;

/// Paths between the source and one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultipathChannel {
    #[serde(default)]
    pub receiver_id: usize,
    /// Path delays in seconds, strictly ascending.
    pub delays_s: Vec<f64>,
    /// Mean path gain magnitudes `E|alpha_l|`; the first (direct) path is largest.
    pub mean_gains: Vec<f64>,
    /// Rician K factor (linear) of the direct path.
    #[serde(default)]
    pub rician_k_direct: f64,
}

impl MultipathChannel {
    pub fn new(
        receiver_id: usize,
        delays_s: Vec<f64>,
        mean_gains: Vec<f64>,
        rician_k_direct: f64,
    ) -> Result<Self> {
        let ch = Self {
            receiver_id,
            delays_s,
            mean_gains,
            rician_k_direct,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Direct path of mean gain 1 and `ratio` times weaker echoes.
    pub fn with_direct_dominance(
        receiver_id: usize,
        delays_s: Vec<f64>,
        ratio: f64,
        rician_k_direct: f64,
    ) -> Result<Self> {
        let gains = (0..delays_s.len())
            .map(|l| if l == 0 { 1.0 } else { 1.0 / ratio })
            .collect();
        Self::new(receiver_id, delays_s, gains, rician_k_direct)
    }

    pub fn path_count(&self) -> usize {
        self.delays_s.len()
    }

    pub fn validate(&self) -> Result<()> {
        let at = |f: &str| format!("channels[{}].{f}", self.receiver_id);
        if self.delays_s.is_empty() {
            return Err(Error::config(at("delays_s"), "needs at least one path"));
        }
        if self.delays_s.iter().any(|d| !d.is_finite()) {
            return Err(Error::config(at("delays_s"), "delays must be finite"));
        }
        if self.delays_s.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config(
                at("delays_s"),
                "delays must be strictly ascending",
            ));
        }
        if self.mean_gains.len() != self.delays_s.len() {
            return Err(Error::config(
                at("mean_gains"),
                "one gain per path required",
            ));
        }
        if self
            .mean_gains
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return Err(Error::config(
                at("mean_gains"),
                "gains must be finite and nonnegative",
            ));
        }
        if self.mean_gains[1..]
            .iter()
            .any(|&g| g >= self.mean_gains[0])
        {
            return Err(Error::config(
                at("mean_gains"),
                "direct path must have the strictly largest mean gain",
            ));
        }
        if !(self.rician_k_direct >= 0.0) {
            return Err(Error::config(at("rician_k_direct"), "must be nonnegative"));
        }
        Ok(())
    }

    /// `E|alpha_l|^2` for each path.
    pub fn mean_square_gains(&self) -> Vec<f64> {
        self.mean_gains
            .iter()
            .enumerate()
            .map(|(l, &g)| {
                if l == 0 {
                    let (los, scatter) = rician_parts(g, self.rician_k_direct);
                    los * los + scatter * scatter
                } else {
                    g * g * 4.0 / PI
                }
            })
            .collect()
    }
}

/// Exponentially scaled modified Bessel functions `(e^-x I0(x), e^-x I1(x))`.
fn bessel_i01_scaled(x: f64) -> (f64, f64) {
    if x < 30.0 {
        let y = 0.25 * x * x;
        let (mut t0, mut s0) = (1.0, 1.0);
        let (mut t1, mut s1) = (0.5 * x, 0.5 * x);
        let mut k = 1.0;
        while t0 > 1e-17 * s0 || t1 > 1e-17 * s1.max(f64::MIN_POSITIVE) {
            t0 *= y / (k * k);
            s0 += t0;
            t1 *= y / (k * (k + 1.0));
            s1 += t1;
            k += 1.0;
        }
        let e = (-x).exp();
        (s0 * e, s1 * e)
    } else {
        // Asymptotic expansion, accurate to double precision for x >= 30.
        let series = |nu: f64| {
            let mu = 4.0 * nu * nu;
            let mut term = 1.0;
            let mut sum = 1.0;
            for k in 1..12 {
                let kf = k as f64;
                term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * x);
                sum += term;
            }
            sum / (2.0 * PI * x).sqrt()
        };
        (series(0.0), series(1.0))
    }
}

/// Mean of `|alpha|` for a unit-power Rician variable with factor `k`.
fn rician_unit_mean(k: f64) -> f64 {
    let (i0, i1) = bessel_i01_scaled(0.5 * k);
    // L_{1/2}(-k) * e^{-k/2} folded into the scaled Bessel terms.
    let laguerre = (1.0 + k) * i0 + k * i1;
    (PI / (4.0 * (k + 1.0))).sqrt() * laguerre
}

/// Line-of-sight amplitude and scatter RMS giving mean magnitude `mean`.
fn rician_parts(mean: f64, k: f64) -> (f64, f64) {
    if k >= DETERMINISTIC_K {
        return (mean, 0.0);
    }
    let scale = mean / rician_unit_mean(k);
    (
        scale * (k / (k + 1.0)).sqrt(),
        scale * (1.0 / (k + 1.0)).sqrt(),
    )
}

fn complex_normal(rng: &mut ChaCha8Rng, std_per_component: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re * std_per_component, im * std_per_component)
}

/// Draws `m` independent gain vectors; row `j` is `alpha^(j)`.
///
/// The direct path is Rician with factor `rician_k_direct`, the others are
/// Rayleigh. Magnitude means equal `mean_gains`.
pub fn draw_fading(channel: &MultipathChannel, m: usize, seed: u64) -> CMatrix {
    let l = channel.path_count();
    let (los, scatter) = rician_parts(channel.mean_gains[0], channel.rician_k_direct);
    let mut out = CMatrix::zeros(m, l);
    for j in 0..m {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ tag::FADING, j as u64));
        for p in 0..l {
            out[(j, p)] = if p == 0 {
                Complex64::new(los, 0.0) + complex_normal(&mut rng, scatter / 2f64.sqrt())
            } else {
                // Rayleigh with E|alpha| = g has per-component sigma g*sqrt(2/pi).
                complex_normal(&mut rng, channel.mean_gains[p] * (2.0 / PI).sqrt())
            };
        }
    }
    out
}

fn check_delays(channel: &MultipathChannel, grid: &SignalGrid) -> Result<()> {
    let limit = grid.duration_s();
    if let Some(d) = channel.delays_s.iter().find(|d| d.abs() >= limit) {
        return Err(Error::OutOfRange(format!(
            "path delay {d} s outside the {limit} s record"
        )));
    }
    Ok(())
}

/// Delayed copies of `s`, one column per path.
pub fn path_matrix(s: &ComplexSignal, channel: &MultipathChannel) -> Result<CMatrix> {
    check_delays(channel, &s.grid())?;
    let ts = s.grid().sample_interval_s;
    let n = s.len();
    let mut g = CMatrix::zeros(n, channel.path_count());
    for (p, &tau) in channel.delays_s.iter().enumerate() {
        let shifted = shift_samples(s.samples(), tau / ts);
        g.column_mut(p).copy_from_slice(&shifted);
    }
    Ok(g)
}

/// Noiseless multipath output `sum_l gains[l] * s(t - tau_l)`.
pub fn apply_channel(
    s: &ComplexSignal,
    channel: &MultipathChannel,
    gains: &[Complex64],
) -> Result<ComplexSignal> {
    if gains.len() != channel.path_count() {
        return Err(Error::Dimension(format!(
            "{} gains for {} paths",
            gains.len(),
            channel.path_count()
        )));
    }
    let g = path_matrix(s, channel)?;
    let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
    for (p, gain) in gains.iter().enumerate() {
        for (y, x) in out.iter_mut().zip(g.column(p).iter()) {
            *y += gain * x;
        }
    }
    Ok(ComplexSignal::from_parts(out, s.grid()))
}

/// Circular complex white Gaussian noise of the given total variance per sample.
pub fn noise_realization(len: usize, variance: f64, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (variance / 2.0).sqrt();
    (0..len).map(|_| complex_normal(&mut rng, sd)).collect()
}

/// Noise variance that puts `signal_power` at `snr_db`; zero for infinite SNR.
pub fn noise_variance(signal_power: f64, snr_db: f64) -> f64 {
    if snr_db == f64::INFINITY {
        0.0
    } else {
        signal_power / 10f64.powf(snr_db / 10.0)
    }
}

/// Adds white Gaussian noise so that mean signal power over noise variance is
/// `10^(snr_db/10)`. The result is exactly `x + noise_realization(..)`.
pub fn add_awgn(x: &ComplexSignal, snr_db: f64, seed: u64) -> Result<ComplexSignal> {
    let power = x.mean_power();
    if power == 0.0 {
        return Err(Error::Degenerate(
            "cannot set SNR of a zero-power signal".into(),
        ));
    }
    let variance = noise_variance(power, snr_db);
    if variance == 0.0 {
        return Ok(x.clone());
    }
    let noise = noise_realization(x.len(), variance, seed);
    let samples = x.samples().iter().zip(&noise).map(|(a, b)| a + b).collect();
    Ok(ComplexSignal::from_parts(samples, x.grid()))
}

/// Multiple observations of one receiver sharing a channel, with independent
/// fading and noise per observation.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    /// `N x m`; column `j` holds observation `y^(j)`.
    snapshots: CMatrix,
    /// `m x L` fading gains used for each observation.
    gains: CMatrix,
    grid: SignalGrid,
    snr_db: f64,
    channel: MultipathChannel,
    seed: u64,
}

impl SnapshotSet {
    /// Wraps externally supplied observations (one per column).
    pub fn from_observations(
        snapshots: CMatrix,
        grid: SignalGrid,
        channel: MultipathChannel,
    ) -> Result<Self> {
        if snapshots.nrows() != grid.length || snapshots.ncols() == 0 {
            return Err(Error::Dimension(format!(
                "snapshot matrix {}x{} does not match record length {}",
                snapshots.nrows(),
                snapshots.ncols(),
                grid.length
            )));
        }
        let l = channel.path_count();
        let m = snapshots.ncols();
        Ok(Self {
            snapshots,
            gains: CMatrix::zeros(m, l),
            grid,
            snr_db: f64::NAN,
            channel,
            seed: 0,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.snapshots
    }

    pub fn count(&self) -> usize {
        self.snapshots.ncols()
    }

    pub fn snapshot(&self, j: usize) -> Vec<Complex64> {
        self.snapshots.column(j).iter().copied().collect()
    }

    pub fn gains(&self) -> &CMatrix {
        &self.gains
    }

    pub fn grid(&self) -> SignalGrid {
        self.grid
    }

    pub fn snr_db(&self) -> f64 {
        self.snr_db
    }

    pub fn channel(&self) -> &MultipathChannel {
        &self.channel
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// Synthesizes `m` observations `y^(j) = G alpha^(j) + w^(j)`.
///
/// Noise is scaled against the expected received power averaged over the
/// fading distribution, so every observation shares one noise variance.
/// `snr_db = f64::INFINITY` gives noiseless observations.
pub fn generate_snapshots(
    s: &ComplexSignal,
    channel: &MultipathChannel,
    m: usize,
    snr_db: f64,
    seed: u64,
) -> Result<SnapshotSet> {
    if m == 0 {
        return Err(Error::config("snapshots_m", "must be at least 1"));
    }
    channel.validate()?;
    let g = path_matrix(s, channel)?;
    let gains = draw_fading(channel, m, seed);
    let n = s.len();
    let column_energy: Vec<f64> = (0..g.ncols()).map(|p| g.column(p).norm_squared()).collect();
    let expected_power = channel
        .mean_square_gains()
        .iter()
        .zip(&column_energy)
        .map(|(a, e)| a * e)
        .sum::<f64>()
        / n as f64;
    if expected_power == 0.0 {
        return Err(Error::Degenerate("received signal has zero power".into()));
    }
    let variance = noise_variance(expected_power, snr_db);
    let mut y = &g * gains.transpose();
    if variance > 0.0 {
        for j in 0..m {
            let noise = noise_realization(n, variance, mix(seed ^ tag::NOISE, j as u64));
            for (v, w) in y.column_mut(j).iter_mut().zip(noise) {
                *v += w;
            }
        }
    }
    Ok(SnapshotSet {
        snapshots: y,
        gains,
        grid: s.grid(),
        snr_db,
        channel: channel.clone(),
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{orthonormal_basis, singular_values};
    use crate::signals::{generate_lfm, WaveformSpec};

    fn lfm(n: usize) -> ComplexSignal {
        let grid = SignalGrid::from_rate(1e6, n).unwrap();
        let spec = WaveformSpec::lfm(50e3, 450e3).with_pulse(n as f64 * 0.5e-6, n as f64 * 1e-6);
        generate_lfm(&spec, &grid).unwrap()
    }

    fn channel(delays: &[f64], k: f64) -> MultipathChannel {
        let ts = 1e-6;
        MultipathChannel::with_direct_dominance(0, delays.iter().map(|d| d * ts).collect(), 2.0, k)
            .unwrap()
    }

    #[test]
    fn validation_rules() {
        assert!(MultipathChannel::new(0, vec![], vec![], 0.0).is_err());
        assert!(MultipathChannel::new(0, vec![2e-6, 1e-6], vec![1.0, 0.5], 0.0).is_err());
        assert!(MultipathChannel::new(0, vec![1e-6, 2e-6], vec![1.0, 1.0], 0.0).is_err());
        assert!(MultipathChannel::new(0, vec![1e-6, 2e-6], vec![1.0], 0.0).is_err());
        assert!(MultipathChannel::new(0, vec![1e-6, 2e-6], vec![1.0, 0.5], 3.0).is_ok());
    }

    #[test]
    fn rician_mean_formula_limits() {
        // K = 0 is Rayleigh: mean sqrt(pi)/2 for unit power.
        assert!((rician_unit_mean(0.0) - PI.sqrt() / 2.0).abs() < 1e-14);
        // Large K approaches a constant unit magnitude.
        assert!((rician_unit_mean(5e5) - 1.0).abs() < 1e-5);
        // Series and asymptotic branches agree at the switch point.
        let below = rician_unit_mean(59.999_999);
        let above = rician_unit_mean(60.000_001);
        assert!((below - above).abs() < 1e-9);
    }

    #[test]
    fn deterministic_direct_path() {
        let ch = channel(&[0.0, 5.0], 1e6);
        let a = draw_fading(&ch, 50, 3);
        for j in 1..50 {
            assert_eq!(a[(j, 0)], a[(0, 0)]);
        }
        assert_eq!(a[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn fading_reproducible() {
        let ch = channel(&[0.0, 5.0, 9.0], 4.0);
        assert_eq!(draw_fading(&ch, 20, 9), draw_fading(&ch, 20, 9));
        assert_ne!(draw_fading(&ch, 20, 9), draw_fading(&ch, 20, 10));
    }

    #[test]
    fn fading_mean_magnitudes() {
        let ch = channel(&[0.0, 5.0, 9.0], 6.0);
        let m = 100_000;
        let a = draw_fading(&ch, m, 1);
        for p in 0..3 {
            let mean = (0..m).map(|j| a[(j, p)].norm()).sum::<f64>() / m as f64;
            let target = ch.mean_gains[p];
            assert!(
                (mean - target).abs() < 0.02 * target,
                "path {p}: {mean} vs {target}"
            );
        }
    }

    #[test]
    fn fading_rows_uncorrelated() {
        let ch = channel(&[0.0, 5.0, 9.0], 0.0);
        let m = 4000;
        let a = draw_fading(&ch, m, 12);
        let bound = 3.0 / (m as f64).sqrt();
        for p in 0..3 {
            let col: Vec<Complex64> = (0..m).map(|j| a[(j, p)]).collect();
            let power = col.iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            let lagged: Complex64 = col
                .windows(2)
                .map(|w| w[1] * w[0].conj())
                .sum::<Complex64>()
                / (m - 1) as f64;
            assert!(lagged.norm() / power < bound, "path {p}");
        }
    }

    #[test]
    fn single_path_identity_and_integer_shift() {
        let s = lfm(128);
        let ch = channel(&[0.0], 0.0);
        let y = apply_channel(&s, &ch, &[Complex64::new(1.0, 0.0)]).unwrap();
        assert_eq!(y.samples(), s.samples());

        let ch = channel(&[40.0], 0.0);
        let y = apply_channel(&s, &ch, &[Complex64::new(2.0, 0.0)]).unwrap();
        for k in 0..128 {
            let expect = if k >= 40 {
                s.samples()[k - 40] * 2.0
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert_eq!(y.samples()[k], expect);
        }
    }

    #[test]
    fn two_paths_superpose() {
        let s = lfm(128);
        let ch = channel(&[0.0, 10.0], 0.0);
        let gains = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5)];
        let y = apply_channel(&s, &ch, &gains).unwrap();
        let a = shift_samples(s.samples(), 0.0);
        let b = shift_samples(s.samples(), 10.0);
        for k in 0..128 {
            let expect = a[k] * gains[0] + b[k] * gains[1];
            assert!((y.samples()[k] - expect).norm() <= 1e-12);
        }
    }

    #[test]
    fn apply_channel_errors() {
        let s = lfm(64);
        let ch = channel(&[0.0, 10.0], 0.0);
        assert!(apply_channel(&s, &ch, &[Complex64::new(1.0, 0.0)]).is_err());
        let far = channel(&[0.0, 70.0], 0.0);
        assert!(apply_channel(&s, &far, &[Complex64::new(1.0, 0.0); 2]).is_err());
    }

    #[test]
    fn huge_snr_leaves_signal() {
        let s = lfm(256);
        let y = add_awgn(&s, 300.0, 5).unwrap();
        for (a, b) in s.samples().iter().zip(y.samples()) {
            assert!((a - b).norm() <= 1e-9 * a.norm().max(1.0));
        }
    }

    #[test]
    fn measured_snr_matches_target() {
        let grid = SignalGrid::from_rate(1e6, 1_000_000).unwrap();
        let s = ComplexSignal::from_parts(vec![Complex64::new(0.6, -0.8); grid.length], grid);
        let y = add_awgn(&s, 7.0, 99).unwrap();
        let noise_power = y
            .samples()
            .iter()
            .zip(s.samples())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / grid.length as f64;
        let measured = 10.0 * (s.mean_power() / noise_power).log10();
        assert!((measured - 7.0).abs() < 0.1, "{measured}");
    }

    #[test]
    fn awgn_is_reproducible_and_additive() {
        let s = lfm(200);
        let a = add_awgn(&s, 3.0, 17).unwrap();
        let b = add_awgn(&s, 3.0, 17).unwrap();
        assert_eq!(a, b);
        let noise = noise_realization(200, noise_variance(s.mean_power(), 3.0), 17);
        for k in 0..200 {
            assert_eq!(a.samples()[k], s.samples()[k] + noise[k]);
        }
        let zero = ComplexSignal::from_parts(
            vec![Complex64::new(0.0, 0.0); 8],
            SignalGrid::new(1.0, 8).unwrap(),
        );
        assert!(add_awgn(&zero, 0.0, 1).is_err());
    }

    #[test]
    fn single_noiseless_snapshot_is_a_delayed_copy() {
        let s = lfm(128);
        let ch = MultipathChannel::new(0, vec![7e-6], vec![1.0], DETERMINISTIC_K).unwrap();
        let set = generate_snapshots(&s, &ch, 1, f64::INFINITY, 4).unwrap();
        let y = set.snapshot(0);
        for k in 0..128 {
            let expect = if k >= 7 {
                s.samples()[k - 7]
            } else {
                Complex64::new(0.0, 0.0)
            };
            assert!((y[k] - expect).norm() < 1e-15);
        }
    }

    #[test]
    fn snapshot_shape() {
        let s = lfm(512);
        let ch = channel(&[40.0, 75.0, 200.0], 10.0);
        let set = generate_snapshots(&s, &ch, 512, 0.0, 1).unwrap();
        assert_eq!(set.matrix().shape(), (512, 512));
        assert_eq!(set.count(), 512);
        assert_eq!(set.gains().shape(), (512, 3));
    }

    #[test]
    fn noiseless_rows_lie_in_path_span() {
        let s = lfm(256);
        let ch = channel(&[10.0, 35.0, 80.0], 2.0);
        let set = generate_snapshots(&s, &ch, 40, f64::INFINITY, 8).unwrap();
        let basis = orthonormal_basis(&path_matrix(&s, &ch).unwrap(), 1e-12).unwrap();
        let y = set.matrix();
        let residual = y - &basis * (basis.adjoint() * y);
        assert!(residual.norm() <= 1e-9 * y.norm());
        let sv = singular_values(y);
        assert!(sv[3] <= 1e-9 * sv[0]);
    }

    #[test]
    fn rejects_zero_snapshots() {
        let s = lfm(64);
        let ch = channel(&[0.0], 0.0);
        assert!(generate_snapshots(&s, &ch, 0, 0.0, 1).is_err());
    }
}
