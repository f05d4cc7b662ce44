//! Computable guarantee machinery: column coherence, the full-rank lemma and
//! the volume bounds for both estimators.
//!
//! Failed conditions are reported through [`BoundReport::condition_holds`];
//! only violated parameter ranges and malformed inputs are errors.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::signals::AutocorrelationProfile;
use crate::subspace::HankelConfig;

/// Where the Hankel column norms entering `C`, `B` and `B*` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnNormSource {
    /// Measured on constructed Hankel components.
    Measured,
    /// `sqrt(M * power)` for every column.
    EqualPower,
}

/// Quantities of one bound evaluation. Fields that do not apply to the
/// evaluated statement are `None`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub mu: f64,
    pub condition_holds: bool,
    pub epsilon: Option<f64>,
    pub volume_lower_bound: Option<f64>,
    pub volume_upper_bound: Option<f64>,
    pub c_const: Option<f64>,
    pub d_const: Option<f64>,
    pub gamma: Option<f64>,
    pub a_const: Option<f64>,
    pub b_const: Option<f64>,
    pub b_star_const: Option<f64>,
    pub l_min: usize,
    pub k_min: Option<usize>,
    pub delta_tau_min_s: f64,
    /// Largest normalized autocorrelation over the checked lags.
    pub acf_max: f64,
    /// First lag (in samples) included in the autocorrelation check.
    pub checked_from_lag: usize,
    pub column_norm_source: Option<ColumnNormSource>,
}

impl BoundReport {
    fn base(
        mu: f64,
        l_min: usize,
        delta_tau_min_s: f64,
        acf_max: f64,
        checked_from_lag: usize,
    ) -> Self {
        Self {
            mu,
            condition_holds: false,
            epsilon: None,
            volume_lower_bound: None,
            volume_upper_bound: None,
            c_const: None,
            d_const: None,
            gamma: None,
            a_const: None,
            b_const: None,
            b_star_const: None,
            l_min,
            k_min: None,
            delta_tau_min_s,
            acf_max,
            checked_from_lag,
            column_norm_source: None,
        }
    }
}

/// Largest normalized inner product between distinct columns.
pub fn coherence(x: &CMatrix) -> Result<f64> {
    let p = x.ncols();
    if p < 2 {
        return Err(Error::Dimension(format!(
            "coherence needs at least 2 columns, got {p}"
        )));
    }
    let norms: Vec<f64> = (0..p).map(|j| x.column(j).norm()).collect();
    if let Some(j) = norms.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(format!("column {j} is zero")));
    }
    let gram = x.adjoint() * x;
    let mut mu: f64 = 0.0;
    for a in 0..p {
        for b in a + 1..p {
            mu = mu.max(gram[(a, b)].norm() / (norms[a] * norms[b]));
        }
    }
    Ok(mu.min(1.0))
}

/// Smallest pairwise separation within one receiver, in samples; infinite
/// for a single path.
fn within_separation(delays: &[f64]) -> f64 {
    let mut best = f64::INFINITY;
    for (i, a) in delays.iter().enumerate() {
        for b in &delays[i + 1..] {
            best = best.min((a - b).abs());
        }
    }
    best
}

/// `min_j |d + j|` over integers `|j| <= reach`.
fn offset_distance(d: f64, reach: usize) -> f64 {
    let reach = reach as f64;
    if d.abs() <= reach {
        (d - d.round()).abs()
    } else {
        d.abs() - reach
    }
}

fn to_samples(delays_s: &[f64], ts: f64) -> Vec<f64> {
    delays_s.iter().map(|d| d / ts).collect()
}

fn validate_delays(delays1_s: &[f64], delays2_s: &[f64], ts: f64) -> Result<()> {
    if !(ts > 0.0) || !ts.is_finite() {
        return Err(Error::OutOfRange(format!(
            "sample interval {ts} must be positive"
        )));
    }
    if delays1_s.is_empty() || delays2_s.is_empty() {
        return Err(Error::Dimension(
            "each receiver needs at least one path".into(),
        ));
    }
    if delays1_s.iter().chain(delays2_s).any(|d| !d.is_finite()) {
        return Err(Error::OutOfRange("path delays must be finite".into()));
    }
    Ok(())
}

/// Largest lag, in samples, between any two columns of the delayed-waveform
/// matrices at the candidate lag.
fn largest_lag(d1: &[f64], d2: &[f64], cand: f64) -> f64 {
    let spread = |d: &[f64]| {
        let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let cross = d1
        .iter()
        .flat_map(|a| d2.iter().map(move |b| (a + cand - b).abs()))
        .fold(0.0, f64::max);
    spread(d1).max(spread(d2)).max(cross)
}

fn require_span(acf: &AutocorrelationProfile, needed: f64) -> Result<()> {
    let needed = needed.ceil() as usize;
    if acf.max_lag() < needed {
        return Err(Error::OutOfRange(format!(
            "autocorrelation covers {} lags, {needed} needed",
            acf.max_lag()
        )));
    }
    Ok(())
}

/// First integer lag of `|tau| > bound` (strict) or `|tau| >= bound`,
/// rounded outward for fractional bounds.
fn first_lag(bound: f64, strict: bool) -> usize {
    if !bound.is_finite() {
        return usize::MAX;
    }
    let fl = bound.floor();
    if strict && fl == bound {
        fl as usize + 1
    } else {
        fl as usize
    }
}

fn acf_beyond(acf: &AutocorrelationProfile, from: usize) -> f64 {
    if from > acf.max_lag() {
        0.0
    } else {
        acf.max_normalized_beyond(from)
    }
}

/// Full-rank condition for the delayed-waveform matrices: the normalized
/// autocorrelation must stay below `1 / (L1 + L2 - 1)` beyond the smallest
/// within-receiver path separation.
pub fn check_lemma1(
    acf: &AutocorrelationProfile,
    ts: f64,
    delays1_s: &[f64],
    delays2_s: &[f64],
) -> Result<BoundReport> {
    validate_delays(delays1_s, delays2_s, ts)?;
    let (d1, d2) = (to_samples(delays1_s, ts), to_samples(delays2_s, ts));
    require_span(
        acf,
        largest_lag(&d1, &d1, 0.0).max(largest_lag(&d2, &d2, 0.0)),
    )?;
    let star = within_separation(&d1).min(within_separation(&d2));
    let from = first_lag(star, true);
    let acf_max = acf_beyond(acf, from);
    let threshold = 1.0 / (d1.len() + d2.len() - 1) as f64;
    let mut report = BoundReport::base(
        acf_max,
        d1.len().min(d2.len()),
        star * ts,
        acf_max,
        from.min(acf.max_lag() + 1),
    );
    report.condition_holds = threshold >= 1.0 || acf_max < threshold;
    Ok(report)
}

/// Theorem-1 quantities from the coherence parameter alone.
pub fn theorem1_epsilon(l1: usize, l2: usize, mu: f64) -> f64 {
    let (l1f, l2f) = (l1 as f64, l2 as f64);
    l1f * l2f * mu * mu / ((1.0 - (l1f - 1.0) * mu) * (1.0 - (l2f - 1.0) * mu))
}

/// Off-TDOA volume lower bound `(1 - eps)^{L/2}` for the snapshot estimator.
///
/// `condition_holds` requires the normalized autocorrelation to stay at or
/// below `mu` for `|tau| >= dtau_min` and the full-rank lemma to hold.
pub fn check_theorem1(
    acf: &AutocorrelationProfile,
    ts: f64,
    delays1_s: &[f64],
    delays2_s: &[f64],
    candidate_lag_s: f64,
    mu: f64,
) -> Result<BoundReport> {
    validate_delays(delays1_s, delays2_s, ts)?;
    let (l1, l2) = (delays1_s.len(), delays2_s.len());
    let limit = 1.0 / (l1 + l2 - 1) as f64;
    if !(mu >= 0.0 && mu < limit) {
        return Err(Error::Precondition(format!(
            "mu = {mu} must lie in [0, {limit})"
        )));
    }
    let (d1, d2) = (to_samples(delays1_s, ts), to_samples(delays2_s, ts));
    let cand = candidate_lag_s / ts;
    let dmin = d1
        .iter()
        .flat_map(|a| d2.iter().map(move |b| (cand - b + a).abs()))
        .fold(f64::INFINITY, f64::min);
    if dmin < 1e-9 {
        return Err(Error::Precondition(format!(
            "candidate lag {candidate_lag_s} s is a true TDOA"
        )));
    }
    require_span(acf, largest_lag(&d1, &d2, cand))?;
    let lemma = check_lemma1(acf, ts, delays1_s, delays2_s)?;
    let from = first_lag(dmin, false);
    let acf_max = acf_beyond(acf, from);
    let epsilon = theorem1_epsilon(l1, l2, mu);
    let l_min = l1.min(l2);
    let mut report = BoundReport::base(mu, l_min, dmin * ts, acf_max, from);
    report.condition_holds = lemma.condition_holds && acf_max <= mu;
    report.epsilon = Some(epsilon);
    report.volume_lower_bound = Some((1.0 - epsilon).clamp(0.0, 1.0).powf(l_min as f64 / 2.0));
    Ok(report)
}

/// Inputs of the Hankel-estimator bounds.
#[derive(Debug, Clone)]
pub struct HankelBoundInputs<'a> {
    pub acf: &'a AutocorrelationProfile,
    pub sample_interval_s: f64,
    pub delays1_s: &'a [f64],
    pub delays2_s: &'a [f64],
    pub gains1: &'a [Complex64],
    pub gains2: &'a [Complex64],
    pub hankel: HankelConfig,
    pub record_len: usize,
    pub k1: usize,
    pub k2: usize,
    /// `sigma_{1,K1}` of the delayed receiver-1 Hankel matrix.
    pub sigma1: f64,
    /// `sigma_{2,K2}` of the receiver-2 Hankel matrix.
    pub sigma2: f64,
    /// Measured column norms `s_{1,l}` and `s_{2,l}`, if available.
    pub column_norms: Option<(&'a [f64], &'a [f64])>,
    /// Per-sample signal power used when no column norms are given.
    pub signal_power: f64,
}

/// Theorem-3 lower bound for off-TDOA candidates, and for true-TDOA
/// candidates additionally the Theorem-4 constants and upper bound.
pub fn check_theorem34(
    inputs: &HankelBoundInputs,
    candidate_lag_s: f64,
    is_true_tdoa: bool,
    mu: f64,
) -> Result<BoundReport> {
    let ts = inputs.sample_interval_s;
    validate_delays(inputs.delays1_s, inputs.delays2_s, ts)?;
    inputs.hankel.validate(inputs.record_len)?;
    let (l1, l2) = (inputs.delays1_s.len(), inputs.delays2_s.len());
    if inputs.gains1.len() != l1 || inputs.gains2.len() != l2 {
        return Err(Error::Dimension("one gain per path required".into()));
    }
    let m = inputs.hankel.window_m;
    let k = inputs.hankel.columns(inputs.record_len);
    if !(inputs.sigma1 > 0.0 && inputs.sigma2 > 0.0) {
        return Err(Error::Degenerate(
            "singular values sigma_{i,K_i} must be positive".into(),
        ));
    }
    let (s1, s2, source) = match inputs.column_norms {
        Some((a, b)) => {
            if a.len() != l1 || b.len() != l2 {
                return Err(Error::Dimension("one column norm per path required".into()));
            }
            (a.to_vec(), b.to_vec(), ColumnNormSource::Measured)
        }
        None => {
            let norm = (m as f64 * inputs.signal_power).sqrt();
            (vec![norm; l1], vec![norm; l2], ColumnNormSource::EqualPower)
        }
    };
    let (d1, d2) = (
        to_samples(inputs.delays1_s, ts),
        to_samples(inputs.delays2_s, ts),
    );
    let cand = candidate_lag_s / ts;
    let reach = k - 1;
    let pairwise = |d: &[f64]| {
        let mut best = f64::INFINITY;
        for (i, a) in d.iter().enumerate() {
            for (j, b) in d.iter().enumerate() {
                if i != j {
                    best = best.min(offset_distance(a - b, reach));
                }
            }
        }
        best
    };
    let dt1 = pairwise(&d1);
    let dt2 = pairwise(&d2);
    let dt12 = d1
        .iter()
        .flat_map(|a| d2.iter().map(move |b| offset_distance(a + cand - b, reach)))
        .fold(f64::INFINITY, f64::min);
    let dmin = if is_true_tdoa {
        dt1.min(dt2)
    } else {
        dt1.min(dt2).min(dt12)
    };
    require_span(inputs.acf, largest_lag(&d1, &d2, cand) + reach as f64)?;

    let sigma = inputs.sigma1 * inputs.sigma2;
    let weighted =
        |g: &[Complex64], s: &[f64]| g.iter().zip(s).map(|(a, n)| a.norm() * n).sum::<f64>();
    let b = weighted(inputs.gains1, &s1) * weighted(inputs.gains2, &s2);
    let c = k as f64 * b / sigma;
    let k_min = inputs.k1.min(inputs.k2);
    let l_min = l1.min(l2);
    let from = first_lag(dmin, false);
    let acf_max = acf_beyond(inputs.acf, from);
    let mut report = BoundReport::base(
        mu,
        l_min,
        dmin * ts,
        acf_max,
        from.min(inputs.acf.max_lag() + 1),
    );
    report.k_min = Some(k_min);
    report.column_norm_source = Some(source);
    report.c_const = Some(c);
    let epsilon = c * mu;
    report.epsilon = Some(epsilon);
    report.volume_lower_bound = Some(
        (1.0 - epsilon * epsilon)
            .clamp(0.0, 1.0)
            .powf(k_min as f64 / 2.0),
    );

    if !is_true_tdoa {
        if !(mu > 0.0 && mu < 1.0 / c) {
            return Err(Error::Precondition(format!(
                "mu = {mu} must lie in (0, {})",
                1.0 / c
            )));
        }
        report.condition_holds = acf_max <= mu;
        return Ok(report);
    }

    let (i1, i2) = d1
        .iter()
        .enumerate()
        .flat_map(|(i, a)| {
            d2.iter()
                .enumerate()
                .map(move |(j, b)| ((i, j), (b - a - cand).abs()))
        })
        .filter(|(_, gap)| *gap < 1e-9)
        .map(|(ij, _)| ij)
        .next()
        .ok_or_else(|| {
            Error::Precondition(format!(
                "candidate lag {candidate_lag_s} s is not a true TDOA"
            ))
        })?;
    let energy = |g: &[Complex64]| g.iter().map(|a| a.norm_sqr()).sum::<f64>();
    let a = inputs.gains1[i1].norm() * inputs.gains2[i2].norm()
        / (energy(inputs.gains1) * energy(inputs.gains2)).sqrt();
    let without = |g: &[Complex64], s: &[f64], skip: usize| {
        g.iter()
            .zip(s)
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, (x, n))| x.norm() * n)
            .sum::<f64>()
    };
    let b_star = without(inputs.gains1, &s1, i1) * without(inputs.gains2, &s2, i2);
    let lm1 = (l_min - 1) as f64;
    let d = (sigma * a * lm1 / ((b + b_star) * k as f64) + 0.25).sqrt() - 0.5;
    let gamma = a / (1.0 + lm1 * mu) - b_star * k as f64 / sigma * mu;
    report.a_const = Some(a);
    report.b_const = Some(b);
    report.b_star_const = Some(b_star);
    report.d_const = Some(d);
    report.gamma = Some(gamma);
    let g = gamma.clamp(0.0, 1.0);
    report.volume_upper_bound = Some((1.0 - g * g).powf(k_min as f64 / 2.0));
    let in_range = if l_min > 1 {
        mu > 0.0 && mu < d / lm1
    } else {
        mu > 0.0 && mu <= 1.0
    };
    if !in_range {
        return Err(Error::Precondition(format!(
            "mu = {mu} outside the admissible range for D = {d}"
        )));
    }
    report.condition_holds = acf_max <= mu;
    Ok(report)
}
