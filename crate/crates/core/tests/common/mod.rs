#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use vcc_tdoa::bounds::{check_theorem1, check_theorem34, coherence, HankelBoundInputs};
use vcc_tdoa::channel::{apply_channel, generate_snapshots, MultipathChannel};
use vcc_tdoa::linalg::{singular_values, CMatrix};
use vcc_tdoa::signals::{
    autocorrelation, fractional_delay, generate_lfm, ComplexSignal, SignalGrid, WaveformSpec,
};
use vcc_tdoa::subspace::{build_hankel, hankel_signal_subspace, HankelConfig};
use vcc_tdoa::tdoa::{vcc_profile_fast, vcc_profile_slow, DelayGrid};

pub const TS: f64 = 1e-6;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, d: usize) -> CMatrix {
    DMatrix::from_fn(n, d, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Orthonormal basis of the columns of a full-rank `x` via Householder QR.
pub fn qr_basis(x: &CMatrix) -> CMatrix {
    let q = x.clone().qr().q();
    q.columns(0, x.ncols()).into_owned()
}

pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMatrix {
    qr_basis(&random_matrix(rng, d, d))
}

/// `prod sin(theta)` with cosines taken as singular values of `U1^H U2`.
pub fn sine_product_oracle(u1: &CMatrix, u2: &CMatrix) -> f64 {
    singular_values(&(u1.adjoint() * u2))
        .iter()
        .map(|c| (1.0 - c.min(1.0) * c.min(1.0)).max(0.0).sqrt())
        .product()
}

/// `sqrt(det(X^H X))`.
pub fn gram_volume(x: &CMatrix) -> f64 {
    (x.adjoint() * x).determinant().re.max(0.0).sqrt()
}

pub fn channel(id: usize, delays_samples: &[f64], ratio: f64) -> MultipathChannel {
    let delays = delays_samples.iter().map(|d| d * TS).collect();
    MultipathChannel::with_direct_dominance(id, delays, ratio, 10.0).unwrap()
}

pub fn lfm(n: usize, f0: f64, f1: f64, pulse_samples: usize) -> ComplexSignal {
    let grid = SignalGrid::new(TS, n).unwrap();
    let spec = WaveformSpec::lfm(f0, f1).with_pulse(pulse_samples as f64 * TS, n as f64 * TS);
    generate_lfm(&spec, &grid).unwrap()
}

/// Random unit-norm columns with coherence below `1 / (d - 1)`; returns the
/// matrix and its coherence.
pub fn coherence_constrained(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (CMatrix, f64) {
    loop {
        let mut x = random_matrix(rng, n, d);
        for mut c in x.column_iter_mut() {
            let norm = c.norm();
            c /= Complex64::new(norm, 0.0);
        }
        let mu = coherence(&x).unwrap();
        if mu < 1.0 / (d as f64 - 1.0) {
            return (x, mu);
        }
    }
}

pub struct Containment {
    pub condition_holds: bool,
    pub bound: f64,
    pub measured: f64,
}

/// Noiseless two-path snapshot scenario `i`, evaluated at an off-TDOA lag a
/// few samples from a true one.
pub fn theorem1_scenario(i: usize) -> Containment {
    let s = lfm(512, -400e3, 400e3, 128);
    let acf = autocorrelation(&s, 511).unwrap();
    let c1 = channel(0, &[20.0, 50.0 + i as f64], 2.0);
    let c2 = channel(1, &[35.0, 90.0 + 2.0 * i as f64], 2.0);
    let y1 = generate_snapshots(&s, &c1, 64, f64::INFINITY, 1 + i as u64).unwrap();
    let y2 = generate_snapshots(&s, &c2, 64, f64::INFINITY, 100 + i as u64).unwrap();
    // 15 Ts is the direct-to-direct TDOA; step away from it by 4..=13 samples.
    let cand = 15.0 + 4.0 + (i % 10) as f64;
    let report = check_theorem1(&acf, TS, &c1.delays_s, &c2.delays_s, cand * TS, 0.3).unwrap();
    let grid = DelayGrid::new(TS, 1, cand as i64, cand as i64).unwrap();
    let p = vcc_profile_slow(&y1, &y2, 2, 2, &grid).unwrap();
    Containment {
        condition_holds: report.condition_holds,
        bound: report.volume_lower_bound.unwrap(),
        measured: 1.0 / p.r_vol()[0],
    }
}

/// Noiseless snapshot volume at every true TDOA of an LFM multipath scenario.
pub fn true_tdoa_volumes(seed: u64) -> Vec<f64> {
    let s = lfm(512, 50e3, 500e3, 256);
    let d1 = [40.0, 75.0, 200.0];
    let d2 = [50.0, 100.0, 185.0, 250.0];
    let y1 = generate_snapshots(&s, &channel(0, &d1, 2.0), 48, f64::INFINITY, seed).unwrap();
    let y2 = generate_snapshots(&s, &channel(1, &d2, 2.0), 48, f64::INFINITY, seed + 1).unwrap();
    let mut out = Vec::new();
    for a in d1 {
        for b in d2 {
            let q = (b - a) as i64;
            let grid = DelayGrid::new(TS, 1, q, q).unwrap();
            out.push(1.0 / vcc_profile_slow(&y1, &y2, 3, 4, &grid).unwrap().r_vol()[0]);
        }
    }
    out
}

pub struct HankelOrdering {
    pub both_hold: bool,
    pub upper: f64,
    pub lower: f64,
    pub measured_true: f64,
    pub measured_off: f64,
}

/// Single-path Hankel scenario: the true-TDOA upper bound against the
/// off-TDOA lower bound at the same `mu`.
pub fn theorem34_scenario(i: usize) -> HankelOrdering {
    let n = 544;
    let m = 530;
    let s = lfm(n, -450e3, 450e3, n);
    let acf = autocorrelation(&s, n - 1).unwrap();
    let sep = 40.0 + i as f64;
    let c1 = MultipathChannel::new(0, vec![0.0], vec![1.0], 1e6).unwrap();
    let c2 = MultipathChannel::new(1, vec![sep * TS], vec![1.0], 1e6).unwrap();
    let one = [Complex64::new(1.0, 0.0)];
    let x1 = apply_channel(&s, &c1, &one).unwrap();
    let x2 = apply_channel(&s, &c2, &one).unwrap();
    let hankel = HankelConfig::new(m);
    let sigma = |x: &ComplexSignal| {
        hankel_signal_subspace(&build_hankel(x, hankel).unwrap(), 1)
            .unwrap()
            .smallest_retained()
    };
    let mu = 0.05;
    let report = |cand: f64, is_true: bool| {
        let x1d = fractional_delay(&x1, cand * TS, 1).unwrap();
        let inputs = HankelBoundInputs {
            acf: &acf,
            sample_interval_s: TS,
            delays1_s: &c1.delays_s,
            delays2_s: &c2.delays_s,
            gains1: &one,
            gains2: &one,
            hankel,
            record_len: n,
            k1: 1,
            k2: 1,
            sigma1: sigma(&x1d),
            sigma2: sigma(&x2),
            column_norms: None,
            signal_power: s.mean_power(),
        };
        check_theorem34(&inputs, cand * TS, is_true, mu).unwrap()
    };
    let off = sep - 30.0;
    let on_report = report(sep, true);
    let off_report = report(off, false);
    let measure = |cand: f64| {
        let grid = DelayGrid::new(TS, 1, cand as i64, cand as i64).unwrap();
        1.0 / vcc_profile_fast(&x1, &x2, hankel, 1, 1, &grid)
            .unwrap()
            .r_vol()[0]
    };
    HankelOrdering {
        both_hold: on_report.condition_holds && off_report.condition_holds,
        upper: on_report.volume_upper_bound.unwrap(),
        lower: off_report.volume_lower_bound.unwrap(),
        measured_true: measure(sep),
        measured_off: measure(off),
    }
}
