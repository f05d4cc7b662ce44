use num_complex::Complex64;
use rayon::prelude::*;

use super::{joint_volume, reciprocal_volume, DelayGrid, DelayProfile, RANK_DEFICIENCY_TOL};
use crate::error::{Error, Result};
use crate::linalg::{gram_schmidt, hermitian_eigen, left_svd, CMatrix};
use crate::signals::{shift_samples, ComplexSignal};
use crate::subspace::{hankel_from_slice, hankel_signal_subspace, HankelConfig};

/// Extra Ritz directions carried beyond `k1` in the per-lag refinement.
const GUARD_COLUMNS: usize = 4;

/// Reciprocal-volume profile from single records through Hankel subspaces.
///
/// `U2` holds the `k2` leading left singular vectors of the Hankel matrix of
/// `x2`; for every lag, `x1` is delayed and `U1` taken the same way with `k1`
/// columns.
///
/// The delayed record for lag `q` fine steps is an integer shift of one of
/// `F` fractionally delayed copies of `x1`, so the Gram matrix of each
/// delayed Hankel matrix is read off lagged prefix sums of that copy. Its
/// dominant eigenvectors seed one Rayleigh-Ritz step against the Hankel
/// matrix itself, which gives the leading left singular vectors.
pub fn vcc_profile_fast(
    x1: &ComplexSignal,
    x2: &ComplexSignal,
    cfg: HankelConfig,
    k1: usize,
    k2: usize,
    grid: &DelayGrid,
) -> Result<DelayProfile> {
    let n = x1.len();
    if x2.len() != n {
        return Err(Error::Dimension(format!(
            "record lengths {n} and {} differ",
            x2.len()
        )));
    }
    let ts = x1.grid().sample_interval_s;
    if (x2.grid().sample_interval_s - ts).abs() > 1e-12 * ts
        || (grid.sample_interval_s() - ts).abs() > 1e-9 * ts
    {
        return Err(Error::Dimension(
            "sample intervals of records and grid differ".into(),
        ));
    }
    cfg.validate(n)?;
    let m = cfg.window_m;
    let k = cfg.columns(n);
    if k1 == 0 || k2 == 0 || k1 > m.min(k) || k2 > m.min(k) || k1 + k2 > m {
        return Err(Error::OutOfRange(format!(
            "subspace dimensions {k1}, {k2} invalid for a {m}x{k} Hankel matrix"
        )));
    }
    grid.check_within(m, "the Hankel window M")?;
    let u2 = hankel_signal_subspace(&hankel_from_slice(x2.samples(), m), k2)?.into_basis();

    let f = grid.interpolation_factor();
    let copies: Vec<LaggedSums> = (0..f)
        .into_par_iter()
        .map(|r| {
            let mut padded = x1.samples().to_vec();
            padded.push(Complex64::new(0.0, 0.0));
            LaggedSums::new(shift_samples(&padded, r as f64 / f as f64), m.min(k))
        })
        .collect();
    let results: Vec<(f64, bool)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let q = grid.steps(i);
            let copy = &copies[q.rem_euclid(f as i64) as usize];
            let (basis, sigma) = copy.leading_left_vectors(q.div_euclid(f as i64), n, m, k1);
            if !(sigma[0] > 0.0) || sigma[k1 - 1] <= RANK_DEFICIENCY_TOL * sigma[0] {
                (reciprocal_volume(0.0), true)
            } else {
                (reciprocal_volume(joint_volume(&basis, &u2)), false)
            }
        })
        .collect();
    let degenerate = (0..results.len()).filter(|&i| results[i].1).collect();
    DelayProfile::from_values(
        grid.clone(),
        results.into_iter().map(|r| r.0).collect(),
        degenerate,
    )
}

/// A delayed copy `y` of a record (length `N + 1`, zero outside) with
/// prefix sums `P_d[t] = sum_{s < t} conj(y[s]) y[s + d]` for `d < D`.
struct LaggedSums {
    y: Vec<Complex64>,
    prefix: Vec<Vec<Complex64>>,
}

impl LaggedSums {
    fn new(y: Vec<Complex64>, size: usize) -> Self {
        let len = y.len();
        let prefix = (0..size)
            .map(|d| {
                let mut p = Vec::with_capacity(len + 1);
                let mut acc = Complex64::new(0.0, 0.0);
                p.push(acc);
                for s in 0..len {
                    if s + d < len {
                        acc += y[s].conj() * y[s + d];
                    }
                    p.push(acc);
                }
                p
            })
            .collect();
        Self { y, prefix }
    }

    /// Record of length `n` whose sample `t` is `y[t - shift]`.
    fn shifted(&self, shift: i64, n: usize) -> Vec<Complex64> {
        (0..n as i64)
            .map(|t| {
                let s = t - shift;
                if (0..self.y.len() as i64).contains(&s) {
                    self.y[s as usize]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect()
    }

    /// `sum_{c < window} conj(z[a + c]) z[b + c]` for all `a, b < size`,
    /// where `z` is the shifted record truncated to `n` samples.
    fn lagged_gram(&self, shift: i64, size: usize, window: usize) -> CMatrix {
        let end = self.y.len() as i64;
        let clamp = |t: i64| t.clamp(0, end) as usize;
        let mut g = CMatrix::zeros(size, size);
        for a in 0..size {
            for b in a..size {
                let p = &self.prefix[b - a];
                let lo = a as i64 - shift;
                let v = p[clamp(lo + window as i64)] - p[clamp(lo)];
                g[(a, b)] = v;
                g[(b, a)] = v.conj();
            }
        }
        g
    }

    /// `k1` leading left singular vectors and the singular values of the
    /// refined Ritz block for the Hankel matrix of the record shifted by
    /// `shift` samples.
    fn leading_left_vectors(
        &self,
        shift: i64,
        n: usize,
        m: usize,
        k1: usize,
    ) -> (CMatrix, Vec<f64>) {
        let k = n + 1 - m;
        let z = self.shifted(shift, n);
        let x = hankel_from_slice(&z, m);
        let p = (k1 + GUARD_COLUMNS).min(m.min(k));
        let mut q = if m <= k {
            // Columns of X X^H: conjugate of the lagged sums over K columns.
            let g = self.lagged_gram(shift, m, k).map(|v| v.conj());
            hermitian_eigen(&g).1.columns(0, p).into_owned()
        } else {
            let g = self.lagged_gram(shift, k, m);
            &x * hermitian_eigen(&g).1.columns(0, p)
        };
        gram_schmidt(&mut q);
        let (w, sigma) = left_svd(&(q.adjoint() * &x));
        ((&q * w.columns(0, k1)), sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel, MultipathChannel};
    use crate::linalg::vcc;
    use crate::signals::{generate_fm_surrogate, SignalGrid, WaveformSpec};
    use crate::subspace::build_hankel;
    use num_complex::Complex64;

    fn surrogate(n: usize, seed: u64) -> ComplexSignal {
        let grid = SignalGrid::from_rate(256e3, n).unwrap();
        generate_fm_surrogate(&WaveformSpec::fm_surrogate(20e3, seed), &grid).unwrap()
    }

    fn single_path(s: &ComplexSignal, delay_samples: f64) -> ComplexSignal {
        let ts = s.grid().sample_interval_s;
        let ch = MultipathChannel::new(0, vec![delay_samples * ts], vec![1.0], 1e6).unwrap();
        apply_channel(s, &ch, &[Complex64::new(1.0, 0.0)]).unwrap()
    }

    #[test]
    fn identical_records_peak_at_zero() {
        let s = surrogate(160, 1);
        let grid = DelayGrid::symmetric(s.grid().sample_interval_s, 1, 20).unwrap();
        let p = vcc_profile_fast(&s, &s, HankelConfig::new(128), 3, 3, &grid).unwrap();
        assert_eq!(grid.steps(p.argmax()), 0);
    }

    #[test]
    fn single_path_delay_found() {
        let s = surrogate(300, 2);
        let x1 = single_path(&s, 0.0);
        let x2 = single_path(&s, 25.0);
        let grid = DelayGrid::symmetric(s.grid().sample_interval_s, 1, 60).unwrap();
        let p = vcc_profile_fast(&x1, &x2, HankelConfig::new(268), 3, 3, &grid).unwrap();
        assert_eq!(grid.steps(p.argmax()), 25);
    }

    #[test]
    fn matches_direct_vcc() {
        let s = surrogate(120, 3);
        let x2 = single_path(&s, 7.0);
        let grid = DelayGrid::new(s.grid().sample_interval_s, 2, -6, 20).unwrap();
        // Tall and wide trajectory matrices take different Gram routes.
        for window in [100, 30] {
            let cfg = HankelConfig::new(window);
            let p = vcc_profile_fast(&s, &x2, cfg, 4, 4, &grid).unwrap();
            let u2 = hankel_signal_subspace(&build_hankel(&x2, cfg).unwrap(), 4)
                .unwrap()
                .into_basis();
            for i in 0..grid.len() {
                let d =
                    ComplexSignal::new(shift_samples(s.samples(), grid.steps(i) as f64 / 2.0), 1.0)
                        .unwrap();
                let u1 = hankel_signal_subspace(&build_hankel(&d, cfg).unwrap(), 4)
                    .unwrap()
                    .into_basis();
                let expect = 1.0 / vcc(&u1, &u2).unwrap().max(1e-12);
                if expect < 1e6 {
                    assert!(
                        (p.r_vol()[i] - expect).abs() <= 1e-6 * expect,
                        "window {window} lag {i}"
                    );
                } else {
                    assert!(p.r_vol()[i] >= 1e6, "window {window} lag {i}");
                }
            }
        }
    }

    #[test]
    fn rejects_bad_dimensions() {
        let s = surrogate(100, 4);
        let grid = DelayGrid::symmetric(s.grid().sample_interval_s, 1, 5).unwrap();
        assert!(vcc_profile_fast(&s, &s, HankelConfig::new(90), 12, 3, &grid).is_err());
        let wide = DelayGrid::symmetric(s.grid().sample_interval_s, 1, 95).unwrap();
        assert!(vcc_profile_fast(&s, &s, HankelConfig::new(90), 3, 3, &wide).is_err());
    }
}
