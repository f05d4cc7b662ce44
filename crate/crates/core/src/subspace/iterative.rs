//! Dominant eigenvectors of principal windows of a Hermitian matrix by block
//! subspace iteration with Rayleigh-Ritz extraction.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{gram_schmidt, hermitian_eigen, CMatrix};

/// Square matrix stored column-major with split real and imaginary parts.
#[derive(Debug, Clone)]
pub(crate) struct SplitMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl SplitMatrix {
    pub fn from_cmatrix(a: &CMatrix) -> Self {
        assert_eq!(a.nrows(), a.ncols());
        Self {
            n: a.nrows(),
            re: a.iter().map(|z| z.re).collect(),
            im: a.iter().map(|z| z.im).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Dense copy of `A[lo..lo+w, lo..lo+w]`.
    pub fn window(&self, lo: usize, w: usize) -> CMatrix {
        CMatrix::from_fn(w, w, |r, c| {
            let i = (lo + c) * self.n + lo + r;
            Complex64::new(self.re[i], self.im[i])
        })
    }

    /// `A[lo..lo+w, lo..lo+w] * v` for a `w x p` block `v`.
    pub fn window_product(&self, lo: usize, v: &CMatrix) -> CMatrix {
        let (w, p) = v.shape();
        assert!(lo + w <= self.n);
        let mut out_re = vec![0.0; w * p];
        let mut out_im = vec![0.0; w * p];
        for c in 0..w {
            let start = (lo + c) * self.n + lo;
            let ar = &self.re[start..start + w];
            let ai = &self.im[start..start + w];
            for k in 0..p {
                let x = v[(c, k)];
                if x.re == 0.0 && x.im == 0.0 {
                    continue;
                }
                let or = &mut out_re[k * w..(k + 1) * w];
                let oi = &mut out_im[k * w..(k + 1) * w];
                for r in 0..w {
                    or[r] += ar[r] * x.re - ai[r] * x.im;
                    oi[r] += ar[r] * x.im + ai[r] * x.re;
                }
            }
        }
        CMatrix::from_iterator(
            w,
            p,
            out_re
                .into_iter()
                .zip(out_im)
                .map(|(r, i)| Complex64::new(r, i)),
        )
    }
}

/// Result of one window solve.
#[derive(Debug, Clone)]
pub(crate) struct TopEigen {
    /// `w x dim` orthonormal eigenvector estimates, descending eigenvalues.
    pub vectors: CMatrix,
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SubspaceIteration {
    pub dim: usize,
    pub block: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Chebyshev filter degree applied between Rayleigh-Ritz steps.
    pub degree: usize,
}

impl SubspaceIteration {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            block: dim + 2,
            tol: 1e-10,
            max_iter: 60,
            degree: 6,
        }
    }

    /// Deterministic random starting block, `n x block`.
    pub fn initial_state(&self, n: usize, seed: u64) -> CMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMatrix::from_fn(n, self.block, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        })
    }

    /// Top `dim` eigenpairs of the window `A[lo..lo+w, lo..lo+w]`.
    ///
    /// `state` is an `n x block` matrix in the coordinates of `A`; its rows
    /// inside the window seed the iteration and receive the final Ritz block,
    /// rows outside are zeroed.
    pub fn solve(&self, a: &SplitMatrix, lo: usize, w: usize, state: &mut CMatrix) -> TopEigen {
        let n = a.dim();
        let p = self.block.min(w);
        let dim = self.dim.min(p);
        let mut v = state.view((lo, 0), (w, p)).into_owned();
        orthonormalize(&mut v, lo as u64 ^ w as u64);
        let mut iterations = 0;
        let mut converged = false;
        let (mut ritz_vectors, mut values);
        loop {
            let av = a.window_product(lo, &v);
            let mut h = v.adjoint() * &av;
            h = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
            let (theta, y) = hermitian_eigen(&h);
            ritz_vectors = &v * &y;
            let ritz_images = av * &y;
            values = theta;
            iterations += 1;
            let scale = values[0].abs().max(f64::MIN_POSITIVE);
            let worst = (0..dim)
                .map(|k| {
                    (ritz_images.column(k)
                        - ritz_vectors.column(k) * Complex64::new(values[k], 0.0))
                    .norm()
                })
                .fold(0.0, f64::max);
            if worst <= self.tol * scale {
                converged = true;
                break;
            }
            if iterations >= self.max_iter {
                break;
            }
            let cut = values[p - 1].max(0.0);
            let wanted = values[dim - 1].max(f64::MIN_POSITIVE);
            v = if self.degree > 1 && cut > 0.1 * wanted {
                chebyshev_filter(a, lo, &ritz_vectors, ritz_images, cut, self.degree)
            } else {
                ritz_images
            };
            orthonormalize(&mut v, iterations as u64);
        }
        state.fill(Complex64::new(0.0, 0.0));
        state.view_mut((lo, 0), (w, p)).copy_from(&ritz_vectors);
        if p < state.ncols() {
            // Narrow windows keep the spare columns non-degenerate for later solves.
            let extra = self.initial_state(n, w as u64);
            for k in p..state.ncols() {
                state.column_mut(k).copy_from(&extra.column(k));
            }
        }
        TopEigen {
            vectors: ritz_vectors.columns(0, dim).into_owned(),
            values: values[..dim].iter().map(|v| v.max(0.0)).collect(),
            iterations,
            converged,
        }
    }
}

/// `T_d((2A - cut) / cut) x` by the three-term recurrence, damping the
/// spectrum inside `[0, cut]`. `ax` is the already computed `A x`.
fn chebyshev_filter(
    a: &SplitMatrix,
    lo: usize,
    x: &CMatrix,
    ax: CMatrix,
    cut: f64,
    degree: usize,
) -> CMatrix {
    let half = Complex64::new(0.5 * cut, 0.0);
    let inv = 2.0 / cut;
    let mut prev = x.clone();
    let mut cur = (ax - x * half) * Complex64::new(inv, 0.0);
    for _ in 1..degree {
        let next =
            (a.window_product(lo, &cur) - &cur * half) * Complex64::new(2.0 * inv, 0.0) - prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Orthonormal columns in place; columns that collapse numerically are
/// replaced by deterministic random directions.
fn orthonormalize(v: &mut CMatrix, salt: u64) {
    let norms = gram_schmidt(v);
    let largest = norms.iter().copied().fold(0.0, f64::max);
    let weak: Vec<usize> = (0..norms.len())
        .filter(|&k| !(norms[k] > 1e-13 * largest))
        .collect();
    if weak.is_empty() {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed ^ salt);
    for &k in &weak {
        for r in 0..v.nrows() {
            v[(r, k)] = Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    gram_schmidt(v);
}
