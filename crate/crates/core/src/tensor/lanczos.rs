//! Restarted Lanczos for the algebraically lowest eigenpair of a symmetric map.
//!
//! Every new Krylov vector is orthogonalized twice against the whole basis, so
//! near-degenerate spectra do not produce ghost copies. A restart seeds the next
//! Krylov space with the current Ritz vector, which keeps the Ritz value
//! non-increasing from one restart to the next.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    /// Converged when `‖A v − λ v‖ ≤ tol · max(1, |λ|)`.
    pub tol: f64,
    /// Number of Krylov cycles (the first one included).
    pub max_restarts: usize,
    /// Krylov dimension per cycle.
    pub krylov_dim: usize,
    /// Seed for the random start vector, when none is supplied.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_restarts: 50,
            krylov_dim: 40,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    /// Ritz value at the end of every Krylov cycle.
    pub history: Vec<f64>,
    pub matvecs: usize,
}

/// Lowest eigenpair of `apply` from a seeded random start.
///
/// Fails with [`Error::Convergence`] if the residual criterion is not met after
/// `max_iter` Krylov cycles.
pub fn lanczos_lowest<F>(apply: F, dim: usize, seed: u64, tol: f64, max_iter: usize) -> Result<EigenPair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let opts = LanczosOptions {
        tol,
        max_restarts: max_iter.max(1),
        seed,
        ..LanczosOptions::default()
    };
    let pair = lanczos_lowest_from(apply, dim, None, &opts)?;
    if !pair.converged {
        return Err(Error::Convergence {
            iterations: pair.history.len(),
            best_residual: pair.residual,
        });
    }
    Ok(pair)
}

/// Lowest eigenpair starting from `start` (or a seeded random vector).
///
/// Never fails on non-convergence: the best Ritz pair is returned with
/// `converged = false`.
pub fn lanczos_lowest_from<F>(mut apply: F, dim: usize, start: Option<&[f64]>, opts: &LanczosOptions) -> Result<EigenPair>
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return Err(Error::domain("Lanczos needs dim >= 1"));
    }
    let mut x: Vec<f64> = match start {
        Some(s) if s.len() != dim => {
            return Err(Error::shape(format!("start vector has length {} != {dim}", s.len())))
        }
        Some(s) if norm(s) > 0.0 => s.to_vec(),
        _ => random_vector(dim, opts.seed),
    };
    let n0 = norm(&x);
    if !n0.is_finite() {
        return Err(Error::numeric("non-finite start vector"));
    }
    x.iter_mut().for_each(|v| *v /= n0);

    let m = opts.krylov_dim.clamp(1, dim);
    let mut history = Vec::new();
    let mut matvecs = 0usize;
    let mut best = (f64::INFINITY, x.clone(), f64::INFINITY);
    let mut w = vec![0.0; dim];

    for _cycle in 0..opts.max_restarts.max(1) {
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut ritz = (0.0, Vec::new());
        let mut invariant = false;

        for k in 0..m {
            apply(&basis[k], &mut w);
            matvecs += 1;
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::numeric("operator produced a non-finite value"));
            }
            let a = dot(&basis[k], &w);
            alpha.push(a);
            // full reorthogonalization, two passes
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    axpy(-c, b, &mut w);
                }
            }
            let bnorm = norm(&w);
            let scale = alpha.iter().map(|v| v.abs()).fold(1e-300, f64::max);
            ritz = tridiagonal_lowest(&alpha, &beta)?;
            let est = bnorm * ritz.1.last().copied().unwrap_or(1.0).abs();
            let done = est <= 0.1 * opts.tol * ritz.0.abs().max(1.0);
            if bnorm <= 1e-14 * scale || k + 1 == dim {
                invariant = true;
                break;
            }
            if done || k + 1 == m {
                break;
            }
            beta.push(bnorm);
            basis.push(w.iter().map(|v| v / bnorm).collect());
        }

        // Ritz vector from the basis actually used
        let y = ritz.1;
        let mut v = vec![0.0; dim];
        for (coef, b) in y.iter().zip(&basis) {
            axpy(*coef, b, &mut v);
        }
        let nv = norm(&v);
        v.iter_mut().for_each(|t| *t /= nv);

        apply(&v, &mut w);
        matvecs += 1;
        let rq = dot(&v, &w);
        axpy(-rq, &v, &mut w);
        let residual = norm(&w);
        history.push(rq);
        if rq <= best.0 || residual < best.2 {
            best = (rq, v.clone(), residual);
        }
        if residual <= opts.tol * rq.abs().max(1.0) || (invariant && residual <= 1e-8 * rq.abs().max(1.0)) {
            return Ok(EigenPair {
                value: rq,
                vector: v,
                residual,
                converged: true,
                history,
                matvecs,
            });
        }
        x = v;
    }

    Ok(EigenPair {
        value: best.0,
        vector: best.1,
        residual: best.2,
        converged: false,
        history,
        matvecs,
    })
}

/// Lowest eigenpair of the symmetric tridiagonal matrix (alpha on the diagonal).
fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> Result<(f64, Vec<f64>)> {
    let k = alpha.len();
    if k == 1 {
        return Ok((alpha[0], vec![1.0]));
    }
    let mut t = Array2::<f64>::zeros((k, k));
    for i in 0..k {
        t[[i, i]] = alpha[i];
        if i + 1 < k {
            t[[i, i + 1]] = beta[i];
            t[[i + 1, i]] = beta[i];
        }
    }
    let (vals, vecs) = t.eigh(UPLO::Upper)?;
    Ok((vals[0], vecs.column(0).to_vec()))
}

fn random_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-0.5..0.5)).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::{dense_symmetric_eigen, DenseTensor};

    fn dense_apply(m: &DenseTensor) -> impl FnMut(&[f64], &mut [f64]) + '_ {
        let n = m.shape()[0];
        move |x, y| {
            for i in 0..n {
                y[i] = (0..n).map(|j| m.get(&[i, j]) * x[j]).sum();
            }
        }
    }

    #[test]
    fn diagonal_lowest() {
        let d = [-1.0, 0.0, 3.0];
        let pair = lanczos_lowest(
            |x: &[f64], y: &mut [f64]| {
                for i in 0..3 {
                    y[i] = d[i] * x[i];
                }
            },
            3,
            7,
            1e-12,
            10,
        )
        .unwrap();
        assert!((pair.value + 1.0).abs() < 1e-12);
        assert!((pair.vector[0].abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn one_by_one() {
        let pair = lanczos_lowest(|x: &[f64], y: &mut [f64]| y[0] = 5.0 * x[0], 1, 0, 1e-12, 3).unwrap();
        assert!((pair.value - 5.0).abs() < 1e-14);
    }

    #[test]
    fn random_symmetric_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100;
        let mut m = DenseTensor::zeros(&[n, n]);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                m.set(&[i, j], v);
                m.set(&[j, i], v);
            }
        }
        let (vals, _) = dense_symmetric_eigen(&m).unwrap();
        let pair = lanczos_lowest(dense_apply(&m), n, 1, 1e-11, 200).unwrap();
        assert!((pair.value - vals[0]).abs() < 1e-9, "{} vs {}", pair.value, vals[0]);
        assert!(pair.residual <= 1e-11 * pair.value.abs().max(1.0));
    }

    #[test]
    fn ritz_values_never_increase_across_restarts() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 300;
        let diag: Vec<f64> = (0..n).map(|i| i as f64 * 0.01 + rng.gen_range(0.0..1e-3)).collect();
        let opts = LanczosOptions {
            tol: 1e-12,
            max_restarts: 30,
            krylov_dim: 6,
            seed: 9,
        };
        let pair = lanczos_lowest_from(
            |x: &[f64], y: &mut [f64]| {
                for i in 0..n {
                    y[i] = diag[i] * x[i];
                }
            },
            n,
            None,
            &opts,
        )
        .unwrap();
        assert!(pair.history.len() > 1);
        for w in pair.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-13, "{:?}", pair.history);
        }
    }

    #[test]
    fn non_convergence_reports_best_residual() {
        let n = 400;
        let diag: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let err = lanczos_lowest(
            |x: &[f64], y: &mut [f64]| {
                for i in 0..n {
                    y[i] = diag[i] * x[i];
                }
            },
            n,
            3,
            1e-14,
            1,
        );
        match err {
            Err(Error::Convergence { best_residual, .. }) => assert!(best_residual > 0.0),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_vector() {
        let f = |x: &[f64], y: &mut [f64]| {
            for i in 0..10 {
                y[i] = (i as f64 - 3.0).powi(2) * x[i];
            }
        };
        let a = lanczos_lowest(f, 10, 4, 1e-12, 20).unwrap();
        let b = lanczos_lowest(f, 10, 4, 1e-12, 20).unwrap();
        assert_eq!(a.vector, b.vector);
    }
}
