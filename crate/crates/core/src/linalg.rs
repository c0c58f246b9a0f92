//! Dense linear-algebra helpers shared by the PCA and metric code.
//!
//! The only factorization in the crate is the cyclic Jacobi eigensolver
//! below. PCA (covariance eigendecomposition) and PSD projection both go
//! through it.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Default cap on full Jacobi sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 100;

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// Dot product over ndarray views; falls back to an indexed loop for
/// non-contiguous views.
#[inline]
pub(crate) fn dot_view(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    match (a.as_slice(), b.as_slice()) {
        (Some(x), Some(y)) => dot(x, y),
        _ => a.iter().zip(b.iter()).map(|(x, y)| x * y).sum(),
    }
}

/// Quadratic form `vᵀ M v` evaluated as `Σ_i v_i (Σ_j M_ij v_j)`.
pub(crate) fn quad_form(m: ArrayView2<f64>, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (i, row) in m.rows().into_iter().enumerate() {
        let inner = match row.as_slice() {
            Some(r) => dot(r, v),
            None => row.iter().zip(v).map(|(a, b)| a * b).sum(),
        };
        acc += v[i] * inner;
    }
    acc
}

/// Largest absolute entry.
pub fn max_abs(m: ArrayView2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Eigenvalues sorted descending with matching orthonormal eigenvector
/// columns.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition {
    pub eigenvalues: Array1<f64>,
    pub eigenvectors: Array2<f64>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    /// `V · diag(f(λ)) · Vᵀ`.
    pub fn reassemble_with(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let d = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = Array2::<f64>::zeros((d, d));
        for k in 0..d {
            let lam = f(self.eigenvalues[k]);
            if lam == 0.0 {
                continue;
            }
            let col = v.column(k);
            for i in 0..d {
                let s = lam * col[i];
                if s == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[[i, j]] += s * col[j];
                }
            }
        }
        // exact symmetry
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (out[[i, j]] + out[[j, i]]);
                out[[i, j]] = avg;
                out[[j, i]] = avg;
            }
        }
        out
    }

    pub fn reassemble(&self) -> Array2<f64> {
        self.reassemble_with(|x| x)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input is symmetrized as `(M + Mᵀ)/2` first. Rotations visit the
/// upper triangle in row-major order every sweep, so results are
/// deterministic.
pub fn symmetric_eigen(m: ArrayView2<f64>, max_sweeps: usize) -> Result<EigenDecomposition> {
    let (rows, cols) = m.dim();
    if rows != cols {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {rows}x{cols}"
        )));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix passed to eigensolver".into()));
    }
    let n = rows;
    let mut a = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            a[[i, j]] = 0.5 * (m[[i, j]] + m[[j, i]]);
        }
    }
    let mut v = Array2::<f64>::eye(n);

    let total: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let off_norm = |a: &Array2<f64>| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[[i, j]] * a[[i, j]];
            }
        }
        s.sqrt()
    };

    let target = f64::EPSILON * total;
    let mut sweeps = 0;
    loop {
        let off = off_norm(&a);
        if off <= target || off == 0.0 {
            break;
        }
        if sweeps >= max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        // Skip tiny pivots during the first sweeps (Rutishauser threshold).
        let threshold = if sweeps < 4 {
            0.2 * off / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let g = 100.0 * apq.abs();
                let app = a[[p, p]];
                let aqq = a[[q, q]];
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a[[p, q]] = 0.0;
                    a[[q, p]] = 0.0;
                    continue;
                }
                if apq.abs() <= threshold || apq == 0.0 {
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                a[[p, q]] = 0.0;
                a[[q, p]] = 0.0;
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[j, j]].total_cmp(&a[[i, i]]).then(i.cmp(&j)));
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| a[[i, i]]));
    let mut eigenvectors = Array2::<f64>::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        eigenvectors.column_mut(dst).assign(&v.column(src));
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let mut m = Array2::zeros((n, n));
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                m[[i, j]] = x;
                m[[j, i]] = x;
            }
        }
        m
    }

    #[test]
    fn identity_has_unit_spectrum() {
        let e = symmetric_eigen(Array2::eye(4).view(), DEFAULT_MAX_SWEEPS).unwrap();
        assert!(e.eigenvalues.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn swap_matrix() {
        let m = array![[0.0, 1.0], [1.0, 0.0]];
        let e = symmetric_eigen(m.view(), DEFAULT_MAX_SWEEPS).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn random_6x6_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let m = random_symmetric(6, &mut rng);
            let e = symmetric_eigen(m.view(), DEFAULT_MAX_SWEEPS).unwrap();
            let back = e.reassemble();
            assert!(max_abs((&back - &m).view()) <= 1e-8);
            let vtv = e.eigenvectors.t().dot(&e.eigenvectors);
            assert!(max_abs((&vtv - &Array2::<f64>::eye(6)).view()) <= 1e-8);
            let norm = max_abs(m.view());
            for k in 0..6 {
                let v = e.eigenvectors.column(k);
                let mv = m.dot(&v);
                let r = (&mv - &(&v * e.eigenvalues[k]))
                    .iter()
                    .map(|x| x * x)
                    .sum::<f64>()
                    .sqrt();
                assert!(r <= 1e-8 * norm.max(1.0));
            }
            for w in e.eigenvalues.windows(2) {
                assert!(w[0] >= w[1]);
            }
        }
    }

    #[test]
    fn rejects_non_square_and_nan() {
        let m = Array2::<f64>::zeros((2, 3));
        assert!(symmetric_eigen(m.view(), 10).is_err());
        let m = array![[f64::NAN, 0.0], [0.0, 1.0]];
        assert!(matches!(
            symmetric_eigen(m.view(), 10),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn sweep_cap_reports_non_convergence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = random_symmetric(8, &mut rng);
        assert!(matches!(
            symmetric_eigen(m.view(), 0),
            Err(Error::NoConvergence { sweeps: 0, .. })
        ));
    }
}
