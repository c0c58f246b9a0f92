//! Independent reference implementations shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use metric_svm::Dataset;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn outer(a: &[f64], b: &[f64]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|x| b.iter().map(|y| x * y).collect())
        .collect()
}

/// tr(AB) for explicit square matrices.
pub fn trace_product(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for k in 0..n {
            s += a[i][k] * b[k][i];
        }
    }
    s
}

/// Explicit `uuᵀ − vvᵀ`.
pub fn triplet_matrix(u: &[f64], v: &[f64]) -> Vec<Vec<f64>> {
    let uu = outer(u, u);
    let vv = outer(v, v);
    uu.iter()
        .zip(&vv)
        .map(|(r1, r2)| r1.iter().zip(r2).map(|(x, y)| x - y).collect())
        .collect()
}

/// tr(D_i D_j) with D = ddᵀ, computed from explicit matrices.
pub fn doublet_kernel_explicit(a: &[f64], b: &[f64]) -> f64 {
    trace_product(&outer(a, a), &outer(b, b))
}

/// `xᵀ M x` by double loop.
pub fn quad(m: &[Vec<f64>], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        for j in 0..x.len() {
            s += x[i] * m[i][j] * x[j];
        }
    }
    s
}

pub fn to_nested(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// `Σα − ½ Σ_ij α_i α_j y_i y_j K_ij` (y = 1 when absent).
pub fn dual_value(k: &[Vec<f64>], y: Option<&[f64]>, alpha: &[f64]) -> f64 {
    let n = alpha.len();
    let yy = |i: usize| y.map_or(1.0, |y| y[i]);
    let mut quadratic = 0.0;
    for i in 0..n {
        for j in 0..n {
            quadratic += alpha[i] * alpha[j] * yy(i) * yy(j) * k[i][j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quadratic
}

/// Euclidean projection onto `{0 ≤ α ≤ C, Σ y_i α_i = 0}` by bisection on
/// the multiplier of the equality constraint.
fn project_box_equality(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let resid = |lam: f64| -> f64 {
        v.iter()
            .zip(y)
            .map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c) * yi)
            .sum()
    };
    let bound = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if resid(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lam = 0.5 * (lo + hi);
    v.iter()
        .zip(y)
        .map(|(vi, yi)| (vi - lam * yi).clamp(0.0, c))
        .collect()
}

fn lipschitz(k: &[Vec<f64>]) -> f64 {
    k.iter()
        .flatten()
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt()
        .max(1e-12)
}

/// Accelerated projected gradient ascent on the doublet dual.
pub fn pg_doublet_oracle(k: &[Vec<f64>], y: &[f64], c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = y.len();
    let step = 1.0 / lipschitz(k);
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - y[i] * (0..n).map(|j| k[i][j] * y[j] * a[j]).sum::<f64>())
            .collect()
    };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&z);
        let trial: Vec<f64> = z.iter().zip(&g).map(|(zi, gi)| zi + step * gi).collect();
        let nx = project_box_equality(&trial, y, c);
        let nt = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = nx
            .iter()
            .zip(&x)
            .map(|(a, b)| a + (t - 1.0) / nt * (a - b))
            .collect();
        x = nx;
        t = nt;
    }
    let v = dual_value(k, Some(y), &x);
    (x, v)
}

/// Accelerated projected gradient ascent on the box-only dual.
pub fn pg_box_oracle(k: &[Vec<f64>], c: f64, iters: usize) -> (Vec<f64>, f64) {
    let n = k.len();
    let step = 1.0 / lipschitz(k);
    let grad = |a: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| 1.0 - (0..n).map(|j| k[i][j] * a[j]).sum::<f64>())
            .collect()
    };
    let mut x = vec![0.0; n];
    let mut z = x.clone();
    let mut t = 1.0f64;
    for _ in 0..iters {
        let g = grad(&z);
        let nx: Vec<f64> = z
            .iter()
            .zip(&g)
            .map(|(zi, gi)| (zi + step * gi).clamp(0.0, c))
            .collect();
        let nt = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = nx
            .iter()
            .zip(&x)
            .map(|(a, b)| (a + (t - 1.0) / nt * (a - b)).clamp(0.0, c))
            .collect();
        x = nx;
        t = nt;
    }
    let v = dual_value(k, None, &x);
    (x, v)
}

/// Eigenvalues of a symmetric 3×3 matrix, ascending, by the trigonometric
/// closed form.
pub fn eig3_sym(a: [[f64; 3]; 3]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut e = [a[0][0], a[1][1], a[2][2]];
        e.sort_by(f64::total_cmp);
        return e;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (a[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let det = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (det / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let e1 = q + 2.0 * p * phi.cos();
    let e3 = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    let e2 = 3.0 * q - e1 - e3;
    [e3, e2, e1]
}

/// All principal minors of a 3×3 matrix are ≥ −tol.
pub fn psd_by_minors(m: &[Vec<f64>], tol: f64) -> bool {
    let d1 = (0..3).all(|i| m[i][i] >= -tol);
    let d2 = [(0, 1), (0, 2), (1, 2)]
        .iter()
        .all(|&(i, j)| m[i][i] * m[j][j] - m[i][j] * m[j][i] >= -tol);
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    d1 && d2 && det >= -tol
}

/// Euclidean k-NN by full sort on (squared distance, label, index), vote
/// ties to the label met first.
pub fn brute_knn(train: &Dataset, query: &[f64], k: usize) -> i64 {
    let mut all: Vec<(f64, i64, usize)> = (0..train.len())
        .map(|i| {
            let row = train.features.row(i);
            let d: f64 = row.iter().zip(query).map(|(a, b)| (b - a) * (b - a)).sum();
            (d, train.labels[i], i)
        })
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut counts: Vec<(i64, usize)> = Vec::new();
    for &(_, l, _) in all.iter().take(k) {
        if let Some(c) = counts.iter_mut().find(|c| c.0 == l) {
            c.1 += 1;
        } else {
            counts.push((l, 1));
        }
    }
    let best = counts.iter().map(|c| c.1).max().unwrap();
    counts.iter().find(|c| c.1 == best).unwrap().0
}

/// Two Gaussian blobs per class on a line, well separated.
pub fn separable_toy(n_per_class: usize, dim: usize, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let mut feats = Vec::new();
    let mut labels = Vec::new();
    for class in 0..2 {
        for _ in 0..n_per_class {
            for j in 0..dim {
                let centre = if j == 0 { 6.0 * class as f64 } else { 0.0 };
                feats.push(centre + r.random_range(-1.0..1.0));
            }
            labels.push(class as i64);
        }
    }
    Dataset::new(
        "toy",
        Array2::from_shape_vec((2 * n_per_class, dim), feats).unwrap(),
        labels,
    )
    .unwrap()
}

/// Random labelled cloud with `classes` classes.
pub fn random_cloud(n: usize, dim: usize, classes: i64, seed: u64) -> Dataset {
    let mut r = rng(seed);
    let feats: Vec<f64> = (0..n * dim).map(|_| r.random_range(-1.0..1.0)).collect();
    let labels: Vec<i64> = (0..n).map(|i| i as i64 % classes).collect();
    Dataset::new(
        "cloud",
        Array2::from_shape_vec((n, dim), feats).unwrap(),
        labels,
    )
    .unwrap()
}

pub fn dataset_csv(data: &Dataset) -> String {
    let mut s = String::new();
    for i in 0..data.len() {
        for x in data.features.row(i) {
            s.push_str(&format!("{x},"));
        }
        s.push_str(&format!("{}\n", data.labels[i]));
    }
    s
}

/// Central difference of `f` along coordinate `i` of `x`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, eps: f64) -> f64 {
    let mut p = x.to_vec();
    let mut m = x.to_vec();
    p[i] += eps;
    m[i] -= eps;
    (f(&p) - f(&m)) / (2.0 * eps)
}

/// `Σ h ln p + (1 − h) ln(1 − p)` with `p = 1/(1 + e^s)`, straight from
/// the definition.
pub fn naive_likelihood(k: &[Vec<f64>], h: &[u8], alpha: &[f64], b: f64) -> f64 {
    let mut l = 0.0;
    for t in 0..h.len() {
        let s: f64 = (0..h.len()).map(|i| alpha[i] * k[i][t]).sum::<f64>() + b;
        let p = 1.0 / (1.0 + s.exp());
        l += if h[t] == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    l
}

/// Eigenvalues of a small symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(m: &[Vec<f64>]) -> Vec<f64> {
    let n = m.len();
    let mut a = m.to_vec();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
