//! Mahalanobis matrices recovered from dual solutions.
//!
//! Doublet SVM: `M = Σ_l h_l α_l diff_l diff_lᵀ`.
//! Triplet SVM: `M = Σ_l α_l (u_l u_lᵀ − v_l v_lᵀ)`.
//!
//! Neither is guaranteed PSD; [`psd_project`] clamps negative eigenvalues
//! after training.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array2, ArrayView1};

use crate::constraints::{Doublet, DoubletSet, Triplet, TripletSet};
use crate::dataset::{join_row, parse_numbers};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{doublet_unchecked, triplet_unchecked};
use crate::linalg::{self, quad_form};
use crate::solver::DualSolution;

pub use crate::linalg::EigenDecomposition;

/// Eigenvalues in `(−CLAMP_FLOOR, 0]` are zeroed without counting as
/// dropped mass.
pub const CLAMP_FLOOR: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MetricMatrix {
    pub m: Array2<f64>,
    pub psd_projected: bool,
    /// Sum of |λ| over clamped eigenvalues at or below `−CLAMP_FLOOR`.
    pub dropped_eigenvalue_mass: f64,
}

impl MetricMatrix {
    pub fn new(m: Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c {
            return Err(Error::invalid(format!(
                "metric must be square, got {r}x{c}"
            )));
        }
        Ok(MetricMatrix {
            m,
            psd_projected: false,
            dropped_eigenvalue_mass: 0.0,
        })
    }

    pub fn identity(d: usize) -> Self {
        MetricMatrix {
            m: Array2::eye(d),
            psd_projected: true,
            dropped_eigenvalue_mass: 0.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    /// `d psd_flag`, then d rows of d entries at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.dim(), u8::from(self.psd_projected));
        for row in self.m.rows() {
            s.push_str(&join_row(row.iter()));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or(Error::EmptyDataset)?;
        let head = parse_numbers(header, hl + 1)?;
        if head.len() != 2 || !(head[1] == 0.0 || head[1] == 1.0) {
            return Err(Error::Parse {
                line: hl + 1,
                message: "expected \"d psd_flag\"".into(),
            });
        }
        let d = head[0] as usize;
        let mut m = Array2::<f64>::zeros((d, d));
        for r in 0..d {
            let (ln, line) = lines.next().ok_or(Error::Parse {
                line: hl + 2 + r,
                message: format!("missing row {}", r + 1),
            })?;
            let row = parse_numbers(line, ln + 1)?;
            if row.len() != d {
                return Err(Error::Parse {
                    line: ln + 1,
                    message: format!("expected {d} entries, found {}", row.len()),
                });
            }
            for (c, v) in row.into_iter().enumerate() {
                m[[r, c]] = v;
            }
        }
        Ok(MetricMatrix {
            m,
            psd_projected: head[1] == 1.0,
            dropped_eigenvalue_mass: 0.0,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

/// `Σ_k w_k a_k a_kᵀ`, accumulated on the upper triangle and mirrored so
/// the result is exactly symmetric.
fn sum_outer<'a>(dim: usize, terms: impl Iterator<Item = (f64, &'a [f64])>) -> Array2<f64> {
    let mut m = Array2::<f64>::zeros((dim, dim));
    for (w, a) in terms {
        if w == 0.0 {
            continue;
        }
        for i in 0..dim {
            let s = w * a[i];
            if s == 0.0 {
                continue;
            }
            for j in i..dim {
                m[[i, j]] += s * a[j];
            }
        }
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            m[[j, i]] = m[[i, j]];
        }
    }
    m
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// `M = Σ_l w_l diff_l diff_lᵀ` for arbitrary per-doublet weights.
pub fn weighted_doublet_metric(weights: &[f64], doublets: &DoubletSet) -> Result<MetricMatrix> {
    check_len(doublets.len(), weights.len())?;
    let m = sum_outer(
        doublets.dim,
        weights
            .iter()
            .zip(&doublets.constraints)
            .map(|(&w, z)| (w, z.diff.as_slice())),
    );
    MetricMatrix::new(m)
}

pub fn reconstruct_doublet_metric(
    solution: &DualSolution,
    doublets: &DoubletSet,
) -> Result<MetricMatrix> {
    check_len(doublets.len(), solution.alphas.len())?;
    let w: Vec<f64> = solution
        .alphas
        .iter()
        .zip(&doublets.constraints)
        .map(|(a, z)| a * z.label_h as f64)
        .collect();
    weighted_doublet_metric(&w, doublets)
}

pub fn reconstruct_triplet_metric(
    solution: &DualSolution,
    triplets: &TripletSet,
) -> Result<MetricMatrix> {
    check_len(triplets.len(), solution.alphas.len())?;
    let pairs = solution.alphas.iter().zip(&triplets.constraints);
    let terms = pairs
        .clone()
        .map(|(&a, t)| (a, t.u.as_slice()))
        .chain(pairs.map(|(&a, t)| (-a, t.v.as_slice())));
    MetricMatrix::new(sum_outer(triplets.dim, terms))
}

pub fn symmetric_eigendecomposition(m: &Array2<f64>) -> Result<EigenDecomposition> {
    linalg::symmetric_eigen(m.view(), linalg::DEFAULT_MAX_SWEEPS)
}

/// Frobenius-nearest PSD matrix: `V · max(Λ, 0) · Vᵀ`.
pub fn psd_project(metric: &MetricMatrix) -> Result<MetricMatrix> {
    let eig = symmetric_eigendecomposition(&metric.m)?;
    let dropped: f64 = eig
        .eigenvalues
        .iter()
        .filter(|&&l| l <= -CLAMP_FLOOR)
        .map(|l| l.abs())
        .sum();
    Ok(MetricMatrix {
        m: eig.reassemble_with(|l| l.max(0.0)),
        psd_projected: true,
        dropped_eigenvalue_mass: dropped,
    })
}

/// `(x − y)ᵀ M (x − y)`.
pub fn mahalanobis(metric: &MetricMatrix, x: ArrayView1<f64>, y: ArrayView1<f64>) -> Result<f64> {
    check_dim(metric.dim(), x.len())?;
    check_dim(metric.dim(), y.len())?;
    let d: Vec<f64> = x.iter().zip(y.iter()).map(|(a, b)| a - b).collect();
    Ok(quad_form(metric.m.view(), &d))
}

/// `Σ_l h_l α_l K(z_l, z) + b`; positive means "different classes".
pub fn decision_doublet(
    solution: &DualSolution,
    doublets: &DoubletSet,
    z: &Doublet,
) -> Result<f64> {
    check_len(doublets.len(), solution.alphas.len())?;
    check_dim(doublets.dim, z.dim())?;
    let mut s = 0.0;
    for (a, zl) in solution.alphas.iter().zip(&doublets.constraints) {
        if *a != 0.0 {
            s += zl.label_h as f64 * a * doublet_unchecked(zl, z);
        }
    }
    Ok(s + solution.bias_b.unwrap_or(0.0))
}

/// `Σ_l α_l K(t_l, t)`, which equals
/// `d_M(anchor, dissimilar) − d_M(anchor, similar)` for the unprojected M.
pub fn decision_triplet(
    solution: &DualSolution,
    triplets: &TripletSet,
    t: &Triplet,
) -> Result<f64> {
    check_len(triplets.len(), solution.alphas.len())?;
    check_dim(triplets.dim, t.dim())?;
    let mut s = 0.0;
    for (a, tl) in solution.alphas.iter().zip(&triplets.constraints) {
        if *a != 0.0 {
            s += a * triplet_unchecked(tl, t);
        }
    }
    Ok(s)
}
