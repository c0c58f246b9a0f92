//! Degree-2 polynomial kernels on samples, doublets and triplets.
//!
//! Every kernel reduces to dot products of cached difference vectors, so
//! an entry costs O(d) and no d×d outer product is ever formed:
//!
//! * sample:  `(x_iᵀ x_j)²`
//! * doublet: `(diff_iᵀ diff_j)²`
//! * triplet: `tr(T_i T_j)` with `T = u uᵀ − v vᵀ`, which expands to
//!   `(u_iᵀu_j)² − (u_iᵀv_j)² − (v_iᵀu_j)² + (v_iᵀv_j)²`.

use std::fmt::Write as _;
use std::num::NonZeroUsize;
use std::ops::Deref;
use std::sync::Arc;

use lru::LruCache;
use ndarray::{Array2, ArrayView1};
use parking_lot::Mutex;
use rayon::prelude::*;

use crate::constraints::{Doublet, DoubletSet, Triplet, TripletSet};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, dot_view};

/// Default largest N for which the full Gram matrix is materialized
/// (8192² × 8 bytes ≈ 512 MiB).
pub const DEFAULT_DENSE_THRESHOLD: usize = 8192;

/// Default memory budget for the row cache in on-the-fly mode.
pub const DEFAULT_CACHE_BYTES: usize = 512 << 20;

pub fn kernel_sample(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    let s = dot_view(a, b);
    Ok(s * s)
}

pub fn kernel_doublet(a: &Doublet, b: &Doublet) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(doublet_unchecked(a, b))
}

pub fn kernel_triplet(a: &Triplet, b: &Triplet) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    Ok(triplet_unchecked(a, b))
}

#[inline]
pub(crate) fn doublet_unchecked(a: &Doublet, b: &Doublet) -> f64 {
    let s = dot(&a.diff, &b.diff);
    s * s
}

/// Grouped as `(uu² + vv²) − (uv² + vu²)` so swapping the arguments gives
/// a bit-identical result.
#[inline]
pub(crate) fn triplet_unchecked(a: &Triplet, b: &Triplet) -> f64 {
    let uu = dot(&a.u, &b.u);
    let uv = dot(&a.u, &b.v);
    let vu = dot(&a.v, &b.u);
    let vv = dot(&a.v, &b.v);
    (uu * uu + vv * vv) - (uv * uv + vu * vu)
}

/// A finite family of objects with a kernel between them.
pub trait PairKernel: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn eval(&self, i: usize, j: usize) -> f64;
}

impl PairKernel for DoubletSet {
    fn len(&self) -> usize {
        self.constraints.len()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        doublet_unchecked(&self.constraints[i], &self.constraints[j])
    }
}

impl PairKernel for TripletSet {
    fn len(&self) -> usize {
        self.constraints.len()
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        triplet_unchecked(&self.constraints[i], &self.constraints[j])
    }
}

impl PairKernel for Vec<Doublet> {
    fn len(&self) -> usize {
        <[Doublet]>::len(self)
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        doublet_unchecked(&self[i], &self[j])
    }
}

impl PairKernel for Vec<Triplet> {
    fn len(&self) -> usize {
        <[Triplet]>::len(self)
    }

    fn eval(&self, i: usize, j: usize) -> f64 {
        triplet_unchecked(&self[i], &self[j])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GramOptions {
    /// Materialize the whole matrix when N is at most this.
    pub dense_threshold: usize,
    /// Row capacity of the LRU cache in on-the-fly mode; `None` sizes it
    /// from [`DEFAULT_CACHE_BYTES`].
    pub cache_rows: Option<usize>,
}

impl Default for GramOptions {
    fn default() -> Self {
        GramOptions {
            dense_threshold: DEFAULT_DENSE_THRESHOLD,
            cache_rows: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramMode {
    Dense,
    Cached,
}

/// One Gram row, either borrowed from the dense matrix or shared out of
/// the cache.
pub enum Row<'g> {
    Borrowed(&'g [f64]),
    Shared(Arc<[f64]>),
}

impl Deref for Row<'_> {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            Row::Borrowed(r) => r,
            Row::Shared(r) => r,
        }
    }
}

enum Storage<'a> {
    Dense(Array2<f64>),
    Cached {
        source: &'a dyn PairKernel,
        cache: Mutex<LruCache<usize, Arc<[f64]>>>,
    },
}

/// Row-oriented access to a Gram matrix.
pub struct GramView<'a> {
    n: usize,
    diag: Vec<f64>,
    storage: Storage<'a>,
}

impl<'a> GramView<'a> {
    pub fn new(source: &'a dyn PairKernel, options: GramOptions) -> Result<Self> {
        let n = source.len();
        if n == 0 {
            return Err(Error::invalid("Gram matrix over an empty constraint set"));
        }
        let diag: Vec<f64> = (0..n).into_par_iter().map(|i| source.eval(i, i)).collect();
        if n <= options.dense_threshold {
            let mut m = Array2::<f64>::zeros((n, n));
            m.axis_iter_mut(ndarray::Axis(0))
                .into_par_iter()
                .enumerate()
                .for_each(|(i, mut row)| {
                    for (j, slot) in row.iter_mut().enumerate() {
                        *slot = source.eval(i, j);
                    }
                });
            return Ok(GramView {
                n,
                diag,
                storage: Storage::Dense(m),
            });
        }
        let rows = options
            .cache_rows
            .unwrap_or(DEFAULT_CACHE_BYTES / (8 * n))
            .clamp(2, n);
        Ok(GramView {
            n,
            diag,
            storage: Storage::Cached {
                source,
                cache: Mutex::new(LruCache::new(NonZeroUsize::new(rows).expect("rows >= 2"))),
            },
        })
    }

    /// Wraps an explicit square matrix (symmetrized).
    pub fn from_matrix(m: Array2<f64>) -> Result<GramView<'static>> {
        let (r, c) = m.dim();
        if r != c || r == 0 {
            return Err(Error::invalid(format!(
                "Gram matrix must be square and non-empty, got {r}x{c}"
            )));
        }
        let mut m = m;
        for i in 0..r {
            for j in (i + 1)..r {
                let avg = 0.5 * (m[[i, j]] + m[[j, i]]);
                m[[i, j]] = avg;
                m[[j, i]] = avg;
            }
        }
        Ok(GramView {
            n: r,
            diag: (0..r).map(|i| m[[i, i]]).collect(),
            storage: Storage::Dense(m),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn mode(&self) -> GramMode {
        match self.storage {
            Storage::Dense(_) => GramMode::Dense,
            Storage::Cached { .. } => GramMode::Cached,
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    /// Row `i`. In cached mode the row is computed outside the lock and
    /// inserted whole, so concurrent readers never see a partial row.
    pub fn row(&self, i: usize) -> Row<'_> {
        match &self.storage {
            Storage::Dense(m) => Row::Borrowed(
                m.row(i)
                    .to_slice()
                    .expect("dense Gram storage is standard layout"),
            ),
            Storage::Cached { source, cache } => {
                if let Some(r) = cache.lock().get(&i) {
                    return Row::Shared(Arc::clone(r));
                }
                let fresh: Arc<[f64]> = (0..self.n).map(|j| source.eval(i, j)).collect();
                cache.lock().put(i, Arc::clone(&fresh));
                Row::Shared(fresh)
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.storage {
            Storage::Dense(m) => m[[i, j]],
            Storage::Cached { source, .. } => source.eval(i, j),
        }
    }

    /// `K · w`.
    pub fn mul_vec(&self, w: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| dot(&self.row(i), w))
            .collect()
    }

    pub fn to_dense(&self) -> Array2<f64> {
        match &self.storage {
            Storage::Dense(m) => m.clone(),
            Storage::Cached { .. } => {
                let mut m = Array2::<f64>::zeros((self.n, self.n));
                for i in 0..self.n {
                    m.row_mut(i).assign(&ArrayView1::from(&*self.row(i)));
                }
                m
            }
        }
    }

    /// `N` on the first line, then N rows of N entries at 17 significant
    /// digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.n);
        for i in 0..self.n {
            s.push_str(&crate::dataset::join_row(self.row(i).iter()));
            s.push('\n');
        }
        s
    }
}

/// Convenience: `GramView` over a doublet or triplet set with default
/// options.
pub fn gram<K: PairKernel>(source: &K, options: GramOptions) -> Result<GramView<'_>> {
    GramView::new(source, options)
}
