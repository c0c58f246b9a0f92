//! Doublet and triplet constraint sets built from nearest neighbors.
//!
//! For every anchor sample we take its `m1` nearest same-class neighbors
//! and its `m2` nearest different-class neighbors (Euclidean distance in
//! the current feature space, ties broken by smaller index). Doublets pair
//! the anchor with each of them; triplets take the `m1 × m2` cross product.

use std::fmt::Write as _;

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::dataset::Dataset;
use crate::error::{check_dim, Error, Result};

/// Doublet label: `-1` for a same-class pair, `+1` otherwise.
pub type PairLabel = i8;

pub const SIMILAR: PairLabel = -1;
pub const DISSIMILAR: PairLabel = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Doublet {
    pub first: usize,
    pub second: usize,
    pub label_h: PairLabel,
    /// `x_first − x_second`.
    pub diff: Vec<f64>,
}

impl Doublet {
    /// A free-standing doublet over two points (indices set to 0), e.g. a
    /// test pair.
    pub fn from_points(a: ArrayView1<f64>, b: ArrayView1<f64>, label_h: PairLabel) -> Result<Self> {
        check_dim(a.len(), b.len())?;
        Ok(Doublet {
            first: 0,
            second: 0,
            label_h,
            diff: a.iter().zip(b.iter()).map(|(x, y)| x - y).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.diff.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Triplet {
    pub anchor: usize,
    pub similar: usize,
    pub dissimilar: usize,
    /// `x_anchor − x_dissimilar`.
    pub u: Vec<f64>,
    /// `x_anchor − x_similar`.
    pub v: Vec<f64>,
}

impl Triplet {
    pub fn from_points(
        anchor: ArrayView1<f64>,
        similar: ArrayView1<f64>,
        dissimilar: ArrayView1<f64>,
    ) -> Result<Self> {
        check_dim(anchor.len(), similar.len())?;
        check_dim(anchor.len(), dissimilar.len())?;
        Ok(Triplet {
            anchor: 0,
            similar: 0,
            dissimilar: 0,
            u: anchor
                .iter()
                .zip(dissimilar.iter())
                .map(|(a, b)| a - b)
                .collect(),
            v: anchor
                .iter()
                .zip(similar.iter())
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoubletSet {
    pub constraints: Vec<Doublet>,
    pub m1: usize,
    pub m2: usize,
    pub n_samples: usize,
    pub dim: usize,
    /// Pairs skipped because both points coincide.
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletSet {
    pub constraints: Vec<Triplet>,
    pub m1: usize,
    pub m2: usize,
    pub n_samples: usize,
    pub dim: usize,
    pub dropped: usize,
}

impl DoubletSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn labels(&self) -> Vec<PairLabel> {
        self.constraints.iter().map(|z| z.label_h).collect()
    }

    /// One `first second h` line per doublet.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for z in &self.constraints {
            let _ = writeln!(s, "{} {} {}", z.first, z.second, z.label_h);
        }
        s
    }
}

impl TripletSet {
    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// One `anchor similar dissimilar` line per triplet.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for t in &self.constraints {
            let _ = writeln!(s, "{} {} {}", t.anchor, t.similar, t.dissimilar);
        }
        s
    }
}

fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn diff(data: &Dataset, i: usize, j: usize) -> Vec<f64> {
    data.features
        .row(i)
        .iter()
        .zip(data.features.row(j).iter())
        .map(|(a, b)| a - b)
        .collect()
}

/// Nearest same-class and different-class neighbors of `anchor`, truncated
/// to what exists.
fn neighbors(data: &Dataset, anchor: usize, m1: usize, m2: usize) -> (Vec<usize>, Vec<usize>) {
    let x = data.features.row(anchor);
    let y = data.labels[anchor];
    let mut same = Vec::new();
    let mut other = Vec::new();
    for j in 0..data.len() {
        if j == anchor {
            continue;
        }
        let d = sq_dist(x, data.features.row(j));
        if data.labels[j] == y {
            same.push((d, j));
        } else {
            other.push((d, j));
        }
    }
    let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    let pick = |mut v: Vec<(f64, usize)>, m: usize| -> Vec<usize> {
        if m < v.len() {
            v.select_nth_unstable_by(m, by_dist);
            v.truncate(m);
        }
        v.sort_by(by_dist);
        v.into_iter().map(|(_, j)| j).collect()
    };
    (pick(same, m1), pick(other, m2))
}

fn check_args(data: &Dataset, m1: usize, m2: usize) -> Result<()> {
    if m1 + m2 == 0 {
        return Err(Error::invalid("m1 + m2 must be at least 1"));
    }
    if data.len() < 2 {
        return Err(Error::Constraint("need at least two samples".into()));
    }
    if m2 > 0 && data.classes().len() < 2 {
        return Err(Error::Constraint(
            "dissimilar neighbors requested but the data has a single class".into(),
        ));
    }
    Ok(())
}

pub fn build_doublets(data: &Dataset, m1: usize, m2: usize) -> Result<DoubletSet> {
    check_args(data, m1, m2)?;
    let per_anchor: Vec<Vec<Doublet>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (same, other) = neighbors(data, i, m1, m2);
            same.into_iter()
                .map(|j| (j, SIMILAR))
                .chain(other.into_iter().map(|j| (j, DISSIMILAR)))
                .map(|(j, h)| Doublet {
                    first: i,
                    second: j,
                    label_h: h,
                    diff: diff(data, i, j),
                })
                .collect()
        })
        .collect();
    let mut constraints = Vec::new();
    let mut dropped = 0;
    for z in per_anchor.into_iter().flatten() {
        if z.diff.iter().all(|&v| v == 0.0) {
            dropped += 1;
        } else {
            constraints.push(z);
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} doublets between coincident points");
    }
    if constraints.is_empty() {
        return Err(Error::Constraint("no usable doublets".into()));
    }
    Ok(DoubletSet {
        constraints,
        m1,
        m2,
        n_samples: data.len(),
        dim: data.dim(),
        dropped,
    })
}

pub fn build_triplets(data: &Dataset, m1: usize, m2: usize) -> Result<TripletSet> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::invalid("triplets need m1 >= 1 and m2 >= 1"));
    }
    check_args(data, m1, m2)?;
    let per_anchor: Vec<Vec<Triplet>> = (0..data.len())
        .into_par_iter()
        .map(|i| {
            let (same, other) = neighbors(data, i, m1, m2);
            let mut out = Vec::with_capacity(same.len() * other.len());
            for &j in &same {
                let v = diff(data, i, j);
                for &k in &other {
                    out.push(Triplet {
                        anchor: i,
                        similar: j,
                        dissimilar: k,
                        u: diff(data, i, k),
                        v: v.clone(),
                    });
                }
            }
            out
        })
        .collect();
    let mut constraints = Vec::new();
    let mut dropped = 0;
    for t in per_anchor.into_iter().flatten() {
        let zero = |w: &[f64]| w.iter().all(|&x| x == 0.0);
        if zero(&t.u) || zero(&t.v) {
            dropped += 1;
        } else {
            constraints.push(t);
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} triplets with coincident points");
    }
    if constraints.is_empty() {
        return Err(Error::Constraint(
            "no usable triplets (does every anchor have a same-class neighbor?)".into(),
        ));
    }
    Ok(TripletSet {
        constraints,
        m1,
        m2,
        n_samples: data.len(),
        dim: data.dim(),
        dropped,
    })
}
