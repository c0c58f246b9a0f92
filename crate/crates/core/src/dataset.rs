//! Labeled datasets: loading, feature scaling, PCA and cross-validation
//! splits.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, symmetric_eigen};

/// Class label. Integer labels in input files are kept as-is; string labels
/// are numbered in order of first occurrence.
pub type Label = i64;

/// Borrowed view of one labeled sample.
#[derive(Clone, Copy, Debug)]
pub struct Sample<'a> {
    pub features: ArrayView1<'a, f64>,
    pub label: Label,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// n × d, one sample per row.
    pub features: Array2<f64>,
    pub labels: Vec<Label>,
    /// Original label text for mapped labels, indexed by label id.
    pub label_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(name: impl Into<String>, features: Array2<f64>, labels: Vec<Label>) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: features.nrows(),
                found: labels.len(),
            });
        }
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        Ok(Dataset {
            name: name.into(),
            features,
            labels,
            label_names: None,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn sample(&self, i: usize) -> Sample<'_> {
        Sample {
            features: self.features.row(i),
            label: self.labels[i],
        }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample<'_>> {
        (0..self.len()).map(move |i| self.sample(i))
    }

    /// Distinct labels, ascending.
    pub fn classes(&self) -> Vec<Label> {
        let mut c = self.labels.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    /// Per-class member indices in ascending index order, classes ascending.
    pub fn class_members(&self) -> Vec<(Label, Vec<usize>)> {
        let mut map: HashMap<Label, Vec<usize>> = HashMap::new();
        for (i, &y) in self.labels.iter().enumerate() {
            map.entry(y).or_default().push(i);
        }
        let mut out: Vec<_> = map.into_iter().collect();
        out.sort_by_key(|(y, _)| *y);
        out
    }

    /// New dataset with the given rows, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select(Axis(0), indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            label_names: self.label_names.clone(),
        }
    }

    fn with_features(&self, features: Array2<f64>) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features,
            labels: self.labels.clone(),
            label_names: self.label_names.clone(),
        }
    }

    /// Stratified random subsample of (about) `size` rows, keeping class
    /// proportions. Deterministic for a given seed.
    pub fn stratified_subsample(&self, size: usize, seed: u64) -> Dataset {
        if size >= self.len() {
            return self.clone();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.len();
        let mut chosen = Vec::with_capacity(size);
        for (_, mut members) in self.class_members() {
            members.shuffle(&mut rng);
            let take = ((members.len() * size) as f64 / n as f64).round() as usize;
            chosen.extend_from_slice(&members[..take.min(members.len())]);
        }
        chosen.sort_unstable();
        self.subset(&chosen)
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn dataset_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

/// Turns raw label strings into label ids. All-integer labels are kept;
/// anything else is numbered by first occurrence.
fn map_labels(raw: &[String]) -> (Vec<Label>, Option<Vec<String>>) {
    let as_int: Option<Vec<Label>> = raw
        .iter()
        .map(|s| {
            s.parse::<Label>().ok().or_else(|| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.fract() == 0.0 && v.abs() < 9.0e15)
                    .map(|v| v as Label)
            })
        })
        .collect();
    if let Some(labels) = as_int {
        return (labels, None);
    }
    let mut ids: HashMap<&str, Label> = HashMap::new();
    let mut names = Vec::new();
    let labels = raw
        .iter()
        .map(|s| {
            *ids.entry(s.as_str()).or_insert_with(|| {
                names.push(s.clone());
                (names.len() - 1) as Label
            })
        })
        .collect();
    (labels, Some(names))
}

/// Loads comma-separated rows. `label_column` defaults to the last column.
/// A first row whose feature fields are not all numeric is taken as a
/// header.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut ds = parse_csv(&text, label_column)?;
    ds.name = dataset_name(path);
    Ok(ds)
}

pub fn parse_csv(text: &str, label_column: Option<usize>) -> Result<Dataset> {
    let mut rows: Vec<(usize, Vec<&str>)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(str::trim).collect()))
        .collect();
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let width = rows[0].1.len();
    if width < 2 {
        return Err(Error::Parse {
            line: rows[0].0,
            message: "need at least one feature column and a label column".into(),
        });
    }
    let label_col = label_column.unwrap_or(width - 1);
    if label_col >= width {
        return Err(Error::invalid(format!(
            "label column {label_col} out of range for {width} fields"
        )));
    }
    let is_header = rows[0]
        .1
        .iter()
        .enumerate()
        .any(|(c, f)| c != label_col && f.parse::<f64>().is_err());
    if is_header {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let d = width - 1;
    let mut features = Array2::<f64>::zeros((rows.len(), d));
    let mut raw_labels = Vec::with_capacity(rows.len());
    for (r, (line, fields)) in rows.iter().enumerate() {
        if fields.len() != width {
            return Err(Error::Parse {
                line: *line,
                message: format!("expected {width} fields, found {}", fields.len()),
            });
        }
        let mut c_out = 0;
        for (c, field) in fields.iter().enumerate() {
            if c == label_col {
                raw_labels.push(field.to_string());
                continue;
            }
            features[[r, c_out]] = field.parse::<f64>().map_err(|_| Error::Parse {
                line: *line,
                message: format!("field {} is not numeric: {field:?}", c + 1),
            })?;
            c_out += 1;
        }
    }
    let (labels, label_names) = map_labels(&raw_labels);
    Ok(Dataset {
        name: "dataset".into(),
        features,
        labels,
        label_names,
    })
}

/// Loads the sparse `label idx:val ...` format into a dense dataset.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = read_to_string(path)?;
    let mut ds = parse_libsvm(&text)?;
    ds.name = dataset_name(path);
    Ok(ds)
}

pub fn parse_libsvm(text: &str) -> Result<Dataset> {
    let mut raw_labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut dim = 0usize;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = tokens.next().expect("non-empty line has a token");
        raw_labels.push(label.to_string());
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected index:value, found {tok:?}"),
            })?;
            let idx: usize = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad feature index {idx:?}"),
            })?;
            if idx == 0 || idx <= last {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("feature indices must be 1-based and strictly increasing (got {idx} after {last})"),
                });
            }
            let val: f64 = val.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("non-numeric value {val:?}"),
            })?;
            last = idx;
            row.push((idx, val));
        }
        dim = dim.max(last);
        entries.push(row);
    }
    if entries.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut features = Array2::<f64>::zeros((entries.len(), dim));
    for (r, row) in entries.iter().enumerate() {
        for &(idx, val) in row {
            features[[r, idx - 1]] = val;
        }
    }
    let (labels, label_names) = map_labels(&raw_labels);
    Ok(Dataset {
        name: "dataset".into(),
        features,
        labels,
        label_names,
    })
}

/// Per-feature mean and standard deviation (population form) from a
/// training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

impl Standardizer {
    pub fn fit(train: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let n = train.len() as f64;
        let mean = train.features.sum_axis(Axis(0)) / n;
        let mut var = Array1::<f64>::zeros(train.dim());
        for row in train.features.rows() {
            for (j, x) in row.iter().enumerate() {
                let c = x - mean[j];
                var[j] += c * c;
            }
        }
        let std = var.mapv(|v| (v / n).sqrt());
        Ok(Standardizer { mean, std })
    }

    /// Constant features (std at the rounding floor of their mean) map to 0.
    fn is_constant(&self, j: usize) -> bool {
        self.std[j] <= 1e-12 * (1.0 + self.mean[j].abs())
    }

    pub fn apply(&self, data: &Dataset) -> Result<Dataset> {
        check_dim(self.mean.len(), data.dim())?;
        let mut out = data.features.clone();
        for mut row in out.rows_mut() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = if self.is_constant(j) {
                    0.0
                } else {
                    (*x - self.mean[j]) / self.std[j]
                };
            }
        }
        Ok(data.with_features(out))
    }
}

/// Fits scaling on `train` and applies it to both splits.
pub fn standardize_fit_apply(
    train: &Dataset,
    test: &Dataset,
) -> Result<(Dataset, Dataset, Standardizer)> {
    let s = Standardizer::fit(train)?;
    Ok((s.apply(train)?, s.apply(test)?, s))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Array1<f64>,
    /// d × p, orthonormal columns ordered by decreasing variance.
    pub basis: Array2<f64>,
    /// Empty when the model was read back from the text format, which does
    /// not carry it.
    pub explained_variance: Array1<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn transform(&self, data: &Dataset) -> Result<Dataset> {
        check_dim(self.input_dim(), data.dim())?;
        let centered = &data.features - &self.mean.view().insert_axis(Axis(0));
        Ok(data.with_features(centered.dot(&self.basis)))
    }

    /// Maps projected coordinates back to input space.
    pub fn inverse_transform(&self, data: &Dataset) -> Result<Dataset> {
        check_dim(self.output_dim(), data.dim())?;
        let back = data.features.dot(&self.basis.t()) + self.mean.view().insert_axis(Axis(0));
        Ok(data.with_features(back))
    }

    /// `d p`, then the mean, then d rows of p basis entries; 17 significant
    /// digits.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.input_dim(), self.output_dim());
        s.push_str(&join_row(self.mean.iter()));
        s.push('\n');
        for row in self.basis.rows() {
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
        let dims = parse_numbers(header, hl + 1)?;
        if dims.len() != 2 {
            return Err(Error::Parse {
                line: hl + 1,
                message: "expected \"d p\"".into(),
            });
        }
        let (d, p) = (dims[0] as usize, dims[1] as usize);
        let (ml, mean_line) = lines.next().ok_or(Error::Parse {
            line: hl + 2,
            message: "missing mean line".into(),
        })?;
        let mean = parse_numbers(mean_line, ml + 1)?;
        if mean.len() != d {
            return Err(Error::Parse {
                line: ml + 1,
                message: format!("expected {d} mean entries, found {}", mean.len()),
            });
        }
        let mut basis = Array2::<f64>::zeros((d, p));
        for r in 0..d {
            let (bl, line) = lines.next().ok_or(Error::Parse {
                line: ml + 2 + r,
                message: "missing basis row".into(),
            })?;
            let row = parse_numbers(line, bl + 1)?;
            if row.len() != p {
                return Err(Error::Parse {
                    line: bl + 1,
                    message: format!("expected {p} basis entries, found {}", row.len()),
                });
            }
            basis.row_mut(r).assign(&Array1::from(row));
        }
        Ok(PcaModel {
            mean: Array1::from(mean),
            basis,
            explained_variance: Array1::zeros(0),
        })
    }
}

pub(crate) fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn join_row<'a>(it: impl Iterator<Item = &'a f64>) -> String {
    it.map(|&x| fmt17(x)).collect::<Vec<_>>().join(" ")
}

pub(crate) fn parse_numbers(line: &str, line_no: usize) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("not a number: {t:?}"),
            })
        })
        .collect()
}

/// Top-`target_dim` principal axes of the sample covariance.
pub fn pca_fit(data: &Dataset, target_dim: usize) -> Result<PcaModel> {
    let (n, d) = data.features.dim();
    if target_dim == 0 || target_dim > d.min(n) {
        return Err(Error::invalid(format!(
            "PCA dimension {target_dim} outside 1..={}",
            d.min(n)
        )));
    }
    let mean = data.features.sum_axis(Axis(0)) / n as f64;
    let centered = &data.features - &mean.view().insert_axis(Axis(0));
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let cov = centered.t().dot(&centered) / denom;
    let eig = symmetric_eigen(cov.view(), linalg::DEFAULT_MAX_SWEEPS)?;
    let basis = eig
        .eigenvectors
        .slice(ndarray::s![.., ..target_dim])
        .to_owned();
    let explained_variance = eig
        .eigenvalues
        .slice(ndarray::s![..target_dim])
        .mapv(|v| v.max(0.0));
    Ok(PcaModel {
        mean,
        basis,
        explained_variance,
    })
}

pub fn pca_transform(model: &PcaModel, data: &Dataset) -> Result<Dataset> {
    model.transform(data)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CvSplit {
    pub fold_count: usize,
    pub assignments: Vec<usize>,
    pub stratified: bool,
    pub seed: u64,
}

impl CvSplit {
    /// (train indices, test indices) for one fold, both ascending.
    pub fn fold_indices(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Seeded k-fold assignment. Stratified when every class has at least `k`
/// members: each class is shuffled and dealt round-robin, continuing the
/// deal across classes so fold sizes stay within one of each other.
pub fn kfold_split(data: &Dataset, k: usize, seed: u64) -> Result<CvSplit> {
    let n = data.len();
    if k < 2 || k > n {
        return Err(Error::invalid(format!("fold count {k} outside 2..={n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = data.class_members();
    let stratified = members.iter().all(|(_, m)| m.len() >= k);
    let mut assignments = vec![0usize; n];
    if stratified {
        let mut next = 0usize;
        for (_, mut idx) in members {
            idx.shuffle(&mut rng);
            for i in idx {
                assignments[i] = next % k;
                next += 1;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            assignments[i] = pos % k;
        }
    }
    Ok(CvSplit {
        fold_count: k,
        assignments,
        stratified,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::Rng;

    fn toy(features: Array2<f64>, labels: Vec<Label>) -> Dataset {
        Dataset::new("toy", features, labels).unwrap()
    }

    #[test]
    fn csv_string_labels_by_first_occurrence() {
        let ds = parse_csv("1.0,2.0,A\n3.0,4.0,B\n5.0,6.0,A\n", None).unwrap();
        assert_eq!((ds.len(), ds.dim()), (3, 2));
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(
            ds.label_names.as_deref(),
            Some(&["A".to_string(), "B".to_string()][..])
        );
    }

    #[test]
    fn csv_header_and_label_column() {
        let ds = parse_csv("cls,x,y\n2,1.5,2.5\n7,0.5,1.0\n", Some(0)).unwrap();
        assert_eq!(ds.labels, vec![2, 7]);
        assert_eq!(ds.features, array![[1.5, 2.5], [0.5, 1.0]]);
    }

    #[test]
    fn csv_ragged_row_names_line() {
        let err = parse_csv("1,2,A\n1,A\n", None).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn csv_empty() {
        assert!(matches!(parse_csv("\n\n", None), Err(Error::EmptyDataset)));
    }

    #[test]
    fn libsvm_dense_fill() {
        let ds = parse_libsvm("1 1:0.5 3:2.0\n").unwrap();
        assert_eq!(ds.features, array![[0.5, 0.0, 2.0]]);
        assert_eq!(ds.labels, vec![1]);
        let ds = parse_libsvm("0 2:1.0\n1 1:1.0\n").unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 2));
    }

    #[test]
    fn libsvm_errors() {
        assert!(matches!(
            parse_libsvm("1 3:x\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 3:1 2:1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_libsvm("1 0:1\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn standardize_two_points_and_constant() {
        let train = toy(array![[1.0, 5.0], [3.0, 5.0]], vec![0, 1]);
        let test = toy(array![[2.0, 9.0], [5.0, 5.0]], vec![0, 1]);
        let (a, b, s) = standardize_fit_apply(&train, &test).unwrap();
        assert_eq!(a.features, array![[-1.0, 0.0], [1.0, 0.0]]);
        // (x - 2) / 1 by hand
        assert_eq!(b.features, array![[0.0, 0.0], [3.0, 0.0]]);
        assert_eq!(s.mean, array![2.0, 5.0]);
    }

    #[test]
    fn standardize_hand_computed_test_values() {
        let train = toy(array![[0.0], [1.0], [5.0]], vec![0, 1, 0]);
        let test = toy(array![[4.0]], vec![0]);
        let (_, b, _) = standardize_fit_apply(&train, &test).unwrap();
        let mu = 2.0;
        let sigma = ((4.0 + 1.0 + 9.0) / 3.0f64).sqrt();
        assert!((b.features[[0, 0]] - (4.0 - mu) / sigma).abs() < 1e-15);
    }

    #[test]
    fn standardize_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = Array2::from_shape_fn((40, 5), |_| rng.random_range(-10.0..10.0));
        let ds = toy(x, vec![0; 40]);
        let s1 = Standardizer::fit(&ds).unwrap().apply(&ds).unwrap();
        let s2 = Standardizer::fit(&s1).unwrap().apply(&s1).unwrap();
        assert!(linalg::max_abs((&s1.features - &s2.features).view()) <= 1e-10);
    }

    #[test]
    fn pca_on_a_line() {
        let x = Array2::from_shape_fn((6, 2), |(i, j)| {
            (i as f64) * if j == 0 { 1.0 } else { 2.0 } + 1.0
        });
        let ds = toy(x, vec![0; 6]);
        let m = pca_fit(&ds, 1).unwrap();
        let ev = &m.explained_variance;
        assert!(ev[0] > 0.0);
        let back = m.inverse_transform(&m.transform(&ds).unwrap()).unwrap();
        assert!(linalg::max_abs((&back.features - &ds.features).view()) <= 1e-8);
        let mean_ds = toy(m.mean.clone().insert_axis(Axis(0)), vec![0]);
        let z = m.transform(&mean_ds).unwrap();
        assert!(z.features.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn pca_isotropic_variance() {
        // ±e_i pairs: covariance = (2/(2d-1)) I; scale so it is exactly I.
        let d = 3;
        let n = 2 * d;
        let scale = (((n - 1) as f64) / 2.0).sqrt();
        let mut x = Array2::zeros((n, d));
        for i in 0..d {
            x[[2 * i, i]] = scale;
            x[[2 * i + 1, i]] = -scale;
        }
        let m = pca_fit(&toy(x, vec![0; n]), d).unwrap();
        for v in m.explained_variance.iter() {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn pca_matches_matrix_arithmetic() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = Array2::from_shape_fn((30, 5), |_| rng.random_range(-1.0..1.0));
        let ds = toy(x.clone(), vec![0; 30]);
        let m = pca_fit(&ds, 2).unwrap();
        let z = m.transform(&ds).unwrap();
        for i in 0..30 {
            for c in 0..2 {
                let mut acc = 0.0;
                for j in 0..5 {
                    acc += (x[[i, j]] - m.mean[j]) * m.basis[[j, c]];
                }
                assert!((acc - z.features[[i, c]]).abs() < 1e-12);
            }
        }
        let btb = m.basis.t().dot(&m.basis);
        assert!(linalg::max_abs((&btb - &Array2::<f64>::eye(2)).view()) <= 1e-8);
        assert!(m.explained_variance[0] >= m.explained_variance[1]);
    }

    #[test]
    fn pca_argument_errors() {
        let ds = toy(Array2::zeros((3, 2)), vec![0, 0, 1]);
        assert!(pca_fit(&ds, 0).is_err());
        assert!(pca_fit(&ds, 3).is_err());
        let m = pca_fit(
            &toy(array![[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]], vec![0, 1, 0]),
            1,
        )
        .unwrap();
        assert!(matches!(
            m.transform(&toy(Array2::zeros((1, 3)), vec![0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pca_text_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((12, 4), |_| rng.random_range(-1.0..1.0));
        let m = pca_fit(&toy(x, vec![0; 12]), 3).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("4 3\n"));
        let back = PcaModel::from_text(&text).unwrap();
        assert_eq!(back.mean, m.mean);
        assert_eq!(back.basis, m.basis);
    }

    #[test]
    fn kfold_singletons_and_determinism() {
        let ds = toy(Array2::zeros((10, 1)), (0..10).map(|i| i % 2).collect());
        let s = kfold_split(&ds, 10, 1).unwrap();
        assert!(s.fold_sizes().iter().all(|&c| c == 1));
        assert_eq!(s, kfold_split(&ds, 10, 1).unwrap());
        assert!(kfold_split(&ds, 11, 1).is_err());
        assert!(kfold_split(&ds, 1, 1).is_err());
    }

    #[test]
    fn kfold_stratifies_balanced_classes() {
        let ds = toy(
            Array2::zeros((100, 1)),
            (0..100).map(|i| (i % 2) as Label).collect(),
        );
        let s = kfold_split(&ds, 10, 42).unwrap();
        assert!(s.stratified);
        let mut counts = [[0usize; 2]; 10];
        for (i, &f) in s.assignments.iter().enumerate() {
            counts[f][ds.labels[i] as usize] += 1;
        }
        assert!(counts.iter().all(|c| *c == [5, 5]));
    }

    #[test]
    fn kfold_small_class_falls_back_to_plain() {
        let mut labels = vec![0; 20];
        labels[0] = 1;
        let ds = toy(Array2::zeros((20, 1)), labels);
        let s = kfold_split(&ds, 5, 0).unwrap();
        assert!(!s.stratified);
        let sizes = s.fold_sizes();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}
