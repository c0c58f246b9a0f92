mod common;

use common::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;

use metric_svm::constraints::{Doublet, Triplet};
use metric_svm::dataset::Standardizer;
use metric_svm::kernels::{kernel_doublet, kernel_triplet};
use metric_svm::linalg::symmetric_eigen;
use metric_svm::{kfold_split, psd_project, Dataset, MetricMatrix};

fn vec_strategy(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-3.0f64..3.0, d)
}

fn doublet(diff: Vec<f64>) -> Doublet {
    Doublet {
        first: 0,
        second: 1,
        label_h: 1,
        diff,
    }
}

fn sym_matrix(d: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-5.0f64..5.0, d * d).prop_map(move |v| {
        let a = Array2::from_shape_vec((d, d), v).unwrap();
        (&a + &a.t()) / 2.0
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn doublet_kernel_is_symmetric_and_nonnegative(a in vec_strategy(4), b in vec_strategy(4)) {
        let (x, y) = (doublet(a.clone()), doublet(b.clone()));
        let k = kernel_doublet(&x, &y).unwrap();
        prop_assert_eq!(k, kernel_doublet(&y, &x).unwrap());
        prop_assert!(k >= 0.0);
        let explicit = doublet_kernel_explicit(&a, &b);
        prop_assert!((k - explicit).abs() <= 1e-9 * (1.0 + explicit.abs()));
    }

    #[test]
    fn triplet_kernel_is_symmetric(u1 in vec_strategy(3), v1 in vec_strategy(3), u2 in vec_strategy(3), v2 in vec_strategy(3)) {
        let t1 = Triplet { anchor: 0, similar: 1, dissimilar: 2, u: u1, v: v1 };
        let t2 = Triplet { anchor: 0, similar: 1, dissimilar: 2, u: u2, v: v2 };
        prop_assert_eq!(kernel_triplet(&t1, &t2).unwrap(), kernel_triplet(&t2, &t1).unwrap());
    }

    #[test]
    fn projection_is_idempotent_and_psd(m in sym_matrix(4)) {
        let p = psd_project(&MetricMatrix::new(m).unwrap()).unwrap();
        let e = symmetric_eigen(p.m.view(), 100).unwrap();
        prop_assert!(e.eigenvalues.iter().all(|&l| l >= -1e-9));
        let pp = psd_project(&p).unwrap();
        let diff = (&pp.m - &p.m).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        prop_assert!(diff <= 1e-9);
    }

    #[test]
    fn projection_is_nearest_psd_in_three_dimensions(m in sym_matrix(3)) {
        let p = psd_project(&MetricMatrix::new(m.clone()).unwrap()).unwrap();
        let pn = to_nested(&p.m);
        let resid: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| p.m[[i, j]] - m[[i, j]]).collect()).collect();
        // X = P(A) iff X ⪰ 0, X − A ⪰ 0 and ⟨X, X − A⟩ = 0
        prop_assert!(psd_by_minors(&pn, 1e-6));
        prop_assert!(psd_by_minors(&resid, 1e-6));
        prop_assert!(trace_product(&pn, &resid).abs() <= 1e-6);
        let ev = eig3_sym([[m[[0, 0]], m[[0, 1]], m[[0, 2]]], [m[[1, 0]], m[[1, 1]], m[[1, 2]]], [m[[2, 0]], m[[2, 1]], m[[2, 2]]]]);
        let dist: f64 = ev.iter().filter(|&&l| l < 0.0).map(|l| l * l).sum::<f64>().sqrt();
        let got: f64 = resid.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
        prop_assert!((dist - got).abs() <= 1e-6);
    }

    #[test]
    fn standardizing_twice_changes_nothing(v in prop::collection::vec(-50.0f64..50.0, 30)) {
        let data = Dataset::new("p", Array2::from_shape_vec((10, 3), v).unwrap(), vec![0; 10]).unwrap();
        let once = Standardizer::fit(&data).unwrap().apply(&data).unwrap();
        let twice = Standardizer::fit(&once).unwrap().apply(&once).unwrap();
        let diff = (&once.features - &twice.features).iter().fold(0.0f64, |a, x| a.max(x.abs()));
        prop_assert!(diff <= 1e-9);
    }

    #[test]
    fn folds_partition_and_balance(n in 20usize..80, k in 2usize..8, seed in 0u64..1000) {
        let data = random_cloud(n, 2, 2, seed);
        let split = kfold_split(&data, k, seed).unwrap();
        let sizes = split.fold_sizes();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        for f in 0..k {
            let (tr, te) = split.fold_indices(f);
            prop_assert_eq!(tr.len() + te.len(), n);
        }
    }

    #[test]
    fn metric_text_round_trips(m in sym_matrix(3)) {
        let metric = MetricMatrix::new(m).unwrap();
        let back = MetricMatrix::from_text(&metric.to_text()).unwrap();
        prop_assert_eq!(back.m, metric.m);
    }

    #[test]
    fn mahalanobis_with_identity_is_squared_euclidean(x in vec_strategy(5), y in vec_strategy(5)) {
        let d = metric_svm::mahalanobis(&MetricMatrix::identity(5), Array1::from(x.clone()).view(), Array1::from(y.clone()).view()).unwrap();
        let e: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
        prop_assert!((d - e).abs() <= 1e-12 * (1.0 + e));
    }
}
