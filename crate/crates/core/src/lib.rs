//! Metric learning as kernel classification over sample pairs and triplets.
//!
//! A Mahalanobis matrix `M` is learned by training an SVM (doublet or
//! triplet) or a kernel logistic regression on degree-2 polynomial kernels
//! between constraint objects, then rebuilding `M` from the dual weights.

pub mod cli;
pub mod constraints;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod klr;
pub mod linalg;
pub mod metric;
pub mod solver;

pub use constraints::{build_doublets, build_triplets, Doublet, DoubletSet, Triplet, TripletSet};
pub use dataset::{kfold_split, load_csv, load_libsvm, CvSplit, Dataset};
pub use error::{Error, Result};
pub use kernels::{gram, GramOptions, GramView, PairKernel};
pub use klr::{fit_doublet_klr, KlrConfig, KlrSolution};
pub use metric::{mahalanobis, psd_project, MetricMatrix};
pub use solver::{solve_doublet_svm, solve_triplet_svm, DualSolution, SolverConfig};
