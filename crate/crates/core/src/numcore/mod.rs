//! Dense linear algebra, the deterministic generator, singular decompositions
//! and the small numerically stable helpers the rest of the crate builds on.

mod matrix;
mod rng;
mod stats;
mod svd;

pub use matrix::Matrix;
pub use rng::Rng;
pub use stats::{
    finite_diff_grad, logsumexp, mean, pairwise_sum, pearson, softmax, spearman, std_dev,
};
pub use svd::{
    jacobi_svd, symmetric_eigen, top_right_singular, top_right_singular_with, FullSvd,
    SvdOptions, TopSingular,
};
