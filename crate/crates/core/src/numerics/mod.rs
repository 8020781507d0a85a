//! Linear algebra and Gaussian probability substrate.

mod linalg;
mod mvn;
mod normal;

pub use linalg::{
    cholesky_lower, cholesky_regularized, cholesky_solve, solve_lower, triangular_side, unvech,
    vech, BlockLowerSystem, SymMatrix, REGULARIZATION,
};
pub use mvn::{bvn_cdf, bvn_upper, mvn_cdf, MvnResult, OrthantQuery, DEFAULT_MVN_TOL, MAX_MVN_DIM};
pub use normal::{norm_cdf, norm_inv, norm_pdf};
