//! Reference models shared by unit tests.

use nalgebra::{DMatrix, DVector};

pub(crate) use crate::msvar::r2_like;
use crate::msvar::{validate_spec, CovarianceModel, ModelSpec, RegimeParams, ValidatedModel};
use crate::numerics::SymMatrix;

/// One regime, a near-deterministic rate `r` and one asset with log-return
/// variance `sigma2` per step; spot `s0`.
pub(crate) fn r1_like(r: f64, sigma2: f64, s0: f64, horizon: usize) -> ValidatedModel {
    let spec = ModelSpec {
        n_z: 1,
        n_x: 1,
        lags: 1,
        regimes: vec![RegimeParams {
            intercept: DMatrix::from_row_slice(2, 1, &[r, 0.0]),
            lags: vec![DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])],
        }],
        transition: DMatrix::from_element(1, 1, 1.0),
        initial_dist: DVector::from_element(1, 1.0),
        covariance: CovarianceModel::ConstantPerRegime(vec![SymMatrix::from_rows(&[
            vec![1e-14, 0.0],
            vec![0.0, sigma2],
        ])
        .unwrap()]),
        presample_y: vec![DVector::from_vec(vec![r, s0.ln()])],
        exog: vec![DVector::from_element(1, 1.0); horizon],
    };
    validate_spec(spec).unwrap()
}
