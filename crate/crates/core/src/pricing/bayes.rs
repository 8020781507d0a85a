use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::msvar::{CovarianceModel, RegimeParams, ValidatedModel};

/// One posterior draw of the coefficients, covariances and transition matrix.
#[derive(Debug, Clone)]
pub struct ParameterDraw {
    pub regimes: Vec<RegimeParams>,
    pub covariance: CovarianceModel,
    pub transition: DMatrix<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PosteriorAverage {
    pub mean: f64,
    /// Sample standard deviation across draws (0 for a single draw).
    pub dispersion: f64,
    pub draws: usize,
}

/// Averages a conditional price over parameter draws.
pub fn bayesian_average<F>(
    model: &ValidatedModel,
    draws: &[ParameterDraw],
    pricer: F,
) -> Result<PosteriorAverage>
where
    F: Fn(&ValidatedModel) -> Result<f64> + Sync,
{
    if draws.is_empty() {
        return Err(Error::InvalidArgument("no parameter draws".into()));
    }
    let mut values: Vec<f64> = draws
        .par_iter()
        .map(|d| {
            let m = model.with_parameters(
                d.regimes.clone(),
                d.covariance.clone(),
                d.transition.clone(),
            )?;
            pricer(&m)
        })
        .collect::<Result<_>>()?;
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let dispersion = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(PosteriorAverage {
        mean,
        dispersion,
        draws: values.len(),
    })
}
