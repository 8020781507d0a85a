use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::msvar::{
    build_stacked_system, conditional_law, enumerate_paths, MarketState, MeasureMode, RegimePath,
    ValidatedModel,
};
use crate::numerics::{cholesky_lower, solve_lower};

/// Posterior probabilities of the regime paths `s₁..s_t` given `y₁..y_t`.
#[derive(Debug, Clone)]
pub struct PosteriorWeights {
    pub paths: Vec<RegimePath>,
    pub weights: Vec<f64>,
    /// Prior mass of the paths dropped during enumeration.
    pub truncated_mass: f64,
}

impl PosteriorWeights {
    pub fn iter(&self) -> impl Iterator<Item = (&RegimePath, f64)> {
        self.paths.iter().zip(self.weights.iter().copied())
    }
}

/// Weights `∝ p_{s₁}∏p_{s_{m−1}s_m} · f(ȳ_t | s̄_t)` where `f` is the stacked
/// Gaussian density of the observations under `mode`.
pub fn regime_posterior(
    model: &ValidatedModel,
    state: &MarketState,
    mode: MeasureMode,
) -> Result<PosteriorWeights> {
    state.check(model)?;
    let t = state.t;
    let set = enumerate_paths(model, None, 1, t)?;
    if t == 0 {
        return Ok(PosteriorWeights {
            weights: vec![1.0],
            paths: set.paths,
            truncated_mass: 0.0,
        });
    }
    let n = model.n();
    let mut obs = DVector::zeros(n * t);
    for (j, y) in state.observed.iter().enumerate() {
        obs.rows_mut(j * n, n).copy_from(y);
    }
    let mut logw = Vec::with_capacity(set.paths.len());
    for path in &set.paths {
        let sys = build_stacked_system(model, &[], path, mode)?;
        let law = conditional_law(&sys, &[])?;
        let l = cholesky_lower(&law.cov)?;
        let z = solve_lower(&l, &(&obs - &law.mean));
        let log_det: f64 = l.diagonal().iter().map(|d| d.ln()).sum();
        let log_dens =
            -0.5 * z.dot(&z) - log_det - 0.5 * (n * t) as f64 * (2.0 * std::f64::consts::PI).ln();
        logw.push(path.chain_prob.ln() + log_dens);
    }
    let top = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return Err(Error::InvalidArgument(
            "observations have zero likelihood under every regime path".into(),
        ));
    }
    let raw: Vec<f64> = logw.iter().map(|w| (w - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(PosteriorWeights {
        weights: raw.iter().map(|w| w / total).collect(),
        paths: set.paths,
        truncated_mass: set.truncated_mass,
    })
}
