use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::msvar::regime::{MarketState, RegimePath};
use crate::msvar::spec::{CovarianceModel, MeasureMode, ValidatedModel};
use crate::numerics::{cholesky_lower, unvech, vech};

/// Generator for path `stream` of the ensemble keyed by `seed`. Streams are
/// independent, so paths can be produced in any order or in parallel.
pub fn path_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Random inputs for steps `t+1..T`: one uniform for the regime draw and one
/// standard normal vector per step.
#[derive(Debug, Clone)]
pub struct StepDraws {
    pub uniforms: Vec<f64>,
    pub normals: Vec<DVector<f64>>,
}

impl StepDraws {
    pub fn sample<R: Rng>(rng: &mut R, steps: usize, n: usize) -> Self {
        let mut uniforms = Vec::with_capacity(steps);
        let mut normals = Vec::with_capacity(steps);
        for _ in 0..steps {
            uniforms.push(rng.random::<f64>());
            normals.push(DVector::from_fn(n, |_, _| rng.sample(StandardNormal)));
        }
        StepDraws { uniforms, normals }
    }
}

/// A full realization `s₁..s_T`, `y₁..y_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedPath {
    pub regimes: Vec<usize>,
    pub ys: Vec<DVector<f64>>,
}

impl SimulatedPath {
    /// `r̃_m = e₁ᵀy_{m−1}`.
    pub fn log_rate(&self, model: &ValidatedModel, m: usize) -> f64 {
        if m >= 2 {
            self.ys[m - 2][0]
        } else {
            model.spec().presample_y[0][0]
        }
    }

    /// `D_m = exp(−Σ_{j≤m} r̃_j)`.
    pub fn discount(&self, model: &ValidatedModel, m: usize) -> f64 {
        (-(1..=m).map(|j| self.log_rate(model, j)).sum::<f64>()).exp()
    }

    /// Asset prices `x_m = exp(M₂y_m)`; `m = 0` reads the presample.
    pub fn prices(&self, model: &ValidatedModel, m: usize) -> DVector<f64> {
        let y = if m == 0 {
            &model.spec().presample_y[0]
        } else {
            &self.ys[m - 1]
        };
        y.rows(model.n_z(), model.n_x()).map(f64::exp)
    }
}

/// Tracks `Σ_m` along a path, stepping the GARCH recursion when needed.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    history: Vec<DVector<f64>>,
}

impl CovarianceState {
    pub fn new(model: &ValidatedModel) -> Self {
        let history = match &model.spec().covariance {
            CovarianceModel::ConstantPerRegime(_) => Vec::new(),
            CovarianceModel::VechGarch { presample, .. } => {
                presample.iter().rev().map(vech).collect()
            }
        };
        CovarianceState { history }
    }

    /// Cholesky factor of `Σ_m` for regime `s` at the next step, and the
    /// diagonal of `Σ_m`.
    pub fn advance(
        &mut self,
        model: &ValidatedModel,
        s: usize,
    ) -> Result<(DMatrix<f64>, DVector<f64>)> {
        match &model.spec().covariance {
            CovarianceModel::ConstantPerRegime(sig) => {
                let l = model.constant_chol(s).expect("validated").clone();
                Ok((l, sig[s].diagonal()))
            }
            CovarianceModel::VechGarch {
                intercept, lags, ..
            } => {
                let mut v = intercept[s].clone();
                let len = self.history.len();
                for (j, b) in lags[s].iter().enumerate() {
                    v += b * &self.history[len - 1 - j];
                }
                let sigma = unvech(&v)?;
                let l = cholesky_lower(&sigma)?;
                self.history.push(v);
                Ok((l, sigma.diagonal()))
            }
        }
    }
}

/// Draws the next regime from the row of `prev` using the uniform `u`.
pub fn next_regime(model: &ValidatedModel, prev: Option<usize>, u: f64) -> usize {
    let k = model.regime_count();
    let mut acc = 0.0;
    for s in 0..k {
        acc += model.step_prob(prev, s);
        if u < acc {
            return s;
        }
    }
    (0..k)
        .rev()
        .find(|&s| model.step_prob(prev, s) > 0.0)
        .unwrap_or(k - 1)
}

/// Conditional mean of `y_m` given regime `s` and the lags, written directly
/// from the model: `Π(s)𝖸_{m−1}` and, under the risk-neutral measure,
/// the kernel `θ*_{m−1} = M₂(y_{m−1} − Π(s)𝖸_{m−1}) + 1·r̃_m` on the asset rows
/// minus `½ diag Σ_m` on every row.
pub fn one_step_mean(
    model: &ValidatedModel,
    mode: MeasureMode,
    s: usize,
    m: usize,
    lagged: &[&DVector<f64>],
    sigma_diag: &DVector<f64>,
) -> DVector<f64> {
    let mut mean = model.intercept(s) * model.exog(m);
    for (i, a) in model.spec().regimes[s].lags.iter().enumerate() {
        mean += a * lagged[i];
    }
    if mode == MeasureMode::RiskNeutral {
        let prev = lagged[0];
        for r in model.n_z()..model.n() {
            let theta = prev[r] - mean[r] + prev[0];
            mean[r] += theta;
        }
        mean -= sigma_diag * 0.5;
    }
    mean
}

/// Continues `state` to the horizon under `mode`. Unknown regimes of `state`
/// must be supplied in `past_regimes`. `sign = −1` gives the antithetic path.
pub fn realize(
    model: &ValidatedModel,
    mode: MeasureMode,
    state: &MarketState,
    past_regimes: &[usize],
    draws: &StepDraws,
    sign: f64,
) -> Result<SimulatedPath> {
    let t = state.t;
    let horizon = model.horizon();
    if past_regimes.len() != t {
        return Err(Error::DimensionMismatch(format!(
            "need {t} past regimes, got {}",
            past_regimes.len()
        )));
    }
    if draws.uniforms.len() != horizon - t {
        return Err(Error::DimensionMismatch(
            "draws do not cover the window".into(),
        ));
    }
    let mut cov = CovarianceState::new(model);
    for &s in past_regimes {
        cov.advance(model, s)?;
    }
    let lags = model.effective_lags(mode);
    let mut regimes = past_regimes.to_vec();
    let mut ys = state.observed.clone();
    for (k, m) in (t + 1..=horizon).enumerate() {
        let s = next_regime(model, regimes.last().copied(), draws.uniforms[k]);
        let (l, diag) = cov.advance(model, s)?;
        let lagged: Vec<&DVector<f64>> = (1..=lags)
            .map(|i| {
                let j = m as isize - i as isize;
                if j >= 1 {
                    &ys[j as usize - 1]
                } else {
                    &model.spec().presample_y[(-j) as usize]
                }
            })
            .collect();
        let mean = one_step_mean(model, mode, s, m, &lagged, &diag);
        let y = mean + l * (&draws.normals[k] * sign);
        regimes.push(s);
        ys.push(y);
    }
    Ok(SimulatedPath { regimes, ys })
}

/// Physical-measure simulation of `y₁..y_T` from the presample.
pub fn simulate_physical(
    model: &ValidatedModel,
    seed: u64,
) -> Result<(RegimePath, Vec<DVector<f64>>)> {
    let mut rng = path_rng(seed, 0);
    let draws = StepDraws::sample(&mut rng, model.horizon(), model.n());
    let path = realize(
        model,
        MeasureMode::Physical,
        &MarketState::initial(),
        &[],
        &draws,
        1.0,
    )?;
    let regimes = RegimePath::from_states(model, None, 1, path.regimes)?;
    Ok((regimes, path.ys))
}
