use std::io::Write;

use nalgebra::DVector;
use rand::Rng;
use rayon::prelude::*;

use super::stats::{McEstimate, Welford};
use crate::error::{Error, Result};
use crate::measures::regime_posterior;
use crate::msvar::{
    path_rng, realize, validate_spec, MarketState, MeasureMode, SimulatedPath, StepDraws,
    ValidatedModel,
};

/// Paths per work unit; statistics of units merge in index order.
pub const CHUNK: usize = 4096;

/// Risk-neutral continuations of a market state. Paths are generated on
/// demand from `(seed, path index)`, so memory stays bounded by the chunk
/// size.
#[derive(Debug, Clone)]
pub struct Ensemble {
    model: ValidatedModel,
    state: MarketState,
    /// Posterior over unobserved past regimes: paths and cumulative weights.
    pasts: Vec<(Vec<usize>, f64)>,
    pub seed: u64,
    pub n_paths: usize,
    pub antithetic: bool,
}

/// Builds an ensemble of `n_paths` continuations of `state` up to `horizon`.
/// Unobserved past regimes are drawn from their posterior.
pub fn simulate_risk_neutral(
    model: &ValidatedModel,
    state: &MarketState,
    horizon: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Ensemble> {
    state.check(model)?;
    if horizon < state.t || horizon > model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} must lie in {}..={}",
            state.t,
            model.horizon()
        )));
    }
    if n_paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let model = if horizon == model.horizon() {
        model.clone()
    } else {
        let mut spec = model.spec().clone();
        spec.exog.truncate(horizon);
        validate_spec(spec)?
    };
    let pasts = match &state.regimes {
        Some(r) => vec![(r.clone(), 1.0)],
        None => {
            let post = regime_posterior(&model, state, MeasureMode::RiskNeutral)?;
            let mut acc = 0.0;
            post.iter()
                .map(|(p, w)| {
                    acc += w;
                    (p.states.clone(), acc)
                })
                .collect()
        }
    };
    Ok(Ensemble {
        model,
        state: state.clone(),
        pasts,
        seed,
        n_paths,
        antithetic: false,
    })
}

impl Ensemble {
    /// Pairs each draw with its mirror image `−ε`.
    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn model(&self) -> &ValidatedModel {
        &self.model
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    /// Independent samples: paths, or antithetic pairs.
    pub fn samples(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }

    fn past(&self, u: f64) -> &[usize] {
        let i = self
            .pasts
            .iter()
            .position(|(_, c)| u < *c)
            .unwrap_or(self.pasts.len() - 1);
        &self.pasts[i].0
    }

    /// Paths of sample `j`: one, or an antithetic pair.
    pub fn sample_paths(&self, j: usize) -> Result<Vec<SimulatedPath>> {
        let mut rng = path_rng(self.seed, j as u64);
        let u: f64 = rng.random();
        let past = self.past(u).to_vec();
        let draws = StepDraws::sample(&mut rng, self.horizon() - self.state.t, self.model.n());
        let signs: &[f64] = if self.antithetic {
            &[1.0, -1.0]
        } else {
            &[1.0]
        };
        signs
            .iter()
            .map(|&sign| {
                realize(
                    &self.model,
                    MeasureMode::RiskNeutral,
                    &self.state,
                    &past,
                    &draws,
                    sign,
                )
            })
            .collect()
    }

    /// Materializes every path; meant for small ensembles.
    pub fn paths(&self) -> Result<Vec<SimulatedPath>> {
        let mut out = Vec::with_capacity(self.n_paths);
        for j in 0..self.samples() {
            out.extend(self.sample_paths(j)?);
        }
        out.truncate(self.n_paths);
        Ok(out)
    }

    /// CSV rows `path,step,regime,y1..yn` for steps `t+1..T`.
    pub fn write_csv<W: Write>(&self, out: W, max_paths: Option<usize>) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let n = self.model.n();
        let mut header = vec!["path".to_string(), "step".into(), "regime".into()];
        header.extend((1..=n).map(|c| format!("y{c}")));
        w.write_record(&header).map_err(csv_err)?;
        let limit = max_paths.unwrap_or(self.n_paths).min(self.n_paths);
        let mut written = 0;
        'outer: for j in 0..self.samples() {
            for p in self.sample_paths(j)? {
                if written == limit {
                    break 'outer;
                }
                for m in self.state.t + 1..=self.horizon() {
                    let mut rec = vec![
                        written.to_string(),
                        m.to_string(),
                        p.regimes[m - 1].to_string(),
                    ];
                    rec.extend(p.ys[m - 1].iter().map(|v| format!("{v:e}")));
                    w.write_record(&rec).map_err(csv_err)?;
                }
                written += 1;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// Read access to one simulated path, with discounting relative to `t`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub model: &'a ValidatedModel,
    pub t: usize,
    pub path: &'a SimulatedPath,
}

impl PathView<'_> {
    /// `D_m / D_t`.
    pub fn discount(&self, m: usize) -> f64 {
        self.path.discount(self.model, m) / self.path.discount(self.model, self.t)
    }

    /// `x_m`.
    pub fn prices(&self, m: usize) -> DVector<f64> {
        self.path.prices(self.model, m)
    }

    /// `X̄_m / D_t = (D_m/D_t)·x_m`.
    pub fn discounted_prices(&self, m: usize) -> DVector<f64> {
        self.prices(m) * self.discount(m)
    }

    /// Regime `s_m` (0-based).
    pub fn regime(&self, m: usize) -> usize {
        self.path.regimes[m - 1]
    }
}

/// Estimates of several path functionals on the same ensemble. The closure
/// writes one (already discounted) value per output.
pub fn mc_price_many<F>(ens: &Ensemble, outputs: usize, payoff: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&PathView, &mut [f64]) + Sync,
{
    let samples = ens.samples();
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Welford::default(); outputs];
            let mut buf = vec![0.0; outputs];
            let mut mean = vec![0.0; outputs];
            for j in c * CHUNK..((c + 1) * CHUNK).min(samples) {
                let paths = ens.sample_paths(j)?;
                mean.iter_mut().for_each(|v| *v = 0.0);
                for (q, p) in paths.iter().enumerate() {
                    let view = PathView {
                        model: &ens.model,
                        t: ens.state.t,
                        path: p,
                    };
                    payoff(&view, &mut buf);
                    if buf.iter().any(|v| !v.is_finite()) {
                        return Err(Error::NonFinitePayoff {
                            path: j * paths.len() + q,
                        });
                    }
                    for (m, b) in mean.iter_mut().zip(&buf) {
                        *m += b / paths.len() as f64;
                    }
                }
                for (a, m) in acc.iter_mut().zip(&mean) {
                    a.push(*m);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![Welford::default(); outputs];
    for part in &parts {
        for (t, p) in total.iter_mut().zip(part) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(|w| w.estimate(ens.n_paths)).collect())
}

/// Sample mean and standard error of a discounted path functional.
pub fn mc_price<F>(ens: &Ensemble, payoff: F) -> Result<McEstimate>
where
    F: Fn(&PathView) -> f64 + Sync,
{
    Ok(mc_price_many(ens, 1, |v, out| out[0] = payoff(v))?[0])
}
