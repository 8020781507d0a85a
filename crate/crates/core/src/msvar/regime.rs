use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::msvar::spec::ValidatedModel;

/// Largest number of regime paths a single enumeration may produce.
pub const MAX_PATHS: u128 = 1_000_000;

/// Paths whose chain probability falls below this are dropped; their total
/// mass is reported as the truncation bound.
pub const PRUNE_BELOW: f64 = 1e-15;

/// Regime sequence over the steps `start..=end` (1-based, regimes 0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimePath {
    pub start: usize,
    pub end: usize,
    pub states: Vec<usize>,
    pub chain_prob: f64,
}

impl RegimePath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Regime at absolute step `m`.
    pub fn at(&self, m: usize) -> usize {
        self.states[m - self.start]
    }

    /// Builds a path and its chain probability given the regime before `start`.
    pub fn from_states(
        model: &ValidatedModel,
        prev: Option<usize>,
        start: usize,
        states: Vec<usize>,
    ) -> Result<Self> {
        let mut prob = 1.0;
        let mut last = prev;
        for &s in &states {
            if s >= model.regime_count() {
                return Err(Error::InvalidArgument(format!("regime {s} does not exist")));
            }
            prob *= model.step_prob(last, s);
            last = Some(s);
        }
        Ok(RegimePath {
            start,
            end: start + states.len() - 1,
            states,
            chain_prob: prob,
        })
    }
}

/// All regime paths over a window with their probabilities.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub paths: Vec<RegimePath>,
    /// Probability mass of the pruned paths.
    pub truncated_mass: f64,
}

/// Enumerates every regime path over `start..=end` given the regime at
/// `start − 1` (`None` means the chain starts at `start = 1`).
pub fn enumerate_paths(
    model: &ValidatedModel,
    prev: Option<usize>,
    start: usize,
    end: usize,
) -> Result<PathSet> {
    if start > end {
        return Ok(PathSet {
            paths: vec![RegimePath {
                start,
                end: start - 1,
                states: Vec::new(),
                chain_prob: 1.0,
            }],
            truncated_mass: 0.0,
        });
    }
    let len = (end - start + 1) as u32;
    let count = (model.regime_count() as u128)
        .checked_pow(len)
        .unwrap_or(u128::MAX);
    if count > MAX_PATHS {
        return Err(Error::PathExplosion {
            paths: count,
            limit: MAX_PATHS,
        });
    }
    let mut out = PathSet {
        paths: Vec::new(),
        truncated_mass: 0.0,
    };
    let mut states = Vec::with_capacity(len as usize);
    walk(model, prev, start, len as usize, 1.0, &mut states, &mut out);
    Ok(out)
}

fn walk(
    model: &ValidatedModel,
    last: Option<usize>,
    start: usize,
    len: usize,
    prob: f64,
    states: &mut Vec<usize>,
    out: &mut PathSet,
) {
    if states.len() == len {
        out.paths.push(RegimePath {
            start,
            end: start + len - 1,
            states: states.clone(),
            chain_prob: prob,
        });
        return;
    }
    for s in 0..model.regime_count() {
        let q = prob * model.step_prob(last, s);
        if q == 0.0 {
            continue;
        }
        if q < PRUNE_BELOW {
            out.truncated_mass += q;
            continue;
        }
        states.push(s);
        walk(model, Some(s), start, len, q, states, out);
        states.pop();
    }
}

/// Information available at time `t`: observed values `y₁..y_t` and, when the
/// regimes are observed too, `s₁..s_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub t: usize,
    pub observed: Vec<DVector<f64>>,
    pub regimes: Option<Vec<usize>>,
}

impl MarketState {
    pub fn initial() -> Self {
        MarketState {
            t: 0,
            observed: Vec::new(),
            regimes: Some(Vec::new()),
        }
    }

    pub fn new(observed: Vec<DVector<f64>>, regimes: Option<Vec<usize>>) -> Result<Self> {
        if let Some(r) = &regimes {
            if r.len() != observed.len() {
                return Err(Error::DimensionMismatch(format!(
                    "{} observations but {} regimes",
                    observed.len(),
                    r.len()
                )));
            }
        }
        Ok(MarketState {
            t: observed.len(),
            observed,
            regimes,
        })
    }

    /// Checks dimensions against a model.
    pub fn check(&self, model: &ValidatedModel) -> Result<()> {
        if self.t > model.horizon() {
            return Err(Error::InvalidArgument(format!(
                "time {} is beyond the horizon {}",
                self.t,
                model.horizon()
            )));
        }
        if self.observed.iter().any(|y| y.len() != model.n()) {
            return Err(Error::DimensionMismatch(format!(
                "observations must have length {}",
                model.n()
            )));
        }
        if let Some(r) = &self.regimes {
            if r.iter().any(|&s| s >= model.regime_count()) {
                return Err(Error::InvalidArgument(
                    "observed regime out of range".into(),
                ));
            }
        }
        Ok(())
    }

    /// `y_j` for `j ≤ t`, reaching into the presample for `j ≤ 0`.
    pub fn y<'a>(&'a self, model: &'a ValidatedModel, j: isize) -> &'a DVector<f64> {
        if j >= 1 {
            &self.observed[j as usize - 1]
        } else {
            &model.spec().presample_y[(-j) as usize]
        }
    }

    /// Log spot-rate coordinates `e₁ᵀy_j` for `j = 0..=t`.
    pub fn rate_history(&self, model: &ValidatedModel) -> Vec<f64> {
        (0..=self.t as isize).map(|j| self.y(model, j)[0]).collect()
    }

    /// Truncates the state to time `t' ≤ t`.
    pub fn prefix(&self, t: usize) -> MarketState {
        MarketState {
            t,
            observed: self.observed[..t].to_vec(),
            regimes: self.regimes.as_ref().map(|r| r[..t].to_vec()),
        }
    }
}
