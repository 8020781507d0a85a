use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::geometry::{event_geometry, EventGeometry, EventKind, MaxClaim};
use crate::error::{Error, Result};
use crate::measures::{
    discounted_factor_expectation, project_law, regime_posterior, shifted_law, Event,
};
use crate::msvar::{
    enumerate_paths, law_for_path, GaussianLaw, MarketState, MeasureMode, RegimePath,
    ValidatedModel,
};

/// Conditional price with its numerical audit trail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    pub value: f64,
    pub path_count: usize,
    /// Probability mass of regime paths pruned during enumeration.
    pub truncation_bound: f64,
    pub mvn_tol: f64,
}

impl PriceResult {
    pub fn zero(mvn_tol: f64) -> Self {
        PriceResult {
            value: 0.0,
            path_count: 0,
            truncation_bound: 0.0,
            mvn_tol,
        }
    }

    /// `Σ cᵢ·partᵢ`, with path counts and truncation bounds added.
    pub fn combine(mvn_tol: f64, parts: &[(f64, PriceResult)]) -> Self {
        parts
            .iter()
            .fold(PriceResult::zero(mvn_tol), |acc, (c, p)| PriceResult {
                value: acc.value + c * p.value,
                path_count: acc.path_count + p.path_count,
                truncation_bound: acc.truncation_bound + p.truncation_bound,
                mvn_tol,
            })
    }
}

/// One future regime path with the risk-neutral law of `y_{t+1..k}` on it.
pub(crate) struct Scenario<'a> {
    pub past: &'a [usize],
    pub path: &'a RegimePath,
    pub law: GaussianLaw,
}

/// `Σ weight · f(scenario)` over regime paths `s_{t+1..k}`. With observed
/// regimes this conditions on `𝒢_t`; otherwise the past regimes are averaged
/// under their posterior given `ℱ_t`. Terms are summed in enumeration order.
pub(crate) fn regime_sum<F>(
    model: &ValidatedModel,
    state: &MarketState,
    k: usize,
    mvn_tol: f64,
    f: F,
) -> Result<PriceResult>
where
    F: Fn(&Scenario) -> Result<f64> + Sync,
{
    state.check(model)?;
    let t = state.t;
    if k <= t || k > model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "maturity {k} must lie in ({t}, {}]",
            model.horizon()
        )));
    }
    let pasts: Vec<(Vec<usize>, f64)> = match &state.regimes {
        Some(r) => vec![(r.clone(), 1.0)],
        None => {
            let post = regime_posterior(model, state, MeasureMode::RiskNeutral)?;
            post.iter()
                .filter(|(_, w)| *w > 0.0)
                .map(|(p, w)| (p.states.clone(), w))
                .collect()
        }
    };
    let mut out = PriceResult::zero(mvn_tol);
    for (past, w) in &pasts {
        let set = enumerate_paths(model, past.last().copied(), t + 1, k)?;
        let terms: Vec<f64> = set
            .paths
            .par_iter()
            .map(|path| {
                let law = law_for_path(model, state, past, path, MeasureMode::RiskNeutral)?;
                Ok(path.chain_prob * f(&Scenario { past, path, law })?)
            })
            .collect::<Result<_>>()?;
        out.value += w * terms.iter().sum::<f64>();
        out.path_count += set.paths.len();
        out.truncation_bound += w * set.truncated_mass;
    }
    Ok(out)
}

/// Current asset prices `x_t`.
pub fn current_prices(model: &ValidatedModel, state: &MarketState) -> DVector<f64> {
    state
        .y(model, state.t as isize)
        .rows(model.n_z(), model.n_x())
        .map(f64::exp)
}

/// `P[L x̃_k ≤ b]` under `law`.
pub(crate) fn event_prob(
    law: &GaussianLaw,
    geom: &EventGeometry,
    k: usize,
    tol: f64,
) -> Result<f64> {
    if geom.l.nrows() == 0 {
        return Ok(1.0);
    }
    if geom.b.iter().any(|b| *b == f64::NEG_INFINITY) {
        return Ok(0.0);
    }
    Ok(project_law(law, &geom.l, k)?.cdf(&geom.b, tol)?.prob)
}

/// Per-path legs `(Σᵢ wᵢxᵢ,ₜ·P^{i,k}(Eᵢ), Σᵢ e^{[a]}·P^{D,k}(Eᵢ))` for
/// events of the given kind.
pub(crate) fn legs(
    sc: &Scenario,
    rates: &[f64],
    x_t: &DVector<f64>,
    claim: &MaxClaim,
    kind: EventKind,
    tol: f64,
) -> Result<(f64, f64)> {
    let k = claim.k;
    let t = sc.law.t;
    let disc = discounted_factor_expectation(&sc.law, rates, t, k, &Event::FullSpace, tol)?;
    let (mut asset, mut bond) = (0.0, 0.0);
    for i in 0..claim.weights.len() {
        let geom = event_geometry(claim, i, kind)?;
        let fwd = shifted_law(&sc.law, &[(i, k)])?;
        asset += claim.weights[i] * x_t[i] * event_prob(&fwd, &geom, k, tol)?;
        if kind != EventKind::Forward {
            bond += disc.prefactor * event_prob(&disc.law, &geom, k, tol)?;
        }
    }
    Ok((asset, bond))
}

fn check_claim(model: &ValidatedModel, claim: &MaxClaim) -> Result<()> {
    claim.check(Some(model.n_x()))
}

/// `P(t, k) = Ẽ[D_k/D_t | ℋ_t]`.
pub fn zcb_price(
    model: &ValidatedModel,
    state: &MarketState,
    k: usize,
    mvn_tol: f64,
) -> Result<PriceResult> {
    let rates = state.rate_history(model);
    regime_sum(model, state, k, mvn_tol, |sc| {
        Ok(
            discounted_factor_expectation(&sc.law, &rates, state.t, k, &Event::FullSpace, mvn_tol)?
                .value(),
        )
    })
}

/// `Ẽ[(D_k/D_t)(M_k − G_k)⁺ | ℋ_t]`.
pub fn call_on_max(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    mvn_tol: f64,
) -> Result<PriceResult> {
    check_claim(model, claim)?;
    if claim.guarantee == 0.0 {
        return Err(Error::GuaranteeZeroInCall);
    }
    let rates = state.rate_history(model);
    let x_t = current_prices(model, state);
    regime_sum(model, state, claim.k, mvn_tol, |sc| {
        let (asset, bond) = legs(sc, &rates, &x_t, claim, EventKind::Call, mvn_tol)?;
        Ok(asset - claim.guarantee * bond)
    })
}

/// `Ẽ[(D_k/D_t)(G_k − M_k)⁺ | ℋ_t]`.
pub fn put_on_max(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    mvn_tol: f64,
) -> Result<PriceResult> {
    check_claim(model, claim)?;
    if claim.guarantee == 0.0 {
        state.check(model)?;
        return Ok(PriceResult::zero(mvn_tol));
    }
    let rates = state.rate_history(model);
    let x_t = current_prices(model, state);
    regime_sum(model, state, claim.k, mvn_tol, |sc| {
        let (asset, bond) = legs(sc, &rates, &x_t, claim, EventKind::Put, mvn_tol)?;
        Ok(claim.guarantee * bond - asset)
    })
}

/// `Ẽ[(D_k/D_t)M_k | ℋ_t]`; the guarantee is ignored.
pub fn forward_max(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    mvn_tol: f64,
) -> Result<PriceResult> {
    check_claim(model, claim)?;
    let rates = state.rate_history(model);
    let x_t = current_prices(model, state);
    regime_sum(model, state, claim.k, mvn_tol, |sc| {
        Ok(legs(sc, &rates, &x_t, claim, EventKind::Forward, mvn_tol)?.0)
    })
}

/// Call on the maximum, falling back to the forward when `G_k = 0`.
pub(crate) fn call_or_forward(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    mvn_tol: f64,
) -> Result<PriceResult> {
    if claim.guarantee == 0.0 {
        forward_max(model, state, claim, mvn_tol)
    } else {
        call_on_max(model, state, claim, mvn_tol)
    }
}
