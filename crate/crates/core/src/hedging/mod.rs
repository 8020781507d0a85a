//! Locally risk-minimizing hedges of equity-linked life contracts.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::actuarial::LifeTable;
use crate::error::{Error, Result};
use crate::measures::{discounted_factor_expectation, shifted_law, Event};
use crate::msvar::{covariance_sequence, MarketState, ValidatedModel};
use crate::numerics::{cholesky_lower, cholesky_solve, SymMatrix};
use crate::pricing::{
    current_prices, event_geometry, event_prob, premium, regime_sum, EventKind, MaxClaim,
    PremiumOptions, ProductSpec, Scenario,
};

/// Holdings set up at `t`: `h` units of each asset and `h0` in cash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HedgePosition {
    pub t: usize,
    pub h: Vec<f64>,
    pub h0: f64,
    /// Contract value the portfolio matches.
    pub value: f64,
    /// `Ω` could not be factored and a pseudo-inverse was used.
    pub singular_omega: bool,
}

/// `Ω_{t+1}` and `Λ_{t+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBlock {
    pub omega: SymMatrix,
    pub lambda: DVector<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumInsuredKind {
    /// `Q̄ˢ_k = D_k(G_k − M_k)⁺`.
    Segregated,
    /// `Q̄ᵘ_k = D_k max(M_k, G_k)`.
    UnitLinked,
}

/// `D_t = exp(−Σ_{j≤t} r̃_j)`.
pub fn discount_at(model: &ValidatedModel, state: &MarketState) -> f64 {
    let rates = state.rate_history(model);
    (-rates[..state.t].iter().sum::<f64>()).exp()
}

/// `X̄_t = D_t x_t`.
pub fn discounted_prices(model: &ValidatedModel, state: &MarketState) -> DVector<f64> {
    current_prices(model, state) * discount_at(model, state)
}

/// Asset block of `Σ_{t+1}` on a scenario.
fn next_sigma(model: &ValidatedModel, sc: &Scenario) -> Result<DMatrix<f64>> {
    let sig = covariance_sequence(model, sc.past, sc.path)?;
    Ok(sig[0]
        .as_matrix()
        .view((model.n_z(), model.n_z()), (model.n_x(), model.n_x()))
        .into_owned())
}

fn check_asset(model: &ValidatedModel, i: usize) -> Result<()> {
    if i >= model.n_x() {
        return Err(Error::InvalidArgument(format!(
            "asset {i} out of range for {} assets",
            model.n_x()
        )));
    }
    Ok(())
}

/// `Ẽ[X̄ᵢ,ᵤ X̄ⱼ,ᵥ | ℋ_t] = X̄ᵢ,ₜX̄ⱼ,ₜ·Ẽ[exp Σ_{m=t+1}^{u∧v} σᵢⱼ,ₘ]`.
pub fn cross_moment(
    model: &ValidatedModel,
    state: &MarketState,
    i: usize,
    u: usize,
    j: usize,
    v: usize,
) -> Result<f64> {
    check_asset(model, i)?;
    check_asset(model, j)?;
    state.check(model)?;
    let t = state.t;
    if u < t || v < t {
        return Err(Error::InvalidArgument(format!(
            "times {u}, {v} precede the valuation step {t}"
        )));
    }
    let x = discounted_prices(model, state);
    let base = x[i] * x[j];
    let end = u.min(v);
    if end == t {
        return Ok(base);
    }
    let (n_z, tol) = (model.n_z(), 0.0);
    let e = regime_sum(model, state, end, tol, |sc| {
        let sig = covariance_sequence(model, sc.past, sc.path)?;
        Ok(sig.iter().map(|s| s[(n_z + i, n_z + j)]).sum::<f64>().exp())
    })?;
    Ok(base * e.value)
}

/// `Ω_{t+1} = Ẽ[ΔX̄_{t+1}ΔX̄ᵀ_{t+1} | ℋ_t]`.
pub fn omega(model: &ValidatedModel, state: &MarketState) -> Result<SymMatrix> {
    let n = model.n_x();
    let x = discounted_prices(model, state);
    let mut acc = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let e = regime_sum(model, state, state.t + 1, 0.0, |sc| {
                Ok(next_sigma(model, sc)?[(i, j)].exp_m1())
            })?;
            acc[(i, j)] = x[i] * x[j] * e.value;
            acc[(j, i)] = acc[(i, j)];
        }
    }
    Ok(SymMatrix::symmetrized(acc))
}

/// `Ẽ[Q̄_k X̄_{·,t+1} | ℋ_t]` for every asset.
pub fn r_vector(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    kind: SumInsuredKind,
    mvn_tol: f64,
) -> Result<DVector<f64>> {
    claim.check(Some(model.n_x()))?;
    let n = model.n_x();
    let t = state.t;
    let k = claim.k;
    let g = claim.guarantee;
    let rates = state.rate_history(model);
    let d_t = discount_at(model, state);
    let x = discounted_prices(model, state);
    let event = match (kind, g == 0.0) {
        (SumInsuredKind::Segregated, true) => {
            state.check(model)?;
            return Ok(DVector::zeros(n));
        }
        (SumInsuredKind::Segregated, false) => EventKind::Put,
        (SumInsuredKind::UnitLinked, false) => EventKind::Call,
        (SumInsuredKind::UnitLinked, true) => EventKind::Forward,
    };
    let geoms = (0..n)
        .map(|i| event_geometry(claim, i, event))
        .collect::<Result<Vec<_>>>()?;
    let mut out = DVector::zeros(n);
    for j in 0..n {
        let r = regime_sum(model, state, k, mvn_tol, |sc| {
            let sigma = next_sigma(model, sc)?;
            let mut pair_leg = 0.0;
            let mut bond_prob = 0.0;
            let fwd = shifted_law(&sc.law, &[(j, t + 1)])?;
            let de = discounted_factor_expectation(&fwd, &rates, t, k, &Event::FullSpace, mvn_tol)?;
            for (i, geom) in geoms.iter().enumerate() {
                let pair = shifted_law(&sc.law, &[(i, k), (j, t + 1)])?;
                pair_leg += claim.weights[i]
                    * x[i]
                    * x[j]
                    * sigma[(i, j)].exp()
                    * event_prob(&pair, geom, k, mvn_tol)?;
                if g > 0.0 {
                    bond_prob += event_prob(&de.law, geom, k, mvn_tol)?;
                }
            }
            let bond = g * d_t * x[j] * de.prefactor;
            Ok(match kind {
                SumInsuredKind::Segregated => bond * bond_prob - pair_leg,
                SumInsuredKind::UnitLinked => pair_leg - bond * (bond_prob - 1.0),
            })
        })?;
        out[j] = r.value;
    }
    Ok(out)
}

/// Component `j` of [`r_vector`].
pub fn sum_insured_cross_expectation(
    model: &ValidatedModel,
    state: &MarketState,
    claim: &MaxClaim,
    j: usize,
    kind: SumInsuredKind,
    mvn_tol: f64,
) -> Result<f64> {
    check_asset(model, j)?;
    Ok(r_vector(model, state, claim, kind, mvn_tol)?[j])
}

fn sum_insured_kind(product: &ProductSpec) -> SumInsuredKind {
    if product.kind.is_segregated() {
        SumInsuredKind::Segregated
    } else {
        SumInsuredKind::UnitLinked
    }
}

/// `Λ_{t+1} = Ẽ[H̄ X̄_{t+1} | ℱ_t] − V̄_t X̄_t`, with `V_t` the undiscounted
/// premium at `t`. The guarantee leg is always discounted here.
pub fn lambda_vector(
    product: &ProductSpec,
    model: &ValidatedModel,
    state: &MarketState,
    table: &LifeTable,
    opts: &PremiumOptions,
) -> Result<(DVector<f64>, f64)> {
    let opts = PremiumOptions {
        raw_guarantee_leg: false,
        ..opts.clone()
    };
    let value = premium(product, model, state, table, &opts)?.value;
    let n = model.n_x();
    if !product.alive {
        return Ok((DVector::zeros(n), 0.0));
    }
    let kind = sum_insured_kind(product);
    let mut lambda = DVector::zeros(n);
    for (k, w) in product.benefit_weights(table, opts.tilt.as_ref())? {
        if w > 0.0 {
            lambda += r_vector(model, state, &product.claim(k)?, kind, opts.mvn_tol)? * w;
        }
    }
    lambda -= discounted_prices(model, state) * (discount_at(model, state) * value);
    Ok((lambda, value))
}

/// `h = Ω⁻¹Λ`, `h⁰ = V − hᵀx`. Falls back to the pseudo-inverse when `Ω` is
/// not positive definite.
pub fn strategy(
    t: usize,
    omega: &SymMatrix,
    lambda: &DVector<f64>,
    value: f64,
    prices: &DVector<f64>,
) -> Result<HedgePosition> {
    let n = omega.dim();
    if lambda.len() != n || prices.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "Ω is {n}x{n}, Λ has {} entries, prices {}",
            lambda.len(),
            prices.len()
        )));
    }
    let (h, singular) = match cholesky_lower(omega) {
        Ok(l) => (cholesky_solve(&l, lambda), false),
        Err(_) => {
            let pinv = omega
                .as_matrix()
                .clone()
                .pseudo_inverse(1e-12 * omega.as_matrix().amax().max(f64::MIN_POSITIVE))
                .map_err(|e| Error::InvalidArgument(e.to_string()))?;
            (pinv * lambda, true)
        }
    };
    let h0 = value - h.dot(prices);
    Ok(HedgePosition {
        t,
        h: h.iter().copied().collect(),
        h0,
        value,
        singular_omega: singular,
    })
}

/// Report for one hedging step.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeStep {
    pub position: HedgePosition,
    pub moments: MomentBlock,
    /// `D_t`.
    pub discount: f64,
}

/// Strategy for `(t, t+1]`: moments, premium and holdings. With
/// `discounted` the cash account is booked in discounted units
/// (`h⁰ = V̄_t − hᵀX̄_t`).
pub fn hedge_step(
    product: &ProductSpec,
    model: &ValidatedModel,
    state: &MarketState,
    table: &LifeTable,
    opts: &PremiumOptions,
    discounted: bool,
) -> Result<HedgeStep> {
    let om = omega(model, state)?;
    let (lambda, value) = lambda_vector(product, model, state, table, opts)?;
    let d = discount_at(model, state);
    let scale = if discounted { d } else { 1.0 };
    let position = strategy(
        state.t,
        &om,
        &lambda,
        value * scale,
        &(current_prices(model, state) * scale),
    )?;
    Ok(HedgeStep {
        position,
        moments: MomentBlock { omega: om, lambda },
        discount: d,
    })
}

#[cfg(test)]
mod tests;
