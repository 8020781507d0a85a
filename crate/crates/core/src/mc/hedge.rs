use super::ensemble::Ensemble;
use super::mc_price_many;
use super::premium::benefit_payoff;
use super::stats::McEstimate;
use crate::actuarial::{LifeTable, MortalityTilt};
use crate::error::{Error, Result};
use crate::hedging::HedgePosition;
use crate::pricing::ProductSpec;

/// `Ẽ[C·ΔX̄ⱼ,ₜ₊₁ | ℱ_t]` for each asset, where
/// `C = H̄ − V̄_t − hᵀΔX̄_{t+1}` and `H̄` is the mortality-weighted discounted
/// benefit. Since `ΔX̄` has conditional mean 0 this is the covariance of the
/// cost increment with the price increment. Values are in units of `D_t²`;
/// `position` must be booked undiscounted.
pub fn mc_hedge_residual(
    ens: &Ensemble,
    product: &ProductSpec,
    table: &LifeTable,
    tilt: Option<&MortalityTilt>,
    position: &HedgePosition,
) -> Result<Vec<McEstimate>> {
    let model = ens.model();
    let t = ens.state().t;
    let n = model.n_x();
    if position.h.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "{} holdings for {n} assets",
            position.h.len()
        )));
    }
    if product.horizon > ens.horizon() || product.t != t {
        return Err(Error::InvalidProduct(
            "product window does not match the ensemble".into(),
        ));
    }
    let benefits: Vec<_> = if product.alive {
        product
            .benefit_weights(table, tilt)?
            .into_iter()
            .map(|(k, w)| Ok((product.claim(k)?, w)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let x_t = crate::pricing::current_prices(model, ens.state());
    let segregated = product.kind.is_segregated();
    mc_price_many(ens, n, |v, out| {
        let mut h_bar = 0.0;
        for (claim, w) in &benefits {
            h_bar += w * v.discount(claim.k) * benefit_payoff(segregated, claim, v);
        }
        let dx = v.discounted_prices(t + 1) - &x_t;
        let hedge: f64 = position.h.iter().zip(dx.iter()).map(|(h, d)| h * d).sum();
        let cost = h_bar - position.value - hedge;
        for (o, d) in out.iter_mut().zip(dx.iter()) {
            *o = cost * d;
        }
    })
}
