use super::ensemble::{Ensemble, PathView};
use super::mc_price;
use super::stats::McEstimate;
use crate::actuarial::{LifeTable, MortalityTilt};
use crate::error::{Error, Result};
use crate::pricing::{MaxClaim, ProductSpec};

/// Undiscounted benefit `(G − M)⁺` or `max(M, G)` paid at `claim.k`.
pub fn benefit_payoff(segregated: bool, claim: &MaxClaim, view: &PathView) -> f64 {
    let m = claim.maximum(view.prices(claim.k).as_slice());
    if segregated {
        (claim.guarantee - m).max(0.0)
    } else {
        m.max(claim.guarantee)
    }
}

/// Monte Carlo premium: discounted benefits weighted by the tilted lifetime
/// law. The guarantee leg of unit-linked benefits is discounted.
pub fn mc_premium(
    ens: &Ensemble,
    product: &ProductSpec,
    table: &LifeTable,
    tilt: Option<&MortalityTilt>,
) -> Result<McEstimate> {
    if product.horizon > ens.horizon() || product.t != ens.state().t {
        return Err(Error::InvalidProduct(
            "product window does not match the ensemble".into(),
        ));
    }
    let benefits: Vec<(MaxClaim, f64)> = if product.alive {
        product
            .benefit_weights(table, tilt)?
            .into_iter()
            .map(|(k, w)| Ok((product.claim(k)?, w)))
            .collect::<Result<_>>()?
    } else {
        Vec::new()
    };
    let segregated = product.kind.is_segregated();
    mc_price(ens, |v| {
        benefits
            .iter()
            .map(|(c, w)| w * v.discount(c.k) * benefit_payoff(segregated, c, v))
            .sum()
    })
}
