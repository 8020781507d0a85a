use serde::{Deserialize, Serialize};

use super::geometry::MaxClaim;
use super::options::{call_or_forward, put_on_max, zcb_price, PriceResult};
use crate::actuarial::{tilted_mortality, LifeTable, MortalityTilt, TiltedMortality};
use crate::error::{Error, Result};
use crate::msvar::{MarketState, ValidatedModel};
use crate::numerics::DEFAULT_MVN_TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    /// Pays `(G − M)⁺` at the end of the year of death.
    SegregatedTerm,
    /// Pays `(G − M)⁺` at `T` on survival.
    SegregatedEndowment,
    /// Pays `max(M, G)` at the end of the year of death.
    UnitLinkedTerm,
    /// Pays `max(M, G)` at `T` on survival.
    UnitLinkedEndowment,
}

impl ProductKind {
    pub const ALL: [ProductKind; 4] = [
        ProductKind::SegregatedTerm,
        ProductKind::SegregatedEndowment,
        ProductKind::UnitLinkedTerm,
        ProductKind::UnitLinkedEndowment,
    ];

    pub fn is_term(self) -> bool {
        matches!(
            self,
            ProductKind::SegregatedTerm | ProductKind::UnitLinkedTerm
        )
    }

    pub fn is_segregated(self) -> bool {
        matches!(
            self,
            ProductKind::SegregatedTerm | ProductKind::SegregatedEndowment
        )
    }
}

fn yes() -> bool {
    true
}

/// Equity-linked life contract. `guarantees[k−1]` and `weights[k−1]` define
/// the claim at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpec {
    pub kind: ProductKind,
    /// Issue age `x`.
    pub age: u32,
    /// Valuation step.
    #[serde(default)]
    pub t: usize,
    pub horizon: usize,
    pub guarantees: Vec<f64>,
    pub weights: Vec<Vec<f64>>,
    #[serde(default = "yes")]
    pub alive: bool,
}

impl ProductSpec {
    pub fn claim(&self, k: usize) -> Result<MaxClaim> {
        if k == 0 || k > self.horizon {
            return Err(Error::InvalidProduct(format!(
                "no claim at step {k} for horizon {}",
                self.horizon
            )));
        }
        Ok(MaxClaim {
            k,
            weights: self.weights[k - 1].clone(),
            guarantee: self.guarantees[k - 1],
        })
    }

    /// Steps at which a benefit can be paid.
    pub fn maturities(&self) -> Vec<usize> {
        if self.kind.is_term() {
            (self.t + 1..=self.horizon).collect()
        } else {
            vec![self.horizon]
        }
    }

    pub fn validate(&self, model: &ValidatedModel) -> Result<()> {
        if self.horizon == 0 || self.horizon > model.horizon() {
            return Err(Error::InvalidProduct(format!(
                "horizon {} must lie in 1..={}",
                self.horizon,
                model.horizon()
            )));
        }
        if self.t >= self.horizon {
            return Err(Error::InvalidProduct(format!(
                "valuation step {} must precede the horizon {}",
                self.t, self.horizon
            )));
        }
        if self.guarantees.len() != self.horizon || self.weights.len() != self.horizon {
            return Err(Error::InvalidProduct(format!(
                "need {} guarantees and weight vectors, got {} and {}",
                self.horizon,
                self.guarantees.len(),
                self.weights.len()
            )));
        }
        for k in self.maturities() {
            self.claim(k)?.check(Some(model.n_x()))?;
        }
        Ok(())
    }

    /// Tilted lifetime law from issue over the horizon.
    pub fn mortality(
        &self,
        table: &LifeTable,
        tilt: Option<&MortalityTilt>,
    ) -> Result<TiltedMortality> {
        let zero = MortalityTilt::zero(self.horizon);
        tilted_mortality(table, self.age, self.horizon, tilt.unwrap_or(&zero))
    }

    /// `(step, weight)` pairs: `P̃[K_x = k−1 | T_x > t]` at `k` for term
    /// products, `P̃[T_x > T | T_x > t]` at `T` for endowments.
    pub fn benefit_weights(
        &self,
        table: &LifeTable,
        tilt: Option<&MortalityTilt>,
    ) -> Result<Vec<(usize, f64)>> {
        let (deaths, survive) = self.mortality(table, tilt)?.conditional_weights(self.t)?;
        Ok(if self.kind.is_term() {
            deaths
                .into_iter()
                .enumerate()
                .map(|(j, w)| (self.t + 1 + j, w))
                .collect()
        } else {
            vec![(self.horizon, survive)]
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PremiumOptions {
    pub mvn_tol: f64,
    /// Adds `G` undiscounted in the unit-linked guarantee leg.
    pub raw_guarantee_leg: bool,
    pub tilt: Option<MortalityTilt>,
}

impl Default for PremiumOptions {
    fn default() -> Self {
        PremiumOptions {
            mvn_tol: DEFAULT_MVN_TOL,
            raw_guarantee_leg: false,
            tilt: None,
        }
    }
}

/// Value at `t` of the benefit paid at `k` if it is triggered.
pub fn benefit_value(
    product: &ProductSpec,
    model: &ValidatedModel,
    state: &MarketState,
    k: usize,
    opts: &PremiumOptions,
) -> Result<PriceResult> {
    let claim = product.claim(k)?;
    let tol = opts.mvn_tol;
    if product.kind.is_segregated() {
        return put_on_max(model, state, &claim, tol);
    }
    let call = call_or_forward(model, state, &claim, tol)?;
    if opts.raw_guarantee_leg {
        let mut out = call;
        out.value += claim.guarantee;
        Ok(out)
    } else if claim.guarantee == 0.0 {
        Ok(call)
    } else {
        let bond = zcb_price(model, state, k, tol)?;
        Ok(PriceResult::combine(
            tol,
            &[(1.0, call), (claim.guarantee, bond)],
        ))
    }
}

/// Single premium at `t` of an equity-linked life contract.
pub fn premium(
    product: &ProductSpec,
    model: &ValidatedModel,
    state: &MarketState,
    table: &LifeTable,
    opts: &PremiumOptions,
) -> Result<PriceResult> {
    product.validate(model)?;
    if state.t != product.t {
        return Err(Error::InvalidProduct(format!(
            "product valued at step {} but market state is at {}",
            product.t, state.t
        )));
    }
    let weights = product.benefit_weights(table, opts.tilt.as_ref())?;
    if !product.alive {
        return Ok(PriceResult::zero(opts.mvn_tol));
    }
    let mut parts = Vec::with_capacity(weights.len());
    for (k, w) in weights {
        if w > 0.0 {
            parts.push((w, benefit_value(product, model, state, k, opts)?));
        }
    }
    Ok(PriceResult::combine(opts.mvn_tol, &parts))
}
