//! Monte Carlo engine: risk-neutral ensembles, path-functional prices and
//! hedge residual checks.

mod ensemble;
mod hedge;
mod premium;
mod stats;

pub use ensemble::{mc_price, mc_price_many, simulate_risk_neutral, Ensemble, PathView, CHUNK};
pub use hedge::mc_hedge_residual;
pub use premium::{benefit_payoff, mc_premium};
pub use stats::{McEstimate, Welford};
