//! Rainbow options on the maximum, zero-coupon bonds, equity-linked life
//! premiums and averaging over parameter draws.

mod bayes;
mod geometry;
mod options;
mod premium;

pub use bayes::{bayesian_average, ParameterDraw, PosteriorAverage};
pub use geometry::{event_geometry, EventGeometry, EventKind, MaxClaim};
pub use options::{call_on_max, current_prices, forward_max, put_on_max, zcb_price, PriceResult};
pub use premium::{benefit_value, premium, PremiumOptions, ProductKind, ProductSpec};

pub(crate) use options::{event_prob, regime_sum, Scenario};
