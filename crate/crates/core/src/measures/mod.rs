//! Measure changes: kernel, state-price density, forward and pair
//! measures, discounted expectations and regime posteriors.

mod kernel;
mod posterior;
mod selectors;

pub use kernel::{girsanov_kernel, state_price_density};
pub use posterior::{regime_posterior, PosteriorWeights};
pub use selectors::{
    discounted_factor_expectation, j_matrix, project_law, shifted_law, DiscountedExpectation,
    Event, ProjectedLaw, Selector,
};
