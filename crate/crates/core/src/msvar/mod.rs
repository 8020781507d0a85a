//! Regime-switching VAR market model.

mod covariance;
mod regime;
mod simulate;
mod spec;
mod stacked;

pub use covariance::covariance_sequence;
pub use regime::{enumerate_paths, MarketState, PathSet, RegimePath, MAX_PATHS, PRUNE_BELOW};
pub use simulate::{
    next_regime, one_step_mean, path_rng, realize, simulate_physical, CovarianceState,
    SimulatedPath, StepDraws,
};
pub use spec::{
    validate_spec, CovarianceModel, MeasureMode, ModelSpec, RegimeParams, ValidatedModel,
    STOCHASTIC_TOL,
};
pub use stacked::{
    build_stacked_system, conditional_law, law_for_path, GaussianLaw, HistoryTerm, MeasureTag,
    StackedSystem,
};

#[cfg(test)]
pub(crate) use stacked::tests::r2_like;
