use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::msvar::covariance::covariance_sequence;
use crate::msvar::regime::{MarketState, RegimePath};
use crate::msvar::spec::{MeasureMode, ValidatedModel};
use crate::numerics::{BlockLowerSystem, SymMatrix};

/// Which probability measure a [`GaussianLaw`] is taken under. Asset indices
/// are 0-based, times absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureTag {
    Physical,
    RiskNeutral,
    Forward {
        asset: usize,
        u: usize,
    },
    Pair {
        i: usize,
        u: usize,
        j: usize,
        v: usize,
    },
    /// Risk-neutral law tilted by the discount factor up to `v`.
    Discounted {
        v: usize,
    },
}

/// Gaussian law of the future block `(y_{t+1}, …, y_end)` given `ȳ_t`.
#[derive(Debug, Clone)]
pub struct GaussianLaw {
    pub tag: MeasureTag,
    pub t: usize,
    pub end: usize,
    pub n: usize,
    pub n_z: usize,
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
    /// `Ψ₂₂⁻¹Σ̄₂₂`, the map from a tilt vector to the mean it induces.
    pub shift: DMatrix<f64>,
}

impl GaussianLaw {
    pub fn window_len(&self) -> usize {
        self.end - self.t
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Offset of coordinate `c` of `y_m` in the stacked vector.
    pub fn index(&self, m: usize, c: usize) -> usize {
        debug_assert!(m > self.t && m <= self.end && c < self.n);
        (m - self.t - 1) * self.n + c
    }

    /// Mean of `y_m`.
    pub fn block_mean(&self, m: usize) -> DVector<f64> {
        self.mean
            .rows((m - self.t - 1) * self.n, self.n)
            .into_owned()
    }

    pub fn n_x(&self) -> usize {
        self.n - self.n_z
    }

    /// Mean of the log prices `x̃_m`.
    pub fn asset_mean(&self, m: usize) -> DVector<f64> {
        self.block_mean(m).rows(self.n_z, self.n_x()).into_owned()
    }

    /// Covariance of `y_m`.
    pub fn block_cov(&self, m: usize) -> DMatrix<f64> {
        let o = (m - self.t - 1) * self.n;
        self.cov
            .as_matrix()
            .view((o, o), (self.n, self.n))
            .into_owned()
    }
}

/// Lag term reaching into observed history: row `row` (1-based in the
/// window) receives `coef · y_j`.
#[derive(Debug, Clone)]
pub struct HistoryTerm {
    pub row: usize,
    pub j: usize,
    pub coef: DMatrix<f64>,
}

/// Stacked linear system `Ψ₂₂ ȳᶜ = δ̄₂ − ᾱ − Ψ₂₁ȳ_t + ξ̄` over a window.
#[derive(Debug, Clone)]
pub struct StackedSystem {
    pub t: usize,
    pub end: usize,
    pub n: usize,
    pub n_z: usize,
    pub mode: MeasureMode,
    pub psi22: BlockLowerSystem,
    /// Blocks of `−Ψ₂₁`, one per lag that lands on `y₁..y_t`.
    pub psi21: Vec<HistoryTerm>,
    pub delta2: DVector<f64>,
    pub sigma_bar: Vec<SymMatrix>,
    pub alpha_bar: DVector<f64>,
}

impl StackedSystem {
    /// `−Ψ₂₁ȳ_t`, given the observed values `y₁..y_t`.
    pub fn history_drift(&self, observed: &[DVector<f64>]) -> Result<DVector<f64>> {
        if observed.len() < self.t {
            return Err(Error::DimensionMismatch(format!(
                "need {} observations, got {}",
                self.t,
                observed.len()
            )));
        }
        let mut out = DVector::zeros(self.delta2.len());
        for h in &self.psi21 {
            let y = &observed[h.j - 1];
            if y.len() != self.n {
                return Err(Error::DimensionMismatch(format!(
                    "observation has length {}, expected {}",
                    y.len(),
                    self.n
                )));
            }
            let mut rows = out.rows_mut((h.row - 1) * self.n, self.n);
            rows += &h.coef * y;
        }
        Ok(out)
    }

    /// Block-diagonal `Σ̄₂₂` as a dense matrix.
    pub fn sigma_dense(&self) -> DMatrix<f64> {
        let d = self.n * self.sigma_bar.len();
        let mut m = DMatrix::zeros(d, d);
        for (b, s) in self.sigma_bar.iter().enumerate() {
            m.view_mut((b * self.n, b * self.n), (self.n, self.n))
                .copy_from(s.as_matrix());
        }
        m
    }
}

/// Builds the stacked system for the window `path.start..=path.end`, that
/// is `(t, T]` with `t = path.start − 1`. `past` holds the regimes up to `t`,
/// needed only by the GARCH covariance recursion.
pub fn build_stacked_system(
    model: &ValidatedModel,
    past: &[usize],
    path: &RegimePath,
    mode: MeasureMode,
) -> Result<StackedSystem> {
    let n = model.n();
    let t = path.start - 1;
    let len = path.len();
    if path.end > model.horizon() {
        return Err(Error::DimensionMismatch(format!(
            "window ends at {} beyond horizon {}",
            path.end,
            model.horizon()
        )));
    }
    let sigma_bar = if len == 0 {
        Vec::new()
    } else {
        covariance_sequence(model, past, path)?
    };
    let mut psi22 = BlockLowerSystem::identity(len, n);
    let mut psi21 = Vec::new();
    let mut delta2 = DVector::zeros(len * n);
    let mut alpha_bar = DVector::zeros(len * n);
    let lags = model.effective_lags(mode);

    for r in 1..=len {
        let m = t + r;
        let s = path.at(m);
        let (c0, cs) = model.drift_coefficients(s, mode);
        let mut row = &c0 * model.exog(m);
        for i in 1..=lags {
            let j = m as isize - i as isize;
            let coef = &cs[i - 1];
            if j > t as isize {
                psi22.insert(r, i, -coef)?;
            } else if j >= 1 {
                psi21.push(HistoryTerm {
                    row: r,
                    j: j as usize,
                    coef: coef.clone(),
                });
            } else {
                row += coef * &model.spec().presample_y[(-j) as usize];
            }
        }
        delta2.rows_mut((r - 1) * n, n).copy_from(&row);
        if mode == MeasureMode::RiskNeutral {
            let half = sigma_bar[r - 1].diagonal() * 0.5;
            alpha_bar.rows_mut((r - 1) * n, n).copy_from(&half);
        }
    }

    Ok(StackedSystem {
        t,
        end: path.end,
        n,
        n_z: model.n_z(),
        mode,
        psi22,
        psi21,
        delta2,
        sigma_bar,
        alpha_bar,
    })
}

/// Law of the future block under the system's measure.
pub fn conditional_law(sys: &StackedSystem, observed: &[DVector<f64>]) -> Result<GaussianLaw> {
    let rhs = &sys.delta2 - &sys.alpha_bar + sys.history_drift(observed)?;
    let mean = sys.psi22.solve(&rhs)?;
    let shift = sys.psi22.solve_matrix(&sys.sigma_dense())?;
    let cov = sys.psi22.solve_matrix(&shift.transpose())?;
    Ok(GaussianLaw {
        tag: match sys.mode {
            MeasureMode::Physical => MeasureTag::Physical,
            MeasureMode::RiskNeutral => MeasureTag::RiskNeutral,
        },
        t: sys.t,
        end: sys.end,
        n: sys.n,
        n_z: sys.n_z,
        mean,
        cov: SymMatrix::symmetrized(cov),
        shift,
    })
}

/// Convenience: law of `(y_{t+1}, …, y_end)` for a path that continues the
/// regimes in `state`.
pub fn law_for_path(
    model: &ValidatedModel,
    state: &MarketState,
    past: &[usize],
    path: &RegimePath,
    mode: MeasureMode,
) -> Result<GaussianLaw> {
    let sys = build_stacked_system(model, past, path, mode)?;
    conditional_law(&sys, &state.observed)
}


#[cfg(test)]
mod props {
    use super::*;
    use crate::msvar::spec::{validate_spec, CovarianceModel, ModelSpec, RegimeParams};
    use crate::numerics::cholesky_regularized;
    use proptest::prelude::*;

    fn spec_strategy() -> impl Strategy<Value = (ModelSpec, Vec<usize>)> {
        (
            prop::collection::vec(-0.9f64..0.9, 9),
            prop::collection::vec(-0.5f64..0.5, 9),
            prop::collection::vec(0.01f64..0.3, 3),
            prop::collection::vec(0usize..2, 4),
        )
            .prop_map(|(a, c, d, states)| {
                let a1 = DMatrix::from_row_slice(3, 3, &a);
                let root = DMatrix::from_row_slice(3, 3, &c)
                    + DMatrix::from_diagonal(&DVector::from_vec(d));
                let sigma = SymMatrix::symmetrized(&root * root.transpose());
                let regime = RegimeParams {
                    intercept: DMatrix::from_element(3, 1, 0.01),
                    lags: vec![a1.clone()],
                };
                let other = RegimeParams {
                    intercept: DMatrix::from_element(3, 1, -0.01),
                    lags: vec![a1.transpose() * 0.5],
                };
                let spec = ModelSpec {
                    n_z: 1,
                    n_x: 2,
                    lags: 1,
                    regimes: vec![regime, other],
                    transition: DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]),
                    initial_dist: DVector::from_vec(vec![0.5, 0.5]),
                    covariance: CovarianceModel::ConstantPerRegime(vec![
                        sigma.clone(),
                        sigma.scaled(2.0),
                    ]),
                    presample_y: vec![DVector::from_vec(vec![0.02, 1.0, 2.0])],
                    exog: vec![DVector::from_element(1, 1.0); 4],
                };
                (spec, states)
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn stacked_covariance_is_psd((spec, states) in spec_strategy()) {
            let Ok(model) = validate_spec(spec) else { return Ok(()) };
            let path = RegimePath::from_states(&model, None, 1, states).unwrap();
            for mode in [MeasureMode::Physical, MeasureMode::RiskNeutral] {
                let law = conditional_law(&build_stacked_system(&model, &[], &path, mode).unwrap(), &[]).unwrap();
                let m = law.cov.as_matrix();
                prop_assert!((m - m.transpose()).amax() <= 1e-12 * m.amax().max(1.0));
                let (_, reg) = cholesky_regularized(&law.cov).unwrap();
                prop_assert!(!reg);
            }
        }
    }
}
