use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numerics::{cholesky_lower, SymMatrix};

/// Row-sum tolerance for stochastic vectors and matrices.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Coefficients of one regime: `A₀(s)` (n×k) and `A₁(s)..A_p(s)` (n×n).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeParams {
    pub intercept: DMatrix<f64>,
    pub lags: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CovarianceModel {
    /// One residual covariance `Σ(s)` per regime.
    ConstantPerRegime(Vec<SymMatrix>),
    /// `vech Σ_m = B₀(s_m) + Σ_j B_j(s_m) vech Σ_{m-j}`.
    VechGarch {
        intercept: Vec<DVector<f64>>,
        lags: Vec<Vec<DMatrix<f64>>>,
        /// `Σ₀, Σ₋₁, …` most recent first.
        presample: Vec<SymMatrix>,
    },
}

/// Full market description. Regimes are numbered from 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    pub n_z: usize,
    pub n_x: usize,
    pub lags: usize,
    pub regimes: Vec<RegimeParams>,
    pub transition: DMatrix<f64>,
    pub initial_dist: DVector<f64>,
    pub covariance: CovarianceModel,
    /// `y₀, y₋₁, …` most recent first; `max(p, 1)` entries.
    pub presample_y: Vec<DVector<f64>>,
    /// `ψ₁..ψ_T`; its length fixes the horizon.
    pub exog: Vec<DVector<f64>>,
}

/// Probability measure a law or simulation refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasureMode {
    Physical,
    RiskNeutral,
}

/// A [`ModelSpec`] whose invariants have been checked.
#[derive(Debug, Clone)]
pub struct ValidatedModel {
    spec: ModelSpec,
    chol: Vec<DMatrix<f64>>,
}

impl ModelSpec {
    pub fn n(&self) -> usize {
        self.n_z + self.n_x
    }
}

fn check_stochastic(v: &[f64], what: &str) -> std::result::Result<(), String> {
    if v.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(format!("{what} has a negative or non-finite entry"));
    }
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > STOCHASTIC_TOL {
        return Err(format!("{what} sums to {s}"));
    }
    Ok(())
}

fn check_shape(m: &DMatrix<f64>, rows: usize, cols: usize, what: &str) -> Result<()> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidModel(format!(
            "{what} has non-finite entries"
        )));
    }
    Ok(())
}

pub fn validate_spec(spec: ModelSpec) -> Result<ValidatedModel> {
    let n = spec.n();
    let regimes = spec.regimes.len();
    if spec.n_z == 0 || spec.n_x == 0 {
        return Err(Error::InvalidModel(
            "need at least one economic row (the log spot rate) and one asset row".into(),
        ));
    }
    if regimes == 0 {
        return Err(Error::InvalidModel("no regimes".into()));
    }
    if spec.exog.is_empty() {
        return Err(Error::InvalidModel(
            "horizon must be at least one step".into(),
        ));
    }
    let k = spec.exog[0].len();
    if spec.exog.iter().any(|e| e.len() != k) {
        return Err(Error::DimensionMismatch(
            "exogenous vectors have unequal lengths".into(),
        ));
    }
    if spec.exog.iter().any(|e| e.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidModel(
            "exogenous sequence has non-finite entries".into(),
        ));
    }

    if spec.transition.nrows() != regimes || spec.transition.ncols() != regimes {
        return Err(Error::InvalidTransitionMatrix(format!(
            "transition matrix is {}x{}, expected {regimes}x{regimes}",
            spec.transition.nrows(),
            spec.transition.ncols()
        )));
    }
    for i in 0..regimes {
        let row: Vec<f64> = spec.transition.row(i).iter().copied().collect();
        check_stochastic(&row, &format!("row {i}")).map_err(Error::InvalidTransitionMatrix)?;
    }
    if spec.initial_dist.len() != regimes {
        return Err(Error::DimensionMismatch(format!(
            "initial distribution has {} entries, expected {regimes}",
            spec.initial_dist.len()
        )));
    }
    check_stochastic(spec.initial_dist.as_slice(), "initial distribution")
        .map_err(Error::InvalidModel)?;

    for (s, r) in spec.regimes.iter().enumerate() {
        check_shape(&r.intercept, n, k, &format!("A0 of regime {s}"))?;
        if r.lags.len() != spec.lags {
            return Err(Error::DimensionMismatch(format!(
                "regime {s} has {} lag matrices, expected {}",
                r.lags.len(),
                spec.lags
            )));
        }
        for (i, a) in r.lags.iter().enumerate() {
            check_shape(a, n, n, &format!("A{} of regime {s}", i + 1))?;
        }
    }

    let need = spec.lags.max(1);
    if spec.presample_y.len() != need {
        return Err(Error::DimensionMismatch(format!(
            "presample has {} values, expected {need}",
            spec.presample_y.len()
        )));
    }
    if spec
        .presample_y
        .iter()
        .any(|y| y.len() != n || y.iter().any(|v| !v.is_finite()))
    {
        return Err(Error::DimensionMismatch(format!(
            "presample values must be finite vectors of length {n}"
        )));
    }

    let mut chol = Vec::new();
    match &spec.covariance {
        CovarianceModel::ConstantPerRegime(sigmas) => {
            if sigmas.len() != regimes {
                return Err(Error::DimensionMismatch(format!(
                    "{} covariance matrices for {regimes} regimes",
                    sigmas.len()
                )));
            }
            for s in sigmas {
                if s.dim() != n {
                    return Err(Error::DimensionMismatch(format!(
                        "covariance is {}x{0}, expected {n}x{n}",
                        s.dim()
                    )));
                }
                chol.push(cholesky_lower(s)?);
            }
        }
        CovarianceModel::VechGarch {
            intercept,
            lags,
            presample,
        } => {
            let m = n * (n + 1) / 2;
            if intercept.len() != regimes || lags.len() != regimes {
                return Err(Error::DimensionMismatch(
                    "GARCH coefficients must be given for every regime".into(),
                ));
            }
            let order = lags[0].len();
            for s in 0..regimes {
                if intercept[s].len() != m {
                    return Err(Error::DimensionMismatch(format!(
                        "B0 of regime {s} has length {}, expected {m}",
                        intercept[s].len()
                    )));
                }
                if lags[s].len() != order {
                    return Err(Error::DimensionMismatch(
                        "GARCH lag order differs between regimes".into(),
                    ));
                }
                for (j, b) in lags[s].iter().enumerate() {
                    check_shape(b, m, m, &format!("B{} of regime {s}", j + 1))?;
                }
            }
            if presample.len() != order {
                return Err(Error::DimensionMismatch(format!(
                    "GARCH presample has {} matrices, expected {order}",
                    presample.len()
                )));
            }
            for p in presample {
                if p.dim() != n {
                    return Err(Error::DimensionMismatch("GARCH presample dimension".into()));
                }
                cholesky_lower(p)?;
            }
        }
    }

    Ok(ValidatedModel { spec, chol })
}

impl ValidatedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n()
    }

    pub fn n_z(&self) -> usize {
        self.spec.n_z
    }

    pub fn n_x(&self) -> usize {
        self.spec.n_x
    }

    pub fn lags(&self) -> usize {
        self.spec.lags
    }

    pub fn regime_count(&self) -> usize {
        self.spec.regimes.len()
    }

    pub fn horizon(&self) -> usize {
        self.spec.exog.len()
    }

    pub fn exog_dim(&self) -> usize {
        self.spec.exog[0].len()
    }

    /// `ψ_m` for `1 ≤ m ≤ T`.
    pub fn exog(&self, m: usize) -> &DVector<f64> {
        &self.spec.exog[m - 1]
    }

    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.spec.transition[(from, to)]
    }

    /// `p_{s_{m-1} s_m}`, or the initial distribution when `prev` is `None`.
    pub fn step_prob(&self, prev: Option<usize>, to: usize) -> f64 {
        match prev {
            Some(from) => self.spec.transition[(from, to)],
            None => self.spec.initial_dist[to],
        }
    }

    pub fn intercept(&self, s: usize) -> &DMatrix<f64> {
        &self.spec.regimes[s].intercept
    }

    /// `A_i(s)` for `i ≥ 1`, zero beyond the lag order.
    pub fn lag_coef(&self, s: usize, i: usize) -> DMatrix<f64> {
        match self.spec.regimes[s].lags.get(i - 1) {
            Some(a) => a.clone(),
            None => DMatrix::zeros(self.n(), self.n()),
        }
    }

    /// Cholesky factor of `Σ(s)` for constant-per-regime covariances.
    pub fn constant_chol(&self, s: usize) -> Option<&DMatrix<f64>> {
        self.chol.get(s)
    }

    /// Number of lags entering the drift under `mode`. The risk-neutral
    /// kernel always reaches back one step for the spot rate.
    pub fn effective_lags(&self, mode: MeasureMode) -> usize {
        match mode {
            MeasureMode::Physical => self.spec.lags,
            MeasureMode::RiskNeutral => self.spec.lags.max(1),
        }
    }

    /// `M₂ = [0 : I_{n_x}]`.
    pub fn asset_selector(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_x(), self.n());
        for i in 0..self.n_x() {
            m[(i, self.n_z() + i)] = 1.0;
        }
        m
    }

    /// Kernel coefficients `(Δ₀, [Δ₁, …, Δ_{p'}])` of regime `s` as full
    /// n-row matrices: zero on the economic rows and, on the asset rows,
    /// `Δ₀* = −M₂A₀`, `Δ₁* = M₂(I−A₁) + 1·e₁ᵀ`, `Δ_i* = −M₂A_i`.
    pub fn kernel_coefficients(&self, s: usize) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = self.n();
        let nz = self.n_z();
        let lags = self.effective_lags(MeasureMode::RiskNeutral);
        let mut d0 = DMatrix::zeros(n, self.exog_dim());
        let a0 = self.intercept(s);
        for r in nz..n {
            for c in 0..self.exog_dim() {
                d0[(r, c)] = -a0[(r, c)];
            }
        }
        let mut out = Vec::with_capacity(lags);
        for i in 1..=lags {
            let a = self.lag_coef(s, i);
            let mut d = DMatrix::zeros(n, n);
            for r in nz..n {
                for c in 0..n {
                    d[(r, c)] = -a[(r, c)];
                }
                if i == 1 {
                    d[(r, r)] += 1.0;
                    d[(r, 0)] += 1.0;
                }
            }
            out.push(d);
        }
        (d0, out)
    }

    /// Drift coefficients `(A₀+Δ₀, [A_i+Δ_i])` under `mode`.
    pub fn drift_coefficients(
        &self,
        s: usize,
        mode: MeasureMode,
    ) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let lags = self.effective_lags(mode);
        let mut c0 = self.intercept(s).clone();
        let mut cs: Vec<DMatrix<f64>> = (1..=lags).map(|i| self.lag_coef(s, i)).collect();
        if mode == MeasureMode::RiskNeutral {
            let (d0, ds) = self.kernel_coefficients(s);
            c0 += d0;
            for (c, d) in cs.iter_mut().zip(ds) {
                *c += d;
            }
        }
        (c0, cs)
    }

    /// Replaces the coefficient blocks with those of another draw sharing
    /// this model's skeleton.
    pub fn with_parameters(
        &self,
        regimes: Vec<RegimeParams>,
        covariance: CovarianceModel,
        transition: DMatrix<f64>,
    ) -> Result<ValidatedModel> {
        let mut spec = self.spec.clone();
        if regimes.len() != spec.regimes.len() {
            return Err(Error::DimensionMismatch(format!(
                "draw has {} regimes, model has {}",
                regimes.len(),
                spec.regimes.len()
            )));
        }
        spec.regimes = regimes;
        spec.covariance = covariance;
        spec.transition = transition;
        validate_spec(spec)
    }
}
