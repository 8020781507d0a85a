//! JSON model and product files.
//!
//! A model file holds every [`ModelSpec`] field. Matrices are arrays of rows.
//!
//! ```json
//! {
//!   "n_z": 1, "n_x": 1, "lags": 1,
//!   "regimes": [{"intercept": [[0.01], [0.0]], "lags": [[[0.0, 0.0], [0.0, 1.0]]]}],
//!   "transition": [[1.0]],
//!   "initial_dist": [1.0],
//!   "covariance": {"kind": "constant_per_regime", "sigmas": [[[1e-14, 0.0], [0.0, 0.04]]]},
//!   "presample_y": [[0.01, 4.605170185988092]],
//!   "horizon": 5
//! }
//! ```
//!
//! `exog` (one row per step) defaults to the constant 1 for `horizon` steps.
//! The GARCH form is `{"kind": "vech_garch", "intercept": [...], "lags":
//! [...], "presample": [...]}` with one entry per regime (`presample` most
//! recent first). Optional `observed` (rows `y₁..y_t`) and `observed_regimes`
//! (0-based) give the market state.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::msvar::{
    validate_spec, CovarianceModel, MarketState, ModelSpec, RegimeParams, ValidatedModel,
};
use crate::numerics::SymMatrix;
use crate::pricing::ProductSpec;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFile {
    pub intercept: Rows,
    pub lags: Vec<Rows>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CovarianceFile {
    ConstantPerRegime {
        sigmas: Vec<Rows>,
    },
    VechGarch {
        intercept: Vec<Vec<f64>>,
        lags: Vec<Vec<Rows>>,
        presample: Vec<Rows>,
    },
}

/// On-disk form of a model and, optionally, the observed history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub n_z: usize,
    pub n_x: usize,
    pub lags: usize,
    pub regimes: Vec<RegimeFile>,
    pub transition: Rows,
    pub initial_dist: Vec<f64>,
    pub covariance: CovarianceFile,
    pub presample_y: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exog: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub observed_regimes: Option<Vec<usize>>,
}

fn matrix(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|row| row.len() != c) {
        return Err(Error::DimensionMismatch(format!("{what}: ragged rows")));
    }
    Ok(DMatrix::from_row_iterator(
        r,
        c,
        rows.iter().flatten().copied(),
    ))
}

fn rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn sym(rows: &Rows, what: &str) -> Result<SymMatrix> {
    SymMatrix::new(matrix(rows, what)?)
}

impl ModelFile {
    pub fn to_spec(&self) -> Result<ModelSpec> {
        let regimes = self
            .regimes
            .iter()
            .enumerate()
            .map(|(s, r)| {
                Ok(RegimeParams {
                    intercept: matrix(&r.intercept, &format!("regime {s} intercept"))?,
                    lags: r
                        .lags
                        .iter()
                        .enumerate()
                        .map(|(i, a)| matrix(a, &format!("regime {s} lag {}", i + 1)))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        let covariance = match &self.covariance {
            CovarianceFile::ConstantPerRegime { sigmas } => CovarianceModel::ConstantPerRegime(
                sigmas
                    .iter()
                    .enumerate()
                    .map(|(s, m)| sym(m, &format!("covariance of regime {s}")))
                    .collect::<Result<_>>()?,
            ),
            CovarianceFile::VechGarch {
                intercept,
                lags,
                presample,
            } => CovarianceModel::VechGarch {
                intercept: intercept
                    .iter()
                    .map(|v| DVector::from_vec(v.clone()))
                    .collect(),
                lags: lags
                    .iter()
                    .map(|l| l.iter().map(|b| matrix(b, "GARCH lag")).collect())
                    .collect::<Result<_>>()?,
                presample: presample
                    .iter()
                    .map(|m| sym(m, "GARCH presample"))
                    .collect::<Result<_>>()?,
            },
        };
        let exog = match (&self.exog, self.horizon) {
            (Some(e), h) => {
                if h.is_some_and(|h| h != e.len()) {
                    return Err(Error::DimensionMismatch(format!(
                        "horizon {} but {} exogenous rows",
                        h.unwrap_or(0),
                        e.len()
                    )));
                }
                e.iter().map(|v| DVector::from_vec(v.clone())).collect()
            }
            (None, Some(h)) => vec![DVector::from_element(1, 1.0); h],
            (None, None) => {
                return Err(Error::InvalidModel(
                    "model needs either horizon or exog".into(),
                ))
            }
        };
        Ok(ModelSpec {
            n_z: self.n_z,
            n_x: self.n_x,
            lags: self.lags,
            regimes,
            transition: matrix(&self.transition, "transition")?,
            initial_dist: DVector::from_vec(self.initial_dist.clone()),
            covariance,
            presample_y: self
                .presample_y
                .iter()
                .map(|v| DVector::from_vec(v.clone()))
                .collect(),
            exog,
        })
    }

    pub fn state(&self) -> Result<MarketState> {
        let observed = self
            .observed
            .iter()
            .flatten()
            .map(|v| DVector::from_vec(v.clone()))
            .collect();
        MarketState::new(observed, self.observed_regimes.clone())
    }

    /// Validated model and the market state at the last observation.
    pub fn load(&self) -> Result<(ValidatedModel, MarketState)> {
        let model = validate_spec(self.to_spec()?)?;
        let state = self.state()?;
        state.check(&model)?;
        Ok((model, state))
    }

    pub fn from_spec(spec: &ModelSpec, state: &MarketState) -> Self {
        let covariance = match &spec.covariance {
            CovarianceModel::ConstantPerRegime(s) => CovarianceFile::ConstantPerRegime {
                sigmas: s.iter().map(SymMatrix::to_rows).collect(),
            },
            CovarianceModel::VechGarch {
                intercept,
                lags,
                presample,
            } => CovarianceFile::VechGarch {
                intercept: intercept
                    .iter()
                    .map(|v| v.iter().copied().collect())
                    .collect(),
                lags: lags.iter().map(|l| l.iter().map(rows).collect()).collect(),
                presample: presample.iter().map(SymMatrix::to_rows).collect(),
            },
        };
        let vecs = |v: &[DVector<f64>]| -> Rows {
            v.iter().map(|x| x.iter().copied().collect()).collect()
        };
        ModelFile {
            n_z: spec.n_z,
            n_x: spec.n_x,
            lags: spec.lags,
            regimes: spec
                .regimes
                .iter()
                .map(|r| RegimeFile {
                    intercept: rows(&r.intercept),
                    lags: r.lags.iter().map(rows).collect(),
                })
                .collect(),
            transition: rows(&spec.transition),
            initial_dist: spec.initial_dist.iter().copied().collect(),
            covariance,
            presample_y: vecs(&spec.presample_y),
            horizon: Some(spec.exog.len()),
            exog: Some(vecs(&spec.exog)),
            observed: (state.t > 0).then(|| vecs(&state.observed)),
            observed_regimes: state.regimes.clone().filter(|r| !r.is_empty()),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_model(text: &str) -> Result<(ValidatedModel, MarketState)> {
    let file: ModelFile = serde_json::from_str(text)?;
    file.load()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(ValidatedModel, MarketState)> {
    parse_model(&read(path.as_ref())?)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    Many(Vec<ProductSpec>),
    One(Box<ProductSpec>),
}

/// A product object or an array of them.
pub fn parse_products(text: &str) -> Result<Vec<ProductSpec>> {
    Ok(match serde_json::from_str::<OneOrMany>(text)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(p) => vec![*p],
    })
}

pub fn load_products(path: impl AsRef<Path>) -> Result<Vec<ProductSpec>> {
    parse_products(&read(path.as_ref())?)
}
