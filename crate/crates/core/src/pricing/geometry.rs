use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Claim on `M_k = maxᵢ wᵢ,ₖ xᵢ,ₖ` with guarantee `G_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxClaim {
    pub k: usize,
    pub weights: Vec<f64>,
    pub guarantee: f64,
}

impl MaxClaim {
    pub fn new(k: usize, weights: Vec<f64>, guarantee: f64) -> Result<Self> {
        let c = MaxClaim {
            k,
            weights,
            guarantee,
        };
        c.check(None)?;
        Ok(c)
    }

    pub(crate) fn check(&self, n_x: Option<usize>) -> Result<()> {
        if self.weights.is_empty() || self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidProduct(format!(
                "weights at step {} must be positive and finite",
                self.k
            )));
        }
        if !(self.guarantee >= 0.0 && self.guarantee.is_finite()) {
            return Err(Error::InvalidProduct(format!(
                "guarantee at step {} must be nonnegative",
                self.k
            )));
        }
        if let Some(n) = n_x {
            if self.weights.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "{} weights for {n} assets",
                    self.weights.len()
                )));
            }
        }
        Ok(())
    }

    /// Payoff `M_k` given prices at `k`.
    pub fn maximum(&self, prices: &[f64]) -> f64 {
        self.weights
            .iter()
            .zip(prices)
            .map(|(w, x)| w * x)
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    /// Asset `i` is the maximum and `wᵢxᵢ ≥ G`.
    Call,
    /// Asset `i` is the maximum and `wᵢxᵢ ≤ G`.
    Put,
    /// Asset `i` is the maximum.
    Forward,
}

/// Event `{L x̃_k ≤ b}` on which asset `i` (0-based) attains the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct EventGeometry {
    pub i: usize,
    pub kind: EventKind,
    pub l: DMatrix<f64>,
    pub b: DVector<f64>,
}

/// Comparison rows `x̃_j − x̃_i ≤ ln(wᵢ/w_j)` for `j ≠ i`, then the guarantee
/// row `−x̃_i ≤ ln(wᵢ/G)` (call) or `x̃_i ≤ ln(G/wᵢ)` (put).
pub fn event_geometry(claim: &MaxClaim, i: usize, kind: EventKind) -> Result<EventGeometry> {
    let n = claim.weights.len();
    if i >= n {
        return Err(Error::InvalidArgument(format!(
            "asset {i} out of range for {n} assets"
        )));
    }
    if kind == EventKind::Call && claim.guarantee == 0.0 {
        return Err(Error::GuaranteeZeroInCall);
    }
    let rows = if kind == EventKind::Forward { n - 1 } else { n };
    let mut l = DMatrix::zeros(rows, n);
    let mut b = DVector::zeros(rows);
    let wi = claim.weights[i];
    for (r, j) in (0..n).filter(|&j| j != i).enumerate() {
        l[(r, j)] = 1.0;
        l[(r, i)] = -1.0;
        b[r] = (wi / claim.weights[j]).ln();
    }
    match kind {
        EventKind::Call => {
            l[(n - 1, i)] = -1.0;
            b[n - 1] = (wi / claim.guarantee).ln();
        }
        EventKind::Put => {
            l[(n - 1, i)] = 1.0;
            // ln 0 = −∞: the event is empty.
            b[n - 1] = (claim.guarantee / wi).ln();
        }
        EventKind::Forward => {}
    }
    Ok(EventGeometry { i, kind, l, b })
}

impl EventGeometry {
    /// Membership test on log prices.
    pub fn contains(&self, log_prices: &[f64]) -> bool {
        (0..self.l.nrows()).all(|r| {
            let v: f64 = (0..self.l.ncols())
                .map(|c| self.l[(r, c)] * log_prices[c])
                .sum();
            v <= self.b[r]
        })
    }
}
