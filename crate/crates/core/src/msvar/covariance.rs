use crate::error::{Error, Result};
use crate::msvar::regime::RegimePath;
use crate::msvar::spec::{CovarianceModel, ValidatedModel};
use crate::numerics::{cholesky_lower, unvech, vech, SymMatrix};

/// Residual covariances `Σ_m` for every step of `path`.
///
/// `past` holds the regimes `s₁..s_{start−1}`; the GARCH recursion is unrolled
/// from step 1 and so needs them, the constant model ignores them.
pub fn covariance_sequence(
    model: &ValidatedModel,
    past: &[usize],
    path: &RegimePath,
) -> Result<Vec<SymMatrix>> {
    match &model.spec().covariance {
        CovarianceModel::ConstantPerRegime(sigmas) => {
            Ok(path.states.iter().map(|&s| sigmas[s].clone()).collect())
        }
        CovarianceModel::VechGarch {
            intercept,
            lags,
            presample,
        } => {
            if past.len() + 1 != path.start {
                return Err(Error::DimensionMismatch(format!(
                    "GARCH recursion needs regimes 1..{} before the window, got {}",
                    path.start - 1,
                    past.len()
                )));
            }
            let mut hist: Vec<_> = presample.iter().rev().map(vech).collect();
            let offset = hist.len();
            let mut out = Vec::with_capacity(path.len());
            for (m, &s) in past.iter().chain(path.states.iter()).enumerate() {
                let mut v = intercept[s].clone();
                for (j, b) in lags[s].iter().enumerate() {
                    v += b * &hist[offset + m - 1 - j];
                }
                let sigma = unvech(&v)?;
                cholesky_lower(&sigma)?;
                if m + 1 >= path.start {
                    out.push(sigma);
                }
                hist.push(v);
            }
            Ok(out)
        }
    }
}
