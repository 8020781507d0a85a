use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::msvar::{CovarianceState, ValidatedModel};
use crate::numerics::{cholesky_lower, cholesky_solve, SymMatrix};

/// Risk-neutral kernel `θ_{m−1} = θ̄_{m−1}(s) − α_m` for step `m` in regime `s`.
///
/// `lagged[i]` is `y_{m−1−i}`; at least `max(p, 1)` values are needed.
/// `sigma` is `Σ_m`. The affine form `Δ₀ψ_m + Σ Δ_i y_{m−i}` is used.
pub fn girsanov_kernel(
    model: &ValidatedModel,
    s: usize,
    m: usize,
    lagged: &[&DVector<f64>],
    sigma: &SymMatrix,
) -> Result<DVector<f64>> {
    let n = model.n();
    let (d0, ds) = model.kernel_coefficients(s);
    if lagged.len() < ds.len() || lagged.iter().any(|y| y.len() != n) || sigma.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "kernel needs {} lagged vectors of length {n} and an {n}x{n} covariance",
            ds.len()
        )));
    }
    if m == 0 || m > model.horizon() {
        return Err(Error::InvalidArgument(format!(
            "step {m} outside 1..={}",
            model.horizon()
        )));
    }
    let mut theta = d0 * model.exog(m);
    for (d, y) in ds.iter().zip(lagged) {
        theta += d * *y;
    }
    Ok(theta - sigma.diagonal() * 0.5)
}

/// Market state-price density `L_1..L_T` along a realized path. `ys` and
/// `regimes` both cover steps `1..=len`.
pub fn state_price_density(
    model: &ValidatedModel,
    ys: &[DVector<f64>],
    regimes: &[usize],
) -> Result<Vec<f64>> {
    if ys.len() != regimes.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} observations but {} regimes",
            ys.len(),
            regimes.len()
        )));
    }
    let lags = model.lags().max(1);
    let mut cov = CovarianceState::new(model);
    let mut log_l = 0.0;
    let mut out = Vec::with_capacity(ys.len());
    for (idx, (&s, y)) in regimes.iter().zip(ys).enumerate() {
        let m = idx + 1;
        let lagged: Vec<&DVector<f64>> = (1..=lags)
            .map(|i| {
                let j = m as isize - i as isize;
                if j >= 1 {
                    &ys[j as usize - 1]
                } else {
                    &model.spec().presample_y[(-j) as usize]
                }
            })
            .collect();
        let (chol, _) = cov.advance(model, s)?;
        let sigma = SymMatrix::symmetrized(&chol * chol.transpose());
        let theta = girsanov_kernel(model, s, m, &lagged, &sigma)?;
        let mut resid = y - model.intercept(s) * model.exog(m);
        for (i, a) in model.spec().regimes[s].lags.iter().enumerate() {
            resid -= a * lagged[i];
        }
        let l = cholesky_lower(&sigma)?;
        let w = cholesky_solve(&l, &theta);
        log_l += w.dot(&resid) - 0.5 * w.dot(&theta);
        out.push(log_l.exp());
    }
    Ok(out)
}
