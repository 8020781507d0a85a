use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::msvar::{GaussianLaw, MeasureTag};
use crate::numerics::{mvn_cdf, MvnResult, OrthantQuery, SymMatrix};

/// Linear selectors on the stacked future block `ȳᶜ_t`. Asset indices are
/// 0-based, times absolute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selector {
    /// Log spot rates of blocks `u+1..v−1`, so that
    /// `Σ_{m=u+1}^{v} r̃_m = e₁ᵀy_u + γᵀȳᶜ_t` for `t ≤ u < v`.
    Gamma { u: usize, v: usize },
    /// Asset coordinate `n_z + i` of blocks `t+1..u`.
    Beta { asset: usize, u: usize },
}

impl Selector {
    /// Vector form over the window of `law`.
    pub fn vector(&self, law: &GaussianLaw) -> Result<DVector<f64>> {
        let mut g = DVector::zeros(law.dim());
        match *self {
            Selector::Gamma { u, v } => {
                if u < law.t || v < u || v > law.end + 1 {
                    return Err(Error::SelectorOutOfWindow(format!(
                        "gamma({u},{v}) outside ({}, {}]",
                        law.t, law.end
                    )));
                }
                for m in u + 1..v {
                    g[law.index(m, 0)] = 1.0;
                }
            }
            Selector::Beta { asset, u } => {
                if asset >= law.n_x() || u < law.t || u > law.end {
                    return Err(Error::SelectorOutOfWindow(format!(
                        "beta({asset},{u}) outside ({}, {}]",
                        law.t, law.end
                    )));
                }
                for m in law.t + 1..=u {
                    g[law.index(m, law.n_z + asset)] = 1.0;
                }
            }
        }
        Ok(g)
    }
}

/// `J_k`: extracts the log prices `x̃_k` from the stacked vector.
pub fn j_matrix(law: &GaussianLaw, k: usize) -> Result<DMatrix<f64>> {
    if k <= law.t || k > law.end {
        return Err(Error::SelectorOutOfWindow(format!(
            "J({k}) outside ({}, {}]",
            law.t, law.end
        )));
    }
    let mut j = DMatrix::zeros(law.n_x(), law.dim());
    for i in 0..law.n_x() {
        j[(i, law.index(k, law.n_z + i))] = 1.0;
    }
    Ok(j)
}

/// Moves `base` to a forward measure (one `(asset, u)` pair) or a pair
/// measure (two). The mean gains `Ψ₂₂⁻¹Σ̄₂₂ Σβ`; the covariance is unchanged.
pub fn shifted_law(base: &GaussianLaw, shifts: &[(usize, usize)]) -> Result<GaussianLaw> {
    let tag = match *shifts {
        [] => base.tag,
        [(asset, u)] => MeasureTag::Forward { asset, u },
        [(i, u), (j, v)] => MeasureTag::Pair { i, u, j, v },
        _ => {
            return Err(Error::InvalidArgument(
                "at most two measure shifts are supported".into(),
            ))
        }
    };
    let mut beta = DVector::zeros(base.dim());
    for &(asset, u) in shifts {
        beta += Selector::Beta { asset, u }.vector(base)?;
    }
    let mut out = base.clone();
    if base.dim() > 0 {
        out.mean += &base.shift * beta;
    }
    out.tag = tag;
    Ok(out)
}

/// Event for [`discounted_factor_expectation`]: the whole space or
/// `{A ȳᶜ_t ≤ upper}`.
#[derive(Debug, Clone)]
pub enum Event {
    FullSpace,
    Orthant {
        a: DMatrix<f64>,
        upper: DVector<f64>,
    },
}

/// Result of `Ẽ^G[(D_v/D_u) 1_A | ℋ_t] = prefactor · 𝒩(A, law)`.
#[derive(Debug, Clone)]
pub struct DiscountedExpectation {
    /// `(D_{t∨u}/D_u)·exp([a]^v_{t∨u})`.
    pub prefactor: f64,
    /// Law with mean `μ − Σγ`.
    pub law: GaussianLaw,
    pub probability: Option<MvnResult>,
}

impl DiscountedExpectation {
    pub fn value(&self) -> f64 {
        self.prefactor * self.probability.as_ref().map_or(1.0, |p| p.prob)
    }
}

/// Closed-form evaluation of the expected discount factor between `u` and
/// `v` on an event. `rates[j] = e₁ᵀy_j` for `j = 0..=t` (the known history).
pub fn discounted_factor_expectation(
    law: &GaussianLaw,
    rates: &[f64],
    u: usize,
    v: usize,
    event: &Event,
    mvn_tol: f64,
) -> Result<DiscountedExpectation> {
    let t = law.t;
    let w = t.max(u);
    if w > v || v > law.end.max(t) {
        return Err(Error::SelectorOutOfWindow(format!(
            "discounting from {u} to {v} with window ({t}, {}]",
            law.end
        )));
    }
    if rates.len() <= t {
        return Err(Error::DimensionMismatch(format!(
            "need rate history up to {t}, got {} values",
            rates.len()
        )));
    }
    // Known part: r̃_{u+1}..r̃_{t∨u+1} ∧ v, i.e. e₁ᵀy_j for j = u..min(t, v−1).
    let mut log_known = 0.0;
    if v > u {
        for rate in rates.iter().take(t.min(v - 1) + 1).skip(u) {
            log_known -= rate;
        }
    }
    let mut shifted = law.clone();
    let mut exponent = log_known;
    if law.dim() > 0 {
        // Rates after t are random: blocks max(u, t+1)..v−1 enter through γ.
        let gamma = Selector::Gamma {
            u: (t + 1).max(u) - 1,
            v,
        }
        .vector(law)?;
        let sg = law.cov.as_matrix() * &gamma;
        exponent += -gamma.dot(&law.mean) + 0.5 * gamma.dot(&sg);
        shifted.mean -= sg;
    }
    shifted.tag = MeasureTag::Discounted { v };
    let probability = match event {
        Event::FullSpace => None,
        Event::Orthant { a, upper } => {
            let q = orthant(&shifted, a, upper, mvn_tol)?;
            Some(mvn_cdf(&q)?)
        }
    };
    Ok(DiscountedExpectation {
        prefactor: exponent.exp(),
        law: shifted,
        probability,
    })
}

/// Law of `A·ȳᶜ_t` for a matrix on the full stacked vector.
fn orthant(
    law: &GaussianLaw,
    a: &DMatrix<f64>,
    upper: &DVector<f64>,
    tol: f64,
) -> Result<OrthantQuery> {
    if a.ncols() != law.dim() || a.nrows() != upper.len() {
        return Err(Error::DimensionMismatch(format!(
            "event matrix is {}x{}, law has dimension {} and bound {}",
            a.nrows(),
            a.ncols(),
            law.dim(),
            upper.len()
        )));
    }
    let mean = a * &law.mean;
    let cov = law.cov.congruence(a);
    Ok(OrthantQuery::new(upper.clone(), mean, cov).with_tol(tol))
}

/// Gaussian law of `A·x̃_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectedLaw {
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
}

impl ProjectedLaw {
    /// `P[A·x̃_k ≤ upper]`.
    pub fn cdf(&self, upper: &DVector<f64>, tol: f64) -> Result<MvnResult> {
        mvn_cdf(
            &OrthantQuery::new(upper.clone(), self.mean.clone(), self.cov.clone()).with_tol(tol),
        )
    }
}

/// Affine image `A J_k ȳᶜ_t` of the stacked law.
pub fn project_law(law: &GaussianLaw, a: &DMatrix<f64>, k: usize) -> Result<ProjectedLaw> {
    if a.ncols() != law.n_x() {
        return Err(Error::DimensionMismatch(format!(
            "projection has {} columns, expected {}",
            a.ncols(),
            law.n_x()
        )));
    }
    let aj = a * j_matrix(law, k)?;
    Ok(ProjectedLaw {
        mean: &aj * &law.mean,
        cov: law.cov.congruence(&aj),
    })
}
