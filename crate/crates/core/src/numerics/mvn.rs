//! Multivariate normal rectangle probabilities `P[Z ≤ upper]`.
//!
//! One dimension is closed form, two dimensions use Gauss–Legendre
//! quadrature of the bivariate density (double-precision accurate), and
//! three or more dimensions use the separation-of-variables transform with a
//! randomly shifted rank-1 lattice. The random shifts come from a fixed seed
//! so repeated calls agree bit for bit.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::linalg::{cholesky_regularized, SymMatrix};
use super::normal::{norm_cdf, norm_inv};
use crate::error::{Error, Result};

pub const DEFAULT_MVN_TOL: f64 = 1e-6;
pub const MAX_MVN_DIM: usize = 10;

const QUADRATURE_SEED: u64 = 0x6d76_6e5f_7165_6564;
const SHIFTS: usize = 12;
const START_POINTS: usize = 512;
const MAX_POINTS: usize = 1 << 17;
// Three standard errors of the shift means: ~99.7% confidence.
const CONFIDENCE: f64 = 3.0;

/// Request for `P[Z ≤ upper]` with `Z ~ Normal(mean, cov)`.
#[derive(Debug, Clone)]
pub struct OrthantQuery {
    pub upper: DVector<f64>,
    pub mean: DVector<f64>,
    pub cov: SymMatrix,
    pub tol: f64,
}

impl OrthantQuery {
    pub fn new(upper: DVector<f64>, mean: DVector<f64>, cov: SymMatrix) -> Self {
        Self {
            upper,
            mean,
            cov,
            tol: DEFAULT_MVN_TOL,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnResult {
    pub prob: f64,
    /// Error bound at the declared confidence (zero for closed forms).
    pub error: f64,
    /// True when the covariance needed diagonal loading to factor.
    pub regularized: bool,
}

pub fn mvn_cdf(q: &OrthantQuery) -> Result<MvnResult> {
    let m = q.upper.len();
    if q.mean.len() != m || q.cov.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "upper has {m} entries, mean {}, covariance {}",
            q.mean.len(),
            q.cov.dim()
        )));
    }
    if !(q.tol > 0.0 && q.tol <= 1e-2) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} outside (0, 1e-2]",
            q.tol
        )));
    }
    if m > MAX_MVN_DIM {
        return Err(Error::DimensionMismatch(format!(
            "dimension {m} exceeds the supported maximum of {MAX_MVN_DIM}"
        )));
    }
    if q.upper.iter().chain(q.mean.iter()).any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("NaN in orthant query".into()));
    }
    // Validates the covariance before any shortcut below.
    let (_, regularized) = cholesky_regularized(&q.cov)?;

    if q.upper.iter().any(|&u| u == f64::NEG_INFINITY) {
        return Ok(MvnResult {
            prob: 0.0,
            error: 0.0,
            regularized,
        });
    }
    // Unbounded coordinates integrate out exactly.
    let keep: Vec<usize> = (0..m).filter(|&i| q.upper[i] != f64::INFINITY).collect();
    let k = keep.len();
    let b = DVector::from_fn(k, |i, _| q.upper[keep[i]] - q.mean[keep[i]]);
    let mut cov = DMatrix::from_fn(k, k, |i, j| q.cov[(keep[i], keep[j])]);
    if regularized {
        for i in 0..k {
            cov[(i, i)] += super::linalg::REGULARIZATION;
        }
    }

    let (prob, error) = match k {
        0 => (1.0, 0.0),
        1 => (norm_cdf(b[0] / cov[(0, 0)].sqrt()), 0.0),
        2 => {
            let s0 = cov[(0, 0)].sqrt();
            let s1 = cov[(1, 1)].sqrt();
            let rho = (cov[(0, 1)] / (s0 * s1)).clamp(-1.0, 1.0);
            (bvn_cdf(b[0] / s0, b[1] / s1, rho), 0.0)
        }
        _ => genz_sov(&b, &cov, q.tol)?,
    };
    Ok(MvnResult {
        prob: prob.clamp(0.0, 1.0),
        error,
        regularized,
    })
}

/// `P[X ≤ h, Y ≤ k]` for standard normals with correlation `rho`.
pub fn bvn_cdf(h: f64, k: f64, rho: f64) -> f64 {
    bvn_upper(-h, -k, rho)
}

const GL_W: [&[f64]; 3] = [
    &[0.1713244923791705, 0.3607615730481384, 0.4679139345726904],
    &[
        0.04717533638651177,
        0.1069393259953183,
        0.1600783285433464,
        0.2031674267230659,
        0.2334925365383547,
        0.2491470458134029,
    ],
    &[
        0.01761400713915212,
        0.04060142980038694,
        0.06267204833410906,
        0.08327674157670475,
        0.1019301198172404,
        0.1181945319615184,
        0.1316886384491766,
        0.1420961093183821,
        0.1491729864726037,
        0.1527533871307259,
    ],
];

const GL_X: [&[f64]; 3] = [
    &[
        -0.9324695142031522,
        -0.6612093864662647,
        -0.238619186083197,
    ],
    &[
        -0.9815606342467191,
        -0.904117256370475,
        -0.769902674194305,
        -0.5873179542866171,
        -0.3678314989981802,
        -0.1252334085114692,
    ],
    &[
        -0.9931285991850949,
        -0.9639719272779138,
        -0.912234428251326,
        -0.8391169718222188,
        -0.7463319064601508,
        -0.636053680726515,
        -0.5108670019508271,
        -0.3737060887154196,
        -0.2277858511416451,
        -0.07652652113349733,
    ],
];

/// `P[X > dh, Y > dk]` for standard normals with correlation `r`.
pub fn bvn_upper(dh: f64, dk: f64, r: f64) -> f64 {
    use std::f64::consts::PI;
    if dh == f64::INFINITY || dk == f64::INFINITY {
        return 0.0;
    }
    if dh == f64::NEG_INFINITY {
        return norm_cdf(-dk);
    }
    if dk == f64::NEG_INFINITY {
        return norm_cdf(-dh);
    }
    if r == 0.0 {
        return norm_cdf(-dh) * norm_cdf(-dk);
    }
    let grid = if r.abs() < 0.3 {
        0
    } else if r.abs() < 0.75 {
        1
    } else {
        2
    };
    let (w, x) = (GL_W[grid], GL_X[grid]);
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for i in 0..w.len() {
            for is in [-1.0, 1.0] {
                let sn = (asr * (is * x[i] + 1.0) / 2.0).sin();
                bvn += w[i] * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        bvn = bvn * asr / (4.0 * PI) + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = (1.0 - r) * (1.0 + r);
            let mut a = as_.sqrt();
            let bs = (h - k) * (h - k);
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 16.0;
            let asr = -(bs / as_ + hk) / 2.0;
            if asr > -100.0 {
                bvn = a
                    * asr.exp()
                    * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
            }
            if -hk < 100.0 {
                let b = bs.sqrt();
                bvn -= (-hk / 2.0).exp()
                    * (2.0 * PI).sqrt()
                    * norm_cdf(-b / a)
                    * b
                    * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
            }
            a /= 2.0;
            for i in 0..w.len() {
                for is in [-1.0, 1.0] {
                    let xs = (a * (is * x[i] + 1.0)).powi(2);
                    let rs = (1.0 - xs).sqrt();
                    let asr = -(bs / xs + hk) / 2.0;
                    if asr > -100.0 {
                        bvn += a
                            * w[i]
                            * asr.exp()
                            * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs
                                - (1.0 + c * xs * (1.0 + d * xs)));
                    }
                }
            }
            bvn = -bvn / (2.0 * PI);
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else {
            bvn = -bvn;
            if k > h {
                if h < 0.0 {
                    bvn += norm_cdf(k) - norm_cdf(h);
                } else {
                    bvn += norm_cdf(-h) - norm_cdf(-k);
                }
            }
        }
    }
    bvn.clamp(0.0, 1.0)
}

const LATTICE_PRIMES: [f64; 9] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0, 19.0, 23.0];

/// Separation of variables with randomized Richtmyer lattice points.
/// Returns the estimate and `CONFIDENCE` standard errors over the shifts.
fn genz_sov(b: &DVector<f64>, cov: &DMatrix<f64>, tol: f64) -> Result<(f64, f64)> {
    let m = b.len();
    // Most constraining coordinates first.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| {
        let zi = b[i] / cov[(i, i)].sqrt();
        let zj = b[j] / cov[(j, j)].sqrt();
        zi.total_cmp(&zj)
    });
    let b = DVector::from_fn(m, |i, _| b[order[i]]);
    let cov = SymMatrix::symmetrized(DMatrix::from_fn(m, m, |i, j| cov[(order[i], order[j])]));
    let (l, _) = cholesky_regularized(&cov)?;

    let generator: Vec<f64> = LATTICE_PRIMES[..m - 1]
        .iter()
        .map(|p| p.sqrt().fract())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(QUADRATURE_SEED);
    let shifts: Vec<Vec<f64>> = (0..SHIFTS)
        .map(|_| (0..m - 1).map(|_| rng.random::<f64>()).collect())
        .collect();

    let e0 = norm_cdf(b[0] / l[(0, 0)]);
    let mut y = vec![0.0; m];
    let mut w = vec![0.0; m - 1];
    let mut points = START_POINTS;
    loop {
        let mut means = [0.0; SHIFTS];
        for (s, shift) in shifts.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..points {
                for d in 0..m - 1 {
                    let u = (k as f64 * generator[d] + shift[d]).fract();
                    // Tent transform periodizes the integrand.
                    w[d] = (2.0 * u - 1.0).abs();
                }
                let mut e = e0;
                let mut f = e0;
                for i in 1..m {
                    y[i - 1] = norm_inv(w[i - 1] * e);
                    let mut s = 0.0;
                    for j in 0..i {
                        s += l[(i, j)] * y[j];
                    }
                    e = norm_cdf((b[i] - s) / l[(i, i)]);
                    f *= e;
                    if f == 0.0 {
                        break;
                    }
                }
                acc += f;
            }
            means[s] = acc / points as f64;
        }
        let mean = means.iter().sum::<f64>() / SHIFTS as f64;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (SHIFTS - 1) as f64;
        let err = CONFIDENCE * (var / SHIFTS as f64).sqrt();
        if err <= tol || points >= MAX_POINTS {
            return Ok((mean, err));
        }
        points *= 2;
    }
}
