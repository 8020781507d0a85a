//! Life tables, survival probabilities and the tilted mortality law.

use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Sum-to-one tolerance of the tilted law.
pub const MORTALITY_TOL: f64 = 1e-12;

/// One-year death probabilities `q_x` for contiguous integer ages.
#[derive(Debug, Clone, PartialEq)]
pub struct LifeTable {
    min_age: u32,
    q: Vec<f64>,
}

#[derive(Deserialize)]
struct Row {
    age: u32,
    qx: f64,
}

impl LifeTable {
    /// Builds a table from `(age, q)` pairs sorted by age.
    pub fn new(rows: &[(u32, f64)]) -> Result<Self> {
        let Some(&(min_age, _)) = rows.first() else {
            return Err(Error::MalformedTable("table is empty".into()));
        };
        let mut q = Vec::with_capacity(rows.len());
        for (i, &(age, qx)) in rows.iter().enumerate() {
            if age != min_age + i as u32 {
                return Err(Error::MalformedTable(format!(
                    "expected age {} but found {age}",
                    min_age + i as u32
                )));
            }
            if !(0.0..=1.0).contains(&qx) {
                return Err(Error::MalformedTable(format!("q at age {age} is {qx}")));
            }
            q.push(qx);
        }
        if q.last() != Some(&1.0) {
            return Err(Error::MalformedTable(format!(
                "table does not close: q at age {} is not 1",
                min_age + q.len() as u32 - 1
            )));
        }
        Ok(LifeTable { min_age, q })
    }

    /// Parses `age,qx` CSV with a header row.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rows = Vec::new();
        for rec in csv::Reader::from_reader(reader).deserialize::<Row>() {
            let r = rec.map_err(|e| Error::MalformedTable(e.to_string()))?;
            rows.push((r.age, r.qx));
        }
        Self::new(&rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())
            .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_csv(file)
    }

    pub fn min_age(&self) -> u32 {
        self.min_age
    }

    pub fn max_age(&self) -> u32 {
        self.min_age + self.q.len() as u32 - 1
    }

    /// `q_age`.
    pub fn q(&self, age: u32) -> Result<f64> {
        if age < self.min_age || age > self.max_age() {
            return Err(Error::AgeOutOfRange(format!(
                "age {age} outside {}..={}",
                self.min_age,
                self.max_age()
            )));
        }
        Ok(self.q[(age - self.min_age) as usize])
    }

    /// `ₜpₓ = ∏_{j<t}(1 − q_{x+j})`.
    pub fn survival(&self, x: u32, t: u32) -> Result<f64> {
        if x < self.min_age || x > self.max_age() {
            return Err(Error::AgeOutOfRange(format!("issue age {x} not in table")));
        }
        (0..t).try_fold(1.0, |p, j| Ok(p * (1.0 - self.q(x + j)?)))
    }
}

/// Log-density tilt `g₁..g_T` of the mortality measure change.
#[derive(Debug, Clone, PartialEq)]
pub struct MortalityTilt(pub Vec<f64>);

impl MortalityTilt {
    pub fn zero(horizon: usize) -> Self {
        MortalityTilt(vec![0.0; horizon])
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    fn check(&self) -> Result<()> {
        if self.0.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidArgument("tilt must be finite".into()));
        }
        Ok(())
    }
}

/// Risk-neutral lifetime law over `T` years for a life aged `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct TiltedMortality {
    /// `_Tp̃ₓ`.
    pub survive: f64,
    /// `_{k−1|}q̃ₓ` for `k = 1..=T`.
    pub deferred: Vec<f64>,
    /// `ₖq̃ₓ` for `k = 1..=T`.
    pub cumulative: Vec<f64>,
}

impl TiltedMortality {
    pub fn horizon(&self) -> usize {
        self.deferred.len()
    }

    /// `ₖp̃ₓ` for `0 ≤ k ≤ T`.
    pub fn survival(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            1.0 - self.cumulative[k - 1]
        }
    }

    /// Conditional death weights `P̃[K_x = k | T_x > t]` for `k = t..T−1`
    /// and survival weight `P̃[T_x > T | T_x > t]`.
    pub fn conditional_weights(&self, t: usize) -> Result<(Vec<f64>, f64)> {
        let alive = self.survival(t);
        if t > self.horizon() {
            return Err(Error::InvalidArgument(format!(
                "valuation time {t} beyond horizon {}",
                self.horizon()
            )));
        }
        if alive <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "survival to {t} has zero probability"
            )));
        }
        let deaths = (t..self.horizon())
            .map(|k| self.deferred[k] / alive)
            .collect();
        Ok((deaths, self.survive / alive))
    }
}

/// `f_m = e^{g_m}·_{m−1}p + (1 − e^{g_m})·_mp`, divided by `_{m−1}p`, which
/// stays finite when the survival probability reaches 0.
fn factors(table: &LifeTable, x: u32, tilt: &MortalityTilt) -> Result<Vec<f64>> {
    tilt.0
        .iter()
        .enumerate()
        .map(|(m, g)| Ok(1.0 + (g.exp() - 1.0) * table.q(x + m as u32)?))
        .collect()
}

fn in_unit(v: f64, what: &str) -> Result<f64> {
    let tol = MORTALITY_TOL;
    if !(-tol..=1.0 + tol).contains(&v) || !v.is_finite() {
        return Err(Error::TiltedProbabilityOutOfRange(format!("{what} = {v}")));
    }
    Ok(v.clamp(0.0, 1.0))
}

/// Tilted survival and death probabilities over the tilt's horizon.
pub fn tilted_mortality(
    table: &LifeTable,
    x: u32,
    horizon: usize,
    tilt: &MortalityTilt,
) -> Result<TiltedMortality> {
    tilt.check()?;
    if tilt.horizon() != horizon {
        return Err(Error::DimensionMismatch(format!(
            "tilt has {} entries for horizon {horizon}",
            tilt.horizon()
        )));
    }
    let f = factors(table, x, tilt)?;
    let mut prod = 1.0;
    let mut deferred = Vec::with_capacity(horizon);
    let mut cumulative = Vec::with_capacity(horizon);
    for k in 1..=horizon {
        prod *= f[k - 1];
        let before = table.survival(x, k as u32 - 1)?;
        let after = table.survival(x, k as u32)?;
        let g = tilt.0[k - 1];
        deferred.push(in_unit(
            g.exp() * (before - after) / prod,
            &format!("deferred death probability in year {k}"),
        )?);
        cumulative.push(in_unit(
            1.0 - after / prod,
            &format!("death probability within {k} years"),
        )?);
    }
    let survive = in_unit(
        table.survival(x, horizon as u32)? / prod,
        "survival probability",
    )?;
    let total = survive + deferred.iter().sum::<f64>();
    if (total - 1.0).abs() > MORTALITY_TOL {
        return Err(Error::TiltedProbabilityOutOfRange(format!(
            "tilted outcomes sum to {total}"
        )));
    }
    Ok(TiltedMortality {
        survive,
        deferred,
        cumulative,
    })
}

/// Lifetime outcome over the horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LifeOutcome {
    /// Death during year `k` (`K_x = k − 1`).
    DeathInYear(usize),
    Survival,
}

/// Value of the mortality density `K_T` on a lifetime outcome.
pub fn mortality_density(
    table: &LifeTable,
    x: u32,
    tilt: &MortalityTilt,
    outcome: LifeOutcome,
) -> Result<f64> {
    tilt.check()?;
    let f = factors(table, x, tilt)?;
    match outcome {
        LifeOutcome::Survival => Ok(1.0 / f.iter().product::<f64>()),
        LifeOutcome::DeathInYear(k) => {
            if k == 0 || k > tilt.horizon() {
                return Err(Error::InvalidArgument(format!(
                    "death year {k} outside 1..={}",
                    tilt.horizon()
                )));
            }
            Ok(tilt.0[k - 1].exp() / f[..k].iter().product::<f64>())
        }
    }
}
