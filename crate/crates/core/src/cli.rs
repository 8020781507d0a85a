//! Command-line front end. Reports are JSON with a `schema_version` field.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::actuarial::LifeTable;
use crate::error::{Error, Result};
use crate::hedging::{hedge_step, HedgePosition};
use crate::io::{load_model, load_products};
use crate::mc::{mc_hedge_residual, mc_premium, mc_price_many, simulate_risk_neutral, McEstimate};
use crate::msvar::{CovarianceModel, MarketState, ValidatedModel};
use crate::numerics::DEFAULT_MVN_TOL;
use crate::pricing::{premium, PremiumOptions, PriceResult, ProductKind, ProductSpec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(
    name = "elmax",
    version,
    about = "Equity-linked life contracts on the maximum of several assets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub config: RunConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Premium of every product in the product file.
    Price,
    /// Locally risk-minimizing holdings at each observed step.
    Hedge,
    /// Risk-neutral ensemble summary, optionally dumped to CSV.
    Simulate,
    /// Checks the model, table and product files.
    Validate,
}

#[derive(Debug, Clone, Args)]
pub struct RunConfig {
    /// Model JSON file.
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Life table CSV (`age,qx`).
    #[arg(long, global = true)]
    pub table: Option<PathBuf>,
    /// Product JSON file: one product or an array.
    #[arg(long, global = true)]
    pub product: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Monte Carlo paths; 0 skips the Monte Carlo check in price and hedge.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true, default_value_t = DEFAULT_MVN_TOL)]
    pub mvn_tol: f64,
    /// Adds the unit-linked guarantee undiscounted.
    #[arg(long, global = true)]
    pub raw_guarantee_leg: bool,
    /// Books the hedge cash account in discounted units.
    #[arg(long, global = true)]
    pub discounted_ledger: bool,
    #[arg(long, global = true)]
    pub antithetic: bool,
    /// Report file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Ensemble CSV dump for `simulate`.
    #[arg(long, global = true)]
    pub dump: Option<PathBuf>,
    /// Worker threads; all cores when absent.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Report<T: Serialize> {
    schema_version: u32,
    command: &'static str,
    seed: u64,
    mvn_tol: f64,
    results: T,
}

#[derive(Debug, Serialize)]
struct PriceRecord {
    kind: ProductKind,
    age: u32,
    t: usize,
    horizon: usize,
    premium: PriceResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<McEstimate>,
}

#[derive(Debug, Serialize)]
struct HedgeRecord {
    #[serde(flatten)]
    position: HedgePosition,
    discount: f64,
    lambda: Vec<f64>,
    omega: Vec<Vec<f64>>,
    /// `Ẽ[C·ΔX̄ⱼ]` by Monte Carlo, in units of `D_t²`.
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<Vec<McEstimate>>,
}

#[derive(Debug, Serialize)]
struct HedgeReport {
    kind: ProductKind,
    age: u32,
    steps: Vec<HedgeRecord>,
}

#[derive(Debug, Serialize)]
struct StepSummary {
    step: usize,
    /// `D_m/D_t`.
    discount: McEstimate,
    /// `X̄_m/D_t` per asset.
    discounted_prices: Vec<McEstimate>,
    /// Fraction of paths in each regime.
    regime_frequency: Vec<McEstimate>,
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    t: usize,
    horizon: usize,
    n_paths: usize,
    antithetic: bool,
    steps: Vec<StepSummary>,
}

#[derive(Debug, Serialize)]
struct ModelDiagnostics {
    n: usize,
    n_z: usize,
    n_x: usize,
    lags: usize,
    regimes: usize,
    horizon: usize,
    covariance: &'static str,
    observed_steps: usize,
    regimes_observed: bool,
}

#[derive(Debug, Serialize)]
struct TableDiagnostics {
    min_age: u32,
    max_age: u32,
}

#[derive(Debug, Serialize)]
struct ProductDiagnostics {
    kind: ProductKind,
    age: u32,
    horizon: usize,
    maturities: Vec<usize>,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    valid: bool,
    model: ModelDiagnostics,
    #[serde(skip_serializing_if = "Option::is_none")]
    table: Option<TableDiagnostics>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    products: Vec<ProductDiagnostics>,
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::InvalidArgument(format!("--{flag} is required")))
}

impl RunConfig {
    fn model(&self) -> Result<(ValidatedModel, MarketState)> {
        load_model(required(&self.model, "model")?)
    }

    fn table(&self) -> Result<LifeTable> {
        LifeTable::load(required(&self.table, "table")?)
    }

    fn products(&self) -> Result<Vec<ProductSpec>> {
        load_products(required(&self.product, "product")?)
    }

    fn options(&self) -> Result<PremiumOptions> {
        if !(self.mvn_tol > 0.0 && self.mvn_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "--mvn-tol must be positive, got {}",
                self.mvn_tol
            )));
        }
        Ok(PremiumOptions {
            mvn_tol: self.mvn_tol,
            raw_guarantee_leg: self.raw_guarantee_leg,
            tilt: None,
        })
    }

    fn report<T: Serialize>(&self, command: &'static str, results: T) -> Report<T> {
        Report {
            schema_version: SCHEMA_VERSION,
            command,
            seed: self.seed,
            mvn_tol: self.mvn_tol,
            results,
        }
    }
}

/// Market state truncated to the product's valuation step.
fn state_at(state: &MarketState, t: usize) -> Result<MarketState> {
    if t > state.t {
        return Err(Error::InvalidProduct(format!(
            "valuation step {t} is beyond the {} observed steps",
            state.t
        )));
    }
    Ok(state.prefix(t))
}

fn price(cfg: &RunConfig) -> Result<String> {
    let (model, state) = cfg.model()?;
    let table = cfg.table()?;
    let opts = cfg.options()?;
    let paths = cfg.paths.unwrap_or(0);
    let mut out = Vec::new();
    for p in cfg.products()? {
        let st = state_at(&state, p.t)?;
        let value = premium(&p, &model, &st, &table, &opts)?;
        let mc = if paths > 0 && !opts.raw_guarantee_leg {
            let ens = simulate_risk_neutral(&model, &st, p.horizon, paths, cfg.seed)?
                .with_antithetic(cfg.antithetic);
            Some(mc_premium(&ens, &p, &table, None)?)
        } else {
            None
        };
        out.push(PriceRecord {
            kind: p.kind,
            age: p.age,
            t: p.t,
            horizon: p.horizon,
            premium: value,
            mc,
        });
    }
    to_json(&cfg.report("price", out))
}

fn hedge(cfg: &RunConfig) -> Result<String> {
    let (model, state) = cfg.model()?;
    let table = cfg.table()?;
    let opts = cfg.options()?;
    let paths = cfg.paths.unwrap_or(0);
    let mut out = Vec::new();
    for p in cfg.products()? {
        p.validate(&model)?;
        let mut steps = Vec::new();
        for t in p.t..=state.t.min(p.horizon - 1) {
            let product = ProductSpec { t, ..p.clone() };
            let st = state.prefix(t);
            let step = hedge_step(&product, &model, &st, &table, &opts, cfg.discounted_ledger)?;
            let residual = if paths > 0 {
                let booked = hedge_step(&product, &model, &st, &table, &opts, false)?;
                let ens = simulate_risk_neutral(&model, &st, p.horizon, paths, cfg.seed)?
                    .with_antithetic(cfg.antithetic);
                Some(mc_hedge_residual(
                    &ens,
                    &product,
                    &table,
                    None,
                    &booked.position,
                )?)
            } else {
                None
            };
            steps.push(HedgeRecord {
                position: step.position,
                discount: step.discount,
                lambda: step.moments.lambda.iter().copied().collect(),
                omega: step.moments.omega.to_rows(),
                residual,
            });
        }
        out.push(HedgeReport {
            kind: p.kind,
            age: p.age,
            steps,
        });
    }
    to_json(&cfg.report("hedge", out))
}

fn simulate(cfg: &RunConfig) -> Result<String> {
    let (model, state) = cfg.model()?;
    let paths = cfg.paths.unwrap_or(10_000);
    let ens = simulate_risk_neutral(&model, &state, model.horizon(), paths, cfg.seed)?
        .with_antithetic(cfg.antithetic);
    if let Some(dump) = &cfg.dump {
        let file = std::fs::File::create(dump)
            .map_err(|e| Error::Io(format!("{}: {e}", dump.display())))?;
        ens.write_csv(std::io::BufWriter::new(file), None)?;
    }
    let (n_x, n_s) = (model.n_x(), model.regime_count());
    let width = 1 + n_x + n_s;
    let steps: Vec<usize> = (state.t + 1..=model.horizon()).collect();
    let est = mc_price_many(&ens, width * steps.len(), |v, out| {
        for (row, &m) in out.chunks_mut(width).zip(&steps) {
            row[0] = v.discount(m);
            row[1..=n_x].copy_from_slice(v.discounted_prices(m).as_slice());
            row[1 + n_x..].iter_mut().for_each(|r| *r = 0.0);
            row[1 + n_x + v.regime(m)] = 1.0;
        }
    })?;
    let summary = SimulateReport {
        t: state.t,
        horizon: model.horizon(),
        n_paths: paths,
        antithetic: cfg.antithetic,
        steps: est
            .chunks(width)
            .zip(&steps)
            .map(|(e, &m)| StepSummary {
                step: m,
                discount: e[0],
                discounted_prices: e[1..=n_x].to_vec(),
                regime_frequency: e[1 + n_x..].to_vec(),
            })
            .collect(),
    };
    to_json(&cfg.report("simulate", summary))
}

fn validate(cfg: &RunConfig) -> Result<String> {
    let (model, state) = cfg.model()?;
    let table = cfg.table.as_ref().map(LifeTable::load).transpose()?;
    let products = match &cfg.product {
        Some(p) => load_products(p)?,
        None => Vec::new(),
    };
    let mut prods = Vec::new();
    for p in &products {
        p.validate(&model)?;
        if let Some(t) = &table {
            p.mortality(t, None)?;
        }
        prods.push(ProductDiagnostics {
            kind: p.kind,
            age: p.age,
            horizon: p.horizon,
            maturities: p.maturities(),
        });
    }
    let report = ValidateReport {
        valid: true,
        model: ModelDiagnostics {
            n: model.n(),
            n_z: model.n_z(),
            n_x: model.n_x(),
            lags: model.lags(),
            regimes: model.regime_count(),
            horizon: model.horizon(),
            covariance: match model.spec().covariance {
                CovarianceModel::ConstantPerRegime(_) => "constant_per_regime",
                CovarianceModel::VechGarch { .. } => "vech_garch",
            },
            observed_steps: state.t,
            regimes_observed: state.regimes.is_some(),
        },
        table: table.map(|t| TableDiagnostics {
            min_age: t.min_age(),
            max_age: t.max_age(),
        }),
        products: prods,
    };
    to_json(&cfg.report("validate", report))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

/// Runs one command and returns its JSON report.
pub fn execute(command: Command, cfg: &RunConfig) -> Result<String> {
    let go = || match command {
        Command::Price => price(cfg),
        Command::Hedge => hedge(cfg),
        Command::Simulate => simulate(cfg),
        Command::Validate => validate(cfg),
    };
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(go),
        None => go(),
    }
}

/// Exit code for an error: 2 for rejected inputs, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() {
        2
    } else {
        1
    }
}

/// Parses `args`, runs the command and writes the report. Returns the exit
/// code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    1
                }
            };
        }
    };
    let result = execute(cli.command, &cli.config).and_then(|report| match &cli.config.out {
        Some(path) => {
            std::fs::write(path, &report).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => stdout
            .write_all(report.as_bytes())
            .map_err(|e| Error::Io(e.to_string())),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            exit_code(&e)
        }
    }
}
