//! Analytic call on the maximum against the Monte Carlo oracle.

use elmax::io::load_model;
use elmax::mc::{mc_price, simulate_risk_neutral};
use elmax::pricing::{call_on_max, MaxClaim};

pub fn run_example() -> elmax::Result<()> {
    let (model, state) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/r2_model.json"
    ))?;
    let claim = MaxClaim::new(2, vec![1.0, 2.0], 100.0)?;
    let exact = call_on_max(&model, &state, &claim, 1e-6)?;
    for antithetic in [false, true] {
        let ens = simulate_risk_neutral(&model, &state, 2, 50_000, 11)?.with_antithetic(antithetic);
        let est = mc_price(&ens, |v| {
            v.discount(2) * (claim.maximum(v.prices(2).as_slice()) - claim.guarantee).max(0.0)
        })?;
        println!(
            "antithetic={antithetic}: {:.4} +/- {:.4}, analytic {:.4}, z = {:.2}",
            est.mean,
            est.std_error,
            exact.value,
            est.z_score(exact.value)
        );
    }
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
