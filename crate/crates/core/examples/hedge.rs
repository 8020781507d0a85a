//! Locally risk-minimizing hedge of a segregated fund contract.

use elmax::actuarial::LifeTable;
use elmax::hedging::hedge_step;
use elmax::io::{load_model, load_products};
use elmax::mc::{mc_hedge_residual, simulate_risk_neutral};
use elmax::pricing::PremiumOptions;

pub fn run_example() -> elmax::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let (model, state) = load_model(format!("{dir}/r2_model.json"))?;
    let table = LifeTable::load(format!("{dir}/table_3age.csv"))?;
    let product = load_products(format!("{dir}/r2_products.json"))?.remove(0);
    let step = hedge_step(
        &product,
        &model,
        &state,
        &table,
        &PremiumOptions::default(),
        false,
    )?;
    let pos = &step.position;
    println!(
        "value {:.4}, holdings {:?}, cash {:.4}",
        pos.value, pos.h, pos.h0
    );

    let ens = simulate_risk_neutral(&model, &state, product.horizon, 20_000, 5)?;
    for (j, r) in mc_hedge_residual(&ens, &product, &table, None, pos)?
        .iter()
        .enumerate()
    {
        println!("cov(cost, dX{j}) = {:.4} +/- {:.4}", r.mean, r.std_error);
    }
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
