//! Single premiums of the four contract types, with a Monte Carlo check.

use elmax::actuarial::LifeTable;
use elmax::io::{load_model, load_products};
use elmax::mc::{mc_premium, simulate_risk_neutral};
use elmax::pricing::{premium, PremiumOptions};

pub fn run_example() -> elmax::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let (model, state) = load_model(format!("{dir}/r2_model.json"))?;
    let table = LifeTable::load(format!("{dir}/table_3age.csv"))?;
    let opts = PremiumOptions::default();
    for p in load_products(format!("{dir}/r2_products.json"))? {
        let v = premium(&p, &model, &state, &table, &opts)?;
        let ens = simulate_risk_neutral(&model, &state, p.horizon, 20_000, 3)?;
        let mc = mc_premium(&ens, &p, &table, None)?;
        println!(
            "{:?}: {:.4} (Monte Carlo {:.4} +/- {:.4})",
            p.kind, v.value, mc.mean, mc.std_error
        );
    }
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
