//! State-price density, forward measures and the discount-factor expectation.

use elmax::io::load_model;
use elmax::measures::{discounted_factor_expectation, shifted_law, state_price_density, Event};
use elmax::msvar::{enumerate_paths, law_for_path, simulate_physical, MeasureMode};

pub fn run_example() -> elmax::Result<()> {
    let (model, state) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/r2_model.json"
    ))?;

    let n = 2000;
    let mut sum = 0.0;
    for seed in 0..n {
        let (path, ys) = simulate_physical(&model, seed)?;
        sum += state_price_density(&model, &ys, &path.states)?
            .last()
            .copied()
            .unwrap_or(1.0);
    }
    println!("mean of L_T over {n} physical paths: {:.4}", sum / n as f64);

    let set = enumerate_paths(&model, None, 1, 3)?;
    let path = &set.paths[0];
    let law = law_for_path(&model, &state, &[], path, MeasureMode::RiskNeutral)?;
    let fwd = shifted_law(&law, &[(0, 2)])?;
    println!(
        "regimes {:?}: asset means at step 2 {:?}, under the asset-0 forward measure {:?}",
        path.states,
        law.asset_mean(2).as_slice(),
        fwd.asset_mean(2).as_slice()
    );
    let rates = state.rate_history(&model);
    let bond = discounted_factor_expectation(&law, &rates, 0, 3, &Event::FullSpace, 1e-6)?;
    println!("bond to step 3 on this path: {:.6}", bond.value());
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
