//! Physical simulation of the two-regime reference market.

use elmax::io::load_model;
use elmax::msvar::{covariance_sequence, simulate_physical};

pub fn run_example() -> elmax::Result<()> {
    let (model, _) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/r2_model.json"
    ))?;
    let (path, ys) = simulate_physical(&model, 7)?;
    println!("regimes {:?}", path.states);
    for (m, y) in ys.iter().enumerate() {
        println!(
            "step {}: rate {:.5}, prices ({:.3}, {:.3})",
            m + 1,
            y[0],
            y[1].exp(),
            y[2].exp()
        );
    }
    let sig = covariance_sequence(&model, &[], &path)?;
    println!(
        "asset 1 variance along the path: {:?}",
        sig.iter().map(|s| s[(1, 1)]).collect::<Vec<_>>()
    );
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
