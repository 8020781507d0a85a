//! Calls and puts on the weighted maximum of two assets.

use elmax::io::load_model;
use elmax::pricing::{call_on_max, forward_max, put_on_max, zcb_price, MaxClaim};

pub fn run_example() -> elmax::Result<()> {
    let (model, state) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/r2_model.json"
    ))?;
    let tol = 1e-6;
    for k in 1..=3 {
        let claim = MaxClaim::new(k, vec![1.0, 2.0], 100.0)?;
        let call = call_on_max(&model, &state, &claim, tol)?;
        let put = put_on_max(&model, &state, &claim, tol)?;
        let fwd = forward_max(&model, &state, &claim, tol)?;
        let bond = zcb_price(&model, &state, k, tol)?;
        let parity = call.value - put.value - (fwd.value - 100.0 * bond.value);
        println!(
            "k={k}: call {:.4} put {:.4} ({} regime paths), parity gap {parity:.1e}",
            call.value, put.value, call.path_count
        );
    }
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
