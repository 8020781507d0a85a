//! Regime posterior given observed data, and averaging over parameter draws.

use elmax::io::load_model;
use elmax::measures::regime_posterior;
use elmax::msvar::{simulate_physical, MarketState, MeasureMode};
use elmax::pricing::{bayesian_average, zcb_price, ParameterDraw};

pub fn run_example() -> elmax::Result<()> {
    let (model, _) = load_model(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/r2_model.json"
    ))?;
    let (path, ys) = simulate_physical(&model, 21)?;
    let state = MarketState::new(ys[..3].to_vec(), None)?;
    let post = regime_posterior(&model, &state, MeasureMode::Physical)?;
    println!("true regimes {:?}", &path.states[..3]);
    for (p, w) in post.iter().filter(|(_, w)| *w > 0.01) {
        println!("  {:?}: {w:.4}", p.states);
    }

    let spec = model.spec();
    let draw = |scale: f64| {
        let mut regimes = spec.regimes.clone();
        for r in &mut regimes {
            r.intercept[(0, 0)] *= scale;
        }
        ParameterDraw {
            regimes,
            covariance: spec.covariance.clone(),
            transition: spec.transition.clone(),
        }
    };
    let draws = [draw(0.8), draw(1.0), draw(1.2)];
    let avg = bayesian_average(&model, &draws, |m| {
        Ok(zcb_price(m, &MarketState::new(vec![], None)?, 3, 1e-6)?.value)
    })?;
    println!(
        "bond to step 3 averaged over draws: {:.6} (dispersion {:.2e})",
        avg.mean, avg.dispersion
    );
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
