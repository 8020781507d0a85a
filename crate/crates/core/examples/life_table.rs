//! Life table, survival and the tilted mortality law.

use elmax::actuarial::{
    mortality_density, tilted_mortality, LifeOutcome, LifeTable, MortalityTilt,
};

pub fn run_example() -> elmax::Result<()> {
    let table = LifeTable::load(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/fixtures/table_3age.csv"
    ))?;
    println!("ages {}..={}", table.min_age(), table.max_age());
    println!("2p60 = {:.4}", table.survival(60, 2)?);

    let tilt = MortalityTilt(vec![2f64.ln(), 0.0]);
    let tm = tilted_mortality(&table, 60, 2, &tilt)?;
    println!(
        "tilted deferred deaths {:?}, survival {:.6}",
        tm.deferred, tm.survive
    );

    let mut total = 0.0;
    let physical = [
        (LifeOutcome::DeathInYear(1), 0.1),
        (LifeOutcome::DeathInYear(2), 0.9 * 0.2),
        (LifeOutcome::Survival, 0.72),
    ];
    for (outcome, p) in physical {
        let k = mortality_density(&table, 60, &tilt, outcome)?;
        println!("{outcome:?}: K = {k:.6}");
        total += k * p;
    }
    println!("E[K] = {total:.12}");
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
