//! Orthant probabilities of a multivariate normal.

use elmax::numerics::{bvn_cdf, mvn_cdf, OrthantQuery, SymMatrix};
use nalgebra::DVector;

pub fn run_example() -> elmax::Result<()> {
    let half = mvn_cdf(&OrthantQuery::new(
        DVector::zeros(1),
        DVector::zeros(1),
        SymMatrix::identity(1),
    ))?;
    println!("P[Z <= 0] = {:.8}", half.prob);

    let rho = 0.5;
    println!(
        "bivariate, rho = 0.5: {:.8} (1/3 expected)",
        bvn_cdf(0.0, 0.0, rho)
    );

    let cov = SymMatrix::from_rows(&[
        vec![1.0, 0.5, 0.5],
        vec![0.5, 1.0, 0.5],
        vec![0.5, 0.5, 1.0],
    ])?;
    let q = OrthantQuery::new(DVector::zeros(3), DVector::zeros(3), cov).with_tol(1e-7);
    let r = mvn_cdf(&q)?;
    println!(
        "trivariate, equal correlation 0.5: {:.8} +/- {:.1e} (0.25 expected)",
        r.prob, r.error
    );
    Ok(())
}

fn main() -> elmax::Result<()> {
    run_example()
}
