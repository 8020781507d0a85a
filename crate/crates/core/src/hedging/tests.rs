use nalgebra::DVector;
use proptest::prelude::*;

use super::*;
use crate::mc::{mc_hedge_residual, mc_price, mc_price_many, simulate_risk_neutral};
use crate::msvar::{simulate_physical, validate_spec, CovarianceModel};
use crate::pricing::ProductKind;
use crate::testkit::{r1_like, r2_like};

const TOL: f64 = 1e-8;

fn observed(model: &ValidatedModel, t: usize, regimes: bool) -> MarketState {
    let (path, ys) = simulate_physical(model, 11).unwrap();
    MarketState::new(ys[..t].to_vec(), regimes.then(|| path.states[..t].to_vec())).unwrap()
}

fn unit_claim(model: &ValidatedModel, k: usize, g: f64) -> MaxClaim {
    let w = current_prices(model, &MarketState::initial())
        .iter()
        .map(|x| 1.0 / x)
        .collect();
    MaxClaim::new(k, w, g).unwrap()
}

fn table(q: &[f64]) -> LifeTable {
    let rows: Vec<(u32, f64)> = q
        .iter()
        .enumerate()
        .map(|(i, &v)| (60 + i as u32, v))
        .collect();
    LifeTable::new(&rows).unwrap()
}

fn product(kind: ProductKind, model: &ValidatedModel, t: usize, g: f64) -> ProductSpec {
    let c = unit_claim(model, 1, g);
    ProductSpec {
        kind,
        age: 60,
        t,
        horizon: 3,
        guarantees: vec![g; 3],
        weights: vec![c.weights; 3],
        alive: true,
    }
}

fn scale_covariance(model: &ValidatedModel, c: f64) -> ValidatedModel {
    let mut spec = model.spec().clone();
    if let CovarianceModel::ConstantPerRegime(s) = &mut spec.covariance {
        for m in s.iter_mut() {
            *m = m.scaled(c);
        }
    }
    validate_spec(spec).unwrap()
}

#[test]
fn cross_moment_trivial_cases() {
    let model = r2_like();
    let state = observed(&model, 2, true);
    let x = discounted_prices(&model, &state);
    assert_eq!(
        cross_moment(&model, &state, 0, 2, 1, 2).unwrap(),
        x[0] * x[1]
    );
    let mut spec = model.spec().clone();
    if let CovarianceModel::ConstantPerRegime(s) = &mut spec.covariance {
        for m in s.iter_mut() {
            let mut a = m.as_matrix().clone();
            a[(1, 2)] = 0.0;
            a[(2, 1)] = 0.0;
            *m = SymMatrix::new(a).unwrap();
        }
    }
    let indep = validate_spec(spec).unwrap();
    let v = cross_moment(&indep, &state, 0, 4, 1, 5).unwrap();
    assert!((v - x[0] * x[1]).abs() < 1e-12 * v);
}

#[test]
fn cross_moment_matches_simulation() {
    let model = r2_like();
    let state = MarketState::initial();
    let want = cross_moment(&model, &state, 0, 2, 1, 3).unwrap();
    let ens = simulate_risk_neutral(&model, &state, 3, 200_000, 3).unwrap();
    let est = mc_price(&ens, |v| {
        v.discounted_prices(2)[0] * v.discounted_prices(3)[1]
    })
    .unwrap();
    assert!(est.within(want, 3.0), "{want} {est:?}");
}

#[test]
fn scalar_omega() {
    let model = r1_like(0.01, 0.04, 100.0, 3);
    let state = MarketState::initial();
    let om = omega(&model, &state).unwrap();
    assert!((om[(0, 0)] - 1e4 * 0.04f64.exp_m1()).abs() < 1e-9);
    let flat = r1_like(0.01, 1e-24, 100.0, 3);
    assert!(omega(&flat, &state).unwrap()[(0, 0)].abs() < 1e-18);
}

#[test]
fn omega_matches_simulation_and_is_psd() {
    let model = r2_like();
    let state = observed(&model, 1, false);
    let om = omega(&model, &state).unwrap();
    cholesky_lower(&om).unwrap();
    let x_t = current_prices(&model, &state);
    let ens = simulate_risk_neutral(&model, &state, 2, 200_000, 4).unwrap();
    let est = mc_price_many(&ens, 3, |v, out| {
        let d = v.discounted_prices(2) - &x_t;
        out[0] = d[0] * d[0];
        out[1] = d[0] * d[1];
        out[2] = d[1] * d[1];
    })
    .unwrap();
    let d2 = discount_at(&model, &state).powi(2);
    for (e, (i, j)) in est.iter().zip([(0, 0), (0, 1), (1, 1)]) {
        assert!(
            e.within(om[(i, j)] / d2, 4.0),
            "{:?} {}",
            e,
            om[(i, j)] / d2
        );
    }
}

#[test]
fn linear_claim_lambda_is_omega_column() {
    let model = r2_like();
    let state = observed(&model, 1, true);
    let om = omega(&model, &state).unwrap();
    let x = discounted_prices(&model, &state);
    for i in 0..2 {
        for j in 0..2 {
            let lam = cross_moment(&model, &state, i, 2, j, 5).unwrap() - x[i] * x[j];
            assert!((lam - om[(i, j)]).abs() < 1e-10 * om[(i, j)].abs());
        }
    }
}

#[test]
fn r_vectors_match_simulation() {
    let model = r2_like();
    let state = MarketState::initial();
    let seg = unit_claim(&model, 2, 1.05);
    let ul = unit_claim(&model, 3, 1.05);
    let rs = r_vector(&model, &state, &seg, SumInsuredKind::Segregated, TOL).unwrap();
    let ru = r_vector(&model, &state, &ul, SumInsuredKind::UnitLinked, TOL).unwrap();
    let ens = simulate_risk_neutral(&model, &state, 3, 200_000, 6).unwrap();
    let est = mc_price_many(&ens, 4, |v, out| {
        let x1 = v.discounted_prices(1);
        let qs = v.discount(2) * (1.05 - seg.maximum(v.prices(2).as_slice())).max(0.0);
        let qu = v.discount(3) * ul.maximum(v.prices(3).as_slice()).max(1.05);
        out[0] = qs * x1[0];
        out[1] = qs * x1[1];
        out[2] = qu * x1[0];
        out[3] = qu * x1[1];
    })
    .unwrap();
    for (e, want) in est.iter().zip(rs.iter().chain(ru.iter())) {
        assert!(e.within(*want, 3.0), "{want} {e:?}");
    }
}

#[test]
fn zero_guarantee_r_vectors() {
    let model = r2_like();
    let state = MarketState::initial();
    let c = unit_claim(&model, 3, 0.0);
    let rs = r_vector(&model, &state, &c, SumInsuredKind::Segregated, TOL).unwrap();
    assert_eq!(rs, DVector::zeros(2));
    let one = r1_like(0.01, 0.04, 100.0, 3);
    let c = MaxClaim::new(3, vec![0.5], 0.0).unwrap();
    let ru = sum_insured_cross_expectation(&one, &state, &c, 0, SumInsuredKind::UnitLinked, TOL)
        .unwrap();
    let want = 0.5 * cross_moment(&one, &state, 0, 3, 0, 1).unwrap();
    assert!((ru - want).abs() < 1e-10 * want);
}

#[test]
fn lambda_vanishes_without_risk() {
    let model = r2_like();
    let state = observed(&model, 1, true);
    let immortal = table(&[0.0, 0.0, 0.0, 0.0, 1.0]);
    let opts = PremiumOptions::default();
    for kind in [ProductKind::SegregatedTerm, ProductKind::UnitLinkedTerm] {
        let (l, v) = lambda_vector(
            &product(kind, &model, 1, 1.0),
            &model,
            &state,
            &immortal,
            &opts,
        )
        .unwrap();
        assert_eq!(v, 0.0);
        assert!(l.amax() < 1e-15);
    }
    let tab = table(&[0.1, 0.2, 0.3, 0.4, 1.0]);
    for kind in [
        ProductKind::SegregatedTerm,
        ProductKind::SegregatedEndowment,
    ] {
        let (l, _) =
            lambda_vector(&product(kind, &model, 1, 0.0), &model, &state, &tab, &opts).unwrap();
        assert_eq!(l, DVector::zeros(2));
    }
}

#[test]
fn strategy_trivial_cases() {
    let om = SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let x = DVector::from_vec(vec![10.0, 20.0]);
    let p = strategy(0, &om, &DVector::zeros(2), 3.0, &x).unwrap();
    assert_eq!((p.h.clone(), p.h0), (vec![0.0, 0.0], 3.0));
    let s = strategy(
        0,
        &SymMatrix::from_rows(&[vec![4.0]]).unwrap(),
        &DVector::from_element(1, 2.0),
        1.0,
        &DVector::from_element(1, 3.0),
    )
    .unwrap();
    assert_eq!(s.h, vec![0.5]);
    assert!(!s.singular_omega);
    let lam = DVector::from_vec(vec![0.3, -0.2]);
    let p = strategy(0, &om, &lam, 7.0, &x).unwrap();
    assert!((om.as_matrix() * DVector::from_vec(p.h.clone()) - &lam).amax() < 1e-14);
    let zero = SymMatrix::zeros(2);
    let q = strategy(0, &zero, &lam, 7.0, &x).unwrap();
    assert!(q.singular_omega);
    assert_eq!(q.h, vec![0.0, 0.0]);
}

#[test]
fn hedge_is_orthogonal_to_price_increments() {
    let model = r2_like();
    let tab = table(&[0.1, 0.2, 0.3, 0.4, 1.0]);
    let opts = PremiumOptions::default();
    for (kind, regimes) in [
        (ProductKind::SegregatedEndowment, true),
        (ProductKind::UnitLinkedTerm, false),
    ] {
        let state = observed(&model, 1, regimes);
        let prod = product(kind, &model, 1, 1.0);
        let step = hedge_step(&prod, &model, &state, &tab, &opts, false).unwrap();
        let ens = simulate_risk_neutral(&model, &state, 3, 200_000, 21).unwrap();
        let res = mc_hedge_residual(&ens, &prod, &tab, None, &step.position).unwrap();
        for r in &res {
            assert!(r.within(0.0, 4.0), "{kind:?} {r:?}");
        }
        let mut bumped = step.position.clone();
        bumped.h.iter_mut().for_each(|h| *h *= 1.1);
        let res = mc_hedge_residual(&ens, &prod, &tab, None, &bumped).unwrap();
        assert!(res.iter().any(|r| r.z_score(0.0) > 4.0), "{kind:?} {res:?}");
    }
}

#[test]
fn flat_model_has_no_residual() {
    let model = r1_like(0.01, 1e-24, 100.0, 3);
    let tab = table(&[0.1, 0.2, 0.3, 1.0]);
    let state = MarketState::initial();
    let prod = ProductSpec {
        kind: ProductKind::UnitLinkedTerm,
        age: 60,
        t: 0,
        horizon: 3,
        guarantees: vec![1.0; 3],
        weights: vec![vec![0.01]; 3],
        alive: true,
    };
    let step = hedge_step(
        &prod,
        &model,
        &state,
        &tab,
        &PremiumOptions::default(),
        false,
    )
    .unwrap();
    let ens = simulate_risk_neutral(&model, &state, 3, 1000, 2).unwrap();
    for r in mc_hedge_residual(&ens, &prod, &tab, None, &step.position).unwrap() {
        assert!(r.mean.abs() < 1e-9);
    }
}

#[test]
fn discounted_ledger_scales_cash() {
    let model = r2_like();
    let tab = table(&[0.1, 0.2, 0.3, 0.4, 1.0]);
    let state = observed(&model, 2, true);
    let mut prod = product(ProductKind::UnitLinkedEndowment, &model, 2, 1.0);
    prod.t = 2;
    let opts = PremiumOptions::default();
    let plain = hedge_step(&prod, &model, &state, &tab, &opts, false).unwrap();
    let disc = hedge_step(&prod, &model, &state, &tab, &opts, true).unwrap();
    assert_eq!(plain.position.h, disc.position.h);
    assert!((disc.position.h0 - plain.position.h0 * plain.discount).abs() < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn scaled_covariance_keeps_structure(c in 0.05f64..2.0) {
        let model = scale_covariance(&r2_like(), c);
        let state = observed(&model, 1, true);
        let om = omega(&model, &state).unwrap();
        prop_assert!(cholesky_lower(&om).is_ok());
        let tab = table(&[0.1, 0.2, 0.3, 0.4, 1.0]);
        let prod = product(ProductKind::SegregatedTerm, &model, 1, 1.1);
        let step = hedge_step(&prod, &model, &state, &tab, &PremiumOptions::default(), false).unwrap();
        let x = current_prices(&model, &state);
        let p = &step.position;
        let total = p.h.iter().zip(x.iter()).map(|(h, x)| h * x).sum::<f64>() + p.h0;
        prop_assert!((total - p.value).abs() <= 1e-12 * p.value.abs().max(1.0));
    }
}

#[test]
fn dead_policyholder_needs_no_hedge() {
    let model = r2_like();
    let tab = table(&[0.1, 0.2, 0.3, 0.4, 1.0]);
    let state = observed(&model, 1, true);
    let mut prod = product(ProductKind::UnitLinkedTerm, &model, 1, 1.0);
    prod.alive = false;
    let (l, v) = lambda_vector(&prod, &model, &state, &tab, &PremiumOptions::default()).unwrap();
    assert_eq!((l, v), (DVector::zeros(2), 0.0));
}
