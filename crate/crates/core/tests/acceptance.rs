//! Acceptance suite: one PASS/FAIL line per criterion.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use elmax::actuarial::{
    mortality_density, tilted_mortality, LifeOutcome, LifeTable, MortalityTilt,
};
use elmax::hedging::{hedge_step, omega};
use elmax::io::{load_model, load_products};
use elmax::mc::{
    mc_hedge_residual, mc_price_many, simulate_risk_neutral, McEstimate, PathView, Welford, CHUNK,
};
use elmax::measures::{regime_posterior, state_price_density};
use elmax::msvar::{
    enumerate_paths, law_for_path, simulate_physical, CovarianceModel, MarketState, MeasureMode,
    ValidatedModel,
};
use elmax::numerics::{mvn_cdf, OrthantQuery, SymMatrix};
use elmax::pricing::{
    call_on_max, current_prices, forward_max, premium, put_on_max, zcb_price, MaxClaim,
    PremiumOptions, ProductKind, ProductSpec,
};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const MILLION: usize = 1_000_000;
const SEED_OPTIONS: u64 = 2;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn r2() -> (ValidatedModel, MarketState) {
    load_model(fixture("r2_model.json")).unwrap()
}

fn table() -> LifeTable {
    LifeTable::load(fixture("table_3age.csv")).unwrap()
}

/// Sample statistics of `f(j)` for `j < n`, chunked in fixed order.
fn par_estimate<F>(n: usize, width: usize, f: F) -> Vec<McEstimate>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let parts: Vec<Vec<Welford>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = vec![Welford::default(); width];
            let mut buf = vec![0.0; width];
            for j in c * CHUNK..((c + 1) * CHUNK).min(n) {
                f(j, &mut buf);
                for (a, b) in acc.iter_mut().zip(&buf) {
                    a.push(*b);
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Welford::default(); width];
    for p in &parts {
        for (t, w) in total.iter_mut().zip(p) {
            t.merge(w);
        }
    }
    total.iter().map(|w| w.estimate(n)).collect()
}

/// Standard normal CDF by composite Simpson on `[0, |x|]`.
fn phi(x: f64) -> f64 {
    let n = 20_000;
    let h = x.abs() / n as f64;
    let g = |u: f64| (-0.5 * u * u).exp();
    let mut s = g(0.0) + g(x.abs());
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * g(i as f64 * h);
    }
    let half = s * h / 3.0 / (2.0 * std::f64::consts::PI).sqrt();
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Log density of `N(mean, cov)` at `x`.
fn log_normal_density(x: &DVector<f64>, mean: &DVector<f64>, cov: &DMatrix<f64>) -> f64 {
    let chol = cov.clone().cholesky().unwrap();
    let d = x - mean;
    let z = chol.l().solve_lower_triangular(&d).unwrap();
    let logdet: f64 = chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
    -0.5 * (z.norm_squared() + logdet + x.len() as f64 * (2.0 * std::f64::consts::PI).ln())
}

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let (model, _) = r2();
    let start = Instant::now();
    let est = par_estimate(MILLION, 1, |j, out| {
        let (path, ys) = simulate_physical(&model, j as u64).unwrap();
        out[0] = *state_price_density(&model, &ys, &path.states)
            .unwrap()
            .last()
            .unwrap();
    })[0];
    let secs = start.elapsed().as_secs_f64();
    let lt_ok = est.within(1.0, 4.0) && secs < 60.0;

    let tab = table();
    let mut k_err: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let g = vec![rng.random_range(-1.0..0.5), rng.random_range(-1.0..0.1)];
        let tilt = MortalityTilt(g);
        let (q0, q1) = (tab.q(60).unwrap(), tab.q(61).unwrap());
        let outcomes = [
            (LifeOutcome::DeathInYear(1), q0),
            (LifeOutcome::DeathInYear(2), (1.0 - q0) * q1),
            (LifeOutcome::Survival, (1.0 - q0) * (1.0 - q1)),
        ];
        let total: f64 = outcomes
            .iter()
            .map(|(o, p)| mortality_density(&tab, 60, &tilt, *o).unwrap() * p)
            .sum();
        k_err = k_err.max((total - 1.0).abs());
    }

    let mut g0_err: f64 = 0.0;
    for h in 1..=2usize {
        let tm = tilted_mortality(&tab, 60, h, &MortalityTilt::zero(h)).unwrap();
        let mut alive = 1.0;
        for k in 1..=h {
            let q = tab.q(60 + k as u32 - 1).unwrap();
            g0_err = g0_err.max((tm.deferred[k - 1] - alive * q).abs());
            alive *= 1.0 - q;
            g0_err = g0_err.max((tm.cumulative[k - 1] - (1.0 - alive)).abs());
        }
        g0_err = g0_err.max((tm.survive - alive).abs());
    }
    check(
        lt_ok && k_err <= 1e-12 && g0_err <= 1e-14,
        format!(
            "L_T mean {:.5} se {:.5} (z {:.2}, {secs:.1} s); K normalization err {k_err:.1e}; g=0 err {g0_err:.1e}",
            est.mean,
            est.std_error,
            est.z_score(1.0)
        ),
    )
}

/// `Ẽ[(D_k/D_t)x_{i,k} | ℋ_t]` by the Gaussian moment generating function on
/// each regime path.
fn analytic_discounted_price(
    model: &ValidatedModel,
    state: &MarketState,
    past: &[usize],
    i: usize,
    k: usize,
) -> f64 {
    let t = state.t;
    let set = enumerate_paths(model, past.last().copied(), t + 1, k).unwrap();
    let known_rate = state.y(model, t as isize)[0];
    set.paths
        .iter()
        .map(|p| {
            let law = law_for_path(model, state, past, p, MeasureMode::RiskNeutral).unwrap();
            let mut a = DVector::zeros(law.dim());
            for m in t + 2..=k {
                a[law.index(m - 1, 0)] -= 1.0;
            }
            a[law.index(k, model.n_z() + i)] += 1.0;
            let quad = (law.cov.as_matrix() * &a).dot(&a);
            p.chain_prob * (a.dot(&law.mean) + 0.5 * quad - known_rate).exp()
        })
        .sum()
}

fn criterion_2() -> Outcome {
    let (model, s0) = r2();
    let (path, ys) = simulate_physical(&model, 4).unwrap();
    let s1 = MarketState::new(ys[..1].to_vec(), Some(path.states[..1].to_vec())).unwrap();
    let mut worst: f64 = 0.0;
    let mut worst_z: f64 = 0.0;
    for (state, past) in [(&s0, vec![]), (&s1, path.states[..1].to_vec())] {
        let x = current_prices(&model, state);
        for k in state.t + 1..=4 {
            for i in 0..model.n_x() {
                let e = analytic_discounted_price(&model, state, &past, i, k);
                worst = worst.max((e / x[i] - 1.0).abs());
            }
        }
        let ens = simulate_risk_neutral(&model, state, 4, 200_000, 31).unwrap();
        let steps: Vec<usize> = (state.t + 1..=4).collect();
        let est = mc_price_many(&ens, 2 * steps.len(), |v, out| {
            for (o, &m) in out.chunks_mut(2).zip(&steps) {
                o.copy_from_slice(v.discounted_prices(m).as_slice());
            }
        })
        .unwrap();
        for (e, target) in est.iter().zip(x.iter().cycle()) {
            worst_z = worst_z.max(e.z_score(*target));
        }
    }
    check(
        worst <= 1e-6 && worst_z <= 4.0,
        format!("analytic relative error {worst:.1e}; MC max |z| {worst_z:.2}"),
    )
}

fn criterion_3() -> Outcome {
    let (model, state) = r2();
    let tol = 1e-6;
    let start = Instant::now();
    let claims: Vec<MaxClaim> = (1..=3)
        .map(|k| MaxClaim::new(k, vec![1.0, 2.0], 100.0).unwrap())
        .collect();
    let ens = simulate_risk_neutral(&model, &state, 3, MILLION, SEED_OPTIONS).unwrap();
    let est = mc_price_many(&ens, 6, |v, out| {
        for (o, c) in out.chunks_mut(2).zip(&claims) {
            let m = c.maximum(v.prices(c.k).as_slice());
            let d = v.discount(c.k);
            o[0] = d * (m - c.guarantee).max(0.0);
            o[1] = d * (c.guarantee - m).max(0.0);
        }
    })
    .unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for (c, e) in claims.iter().zip(est.chunks(2)) {
        let call = call_on_max(&model, &state, c, tol).unwrap();
        let put = put_on_max(&model, &state, c, tol).unwrap();
        let fwd = forward_max(&model, &state, c, tol).unwrap();
        let bond = zcb_price(&model, &state, c.k, tol).unwrap();
        let gap = (call.value - put.value - fwd.value + c.guarantee * bond.value).abs();
        let paths = call.path_count + put.path_count + fwd.path_count + bond.path_count;
        let (zc, zp) = (e[0].z_score(call.value), e[1].z_score(put.value));
        ok &= zc <= 3.0 && zp <= 3.0 && gap <= 10.0 * tol * paths as f64;
        detail.push(format!("k={} z {zc:.2}/{zp:.2} parity {gap:.1e}", c.k));
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        ok && secs < 300.0,
        format!("seed {SEED_OPTIONS}: {}; {secs:.1} s", detail.join(", ")),
    )
}

fn criterion_4() -> Outcome {
    let (model, state) = load_model(fixture("r1_model.json")).unwrap();
    let (r, s0, var) = (0.01, 100.0, 0.04);
    let mut worst: f64 = 0.0;
    for k in 1..=5 {
        for strike in [80.0, 100.0, 125.0] {
            let claim = MaxClaim::new(k, vec![1.0], strike).unwrap();
            let v = call_on_max(&model, &state, &claim, 1e-8).unwrap().value;
            let kf = k as f64;
            let sd = (var * kf).sqrt();
            let d1 = ((s0 / strike).ln() + r * kf + 0.5 * var * kf) / sd;
            let bs = s0 * phi(d1) - strike * (-r * kf).exp() * phi(d1 - sd);
            worst = worst.max((v / bs - 1.0).abs());
        }
    }
    check(worst <= 1e-6, format!("max relative error {worst:.2e}"))
}

/// Curtate lifetime year of death (1-based) within `horizon`, or `None`.
fn draw_death(tab: &LifeTable, age: u32, horizon: usize, rng: &mut ChaCha8Rng) -> Option<usize> {
    (1..=horizon).find(|&k| rng.random::<f64>() < tab.q(age + k as u32 - 1).unwrap())
}

fn criterion_5() -> Outcome {
    let (model, state) = r2();
    let tab = table();
    let products = load_products(fixture("r2_products.json")).unwrap();
    let horizon = products[0].horizon;
    let ens = simulate_risk_neutral(&model, &state, horizon, MILLION, 77).unwrap();
    let est = par_estimate(MILLION, products.len(), |j, out| {
        let path = &ens.sample_paths(j).unwrap()[0];
        let view = PathView {
            model: ens.model(),
            t: 0,
            path,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        rng.set_stream(j as u64);
        let death = draw_death(&tab, products[0].age, horizon, &mut rng);
        for (o, p) in out.iter_mut().zip(&products) {
            let k = match (p.kind.is_term(), death) {
                (true, Some(k)) => k,
                (false, None) => p.horizon,
                _ => {
                    *o = 0.0;
                    continue;
                }
            };
            let c = p.claim(k).unwrap();
            let m = c.maximum(view.prices(k).as_slice());
            let benefit = if p.kind.is_segregated() {
                (c.guarantee - m).max(0.0)
            } else {
                m.max(c.guarantee)
            };
            *o = view.discount(k) * benefit;
        }
    });
    let opts = PremiumOptions::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (p, e) in products.iter().zip(&est) {
        let v = premium(p, &model, &state, &tab, &opts).unwrap().value;
        let z = e.z_score(v);
        ok &= z <= 3.0;
        detail.push(format!("{:?} {v:.4} z {z:.2}", p.kind));
    }
    for kind in [
        ProductKind::SegregatedTerm,
        ProductKind::SegregatedEndowment,
    ] {
        let free = ProductSpec {
            kind,
            guarantees: vec![0.0; horizon],
            ..products[0].clone()
        };
        ok &= premium(&free, &model, &state, &tab, &opts).unwrap().value == 0.0;
    }
    check(
        ok,
        format!("{}; G=0 segregated premiums 0", detail.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let (model, s0) = r2();
    let tab = table();
    let opts = PremiumOptions::default();
    let products = load_products(fixture("r2_products.json")).unwrap();
    let (path, ys) = simulate_physical(&model, 12).unwrap();
    let s1 = MarketState::new(ys[..1].to_vec(), Some(path.states[..1].to_vec())).unwrap();
    let mut ok = true;
    let mut worst_z: f64 = 0.0;
    let mut psd = true;
    let mut exact = true;
    for state in [&s0, &s1] {
        let om = omega(&model, state).unwrap();
        let eig = om.as_matrix().clone().symmetric_eigenvalues();
        psd &= eig.min() >= -1e-12 * eig.amax();
        let x = current_prices(&model, state);
        for p in &products {
            let product = ProductSpec {
                t: state.t,
                ..p.clone()
            };
            let step = hedge_step(&product, &model, state, &tab, &opts, false).unwrap();
            let pos = &step.position;
            let hx = DVector::from_vec(pos.h.clone()).dot(&x);
            exact &= pos.h0 == pos.value - hx;
            let ens = simulate_risk_neutral(&model, state, product.horizon, 200_000, 91).unwrap();
            for r in mc_hedge_residual(&ens, &product, &tab, None, pos).unwrap() {
                worst_z = worst_z.max(r.z_score(0.0));
            }
        }
    }
    ok &= psd && exact && worst_z <= 4.0;

    let product = products[3].clone();
    let step = hedge_step(&product, &model, &s0, &tab, &opts, false).unwrap();
    let mut bumped = step.position.clone();
    bumped.h.iter_mut().for_each(|h| *h *= 1.1);
    let ens = simulate_risk_neutral(&model, &s0, product.horizon, 200_000, 92).unwrap();
    let bump_z = mc_hedge_residual(&ens, &product, &tab, None, &bumped)
        .unwrap()
        .iter()
        .map(|r| r.z_score(0.0))
        .fold(0.0, f64::max);
    ok &= bump_z > 4.0;
    check(
        ok,
        format!(
            "Omega PSD {psd}; h0 = V - h'x exact {exact}; residual max |z| {worst_z:.2}; +10% bump max |z| {bump_z:.1}"
        ),
    )
}

/// Posterior over `s₁..s_t` by enumerating every path and multiplying
/// one-step physical densities.
fn brute_force_posterior(model: &ValidatedModel, ys: &[DVector<f64>]) -> Vec<(Vec<usize>, f64)> {
    let spec = model.spec();
    let sigmas = match &spec.covariance {
        CovarianceModel::ConstantPerRegime(s) => s.clone(),
        _ => unreachable!(),
    };
    let n_s = spec.regimes.len();
    let t = ys.len();
    let mut out = Vec::new();
    for code in 0..n_s.pow(t as u32) {
        let states: Vec<usize> = (0..t)
            .map(|m| code / n_s.pow((t - 1 - m) as u32) % n_s)
            .collect();
        let mut logw = spec.initial_dist[states[0]].ln();
        for m in 1..t {
            logw += spec.transition[(states[m - 1], states[m])].ln();
        }
        for m in 0..t {
            let r = &spec.regimes[states[m]];
            let prev = if m == 0 {
                &spec.presample_y[0]
            } else {
                &ys[m - 1]
            };
            let mean = &r.intercept * &spec.exog[m] + &r.lags[0] * prev;
            logw += log_normal_density(&ys[m], &mean, sigmas[states[m]].as_matrix());
        }
        out.push((states, logw));
    }
    let top = out
        .iter()
        .map(|(_, w)| *w)
        .fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = out.iter().map(|(_, w)| (w - top).exp()).sum();
    out.into_iter()
        .map(|(s, w)| (s, (w - top).exp() / total))
        .collect()
}

fn criterion_7() -> Outcome {
    let (model, _) = r2();
    let mut worst: f64 = 0.0;
    let mut sum_err: f64 = 0.0;
    for seed in [3, 8, 21] {
        let (_, ys) = simulate_physical(&model, seed).unwrap();
        let state = MarketState::new(ys[..3].to_vec(), None).unwrap();
        let post = regime_posterior(&model, &state, MeasureMode::Physical).unwrap();
        sum_err = sum_err.max((post.weights.iter().sum::<f64>() - 1.0).abs());
        for (states, w) in brute_force_posterior(&model, &ys[..3]) {
            let got = post
                .iter()
                .find(|(p, _)| p.states == states)
                .map_or(0.0, |(_, w)| w);
            worst = worst.max((got - w).abs());
        }
    }
    check(
        worst <= 1e-10 && sum_err <= 1e-10,
        format!("max weight error {worst:.1e}; sum error {sum_err:.1e}"),
    )
}

fn criterion_8() -> Outcome {
    let q = |upper: Vec<f64>, rows: &[Vec<f64>]| {
        let d = upper.len();
        mvn_cdf(
            &OrthantQuery::new(
                DVector::from_vec(upper),
                DVector::zeros(d),
                SymMatrix::from_rows(rows).unwrap(),
            )
            .with_tol(1e-7),
        )
        .unwrap()
        .prob
    };
    let half = q(vec![0.0], &[vec![1.0]]);
    let third = q(vec![0.0, 0.0], &[vec![1.0, 0.5], vec![0.5, 1.0]]);
    let quarter = q(
        vec![0.0; 3],
        &[
            vec![1.0, 0.5, 0.5],
            vec![0.5, 1.0, 0.5],
            vec![0.5, 0.5, 1.0],
        ],
    );
    let ident = (half - 0.5)
        .abs()
        .max((third - 1.0 / 3.0).abs())
        .max((quarter - 0.25).abs());

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut violations = 0;
    for _ in 0..100 {
        let d = rng.random_range(2..=6);
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        let cov = SymMatrix::symmetrized(&a * a.transpose() + DMatrix::identity(d, d) * 0.1);
        let mean = DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5));
        let upper = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.5));
        let mut bumped = upper.clone();
        bumped[rng.random_range(0..d)] += rng.random_range(0.01..1.0);
        let base = mvn_cdf(&OrthantQuery::new(upper, mean.clone(), cov.clone())).unwrap();
        let more = mvn_cdf(&OrthantQuery::new(bumped, mean, cov)).unwrap();
        if more.prob < base.prob - (base.error + more.error) {
            violations += 1;
        }
    }
    check(
        ident <= 1e-6 && violations == 0,
        format!("identity error {ident:.1e}; {violations} monotonicity violations in 100 queries"),
    )
}

fn run_cli(args: &[&str], threads: &str) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_elmax"))
        .args(args)
        .args(["--threads", threads])
        .output()
        .unwrap();
    (out.status.code().unwrap(), out.stdout)
}

fn criterion_9() -> Outcome {
    let (m, o, t, p) = (
        fixture("r2_model.json"),
        fixture("r2_observed.json"),
        fixture("table_3age.csv"),
        fixture("r2_products.json"),
    );
    let (m, o, t, p) = (
        m.to_str().unwrap(),
        o.to_str().unwrap(),
        t.to_str().unwrap(),
        p.to_str().unwrap(),
    );
    let common = ["--table", t, "--product", p, "--seed", "17"];
    let commands: Vec<Vec<&str>> = vec![
        [&["price", "--model", m, "--paths", "50000"][..], &common].concat(),
        [&["hedge", "--model", o, "--paths", "20000"][..], &common].concat(),
        [
            &["simulate", "--model", o, "--paths", "50000", "--antithetic"][..],
            &common,
        ]
        .concat(),
        [&["validate", "--model", m][..], &common].concat(),
    ];
    let mut ok = true;
    let mut names = Vec::new();
    for args in &commands {
        let one = run_cli(args, "1");
        let again = run_cli(args, "1");
        let many = run_cli(args, "4");
        let same = one.0 == 0 && one == again && one == many && !one.1.is_empty();
        ok &= same;
        names.push(format!(
            "{} {}",
            args[0],
            if same { "identical" } else { "differs" }
        ));
    }
    check(ok, names.join(", "))
}

#[test]
fn acceptance() {
    let criteria: [(usize, fn() -> Outcome); 9] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
    ];
    let mut failed = Vec::new();
    for (n, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match outcome {
            Ok(d) => println!("criterion {n}: PASS {d}"),
            Err(d) => {
                println!("criterion {n}: FAIL {d}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
