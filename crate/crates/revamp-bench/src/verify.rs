//! Built-in verification battery: randomized desk-scale instances exercising
//! the algebraic identities and strategy invariants the estimator relies on.
//! Driven by `revamp-bench verify`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use revamp::engine::{
    compute_belief, compute_extrinsics, extrinsic_leave_one_out, EpRun, LinearProblem,
};
use revamp::gaussian::{
    min_eigenvalue, rank_one_downdate, reproduce, GaussianND, GaussianNatural1D,
};
use revamp::oracle::{brute_force_mmse, lmmse};
use revamp::prior::{is_belief_proper, posterior_moments, quadrature_moments, MixturePrior};
use revamp::strategy::Strategy;
use revamp::Gaussian1D;

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, reports: Vec<(bool, String)>) -> CheckResult {
    let failures: Vec<&String> = reports
        .iter()
        .filter(|(ok, _)| !ok)
        .map(|(_, d)| d)
        .collect();
    CheckResult {
        name,
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            format!("{} cases", reports.len())
        } else {
            format!(
                "{}/{} failed; first: {}",
                failures.len(),
                reports.len(),
                failures[0]
            )
        },
    }
}

fn rng(seed: u64, salt: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

fn normal(r: &mut ChaCha12Rng) -> f64 {
    r.sample::<f64, _>(StandardNormal)
}

fn random_spd(r: &mut ChaCha12Rng, n: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| normal(r));
    &g * g.transpose() + DMatrix::<f64>::identity(n, n)
}

fn random_instance(
    r: &mut ChaCha12Rng,
    m: usize,
    priors: Vec<MixturePrior>,
    snr_db: f64,
) -> LinearProblem {
    let n = priors.len();
    let power: f64 = priors.iter().map(|p| p.second_moment()).sum::<f64>() / n as f64;
    let noise_var = power / 10f64.powf(snr_db / 10.0);
    let a = DMatrix::from_fn(m, n, |_, _| normal(r) / (n as f64).sqrt());
    let x = DVector::from_fn(n, |j, _| {
        let p = &priors[j];
        let u: f64 = r.random();
        let mut acc = 0.0;
        let mut k = p.num_components() - 1;
        for (i, w) in p.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        p.means()[k] + p.vars()[k].sqrt() * normal(r)
    });
    let y = &a * &x + DVector::from_fn(m, |_, _| noise_var.sqrt() * normal(r));
    LinearProblem::new(a, y, noise_var, priors).unwrap()
}

pub fn run_all(seed: u64) -> Vec<CheckResult> {
    vec![
        determinant_lemma(seed),
        inversion_lemma(seed),
        natural_round_trip(seed),
        fusion_vs_conditioning(seed),
        rank_one_vs_recompute(seed),
        extrinsic_equivalence(seed),
        moments_vs_quadrature(seed),
        pd_under_accept_or_freeze(seed),
        nonnegative_precisions(seed),
        enumeration_vs_lmmse(seed),
    ]
}

fn determinant_lemma(seed: u64) -> CheckResult {
    let mut r = rng(seed, 1);
    let mut reports = Vec::new();
    for _ in 0..100 {
        let n = 2 + (r.random::<u32>() % 5) as usize;
        let a = random_spd(&mut r, n);
        let b = DVector::from_fn(n, |_, _| normal(&mut r));
        let c = 0.3 + r.random::<f64>() * 2.0;
        let d = DVector::from_fn(n, |_, _| normal(&mut r)).transpose();
        let lhs = (&a + &b * c * &d).determinant();
        let inner = 1.0 / c + (&d * a.clone().try_inverse().unwrap() * &b)[(0, 0)];
        let rhs = a.determinant() * c * inner;
        let rel = (lhs - rhs).abs() / rhs.abs().max(1e-300);
        reports.push((rel < 1e-9, format!("relative deviation {rel:.2e}")));
    }
    check("determinant lemma on random rank-one updates", reports)
}

fn inversion_lemma(seed: u64) -> CheckResult {
    let mut r = rng(seed, 2);
    let mut reports = Vec::new();
    for _ in 0..60 {
        let n = 3 + (r.random::<u32>() % 3) as usize;
        let k = 2;
        let a = random_spd(&mut r, n);
        let b = DMatrix::from_fn(n, k, |_, _| normal(&mut r));
        let c = random_spd(&mut r, k);
        let d = DMatrix::from_fn(k, n, |_, _| normal(&mut r));
        let lhs = &d * (&a + &b * &c * &d).try_inverse().unwrap();
        let a_inv = a.try_inverse().unwrap();
        let c_inv = c.try_inverse().unwrap();
        let rhs = &c_inv * (&d * &a_inv * &b + &c_inv).try_inverse().unwrap() * &d * &a_inv;
        let rel = (&lhs - &rhs).norm() / rhs.norm();
        reports.push((rel < 1e-9, format!("relative deviation {rel:.2e}")));
    }
    check("matrix inversion lemma on random instances", reports)
}

fn natural_round_trip(seed: u64) -> CheckResult {
    let mut r = rng(seed, 3);
    let mut reports = Vec::new();
    for _ in 0..500 {
        let a = GaussianNatural1D::new(10.0 * normal(&mut r), 10.0 * normal(&mut r)).unwrap();
        let b = GaussianNatural1D::new(10.0 * normal(&mut r), 10.0 * normal(&mut r)).unwrap();
        let back = a.product(&b).quotient(&b);
        let ok = (back.nu - a.nu).abs() <= 1e-12 * (1.0 + a.nu.abs())
            && (back.xi - a.xi).abs() <= 1e-12 * (1.0 + a.xi.abs());
        reports.push((
            ok,
            format!("({}, {}) -> ({}, {})", a.nu, a.xi, back.nu, back.xi),
        ));
    }
    check("natural-parameter product/quotient round trip", reports)
}

fn fusion_vs_conditioning(seed: u64) -> CheckResult {
    let mut r = rng(seed, 4);
    let mut reports = Vec::new();
    for _ in 0..40 {
        let (m, n) = (3, 2);
        let c1 = random_spd(&mut r, n);
        let c2 = random_spd(&mut r, m);
        let mu1 = DVector::from_fn(n, |_, _| normal(&mut r));
        let a = DMatrix::from_fn(m, n, |_, _| normal(&mut r));
        let y = DVector::from_fn(m, |_, _| normal(&mut r));
        let (_, post) = reproduce(
            &GaussianND::new(mu1.clone(), c1.clone()).unwrap(),
            &a,
            &y,
            &c2,
        )
        .unwrap();
        let s_inv = (&a * &c1 * a.transpose() + &c2).try_inverse().unwrap();
        let cross = &c1 * a.transpose();
        let mean = &mu1 + &cross * &s_inv * (&y - &a * &mu1);
        let rel = (post.mean() - &mean).norm() / mean.norm().max(1e-300);
        reports.push((rel < 1e-9, format!("mean deviation {rel:.2e}")));
    }
    check("gaussian fusion against block conditioning", reports)
}

fn rank_one_vs_recompute(seed: u64) -> CheckResult {
    let mut r = rng(seed, 5);
    let mut reports = Vec::new();
    for trial in 0..40 {
        let n = 6;
        let prec = random_spd(&mut r, n);
        let cov = prec.clone().try_inverse().unwrap();
        let idx = trial % n;
        let mut delta = 2.0 * normal(&mut r);
        if 1.0 + delta * cov[(idx, idx)] <= 0.1 {
            delta = 0.5;
        }
        let down = rank_one_downdate(&cov, idx, delta.recip() + cov[(idx, idx)]).unwrap();
        let mut prec2 = prec.clone();
        prec2[(idx, idx)] += delta;
        let full = prec2.try_inverse().unwrap();
        let rel = (&down - &full).norm() / full.norm();
        reports.push((rel < 1e-9, format!("relative deviation {rel:.2e}")));
    }
    check("rank-one downdate against full recompute", reports)
}

fn extrinsic_equivalence(seed: u64) -> CheckResult {
    let mut r = rng(seed, 6);
    let mut reports = Vec::new();
    for _ in 0..25 {
        let n = 3 + (r.random::<u32>() % 5) as usize;
        let m = 2 + (r.random::<u32>() % 5) as usize;
        let priors: Vec<_> = (0..n)
            .map(|_| MixturePrior::single(0.0, 1.0).unwrap())
            .collect();
        let problem = random_instance(&mut r, m, priors, 10.0);
        let nu = DVector::from_fn(n, |_, _| normal(&mut r));
        let xi = DVector::from_fn(n, |_, _| 10f64.powf(2.0 * r.random::<f64>() - 1.0));
        let belief = compute_belief(&problem, &nu, &xi).unwrap();
        let (mu_r, tau_r) = compute_extrinsics(&belief, &nu, &xi).unwrap();
        for j in 0..n {
            let loo = extrinsic_leave_one_out(&problem, &nu, &xi, j).unwrap();
            let dv = (loo.var - tau_r[j]).abs() / tau_r[j].abs();
            let dm = (loo.mean - mu_r[j]).abs() / mu_r[j].abs().max(1e-9);
            reports.push((
                dv < 1e-8 && dm < 1e-8,
                format!("deviations var {dv:.2e} mean {dm:.2e}"),
            ));
        }
    }
    check("direct and leave-one-out extrinsics agree", reports)
}

fn moments_vs_quadrature(seed: u64) -> CheckResult {
    let mut r = rng(seed, 7);
    let mut reports = Vec::new();
    let mut produced = 0;
    while produced < 100 {
        let k = 1 + (r.random::<u32>() % 3) as usize;
        let mut w: Vec<f64> = (0..k).map(|_| 0.1 + r.random::<f64>()).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= total);
        let means: Vec<f64> = (0..k).map(|_| 4.0 * r.random::<f64>() - 2.0).collect();
        let vars: Vec<f64> = (0..k).map(|_| 0.05 + 1.5 * r.random::<f64>()).collect();
        let prior = MixturePrior::new(w, means, vars).unwrap();
        let tau_r = if r.random::<bool>() {
            0.05 + 4.0 * r.random::<f64>()
        } else {
            -prior.max_var() * (1.3 + 3.0 * r.random::<f64>())
        };
        let obs = Gaussian1D::new(4.0 * r.random::<f64>() - 2.0, tau_r).unwrap();
        if !is_belief_proper(&prior, &obs) {
            continue;
        }
        produced += 1;
        let exact = posterior_moments(&prior, &obs).unwrap();
        let quad = quadrature_moments(&prior, &obs).unwrap();
        let dm = (exact.mean - quad.mean).abs() / (1.0 + exact.mean.abs());
        let dv = (exact.var - quad.var).abs() / exact.var;
        reports.push((
            dm < 1e-7 && dv < 1e-7,
            format!("deviations mean {dm:.2e} var {dv:.2e}"),
        ));
    }
    check("tilted moments against quadrature", reports)
}

fn pd_under_accept_or_freeze(seed: u64) -> CheckResult {
    let mut r = rng(seed, 8);
    let mut reports = Vec::new();
    for trial in 0..12 {
        let priors = if trial % 2 == 0 {
            vec![MixturePrior::bpsk(); 6]
        } else {
            (0..6).map(MixturePrior::sparse_symbol).collect()
        };
        let problem = random_instance(&mut r, 6, priors, 5.0 + 5.0 * (trial % 4) as f64);
        for strategy in [
            Strategy::Persistent { strict: true },
            Strategy::Persistent { strict: false },
            Strategy::NonPersistent { strict: true },
            Strategy::NonPersistent { strict: false },
        ] {
            let run = EpRun::new(&problem);
            let mut state = run.init_state().unwrap();
            let mut min_eig = f64::INFINITY;
            for _ in 0..5 {
                for n in 0..6 {
                    run.step(&mut state, n, strategy).unwrap();
                    min_eig = min_eig.min(min_eigenvalue(&state.belief_cov));
                }
            }
            reports.push((
                min_eig > 0.0,
                format!("{strategy}: min eigenvalue {min_eig:.2e}"),
            ));
        }
    }
    check("belief covariance stays positive definite", reports)
}

fn nonnegative_precisions(seed: u64) -> CheckResult {
    let mut r = rng(seed, 9);
    let mut reports = Vec::new();
    for trial in 0..12 {
        let priors = if trial % 2 == 0 {
            vec![MixturePrior::bpsk(); 6]
        } else {
            (0..6).map(MixturePrior::sparse_symbol).collect()
        };
        let problem = random_instance(&mut r, 6, priors, 5.0 * (trial % 5) as f64);
        for strategy in [Strategy::AcRevamp, Strategy::Clip] {
            let run = EpRun::new(&problem);
            let mut state = run.init_state().unwrap();
            let mut ok = true;
            for _ in 0..6 {
                for n in 0..6 {
                    run.step(&mut state, n, strategy).unwrap();
                    ok &= state.xi_p.iter().all(|&x| x >= 0.0);
                    ok &= state.tau_r.iter().all(|&t| t > 0.0);
                }
            }
            reports.push((
                ok,
                format!("{strategy}: precision or extrinsic sign violated"),
            ));
        }
    }
    check("clamping strategies keep precisions non-negative", reports)
}

fn enumeration_vs_lmmse(seed: u64) -> CheckResult {
    let mut r = rng(seed, 10);
    let mut reports = Vec::new();
    for _ in 0..20 {
        let n = 2 + (r.random::<u32>() % 4) as usize;
        let priors: Vec<_> = (0..n)
            .map(|_| MixturePrior::single(normal(&mut r), 0.2 + r.random::<f64>()).unwrap())
            .collect();
        let problem = random_instance(&mut r, n + 1, priors, 10.0);
        let brute = brute_force_mmse(&problem).unwrap();
        let lin = lmmse(&problem).unwrap();
        let rel = (&brute.mean - &lin.mean).norm() / lin.mean.norm().max(1e-300);
        reports.push((rel < 1e-10, format!("mean deviation {rel:.2e}")));
    }
    check(
        "enumeration equals LMMSE on single-component priors",
        reports,
    )
}
