//! Cross-module invariants of the sequential engine: determinant ratios of
//! accepted updates, positive definiteness under the accept/freeze families,
//! dual extrinsic formulas, rank-one bookkeeping, fixed points, and the
//! moment-matching identities behind the clamped update.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use revamp::engine::{
    compute_belief, compute_extrinsics, extrinsic_leave_one_out, EpRun, LinearProblem, RunOptions,
};
use revamp::gaussian::min_eigenvalue;
use revamp::prior::{is_belief_proper, posterior_moments, MixturePrior};
use revamp::strategy::{Decision, Strategy};
use revamp::RevampError;

fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

fn sparse_priors(n: usize) -> Vec<MixturePrior> {
    (0..n).map(MixturePrior::sparse_symbol).collect()
}

fn bpsk_priors(n: usize) -> Vec<MixturePrior> {
    vec![MixturePrior::bpsk(); n]
}

/// Noise variance for a target SNR against the analytic signal power.
fn noise_var_for(priors: &[MixturePrior], snr_db: f64) -> f64 {
    let power: f64 = priors.iter().map(|p| p.second_moment()).sum::<f64>() / priors.len() as f64;
    power / 10f64.powf(snr_db / 10.0)
}

fn random_instance(
    r: &mut ChaCha12Rng,
    m: usize,
    priors: Vec<MixturePrior>,
    snr_db: f64,
) -> LinearProblem {
    let n = priors.len();
    let noise_var = noise_var_for(&priors, snr_db);
    let a = DMatrix::from_fn(m, n, |_, _| {
        r.sample::<f64, _>(StandardNormal) / (n as f64).sqrt()
    });
    let x = DVector::from_fn(n, |j, _| {
        let p = &priors[j];
        let u: f64 = r.random();
        let mut acc = 0.0;
        let mut k = 0;
        for (i, w) in p.weights().iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
            k = i;
        }
        p.means()[k] + p.vars()[k].sqrt() * r.sample::<f64, _>(StandardNormal)
    });
    let y = &a * &x
        + DVector::from_fn(m, |_, _| {
            noise_var.sqrt() * r.sample::<f64, _>(StandardNormal)
        });
    LinearProblem::new(a, y, noise_var, priors).unwrap()
}

#[test]
fn determinant_ratio_holds_at_accepted_steps() {
    let mut r = rng(101);
    for trial in 0..12 {
        let priors = sparse_priors(10);
        let snr = 5.0 * (trial % 6) as f64;
        let problem = random_instance(&mut r, 8, priors, snr);
        let run = EpRun::new(&problem);
        let mut state = run.init_state().unwrap();
        let strategy = [Strategy::Persistent { strict: true }, Strategy::AcRevamp][trial % 2];
        for _ in 0..6 {
            for n in 0..10 {
                let det_before = state.belief_cov.determinant();
                let tau_before = state.belief_cov[(n, n)];
                let cand = match run.candidate(&state, n) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                let out = run.step(&mut state, n, strategy).unwrap();
                if out.is_accepted() {
                    let det_after = state.belief_cov.determinant();
                    assert_relative_eq!(
                        det_before / det_after,
                        tau_before / cand.tilted_var,
                        max_relative = 1e-7
                    );
                }
            }
        }
    }
}

#[test]
fn accept_or_freeze_keeps_covariance_positive_definite() {
    // Both persistent modes, which interleave accepted updates with frozen
    // messages, must never lose positive definiteness.
    let mut r = rng(103);
    for trial in 0..10 {
        let priors = if trial % 2 == 0 {
            sparse_priors(8)
        } else {
            bpsk_priors(8)
        };
        let problem = random_instance(&mut r, 8, priors, 5.0 + 5.0 * (trial % 4) as f64);
        let run = EpRun::new(&problem);
        for strict in [true, false] {
            let mut state = run.init_state().unwrap();
            for _ in 0..8 {
                for n in 0..8 {
                    run.step(&mut state, n, Strategy::Persistent { strict })
                        .unwrap();
                    assert!(
                        min_eigenvalue(&state.belief_cov) > 0.0,
                        "covariance lost positive definiteness (strict={strict})"
                    );
                }
            }
        }
    }
}

#[test]
fn random_accept_keep_interleavings_keep_positive_definiteness() {
    // Any mixture of "apply the moment-matched update" and "keep the message"
    // preserves a positive definite belief covariance, no matter how the two
    // are interleaved.
    let mut r = rng(107);
    for trial in 0..20 {
        let priors = if trial % 2 == 0 {
            bpsk_priors(6)
        } else {
            sparse_priors(6)
        };
        let problem = random_instance(&mut r, 6, priors, 10.0);
        let run = EpRun::new(&problem);
        let mut state = run.init_state().unwrap();
        for _ in 0..60 {
            let n = (r.random::<u32>() as usize) % 6;
            let keep: bool = r.random();
            if keep {
                continue;
            }
            let cand = match run.candidate(&state, n) {
                Ok(c) => c,
                // Improper tilted belief: the accept branch is unavailable,
                // keeping the message is the only legal move.
                Err(RevampError::ImproperBelief(_))
                | Err(RevampError::SingularExtrinsic { .. }) => continue,
                Err(other) => panic!("unexpected error: {other}"),
            };
            run.apply(&mut state, n, cand.nu_hat_p, cand.xi_hat_p)
                .unwrap();
            assert!(min_eigenvalue(&state.belief_cov) > 0.0, "trial {trial}");
        }
        state.check_consistency(&problem, 1e-8).unwrap();
    }
}

#[test]
fn dual_extrinsic_formulas_agree() {
    let mut r = rng(109);
    for _ in 0..30 {
        let n = 3 + (r.random::<u32>() % 6) as usize;
        let m = 2 + (r.random::<u32>() % 6) as usize;
        let priors: Vec<_> = (0..n)
            .map(|_| MixturePrior::single(0.0, 1.0).unwrap())
            .collect();
        let problem = random_instance(&mut r, m, priors, 10.0);
        let nu = DVector::from_fn(n, |_, _| r.sample::<f64, _>(StandardNormal));
        let xi = DVector::from_fn(n, |_, _| 10f64.powf(2.0 * r.random::<f64>() - 1.0));
        let belief = compute_belief(&problem, &nu, &xi).unwrap();
        let (mu_r, tau_r) = compute_extrinsics(&belief, &nu, &xi).unwrap();
        for j in 0..n {
            let loo = extrinsic_leave_one_out(&problem, &nu, &xi, j).unwrap();
            assert_relative_eq!(loo.var, tau_r[j], max_relative = 1e-8);
            assert_relative_eq!(loo.mean, mu_r[j], max_relative = 1e-8, epsilon = 1e-10);
        }
    }
}

#[test]
fn rank_one_bookkeeping_tracks_full_recompute() {
    let mut r = rng(113);
    let problem = random_instance(&mut r, 8, sparse_priors(10), 20.0);
    let run = EpRun::new(&problem);
    let mut state = run.init_state().unwrap();
    for _ in 0..20 {
        for n in 0..10 {
            let out = run.step(&mut state, n, Strategy::AcRevamp).unwrap();
            if !out.is_rejected() {
                let fresh = compute_belief(&problem, &state.nu_p, &state.xi_p).unwrap();
                let rel = (&state.belief_cov - fresh.cov()).norm() / fresh.cov().norm();
                assert!(rel < 1e-8, "incremental covariance drifted: {rel:.3e}");
            }
        }
    }
}

#[test]
fn strict_fixed_points_match_belief_marginals() {
    // At convergence, every tilted belief is proper and its moments coincide
    // with the Gaussian belief marginals.
    let mut r = rng(127);
    let opts = RunOptions {
        max_sweeps: 500,
        tol: 1e-10,
    };
    let mut converged_seen = 0;
    for trial in 0..8 {
        let priors = if trial % 2 == 0 {
            sparse_priors(8)
        } else {
            bpsk_priors(8)
        };
        let problem = random_instance(&mut r, 10, priors, 15.0);
        for strategy in [
            Strategy::Persistent { strict: true },
            Strategy::NonPersistent { strict: true },
        ] {
            let run = EpRun::new(&problem);
            let mut state = run.init_state().unwrap();
            let mut converged = false;
            for sweep in 0..opts.max_sweeps {
                let before = state.belief_mean.clone();
                for n in 0..8 {
                    run.step(&mut state, n, strategy).unwrap();
                }
                state.sweep = sweep + 1;
                if (&state.belief_mean - &before).amax() < opts.tol {
                    converged = true;
                    break;
                }
            }
            if !converged {
                continue;
            }
            converged_seen += 1;
            for n in 0..8 {
                let e = run.extrinsic_at(&state, n).unwrap();
                assert!(is_belief_proper(&problem.priors()[n], &e));
                let tilted = posterior_moments(&problem.priors()[n], &e).unwrap();
                let tol = opts.tol * 10.0;
                assert!(
                    (tilted.mean - state.belief_mean[n]).abs()
                        <= tol * (1.0 + state.belief_mean[n].abs()),
                    "fixed-point mean mismatch at {n}"
                );
                assert!(
                    (tilted.var - state.belief_cov[(n, n)]).abs()
                        <= tol * (1.0 + state.belief_cov[(n, n)].abs()),
                    "fixed-point variance mismatch at {n}"
                );
            }
        }
    }
    assert!(
        converged_seen >= 8,
        "only {converged_seen} converged runs exercised"
    );
}

#[test]
fn accepted_updates_satisfy_moment_matching_identity() {
    // For accepted candidates the combined Gaussian of the accepted message
    // and the extrinsic reproduces the tilted moments exactly.
    let mut r = rng(131);
    let mut accepted_checked = 0;
    for trial in 0..10 {
        let priors = if trial % 2 == 0 {
            bpsk_priors(6)
        } else {
            sparse_priors(6)
        };
        let problem = random_instance(&mut r, 8, priors, 5.0 + 5.0 * (trial % 5) as f64);
        let run = EpRun::new(&problem);
        let mut state = run.init_state().unwrap();
        for _ in 0..6 {
            for n in 0..6 {
                let cand = match run.candidate(&state, n) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                let out = run.step(&mut state, n, Strategy::AcRevamp).unwrap();
                if out.is_accepted() {
                    let tau_p = 1.0 / cand.xi_hat_p;
                    let tau_r = cand.extrinsic.var;
                    let mu_p = cand.nu_hat_p / cand.xi_hat_p;
                    let tau_check = tau_p * tau_r / (tau_p + tau_r);
                    let mu_check = (tau_p * cand.extrinsic.mean + tau_r * mu_p) / (tau_p + tau_r);
                    assert_relative_eq!(tau_check, cand.tilted_var, max_relative = 1e-10);
                    assert_relative_eq!(
                        mu_check,
                        cand.tilted_mean,
                        max_relative = 1e-10,
                        epsilon = 1e-12
                    );
                    accepted_checked += 1;
                }
            }
        }
    }
    assert!(
        accepted_checked > 100,
        "only {accepted_checked} accepted updates checked"
    );
}

#[test]
fn decision_kinds_match_strategy_families() {
    // Clip and the clamped update never reject; the persistent and
    // non-persistent families never modify.
    let mut r = rng(137);
    let mut counts = std::collections::HashMap::<(&str, &str), usize>::new();
    for trial in 0..30 {
        let priors = bpsk_priors(6);
        let problem = random_instance(&mut r, 6, priors, 0.0 + 5.0 * (trial % 3) as f64);
        let run = EpRun::new(&problem);
        for strategy in [
            Strategy::Clip,
            Strategy::AcRevamp,
            Strategy::Persistent { strict: true },
            Strategy::Persistent { strict: false },
            Strategy::NonPersistent { strict: true },
            Strategy::NonPersistent { strict: false },
        ] {
            let mut state = run.init_state().unwrap();
            for _ in 0..5 {
                for n in 0..6 {
                    let out = run.step(&mut state, n, strategy).unwrap();
                    let kind = match out.decision {
                        Decision::Accepted => "accepted",
                        Decision::Modified { .. } => "modified",
                        Decision::Rejected => "rejected",
                    };
                    *counts.entry((strategy.name(), kind)).or_default() += 1;
                    match strategy {
                        Strategy::Clip | Strategy::AcRevamp => {
                            assert_ne!(kind, "rejected", "{strategy} must never reject")
                        }
                        Strategy::Persistent { .. } | Strategy::NonPersistent { .. } => {
                            assert_ne!(kind, "modified", "{strategy} must never modify")
                        }
                        Strategy::Ideal => {}
                    }
                }
            }
        }
    }
    // The sweep must have exercised the interesting branches.
    assert!(counts.get(&("clip", "modified")).copied().unwrap_or(0) > 0);
    assert!(counts.get(&("acrevamp", "modified")).copied().unwrap_or(0) > 0);
    assert!(
        counts
            .get(&("persistent-relaxed", "rejected"))
            .copied()
            .unwrap_or(0)
            > 0
    );
    assert!(
        counts
            .get(&("nonpersistent-relaxed", "rejected"))
            .copied()
            .unwrap_or(0)
            > 0
    );
}

/// A mixture whose components have very unequal variances. With equal
/// component variances `s` every candidate precision is capped at `1/s`,
/// which keeps the tilted belief at the stepped symbol proper forever; the
/// wide component removes that cap and makes improper tilted beliefs
/// reachable.
fn heterogeneous_priors(n: usize) -> Vec<MixturePrior> {
    vec![
        MixturePrior::new(
            vec![0.45, 0.45, 0.1],
            vec![-1.0, 1.0, 0.0],
            vec![0.005, 0.005, 2.0],
        )
        .unwrap();
        n
    ]
}

#[test]
fn nonpersistent_strict_accepts_where_relaxed_rejects() {
    // Look-aheads that drive some extrinsic variance negative: if every such
    // variance is still proper against its prior, strict accepts while
    // relaxed rejects; if one of them is improper, both reject. Antipodal
    // priors produce only the first kind, mixed-variance priors also the
    // second.
    let mut r = rng(139);
    let mut strict_only = 0;
    let mut both_reject = 0;
    for trial in 0..400 {
        let (priors, snr) = if trial % 2 == 0 {
            (bpsk_priors(5), 12.0)
        } else {
            (heterogeneous_priors(5), 15.0)
        };
        let problem = random_instance(&mut r, 4, priors, snr);
        let run = EpRun::new(&problem);
        let mut state = match run.init_state() {
            Ok(s) => s,
            Err(_) => continue,
        };
        for _ in 0..10 {
            for n in 0..5 {
                let cand = match run.candidate(&state, n) {
                    Ok(c) => c,
                    Err(_) => continue,
                };
                let view = run.lookahead_view(&state);
                if let Some((_, tau_dot)) =
                    view.tentative_extrinsics(cand.n, cand.nu_hat_p, cand.xi_hat_p)
                {
                    if tau_dot.iter().any(|&t| t <= 0.0) {
                        let strict_out = revamp::strategy::nonpersistent_decide(&cand, true, &view);
                        let relaxed_out =
                            revamp::strategy::nonpersistent_decide(&cand, false, &view);
                        assert!(relaxed_out.is_rejected());
                        let all_proper = tau_dot.iter().zip(problem.priors()).all(|(&t, p)| {
                            t.is_nan()
                                || t > 0.0
                                || is_belief_proper(p, &revamp::Gaussian1D { mean: 0.0, var: t })
                        });
                        if all_proper {
                            assert!(strict_out.is_accepted());
                            strict_only += 1;
                        } else {
                            assert!(strict_out.is_rejected());
                            both_reject += 1;
                        }
                    }
                }
                // Advance under the relaxed rule to keep exploring states.
                run.step(&mut state, n, Strategy::NonPersistent { strict: false })
                    .unwrap();
            }
        }
        if strict_only > 5 && both_reject > 5 {
            break;
        }
    }
    assert!(
        strict_only > 0,
        "never saw a strict-accept / relaxed-reject split"
    );
    assert!(both_reject > 0, "never saw a both-reject candidate");
}

#[test]
fn ideal_blocks_where_persistent_completes() {
    // With mixed-variance priors the unconditional strategy eventually
    // evaluates a tilted belief that does not integrate and errors out; the
    // persistent rule completes the same instance by freezing instead.
    let mut r = rng(149);
    let opts = RunOptions {
        max_sweeps: 100,
        tol: 1e-8,
    };
    let mut found = false;
    for _ in 0..200 {
        let problem = random_instance(&mut r, 4, heterogeneous_priors(5), 15.0);
        let ideal = EpRun::new(&problem).run(Strategy::Ideal, &opts);
        match ideal {
            Err(RevampError::ImproperBelief(_)) => {
                let persistent =
                    EpRun::new(&problem).run(Strategy::Persistent { strict: true }, &opts);
                assert!(
                    persistent.is_ok(),
                    "persistent must complete where ideal blocks"
                );
                found = true;
                break;
            }
            Ok(_) => continue,
            Err(other) => panic!("unexpected failure mode: {other}"),
        }
    }
    assert!(found, "no blocking instance found");
}

#[test]
fn gaussian_priors_never_yield_nonpositive_candidates() {
    // With single-component priors the candidate precision is the component
    // precision itself, so the unconditional rule never sees a bad update.
    let mut r = rng(151);
    for _ in 0..20 {
        let priors: Vec<_> = (0..6)
            .map(|_| {
                MixturePrior::single(r.sample::<f64, _>(StandardNormal), 0.3 + r.random::<f64>())
                    .unwrap()
            })
            .collect();
        let problem = random_instance(&mut r, 8, priors, 10.0);
        let run = EpRun::new(&problem);
        let mut state = run.init_state().unwrap();
        for _ in 0..3 {
            for n in 0..6 {
                let cand = run.candidate(&state, n).unwrap();
                assert!(cand.xi_hat_p > 0.0);
                run.step(&mut state, n, Strategy::Ideal).unwrap();
            }
        }
    }
}
