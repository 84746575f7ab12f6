//! Runs every strategy on one random instance and prints how each estimate
//! compares against the exact (enumerated) MMSE solution.
//!
//! ```sh
//! cargo run --release -p revamp --example compare_strategies [scenario] [seed] [snr_db]
//! ```
//!
//! `scenario` is `sparse` (8x10, decaying-amplitude mixtures) or `bpsk`
//! (20x10, antipodal mixtures). Antipodal instances around 5 dB are where
//! the strategies visibly part ways.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use revamp::engine::{run, LinearProblem, RunOptions};
use revamp::oracle::{brute_force_mmse, lmmse};
use revamp::prior::MixturePrior;
use revamp::strategy::Strategy;

fn main() -> revamp::Result<()> {
    let mut args = std::env::args().skip(1);
    let scenario = args.next().unwrap_or_else(|| "bpsk".into());
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(11);
    let snr_db: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(5.0);

    let (m, n) = if scenario == "sparse" { (8, 10) } else { (20, 10) };
    let priors: Vec<MixturePrior> = if scenario == "sparse" {
        (0..n).map(MixturePrior::sparse_symbol).collect()
    } else {
        vec![MixturePrior::bpsk(); n]
    };
    let power: f64 = priors.iter().map(|p| p.second_moment()).sum::<f64>() / n as f64;
    let noise_var = power / 10f64.powf(snr_db / 10.0);

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(m, n, |_, _| {
        rng.sample::<f64, _>(StandardNormal) / (n as f64).sqrt()
    });
    let x = DVector::from_fn(n, |j, _| {
        let p = &priors[j];
        let k = usize::from(rng.random::<f64>() >= p.weights()[0]);
        p.means()[k] + p.vars()[k].sqrt() * rng.sample::<f64, _>(StandardNormal)
    });
    let y = &a * &x
        + DVector::from_fn(m, |_, _| noise_var.sqrt() * rng.sample::<f64, _>(StandardNormal));
    let problem = LinearProblem::new(a, y, noise_var, priors)?;

    let mmse = brute_force_mmse(&problem)?;
    let lin = lmmse(&problem)?;
    println!("seed {seed}, {m}x{n} {scenario} instance at {snr_db} dB SNR");
    println!(
        "{:<24} {:>12} {:>8} {:>10} {:>9}",
        "estimator", "NMSE vs MMSE", "sweeps", "converged", "frozen"
    );

    let nmse =
        |x_hat: &DVector<f64>| (x_hat - &mmse.mean).norm_squared() / mmse.mean.norm_squared();
    println!(
        "{:<24} {:>12.3e} {:>8} {:>10} {:>9}",
        "lmmse",
        nmse(&lin.mean),
        "-",
        "-",
        "-"
    );

    for strategy in Strategy::ALL {
        match run(&problem, strategy, &RunOptions::default()) {
            Ok(report) => println!(
                "{:<24} {:>12.3e} {:>8} {:>10} {:>9}",
                strategy.name(),
                nmse(&report.x_hat),
                report.sweeps_run,
                report.converged,
                report.rejected_updates
            ),
            Err(err) => println!("{:<24} failed: {err}", strategy.name()),
        }
    }
    Ok(())
}
