//! Deterministic problem-instance generation.
//!
//! Every instance is drawn from an RNG stream keyed only by
//! `(master_seed, snr_index, instance_id)`, so results are independent of
//! scheduling and thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use revamp::engine::LinearProblem;
use revamp::prior::MixturePrior;

use crate::config::{ExperimentConfig, Scenario};

/// A generated problem together with the signal it was built from.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: LinearProblem,
    pub true_x: DVector<f64>,
}

/// Per-symbol priors of the configured scenario.
pub fn scenario_priors(cfg: &ExperimentConfig) -> Vec<MixturePrior> {
    match cfg.scenario {
        Scenario::Sparse => (0..cfg.n).map(MixturePrior::sparse_symbol).collect(),
        Scenario::Bpsk => vec![MixturePrior::bpsk(); cfg.n],
        Scenario::Custom => {
            let prior = cfg
                .custom_prior
                .clone()
                .expect("custom scenario carries a prior");
            vec![prior; cfg.n]
        }
    }
}

/// Noise variance achieving the target SNR against the analytic average
/// signal power: with `[A]_{m,n} ~ N(0, 1/N)`, `E‖Ax‖² = (M/N) Σ_n E[x_n²]`,
/// so `σ² = (Σ_n E[x_n²] / N) / 10^(snr/10)`.
pub fn noise_variance_for_snr(priors: &[MixturePrior], snr_db: f64) -> f64 {
    let mean_power: f64 =
        priors.iter().map(|p| p.second_moment()).sum::<f64>() / priors.len() as f64;
    mean_power / 10f64.powf(snr_db / 10.0)
}

fn instance_rng(master_seed: u64, snr_idx: u64, instance_id: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&snr_idx.to_le_bytes());
    key[16..24].copy_from_slice(&instance_id.to_le_bytes());
    key[24..32].copy_from_slice(b"revamp\0\0");
    ChaCha12Rng::from_seed(key)
}

/// Instance for SNR level `snr_idx` and `instance_id`. Draw order is fixed:
/// the measurement matrix, then the signal, then the noise.
pub fn generate_instance(cfg: &ExperimentConfig, snr_idx: usize, instance_id: u64) -> Instance {
    let snr_db = cfg.snr_grid_db[snr_idx];
    let priors = scenario_priors(cfg);
    let noise_var = noise_variance_for_snr(&priors, snr_db);
    let mut rng = instance_rng(cfg.master_seed, snr_idx as u64, instance_id);

    let entry_sd = (1.0 / cfg.n as f64).sqrt();
    let a = DMatrix::from_fn(cfg.m, cfg.n, |_, _| {
        entry_sd * rng.sample::<f64, _>(StandardNormal)
    });
    let x = DVector::from_fn(cfg.n, |j, _| sample_symbol(&priors[j], &mut rng));
    let noise_sd = noise_var.sqrt();
    let y = &a * &x
        + DVector::from_fn(cfg.m, |_, _| {
            noise_sd * rng.sample::<f64, _>(StandardNormal)
        });

    Instance {
        problem: LinearProblem::new(a, y, noise_var, priors)
            .expect("generated instance is well-formed"),
        true_x: x,
    }
}

fn sample_symbol(prior: &MixturePrior, rng: &mut ChaCha12Rng) -> f64 {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut component = prior.num_components() - 1;
    for (k, w) in prior.weights().iter().enumerate() {
        acc += w;
        if u < acc {
            component = k;
            break;
        }
    }
    prior.means()[component] + prior.vars()[component].sqrt() * rng.sample::<f64, _>(StandardNormal)
}
