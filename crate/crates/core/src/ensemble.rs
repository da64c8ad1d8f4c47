//! Replica ensembles and Monte-Carlo estimates.
//!
//! Replicas run on the rayon pool (worker count from `RAYON_NUM_THREADS`),
//! each with its own stream from [`crate::rng::replica_rng`]. Results are
//! collected in replica-index order and reduced sequentially, so every output
//! bit is independent of the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelSpec, State};
use crate::rng::{replica_rng, ReplicaRng};
use crate::sampler::{simulate_path_with, Path, Sampler};

/// Mean, standard error (sample sd / sqrt(replicas)), replica count, seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub replicas: u64,
    pub master_seed: u64,
}

impl MCEstimate {
    pub fn from_values(values: &[f64], master_seed: u64) -> Self {
        let n = values.len();
        assert!(n > 0, "an estimate needs at least one replica");
        let mean = values.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            stderr,
            replicas: n as u64,
            master_seed,
        }
    }

    /// `|mean - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.stderr
    }
}

/// Runs `f(replica, rng)` for every replica index and returns the results in index order.
pub fn par_replicas<T, F>(replicas: u64, master_seed: u64, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut ReplicaRng) -> Result<T> + Sync,
{
    if replicas == 0 {
        return Err(Error::InvalidArgument("replicas must be at least 1".into()));
    }
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = replica_rng(master_seed, i);
            f(i, &mut rng)
        })
        .collect()
}

/// Simulates `replicas` paths and averages `reducer` over them.
pub fn run_ensemble<F>(
    model: &ModelSpec,
    initial: State,
    horizon: f64,
    replicas: u64,
    master_seed: u64,
    sampler: Sampler,
    reducer: F,
) -> Result<MCEstimate>
where
    F: Fn(&Path) -> f64 + Sync,
{
    let values = par_replicas(replicas, master_seed, |_, rng| {
        let path = simulate_path_with(model, initial, horizon, sampler, rng)?;
        Ok(reducer(&path))
    })?;
    Ok(MCEstimate::from_values(&values, master_seed))
}
