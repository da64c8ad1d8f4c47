//! A-priori moment bound via the dominating no-service process.
//!
//! Without service the queue only grows: `x` increases at unit speed and `n`
//! gains a Poisson(λ̄ t) number of arrivals with `λ̄ = max(Λ, λ0)`. This
//! dominates the real process and gives
//!
//! ```text
//! sup_{t <= T} E (n_t + x_t)^m <= 3^{m-1} ((x0 + T)^m + n0^m + ψ(T, m)),   ψ(T, m) = E ξ^m, ξ ~ Poisson(λ̄ T)
//! ```

use serde::{Deserialize, Serialize};

use crate::ensemble::par_replicas;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, State};
use crate::sampler::{simulate_path_with, Sampler};

/// Number of equally spaced times in `(0, T]` at which the ensemble mean is taken.
pub const MOMENT_GRID_POINTS: usize = 50;

/// `E ξ^m` for `ξ ~ Poisson(a)`, as `Σ_j S(m, j) a^j` with Stirling numbers
/// of the second kind.
pub fn poisson_raw_moment(a: f64, m: u32) -> Result<f64> {
    if m > 20 {
        return Err(Error::InvalidArgument(format!("moment order {m} above 20")));
    }
    if !(a >= 0.0) || !a.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "Poisson mean must be nonnegative, got {a}"
        )));
    }
    if m == 0 {
        return Ok(1.0);
    }
    // Row m of the Stirling triangle; entries stay below 2^53 for m <= 20.
    let m = m as usize;
    let mut row = vec![0.0f64; m + 1];
    row[0] = 1.0;
    for i in 1..=m {
        for j in (1..=i).rev() {
            row[j] = j as f64 * row[j] + row[j - 1];
        }
        row[0] = 0.0;
    }
    Ok((1..=m).map(|j| row[j] * a.powi(j as i32)).sum())
}

/// Right-hand side of the moment bound.
pub fn moment_bound_rhs(model: &ModelSpec, initial: State, horizon: f64, m: u32) -> Result<f64> {
    let three = 3f64.powi(m as i32 - 1);
    let psi = poisson_raw_moment(model.lambda_bar() * horizon, m)?;
    Ok(
        three
            * ((initial.x() + horizon).powi(m as i32) + (initial.n() as f64).powi(m as i32) + psi),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentBound {
    pub m: u32,
    /// Largest ensemble mean of `(n_t + x_t)^m` over the time grid.
    pub lhs: f64,
    pub lhs_stderr: f64,
    pub lhs_time: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn moment_bound_check(
    model: &ModelSpec,
    initial: State,
    horizon: f64,
    m: u32,
    replicas: u64,
    master_seed: u64,
) -> Result<MomentBound> {
    Ok(moment_bound_checks(model, initial, horizon, &[m], replicas, master_seed)?[0])
}

/// Several moment orders evaluated on one ensemble.
pub fn moment_bound_checks(
    model: &ModelSpec,
    initial: State,
    horizon: f64,
    ms: &[u32],
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<MomentBound>> {
    if !(horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "T must be positive, got {horizon}"
        )));
    }
    let grid: Vec<f64> = (1..=MOMENT_GRID_POINTS)
        .map(|i| horizon * i as f64 / MOMENT_GRID_POINTS as f64)
        .collect();
    let sums = par_replicas(replicas, master_seed, |_, rng| {
        let path = simulate_path_with(model, initial, horizon, Sampler::Race, rng)?;
        grid.iter()
            .map(|&t| path.state_at(t).map(|s| s.n() as f64 + s.x()))
            .collect::<Result<Vec<f64>>>()
    })?;
    ms.iter()
        .map(|&m| {
            let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
            for (j, &t) in grid.iter().enumerate() {
                let values: Vec<f64> = sums.iter().map(|row| row[j].powi(m as i32)).collect();
                let est = crate::ensemble::MCEstimate::from_values(&values, master_seed);
                if est.mean > best.0 {
                    best = (est.mean, est.stderr, t);
                }
            }
            let rhs = moment_bound_rhs(model, initial, horizon, m)?;
            Ok(MomentBound {
                m,
                lhs: best.0,
                lhs_stderr: best.1,
                lhs_time: best.2,
                rhs,
                pass: best.0 <= rhs,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IntensitySpec;

    #[test]
    fn touchard_examples() {
        assert_eq!(poisson_raw_moment(1.0, 1).unwrap(), 1.0);
        assert_eq!(poisson_raw_moment(1.0, 2).unwrap(), 2.0);
        assert_eq!(poisson_raw_moment(2.0, 3).unwrap(), 22.0);
        assert_eq!(poisson_raw_moment(3.0, 0).unwrap(), 1.0);
        assert!(poisson_raw_moment(1.0, 21).is_err());
    }

    #[test]
    fn zero_intensities_are_deterministic() {
        let m = ModelSpec::new(IntensitySpec::zero(), IntensitySpec::zero(), 0.0, None).unwrap();
        let start = State::new(2, 0.5).unwrap();
        let b = moment_bound_check(&m, start, 4.0, 2, 50, 1).unwrap();
        assert!((b.lhs - 6.5f64.powi(2)).abs() < 1e-9);
        assert_eq!(b.lhs_stderr, 0.0);
        assert!(b.pass);
        assert_eq!(b.rhs, 3.0 * (4.5f64.powi(2) + 4.0));
    }

    #[test]
    fn first_moment_bound_has_no_prefactor() {
        let m = ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.5,
            None,
        )
        .unwrap();
        let s = State::new(3, 1.0).unwrap();
        assert_eq!(moment_bound_rhs(&m, s, 10.0, 1).unwrap(), 11.0 + 3.0 + 5.0);
    }
}
