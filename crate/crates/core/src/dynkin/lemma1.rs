//! Small-interval jump probabilities and their order in Δ.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::ensemble::par_replicas;
use crate::error::{Error, Result};
use crate::model::{jump_down, jump_up, Direction, ModelSpec, State};
use crate::sampler::{next_jump, Sampler};

/// Counts of the four jump classes on `(0, Δ]`; they partition the sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct JumpClassCounts {
    pub none: u64,
    pub one_up: u64,
    pub one_down: u64,
    pub multi: u64,
}

impl JumpClassCounts {
    pub fn total(&self) -> u64 {
        self.none + self.one_up + self.one_down + self.multi
    }
}

/// A binomial proportion with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Proportion {
    pub p: f64,
    pub stderr: f64,
}

impl Proportion {
    fn new(count: u64, total: u64) -> Self {
        let p = count as f64 / total as f64;
        Self {
            p,
            stderr: (p * (1.0 - p) / total as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallDeltaEstimate {
    pub delta: f64,
    pub counts: JumpClassCounts,
    pub p_none: Proportion,
    pub p_one_up: Proportion,
    pub p_one_down: Proportion,
    pub p_multi: Proportion,
}

#[derive(Clone, Copy)]
enum JumpClass {
    None,
    OneUp,
    OneDown,
    Multi,
}

/// Monte-Carlo frequencies of: no jump, exactly one up, exactly one down,
/// and two or more jumps on `(0, Δ]` from `s`.
pub fn small_delta_probabilities(
    model: &ModelSpec,
    s: State,
    delta: f64,
    replicas: u64,
    master_seed: u64,
    sampler: Sampler,
) -> Result<SmallDeltaEstimate> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let classes = par_replicas(replicas, master_seed, |_, rng| {
        let Some((t1, kind)) = next_jump(sampler, model, s, delta, rng)? else {
            return Ok(JumpClass::None);
        };
        let before = crate::model::flow_unchecked(s, t1);
        let after = match kind {
            Direction::Up => jump_up(before, model.capacity())?,
            Direction::Down => jump_down(before)?,
        };
        Ok(match next_jump(sampler, model, after, delta - t1, rng)? {
            Some(_) => JumpClass::Multi,
            None if kind == Direction::Up => JumpClass::OneUp,
            None => JumpClass::OneDown,
        })
    })?;
    let mut counts = JumpClassCounts::default();
    for c in classes {
        match c {
            JumpClass::None => counts.none += 1,
            JumpClass::OneUp => counts.one_up += 1,
            JumpClass::OneDown => counts.one_down += 1,
            JumpClass::Multi => counts.multi += 1,
        }
    }
    Ok(SmallDeltaEstimate {
        delta,
        counts,
        p_none: Proportion::new(counts.none, replicas),
        p_one_up: Proportion::new(counts.one_up, replicas),
        p_one_down: Proportion::new(counts.one_down, replicas),
        p_multi: Proportion::new(counts.multi, replicas),
    })
}

/// Least-squares slope of `log|residual|` against `log Δ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    pub slope: f64,
    /// 95% Student-t interval; infinite when only two points remain.
    pub ci_low: f64,
    pub ci_high: f64,
    pub points_used: usize,
    pub warnings: Vec<String>,
}

/// Points whose residual is not positive or is within two standard errors
/// of zero are excluded with a warning.
pub fn order_fit(deltas: &[f64], residuals: &[f64], stderrs: Option<&[f64]>) -> Result<OrderFit> {
    if deltas.len() != residuals.len() || stderrs.is_some_and(|s| s.len() != deltas.len()) {
        return Err(Error::InvalidArgument(
            "order_fit: series lengths differ".into(),
        ));
    }
    if deltas.len() < 4 {
        return Err(Error::InvalidArgument(
            "order_fit needs at least 4 grid points".into(),
        ));
    }
    let mut warnings = Vec::new();
    let mut pts = Vec::new();
    for (i, (&d, &r)) in deltas.iter().zip(residuals).enumerate() {
        let floor = stderrs.map_or(0.0, |s| 2.0 * s[i]);
        if !(d > 0.0) || !(r > 0.0) || r <= floor {
            warnings.push(format!(
                "delta={d}: residual {r} at or below noise floor {floor}; excluded"
            ));
            continue;
        }
        pts.push((d.ln(), r.ln()));
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "order_fit: only {} usable points after excluding the noise floor",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let (ci_low, ci_high) = if pts.len() > 2 {
        let intercept = my - slope * mx;
        let sse: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let dof = k - 2.0;
        let se = (sse / dof / sxx).sqrt();
        let q = StudentsT::new(0.0, 1.0, dof)
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .inverse_cdf(0.975);
        (slope - q * se, slope + q * se)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    Ok(OrderFit {
        slope,
        ci_low,
        ci_high,
        points_used: pts.len(),
        warnings,
    })
}
