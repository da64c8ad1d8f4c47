//! Binned empirical laws and total-variation convergence curves.
//!
//! The binned distance `½ Σ |a - b|` never exceeds the true total-variation
//! distance between the underlying laws, but the plug-in estimate carries a
//! positive sampling bias of order `Σ sqrt(p_i / N)` that flattens curves
//! once the true distance drops below it.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::par_replicas;
use crate::error::{Error, Result};
use crate::model::{ModelSpec, State};
use crate::rng::derive_seed;
use crate::sampler::{simulate_path_with, Sampler};

pub const BOOTSTRAP_RESAMPLES: u64 = 200;

/// Bins: `n ∈ {0..=n_max, overflow}` × `x ∈ [0, x_max)` in steps of `width`, plus overflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub n_max: u64,
    pub x_max: f64,
    pub width: f64,
}

impl Default for Binning {
    fn default() -> Self {
        Self {
            n_max: 100,
            x_max: 50.0,
            width: 0.5,
        }
    }
}

impl Binning {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0) || !(self.x_max > 0.0) || !self.x_max.is_finite() {
            return Err(Error::InvalidArgument(format!("bad binning {self:?}")));
        }
        Ok(())
    }

    fn x_bins(&self) -> usize {
        (self.x_max / self.width).ceil() as usize + 1
    }

    pub fn len(&self) -> usize {
        (self.n_max as usize + 2) * self.x_bins()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, s: State) -> usize {
        let xb = self.x_bins();
        let n = (s.n() as usize).min(self.n_max as usize + 1);
        let x = if s.x() >= self.x_max {
            xb - 1
        } else {
            ((s.x() / self.width) as usize).min(xb - 2)
        };
        n * xb + x
    }

    /// Whether bin `i` is an overflow bin in either coordinate.
    pub fn is_overflow(&self, i: usize) -> bool {
        let xb = self.x_bins();
        i / xb == self.n_max as usize + 1 || i % xb == xb - 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalLaw {
    binning: Binning,
    masses: Vec<f64>,
    replicas: u64,
}

impl EmpiricalLaw {
    pub fn from_states(binning: Binning, states: &[State]) -> Result<Self> {
        binning.validate()?;
        if states.is_empty() {
            return Err(Error::InvalidArgument(
                "empirical law of zero states".into(),
            ));
        }
        let mut counts = vec![0u64; binning.len()];
        for &s in states {
            counts[binning.index(s)] += 1;
        }
        Ok(Self::from_counts(binning, &counts, states.len() as u64))
    }

    fn from_counts(binning: Binning, counts: &[u64], total: u64) -> Self {
        let masses = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Self {
            binning,
            masses,
            replicas: total,
        }
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn replicas(&self) -> u64 {
        self.replicas
    }

    pub fn overflow_mass(&self) -> f64 {
        self.masses
            .iter()
            .enumerate()
            .filter(|(i, _)| self.binning.is_overflow(*i))
            .map(|(_, m)| m)
            .sum()
    }
}

/// `½ Σ_bins |a - b|`, clamped to `[0, 1]`.
pub fn tv_estimate(a: &EmpiricalLaw, b: &EmpiricalLaw) -> Result<f64> {
    if a.binning != b.binning || a.masses.len() != b.masses.len() {
        return Err(Error::BinningMismatch);
    }
    Ok(tv_of_masses(&a.masses, &b.masses))
}

fn tv_of_masses(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum();
    (0.5 * s).clamp(0.0, 1.0)
}

fn tv_of_counts(a: &[u32], na: u64, b: &[u32], nb: u64) -> f64 {
    let (na, nb) = (na as f64, nb as f64);
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x as f64 / na - y as f64 / nb).abs())
        .sum();
    (0.5 * s).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub tv: f64,
    /// Bootstrap standard error over replica resampling.
    pub stderr: f64,
    pub replicas: u64,
    /// `tv < 2 stderr`: indistinguishable from sampling noise.
    pub noise_floor: bool,
}

/// Binned TV between the laws at time `t` started from `initial_a` and
/// `initial_b`, for every `t` in `t_grid`.
///
/// Each replica path is simulated once to the last grid time and observed at
/// every grid time. The two ensembles use independent seeds derived from
/// `master_seed`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_curve(
    model: &ModelSpec,
    initial_a: State,
    initial_b: State,
    t_grid: &[f64],
    replicas: u64,
    binning: Binning,
    master_seed: u64,
    resamples: u64,
) -> Result<Vec<CurvePoint>> {
    binning.validate()?;
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[0] >= w[1]) || !(t_grid[0] > 0.0) {
        return Err(Error::InvalidArgument(
            "t_grid must be positive and increasing".into(),
        ));
    }
    let horizon = *t_grid.last().expect("nonempty grid");
    let observe = |initial: State, seed: u64| {
        par_replicas(replicas, seed, |_, rng| {
            let path = simulate_path_with(model, initial, horizon, Sampler::Race, rng)?;
            t_grid
                .iter()
                .map(|&t| path.state_at(t).map(|s| binning.index(s) as u32))
                .collect::<Result<Vec<u32>>>()
        })
    };
    let bins_a = observe(initial_a, derive_seed(master_seed, "converge/a"))?;
    let bins_b = observe(initial_b, derive_seed(master_seed, "converge/b"))?;

    let width = binning.len();
    let n = replicas;
    let histogram = |rows: &[Vec<u32>], j: usize| {
        let mut c = vec![0u32; width];
        for r in rows {
            c[r[j] as usize] += 1;
        }
        c
    };
    let point_tv: Vec<f64> = (0..t_grid.len())
        .map(|j| tv_of_counts(&histogram(&bins_a, j), n, &histogram(&bins_b, j), n))
        .collect();

    let boot = par_replicas(
        resamples.max(2),
        derive_seed(master_seed, "converge/bootstrap"),
        |_, rng| {
            let pick_a: Vec<usize> = (0..n).map(|_| rng.random_range(0..n as usize)).collect();
            let pick_b: Vec<usize> = (0..n).map(|_| rng.random_range(0..n as usize)).collect();
            let mut ca = vec![0u32; width];
            let mut cb = vec![0u32; width];
            Ok((0..t_grid.len())
                .map(|j| {
                    ca.iter_mut().for_each(|c| *c = 0);
                    cb.iter_mut().for_each(|c| *c = 0);
                    for &i in &pick_a {
                        ca[bins_a[i][j] as usize] += 1;
                    }
                    for &i in &pick_b {
                        cb[bins_b[i][j] as usize] += 1;
                    }
                    tv_of_counts(&ca, n, &cb, n)
                })
                .collect::<Vec<f64>>())
        },
    )?;

    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(j, &t)| {
            let values: Vec<f64> = boot.iter().map(|row| row[j]).collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
            let stderr = var.sqrt();
            CurvePoint {
                t,
                tv: point_tv[j],
                stderr,
                replicas,
                noise_floor: point_tv[j] < 2.0 * stderr,
            }
        })
        .collect())
}

/// True when no point exceeds its predecessor by more than `k` combined
/// standard errors.
pub fn is_decreasing_within(curve: &[CurvePoint], k: f64) -> bool {
    curve
        .windows(2)
        .all(|w| w[1].tv <= w[0].tv + k * (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    /// Slope of `ln TV` against `ln(1 + t)`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub points_used: usize,
    pub excluded_t: Vec<f64>,
}

/// Weighted least squares of `ln TV` on `ln(1 + t)` with weights
/// `(TV / stderr)^2`; noise-floor points are excluded.
pub fn fit_rate(curve: &[CurvePoint]) -> Result<RateFit> {
    let mut excluded_t = Vec::new();
    let mut pts = Vec::new();
    for p in curve {
        if p.noise_floor || !(p.tv > 0.0) || !(p.stderr > 0.0) {
            excluded_t.push(p.t);
        } else {
            pts.push(((1.0 + p.t).ln(), p.tv.ln(), (p.tv / p.stderr).powi(2)));
        }
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "rate fit: {} points above the noise floor, need 2",
            pts.len()
        )));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let mx = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let my = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| p.2 * (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    Ok(RateFit {
        slope,
        slope_stderr: (1.0 / sxx).sqrt(),
        points_used: pts.len(),
        excluded_t,
    })
}
