//! Exact simulation of the jump process.
//!
//! Two samplers are provided for the next jump from a given state:
//!
//! * [`next_jump_race`] realises independent candidate times for an arrival
//!   and for a service completion, each an inhomogeneous Poisson clock along
//!   the deterministic flow, and keeps the earlier one;
//! * [`next_jump_thinning`] thins a single clock with the total rate
//!   `λ + h` and classifies the accepted point afterwards.
//!
//! Both draw candidate points by thinning against the `declared_sup` of the
//! fields, so they are exact for any bounded piecewise-continuous field.
//! Every state change resamples both clocks.

use std::io::{self, Write};

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{flow_unchecked, jump_down, jump_up, Direction, ModelSpec, State};
use crate::rng::{replica_rng, ReplicaRng};

/// Hard cap on events per path; bounded intensities never come close.
pub const MAX_EVENTS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampler {
    #[default]
    Race,
    Thinning,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub kind: Direction,
    pub state_before: State,
    pub state_after: State,
}

/// Where a path's randomness came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicaSeed {
    pub master_seed: u64,
    pub replica: u64,
}

/// One cadlag trajectory on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    initial: State,
    horizon: f64,
    events: Vec<JumpEvent>,
    seed: Option<ReplicaSeed>,
}

impl Path {
    pub fn initial(&self) -> State {
        self.initial
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn events(&self) -> &[JumpEvent] {
        &self.events
    }

    pub fn seed(&self) -> Option<ReplicaSeed> {
        self.seed
    }

    /// Right-continuous evaluation: the state just after all events at times `<= t`.
    pub fn state_at(&self, t: f64) -> Result<State> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::OutOfWindow {
                t,
                horizon: self.horizon,
            });
        }
        let k = self.events.partition_point(|e| e.time <= t);
        Ok(match k {
            0 => flow_unchecked(self.initial, t),
            _ => {
                let e = &self.events[k - 1];
                flow_unchecked(e.state_after, t - e.time)
            }
        })
    }

    pub fn final_state(&self) -> State {
        match self.events.last() {
            Some(e) => flow_unchecked(e.state_after, self.horizon - e.time),
            None => flow_unchecked(self.initial, self.horizon),
        }
    }

    /// Inter-jump pieces clipped to `[0, t]`: `(start time, state at start, length)`.
    pub fn segments(&self, t: f64) -> impl Iterator<Item = (f64, State, f64)> + '_ {
        let t = t.min(self.horizon);
        let starts = std::iter::once((0.0, self.initial))
            .chain(self.events.iter().map(|e| (e.time, e.state_after)));
        let ends = self
            .events
            .iter()
            .map(|e| e.time)
            .chain(std::iter::once(f64::INFINITY));
        starts
            .zip(ends)
            .take_while(move |((start, _), _)| *start <= t)
            .map(move |((start, s), end)| (start, s, end.min(t) - start))
    }

    /// Time average over `[0, horizon]` of a function of the queue length.
    pub fn occupation_average<G: Fn(u64) -> f64>(&self, g: G) -> f64 {
        let total: f64 = self
            .segments(self.horizon)
            .map(|(_, s, len)| g(s.n()) * len)
            .sum();
        total / self.horizon
    }

    /// CSV export: `time,kind,n_before,x_before,n_after,x_after`, reals with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "time,kind,n_before,x_before,n_after,x_after")?;
        for e in &self.events {
            writeln!(
                w,
                "{:.16e},{},{},{:.16e},{},{:.16e}",
                e.time,
                e.kind,
                e.state_before.n(),
                e.state_before.x(),
                e.state_after.n(),
                e.state_after.x()
            )?;
        }
        Ok(())
    }
}

#[inline]
fn exp_increment<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    let e: f64 = rng.sample(Exp1);
    e / rate
}

/// First point in `(0, horizon]` of the Poisson clock with intensity
/// `rate(flow(s, z))`, or `None` if there is none.
pub fn sample_candidate_time<R: Rng + ?Sized>(
    model: &ModelSpec,
    s: State,
    which: Direction,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<f64>> {
    let bound = model.rate_bound(which, s);
    if bound <= 0.0 {
        return Ok(None);
    }
    let mut t = 0.0;
    loop {
        t += exp_increment(rng, bound);
        if t > horizon {
            return Ok(None);
        }
        let rate = model.evaluate_intensity(which, flow_unchecked(s, t))?;
        if rate > bound {
            return Err(Error::SpecViolation {
                field: which,
                state: flow_unchecked(s, t),
                value: rate,
                declared_sup: bound,
            });
        }
        if rng.random::<f64>() * bound < rate {
            return Ok(Some(t));
        }
    }
}

/// Race of independent up/down candidates; ties go to `Up`.
pub fn next_jump_race<R: Rng + ?Sized>(
    model: &ModelSpec,
    s: State,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<(f64, Direction)>> {
    let up = sample_candidate_time(model, s, Direction::Up, horizon, rng)?;
    // The down candidate only matters if it beats the up candidate.
    let down_window = up.unwrap_or(horizon);
    let down = sample_candidate_time(model, s, Direction::Down, down_window, rng)?;
    Ok(match (up, down) {
        (None, None) => None,
        (Some(u), None) => Some((u, Direction::Up)),
        (None, Some(d)) => Some((d, Direction::Down)),
        (Some(u), Some(d)) if u <= d => Some((u, Direction::Up)),
        (Some(_), Some(d)) => Some((d, Direction::Down)),
    })
}

/// Thinning of the total rate `λ + h`; the accepted point is an arrival with
/// probability `λ / (λ + h)` evaluated there.
pub fn next_jump_thinning<R: Rng + ?Sized>(
    model: &ModelSpec,
    s: State,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<(f64, Direction)>> {
    let bound_up = model.rate_bound(Direction::Up, s);
    let bound = bound_up + model.rate_bound(Direction::Down, s);
    if bound <= 0.0 {
        return Ok(None);
    }
    let mut t = 0.0;
    loop {
        t += exp_increment(rng, bound);
        if t > horizon {
            return Ok(None);
        }
        let y = flow_unchecked(s, t);
        let lam = model.evaluate_intensity(Direction::Up, y)?;
        let h = model.evaluate_intensity(Direction::Down, y)?;
        let u = rng.random::<f64>() * bound;
        if u < lam {
            return Ok(Some((t, Direction::Up)));
        }
        if u < lam + h {
            return Ok(Some((t, Direction::Down)));
        }
    }
}

pub fn next_jump<R: Rng + ?Sized>(
    sampler: Sampler,
    model: &ModelSpec,
    s: State,
    horizon: f64,
    rng: &mut R,
) -> Result<Option<(f64, Direction)>> {
    match sampler {
        Sampler::Race => next_jump_race(model, s, horizon, rng),
        Sampler::Thinning => next_jump_thinning(model, s, horizon, rng),
    }
}

/// Simulates a path on `[0, horizon]` drawing from `rng`.
pub fn simulate_path_with<R: Rng + ?Sized>(
    model: &ModelSpec,
    initial: State,
    horizon: f64,
    sampler: Sampler,
    rng: &mut R,
) -> Result<Path> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    let mut events = Vec::new();
    let mut now = 0.0;
    let mut state = initial;
    while let Some((hold, kind)) = next_jump(sampler, model, state, horizon - now, rng)? {
        if events.len() >= MAX_EVENTS {
            return Err(Error::Explosion {
                events: MAX_EVENTS,
                time: now,
            });
        }
        let time = now + hold;
        let before = flow_unchecked(state, hold);
        let after = match kind {
            Direction::Up => jump_up(before, model.capacity())?,
            Direction::Down => jump_down(before)?,
        };
        // Guard against a zero holding time rounding onto the previous event.
        if time <= now && !events.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "non-increasing event time {time} after {now}"
            )));
        }
        events.push(JumpEvent {
            time,
            kind,
            state_before: before,
            state_after: after,
        });
        now = time;
        state = after;
    }
    Ok(Path {
        initial,
        horizon,
        events,
        seed: None,
    })
}

/// Simulates replica `seed.replica` of the ensemble keyed by `seed.master_seed`.
pub fn simulate_path(
    model: &ModelSpec,
    initial: State,
    horizon: f64,
    sampler: Sampler,
    seed: ReplicaSeed,
) -> Result<Path> {
    let mut rng: ReplicaRng = replica_rng(seed.master_seed, seed.replica);
    let mut path = simulate_path_with(model, initial, horizon, sampler, &mut rng)?;
    path.seed = Some(seed);
    Ok(path)
}
