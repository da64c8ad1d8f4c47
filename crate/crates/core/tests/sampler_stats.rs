//! Distributional checks of the samplers against closed-form laws.

use hazardq::ensemble::{par_replicas, run_ensemble};
use hazardq::ergodicity::mm1;
use hazardq::sampler::{next_jump, sample_candidate_time, simulate_path, ReplicaSeed};
use hazardq::{scenarios, Direction, IntensitySpec, ModelSpec, Sampler, State};

const SEED: u64 = 20240601;
const DRAWS: u64 = 100_000;

fn st(n: u64, x: f64) -> State {
    State::new(n, x).unwrap()
}

/// One-sample Kolmogorov–Smirnov distance against a continuous CDF.
fn ks_one_sample(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max)
}

/// Two-sample Kolmogorov–Smirnov distance.
fn ks_two_sample(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

fn candidates(model: &ModelSpec, s: State, which: Direction, horizon: f64) -> Vec<Option<f64>> {
    par_replicas(DRAWS, SEED, |_, rng| {
        sample_candidate_time(model, s, which, horizon, rng)
    })
    .unwrap()
}

fn first_jumps(model: &ModelSpec, s: State, sampler: Sampler) -> Vec<(f64, Direction)> {
    par_replicas(DRAWS, SEED, |_, rng| {
        Ok(next_jump(sampler, model, s, 1e6, rng)?.expect("a jump occurs"))
    })
    .unwrap()
}

#[test]
fn constant_candidate_is_exponential() {
    let c = 1.7;
    let model =
        ModelSpec::new(IntensitySpec::zero(), IntensitySpec::constant(c), 0.0, None).unwrap();
    let times: Vec<f64> = candidates(&model, st(1, 0.3), Direction::Down, 1e6)
        .into_iter()
        .map(|t| t.unwrap())
        .collect();
    let d = ks_one_sample(times, |z| 1.0 - (-c * z).exp());
    assert!(d < 0.006, "KS distance {d}");
}

#[test]
fn zero_field_never_fires() {
    let model = ModelSpec::new(IntensitySpec::zero(), IntensitySpec::zero(), 0.0, None).unwrap();
    assert!(candidates(&model, st(2, 1.0), Direction::Down, 10.0)
        .iter()
        .all(Option::is_none));
}

#[test]
fn pk_hazard_survival_at_one() {
    let model = ModelSpec::new(
        IntensitySpec::zero(),
        IntensitySpec::pk_hazard(3.0),
        0.0,
        None,
    )
    .unwrap();
    let draws = candidates(&model, st(1, 0.0), Direction::Down, 1.0);
    let survived = draws.iter().filter(|t| t.is_none()).count() as f64 / DRAWS as f64;
    let p = 0.125;
    let se = (p * (1.0 - p) / DRAWS as f64).sqrt();
    assert!((survived - p).abs() <= 3.0 * se, "{survived}");
}

#[test]
fn competing_exponentials_choose_up_one_third() {
    for sampler in [Sampler::Race, Sampler::Thinning] {
        let jumps = first_jumps(&scenarios::mm1(), st(1, 0.0), sampler);
        let p = jumps.iter().filter(|(_, k)| *k == Direction::Up).count() as f64 / DRAWS as f64;
        let se = (1.0 / 3.0 * 2.0 / 3.0 / DRAWS as f64).sqrt();
        assert!((p - 1.0 / 3.0).abs() <= 3.0 * se, "{sampler:?}: {p}");
    }
}

#[test]
fn empty_state_only_arrives() {
    let model = scenarios::heavy_tail();
    for sampler in [Sampler::Race, Sampler::Thinning] {
        let jumps = first_jumps(&model, State::EMPTY, sampler);
        assert!(jumps.iter().all(|(_, k)| *k == Direction::Up));
        let times = jumps.into_iter().map(|(t, _)| t).collect();
        let d = ks_one_sample(times, |z| 1.0 - (-0.5 * z).exp());
        assert!(d < 0.006, "{sampler:?}: KS distance {d}");
    }
}

#[test]
fn no_arrival_field_only_departs() {
    let model = ModelSpec::new(
        IntensitySpec::zero(),
        IntensitySpec::constant(1.0),
        0.0,
        None,
    )
    .unwrap();
    for sampler in [Sampler::Race, Sampler::Thinning] {
        assert!(first_jumps(&model, st(2, 0.0), sampler)
            .iter()
            .all(|(_, k)| *k == Direction::Down));
    }
}

#[test]
fn race_and_thinning_agree_on_step_fields() {
    let model = scenarios::step_discontinuous();
    let race = first_jumps(&model, st(1, 0.0), Sampler::Race);
    let thin = first_jumps(&model, st(1, 0.0), Sampler::Thinning);
    let up = |v: &[(f64, Direction)]| {
        v.iter().filter(|(_, k)| *k == Direction::Up).count() as f64 / DRAWS as f64
    };
    let (pa, pb) = (up(&race), up(&thin));
    let pooled = 0.5 * (pa + pb);
    let se = (pooled * (1.0 - pooled) * 2.0 / DRAWS as f64).sqrt();
    assert!((pa - pb).abs() <= 3.0 * se, "{pa} vs {pb}");
    let d = ks_two_sample(
        race.iter().map(|j| j.0).collect(),
        thin.iter().map(|j| j.0).collect(),
    );
    assert!(d < 0.006, "KS distance {d}");
}

#[test]
fn mm1_idle_fraction_is_one_half() {
    let oracle = mm1(0.5, 1.0).unwrap();
    let seed = ReplicaSeed {
        master_seed: SEED,
        replica: 0,
    };
    let path = simulate_path(&scenarios::mm1(), State::EMPTY, 1e4, Sampler::Race, seed).unwrap();
    let idle = path.occupation_average(|n| if n == 0 { 1.0 } else { 0.0 });
    assert!((idle - oracle.p0).abs() <= 0.02, "{idle}");
}

#[test]
fn mm1_ensemble_mean_queue_length() {
    let est = run_ensemble(
        &scenarios::mm1(),
        State::EMPTY,
        200.0,
        10_000,
        SEED,
        Sampler::Race,
        |p| p.final_state().n() as f64,
    )
    .unwrap();
    assert!(est.within(1.0, 3.0), "{est:?}");
}

#[test]
fn paths_are_reproducible_and_consistent() {
    let seed = ReplicaSeed {
        master_seed: SEED,
        replica: 17,
    };
    let model = scenarios::step_discontinuous();
    let a = simulate_path(&model, st(1, 0.0), 200.0, Sampler::Race, seed).unwrap();
    let b = simulate_path(&model, st(1, 0.0), 200.0, Sampler::Race, seed).unwrap();
    assert_eq!(a, b);
    let mut prev = 0.0;
    let mut state = a.initial();
    for e in a.events() {
        assert!(e.time > prev && e.time <= a.horizon());
        assert_eq!(e.state_before.n(), state.n());
        let expect_after = match e.kind {
            Direction::Up => hazardq::model::jump_up(e.state_before, model.capacity()).unwrap(),
            Direction::Down => hazardq::model::jump_down(e.state_before).unwrap(),
        };
        assert_eq!(e.state_after, expect_after);
        prev = e.time;
        state = e.state_after;
    }
}
