//! Property tests over random intensity fields, states and parameters.

use hazardq::dynkin::{generator_apply, space_time_generator, SpaceTimeFunction, TestFunction};
use hazardq::ergodicity::{
    check_conditions, lyapunov_drift, poisson_raw_moment, tv_estimate, Binning, EmpiricalLaw,
    ErgodicityParams,
};
use hazardq::model::{flow, jump_down, jump_up, state_distance, IntensityKind};
use hazardq::{Direction, IntensitySpec, ModelSpec, State};
use proptest::prelude::*;

fn level() -> impl Strategy<Value = f64> {
    0.0..5.0f64
}

fn arb_spec() -> impl Strategy<Value = IntensitySpec> {
    let constant = level().prop_map(IntensitySpec::constant);
    let step = (
        prop::collection::vec(0.05..10.0f64, 1..4),
        prop::collection::vec(level(), 4),
    )
        .prop_map(|(gaps, levels)| {
            let breakpoints: Vec<f64> = gaps
                .iter()
                .scan(0.0, |acc, g| {
                    *acc += g;
                    Some(*acc)
                })
                .collect();
            let values = levels[..=breakpoints.len()].to_vec();
            let sup = values.iter().copied().fold(0.0, f64::max);
            IntensitySpec::new(IntensityKind::Step { values }, sup, breakpoints).unwrap()
        });
    let table = (
        0.5..20.0f64,
        1..5usize,
        1..4usize,
        prop::collection::vec(level(), 20),
    )
        .prop_map(|(x_max, cols, rows, pool)| {
            let values: Vec<Vec<f64>> = (0..rows)
                .map(|r| pool[r * cols..(r + 1) * cols].to_vec())
                .collect();
            let width = x_max / cols as f64;
            let breakpoints = (1..cols).map(|j| width * j as f64).collect();
            let sup = pool.iter().copied().fold(0.0, f64::max);
            IntensitySpec::new(IntensityKind::Table { x_max, values }, sup, breakpoints).unwrap()
        });
    let pk = (0.0..20.0f64).prop_map(IntensitySpec::pk_hazard);
    let erlang = (0.2..5.0f64).prop_map(IntensitySpec::erlang2_hazard);
    prop_oneof![
        constant,
        step,
        table,
        pk,
        erlang,
        Just(IntensitySpec::zero())
    ]
}

fn arb_model() -> impl Strategy<Value = ModelSpec> {
    (arb_spec(), arb_spec(), level(), prop::option::of(1..6u64))
        .prop_map(|(l, h, lambda0, cap)| ModelSpec::new(l, h, lambda0, cap).unwrap())
}

fn arb_state() -> impl Strategy<Value = State> {
    (0..20u64, 0.0..30.0f64).prop_map(|(n, x)| State::new(n, if n == 0 { 0.0 } else { x }).unwrap())
}

fn busy_state() -> impl Strategy<Value = State> {
    (1..20u64, 0.0..30.0f64).prop_map(|(n, x)| State::new(n, x).unwrap())
}

/// `Σ_k k^m P(ξ = k)` summed term by term.
fn poisson_moment_series(a: f64, m: u32) -> f64 {
    let mut p = (-a).exp();
    let mut total = 0.0;
    for k in 0..400u32 {
        if k > 0 {
            p *= a / k as f64;
        }
        total += (k as f64).powi(m as i32) * p;
    }
    total
}

/// `α f + β g` as a single function.
struct Combo {
    alpha: f64,
    f: TestFunction,
    beta: f64,
    g: TestFunction,
}

impl SpaceTimeFunction for Combo {
    fn value(&self, t: f64, n: u64, x: f64) -> f64 {
        self.alpha * self.f.value(t, n, x) + self.beta * self.g.value(t, n, x)
    }
    fn dx(&self, t: f64, n: u64, x: f64) -> f64 {
        self.alpha * self.f.dx(t, n, x) + self.beta * self.g.dx(t, n, x)
    }
    fn dt(&self, _: f64, _: u64, _: f64) -> f64 {
        0.0
    }
    fn is_time_dependent(&self) -> bool {
        false
    }
}

/// Size of the terms summed inside `Gf(s)`; round-off is relative to this.
fn magnitude(f: &TestFunction, model: &ModelSpec, s: State) -> f64 {
    let (n, x) = (s.n(), s.x());
    let rates = model.evaluate_intensity(Direction::Up, s).unwrap()
        + model.evaluate_intensity(Direction::Down, s).unwrap();
    let down = if n > 0 {
        f.value_at(n - 1, 0.0).abs()
    } else {
        0.0
    };
    f.dx_at(n, x).abs() + rates * (f.value_at(n + 1, x).abs() + f.value_at(n, x).abs() + down)
}

fn arb_test_function() -> impl Strategy<Value = TestFunction> {
    prop_oneof![
        Just(TestFunction::BoundedSmooth1),
        Just(TestFunction::BoundedSmooth2),
        (0.5..4.0f64).prop_map(|m| TestFunction::Lyapunov { m }),
        (-3.0..3.0f64).prop_map(|c| TestFunction::Constant { c }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn intensities_stay_within_declared_sup(model in arb_model(), s in arb_state()) {
        for which in [Direction::Up, Direction::Down] {
            let v = model.evaluate_intensity(which, s).unwrap();
            let sup = if which == Direction::Up && s.is_empty() {
                model.lambda0()
            } else {
                model.field(which).declared_sup()
            };
            prop_assert!((0.0..=sup).contains(&v), "{which} at {s}: {v} not in [0, {sup}]");
        }
    }

    #[test]
    fn lyapunov_generator_matches_closed_form(model in arb_model(), s in busy_state(), m in 0.5..4.0f64) {
        let (n, x) = (s.n() as f64, s.x());
        let lam = model.evaluate_intensity(Direction::Up, s).unwrap();
        let h = model.evaluate_intensity(Direction::Down, s).unwrap();
        let base = (n + 1.0 + x).powf(m);
        let terms = [
            m * (n + 1.0 + x).powf(m - 1.0),
            lam * ((n + 2.0 + x).powf(m) - base),
            h * (n.powf(m) - base),
        ];
        let expected: f64 = terms.iter().sum();
        // Differences of large powers lose digits relative to the powers themselves.
        let scale = terms[0].abs() + (lam + h) * (n + 2.0 + x).powf(m) + 1.0;
        let got = generator_apply(&TestFunction::Lyapunov { m }, &model, s).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12 * scale, "{got} vs {expected}");
    }

    #[test]
    fn lyapunov_drift_matches_generator(model in arb_model(), s in arb_state(), m in 0.5..4.0f64) {
        let d = lyapunov_drift(m, &model, s).unwrap();
        let g = generator_apply(&TestFunction::Lyapunov { m }, &model, s).unwrap();
        prop_assert!((d - g).abs() <= 1e-12 * g.abs().max(1.0), "{d} vs {g}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn cumulative_hazard_is_additive(model in arb_model(), s in arb_state(), a in 0.0..5.0f64, b in 0.0..5.0f64) {
        for which in [Direction::Up, Direction::Down] {
            let whole = model.cumulative_hazard(which, s, a + b).unwrap();
            let first = model.cumulative_hazard(which, s, a).unwrap();
            let second = model.cumulative_hazard(which, flow(s, a).unwrap(), b).unwrap();
            prop_assert!(
                (whole - first - second).abs() <= 1e-9 * whole.abs() + 1e-15,
                "{which}: {whole} vs {first} + {second}"
            );
        }
    }

    #[test]
    fn quadrature_agrees_with_closed_form(
        value in 0.0..5.0f64,
        c0 in 0.0..20.0f64,
        s in busy_state(),
        delta in 0.0..50.0f64,
    ) {
        for h in [IntensitySpec::constant(value), IntensitySpec::pk_hazard(c0)] {
            let model = ModelSpec::new(IntensitySpec::constant(1.0), h, 1.0, None).unwrap();
            let closed = model.cumulative_hazard(Direction::Down, s, delta).unwrap();
            let quad = model.cumulative_hazard_quadrature(Direction::Down, s, delta).unwrap();
            prop_assert!((closed - quad).abs() <= 1e-8 * closed.abs() + 1e-15, "{closed} vs {quad}");
        }
    }

    #[test]
    fn departure_after_arrival_resets_age(s in arb_state()) {
        let back = jump_down(jump_up(s, None).unwrap()).unwrap();
        prop_assert_eq!(back, State::new(s.n(), 0.0).unwrap());
    }

    #[test]
    fn state_distance_is_a_metric(a in arb_state(), b in arb_state(), c in arb_state()) {
        prop_assert_eq!(state_distance(a, a), 0.0);
        prop_assert_eq!(state_distance(a, b), state_distance(b, a));
        prop_assert!(state_distance(a, b) >= 0.0);
        let ac = state_distance(a, c);
        prop_assert!(ac <= state_distance(a, b) + state_distance(b, c) + 1e-12 * ac.max(1.0));
    }

    #[test]
    fn generator_is_linear(
        model in arb_model(),
        s in arb_state(),
        f in arb_test_function(),
        g in arb_test_function(),
        alpha in -3.0..3.0f64,
        beta in -3.0..3.0f64,
    ) {
        let combo = Combo { alpha, f, beta, g };
        let lhs = space_time_generator(&combo, &model, 0.0, s).unwrap();
        let gf = generator_apply(&f, &model, s).unwrap();
        let gg = generator_apply(&g, &model, s).unwrap();
        let rhs = alpha * gf + beta * gg;
        let scale = 1.0 + alpha.abs() * magnitude(&f, &model, s) + beta.abs() * magnitude(&g, &model, s);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * scale, "{lhs} vs {rhs}");
    }

    #[test]
    fn poisson_moments_match_series(a in 0.0..10.0f64, m in 0..=10u32) {
        let closed = poisson_raw_moment(a, m).unwrap();
        let series = poisson_moment_series(a, m);
        prop_assert!((closed - series).abs() <= 1e-10 * series.abs().max(f64::MIN_POSITIVE), "{closed} vs {series}");
    }

    #[test]
    fn conditions_are_monotone(
        c0 in 0.0..40.0f64,
        dc in 0.0..10.0f64,
        big_lambda in 0.0..3.0f64,
        dl in 0.0..1.0f64,
        k in 1.0..3.0f64,
    ) {
        let p = |c0: f64, big_lambda: f64| check_conditions(&ErgodicityParams { c0, big_lambda, k, m: 3.0 });
        let base = p(c0, big_lambda);
        let more_c0 = p(c0 + dc, big_lambda);
        let more_lambda = p(c0, big_lambda + dl);
        prop_assert!(!base.condi || more_c0.condi);
        prop_assert!(!base.condi2 || more_c0.condi2);
        prop_assert!(base.condi || !more_lambda.condi);
        prop_assert!(base.condi2 || !more_lambda.condi2);
    }

    #[test]
    fn empirical_laws_and_tv(
        xs in prop::collection::vec(arb_state(), 1..200),
        ys in prop::collection::vec(arb_state(), 1..200),
        n_max in 1..30u64,
        x_max in 1.0..40.0f64,
        width in 0.1..5.0f64,
    ) {
        let binning = Binning { n_max, x_max, width };
        let a = EmpiricalLaw::from_states(binning, &xs).unwrap();
        let b = EmpiricalLaw::from_states(binning, &ys).unwrap();
        prop_assert!((a.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let ab = tv_estimate(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, tv_estimate(&b, &a).unwrap());
        prop_assert_eq!(tv_estimate(&a, &a).unwrap(), 0.0);
    }
}
