//! Extended generator, pathwise generator integrals and Monte-Carlo checks of
//! Dynkin's identity and of the compensated-process martingale property.
//!
//! The generator acting on a test function is
//!
//! ```text
//! Gf(n, x) = ∂f/∂x(n, x) + λ(n, x) (f(n + 1, x) - f(n, x)) + h(n, x) (f((n - 1) ∨ 0, 0) - f(n, x))
//! ```
//!
//! with the drift term dropped at the empty state, where the flow is frozen.
//! For time-dependent functions `∂φ/∂t` is added.

mod functions;
mod lemma1;

pub use functions::{Functional, SpaceTimeFunction, TestFunction, TimeTestFunction};
pub use lemma1::{
    order_fit, small_delta_probabilities, JumpClassCounts, OrderFit, SmallDeltaEstimate,
};

use serde::{Deserialize, Serialize};

use crate::ensemble::{par_replicas, MCEstimate};
use crate::error::{Error, Result};
use crate::model::{Direction, ModelSpec, State};
use crate::quadrature;
use crate::sampler::{simulate_path_with, Path, Sampler};

/// Residual means at or below this are treated as quadrature round-off.
pub const QUADRATURE_TOLERANCE: f64 = 1e-8;

/// Band, in standard errors, inside which a mean-zero check passes.
pub const PASS_STDERRS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    /// PASS iff `|mean| <= 3 stderr` (or the mean is below quadrature round-off).
    pub fn mean_zero(est: &MCEstimate) -> Self {
        let m = est.mean.abs();
        if m <= PASS_STDERRS * est.stderr || m <= QUADRATURE_TOLERANCE {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        }
    }
}

#[inline]
fn generator_at<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    t: f64,
    s: State,
) -> Result<f64> {
    let (n, x) = (s.n(), s.x());
    let here = f.value(t, n, x);
    let drift = if n == 0 { 0.0 } else { f.dx(t, n, x) };
    let lam = model.evaluate_intensity(Direction::Up, s)?;
    let up = if lam > 0.0 {
        lam * (f.value(t, n + 1, x) - here)
    } else {
        0.0
    };
    let down = if n > 0 {
        let h = model.evaluate_intensity(Direction::Down, s)?;
        h * (f.value(t, n - 1, 0.0) - here)
    } else {
        0.0
    };
    Ok(drift + up + down)
}

/// `Gf(s)` for a time-independent test function.
pub fn generator_apply(f: &TestFunction, model: &ModelSpec, s: State) -> Result<f64> {
    generator_at(f, model, 0.0, s)
}

/// `∂φ/∂t(t, s) + Gφ(t, ·)(s)`.
pub fn generator_apply_time(
    phi: &TimeTestFunction,
    model: &ModelSpec,
    t: f64,
    s: State,
) -> Result<f64> {
    Ok(phi.eval_dt(t, s) + generator_at(phi, model, t, s)?)
}

/// The integrand of Dynkin's identity for any catalog function.
pub fn space_time_generator<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    t: f64,
    s: State,
) -> Result<f64> {
    Ok(f.dt(t, s.n(), s.x()) + generator_at(f, model, t, s)?)
}

/// Sorted union of both fields' breakpoints.
pub fn model_breakpoints(model: &ModelSpec) -> Vec<f64> {
    let mut all: Vec<f64> = model
        .lambda_field()
        .breakpoints()
        .iter()
        .chain(model.h_field().breakpoints())
        .copied()
        .collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// `∫_0^t (∂_s + G) f(s, X_s) ds` along a path.
pub fn pathwise_integral<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    path: &Path,
    t: f64,
) -> Result<f64> {
    pathwise_integral_between(f, model, path, 0.0, t)
}

/// `∫_a^b (∂_s + G) f(s, X_s) ds` along a path, segment by segment.
pub fn pathwise_integral_between<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    path: &Path,
    a: f64,
    b: f64,
) -> Result<f64> {
    if !(0.0..=path.horizon()).contains(&b) || !(0.0..=b).contains(&a) {
        return Err(Error::OutOfWindow {
            t: b,
            horizon: path.horizon(),
        });
    }
    let breakpoints = model_breakpoints(model);
    let mut total = 0.0;
    for (start, s, len) in path.segments(b) {
        let lo = start.max(a);
        let hi = start + len;
        if hi <= lo {
            continue;
        }
        let s = crate::model::flow_unchecked(s, lo - start);
        total += segment_integral(f, model, lo, s, hi - lo, &breakpoints)?;
    }
    Ok(total)
}

/// Integral over one jump-free piece starting at time `start` in state `s`.
fn segment_integral<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    start: f64,
    s: State,
    len: f64,
    breakpoints: &[f64],
) -> Result<f64> {
    let mut failure = None;
    let value = if s.is_empty() {
        if !f.is_time_dependent() {
            return Ok(space_time_generator(f, model, start, s)? * len);
        }
        quadrature::integrate(
            |u| capture(space_time_generator(f, model, u, s), &mut failure),
            start,
            start + len,
            &[],
        )
    } else {
        let x0 = s.x();
        quadrature::integrate(
            |x| {
                let y = crate::model::flow_unchecked(s, x - x0);
                capture(
                    space_time_generator(f, model, start + (x - x0), y),
                    &mut failure,
                )
            },
            x0,
            x0 + len,
            breakpoints,
        )
    };
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

#[inline]
fn capture(r: Result<f64>, slot: &mut Option<Error>) -> f64 {
    match r {
        Ok(v) => v,
        Err(e) => {
            slot.get_or_insert(e);
            0.0
        }
    }
}

/// `f(t, X_t) - f(0, X_0) - ∫_0^t (∂_s + G) f(s, X_s) ds` on one path.
pub fn pathwise_residual<F: SpaceTimeFunction + ?Sized>(
    f: &F,
    model: &ModelSpec,
    path: &Path,
    t: f64,
) -> Result<f64> {
    let end = path.state_at(t)?;
    let start = path.initial();
    Ok(f.value(t, end.n(), end.x())
        - f.value(0.0, start.n(), start.x())
        - pathwise_integral(f, model, path, t)?)
}

/// Dynkin residual estimates for several functions on the same ensemble of paths.
pub fn dynkin_residuals<F: SpaceTimeFunction + Sync>(
    fs: &[F],
    model: &ModelSpec,
    initial: State,
    t: f64,
    replicas: u64,
    master_seed: u64,
    sampler: Sampler,
) -> Result<Vec<MCEstimate>> {
    let rows = par_replicas(replicas, master_seed, |_, rng| {
        let path = simulate_path_with(model, initial, t, sampler, rng)?;
        fs.iter()
            .map(|f| pathwise_residual(f, model, &path, t))
            .collect::<Result<Vec<f64>>>()
    })?;
    Ok(transpose_estimates(&rows, fs.len(), master_seed))
}

fn transpose_estimates(rows: &[Vec<f64>], width: usize, master_seed: u64) -> Vec<MCEstimate> {
    (0..width)
        .map(|j| {
            let column: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            MCEstimate::from_values(&column, master_seed)
        })
        .collect()
}

/// Monte-Carlo mean of `f(X_t) - f(X_0) - ∫_0^t Gf(X_s) ds`; zero under Dynkin's identity.
pub fn dynkin_residual(
    f: &TestFunction,
    model: &ModelSpec,
    initial: State,
    t: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<MCEstimate> {
    Ok(dynkin_residuals(
        std::slice::from_ref(f),
        model,
        initial,
        t,
        replicas,
        master_seed,
        Sampler::Race,
    )?[0])
}

/// Time-dependent form: `φ(t, X_t) - φ(0, X_0) - ∫_0^t (∂_s + G)φ(s, X_s) ds`.
pub fn dynkin_residual_time(
    phi: &TimeTestFunction,
    model: &ModelSpec,
    initial: State,
    t: f64,
    replicas: u64,
    master_seed: u64,
) -> Result<MCEstimate> {
    Ok(dynkin_residuals(
        std::slice::from_ref(phi),
        model,
        initial,
        t,
        replicas,
        master_seed,
        Sampler::Race,
    )?[0])
}

/// Estimates `E[(M_t - M_s) g(X_s)]` for each probe `g`, where `M` is the
/// compensated process of `f`. Each is zero when `M` is a martingale.
#[allow(clippy::too_many_arguments)]
pub fn martingale_check<F: SpaceTimeFunction + Sync>(
    f: &F,
    model: &ModelSpec,
    initial: State,
    s: f64,
    t: f64,
    probes: &[TestFunction],
    replicas: u64,
    master_seed: u64,
) -> Result<Vec<MCEstimate>> {
    if !(0.0 <= s && s < t) {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= s < t, got s={s}, t={t}"
        )));
    }
    let rows = par_replicas(replicas, master_seed, |_, rng| {
        let path = simulate_path_with(model, initial, t, Sampler::Race, rng)?;
        let xs = path.state_at(s)?;
        let xt = path.state_at(t)?;
        let increment = f.value(t, xt.n(), xt.x())
            - f.value(s, xs.n(), xs.x())
            - pathwise_integral_between(f, model, &path, s, t)?;
        Ok(probes
            .iter()
            .map(|g| increment * g.eval(xs))
            .collect::<Vec<f64>>())
    })?;
    Ok(transpose_estimates(&rows, probes.len(), master_seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IntensitySpec;
    use crate::sampler::{simulate_path, ReplicaSeed};

    fn st(n: u64, x: f64) -> State {
        State::new(n, x).unwrap()
    }

    fn mm1() -> ModelSpec {
        ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.5,
            None,
        )
        .unwrap()
    }

    fn zero() -> ModelSpec {
        ModelSpec::new(IntensitySpec::zero(), IntensitySpec::zero(), 0.0, None).unwrap()
    }

    #[test]
    fn generator_kills_constants() {
        let m = mm1();
        let c = TestFunction::Constant { c: 3.0 };
        for s in [State::EMPTY, st(1, 0.0), st(4, 2.5)] {
            assert_eq!(generator_apply(&c, &m, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn generator_at_empty_state() {
        let m = ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.7,
            None,
        )
        .unwrap();
        let f = TestFunction::BoundedSmooth1;
        let expected = 0.7 * (f.eval(st(1, 0.0)) - f.eval(State::EMPTY));
        assert_eq!(generator_apply(&f, &m, State::EMPTY).unwrap(), expected);
    }

    #[test]
    fn generator_of_l2_by_hand() {
        // 2(n+1+x) + λ[(n+2+x)^2 - (n+1+x)^2] + h[n^2 - (n+1+x)^2] at (1,1)
        let v = generator_apply(&TestFunction::Lyapunov { m: 2.0 }, &mm1(), st(1, 1.0)).unwrap();
        assert!((v - 1.5).abs() < 1e-12, "{v}");
    }

    #[test]
    fn generator_at_capacity_has_no_up_term() {
        let m = ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.5,
            Some(2),
        )
        .unwrap();
        let f = TestFunction::Lyapunov { m: 2.0 };
        let s = st(2, 1.0);
        let expected = 2.0 * 4.0 + 1.0 * (4.0 - 16.0);
        assert!((generator_apply(&f, &m, s).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn time_generator_examples() {
        let m = mm1();
        let phi = TimeTestFunction::Discounted(TestFunction::Constant { c: 2.0 });
        let v = generator_apply_time(&phi, &m, 0.7, st(3, 0.2)).unwrap();
        assert!((v + 2.0 * (-0.7f64).exp()).abs() < 1e-15);

        let l = TimeTestFunction::LyapunovKt { k: 1.1, m: 3.0 };
        let s = st(2, 0.5);
        let t: f64 = 1.3;
        let dt = 1.1 * (1.0 + t).powf(0.1) * (3.5f64).powf(3.0);
        let g = (1.0 + t).powf(1.1)
            * generator_apply(&TestFunction::Lyapunov { m: 3.0 }, &m, s).unwrap();
        let v = generator_apply_time(&l, &m, t, s).unwrap();
        assert!((v - (dt + g)).abs() < 1e-9 * v.abs().max(1.0));
    }

    #[test]
    fn jump_free_path_integral_closed_form() {
        let p = simulate_path(
            &zero(),
            st(1, 0.0),
            1.0,
            Sampler::Race,
            ReplicaSeed {
                master_seed: 0,
                replica: 0,
            },
        )
        .unwrap();
        let f = TestFunction::BoundedSmooth1;
        let integral = pathwise_integral(&f, &zero(), &p, 1.0).unwrap();
        assert!((integral - (1.0 / 3.0 - 0.5)).abs() < 1e-12, "{integral}");
        assert!(pathwise_residual(&f, &zero(), &p, 1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn constant_segment_matches_analytic_formula() {
        // On a single segment from (2, 0) of length L with constant rates:
        // ∫ Gf = f(2, L) - f(2, 0) + λ ∫ (f(3, u) - f(2, u)) du + h ∫ (f(1, 0) - f(2, u)) du
        // with f = 1/(1 + n + x): ∫_0^L 1/(a + u) du = ln((a + L)/a).
        let m = mm1();
        let f = TestFunction::BoundedSmooth1;
        let len = 0.8;
        let bp = model_breakpoints(&m);
        let got = segment_integral(&f, &m, 0.0, st(2, 0.0), len, &bp).unwrap();
        let ln = |a: f64| ((a + len) / a).ln();
        let drift = 1.0 / (3.0 + len) - 1.0 / 3.0;
        let up = 0.5 * (ln(4.0) - ln(3.0));
        let down = 1.0 * (len / 2.0 - ln(3.0));
        let expected = drift + up + down;
        assert!((got - expected).abs() < 1e-8, "{got} vs {expected}");
    }

    #[test]
    fn constant_function_has_zero_integral_on_any_path() {
        let m = mm1();
        let p = simulate_path(
            &m,
            State::EMPTY,
            30.0,
            Sampler::Race,
            ReplicaSeed {
                master_seed: 2,
                replica: 1,
            },
        )
        .unwrap();
        assert_eq!(
            pathwise_integral(&TestFunction::Constant { c: 4.0 }, &m, &p, 30.0).unwrap(),
            0.0
        );
    }

    #[test]
    fn discounted_constant_residual_is_zero_per_path() {
        let m = mm1();
        let phi = TimeTestFunction::Discounted(TestFunction::Constant { c: 2.0 });
        let p = simulate_path(
            &m,
            st(1, 0.0),
            5.0,
            Sampler::Race,
            ReplicaSeed {
                master_seed: 3,
                replica: 0,
            },
        )
        .unwrap();
        assert!(pathwise_residual(&phi, &m, &p, 5.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zero_intensities_give_exact_zero_residual() {
        let est = dynkin_residual(
            &TestFunction::BoundedSmooth2,
            &zero(),
            st(2, 0.5),
            3.0,
            1000,
            1,
        )
        .unwrap();
        assert!(est.mean.abs() < 1e-12);
        assert!(Verdict::mean_zero(&est).is_pass());
    }

    #[test]
    fn zero_probe_gives_exact_zero() {
        let est = martingale_check(
            &TestFunction::Lyapunov { m: 2.0 },
            &mm1(),
            st(1, 0.0),
            1.0,
            3.0,
            &[TestFunction::Constant { c: 0.0 }],
            200,
            4,
        )
        .unwrap();
        assert_eq!(est[0].mean, 0.0);
        assert_eq!(est[0].stderr, 0.0);
    }

    #[test]
    fn martingale_from_time_zero_is_weighted_dynkin() {
        let m = mm1();
        let f = TestFunction::BoundedSmooth1;
        let start = st(1, 0.0);
        let mg = martingale_check(
            &f,
            &m,
            start,
            0.0,
            2.0,
            &[TestFunction::Constant { c: 2.0 }],
            500,
            8,
        )
        .unwrap();
        let dk = dynkin_residual(&f, &m, start, 2.0, 500, 8).unwrap();
        assert!((mg[0].mean - 2.0 * dk.mean).abs() < 1e-12);
        assert_eq!(Verdict::mean_zero(&mg[0]), Verdict::mean_zero(&dk));
    }
}
