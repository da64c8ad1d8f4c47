//! Stability conditions, Lyapunov drift, moment bounds and total-variation
//! convergence estimates.

mod moments;
mod oracles;
mod tv;

pub use moments::{
    moment_bound_check, moment_bound_checks, moment_bound_rhs, poisson_raw_moment, MomentBound,
};
pub use oracles::{mm1, pollaczek_khinchine, Mm1Oracle, PkOracle};
pub use tv::{
    convergence_curve, fit_rate, is_decreasing_within, tv_estimate, Binning, CurvePoint,
    EmpiricalLaw, RateFit, BOOTSTRAP_RESAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Direction, IntensityKind, ModelSpec, State};

/// Hazard lower-bound constant `c0`, arrival supremum Λ, rate exponent `k`
/// and Lyapunov exponent `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErgodicityParams {
    pub c0: f64,
    pub big_lambda: f64,
    pub k: f64,
    pub m: f64,
}

impl ErgodicityParams {
    /// `c0 > 4 (1 + 2 Λ)`
    pub fn condi_holds(&self) -> bool {
        self.c0 > condi_threshold(self.big_lambda)
    }

    /// `c0 > 2^{k+1} (1 + Λ 2^k)`
    pub fn condi2_holds(&self, k: f64) -> bool {
        self.c0 > condi2_threshold(k, self.big_lambda)
    }

    /// Default Lyapunov exponent: the smallest integer strictly above `k + 1`.
    pub fn default_m(k: f64) -> f64 {
        (k + 1.0).floor() + 1.0
    }
}

pub fn condi_threshold(big_lambda: f64) -> f64 {
    4.0 * (1.0 + 2.0 * big_lambda)
}

pub fn condi2_threshold(k: f64, big_lambda: f64) -> f64 {
    2f64.powf(k + 1.0) * (1.0 + big_lambda * 2f64.powf(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub condi: bool,
    pub condi2: bool,
}

pub fn check_conditions(params: &ErgodicityParams) -> Conditions {
    Conditions {
        condi: params.condi_holds(),
        condi2: params.condi2_holds(params.k),
    }
}

/// Bisection tolerance for [`max_k`].
pub const MAX_K_TOLERANCE: f64 = 1e-9;

/// The supremum `k* > 1` of exponents satisfying `c0 > 2^{k+1}(1 + Λ 2^k)`.
pub fn max_k(c0: f64, big_lambda: f64) -> Result<f64> {
    if !(c0 > condi_threshold(big_lambda)) || !c0.is_finite() || !(big_lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "no admissible k: c0 = {c0} does not exceed 4(1 + 2Λ) = {}",
            condi_threshold(big_lambda)
        )));
    }
    let g = |k: f64| condi2_threshold(k, big_lambda) - c0;
    let mut lo = 1.0;
    let mut hi = 2.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    while hi - lo > MAX_K_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Whether `h(n, x) >= c0 / (1 + x)` for all `n > 0`. Exact for the
/// `pk_hazard` kind; otherwise checked at the given probes (`n >= 1`).
pub fn check_lower_bound(model: &ModelSpec, c0: f64, probes: &[State]) -> Result<bool> {
    if c0 <= 0.0 {
        return Ok(true);
    }
    if let IntensityKind::PkHazard { c0: field_c0 } = model.h_field().kind() {
        return Ok(*field_c0 >= c0);
    }
    for &s in probes {
        if s.n() == 0 {
            return Err(Error::InvalidArgument(
                "lower-bound probes need n >= 1".into(),
            ));
        }
        if model.evaluate_intensity(Direction::Down, s)? < c0 / (1.0 + s.x()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Closed-form `G L_m(n, x)` for `L_m = (n + 1 + x)^m`:
/// `m (n+1+x)^{m-1} + λ [(n+2+x)^m - (n+1+x)^m] + h [n^m - (n+1+x)^m]`,
/// with the drift term dropped at the empty state.
pub fn lyapunov_drift(m: f64, model: &ModelSpec, s: State) -> Result<f64> {
    let (n, x) = (s.n() as f64, s.x());
    let base = (n + 1.0 + x).powf(m);
    let drift = if s.is_empty() || m == 0.0 {
        0.0
    } else {
        m * (n + 1.0 + x).powf(m - 1.0)
    };
    let lam = model.evaluate_intensity(Direction::Up, s)?;
    let up = if lam > 0.0 {
        lam * ((n + 2.0 + x).powf(m) - base)
    } else {
        0.0
    };
    let down = if s.is_empty() {
        0.0
    } else {
        model.evaluate_intensity(Direction::Down, s)? * (n.powf(m) - base)
    };
    Ok(drift + up + down)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IntensitySpec;

    fn params(c0: f64, big_lambda: f64) -> ErgodicityParams {
        ErgodicityParams {
            c0,
            big_lambda,
            k: 1.0,
            m: 3.0,
        }
    }

    fn heavy_tail() -> ModelSpec {
        ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::pk_hazard(9.0),
            0.5,
            None,
        )
        .unwrap()
    }

    #[test]
    fn condition_examples() {
        assert_eq!(condi_threshold(0.5), 8.0);
        assert!(params(9.0, 0.5).condi_holds());
        assert!(!params(8.0, 0.5).condi_holds());
        assert_eq!(condi2_threshold(1.0, 0.5), 8.0);
        assert_eq!(
            check_conditions(&params(9.0, 0.5)),
            Conditions {
                condi: true,
                condi2: true
            }
        );
    }

    /// 2Λ y² + 2y - c0 = 0 with y = 2^k.
    fn max_k_closed_form(c0: f64, big_lambda: f64) -> f64 {
        let y = if big_lambda == 0.0 {
            c0 / 2.0
        } else {
            (-2.0 + (4.0 + 8.0 * big_lambda * c0).sqrt()) / (4.0 * big_lambda)
        };
        y.log2()
    }

    #[test]
    fn max_k_matches_quadratic_root() {
        for (c0, lam) in [(9.0, 0.5), (20.0, 0.0), (100.0, 2.0), (8.0001, 0.5)] {
            let k = max_k(c0, lam).unwrap();
            assert!(
                (k - max_k_closed_form(c0, lam)).abs() < 2e-9,
                "c0={c0} Λ={lam}: {k}"
            );
        }
        let k = max_k(9.0, 0.5).unwrap();
        assert!(k > 1.10 && k < 1.15, "{k}");
        assert!(max_k(8.0, 0.5).is_err());
        assert!(max_k(8.0 + 1e-6, 0.5).unwrap() - 1.0 < 1e-6);
        assert!(max_k(1e6, 0.5).unwrap() > max_k(1e3, 0.5).unwrap());
    }

    #[test]
    fn lower_bound_examples() {
        let probes: Vec<State> = (1..5)
            .flat_map(|n| [0.0, 0.5, 3.0].map(|x| State::new(n, x).unwrap()))
            .collect();
        assert!(check_lower_bound(&heavy_tail(), 9.0, &probes).unwrap());
        let constant = ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.5,
            None,
        )
        .unwrap();
        assert!(!check_lower_bound(&constant, 9.0, &probes).unwrap());
        assert!(check_lower_bound(&constant, 0.0, &probes).unwrap());
        // Constant hazard 1.0 satisfies c0 = 1 everywhere.
        assert!(check_lower_bound(&constant, 1.0, &probes).unwrap());
    }

    #[test]
    fn drift_examples() {
        let mm1 = ModelSpec::new(
            IntensitySpec::constant(0.5),
            IntensitySpec::constant(1.0),
            0.5,
            None,
        )
        .unwrap();
        let s = State::new(1, 1.0).unwrap();
        assert!((lyapunov_drift(2.0, &mm1, s).unwrap() - 1.5).abs() < 1e-12);
        assert!((lyapunov_drift(2.0, &heavy_tail(), s).unwrap() + 26.5).abs() < 1e-12);
        for s in [State::EMPTY, s, State::new(7, 0.3).unwrap()] {
            assert_eq!(lyapunov_drift(0.0, &mm1, s).unwrap(), 0.0);
        }
    }

    #[test]
    fn default_m_is_smallest_integer_above_k_plus_one() {
        assert_eq!(ErgodicityParams::default_m(1.1), 3.0);
        assert_eq!(ErgodicityParams::default_m(1.0), 3.0);
        assert_eq!(ErgodicityParams::default_m(1.5), 3.0);
    }
}
