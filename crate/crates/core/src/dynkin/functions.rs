//! Catalog of test functions with exact derivatives.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::model::State;

/// A function of `(t, n, x)` with exact partial derivatives in `x` and `t`.
pub trait SpaceTimeFunction {
    fn value(&self, t: f64, n: u64, x: f64) -> f64;
    fn dx(&self, t: f64, n: u64, x: f64) -> f64;
    fn dt(&self, t: f64, n: u64, x: f64) -> f64;
    fn is_time_dependent(&self) -> bool;
}

/// Time-independent test functions `f(n, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TestFunction {
    /// `1 / (1 + n + x)`
    BoundedSmooth1,
    /// `sin(n) + exp(-x)`
    BoundedSmooth2,
    /// `L_m = (n + 1 + x)^m`
    Lyapunov {
        m: f64,
    },
    Constant {
        c: f64,
    },
}

impl TestFunction {
    #[inline]
    pub fn value_at(&self, n: u64, x: f64) -> f64 {
        let nf = n as f64;
        match *self {
            TestFunction::BoundedSmooth1 => 1.0 / (1.0 + nf + x),
            TestFunction::BoundedSmooth2 => nf.sin() + (-x).exp(),
            TestFunction::Lyapunov { m } => (nf + 1.0 + x).powf(m),
            TestFunction::Constant { c } => c,
        }
    }

    #[inline]
    pub fn dx_at(&self, n: u64, x: f64) -> f64 {
        let nf = n as f64;
        match *self {
            TestFunction::BoundedSmooth1 => {
                let d = 1.0 + nf + x;
                -1.0 / (d * d)
            }
            TestFunction::BoundedSmooth2 => -(-x).exp(),
            TestFunction::Lyapunov { m } => {
                if m == 0.0 {
                    0.0
                } else {
                    m * (nf + 1.0 + x).powf(m - 1.0)
                }
            }
            TestFunction::Constant { .. } => 0.0,
        }
    }

    pub fn eval(&self, s: State) -> f64 {
        self.value_at(s.n(), s.x())
    }

    pub fn eval_dx(&self, s: State) -> f64 {
        self.dx_at(s.n(), s.x())
    }
}

impl SpaceTimeFunction for TestFunction {
    #[inline]
    fn value(&self, _t: f64, n: u64, x: f64) -> f64 {
        self.value_at(n, x)
    }

    #[inline]
    fn dx(&self, _t: f64, n: u64, x: f64) -> f64 {
        self.dx_at(n, x)
    }

    #[inline]
    fn dt(&self, _t: f64, _n: u64, _x: f64) -> f64 {
        0.0
    }

    fn is_time_dependent(&self) -> bool {
        false
    }
}

/// Time-dependent test functions `φ(t, n, x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TimeTestFunction {
    /// `exp(-t) f(n, x)`
    Discounted(TestFunction),
    /// `L_{k,m} = (1 + t)^k (n + 1 + x)^m`
    LyapunovKt { k: f64, m: f64 },
}

impl TimeTestFunction {
    pub fn eval(&self, t: f64, s: State) -> f64 {
        self.value(t, s.n(), s.x())
    }

    pub fn eval_dx(&self, t: f64, s: State) -> f64 {
        self.dx(t, s.n(), s.x())
    }

    pub fn eval_dt(&self, t: f64, s: State) -> f64 {
        self.dt(t, s.n(), s.x())
    }
}

impl SpaceTimeFunction for TimeTestFunction {
    #[inline]
    fn value(&self, t: f64, n: u64, x: f64) -> f64 {
        match *self {
            TimeTestFunction::Discounted(f) => (-t).exp() * f.value_at(n, x),
            TimeTestFunction::LyapunovKt { k, m } => {
                (1.0 + t).powf(k) * (n as f64 + 1.0 + x).powf(m)
            }
        }
    }

    #[inline]
    fn dx(&self, t: f64, n: u64, x: f64) -> f64 {
        match *self {
            TimeTestFunction::Discounted(f) => (-t).exp() * f.dx_at(n, x),
            TimeTestFunction::LyapunovKt { k, m } => {
                (1.0 + t).powf(k) * TestFunction::Lyapunov { m }.dx_at(n, x)
            }
        }
    }

    #[inline]
    fn dt(&self, t: f64, n: u64, x: f64) -> f64 {
        match *self {
            TimeTestFunction::Discounted(f) => -(-t).exp() * f.value_at(n, x),
            TimeTestFunction::LyapunovKt { k, m } => {
                k * (1.0 + t).powf(k - 1.0) * (n as f64 + 1.0 + x).powf(m)
            }
        }
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

/// Either kind of test function, as named in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Functional {
    Static(TestFunction),
    Timed(TimeTestFunction),
}

impl SpaceTimeFunction for Functional {
    #[inline]
    fn value(&self, t: f64, n: u64, x: f64) -> f64 {
        match self {
            Functional::Static(f) => f.value(t, n, x),
            Functional::Timed(f) => f.value(t, n, x),
        }
    }

    #[inline]
    fn dx(&self, t: f64, n: u64, x: f64) -> f64 {
        match self {
            Functional::Static(f) => f.dx(t, n, x),
            Functional::Timed(f) => f.dx(t, n, x),
        }
    }

    #[inline]
    fn dt(&self, t: f64, n: u64, x: f64) -> f64 {
        match self {
            Functional::Static(f) => f.dt(t, n, x),
            Functional::Timed(f) => f.dt(t, n, x),
        }
    }

    fn is_time_dependent(&self) -> bool {
        matches!(self, Functional::Timed(_))
    }
}

impl From<TestFunction> for Functional {
    fn from(f: TestFunction) -> Self {
        Functional::Static(f)
    }
}

impl From<TimeTestFunction> for Functional {
    fn from(f: TimeTestFunction) -> Self {
        Functional::Timed(f)
    }
}

// Identifiers: `bounded_smooth_1`, `bounded_smooth_2`, `lyapunov(m)`,
// `constant(c)`, `discounted(<id>)`, `lyapunov_kt(k,m)`.

fn split_call(s: &str) -> Option<(&str, &str)> {
    let open = s.find('(')?;
    let inner = s[open + 1..].strip_suffix(')')?;
    Some((s[..open].trim(), inner.trim()))
}

fn parse_real(s: &str, id: &str) -> Result<f64, Error> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidArgument(format!("bad number '{s}' in test function '{id}'")))
}

fn unknown(id: &str) -> Error {
    Error::InvalidArgument(format!("unknown test function '{id}'"))
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let id = s.trim();
        match id {
            "bounded_smooth_1" => return Ok(TestFunction::BoundedSmooth1),
            "bounded_smooth_2" => return Ok(TestFunction::BoundedSmooth2),
            _ => {}
        }
        match split_call(id) {
            Some(("lyapunov", arg)) => Ok(TestFunction::Lyapunov {
                m: parse_real(arg, id)?,
            }),
            Some(("constant", arg)) => Ok(TestFunction::Constant {
                c: parse_real(arg, id)?,
            }),
            _ => Err(unknown(id)),
        }
    }
}

impl FromStr for TimeTestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let id = s.trim();
        match split_call(id) {
            Some(("discounted", arg)) => Ok(TimeTestFunction::Discounted(arg.parse()?)),
            Some(("lyapunov_kt", args)) => {
                let (k, m) = args.split_once(',').ok_or_else(|| unknown(id))?;
                Ok(TimeTestFunction::LyapunovKt {
                    k: parse_real(k, id)?,
                    m: parse_real(m, id)?,
                })
            }
            _ => Err(unknown(id)),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.parse::<TestFunction>() {
            Ok(f) => Ok(Functional::Static(f)),
            Err(_) => s.parse::<TimeTestFunction>().map(Functional::Timed),
        }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TestFunction::BoundedSmooth1 => f.write_str("bounded_smooth_1"),
            TestFunction::BoundedSmooth2 => f.write_str("bounded_smooth_2"),
            TestFunction::Lyapunov { m } => write!(f, "lyapunov({m})"),
            TestFunction::Constant { c } => write!(f, "constant({c})"),
        }
    }
}

impl fmt::Display for TimeTestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeTestFunction::Discounted(inner) => write!(f, "discounted({inner})"),
            TimeTestFunction::LyapunovKt { k, m } => write!(f, "lyapunov_kt({k},{m})"),
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Static(g) => g.fmt(f),
            Functional::Timed(g) => g.fmt(f),
        }
    }
}

macro_rules! string_conversions {
    ($ty:ty) => {
        impl TryFrom<String> for $ty {
            type Error = Error;

            fn try_from(s: String) -> Result<Self, Error> {
                s.parse()
            }
        }

        impl From<$ty> for String {
            fn from(f: $ty) -> String {
                f.to_string()
            }
        }
    };
}

string_conversions!(TestFunction);
string_conversions!(TimeTestFunction);
string_conversions!(Functional);
