//! State space, jump maps and intensity fields.
//!
//! A state is the pair `(n, x)`: the number of customers in the system and the
//! elapsed service time of the customer at the server. Between jumps the state
//! flows at unit speed in `x` (frozen at the empty state `(0, 0)`); arrivals
//! map `(n, x)` to `(n + 1, x)`, departures map `(n, x)` to `(n - 1, 0)`.
//!
//! Intensity fields are described declaratively by [`IntensitySpec`] and
//! carry an explicit upper bound (`declared_sup`) that the thinning samplers
//! rely on, plus the list of `x` values where the field may jump.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::quadrature;

/// A point of the state space: `n` customers, elapsed service time `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(u64, f64)", into = "(u64, f64)")]
pub struct State {
    n: u64,
    x: f64,
}

impl State {
    /// The empty system.
    pub const EMPTY: State = State { n: 0, x: 0.0 };

    pub fn new(n: u64, x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidState {
                n,
                x,
                reason: "x must be finite and nonnegative",
            });
        }
        if n == 0 && x != 0.0 {
            return Err(Error::InvalidState {
                n,
                x,
                reason: "the empty system has x = 0",
            });
        }
        Ok(Self { n, x })
    }

    #[inline]
    pub fn n(&self) -> u64 {
        self.n
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.x
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

impl TryFrom<(u64, f64)> for State {
    type Error = Error;

    fn try_from((n, x): (u64, f64)) -> Result<Self> {
        State::new(n, x)
    }
}

impl From<State> for (u64, f64) {
    fn from(s: State) -> Self {
        (s.n, s.x)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.n, self.x)
    }
}

/// Which clock: arrivals (`Up`, intensity λ) or service completions (`Down`, hazard h).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Deterministic motion between jumps.
pub fn flow(s: State, dt: f64) -> Result<State> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::NegativeDuration(dt));
    }
    Ok(flow_unchecked(s, dt))
}

#[inline]
pub(crate) fn flow_unchecked(s: State, dt: f64) -> State {
    if s.n == 0 {
        s
    } else {
        State {
            n: s.n,
            x: s.x + dt,
        }
    }
}

/// Arrival: `(n, x) -> (n + 1, x)`. Rejected at or above `capacity`.
pub fn jump_up(s: State, capacity: Option<u64>) -> Result<State> {
    if capacity.is_some_and(|cap| s.n >= cap) {
        return Err(Error::InvalidTransition {
            direction: Direction::Up,
            state: s,
        });
    }
    Ok(State { n: s.n + 1, x: s.x })
}

/// Departure: `(n, x) -> (n - 1, 0)`. Rejected at the empty state.
pub fn jump_down(s: State) -> Result<State> {
    if s.n == 0 {
        return Err(Error::InvalidTransition {
            direction: Direction::Down,
            state: s,
        });
    }
    Ok(State { n: s.n - 1, x: 0.0 })
}

/// `|n - n'| + |x - x'|`.
pub fn state_distance(a: State, b: State) -> f64 {
    a.n.abs_diff(b.n) as f64 + (a.x - b.x).abs()
}

/// Column of a uniform table over `[0, x_max)` with `cols` columns; column
/// `j` starts exactly at `(x_max / cols) * j`. The last column extends to infinity.
fn table_column(x_max: f64, cols: usize, x: f64) -> usize {
    let width = x_max / cols as f64;
    let mut col = ((x / width).floor() as usize).min(cols - 1);
    if col > 0 && x < width * col as f64 {
        col -= 1;
    } else if col + 1 < cols && x >= width * (col + 1) as f64 {
        col += 1;
    }
    col
}

/// The shape of an intensity field.
#[derive(Debug, Clone, PartialEq)]
pub enum IntensityKind {
    /// `value` everywhere.
    Constant {
        value: f64,
    },
    /// Piecewise constant in `x`: `values[i]` on `[b_{i-1}, b_i)` with the
    /// spec's breakpoints `b`; `values.len() == breakpoints.len() + 1`.
    Step {
        values: Vec<f64>,
    },
    /// Piecewise constant on a uniform `x` grid over `[0, x_max)`, one row
    /// per `n` starting at `n = 1`. Rows and the last column extend as
    /// constants beyond the grid.
    Table {
        x_max: f64,
        values: Vec<Vec<f64>>,
    },
    /// `c0 / (1 + x)`.
    PkHazard {
        c0: f64,
    },
    /// Hazard of an Erlang-2 law with the given mean: `r^2 x / (1 + r x)`, `r = 2 / mean`.
    Erlang2Hazard {
        mean: f64,
    },
    Zero,
}

impl IntensityKind {
    pub fn name(&self) -> &'static str {
        match self {
            IntensityKind::Constant { .. } => "constant",
            IntensityKind::Step { .. } => "step",
            IntensityKind::Table { .. } => "table",
            IntensityKind::PkHazard { .. } => "pk_hazard",
            IntensityKind::Erlang2Hazard { .. } => "erlang2_hazard",
            IntensityKind::Zero => "zero",
        }
    }
}

/// A rate field `(n, x) -> rate` with a declared upper bound and the
/// positions where it may be discontinuous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIntensitySpec", into = "RawIntensitySpec")]
pub struct IntensitySpec {
    kind: IntensityKind,
    declared_sup: f64,
    breakpoints: Vec<f64>,
}

impl IntensitySpec {
    pub fn new(kind: IntensityKind, declared_sup: f64, mut breakpoints: Vec<f64>) -> Result<Self> {
        // Table grid lines declared within rounding are stored exactly, so the
        // quadrature split and the column lookup agree to the last bit.
        if let IntensityKind::Table { x_max, values } = &kind {
            let cols = values.first().map_or(0, Vec::len);
            let width = x_max / cols as f64;
            for b in &mut breakpoints {
                for j in 1..cols {
                    let line = width * j as f64;
                    if (*b - line).abs() <= 1e-12 * line.max(1.0) {
                        *b = line;
                    }
                }
            }
        }
        let spec = Self {
            kind,
            declared_sup,
            breakpoints,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn constant(value: f64) -> Self {
        Self::new(IntensityKind::Constant { value }, value, Vec::new())
            .expect("constant rate must be finite and nonnegative")
    }

    pub fn zero() -> Self {
        Self::new(IntensityKind::Zero, 0.0, Vec::new()).expect("zero field")
    }

    /// Two-level step at `at`: `before` on `[0, at)`, `after` on `[at, inf)`.
    pub fn step(before: f64, after: f64, at: f64) -> Self {
        Self::new(
            IntensityKind::Step {
                values: vec![before, after],
            },
            before.max(after),
            vec![at],
        )
        .expect("step levels must be nonnegative and the breakpoint positive")
    }

    pub fn pk_hazard(c0: f64) -> Self {
        Self::new(IntensityKind::PkHazard { c0 }, c0, Vec::new()).expect("c0 must be nonnegative")
    }

    pub fn erlang2_hazard(mean: f64) -> Self {
        Self::new(
            IntensityKind::Erlang2Hazard { mean },
            2.0 / mean,
            Vec::new(),
        )
        .expect("mean must be positive")
    }

    pub fn kind(&self) -> &IntensityKind {
        &self.kind
    }

    pub fn declared_sup(&self) -> f64 {
        self.declared_sup
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// Raw field value at `(n, x)`, without the empty-state and capacity rules
    /// that [`ModelSpec`] layers on top.
    pub fn value(&self, n: u64, x: f64) -> f64 {
        match &self.kind {
            IntensityKind::Constant { value } => *value,
            IntensityKind::Step { values } => values[self.breakpoints.partition_point(|&b| b <= x)],
            IntensityKind::Table { x_max, values } => {
                let row = &values[(n.max(1) as usize).min(values.len()) - 1];
                row[table_column(*x_max, row.len(), x)]
            }
            IntensityKind::PkHazard { c0 } => c0 / (1.0 + x),
            IntensityKind::Erlang2Hazard { mean } => {
                let r = 2.0 / mean;
                r * r * x / (1.0 + r * x)
            }
            IntensityKind::Zero => 0.0,
        }
    }

    /// Exact `∫_a^b value(n, u) du` where a closed form is implemented
    /// (constant, zero and `pk_hazard` kinds).
    pub fn closed_form_integral(&self, _n: u64, a: f64, b: f64) -> Option<f64> {
        match &self.kind {
            IntensityKind::Constant { value } => Some(value * (b - a)),
            IntensityKind::Zero => Some(0.0),
            IntensityKind::PkHazard { c0 } => Some(c0 * ((1.0 + b) / (1.0 + a)).ln()),
            _ => None,
        }
    }

    /// Supremum over `x >= 0` of the field for a given `n >= 1`.
    pub fn sup_for_n(&self, n: u64) -> f64 {
        match &self.kind {
            IntensityKind::Constant { value } => *value,
            IntensityKind::Step { values } => values.iter().copied().fold(0.0, f64::max),
            IntensityKind::Table { values, .. } => values
                [(n.max(1) as usize).min(values.len()) - 1]
                .iter()
                .copied()
                .fold(0.0, f64::max),
            IntensityKind::PkHazard { c0 } => *c0,
            IntensityKind::Erlang2Hazard { mean } => 2.0 / mean,
            IntensityKind::Zero => 0.0,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if !self.declared_sup.is_finite() || self.declared_sup < 0.0 {
            return bad(format!(
                "declared_sup must be finite and nonnegative, got {}",
                self.declared_sup
            ));
        }
        if self.breakpoints.iter().any(|b| !b.is_finite() || *b < 0.0) {
            return bad("breakpoints must be finite and nonnegative".into());
        }
        if self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return bad("breakpoints must be strictly increasing".into());
        }
        let check_level = |v: f64, what: &str| -> Result<()> {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{what} must be finite and nonnegative, got {v}"
                )));
            }
            if v > self.declared_sup {
                return Err(Error::InvalidSpec(format!(
                    "{what} {v} exceeds declared_sup {}",
                    self.declared_sup
                )));
            }
            Ok(())
        };
        match &self.kind {
            IntensityKind::Constant { value } => check_level(*value, "constant value")?,
            IntensityKind::Step { values } => {
                if values.len() != self.breakpoints.len() + 1 {
                    return bad(format!(
                        "step needs breakpoints.len() + 1 = {} values, got {}",
                        self.breakpoints.len() + 1,
                        values.len()
                    ));
                }
                for v in values {
                    check_level(*v, "step value")?;
                }
            }
            IntensityKind::Table { x_max, values } => {
                if !x_max.is_finite() || *x_max <= 0.0 {
                    return bad(format!("table x_max must be positive, got {x_max}"));
                }
                let cols = values.first().map_or(0, Vec::len);
                if cols == 0 || values.iter().any(|r| r.len() != cols) {
                    return bad("table rows must be nonempty and of equal length".into());
                }
                for v in values.iter().flatten() {
                    check_level(*v, "table value")?;
                }
                let width = x_max / cols as f64;
                for j in 1..cols {
                    let line = width * j as f64;
                    let declared = self
                        .breakpoints
                        .iter()
                        .any(|b| (b - line).abs() <= 1e-12 * line.max(1.0));
                    if !declared {
                        return bad(format!("table grid line x={line} missing from breakpoints"));
                    }
                }
            }
            IntensityKind::PkHazard { c0 } => check_level(*c0, "pk_hazard c0")?,
            IntensityKind::Erlang2Hazard { mean } => {
                if !mean.is_finite() || *mean <= 0.0 {
                    return bad(format!("erlang2_hazard mean must be positive, got {mean}"));
                }
                check_level(2.0 / mean, "erlang2_hazard supremum 2/mean")?;
            }
            IntensityKind::Zero => {}
        }
        Ok(())
    }
}

/// Wire form: `{"kind", "params", "declared_sup", "breakpoints"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntensitySpec {
    pub kind: String,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default)]
    pub declared_sup: Option<f64>,
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstantParams {
    value: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StepParams {
    values: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableParams {
    x_max: f64,
    values: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PkParams {
    c0: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Erlang2Params {
    mean: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoParams {}

fn parse_params<T: serde::de::DeserializeOwned>(
    kind: &str,
    params: Map<String, Value>,
) -> Result<T> {
    serde_json::from_value(Value::Object(params))
        .map_err(|e| Error::InvalidSpec(format!("params for kind '{kind}': {e}")))
}

impl TryFrom<RawIntensitySpec> for IntensitySpec {
    type Error = Error;

    fn try_from(raw: RawIntensitySpec) -> Result<Self> {
        let kind = match raw.kind.as_str() {
            "constant" => {
                let p: ConstantParams = parse_params(&raw.kind, raw.params)?;
                IntensityKind::Constant { value: p.value }
            }
            "step" => {
                let p: StepParams = parse_params(&raw.kind, raw.params)?;
                IntensityKind::Step { values: p.values }
            }
            "table" => {
                let p: TableParams = parse_params(&raw.kind, raw.params)?;
                IntensityKind::Table {
                    x_max: p.x_max,
                    values: p.values,
                }
            }
            "pk_hazard" => {
                let p: PkParams = parse_params(&raw.kind, raw.params)?;
                IntensityKind::PkHazard { c0: p.c0 }
            }
            "erlang2_hazard" => {
                let p: Erlang2Params = parse_params(&raw.kind, raw.params)?;
                IntensityKind::Erlang2Hazard { mean: p.mean }
            }
            "zero" => {
                let _: NoParams = parse_params(&raw.kind, raw.params)?;
                IntensityKind::Zero
            }
            other => return Err(Error::InvalidSpec(format!("unknown kind '{other}'"))),
        };
        let declared_sup = raw
            .declared_sup
            .ok_or_else(|| Error::InvalidSpec("declared_sup required".into()))?;
        IntensitySpec::new(kind, declared_sup, raw.breakpoints)
    }
}

impl From<IntensitySpec> for RawIntensitySpec {
    fn from(spec: IntensitySpec) -> Self {
        let params = match &spec.kind {
            IntensityKind::Constant { value } => json!({ "value": value }),
            IntensityKind::Step { values } => json!({ "values": values }),
            IntensityKind::Table { x_max, values } => json!({ "x_max": x_max, "values": values }),
            IntensityKind::PkHazard { c0 } => json!({ "c0": c0 }),
            IntensityKind::Erlang2Hazard { mean } => json!({ "mean": mean }),
            IntensityKind::Zero => json!({}),
        };
        let Value::Object(params) = params else {
            unreachable!("params are always objects")
        };
        RawIntensitySpec {
            kind: spec.kind.name().to_owned(),
            params,
            declared_sup: Some(spec.declared_sup),
            breakpoints: spec.breakpoints,
        }
    }
}

/// Arrival intensity, service hazard, idle arrival rate and optional capacity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModelSpec", into = "RawModelSpec")]
pub struct ModelSpec {
    lambda_field: IntensitySpec,
    h_field: IntensitySpec,
    lambda0: f64,
    capacity: Option<u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawModelSpec {
    pub lambda_field: IntensitySpec,
    pub h_field: IntensitySpec,
    pub lambda0: f64,
    #[serde(default)]
    pub capacity: Option<u64>,
}

impl TryFrom<RawModelSpec> for ModelSpec {
    type Error = Error;

    fn try_from(raw: RawModelSpec) -> Result<Self> {
        ModelSpec::new(raw.lambda_field, raw.h_field, raw.lambda0, raw.capacity)
    }
}

impl From<ModelSpec> for RawModelSpec {
    fn from(m: ModelSpec) -> Self {
        RawModelSpec {
            lambda_field: m.lambda_field,
            h_field: m.h_field,
            lambda0: m.lambda0,
            capacity: m.capacity,
        }
    }
}

impl ModelSpec {
    pub fn new(
        lambda_field: IntensitySpec,
        h_field: IntensitySpec,
        lambda0: f64,
        capacity: Option<u64>,
    ) -> Result<Self> {
        if !lambda0.is_finite() || lambda0 < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "lambda0 must be finite and nonnegative, got {lambda0}"
            )));
        }
        if capacity == Some(0) {
            return Err(Error::InvalidSpec(
                "capacity must be a positive integer".into(),
            ));
        }
        Ok(Self {
            lambda_field,
            h_field,
            lambda0,
            capacity,
        })
    }

    pub fn lambda_field(&self) -> &IntensitySpec {
        &self.lambda_field
    }

    pub fn h_field(&self) -> &IntensitySpec {
        &self.h_field
    }

    pub fn lambda0(&self) -> f64 {
        self.lambda0
    }

    pub fn capacity(&self) -> Option<u64> {
        self.capacity
    }

    pub fn field(&self, which: Direction) -> &IntensitySpec {
        match which {
            Direction::Up => &self.lambda_field,
            Direction::Down => &self.h_field,
        }
    }

    #[inline]
    fn at_capacity(&self, n: u64) -> bool {
        self.capacity.is_some_and(|cap| n >= cap)
    }

    /// λ(n, x) or h(n, x) including the empty-state and capacity rules.
    /// Values above `declared_sup` are reported as a spec violation.
    #[inline]
    pub fn evaluate_intensity(&self, which: Direction, s: State) -> Result<f64> {
        match which {
            Direction::Up if s.n == 0 => Ok(self.lambda0),
            Direction::Up if self.at_capacity(s.n) => Ok(0.0),
            Direction::Down if s.n == 0 => Ok(0.0),
            _ => {
                let spec = self.field(which);
                let v = spec.value(s.n, s.x);
                if v > spec.declared_sup || v.is_nan() {
                    return Err(Error::SpecViolation {
                        field: which,
                        state: s,
                        value: v,
                        declared_sup: spec.declared_sup,
                    });
                }
                Ok(v)
            }
        }
    }

    /// Dominating constant rate for thinning the given clock from state `s`
    /// (the state's `n` does not change until the clock fires).
    #[inline]
    pub fn rate_bound(&self, which: Direction, s: State) -> f64 {
        match which {
            Direction::Up if s.n == 0 => self.lambda0,
            Direction::Up if self.at_capacity(s.n) => 0.0,
            Direction::Down if s.n == 0 => 0.0,
            _ => self.field(which).declared_sup,
        }
    }

    /// `∫_0^delta rate(flow(s, u)) du`, closed form where available,
    /// breakpoint-aware Simpson otherwise.
    pub fn cumulative_hazard(&self, which: Direction, s: State, delta: f64) -> Result<f64> {
        self.cumulative_hazard_with(which, s, delta, true)
    }

    /// Same integral, always through the generic quadrature path.
    pub fn cumulative_hazard_quadrature(
        &self,
        which: Direction,
        s: State,
        delta: f64,
    ) -> Result<f64> {
        self.cumulative_hazard_with(which, s, delta, false)
    }

    fn cumulative_hazard_with(
        &self,
        which: Direction,
        s: State,
        delta: f64,
        closed: bool,
    ) -> Result<f64> {
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::NegativeDuration(delta));
        }
        if s.n == 0 || (which == Direction::Up && self.at_capacity(s.n)) {
            // The state does not move (or the field is forced to 0): constant rate.
            return Ok(self.evaluate_intensity(which, s)? * delta);
        }
        let spec = self.field(which);
        let (a, b) = (s.x, s.x + delta);
        if closed {
            if let Some(v) = spec.closed_form_integral(s.n, a, b) {
                return Ok(v);
            }
        }
        // Validate the range once through the checked path; quadrature then
        // uses raw values.
        let mut violation = None;
        let v = quadrature::integrate(
            |u| {
                let v = spec.value(s.n, u);
                if v > spec.declared_sup && violation.is_none() {
                    violation = Some((u, v));
                }
                v
            },
            a,
            b,
            spec.breakpoints(),
        );
        if let Some((u, value)) = violation {
            return Err(Error::SpecViolation {
                field: which,
                state: State { n: s.n, x: u },
                value,
                declared_sup: spec.declared_sup,
            });
        }
        Ok(v)
    }

    /// Λ = sup over n > 0, x >= 0 of λ(n, x), honouring capacity.
    pub fn big_lambda(&self) -> f64 {
        let top = match self.capacity {
            Some(1) => return 0.0,
            Some(cap) => cap - 1,
            None => u64::MAX,
        };
        match self.lambda_field.kind() {
            IntensityKind::Table { values, .. } => (1..=top.min(values.len() as u64))
                .map(|n| self.lambda_field.sup_for_n(n))
                .fold(0.0, f64::max),
            _ => self.lambda_field.sup_for_n(1),
        }
    }

    /// λ̄ = max(Λ, λ0): the arrival rate of the dominating no-service process.
    pub fn lambda_bar(&self) -> f64 {
        self.big_lambda().max(self.lambda0)
    }
}
