//! Reference models used throughout the test suites and example configs.

use crate::model::{IntensitySpec, ModelSpec};

/// M/M/1 with λ = 0.5, service rate 1.
pub fn mm1() -> ModelSpec {
    ModelSpec::new(
        IntensitySpec::constant(0.5),
        IntensitySpec::constant(1.0),
        0.5,
        None,
    )
    .expect("valid model")
}

/// Arrival intensity jumps 0.3 -> 0.8 and service hazard 1.5 -> 0.7 at x = 1.
pub fn step_discontinuous() -> ModelSpec {
    ModelSpec::new(
        IntensitySpec::step(0.3, 0.8, 1.0),
        IntensitySpec::step(1.5, 0.7, 1.0),
        0.3,
        None,
    )
    .expect("valid model")
}

/// λ ≡ 0.5 and polynomially decaying hazard h = 9 / (1 + x).
pub fn heavy_tail() -> ModelSpec {
    ModelSpec::new(
        IntensitySpec::constant(0.5),
        IntensitySpec::pk_hazard(9.0),
        0.5,
        None,
    )
    .expect("valid model")
}

/// M/G/1 with λ = 0.5 and Erlang-2 service of mean 1.
pub fn mg1_erlang2() -> ModelSpec {
    ModelSpec::new(
        IntensitySpec::constant(0.5),
        IntensitySpec::erlang2_hazard(1.0),
        0.5,
        None,
    )
    .expect("valid model")
}

/// Both fields identically zero.
pub fn frozen() -> ModelSpec {
    ModelSpec::new(IntensitySpec::zero(), IntensitySpec::zero(), 0.0, None).expect("valid model")
}

/// The three scenarios of the verification matrices, by name.
pub fn matrix() -> Vec<(&'static str, ModelSpec)> {
    vec![
        ("mm1", mm1()),
        ("step", step_discontinuous()),
        ("heavy_tail", heavy_tail()),
    ]
}
