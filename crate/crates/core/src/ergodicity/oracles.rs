//! Classical closed forms used to validate the simulator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mm1Oracle {
    pub rho: f64,
    pub p0: f64,
    pub mean_n: f64,
}

impl Mm1Oracle {
    /// Stationary `P(n = j) = (1 - ρ) ρ^j`.
    pub fn p(&self, j: u32) -> f64 {
        (1.0 - self.rho) * self.rho.powi(j as i32)
    }
}

pub fn mm1(lambda: f64, mu: f64) -> Result<Mm1Oracle> {
    let rho = lambda / mu;
    if !(rho < 1.0) || !(rho >= 0.0) {
        return Err(Error::Unstable(rho));
    }
    Ok(Mm1Oracle {
        rho,
        p0: 1.0 - rho,
        mean_n: rho / (1.0 - rho),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PkOracle {
    pub rho: f64,
    pub mean_n: f64,
}

/// Mean number in system for M/G/1 with arrival rate `lambda` and a service
/// law of mean `mean_service` and squared coefficient of variation `cs2`:
/// `ρ + ρ² (1 + cs2) / (2 (1 - ρ))`.
pub fn pollaczek_khinchine(lambda: f64, mean_service: f64, cs2: f64) -> Result<PkOracle> {
    let rho = lambda * mean_service;
    if !(rho < 1.0) || !(rho >= 0.0) {
        return Err(Error::Unstable(rho));
    }
    Ok(PkOracle {
        rho,
        mean_n: rho + rho * rho * (1.0 + cs2) / (2.0 * (1.0 - rho)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mm1_half_load() {
        let o = mm1(0.5, 1.0).unwrap();
        assert_eq!(o.p0, 0.5);
        assert_eq!(o.mean_n, 1.0);
        assert_eq!(o.p(2), 0.125);
        assert!(mm1(1.0, 1.0).is_err());
    }

    #[test]
    fn pk_erlang2() {
        let o = pollaczek_khinchine(0.5, 1.0, 0.5).unwrap();
        assert!((o.mean_n - 0.875).abs() < 1e-15);
        // exponential service reduces to M/M/1
        assert!((pollaczek_khinchine(0.5, 1.0, 1.0).unwrap().mean_n - 1.0).abs() < 1e-15);
        assert!(pollaczek_khinchine(1e-9, 1.0, 0.5).unwrap().mean_n < 1e-8);
        assert!(matches!(
            pollaczek_khinchine(2.0, 1.0, 0.5),
            Err(Error::Unstable(_))
        ));
    }
}
