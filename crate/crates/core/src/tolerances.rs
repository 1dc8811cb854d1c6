use serde::{Deserialize, Serialize};

use crate::error::{Result, TdiError};

/// Default max-entry tolerance for exact (algebraic) checks.
pub const ALGEBRAIC_TOL: f64 = 1e-10;

/// Default number of standard errors for Monte Carlo thresholds.
pub const STATISTICAL_SIGMA: f64 = 5.0;

/// Position tolerance used when matching site separations.
pub const POSITION_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub algebraic_tol: f64,
    pub statistical_sigma: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { algebraic_tol: ALGEBRAIC_TOL, statistical_sigma: STATISTICAL_SIGMA }
    }
}

impl Tolerances {
    pub fn new(algebraic_tol: f64, statistical_sigma: f64) -> Result<Self> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        if !ok(algebraic_tol) || !ok(statistical_sigma) {
            return Err(TdiError::InvalidParameter(format!(
                "tolerances must be strictly positive (got algebraic_tol={algebraic_tol}, statistical_sigma={statistical_sigma})"
            )));
        }
        Ok(Self { algebraic_tol, statistical_sigma })
    }

    pub fn with_algebraic(self, algebraic_tol: f64) -> Result<Self> {
        Self::new(algebraic_tol, self.statistical_sigma)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive() {
        assert!(Tolerances::new(0.0, 5.0).is_err());
        assert!(Tolerances::new(1e-10, -1.0).is_err());
        assert!(Tolerances::new(f64::NAN, 5.0).is_err());
        assert_eq!(Tolerances::new(1e-10, 5.0).unwrap(), Tolerances::default());
    }
}
