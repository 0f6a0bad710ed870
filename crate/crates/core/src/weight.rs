//! The weight family `ω²(t)` selecting which quadratic functional is estimated.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which functional of the signal density is targeted.
///
/// * `Unit` gives the weighted `L²` norm of the density itself.
/// * `Survival` gives the weighted `L²` norm of the survival function.
/// * `Derivative { beta }` gives the weighted `L²` norm of the `beta`-th derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Unit,
    Survival,
    Derivative {
        beta: u32,
    },
}

impl WeightSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            WeightSpec::Derivative { beta } if *beta < 1 => Err(Error::domain("derivative weight requires beta >= 1")),
            _ => Ok(()),
        }
    }

    /// `ω²(t)`.
    pub fn weight_sq(&self, c: f64, t: f64) -> Result<f64> {
        self.validate()?;
        let four_pi2_t2 = 4.0 * PI * PI * t * t;
        match *self {
            WeightSpec::Unit => Ok(1.0),
            WeightSpec::Survival => {
                let denom = (c - 1.0).powi(2) + four_pi2_t2;
                if denom == 0.0 {
                    return Err(Error::domain("survival weight has a pole at t = 0 when c = 1"));
                }
                Ok(1.0 / denom)
            }
            WeightSpec::Derivative { beta } => Ok((1..=beta)
                .map(|j| (c + f64::from(beta) - f64::from(j)).powi(2) + four_pi2_t2)
                .product()),
        }
    }

    /// `ln ω²(t)`; stays finite where `weight_sq` would overflow.
    pub fn ln_weight_sq(&self, c: f64, t: f64) -> Result<f64> {
        self.validate()?;
        let four_pi2_t2 = 4.0 * PI * PI * t * t;
        match *self {
            WeightSpec::Unit => Ok(0.0),
            WeightSpec::Survival => {
                let denom = (c - 1.0).powi(2) + four_pi2_t2;
                if denom == 0.0 {
                    return Err(Error::domain("survival weight has a pole at t = 0 when c = 1"));
                }
                Ok(-denom.ln())
            }
            WeightSpec::Derivative { beta } => Ok((1..=beta)
                .map(|j| ((c + f64::from(beta) - f64::from(j)).powi(2) + four_pi2_t2).ln())
                .sum()),
        }
    }

    /// Polynomial order `a` with `ω(t) ~ |t|^a` for large `|t|`.
    pub fn exponent(&self) -> f64 {
        match *self {
            WeightSpec::Unit => 0.0,
            WeightSpec::Survival => -1.0,
            WeightSpec::Derivative { beta } => f64::from(beta),
        }
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Unit => write!(f, "unit"),
            WeightSpec::Survival => write!(f, "survival"),
            WeightSpec::Derivative { beta } => write!(f, "derivative{beta}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_is_one() {
        for t in [-3.0, 0.0, 0.7] {
            assert_eq!(WeightSpec::Unit.weight_sq(0.5, t).unwrap(), 1.0);
        }
    }

    #[test]
    fn survival_at_zero() {
        assert_eq!(WeightSpec::Survival.weight_sq(0.5, 0.0).unwrap(), 4.0);
        assert!(WeightSpec::Survival.weight_sq(1.0, 0.0).is_err());
        assert!(WeightSpec::Survival.weight_sq(1.0, 0.1).is_ok());
    }

    #[test]
    fn derivative_beta_one_at_zero() {
        let w = WeightSpec::Derivative { beta: 1 }.weight_sq(0.5, 0.0).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
    }

    #[test]
    fn derivative_beta_two_product() {
        let c = 0.3;
        let t = 0.4;
        let s = 4.0 * PI * PI * t * t;
        let expected = ((c + 1.0) * (c + 1.0) + s) * (c * c + s);
        let w = WeightSpec::Derivative { beta: 2 }.weight_sq(c, t).unwrap();
        assert!((w - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn derivative_beta_zero_rejected() {
        assert!(WeightSpec::Derivative { beta: 0 }.weight_sq(0.5, 1.0).is_err());
    }

    #[test]
    fn log_form_agrees() {
        for w in [
            WeightSpec::Unit,
            WeightSpec::Survival,
            WeightSpec::Derivative { beta: 3 },
        ] {
            for t in [0.0, 0.3, 2.5] {
                let a = w.weight_sq(0.5, t).unwrap().ln();
                let b = w.ln_weight_sq(0.5, t).unwrap();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
