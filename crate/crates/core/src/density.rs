//! Catalog of signal and error laws with closed-form Mellin transforms.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn default_sigma() -> f64 {
    1.0
}

/// A catalog density on the positive half-line.
///
/// Every law provides a sampler, an analytic Mellin transform
/// `M_c[h](t) = ∫ h(x) x^{c-1+2πit} dx` and the norms needed by the penalty.
/// `NoError` is the point mass at one (`M_c ≡ 1`) and only makes sense as an
/// error law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DensitySpec {
    /// Beta(2, 1): `f(x) = 2x` on `(0, 1)`.
    Beta21,
    /// `ln X ~ N(mu, sigma²)`.
    LogNormal {
        #[serde(default)]
        mu: f64,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    /// Pareto with index one: `g(x) = x^{-2}` on `(1, ∞)`.
    Pareto1,
    Uniform01,
    NoError,
}

impl DensitySpec {
    pub const STANDARD_LOG_NORMAL: DensitySpec = DensitySpec::LogNormal { mu: 0.0, sigma: 1.0 };

    pub fn validate(&self) -> Result<()> {
        if let DensitySpec::LogNormal { mu, sigma } = *self {
            if !mu.is_finite() || !(sigma.is_finite() && sigma > 0.0) {
                return Err(Error::domain(format!(
                    "log-normal parameters must be finite with sigma > 0 (mu = {mu}, sigma = {sigma})"
                )));
            }
        }
        Ok(())
    }

    /// Checks that `∫ x^{c-1} h(x) dx` converges absolutely.
    pub fn check_exponent(&self, c: f64) -> Result<()> {
        self.validate()?;
        if !c.is_finite() {
            return Err(Error::domain(format!("c must be finite, got {c}")));
        }
        let ok = match self {
            DensitySpec::Beta21 => c > -1.0,
            DensitySpec::Pareto1 => c < 2.0,
            DensitySpec::Uniform01 => c > 0.0,
            DensitySpec::LogNormal { .. } | DensitySpec::NoError => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{self} has no Mellin transform at c = {c}: requires {}",
                self.exponent_constraint()
            )))
        }
    }

    fn exponent_constraint(&self) -> &'static str {
        match self {
            DensitySpec::Beta21 => "c > -1",
            DensitySpec::Pareto1 => "c < 2",
            DensitySpec::Uniform01 => "c > 0",
            DensitySpec::LogNormal { .. } | DensitySpec::NoError => "nothing",
        }
    }

    /// Closed-form Mellin transform at `z = c - 1 + 2πit`.
    pub fn mellin(&self, c: f64, t: f64) -> Result<Complex64> {
        self.check_exponent(c)?;
        let z = Complex64::new(c - 1.0, 2.0 * PI * t);
        let one = Complex64::new(1.0, 0.0);
        Ok(match *self {
            DensitySpec::Beta21 => Complex64::new(2.0, 0.0) / (z + 2.0),
            DensitySpec::Pareto1 => one / (one - z),
            DensitySpec::Uniform01 => one / (z + 1.0),
            DensitySpec::LogNormal { mu, sigma } => (z * z * (0.5 * sigma * sigma) + z * mu).exp(),
            DensitySpec::NoError => one,
        })
    }

    /// `ln |M_c[h](t)|`, evaluated without forming the transform so that
    /// super-smooth laws do not underflow.
    pub fn ln_mellin_modulus(&self, c: f64, t: f64) -> Result<f64> {
        self.check_exponent(c)?;
        let tt = 4.0 * PI * PI * t * t;
        Ok(match *self {
            DensitySpec::Beta21 => 2f64.ln() - 0.5 * ((c + 1.0).powi(2) + tt).ln(),
            DensitySpec::Pareto1 => -0.5 * ((2.0 - c).powi(2) + tt).ln(),
            DensitySpec::Uniform01 => -0.5 * (c * c + tt).ln(),
            DensitySpec::LogNormal { mu, sigma } => 0.5 * sigma * sigma * ((c - 1.0).powi(2) - tt) + mu * (c - 1.0),
            DensitySpec::NoError => 0.0,
        })
    }

    /// Density at `x`; `None` for the point mass.
    pub fn pdf(&self, x: f64) -> Option<f64> {
        let v = match *self {
            DensitySpec::Beta21 => {
                if x > 0.0 && x < 1.0 {
                    2.0 * x
                } else {
                    0.0
                }
            }
            DensitySpec::Pareto1 => {
                if x > 1.0 {
                    1.0 / (x * x)
                } else {
                    0.0
                }
            }
            DensitySpec::Uniform01 => {
                if x > 0.0 && x < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
            DensitySpec::LogNormal { mu, sigma } => {
                if x > 0.0 {
                    let z = (x.ln() - mu) / sigma;
                    (-0.5 * z * z).exp() / (x * sigma * (2.0 * PI).sqrt())
                } else {
                    0.0
                }
            }
            DensitySpec::NoError => return None,
        };
        Some(v)
    }

    /// Open support interval `(lo, hi)`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            DensitySpec::Beta21 | DensitySpec::Uniform01 => (0.0, 1.0),
            DensitySpec::Pareto1 => (1.0, f64::INFINITY),
            DensitySpec::LogNormal { .. } => (0.0, f64::INFINITY),
            DensitySpec::NoError => (1.0, 1.0),
        }
    }

    /// `E[X^p]`, or a moment error when it diverges.
    pub fn moment(&self, p: f64) -> Result<f64> {
        self.check_exponent(p + 1.0)
            .map_err(|_| Error::Moment(format!("E[X^{p}] diverges for {self}")))?;
        Ok(match *self {
            DensitySpec::Beta21 => 2.0 / (p + 2.0),
            DensitySpec::Pareto1 => 1.0 / (1.0 - p),
            DensitySpec::Uniform01 => 1.0 / (p + 1.0),
            DensitySpec::LogNormal { mu, sigma } => (mu * p + 0.5 * sigma * sigma * p * p).exp(),
            DensitySpec::NoError => 1.0,
        })
    }

    /// `sup_x x^a h(x)`; `None` when unbounded or for the point mass.
    pub fn sup_weighted_pdf(&self, a: f64) -> Option<f64> {
        match *self {
            // 2 x^{a+1} on (0,1)
            DensitySpec::Beta21 => (a >= -1.0).then_some(2.0),
            // x^{a-2} on (1,∞)
            DensitySpec::Pareto1 => (a <= 2.0).then_some(1.0),
            // x^a on (0,1)
            DensitySpec::Uniform01 => (a >= 0.0).then_some(1.0),
            DensitySpec::LogNormal { mu, sigma } => {
                // maximise (a-1)u - (u-mu)²/(2σ²) over u = ln x
                let b = a - 1.0;
                Some((b * mu + 0.5 * sigma * sigma * b * b).exp() / (sigma * (2.0 * PI).sqrt()))
            }
            DensitySpec::NoError => None,
        }
    }

    /// Inverse CDF for the laws sampled that way.
    pub fn quantile(&self, u: f64) -> Option<f64> {
        match self {
            DensitySpec::Beta21 => Some(u.sqrt()),
            DensitySpec::Pareto1 => Some(1.0 / (1.0 - u)),
            DensitySpec::Uniform01 => Some(u),
            DensitySpec::NoError => Some(1.0),
            DensitySpec::LogNormal { .. } => None,
        }
    }

    /// Draws `n` independent values.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        match *self {
            DensitySpec::LogNormal { mu, sigma } => (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(rng);
                    (mu + sigma * z).exp()
                })
                .collect(),
            DensitySpec::NoError => vec![1.0; n],
            spec => (0..n)
                .map(|_| {
                    // u in (0, 1): observations must be strictly positive
                    let u = loop {
                        let u: f64 = rng.random();
                        if u > 0.0 {
                            break u;
                        }
                    };
                    spec.quantile(u).expect("inverse cdf")
                })
                .collect(),
        }
    }

    /// Polynomial (`Some(p)`) or exponential (`None`) decay of `|M_c|`.
    pub fn ordinary_decay(&self) -> Option<f64> {
        match self {
            DensitySpec::Beta21 | DensitySpec::Pareto1 | DensitySpec::Uniform01 => Some(1.0),
            DensitySpec::NoError => Some(0.0),
            DensitySpec::LogNormal { .. } => None,
        }
    }

    pub fn short_name(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DensitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DensitySpec::Beta21 => write!(f, "beta21"),
            DensitySpec::LogNormal { mu, sigma } => write!(f, "lognormal({mu},{sigma})"),
            DensitySpec::Pareto1 => write!(f, "pareto1"),
            DensitySpec::Uniform01 => write!(f, "uniform01"),
            DensitySpec::NoError => write!(f, "noerror"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn beta21_at_half() {
        let m = DensitySpec::Beta21.mellin(0.5, 0.0).unwrap();
        assert!(close(m, Complex64::new(4.0 / 3.0, 0.0), 1e-15));
        let t = 0.8;
        let m = DensitySpec::Beta21.mellin(0.5, t).unwrap();
        let want = Complex64::new(2.0, 0.0) / Complex64::new(1.5, 2.0 * PI * t);
        assert!(close(m, want, 1e-15));
    }

    #[test]
    fn pareto1_at_half() {
        let t = 1.3;
        let m = DensitySpec::Pareto1.mellin(0.5, t).unwrap();
        let want = Complex64::new(1.0, 0.0) / Complex64::new(1.5, -2.0 * PI * t);
        assert!(close(m, want, 1e-15));
    }

    #[test]
    fn lognormal_at_zero() {
        let m = DensitySpec::STANDARD_LOG_NORMAL.mellin(0.5, 0.0).unwrap();
        assert!(close(m, Complex64::new(0.125f64.exp(), 0.0), 1e-14));
        assert!((m.re - 1.13315).abs() < 1e-5);
    }

    #[test]
    fn lognormal_matches_formula() {
        let t = 0.37;
        let z = Complex64::new(-0.5, 2.0 * PI * t);
        let want = (z * z / 2.0).exp();
        let m = DensitySpec::STANDARD_LOG_NORMAL.mellin(0.5, t).unwrap();
        assert!(close(m, want, 1e-14));
    }

    #[test]
    fn no_error_is_one() {
        let m = DensitySpec::NoError.mellin(0.5, 1.7).unwrap();
        assert_eq!(m, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn validity_regions() {
        assert!(DensitySpec::Beta21.mellin(-1.0, 0.0).is_err());
        assert!(DensitySpec::Pareto1.mellin(2.0, 0.0).is_err());
        assert!(DensitySpec::Uniform01.mellin(0.0, 0.0).is_err());
        let err = DensitySpec::Pareto1.mellin(2.5, 0.0).unwrap_err();
        assert!(err.to_string().contains("c < 2"));
        assert!(DensitySpec::LogNormal { mu: 0.0, sigma: 0.0 }.mellin(0.5, 0.0).is_err());
    }

    #[test]
    fn log_modulus_agrees_with_transform() {
        let laws = [
            DensitySpec::Beta21,
            DensitySpec::Pareto1,
            DensitySpec::Uniform01,
            DensitySpec::LogNormal { mu: 0.3, sigma: 0.7 },
            DensitySpec::NoError,
        ];
        for law in laws {
            for t in [0.0, 0.2, 1.1] {
                let a = law.mellin(0.5, t).unwrap().norm().ln();
                let b = law.ln_mellin_modulus(0.5, t).unwrap();
                assert!((a - b).abs() < 1e-12, "{law} t={t}");
            }
        }
    }

    #[test]
    fn moments() {
        assert!((DensitySpec::Beta21.moment(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((DensitySpec::Pareto1.moment(-1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(DensitySpec::Beta21.moment(-2.0).is_err());
        assert!(DensitySpec::Pareto1.moment(1.0).is_err());
        let e = DensitySpec::STANDARD_LOG_NORMAL.moment(-1.0).unwrap();
        assert!((e - 0.5f64.exp()).abs() < 1e-14);
    }

    #[test]
    fn quantiles() {
        assert_eq!(DensitySpec::Beta21.quantile(0.25), Some(0.5));
        assert_eq!(DensitySpec::Pareto1.quantile(0.5), Some(2.0));
    }

    #[test]
    fn lognormal_sup() {
        let s = DensitySpec::STANDARD_LOG_NORMAL.sup_weighted_pdf(0.0).unwrap();
        assert!((s - 0.5f64.exp() / (2.0 * PI).sqrt()).abs() < 1e-14);
        // the maximiser is x = e^{-1}
        let at_mode = DensitySpec::STANDARD_LOG_NORMAL.pdf((-1f64).exp()).unwrap();
        assert!((s - at_mode).abs() < 1e-14);
    }

    #[test]
    fn serde_shape() {
        let json = serde_json::to_string(&DensitySpec::STANDARD_LOG_NORMAL).unwrap();
        assert_eq!(json, r#"{"law":"log_normal","mu":0.0,"sigma":1.0}"#);
        let back: DensitySpec = serde_json::from_str(r#"{"law":"log_normal"}"#).unwrap();
        assert_eq!(back, DensitySpec::STANDARD_LOG_NORMAL);
    }
}
