//! The bias-corrected spectral cut-off estimator
//!
//! ```text
//! theta_hat_k = 1/(n(n-1)) Σ_{j≠l} ∫_{-k}^{k} Y_j^{c-1+2πit} Y_l^{c-1-2πit} ω²(t)/|M_c[g](t)|² dt
//! ```
//!
//! computed in `O(n · nodes)` through `Σ_{j≠l} a_j conj(a_l) = |Σ a_j|² - Σ |a_j|²`.

use std::f64::consts::PI;

use serde::Serialize;

use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::quad::{NodeSet, QuadratureRule};
use crate::sample::{KGrid, Sample};
use crate::weight::WeightSpec;

/// Below this modulus the error law's transform counts as vanished.
pub const ILL_POSED_MODULUS: f64 = 1e-300;

/// Per-sample quantities that do not depend on the cut-off.
#[derive(Debug, Clone)]
pub struct PreparedSample {
    /// `2π ln Y_j`
    phase: Vec<f64>,
    /// `Y_j^{c-1}`
    amp: Vec<f64>,
    /// `Σ Y_j^{2(c-1)}`
    q: f64,
    /// `max ln Y - min ln Y`, the highest frequency in `|S(t)|²`
    span: f64,
    n: usize,
}

impl PreparedSample {
    pub fn new(sample: &Sample, c: f64) -> Result<Self> {
        let n = sample.len();
        if n < 2 {
            return Err(Error::argument(format!("need n ≥ 2 observations, got {n}")));
        }
        if !c.is_finite() {
            return Err(Error::domain(format!("c must be finite, got {c}")));
        }
        let ln_y: Vec<f64> = sample.values().iter().map(|y| y.ln()).collect();
        let amp: Vec<f64> = ln_y.iter().map(|l| ((c - 1.0) * l).exp()).collect();
        let q = amp.iter().map(|a| a * a).sum();
        let (lo, hi) = ln_y.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| {
            (lo.min(l), hi.max(l))
        });
        Ok(Self {
            phase: ln_y.iter().map(|l| 2.0 * PI * l).collect(),
            amp,
            q,
            span: hi - lo,
            n,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `|S(t)|²` with `S(t) = Σ_j Y_j^{c-1+2πit}`.
    pub fn abs_s_sq(&self, t: f64) -> f64 {
        let (mut re, mut im) = (0.0, 0.0);
        for (a, p) in self.amp.iter().zip(&self.phase) {
            let (s, c) = (p * t).sin_cos();
            re += a * c;
            im += a * s;
        }
        re * re + im * im
    }

    /// `(|S(t)|² - Q) / (n(n-1))`, the real pair-average of `Y_j^{..} conj(Y_l^{..})`.
    pub fn pair_mean(&self, t: f64) -> f64 {
        let n = self.n as f64;
        (self.abs_s_sq(t) - self.q) / (n * (n - 1.0))
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn span(&self) -> f64 {
        self.span
    }
}

/// `ln(ω²(t) / |M_c[g](t)|²)`, with the ill-posedness guard.
pub(crate) fn ln_spectral_weight(c: f64, weight: &WeightSpec, error: &DensitySpec, t: f64) -> Result<f64> {
    let ln_mod = error.ln_mellin_modulus(c, t)?;
    if ln_mod < ILL_POSED_MODULUS.ln() {
        return Err(Error::IllPosed {
            t,
            modulus: ln_mod.exp(),
        });
    }
    Ok(weight.ln_weight_sq(c, t)? - 2.0 * ln_mod)
}

/// Largest slope of `t ↦ ln w(t)` on `[0, k]` seen on a coarse scan.
pub(crate) fn max_log_slope<F: FnMut(f64) -> Result<f64>>(mut ln_w: F, k: f64) -> Result<f64> {
    const SCAN: usize = 64;
    if k == 0.0 {
        return Ok(0.0);
    }
    let h = k / SCAN as f64;
    let mut prev = ln_w(0.0)?;
    let mut slope: f64 = 0.0;
    for i in 1..=SCAN {
        let v = ln_w(i as f64 * h)?;
        slope = slope.max((v - prev).abs() / h);
        prev = v;
    }
    Ok(slope)
}

/// Minimum panel count so that each 16-point panel sees at most one period of
/// `|S|²` and at most a factor `e⁴` of growth in the spectral weight.
fn panels_for(k: f64, span: f64, log_slope: f64) -> usize {
    let oscillation = (span * k).ceil();
    let growth = (k * log_slope / 4.0).ceil();
    oscillation.max(growth).max(1.0) as usize
}

/// Nodes and the spectral weights `ω²/|M_c[g]|²` on them for one cut-off.
#[derive(Debug, Clone)]
pub struct CutoffKernel {
    pub nodes: NodeSet,
    pub weights: Vec<f64>,
}

impl CutoffKernel {
    pub fn build(
        c: f64,
        weight: &WeightSpec,
        error: &DensitySpec,
        k: f64,
        span: f64,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::argument(format!("cut-off must be positive and finite, got {k}")));
        }
        rule.validate()?;
        let slope = max_log_slope(|t| ln_spectral_weight(c, weight, error, t), k)?;
        let nodes = rule.nodes_with_min_panels(k, panels_for(k, span, slope));
        let weights = nodes
            .t
            .iter()
            .map(|&t| {
                let w = ln_spectral_weight(c, weight, error, t)?.exp();
                if w.is_finite() {
                    Ok(w)
                } else {
                    Err(Error::Numeric {
                        t,
                        what: "spectral weight overflows".into(),
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { nodes, weights })
    }

    /// `2 Σ_i w_i · weight_i · f(t_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for ((t, w), sw) in self.nodes.iter().zip(&self.weights) {
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::Numeric {
                    t,
                    what: format!("integrand evaluated to {v}"),
                });
            }
            acc += w * sw * v;
        }
        let out = 2.0 * acc;
        if !out.is_finite() {
            return Err(Error::Numeric {
                t: self.nodes.t.last().copied().unwrap_or(0.0),
                what: "integral overflows".into(),
            });
        }
        Ok(out)
    }
}

fn theta_prepared(
    prepared: &PreparedSample,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let kernel = CutoffKernel::build(c, weight, error, k, prepared.span, rule)?;
    kernel.integrate(|t| prepared.pair_mean(t))
}

/// `theta_hat_k`. Real, possibly negative; no clipping is applied here.
pub fn estimate_theta(
    sample: &Sample,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    weight.validate()?;
    error.check_exponent(c)?;
    let prepared = PreparedSample::new(sample, c)?;
    theta_prepared(&prepared, c, weight, error, k, rule)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub k: f64,
    pub theta_hat: f64,
    /// `max(theta_hat, 0)`, the displayed value.
    pub theta_hat_clipped: f64,
}

/// `theta_hat_k` over a cut-off grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationReport {
    pub per_k: Vec<CurvePoint>,
    pub c: f64,
    pub weight: WeightSpec,
    pub error_spec: DensitySpec,
}

impl EstimationReport {
    pub fn grid(&self) -> Vec<f64> {
        self.per_k.iter().map(|p| p.k).collect()
    }

    pub fn theta_hats(&self) -> Vec<f64> {
        self.per_k.iter().map(|p| p.theta_hat).collect()
    }

    pub fn theta_at(&self, k: f64) -> Option<f64> {
        self.per_k.iter().find(|p| p.k == k).map(|p| p.theta_hat)
    }
}

pub fn estimate_curve(
    sample: &Sample,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    grid: &KGrid,
    rule: &QuadratureRule,
) -> Result<EstimationReport> {
    weight.validate()?;
    error.check_exponent(c)?;
    let prepared = PreparedSample::new(sample, c)?;
    let per_k = grid
        .points()
        .iter()
        .map(|&k| {
            let theta_hat = theta_prepared(&prepared, c, weight, error, k, rule).map_err(|e| e.at_cutoff(k))?;
            Ok(CurvePoint {
                k,
                theta_hat,
                theta_hat_clipped: theta_hat.max(0.0),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimationReport {
        per_k,
        c,
        weight: *weight,
        error_spec: *error,
    })
}
