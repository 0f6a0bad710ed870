//! Quantities computed from the true laws: `θ`, `θ_k`, `Λ(k)`, the literal
//! double-sum estimator, the `U_k`/`W_k` decomposition and the MSE bound.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::adaptive::{error_constant_cg, ln_delta_four, sigma_fg};
use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::estimator::{estimate_theta, ln_spectral_weight, max_log_slope, CutoffKernel};
use crate::mellin::mellin_power_ln;
use crate::quad::{gauss_legendre_composite, integrate_even_ln, QuadratureRule};
use crate::sample::Sample;
use crate::simkit::rng::draw_replicate;
use crate::summary;
use crate::weight::WeightSpec;

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// First truncation point of the tail search.
const T_START: f64 = 8.0;
/// Beyond this the tail is declared non-convergent.
const T_LIMIT: f64 = 1.0 * (1u64 << 32) as f64;

/// `|M_c[f](t)|² ω²(t)`.
pub fn signal_integrand(signal: &DensitySpec, c: f64, weight: &WeightSpec, t: f64) -> Result<f64> {
    Ok(signal.mellin(c, t)?.norm_sqr() * weight.weight_sq(c, t)?)
}

fn check_integrable(signal: &DensitySpec, c: f64, weight: &WeightSpec) -> Result<()> {
    weight.validate()?;
    signal.check_exponent(c)?;
    if *signal == DensitySpec::NoError {
        return Err(Error::Domain("θ is infinite for the point mass".into()));
    }
    if let Some(p) = signal.ordinary_decay() {
        // integrand ~ |t|^{2a - 2p}
        if 2.0 * weight.exponent() - 2.0 * p >= -1.0 {
            return Err(Error::Domain(format!(
                "|M_c[{signal}]|² ω² is not integrable for weight {weight}"
            )));
        }
    }
    Ok(())
}

fn integrate_on(signal: &DensitySpec, c: f64, weight: &WeightSpec, a: f64, b: f64, panels: usize) -> Result<f64> {
    let nodes = gauss_legendre_composite(a, b, panels);
    let mut acc = 0.0;
    for (t, w) in nodes.iter() {
        acc += w * signal_integrand(signal, c, weight, t)?;
    }
    Ok(acc)
}

/// `∫_ℝ |M_c[f](t)|² ω²(t) dt`.
///
/// Integrates `[0, T]` with `T` doubling from 8; each step adds a power-law
/// tail estimate `T h(T) / (p - 1)`, `p` fitted from `h(T/2)/h(T)`, and the
/// search stops once two successive totals agree within `tolerance`.
pub fn true_theta(signal: &DensitySpec, c: f64, weight: &WeightSpec, tolerance: f64) -> Result<f64> {
    check_integrable(signal, c, weight)?;
    if !(tolerance > 0.0) {
        return Err(Error::Argument("tolerance must be positive".into()));
    }
    let mut t_hi = T_START;
    let mut body = integrate_on(signal, c, weight, 0.0, t_hi, 32)?;
    let tail = |t: f64| -> Result<f64> {
        let h = signal_integrand(signal, c, weight, t)?;
        if h == 0.0 {
            return Ok(0.0);
        }
        let p = (signal_integrand(signal, c, weight, 0.5 * t)? / h).log2();
        Ok(if p > 1.05 { t * h / (p - 1.0) } else { 0.0 })
    };
    let mut prev = 2.0 * (body + tail(t_hi)?);
    loop {
        body += integrate_on(signal, c, weight, t_hi, 2.0 * t_hi, 16)?;
        t_hi *= 2.0;
        let total = 2.0 * (body + tail(t_hi)?);
        if !total.is_finite() {
            return Err(Error::Numeric {
                t: t_hi,
                what: "θ quadrature overflows".into(),
            });
        }
        if (total - prev).abs() < tolerance {
            return Ok(total);
        }
        if t_hi > T_LIMIT {
            return Err(Error::Numeric {
                t: t_hi,
                what: format!("tail of θ did not converge (last change {:e})", total - prev),
            });
        }
        prev = total;
    }
}

/// `∫_0^∞ f(x)² x^{2c-1} dx`, the unit-weight `θ` by Plancherel, where a
/// closed form is known.
pub fn closed_form_theta(signal: &DensitySpec, c: f64, weight: &WeightSpec) -> Option<f64> {
    if *weight != WeightSpec::Unit || signal.check_exponent(c).is_err() {
        return None;
    }
    match *signal {
        // ∫_0^1 4x² x^{2c-1}
        DensitySpec::Beta21 => Some(4.0 / (2.0 * c + 2.0)),
        // ∫_1^∞ x^{-4} x^{2c-1}
        DensitySpec::Pareto1 => Some(1.0 / (4.0 - 2.0 * c)),
        DensitySpec::Uniform01 => Some(1.0 / (2.0 * c)),
        DensitySpec::LogNormal { mu, sigma } => {
            let b = 2.0 * c - 2.0;
            Some((b * mu + 0.25 * b * b * sigma * sigma).exp() / (2.0 * sigma * PI.sqrt()))
        }
        DensitySpec::NoError => None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaK {
    pub theta_k: f64,
    /// `(θ - θ_k)²`
    pub bias_sq: f64,
}

/// `θ_k = ∫_{-k}^{k} |M_c[f]|² ω²` alone.
pub fn theta_k(signal: &DensitySpec, c: f64, weight: &WeightSpec, k: f64, rule: &QuadratureRule) -> Result<f64> {
    check_integrable(signal, c, weight)?;
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::Argument(format!("cut-off must be finite and >= 0, got {k}")));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let nodes = rule.nodes_with_min_panels(k, (4.0 * k).ceil() as usize);
    let mut acc = 0.0;
    for (t, w) in nodes.iter() {
        acc += w * signal_integrand(signal, c, weight, t)?;
    }
    Ok(2.0 * acc)
}

pub fn theta_k_and_bias(
    signal: &DensitySpec,
    c: f64,
    weight: &WeightSpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<ThetaK> {
    let theta = true_theta(signal, c, weight, DEFAULT_TOLERANCE)?;
    let theta_k = theta_k(signal, c, weight, k, rule)?;
    Ok(ThetaK {
        theta_k,
        bias_sq: (theta - theta_k).powi(2),
    })
}

/// `Λ(k) = ∫_{-k}^{k} |M_c[f]|² ω⁴ / |M_c[g]|²`.
pub fn lambda(
    signal: &DensitySpec,
    error: &DensitySpec,
    c: f64,
    weight: &WeightSpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let ln_f = |t: f64| -> Result<f64> {
        Ok(2.0 * signal.ln_mellin_modulus(c, t)?
            + weight.ln_weight_sq(c, t)?
            + ln_spectral_weight(c, weight, error, t)?)
    };
    let slope = max_log_slope(ln_f, k)?;
    let mut failure = None;
    let out = integrate_even_ln(
        |t| match ln_f(t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        k,
        rule,
        ((k * slope / 4.0).ceil() as usize)
            .max((4.0 * k).ceil() as usize)
            .max(1),
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out.exp()),
    }
}

fn log_span(sample: &Sample) -> f64 {
    let (lo, hi) = sample
        .values()
        .iter()
        .map(|y| y.ln())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), l| (lo.min(l), hi.max(l)));
    hi - lo
}

/// The estimator as the literal average over ordered pairs `j ≠ l`, on the
/// same quadrature nodes as the fast path.
pub fn theta_hat_double_sum(
    sample: &Sample,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Argument(format!("need n ≥ 2 observations, got {n}")));
    }
    let kernel = CutoffKernel::build(c, weight, error, k, log_span(sample), rule)?;
    let ln_y: Vec<f64> = sample.values().iter().map(|y| y.ln()).collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for ((t, w), sw) in kernel.nodes.iter().zip(&kernel.weights) {
        let a: Vec<Complex64> = ln_y.iter().map(|&l| mellin_power_ln(l, c, t)).collect();
        let mut pairs = Complex64::new(0.0, 0.0);
        for (j, aj) in a.iter().enumerate() {
            for (l, al) in a.iter().enumerate() {
                if j != l {
                    pairs += aj * al.conj();
                }
            }
        }
        acc += pairs * (w * sw);
    }
    Ok(2.0 * acc.re / (n as f64 * (n as f64 - 1.0)))
}

/// Density of `Y = X U` at `y`, `∫ f(e^u) g(y e^{-u}) du`.
pub fn product_density(signal: &DensitySpec, error: &DensitySpec, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Ok(0.0);
    }
    match (signal, error) {
        (DensitySpec::NoError, DensitySpec::NoError) => return Err(Error::Domain("point mass has no density".into())),
        (DensitySpec::NoError, g) => return Ok(g.pdf(y).unwrap_or(0.0)),
        (f, DensitySpec::NoError) => return Ok(f.pdf(y).unwrap_or(0.0)),
        _ => {}
    }
    let ly = y.ln();
    let (s_lo, s_hi) = effective_log_range(signal);
    let (e_lo, e_hi) = effective_log_range(error);
    // u in the signal range, ly - u in the error range
    let lo = s_lo.max(ly - e_hi);
    let hi = s_hi.min(ly - e_lo);
    if !(hi > lo) {
        return Ok(0.0);
    }
    let panels = ((hi - lo) / 0.5).ceil().max(1.0) as usize;
    let nodes = gauss_legendre_composite(lo, hi, panels);
    let mut acc = 0.0;
    for (u, w) in nodes.iter() {
        let fx = signal.pdf(u.exp()).unwrap_or(0.0);
        if fx != 0.0 {
            acc += w * fx * error.pdf((ly - u).exp()).unwrap_or(0.0);
        }
    }
    Ok(acc)
}

/// `ln` of an interval outside of which the law's contribution to a
/// log-scale convolution integral is negligible.
fn effective_log_range(spec: &DensitySpec) -> (f64, f64) {
    match *spec {
        // density 2x: mass below e^-60 is e^-120
        DensitySpec::Beta21 => (-60.0, 0.0),
        DensitySpec::Pareto1 => (0.0, 60.0),
        DensitySpec::Uniform01 => (f64::NEG_INFINITY, 0.0),
        DensitySpec::LogNormal { mu, sigma } => (mu - 40.0 * sigma, mu + 40.0 * sigma),
        DensitySpec::NoError => (0.0, 0.0),
    }
}

/// Terms of `θ̂_k - θ = U_k + 2 W_k - (θ - θ_k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decomposition {
    pub theta_hat: f64,
    pub theta: f64,
    /// `θ_k` on the estimator's nodes
    pub theta_k: f64,
    pub u_k: f64,
    pub w_k: f64,
    /// `θ̂_k - θ - (U_k + 2 W_k - (θ - θ_k))`
    pub residual: f64,
}

/// Computes `U_k` by its double sum and `W_k` by its single sum, with
/// `M_c[f_Y] = M_c[f] M_c[g]` from the closed forms.
#[allow(clippy::too_many_arguments)]
pub fn decomposition_check(
    sample: &Sample,
    signal: &DensitySpec,
    error: &DensitySpec,
    c: f64,
    weight: &WeightSpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<Decomposition> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::Argument(format!("need n ≥ 2 observations, got {n}")));
    }
    let theta = true_theta(signal, c, weight, DEFAULT_TOLERANCE)?;
    let theta_hat = estimate_theta(sample, c, weight, error, k, rule)?;
    let kernel = CutoffKernel::build(c, weight, error, k, log_span(sample), rule)?;
    let ln_y: Vec<f64> = sample.values().iter().map(|y| y.ln()).collect();
    let nf = n as f64;
    let (mut u_k, mut w_k, mut theta_k) = (0.0, 0.0, 0.0);
    for ((t, w), sw) in kernel.nodes.iter().zip(&kernel.weights) {
        let m = signal.mellin(c, t)? * error.mellin(c, t)?;
        let centred: Vec<Complex64> = ln_y.iter().map(|&l| mellin_power_ln(l, c, t) - m).collect();
        let mut pairs = Complex64::new(0.0, 0.0);
        for (j, dj) in centred.iter().enumerate() {
            for (l, dl) in centred.iter().enumerate() {
                if j != l {
                    pairs += dj * dl.conj();
                }
            }
        }
        let linear: f64 = centred.iter().map(|d| (d * m.conj()).re).sum();
        u_k += w * sw * pairs.re / (nf * (nf - 1.0));
        w_k += w * sw * linear / nf;
        theta_k += w * sw * m.norm_sqr();
    }
    let (u_k, w_k, theta_k) = (2.0 * u_k, 2.0 * w_k, 2.0 * theta_k);
    Ok(Decomposition {
        theta_hat,
        theta,
        theta_k,
        u_k,
        w_k,
        residual: theta_hat - theta - (u_k + 2.0 * w_k - (theta - theta_k)),
    })
}

/// Right-hand side of the MSE bound `bias² + 2 c_g σ² (Δ_ψ/n² + Λ/n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MseBound {
    pub bias_sq: f64,
    pub c_g: f64,
    pub sigma_fg: f64,
    pub delta_four: f64,
    pub lambda: f64,
    pub total: f64,
}

#[allow(clippy::too_many_arguments)]
pub fn mse_bound(
    signal: &DensitySpec,
    error: &DensitySpec,
    c: f64,
    weight: &WeightSpec,
    k: f64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<MseBound> {
    let c_g = error_constant_cg(c, error)?;
    let sigma = sigma_fg(signal, error, c)?;
    let tk = theta_k_and_bias(signal, c, weight, k, rule)?;
    let delta_four = ln_delta_four(c, weight, error, k, rule)?.exp();
    let lambda = lambda(signal, error, c, weight, k, rule)?;
    let nf = n as f64;
    Ok(MseBound {
        bias_sq: tk.bias_sq,
        c_g,
        sigma_fg: sigma,
        delta_four,
        lambda,
        total: tk.bias_sq + 2.0 * c_g * sigma * sigma * (delta_four / (nf * nf) + lambda / nf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceBoundCheck {
    pub empirical_mse: f64,
    /// Monte Carlo standard error of `empirical_mse`.
    pub mse_std_error: f64,
    pub bound: MseBound,
    pub holds: bool,
}

/// Monte Carlo MSE of `θ̂_k` against [`mse_bound`]. Settings whose constants
/// diverge return the moment or domain error that makes the bound undefined.
#[allow(clippy::too_many_arguments)]
pub fn variance_bound_check(
    signal: &DensitySpec,
    error: &DensitySpec,
    c: f64,
    weight: &WeightSpec,
    k: f64,
    n: usize,
    replications: usize,
    seed: u64,
    rule: &QuadratureRule,
) -> Result<VarianceBoundCheck> {
    let bound = mse_bound(signal, error, c, weight, k, n, rule)?;
    let theta = true_theta(signal, c, weight, DEFAULT_TOLERANCE)?;
    let sq_err = (0..replications as u64)
        .map(|r| {
            let y = draw_replicate(signal, error, seed, n, r)?;
            Ok((estimate_theta(&y, c, weight, error, k, rule)? - theta).powi(2))
        })
        .collect::<Result<Vec<f64>>>()?;
    let empirical_mse = summary::mean(&sq_err);
    Ok(VarianceBoundCheck {
        empirical_mse,
        mse_std_error: summary::std_error(&sq_err),
        holds: empirical_mse <= bound.total,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 0.5;
    const LN: DensitySpec = DensitySpec::STANDARD_LOG_NORMAL;

    fn rule() -> QuadratureRule {
        QuadratureRule::default()
    }

    #[test]
    fn theta_beta21() {
        let v = true_theta(&DensitySpec::Beta21, C, &WeightSpec::Unit, DEFAULT_TOLERANCE).unwrap();
        assert!((v - 4.0 / 3.0).abs() < 1e-8, "{v}");
    }

    #[test]
    fn theta_lognormal() {
        let v = true_theta(&LN, C, &WeightSpec::Unit, DEFAULT_TOLERANCE).unwrap();
        let want = 0.25f64.exp() / (2.0 * PI.sqrt());
        assert!((v - want).abs() < 1e-10);
        assert!((v - 0.36221).abs() < 1e-5);
    }

    #[test]
    fn closed_forms_agree_with_quadrature() {
        for s in [
            DensitySpec::Beta21,
            DensitySpec::Pareto1,
            LN,
            DensitySpec::LogNormal { mu: 0.3, sigma: 0.7 },
        ] {
            let q = true_theta(&s, C, &WeightSpec::Unit, DEFAULT_TOLERANCE).unwrap();
            let cf = closed_form_theta(&s, C, &WeightSpec::Unit).unwrap();
            assert!((q - cf).abs() < 1e-8 * cf, "{s}: {q} vs {cf}");
        }
    }

    #[test]
    fn non_integrable_rejected() {
        let w = WeightSpec::Derivative { beta: 1 };
        assert!(true_theta(&DensitySpec::Beta21, C, &w, 1e-9).is_err());
        assert!(true_theta(&LN, C, &w, 1e-9).is_ok());
    }

    #[test]
    fn theta_k_arctan() {
        // ∫_{-1}^{1} 4/(2.25 + 4π²t²) dt = (8/(3π)) atan(4π/3)
        let v = theta_k(&DensitySpec::Beta21, C, &WeightSpec::Unit, 1.0, &rule()).unwrap();
        let want = 8.0 / (3.0 * PI) * (4.0 * PI / 3.0).atan();
        assert!((v - want).abs() < 1e-12, "{v} vs {want}");
    }

    #[test]
    fn theta_k_at_zero() {
        let tk = theta_k_and_bias(&DensitySpec::Beta21, C, &WeightSpec::Unit, 0.0, &rule()).unwrap();
        assert_eq!(tk.theta_k, 0.0);
        assert!((tk.bias_sq - 16.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn bias_shrinks() {
        let mut prev = f64::INFINITY;
        for k in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let b = theta_k_and_bias(&LN, C, &WeightSpec::Unit, k, &rule()).unwrap().bias_sq;
            assert!(b <= prev);
            prev = b;
        }
        assert!(prev < 1e-20);
    }

    #[test]
    fn lambda_no_error_is_theta_k() {
        let l = lambda(
            &DensitySpec::Beta21,
            &DensitySpec::NoError,
            C,
            &WeightSpec::Unit,
            1.0,
            &rule(),
        )
        .unwrap();
        let t = theta_k(&DensitySpec::Beta21, C, &WeightSpec::Unit, 1.0, &rule()).unwrap();
        assert!((l - t).abs() < 1e-12);
    }

    #[test]
    fn double_sum_matches_fast_path() {
        let y = Sample::new(vec![0.3, 1.7, 2.2, 0.9]).unwrap();
        let a = theta_hat_double_sum(&y, C, &WeightSpec::Unit, &DensitySpec::Pareto1, 1.2, &rule()).unwrap();
        let b = estimate_theta(&y, C, &WeightSpec::Unit, &DensitySpec::Pareto1, 1.2, &rule()).unwrap();
        assert!((a - b).abs() < 1e-12 * b.abs());
    }

    #[test]
    fn decomposition_all_ones() {
        let y = Sample::new(vec![1.0; 6]).unwrap();
        let d = decomposition_check(
            &y,
            &DensitySpec::Beta21,
            &DensitySpec::NoError,
            C,
            &WeightSpec::Unit,
            1.0,
            &rule(),
        )
        .unwrap();
        assert!(d.residual.abs() < 1e-10);
        assert!((d.theta_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn decomposition_beta_pareto() {
        let y = draw_replicate(&DensitySpec::Beta21, &DensitySpec::Pareto1, 3, 50, 0).unwrap();
        let d = decomposition_check(
            &y,
            &DensitySpec::Beta21,
            &DensitySpec::Pareto1,
            C,
            &WeightSpec::Unit,
            0.8,
            &rule(),
        )
        .unwrap();
        assert!(d.residual.abs() < 1e-6, "{d:?}");
    }

    #[test]
    fn product_density_beta_pareto() {
        // f_Y(y) = 2y/3 on (0,1], 2/(3y²) beyond
        for y in [0.2, 0.7, 1.5, 4.0] {
            let v = product_density(&DensitySpec::Beta21, &DensitySpec::Pareto1, y).unwrap();
            let want = if y <= 1.0 { 2.0 * y / 3.0 } else { 2.0 / (3.0 * y * y) };
            assert!((v - want).abs() < 1e-12, "{y}: {v} vs {want}");
        }
    }

    #[test]
    fn product_density_uniform_uniform() {
        let v = product_density(&DensitySpec::Uniform01, &DensitySpec::Uniform01, 0.3).unwrap();
        assert!((v + 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn bound_monotone_in_k() {
        let b1 = mse_bound(
            &DensitySpec::Beta21,
            &DensitySpec::Pareto1,
            C,
            &WeightSpec::Unit,
            1.0,
            100,
            &rule(),
        )
        .unwrap();
        let b2 = mse_bound(
            &DensitySpec::Beta21,
            &DensitySpec::Pareto1,
            C,
            &WeightSpec::Unit,
            2.0,
            100,
            &rule(),
        )
        .unwrap();
        assert!(b2.delta_four >= b1.delta_four && b2.lambda >= b1.lambda);
        assert!(b2.bias_sq <= b1.bias_sq);
    }
}
