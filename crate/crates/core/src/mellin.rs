//! Mellin transforms: empirical, closed-form and by quadrature.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::quad::gauss_legendre_composite;

/// Carrier for `M_c[h](t)` values.
pub type ComplexValue = Complex64;

/// `y^{c-1+2πit}`, evaluated in polar form from `ln y`.
pub fn mellin_power(y: f64, c: f64, t: f64) -> Result<Complex64> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::domain(format!("mellin power needs y > 0, got {y}")));
    }
    Ok(mellin_power_ln(y.ln(), c, t))
}

/// `exp((c-1) ln y) * (cos(2πt ln y), sin(2πt ln y))`.
#[inline]
pub fn mellin_power_ln(ln_y: f64, c: f64, t: f64) -> Complex64 {
    let modulus = ((c - 1.0) * ln_y).exp();
    let (s, co) = (2.0 * PI * t * ln_y).sin_cos();
    Complex64::new(modulus * co, modulus * s)
}

/// `n^{-1} Σ Y_j^{c-1+2πit}`, unbiased for `M_c[f_Y](t)`.
pub fn empirical_mellin(sample: &[f64], c: f64, t: f64) -> Result<Complex64> {
    if sample.is_empty() {
        return Err(Error::argument("empirical Mellin transform of an empty sample"));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for &y in sample {
        acc += mellin_power(y, c, t)?;
    }
    Ok(acc / sample.len() as f64)
}

/// Closed-form transform of a catalog law.
pub fn analytic_mellin(spec: &DensitySpec, c: f64, t: f64) -> Result<Complex64> {
    spec.mellin(c, t)
}

/// `∫_a^b h(x) x^{c-1+2πit} dx` by composite Gauss–Legendre in `u = ln x`.
///
/// With `a = 0` the lower end is pushed down panel by panel until the
/// contributions are negligible against the running total.
pub fn numeric_mellin<F: Fn(f64) -> f64>(density: F, c: f64, t: f64, truncation: (f64, f64)) -> Result<Complex64> {
    let (a, b) = truncation;
    if !(a >= 0.0 && b > a && b.is_finite()) {
        return Err(Error::argument(format!(
            "truncation interval must satisfy 0 <= a < b < inf, got [{a}, {b}]"
        )));
    }
    // panel width in u: small enough for both curvature and the 2πt oscillation
    let width = 0.25f64.min(1.0 / (1.0 + 2.0 * PI * t.abs()));
    let integrate = |u_lo: f64, u_hi: f64| -> Result<Complex64> {
        let panels = ((u_hi - u_lo) / width).ceil().max(1.0) as usize;
        let nodes = gauss_legendre_composite(u_lo, u_hi, panels);
        let mut acc = Complex64::new(0.0, 0.0);
        for (u, w) in nodes.iter() {
            let x = u.exp();
            let h = density(x);
            if !h.is_finite() {
                return Err(Error::Numeric {
                    t,
                    what: format!("density evaluated to {h} at x = {x}"),
                });
            }
            if h != 0.0 {
                // dx = x du
                acc += mellin_power_ln(u, c + 1.0, t) * (w * h);
            }
        }
        Ok(acc)
    };
    let u_hi = b.ln();
    let total = if a > 0.0 {
        integrate(a.ln(), u_hi)?
    } else {
        // march towards zero in blocks of 4 units of ln x
        let mut total = Complex64::new(0.0, 0.0);
        let mut upper = u_hi;
        let mut quiet = 0;
        while quiet < 3 && upper > u_hi - 745.0 {
            let lower = upper - 4.0;
            let block = integrate(lower, upper)?;
            total += block;
            if block.norm() <= 1e-17 * total.norm().max(f64::MIN_POSITIVE) {
                quiet += 1;
            } else {
                quiet = 0;
            }
            upper = lower;
        }
        total
    };
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(Error::Numeric {
            t,
            what: "non-finite Mellin quadrature".into(),
        });
    }
    Ok(total)
}

/// `numeric_mellin` of a catalog law's pdf; the point mass has none.
pub fn numeric_mellin_of(spec: &DensitySpec, c: f64, t: f64, truncation: (f64, f64)) -> Result<Complex64> {
    if spec.pdf(1.0).is_none() {
        return Err(Error::domain(format!("{spec} has no density to integrate")));
    }
    let spec = *spec;
    numeric_mellin(move |x| spec.pdf(x).unwrap_or(0.0), c, t, truncation)
}
