//! Deterministic 1-D quadrature on symmetric intervals and sup-norm scans.
//!
//! Every integrand in this crate is even in `t` (conjugation symmetry of the
//! Mellin transform), so the only integral primitive over `[-k, k]` is
//! [`integrate_even`], which integrates over `[0, k]` and doubles.
//!
//! The Gauss–Legendre scheme is composite: `[0, k]` is split into equal
//! panels, each carrying a 16-point rule. Callers that know their integrand
//! oscillates or grows quickly can ask for a minimum number of panels.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points per Gauss–Legendre panel.
pub const GL_ORDER: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    GaussLegendre,
    CompositeSimpson,
}

/// Discretisation of `∫_0^k`. Missing fields take their default values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureRule {
    pub scheme: Scheme,
    pub nodes_per_unit: u32,
    pub min_nodes: u32,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussLegendre,
            nodes_per_unit: 16,
            min_nodes: 32,
        }
    }
}

impl QuadratureRule {
    pub fn gauss_legendre(nodes_per_unit: u32, min_nodes: u32) -> Self {
        Self {
            scheme: Scheme::GaussLegendre,
            nodes_per_unit,
            min_nodes,
        }
    }

    pub fn simpson(nodes_per_unit: u32, min_nodes: u32) -> Self {
        Self {
            scheme: Scheme::CompositeSimpson,
            nodes_per_unit,
            min_nodes,
        }
    }

    /// Same rule with twice the node density.
    pub fn refined(&self) -> Self {
        Self {
            nodes_per_unit: self.nodes_per_unit * 2,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nodes_per_unit == 0 || self.min_nodes == 0 {
            return Err(Error::argument(
                "quadrature rule needs positive nodes_per_unit and min_nodes",
            ));
        }
        Ok(())
    }

    /// Nominal node count on `[0, k]`: `max(min_nodes, ceil(nodes_per_unit * k))`.
    pub fn node_count(&self, k: f64) -> usize {
        let per_unit = (f64::from(self.nodes_per_unit) * k).ceil() as usize;
        per_unit.max(self.min_nodes as usize)
    }

    /// Nodes and weights on `[0, k]`.
    pub fn nodes(&self, k: f64) -> NodeSet {
        self.nodes_with_min_panels(k, 1)
    }

    /// Nodes and weights on `[0, k]` with at least `min_panels` panels.
    pub fn nodes_with_min_panels(&self, k: f64, min_panels: usize) -> NodeSet {
        let count = self.node_count(k);
        match self.scheme {
            Scheme::GaussLegendre => {
                let panels = count.div_ceil(GL_ORDER).max(min_panels).max(1);
                gauss_legendre_composite(0.0, k, panels)
            }
            Scheme::CompositeSimpson => {
                let mut intervals = count.max(min_panels * GL_ORDER);
                if intervals % 2 == 1 {
                    intervals += 1;
                }
                simpson_composite(0.0, k, intervals)
            }
        }
    }
}

/// Quadrature nodes `t` with weights `w` such that `∫_a^b f ≈ Σ w f(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    pub t: Vec<f64>,
    pub w: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.t.iter().copied().zip(self.w.iter().copied())
    }

    /// `Σ w f(t)`, failing on the first non-finite evaluation.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (t, w) in self.iter() {
            let v = f(t);
            if !v.is_finite() {
                return Err(Error::Numeric {
                    t,
                    what: format!("integrand evaluated to {v}"),
                });
            }
            acc += w * v;
        }
        Ok(acc)
    }
}

/// 16-point Gauss–Legendre nodes/weights on `[-1, 1]`, positive half only
/// (the rule is symmetric).
fn gl_reference() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| legendre_roots(GL_ORDER))
}

/// Positive roots of `P_n` with their weights, by Newton iteration from the
/// Tricomi initial guess.
fn legendre_roots(n: usize) -> Vec<(f64, f64)> {
    let nf = n as f64;
    let mut out = Vec::with_capacity(n / 2 + 1);
    for i in 1..=n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 - 0.25) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss–Legendre nodes on `[a, b]` with `panels` equal panels.
pub fn gauss_legendre_composite(a: f64, b: f64, panels: usize) -> NodeSet {
    let reference = gl_reference();
    let h = (b - a) / panels as f64;
    let mut t = Vec::with_capacity(panels * GL_ORDER);
    let mut w = Vec::with_capacity(panels * GL_ORDER);
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        // ascending order within the panel
        for &(x, wx) in reference.iter() {
            t.push(mid - half * x);
            w.push(half * wx);
        }
        for &(x, wx) in reference.iter().rev() {
            t.push(mid + half * x);
            w.push(half * wx);
        }
    }
    NodeSet { t, w }
}

fn simpson_composite(a: f64, b: f64, intervals: usize) -> NodeSet {
    let h = (b - a) / intervals as f64;
    let mut t = Vec::with_capacity(intervals + 1);
    let mut w = Vec::with_capacity(intervals + 1);
    for i in 0..=intervals {
        t.push(a + i as f64 * h);
        let coef = if i == 0 || i == intervals {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        w.push(coef * h / 3.0);
    }
    NodeSet { t, w }
}

/// `∫_{-k}^{k} f(t) dt` for an even integrand.
pub fn integrate_even<F: FnMut(f64) -> f64>(f: F, k: f64, rule: &QuadratureRule) -> Result<f64> {
    check_cutoff(k)?;
    rule.validate()?;
    Ok(2.0 * rule.nodes(k).integrate(f)?)
}

/// `ln ∫_{-k}^{k} exp(ln_f(t)) dt` for an even integrand given in log form.
///
/// Used for integrands such as `|M_c[g]|^{-4}` of super-smooth error laws
/// whose values leave the `f64` range well before their integral does.
pub fn integrate_even_ln<F: FnMut(f64) -> f64>(
    mut ln_f: F,
    k: f64,
    rule: &QuadratureRule,
    min_panels: usize,
) -> Result<f64> {
    check_cutoff(k)?;
    rule.validate()?;
    let nodes = rule.nodes_with_min_panels(k, min_panels);
    let mut terms = Vec::with_capacity(nodes.len());
    for (t, w) in nodes.iter() {
        let v = ln_f(t);
        if v.is_nan() || v == f64::INFINITY {
            return Err(Error::Numeric {
                t,
                what: format!("log-integrand evaluated to {v}"),
            });
        }
        terms.push(w.ln() + v);
    }
    Ok(std::f64::consts::LN_2 + log_sum_exp(&terms))
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln(e^a + e^b)`.
pub fn log_add(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Supremum of an even function over `[-k, k]`.
///
/// Uniform scan of `[0, k]` with `max(256, scan_density * k)` points, then one
/// golden-section pass on the bracket around the best scan point.
pub fn sup_on_interval<F: FnMut(f64) -> f64>(mut f: F, k: f64, scan_density: u32) -> Result<f64> {
    check_cutoff(k)?;
    let mut eval = |t: f64| -> Result<f64> {
        let v = f(t);
        if v.is_nan() {
            return Err(Error::Numeric {
                t,
                what: "NaN during sup scan".into(),
            });
        }
        Ok(v)
    };
    if k == 0.0 {
        return eval(0.0);
    }
    let points = ((f64::from(scan_density) * k).ceil() as usize).max(256);
    let step = k / points as f64;
    let mut best_i = 0;
    let mut best = eval(0.0)?;
    for i in 1..=points {
        let v = eval(i as f64 * step)?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let lo = best_i.saturating_sub(1) as f64 * step;
    let hi = ((best_i + 1).min(points)) as f64 * step;
    let refined = golden_max(&mut eval, lo, hi, 60)?;
    Ok(best.max(refined))
}

fn golden_max<F: FnMut(f64) -> Result<f64>>(f: &mut F, mut a: f64, mut b: f64, iters: usize) -> Result<f64> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    for _ in 0..iters {
        if (b - a).abs() < 1e-14 * (1.0 + b.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        }
    }
    Ok(f1.max(f2))
}

fn check_cutoff(k: f64) -> Result<()> {
    if !(k.is_finite() && k >= 0.0) {
        return Err(Error::argument(format!("cut-off must be finite and >= 0, got {k}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn legendre_weights_sum_to_two() {
        let s: f64 = gl_reference().iter().map(|(_, w)| 2.0 * w).sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant() {
        let v = integrate_even(|_| 1.0, 3.0, &QuadratureRule::default()).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_cosine() {
        let v = integrate_even(|t| (2.0 * PI * t * LN_2).cos(), 0.5, &QuadratureRule::default()).unwrap();
        let want = (PI * LN_2).sin() / (PI * LN_2);
        assert!((v - want).abs() < 1e-13);
        assert!((want - 0.377_245).abs() < 1e-6);
    }

    #[test]
    fn polynomial_exactness() {
        let v = integrate_even(|t| t * t, 2.0, &QuadratureRule::default()).unwrap();
        assert!((v - 16.0 / 3.0).abs() < 1e-10);
        let v = integrate_even(|t| t.powi(30), 1.0, &QuadratureRule::gauss_legendre(1, 16)).unwrap();
        assert!((v - 2.0 / 31.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_agrees() {
        let rule = QuadratureRule::simpson(64, 64);
        let v = integrate_even(|t| (-t * t).exp(), 2.0, &rule).unwrap();
        let g = integrate_even(|t| (-t * t).exp(), 2.0, &QuadratureRule::default()).unwrap();
        assert!((v - g).abs() < 1e-8);
    }

    #[test]
    fn non_finite_reports_node() {
        let err = integrate_even(
            |t| if t > 0.5 { f64::NAN } else { 1.0 },
            1.0,
            &QuadratureRule::default(),
        )
        .unwrap_err();
        match err {
            Error::Numeric { t, .. } => assert!(t > 0.5),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn node_count_rule() {
        let r = QuadratureRule::default();
        assert_eq!(r.node_count(1.0), 32);
        assert_eq!(r.node_count(3.0), 48);
        assert_eq!(r.nodes(3.0).len(), 48);
        assert_eq!(r.nodes_with_min_panels(1.0, 10).len(), 160);
    }

    #[test]
    fn log_integral_matches_linear() {
        let rule = QuadratureRule::default();
        let lin = integrate_even(|t| (3.0 * t * t).exp(), 1.5, &rule).unwrap();
        let ln = integrate_even_ln(|t| 3.0 * t * t, 1.5, &rule, 1).unwrap();
        assert!((ln.exp() - lin).abs() < 1e-12 * lin);
    }

    #[test]
    fn log_integral_beyond_f64() {
        // ∫_{-k}^{k} e^{a t} over the even extension is 2(e^{ak}-1)/a
        let a = 800.0;
        let k = 1.0;
        let rule = QuadratureRule::default();
        let ln = integrate_even_ln(|t| a * t, k, &rule, 400).unwrap();
        let want = LN_2 + a * k - a.ln();
        assert!((ln - want).abs() < 1e-9, "{ln} vs {want}");
    }

    #[test]
    fn sup_constant() {
        assert_eq!(sup_on_interval(|_| 5.0, 1.0, 256).unwrap(), 5.0);
    }

    #[test]
    fn sup_increasing_endpoint() {
        let v = sup_on_interval(|t| (2.25 + 4.0 * PI * PI * t * t).sqrt(), 1.0, 256).unwrap();
        let want = (2.25 + 4.0 * PI * PI).sqrt();
        assert!((v - want).abs() < 1e-12);
        assert!((v - 6.459_753_7).abs() < 1e-6);
    }

    #[test]
    fn sup_boundary_at_zero() {
        assert_eq!(sup_on_interval(|t| -t * t, 1.0, 256).unwrap(), 0.0);
    }

    #[test]
    fn sup_interior_peak() {
        let v = sup_on_interval(|t| -(t - 0.3337).powi(2), 1.0, 256).unwrap();
        assert!(v.abs() < 1e-20);
    }

    #[test]
    fn log_sum_exp_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_add(0.0, 0.0) - LN_2).abs() < 1e-15);
    }
}
