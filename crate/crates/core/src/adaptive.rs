//! Penalties and the Goldenshluger–Lepski choice of the cut-off.
//!
//! For super-smooth error laws `|M_c[g](t)|^{-4}` leaves the `f64` range
//! around `|t| ≈ 3`, long before anything downstream becomes meaningless, so
//! every penalty quantity is carried as a natural logarithm and only
//! exponentiated on output. An exponentiated value may be `+inf`; the
//! logarithm never is.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::estimator::{ln_spectral_weight, max_log_slope, EstimationReport};
use crate::quad::{integrate_even_ln, log_add, sup_on_interval, QuadratureRule};
use crate::sample::{KGrid, Sample};
use crate::weight::WeightSpec;

/// Scan density used for `Δ_∞`.
pub const SUP_SCAN_DENSITY: u32 = 256;

/// Relative jackknife spread above which `σ̂²` is reported as unstable.
pub const SIGMA_SPREAD_LIMIT: f64 = 10.0;

/// `ln(ω⁴(t) / |M_c[g](t)|⁴)`.
fn ln_quartic_weight(c: f64, weight: &WeightSpec, error: &DensitySpec, t: f64) -> Result<f64> {
    Ok(2.0 * ln_spectral_weight(c, weight, error, t)?)
}

/// `ln Δ_ψ(k)`, `Δ_ψ(k) = ∫_{-k}^{k} ω⁴/|M_c[g]|⁴`.
pub fn ln_delta_four(c: f64, weight: &WeightSpec, error: &DensitySpec, k: f64, rule: &QuadratureRule) -> Result<f64> {
    let slope = max_log_slope(|t| ln_quartic_weight(c, weight, error, t), k)?;
    let panels = ((k * slope / 4.0).ceil() as usize).max(1);
    // evaluate eagerly so that guard errors propagate instead of turning into NaN
    let mut failure = None;
    let out = integrate_even_ln(
        |t| match ln_quartic_weight(c, weight, error, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NEG_INFINITY
            }
        },
        k,
        rule,
        panels,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

pub fn delta_four(c: f64, weight: &WeightSpec, error: &DensitySpec, k: f64, rule: &QuadratureRule) -> Result<f64> {
    Ok(ln_delta_four(c, weight, error, k, rule)?.exp())
}

/// `ln Δ_∞(k)`, `Δ_∞(k) = sup_{|t|≤k} (ω(t)/|M_c[g](t)|)⁴`. At `k = 0` this is
/// the value at `t = 0`.
pub fn ln_delta_inf(c: f64, weight: &WeightSpec, error: &DensitySpec, k: f64) -> Result<f64> {
    let mut failure = None;
    let out = sup_on_interval(
        |t| match ln_quartic_weight(c, weight, error, t) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        },
        k,
        SUP_SCAN_DENSITY,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    out
}

pub fn delta_inf(c: f64, weight: &WeightSpec, error: &DensitySpec, k: f64) -> Result<f64> {
    Ok(ln_delta_inf(c, weight, error, k)?.exp())
}

/// `ω_k = 2k³ · max(1, Δ_∞(k)/n)`.
pub fn omega_rate(k: f64, n: usize, delta_inf_k: f64) -> f64 {
    2.0 * k.powi(3) * (delta_inf_k / n as f64).max(1.0)
}

fn ln_omega_rate(k: f64, n: usize, ln_delta_inf: f64) -> f64 {
    LN_2 + 3.0 * k.ln() + (ln_delta_inf - (n as f64).ln()).max(0.0)
}

/// `L(k) = max(log ω_k, log 2)`; keeps the penalty positive on grids below `k = 1`.
pub fn log_clamp(ln_omega: f64) -> f64 {
    ln_omega.max(LN_2)
}

/// Logarithmic inputs of one penalty row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyInputs {
    pub k: f64,
    pub n: usize,
    pub ln_delta_four: f64,
    pub ln_delta_inf: f64,
}

impl PenaltyInputs {
    pub fn from_values(k: f64, n: usize, delta_four: f64, delta_inf: f64) -> Self {
        Self {
            k,
            n,
            ln_delta_four: delta_four.ln(),
            ln_delta_inf: delta_inf.ln(),
        }
    }

    pub fn compute(
        c: f64,
        weight: &WeightSpec,
        error: &DensitySpec,
        k: f64,
        n: usize,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        Ok(Self {
            k,
            n,
            ln_delta_four: ln_delta_four(c, weight, error, k, rule)?,
            ln_delta_inf: ln_delta_inf(c, weight, error, k)?,
        })
    }

    pub fn ln_omega(&self) -> f64 {
        ln_omega_rate(self.k, self.n, self.ln_delta_inf)
    }

    /// `L(k)`.
    pub fn log_factor(&self) -> f64 {
        log_clamp(self.ln_omega())
    }

    /// `ln max(Δ_ψ, L Δ_∞)`.
    fn ln_delta_max(&self) -> f64 {
        let l = self.log_factor();
        self.ln_delta_four.max(l.ln() + self.ln_delta_inf)
    }

    /// `ln max(1, ω_k L max(2k, L) / n)`.
    fn ln_rho_inner(&self) -> f64 {
        let l = self.log_factor();
        (self.ln_omega() + l.ln() + (2.0 * self.k).max(l).ln() - (self.n as f64).ln()).max(0.0)
    }

    /// `ln ρ_{k,n}`.
    pub fn ln_rho(&self) -> f64 {
        self.log_factor().ln() + 2.0 * self.ln_rho_inner()
    }

    /// `ln V̄(k)`, `V̄(k) = ρ_{k,n} · max(Δ_ψ, L Δ_∞)`.
    pub fn ln_vbar(&self) -> f64 {
        self.ln_rho() + self.ln_delta_max()
    }

    /// `ln V(k)` for the constant term `cterm` (`c_g² σ²` or `2 σ̂² c_g²`).
    pub fn ln_penalty(&self, kappa: f64, cterm: f64) -> f64 {
        kappa.ln() + self.log_factor().ln() - 2.0 * (self.n as f64).ln()
            + self.ln_delta_max()
            + log_add(cterm.ln(), 2.0 * self.ln_rho_inner())
    }
}

/// `V̄(k) = ρ_{k,n} (Δ_ψ(k) ∨ L(k) Δ_∞(k))`.
pub fn vbar(k: f64, n: usize, delta_four: f64, delta_inf: f64) -> f64 {
    PenaltyInputs::from_values(k, n, delta_four, delta_inf).ln_vbar().exp()
}

/// Where the stochastic constant of the penalty comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PenaltyMode {
    /// Oracle `σ_{f,g} = max(1, E[Y^{2c-2}])`; constant term `c_g² σ²`.
    Partial { sigma_fg: f64 },
    /// Plug-in `σ̂² = 1 + n⁻¹ Σ Y^{4(c-1)}`; constant term `2 σ̂² c_g²`.
    Full { sigma_hat_sq: f64 },
}

impl PenaltyMode {
    pub fn constant_term(&self, c_g: f64) -> f64 {
        match *self {
            PenaltyMode::Partial { sigma_fg } => c_g * c_g * sigma_fg * sigma_fg,
            PenaltyMode::Full { sigma_hat_sq } => 2.0 * sigma_hat_sq * c_g * c_g,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PenaltyMode::Partial { .. } => "partial",
            PenaltyMode::Full { .. } => "full",
        }
    }
}

/// `V(k)` (partial) or `V̂(k)` (full).
pub fn penalty(inputs: &PenaltyInputs, mode: &PenaltyMode, c_g: f64, kappa: f64) -> Result<f64> {
    let cterm = mode.constant_term(c_g);
    if !cterm.is_finite() {
        return Err(Error::Moment(format!(
            "non-finite constant term {cterm} in the {} penalty",
            mode.label()
        )));
    }
    if kappa == 0.0 {
        return Ok(0.0);
    }
    Ok(inputs.ln_penalty(kappa, cterm).exp())
}

/// Plug-in `σ̂²` with its jackknife stability diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SigmaHat {
    pub value: f64,
    /// `n · range(leave-one-out σ̂²) / σ̂²`
    pub jackknife_spread: f64,
    pub unstable: bool,
}

pub fn sigma_hat_sq_diagnostics(sample: &Sample, c: f64) -> Result<SigmaHat> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::argument("σ̂² of an empty sample"));
    }
    let terms: Vec<f64> = sample
        .values()
        .iter()
        .map(|y| (4.0 * (c - 1.0) * y.ln()).exp())
        .collect();
    let value = 1.0 + terms.iter().sum::<f64>() / n as f64;
    let jackknife_spread = if n > 1 {
        let (lo, hi) = terms.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &a| {
            (lo.min(a), hi.max(a))
        });
        // σ̂²_{(-j)} = 1 + (Σa - a_j)/(n-1)
        n as f64 * ((hi - lo) / (n as f64 - 1.0)) / value
    } else {
        0.0
    };
    Ok(SigmaHat {
        value,
        jackknife_spread,
        unstable: !value.is_finite() || !(jackknife_spread <= SIGMA_SPREAD_LIMIT),
    })
}

/// `σ̂² = 1 + n⁻¹ Σ Y_j^{4(c-1)}`.
pub fn sigma_hat_sq(sample: &Sample, c: f64) -> Result<f64> {
    Ok(sigma_hat_sq_diagnostics(sample, c)?.value)
}

/// `c_g = max(1, ‖g‖_{L∞(x^{2c-1})} / ‖g‖_{L1(x^{2c-2})})`; 1 for the point mass.
pub fn error_constant_cg(c: f64, error: &DensitySpec) -> Result<f64> {
    if *error == DensitySpec::NoError {
        return Ok(1.0);
    }
    let sup = error
        .sup_weighted_pdf(2.0 * c - 1.0)
        .ok_or_else(|| Error::domain(format!("sup_x x^(2c-1) g(x) is unbounded for {error} at c = {c}")))?;
    let l1 = error
        .moment(2.0 * c - 2.0)
        .map_err(|_| Error::domain(format!("∫ x^(2c-2) g(x) dx diverges for {error} at c = {c}")))?;
    Ok((sup / l1).max(1.0))
}

/// `σ_{f,g} = max(1, E[Y^{2c-2}])` from the two laws.
pub fn sigma_fg(signal: &DensitySpec, error: &DensitySpec, c: f64) -> Result<f64> {
    let p = 2.0 * c - 2.0;
    Ok((signal.moment(p)? * error.moment(p)?).max(1.0))
}

/// `E[Y^{4(c-1)}]`, the target of `σ̂² - 1`.
pub fn fourth_moment_term(signal: &DensitySpec, error: &DensitySpec, c: f64) -> Result<f64> {
    let p = 4.0 * (c - 1.0);
    Ok(signal.moment(p)? * error.moment(p)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyRow {
    pub k: f64,
    pub ln_delta_four: f64,
    pub ln_delta_inf: f64,
    pub ln_omega_k: f64,
    /// `L(k) = max(log ω_k, log 2)`
    pub log_omega_clamped: f64,
    pub ln_vbar: f64,
    /// `ln V(k)`; `-inf` when `κ = 0`.
    pub ln_penalty: f64,
}

impl PenaltyRow {
    pub fn delta_four(&self) -> f64 {
        self.ln_delta_four.exp()
    }
    pub fn delta_inf(&self) -> f64 {
        self.ln_delta_inf.exp()
    }
    pub fn omega_k(&self) -> f64 {
        self.ln_omega_k.exp()
    }
    pub fn vbar(&self) -> f64 {
        self.ln_vbar.exp()
    }
    pub fn penalty(&self) -> f64 {
        self.ln_penalty.exp()
    }
}

/// Per-cut-off penalty quantities over a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyTable {
    pub rows: Vec<PenaltyRow>,
    pub kappa: f64,
    pub n: usize,
    pub mode: PenaltyMode,
    pub c_g: f64,
    /// Constant term inside the penalty.
    pub sigma_term: f64,
}

impl PenaltyTable {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        c: f64,
        weight: &WeightSpec,
        error: &DensitySpec,
        grid: &KGrid,
        n: usize,
        kappa: f64,
        mode: PenaltyMode,
        rule: &QuadratureRule,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::argument("penalty needs n >= 1"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::argument(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        weight.validate()?;
        error.check_exponent(c)?;
        let c_g = error_constant_cg(c, error)?;
        let inputs = grid
            .points()
            .iter()
            .map(|&k| PenaltyInputs::compute(c, weight, error, k, n, rule).map_err(|e| e.at_cutoff(k)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_inputs(&inputs, kappa, mode, c_g)
    }

    /// Assembles a table from precomputed `Δ` values (all with the same `n`,
    /// ascending in `k`).
    pub fn from_inputs(inputs: &[PenaltyInputs], kappa: f64, mode: PenaltyMode, c_g: f64) -> Result<Self> {
        let n = match inputs.first() {
            Some(i) => i.n,
            None => return Err(Error::argument("penalty table needs at least one cut-off")),
        };
        if inputs.iter().any(|i| i.n != n) {
            return Err(Error::argument("penalty inputs mix sample sizes"));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::argument(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        let sigma_term = mode.constant_term(c_g);
        if !sigma_term.is_finite() {
            return Err(Error::Moment(format!(
                "non-finite constant term in the {} penalty",
                mode.label()
            )));
        }
        let rows = inputs
            .iter()
            .map(|inputs| {
                let ln_omega_k = inputs.ln_omega();
                PenaltyRow {
                    k: inputs.k,
                    ln_delta_four: inputs.ln_delta_four,
                    ln_delta_inf: inputs.ln_delta_inf,
                    ln_omega_k,
                    log_omega_clamped: log_clamp(ln_omega_k),
                    ln_vbar: inputs.ln_vbar(),
                    ln_penalty: if kappa == 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        inputs.ln_penalty(kappa, sigma_term)
                    },
                }
            })
            .collect();
        Ok(Self {
            rows,
            kappa,
            n,
            mode,
            c_g,
            sigma_term,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.k).collect()
    }

    pub fn penalties(&self) -> Vec<f64> {
        self.rows.iter().map(PenaltyRow::penalty).collect()
    }

    /// Largest grid point with `V̄(k) ≤ n² V̄(k₀)`, where `k₀` is the smallest
    /// grid point `≥ 1`, or the largest grid point if there is none.
    pub fn m_upper(&self) -> f64 {
        m_upper_from_rows(&self.rows, self.n)
    }

    /// Checks positivity, monotonicity in `k` and `Δ_ψ ≤ 2k Δ_∞` on every row.
    pub fn check_invariants(&self) -> Result<()> {
        const REL: f64 = 1e-12;
        let mut problems = Vec::new();
        for r in &self.rows {
            let named = [
                ("delta_four", r.ln_delta_four),
                ("delta_inf", r.ln_delta_inf),
                ("omega_k", r.ln_omega_k),
                ("vbar", r.ln_vbar),
            ];
            for (name, v) in named {
                if !v.is_finite() {
                    problems.push(format!("k={}: {name} is not finite and positive (ln = {v})", r.k));
                }
            }
            if self.kappa > 0.0 && !r.ln_penalty.is_finite() {
                problems.push(format!("k={}: penalty is not finite and positive", r.k));
            }
            if !(r.log_omega_clamped >= LN_2) {
                problems.push(format!("k={}: L(k) below log 2", r.k));
            }
            if r.ln_delta_four > (2.0 * r.k).ln() + r.ln_delta_inf + REL {
                problems.push(format!(
                    "k={}: delta_four exceeds 2k·delta_inf (ln {} > ln {})",
                    r.k,
                    r.ln_delta_four,
                    (2.0 * r.k).ln() + r.ln_delta_inf
                ));
            }
        }
        for w in self.rows.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            let pairs = [
                ("delta_four", a.ln_delta_four, b.ln_delta_four),
                ("delta_inf", a.ln_delta_inf, b.ln_delta_inf),
                ("omega_k", a.ln_omega_k, b.ln_omega_k),
                ("vbar", a.ln_vbar, b.ln_vbar),
                ("penalty", a.ln_penalty, b.ln_penalty),
            ];
            for (name, x, y) in pairs {
                if y < x - REL * x.abs().max(1.0) {
                    problems.push(format!("{name} decreases between k={} and k={}", a.k, b.k));
                }
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Numeric {
                t: f64::NAN,
                what: problems.join("; "),
            })
        }
    }
}

fn m_upper_from_rows(rows: &[PenaltyRow], n: usize) -> f64 {
    let reference = rows
        .iter()
        .find(|r| r.k >= 1.0)
        .or_else(|| rows.last())
        .expect("non-empty table");
    let bound = 2.0 * (n as f64).ln() + reference.ln_vbar;
    rows.iter()
        .filter(|r| r.ln_vbar <= bound)
        .map(|r| r.k)
        .fold(rows[0].k, f64::max)
}

/// `M_U^n` on `grid`, computing `V̄` from the error law.
pub fn m_upper(
    grid: &KGrid,
    n: usize,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    rule: &QuadratureRule,
) -> Result<f64> {
    let rows = grid
        .points()
        .iter()
        .map(|&k| {
            let inputs = PenaltyInputs::compute(c, weight, error, k, n, rule).map_err(|e| e.at_cutoff(k))?;
            Ok(PenaltyRow {
                k,
                ln_delta_four: inputs.ln_delta_four,
                ln_delta_inf: inputs.ln_delta_inf,
                ln_omega_k: inputs.ln_omega(),
                log_omega_clamped: inputs.log_factor(),
                ln_vbar: inputs.ln_vbar(),
                ln_penalty: f64::NEG_INFINITY,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(m_upper_from_rows(&rows, n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContrastEntry {
    pub k: f64,
    /// `A(k)`
    pub a: f64,
    /// `A(k) + V(k)`
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    pub k_hat: f64,
    pub contrast: Vec<ContrastEntry>,
    pub m_upper_used: f64,
    pub theta_at_k_hat: f64,
    /// The stopping rule removed grid points.
    pub stopped: bool,
    /// The very first estimate was already negative.
    pub first_negative: bool,
}

/// `(θ̂_{min(k,k')} - θ̂_{k'})² - V(k') - V(k)`, clamped at zero. An infinite
/// penalty dominates any difference.
fn contrast_term(diff: f64, v_k: f64, v_kp: f64) -> f64 {
    if v_k.is_infinite() || v_kp.is_infinite() {
        return 0.0;
    }
    let d = diff * diff - v_kp - v_k;
    if d.is_nan() {
        0.0
    } else {
        d.max(0.0)
    }
}

/// Goldenshluger–Lepski selection on parallel slices of cut-offs (ascending),
/// estimates and penalties. Ties resolve to the smallest cut-off.
pub fn select_on(ks: &[f64], thetas: &[f64], penalties: &[f64]) -> Result<(usize, Vec<ContrastEntry>)> {
    if ks.is_empty() || ks.len() != thetas.len() || ks.len() != penalties.len() {
        return Err(Error::argument(
            "selection inputs must be non-empty and of equal length",
        ));
    }
    let m = ks.len();
    let mut contrast = Vec::with_capacity(m);
    for i in 0..m {
        let mut a: f64 = 0.0;
        // for k' <= k the difference vanishes
        for j in (i + 1)..m {
            a = a.max(contrast_term(thetas[i] - thetas[j], penalties[i], penalties[j]));
        }
        contrast.push(ContrastEntry {
            k: ks[i],
            a,
            objective: a + penalties[i],
        });
    }
    let mut best = 0;
    for (i, e) in contrast.iter().enumerate() {
        if e.objective < contrast[best].objective {
            best = i;
        }
    }
    Ok((best, contrast))
}

fn check_same_grid(report: &EstimationReport, table: &PenaltyTable) -> Result<()> {
    if report.per_k.len() != table.rows.len() || report.per_k.iter().zip(&table.rows).any(|(p, r)| p.k != r.k) {
        return Err(Error::argument(
            "estimation report and penalty table are on different grids",
        ));
    }
    Ok(())
}

/// Minimises `A(k) + V(k)` over the grid points `≤ upper`.
pub fn contrast_and_select(report: &EstimationReport, table: &PenaltyTable, upper: f64) -> Result<SelectionResult> {
    check_same_grid(report, table)?;
    let keep = report.per_k.iter().take_while(|p| p.k <= upper).count().max(1);
    select_prefix(report, table, keep, upper, false, false)
}

fn select_prefix(
    report: &EstimationReport,
    table: &PenaltyTable,
    keep: usize,
    upper: f64,
    stopped: bool,
    first_negative: bool,
) -> Result<SelectionResult> {
    let ks: Vec<f64> = report.per_k[..keep].iter().map(|p| p.k).collect();
    let thetas: Vec<f64> = report.per_k[..keep].iter().map(|p| p.theta_hat).collect();
    let pens: Vec<f64> = table.rows[..keep].iter().map(PenaltyRow::penalty).collect();
    let (best, contrast) = select_on(&ks, &thetas, &pens)?;
    Ok(SelectionResult {
        k_hat: ks[best],
        contrast,
        m_upper_used: upper,
        theta_at_k_hat: thetas[best],
        stopped,
        first_negative,
    })
}

/// Selection on the grid truncated at `M_U^n` and before the first negative
/// estimate.
pub fn select_with_stopping(report: &EstimationReport, table: &PenaltyTable) -> Result<SelectionResult> {
    check_same_grid(report, table)?;
    let upper = table.m_upper();
    let within = report.per_k.iter().take_while(|p| p.k <= upper).count().max(1);
    let first_neg = report.per_k[..within].iter().position(|p| p.theta_hat < 0.0);
    match first_neg {
        Some(0) => {
            let p = report.per_k[0];
            let pen = table.rows[0].penalty();
            Ok(SelectionResult {
                k_hat: p.k,
                contrast: vec![ContrastEntry {
                    k: p.k,
                    a: 0.0,
                    objective: pen,
                }],
                m_upper_used: upper,
                theta_at_k_hat: p.theta_hat,
                stopped: true,
                first_negative: true,
            })
        }
        Some(i) => select_prefix(report, table, i, upper, true, false),
        None => select_prefix(report, table, within, upper, false, false),
    }
}

/// Smoothness family of the signal's Mellin transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Smoothness {
    /// `s(t) = (1 + t²)^{s/2}`
    Ordinary { s: f64 },
    /// `s(t) = exp(|t|^r)`
    Super { r: f64 },
}

impl Smoothness {
    fn ln_s(&self, t: f64) -> f64 {
        match *self {
            Smoothness::Ordinary { s } => 0.5 * s * (1.0 + t * t).ln(),
            Smoothness::Super { r } => t.abs().powf(r),
        }
    }
}

/// `ln R_n(k)` with `R_n(k) = ω_a⁴(k)/s⁴(k) ∨ (Δ_∞(k) ∨ Δ_ψ(k))/n²` and
/// `ω_a(t) = (1 + t²)^{a/2}`.
#[allow(clippy::too_many_arguments)]
pub fn ln_oracle_risk(
    smoothness: &Smoothness,
    a: f64,
    n: usize,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    k: f64,
    rule: &QuadratureRule,
) -> Result<f64> {
    let bias = 2.0 * a * (1.0 + k * k).ln() - 4.0 * smoothness.ln_s(k);
    let var = ln_delta_inf(c, weight, error, k)?.max(ln_delta_four(c, weight, error, k, rule)?) - 2.0 * (n as f64).ln();
    Ok(bias.max(var))
}

/// Grid minimiser of the oracle risk bound; ties go to the smaller cut-off.
#[allow(clippy::too_many_arguments)]
pub fn oracle_k_star(
    smoothness: &Smoothness,
    a: f64,
    n: usize,
    c: f64,
    weight: &WeightSpec,
    error: &DensitySpec,
    grid: &KGrid,
    rule: &QuadratureRule,
) -> Result<f64> {
    let mut best = (grid.first(), f64::INFINITY);
    for &k in grid.points() {
        let r = ln_oracle_risk(smoothness, a, n, c, weight, error, k, rule)?;
        if r < best.1 {
            best = (k, r);
        }
    }
    Ok(best.0)
}
