//! Monte Carlo driver: independent replicates over a list of sample sizes.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adaptive::{
    error_constant_cg, fourth_moment_term, select_with_stopping, sigma_fg, sigma_hat_sq_diagnostics, PenaltyInputs,
    PenaltyMode, PenaltyTable,
};
use crate::density::DensitySpec;
use crate::error::{Error, Result};
use crate::estimator::estimate_curve;
use crate::quad::QuadratureRule;
use crate::sample::KGrid;
use crate::simkit::rng::{draw_replicate, MAX_N, MAX_REPLICATE};
use crate::weight::WeightSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RunMode {
    FixedK,
    Adaptive,
    #[default]
    Both,
}

impl RunMode {
    pub fn adaptive(self) -> bool {
        matches!(self, RunMode::Adaptive | RunMode::Both)
    }
}

/// Which constant feeds the penalty in adaptive runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySource {
    /// Oracle `σ_{f,g}` from the true laws.
    Partial,
    /// Plug-in `σ̂²` from each replicate.
    #[default]
    Full,
}

fn default_c() -> f64 {
    crate::DEFAULT_C
}

fn default_kappa() -> f64 {
    crate::DEFAULT_KAPPA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub signal: DensitySpec,
    pub error: DensitySpec,
    #[serde(default = "default_c")]
    pub c: f64,
    #[serde(default)]
    pub weight: WeightSpec,
    pub n_list: Vec<usize>,
    pub replications: usize,
    pub grid: KGrid,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    pub seed: u64,
    #[serde(default)]
    pub mode: RunMode,
    #[serde(default)]
    pub penalty: PenaltySource,
    #[serde(default)]
    pub quadrature: QuadratureRule,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.signal.validate()?;
        self.error.validate()?;
        self.weight.validate()?;
        self.quadrature.validate()?;
        self.error.check_exponent(self.c)?;
        if self.signal == DensitySpec::NoError {
            return Err(Error::Argument("the signal law cannot be the point mass".into()));
        }
        if self.replications < 1 || self.replications as u64 > MAX_REPLICATE {
            return Err(Error::Argument(format!(
                "replications must be in 1..={MAX_REPLICATE}, got {}",
                self.replications
            )));
        }
        if self.n_list.is_empty() {
            return Err(Error::Argument("n_list is empty".into()));
        }
        if let Some(n) = self.n_list.iter().find(|&&n| !(2..=MAX_N).contains(&n)) {
            return Err(Error::Argument(format!("sample size {n} outside 2..={MAX_N}")));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::Argument(format!("kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }

    /// `signal~error`, or the explicit label.
    pub fn setting_label(&self) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("{}~{}", self.signal, self.error))
    }

    /// Set when `E[Y^{4(c-1)}]` diverges, so that `σ̂²` estimates an
    /// infinite quantity.
    pub fn sigma_divergence(&self) -> Option<String> {
        fourth_moment_term(&self.signal, &self.error, self.c)
            .err()
            .map(|e| format!("σ̂² targets an infinite moment: {e}"))
    }
}

/// Outcome of one replicate. Equality ignores `runtime`.
#[derive(Debug, Clone, Serialize)]
pub struct ReplicateRecord {
    pub replicate: u64,
    pub n: usize,
    /// `θ̂_k` in grid order; empty when the replicate failed.
    pub theta_hat: Vec<f64>,
    pub k_hat: Option<f64>,
    pub stopped: Option<bool>,
    pub m_upper: Option<f64>,
    pub sigma_hat_sq: f64,
    pub sigma_unstable: bool,
    pub error: Option<String>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl PartialEq for ReplicateRecord {
    fn eq(&self, other: &Self) -> bool {
        self.replicate == other.replicate
            && self.n == other.n
            && self.theta_hat.len() == other.theta_hat.len()
            && self
                .theta_hat
                .iter()
                .zip(&other.theta_hat)
                .all(|(a, b)| a.to_bits() == b.to_bits())
            && self.k_hat.map(f64::to_bits) == other.k_hat.map(f64::to_bits)
            && self.stopped == other.stopped
            && self.m_upper.map(f64::to_bits) == other.m_upper.map(f64::to_bits)
            && self.sigma_hat_sq.to_bits() == other.sigma_hat_sq.to_bits()
            && self.sigma_unstable == other.sigma_unstable
            && self.error == other.error
    }
}

/// Sample-independent pieces of the adaptive step for one `n`.
struct AdaptivePlan {
    inputs: Vec<PenaltyInputs>,
    c_g: f64,
    sigma_fg: Option<f64>,
}

fn plan_for(spec: &ExperimentSpec, n: usize) -> Result<AdaptivePlan> {
    let c_g = error_constant_cg(spec.c, &spec.error)?;
    let sigma_fg = match spec.penalty {
        PenaltySource::Partial => Some(sigma_fg(&spec.signal, &spec.error, spec.c)?),
        PenaltySource::Full => None,
    };
    let inputs = spec
        .grid
        .points()
        .iter()
        .map(|&k| {
            PenaltyInputs::compute(spec.c, &spec.weight, &spec.error, k, n, &spec.quadrature)
                .map_err(|e| e.at_cutoff(k))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AdaptivePlan { inputs, c_g, sigma_fg })
}

fn run_one(spec: &ExperimentSpec, plan: Option<&AdaptivePlan>, n: usize, replicate: u64) -> ReplicateRecord {
    let start = Instant::now();
    let mut record = ReplicateRecord {
        replicate,
        n,
        theta_hat: Vec::new(),
        k_hat: None,
        stopped: None,
        m_upper: None,
        sigma_hat_sq: f64::NAN,
        sigma_unstable: false,
        error: None,
        runtime: Duration::ZERO,
    };
    let outcome = (|| -> Result<()> {
        let y = draw_replicate(&spec.signal, &spec.error, spec.seed, n, replicate)?;
        let sigma = sigma_hat_sq_diagnostics(&y, spec.c)?;
        record.sigma_hat_sq = sigma.value;
        record.sigma_unstable = sigma.unstable;
        let report = estimate_curve(&y, spec.c, &spec.weight, &spec.error, &spec.grid, &spec.quadrature)?;
        record.theta_hat = report.theta_hats();
        if let Some(plan) = plan {
            let mode = match plan.sigma_fg {
                Some(s) => PenaltyMode::Partial { sigma_fg: s },
                None => PenaltyMode::Full {
                    sigma_hat_sq: sigma.value,
                },
            };
            let table = PenaltyTable::from_inputs(&plan.inputs, spec.kappa, mode, plan.c_g)?;
            let sel = select_with_stopping(&report, &table)?;
            record.k_hat = Some(sel.k_hat);
            record.stopped = Some(sel.stopped);
            record.m_upper = Some(sel.m_upper_used);
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        record.error = Some(e.to_string());
    }
    record.runtime = start.elapsed();
    record
}

/// Runs every `(n, replicate)` pair; records come back ordered by `n` (as
/// listed) then replicate id, whatever the number of worker threads.
///
/// `jobs = 0` uses rayon's default pool size.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Vec<ReplicateRecord>> {
    spec.validate()?;
    let plans = if spec.mode.adaptive() {
        spec.n_list
            .iter()
            .map(|&n| plan_for(spec, n).map(Some))
            .collect::<Result<Vec<_>>>()?
    } else {
        spec.n_list.iter().map(|_| None).collect()
    };
    let tasks: Vec<(usize, usize, u64)> = spec
        .n_list
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| (0..spec.replications as u64).map(move |r| (i, n, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        tasks
            .par_iter()
            .map(|&(i, n, r)| run_one(spec, plans[i].as_ref(), n, r))
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(mode: RunMode) -> ExperimentSpec {
        ExperimentSpec {
            label: None,
            signal: DensitySpec::Beta21,
            error: DensitySpec::Uniform01,
            c: 1.5,
            weight: WeightSpec::Unit,
            n_list: vec![30],
            replications: 1,
            grid: KGrid::new(vec![0.5, 1.0]).unwrap(),
            kappa: 1e-5,
            seed: 42,
            mode,
            penalty: PenaltySource::Full,
            quadrature: QuadratureRule::default(),
        }
    }

    #[test]
    fn single_replicate_reproducible() {
        let spec = small_spec(RunMode::FixedK);
        let a = run_experiment(&spec, 1).unwrap();
        let b = run_experiment(&spec, 3).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a, b);
        assert!(a[0].error.is_none());
        assert_eq!(a[0].theta_hat.len(), 2);
    }

    #[test]
    fn order_independent_of_jobs() {
        let mut spec = small_spec(RunMode::Both);
        spec.error = DensitySpec::Pareto1;
        spec.c = 0.5;
        spec.replications = 6;
        spec.n_list = vec![20, 40];
        let a = run_experiment(&spec, 1).unwrap();
        let b = run_experiment(&spec, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 12);
        assert_eq!((a[6].n, a[6].replicate), (40, 0));
        assert!(a.iter().all(|r| r.k_hat.is_some()));
    }

    #[test]
    fn validation() {
        let mut spec = small_spec(RunMode::FixedK);
        spec.replications = 0;
        assert!(run_experiment(&spec, 1).is_err());
        let mut spec = small_spec(RunMode::FixedK);
        spec.n_list = vec![1];
        assert!(spec.validate().is_err());
    }

    #[test]
    fn divergence_flag() {
        let mut spec = small_spec(RunMode::FixedK);
        spec.c = 0.5;
        spec.error = DensitySpec::Pareto1;
        assert!(spec.sigma_divergence().is_some());
        spec.signal = DensitySpec::STANDARD_LOG_NORMAL;
        assert!(spec.sigma_divergence().is_none());
    }

    #[test]
    fn json_round_trip() {
        let spec = small_spec(RunMode::Adaptive);
        let text = serde_json::to_string(&spec).unwrap();
        let back: ExperimentSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(spec, back);
    }
}
