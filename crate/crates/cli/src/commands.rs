//! The four subcommands. Each returns the files it wrote.

use std::io::Write;
use std::path::{Path, PathBuf};

use mellin_qfe::adaptive::{fourth_moment_term, sigma_hat_sq_diagnostics, SigmaHat};
use mellin_qfe::simkit::{
    closed_form_theta, lambda, mse_bound, run_experiment, theta_k_and_bias, true_theta, ExperimentSpec, MseBound,
    PenaltySource, ReplicateRecord, RunMode,
};
use mellin_qfe::summary::{box_stats, BoxStats};
use mellin_qfe::{
    estimate_curve, oracle_k_star, select_with_stopping, sigma_fg, EstimationReport, PenaltyMode, PenaltyTable, Sample,
    SelectionResult, Smoothness,
};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{CliError, CliResult};
use crate::io::{ensure_dir, num, opt_num, read_sample, write_csv, write_json, write_text, Header};

/// Tolerance for the oracle `θ`.
const THETA_TOLERANCE: f64 = 1e-10;

fn flag(b: bool) -> String {
    if b { "1" } else { "0" }.to_string()
}

fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> CliResult<PathBuf> {
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.dir.clone())
        .ok_or_else(|| CliError::usage("no output directory: pass --out DIR or set output.dir"))?;
    ensure_dir(&dir)?;
    Ok(dir)
}

fn progress(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        eprintln!("mellin-qfe: {}", msg.as_ref());
    }
}

/// Penalty constant for a sample: oracle `σ_{f,g}` or plug-in `σ̂²`.
fn sample_penalty_mode(cfg: &RunConfig, sigma: &SigmaHat) -> CliResult<PenaltyMode> {
    Ok(match cfg.penalty {
        PenaltySource::Partial => PenaltyMode::Partial {
            sigma_fg: sigma_fg(&cfg.require_signal()?, &cfg.error, cfg.c)?,
        },
        PenaltySource::Full => PenaltyMode::Full {
            sigma_hat_sq: sigma.value,
        },
    })
}

#[derive(Serialize)]
struct EstimateOutput<'a> {
    n: usize,
    sigma_hat: SigmaHat,
    report: &'a EstimationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    penalty_table: Option<&'a PenaltyTable>,
    #[serde(skip_serializing_if = "Option::is_none")]
    selection: Option<&'a SelectionResult>,
}

/// θ̂ curve on a user sample plus, unless `mode` is `fixed_k`, the adaptive
/// selection. Writes `estimate.csv`, `selection.csv` and `estimate.json`.
pub fn estimate(cfg: &RunConfig, input: &Path, out: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let sample = read_sample(input)?;
    let dir = output_dir(cfg, out)?;
    let n = sample.len();
    progress(cfg, format!("estimating on {n} observations"));
    let report = estimate_curve(&sample, cfg.c, &cfg.weight, &cfg.error, &cfg.grid, &cfg.quadrature)?;
    let sigma = sigma_hat_sq_diagnostics(&sample, cfg.c)?;
    let (table, selection) = if cfg.mode.adaptive() {
        let mode = sample_penalty_mode(cfg, &sigma)?;
        let table = PenaltyTable::build(
            cfg.c,
            &cfg.weight,
            &cfg.error,
            &cfg.grid,
            n,
            cfg.kappa,
            mode,
            &cfg.quadrature,
        )?;
        let sel = select_with_stopping(&report, &table)?;
        (Some(table), Some(sel))
    } else {
        (None, None)
    };

    let mut header = Header::new("estimate", cfg);
    header.push("input", input.display());
    header.push("n", n);
    if sigma.unstable {
        header.push("warning", "sigma_hat_sq is unstable under leave-one-out");
    }
    let mut files = Vec::new();
    if cfg.output.wants(Format::Csv) {
        let rows: Vec<Vec<String>> = report
            .per_k
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let entry = selection.as_ref().and_then(|s| s.contrast.iter().find(|e| e.k == p.k));
                vec![
                    num(p.k),
                    num(p.theta_hat),
                    num(p.theta_hat_clipped),
                    opt_num(table.as_ref().map(|t| t.rows[i].penalty())),
                    opt_num(table.as_ref().map(|t| t.rows[i].ln_penalty)),
                    opt_num(entry.map(|e| e.a)),
                    opt_num(entry.map(|e| e.objective)),
                    selection.as_ref().map(|s| flag(s.k_hat == p.k)).unwrap_or_default(),
                ]
            })
            .collect();
        files.push(write_csv(
            &dir.join("estimate.csv"),
            &header,
            &[
                "k",
                "theta_hat",
                "theta_hat_clipped",
                "penalty",
                "ln_penalty",
                "contrast",
                "objective",
                "selected",
            ],
            &rows,
        )?);
        let sel_row = vec![
            n.to_string(),
            opt_num(selection.as_ref().map(|s| s.k_hat)),
            opt_num(selection.as_ref().map(|s| s.theta_at_k_hat)),
            opt_num(selection.as_ref().map(|s| s.theta_at_k_hat.max(0.0))),
            opt_num(selection.as_ref().map(|s| s.m_upper_used)),
            selection.as_ref().map(|s| flag(s.stopped)).unwrap_or_default(),
            selection.as_ref().map(|s| flag(s.first_negative)).unwrap_or_default(),
            table.as_ref().map(|t| t.mode.label().to_string()).unwrap_or_default(),
            num(sigma.value),
            flag(sigma.unstable),
        ];
        files.push(write_csv(
            &dir.join("selection.csv"),
            &header,
            &[
                "n",
                "k_hat",
                "theta_at_k_hat",
                "theta_at_k_hat_clipped",
                "m_upper",
                "stopped",
                "first_negative",
                "penalty_mode",
                "sigma_hat_sq",
                "sigma_unstable",
            ],
            &[sel_row],
        )?);
    }
    if cfg.output.wants(Format::Json) {
        let body = EstimateOutput {
            n,
            sigma_hat: sigma,
            report: &report,
            penalty_table: table.as_ref(),
            selection: selection.as_ref(),
        };
        files.push(write_json(&dir.join("estimate.json"), &header, &body)?);
    }
    Ok(files)
}

#[derive(Serialize)]
struct SummaryRow {
    n: usize,
    k: f64,
    #[serde(flatten)]
    stats: BoxStats,
}

#[derive(Serialize)]
struct SimulationOutput<'a> {
    spec: &'a ExperimentSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    warning: Option<String>,
    summary: &'a [SummaryRow],
    records: &'a [ReplicateRecord],
}

/// Box statistics of the clipped estimates per `(n, k)`, over the replicates
/// that succeeded.
fn summarise(spec: &ExperimentSpec, records: &[ReplicateRecord]) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for &n in &spec.n_list {
        for (j, &k) in spec.grid.points().iter().enumerate() {
            let vals: Vec<f64> = records
                .iter()
                .filter(|r| r.n == n && r.error.is_none())
                .map(|r| r.theta_hat[j].max(0.0))
                .collect();
            if let Some(stats) = box_stats(&vals) {
                out.push(SummaryRow { n, k, stats });
            }
        }
    }
    out
}

const PLOT_SCRIPT: &str = include_str!("plot_simulation.py");

/// Monte Carlo study. Writes `replicates.csv` (long format), `summary.csv`,
/// `khat.csv`, `simulation.json` and `plot_simulation.py`. Exits with a
/// numeric failure after writing if any replicate failed.
pub fn simulate(cfg: &RunConfig, out: Option<&Path>, jobs: usize) -> CliResult<Vec<PathBuf>> {
    let spec = cfg.experiment()?;
    let dir = output_dir(cfg, out)?;
    let warning = spec.sigma_divergence();
    if let Some(w) = &warning {
        eprintln!("mellin-qfe: warning: {w}");
    }
    progress(
        cfg,
        format!("{} replicates for n in {:?}", spec.replications, spec.n_list),
    );
    let records = run_experiment(&spec, jobs)?;
    let setting = spec.setting_label();
    let mut header = Header::new("simulate", cfg);
    header.push("signal", spec.signal);
    header.push("error", spec.error);
    header.push("replications", spec.replications);
    header.push("mode", format!("{:?}", spec.mode).to_lowercase());
    header.push("penalty", format!("{:?}", spec.penalty).to_lowercase());
    if let Some(w) = &warning {
        header.push("warning", w);
    }
    let summary = summarise(&spec, &records);
    let grid = spec.grid.points();
    let adaptive = spec.mode != RunMode::FixedK;

    let mut files = Vec::new();
    if cfg.output.wants(Format::Csv) {
        let mut long = Vec::new();
        for r in records.iter().filter(|r| r.error.is_none()) {
            for (&k, &t) in grid.iter().zip(&r.theta_hat) {
                long.push(vec![
                    setting.clone(),
                    r.n.to_string(),
                    r.replicate.to_string(),
                    num(k),
                    num(t),
                    num(t.max(0.0)),
                    if adaptive {
                        flag(r.k_hat == Some(k))
                    } else {
                        String::new()
                    },
                ]);
            }
        }
        files.push(write_csv(
            &dir.join("replicates.csv"),
            &header,
            &["setting", "n", "replicate", "k", "theta_hat", "clipped", "k_hat_flag"],
            &long,
        )?);
        let rows: Vec<Vec<String>> = summary
            .iter()
            .map(|s| {
                let b = &s.stats;
                vec![
                    setting.clone(),
                    s.n.to_string(),
                    num(s.k),
                    b.count.to_string(),
                    num(b.min),
                    num(b.q1),
                    num(b.median),
                    num(b.q3),
                    num(b.max),
                    num(b.mean),
                ]
            })
            .collect();
        files.push(write_csv(
            &dir.join("summary.csv"),
            &header,
            &["setting", "n", "k", "count", "min", "q1", "median", "q3", "max", "mean"],
            &rows,
        )?);
        let khat: Vec<Vec<String>> = records
            .iter()
            .map(|r| {
                let at = r
                    .k_hat
                    .and_then(|k| grid.iter().position(|&g| g == k))
                    .and_then(|i| r.theta_hat.get(i).copied());
                vec![
                    setting.clone(),
                    r.n.to_string(),
                    r.replicate.to_string(),
                    opt_num(r.k_hat),
                    opt_num(at),
                    opt_num(at.map(|t| t.max(0.0))),
                    r.stopped.map(flag).unwrap_or_default(),
                    opt_num(r.m_upper),
                    num(r.sigma_hat_sq),
                    flag(r.sigma_unstable),
                    r.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        files.push(write_csv(
            &dir.join("khat.csv"),
            &header,
            &[
                "setting",
                "n",
                "replicate",
                "k_hat",
                "theta_at_k_hat",
                "clipped",
                "stopped",
                "m_upper",
                "sigma_hat_sq",
                "sigma_unstable",
                "error",
            ],
            &khat,
        )?);
        let mut script = header.comment_block();
        script.push_str(PLOT_SCRIPT);
        files.push(write_text(&dir.join("plot_simulation.py"), &script)?);
    }
    if cfg.output.wants(Format::Json) {
        let body = SimulationOutput {
            spec: &spec,
            warning: warning.clone(),
            summary: &summary,
            records: &records,
        };
        files.push(write_json(&dir.join("simulation.json"), &header, &body)?);
    }
    let failed: Vec<String> = records
        .iter()
        .filter_map(|r| {
            r.error
                .as_ref()
                .map(|e| format!("n={} replicate {}: {e}", r.n, r.replicate))
        })
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Numeric(format!(
            "{} replicate(s) failed; first: {}",
            failed.len(),
            failed[0]
        )));
    }
    Ok(files)
}

/// The penalty constant when no sample is at hand.
fn population_penalty_mode(cfg: &RunConfig) -> CliResult<PenaltyMode> {
    let signal = cfg.require_signal()?;
    Ok(match cfg.penalty {
        PenaltySource::Partial => PenaltyMode::Partial {
            sigma_fg: sigma_fg(&signal, &cfg.error, cfg.c)?,
        },
        PenaltySource::Full => PenaltyMode::Full {
            sigma_hat_sq: 1.0
                + fourth_moment_term(&signal, &cfg.error, cfg.c).map_err(|e| {
                    CliError::usage(format!(
                        "full penalty without --input needs E[Y^(4(c-1))]: {e}; \
                         pass --input or set penalty to partial"
                    ))
                })?,
        },
    })
}

/// `Δ_ψ, Δ_∞, ω_k, V̄, V` over the grid, one block per `n` (or for the
/// sample size of `--input`). Writes `penalty_table.csv` and
/// `penalty_table.json`; structural invariant violations exit as numeric
/// failures after writing.
pub fn penalty_table(cfg: &RunConfig, out: Option<&Path>, input: Option<&Path>) -> CliResult<Vec<PathBuf>> {
    let dir = output_dir(cfg, out)?;
    let sample: Option<Sample> = input.map(read_sample).transpose()?;
    let plans: Vec<(usize, PenaltyMode)> = match &sample {
        Some(s) => {
            let sigma = sigma_hat_sq_diagnostics(s, cfg.c)?;
            vec![(s.len(), sample_penalty_mode(cfg, &sigma)?)]
        }
        None => {
            let mode = population_penalty_mode(cfg)?;
            cfg.n_list.iter().map(|&n| (n, mode)).collect()
        }
    };
    let tables = plans
        .into_iter()
        .map(|(n, mode)| {
            PenaltyTable::build(
                cfg.c,
                &cfg.weight,
                &cfg.error,
                &cfg.grid,
                n,
                cfg.kappa,
                mode,
                &cfg.quadrature,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut header = Header::new("penalty-table", cfg);
    header.push("error", cfg.error);
    if let Some(p) = input {
        header.push("input", p.display());
    }
    if let Some(t) = tables.first() {
        header.push("penalty_mode", t.mode.label());
        header.push("c_g", t.c_g);
        header.push("sigma_term", t.sigma_term);
    }
    let mut files = Vec::new();
    if cfg.output.wants(Format::Csv) {
        let mut rows = Vec::new();
        for t in &tables {
            let upper = t.m_upper();
            for r in &t.rows {
                rows.push(vec![
                    t.n.to_string(),
                    num(r.k),
                    num(r.delta_four()),
                    num(r.delta_inf()),
                    num(r.omega_k()),
                    num(r.vbar()),
                    num(r.penalty()),
                    flag(r.k == upper),
                    num(r.ln_delta_four),
                    num(r.ln_delta_inf),
                    num(r.ln_omega_k),
                    num(r.log_omega_clamped),
                    num(r.ln_vbar),
                    num(r.ln_penalty),
                ]);
            }
        }
        files.push(write_csv(
            &dir.join("penalty_table.csv"),
            &header,
            &[
                "n",
                "k",
                "delta_four",
                "delta_inf",
                "omega_k",
                "vbar",
                "V_or_Vhat",
                "m_upper",
                "ln_delta_four",
                "ln_delta_inf",
                "ln_omega_k",
                "L",
                "ln_vbar",
                "ln_V",
            ],
            &rows,
        )?);
    }
    if cfg.output.wants(Format::Json) {
        #[derive(Serialize)]
        struct Body<'a> {
            tables: Vec<TableWithUpper<'a>>,
        }
        #[derive(Serialize)]
        struct TableWithUpper<'a> {
            m_upper: f64,
            #[serde(flatten)]
            table: &'a PenaltyTable,
        }
        let body = Body {
            tables: tables
                .iter()
                .map(|t| TableWithUpper {
                    m_upper: t.m_upper(),
                    table: t,
                })
                .collect(),
        };
        files.push(write_json(&dir.join("penalty_table.json"), &header, &body)?);
    }
    for t in &tables {
        t.check_invariants()
            .map_err(|e| CliError::Numeric(format!("n={}: {e}", t.n)))?;
    }
    Ok(files)
}

/// Value or the reason it does not exist.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Maybe<T> {
    Value(T),
    Undefined(String),
}

impl<T> Maybe<T> {
    fn from_result(r: mellin_qfe::Result<T>) -> Self {
        match r {
            Ok(v) => Maybe::Value(v),
            Err(e) => Maybe::Undefined(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffReport {
    pub k: f64,
    pub n: usize,
    pub theta_k: f64,
    pub bias_sq: f64,
    pub lambda: Maybe<f64>,
    pub mse_bound: Maybe<MseBound>,
}

#[derive(Debug, Clone, Serialize)]
pub struct KStar {
    pub n: usize,
    pub k_star: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub theta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_closed_form: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<CutoffReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothness: Option<Smoothness>,
    pub a: f64,
    pub k_star: Vec<KStar>,
}

pub fn oracle_report(cfg: &RunConfig) -> CliResult<OracleReport> {
    let signal = cfg.require_signal()?;
    let theta = true_theta(&signal, cfg.c, &cfg.weight, THETA_TOLERANCE)?;
    let n = *cfg.n_list.first().ok_or_else(|| CliError::usage("n_list is empty"))?;
    let cutoff = match cfg.oracle.k {
        None => None,
        Some(k) => {
            let tk = theta_k_and_bias(&signal, cfg.c, &cfg.weight, k, &cfg.quadrature)?;
            let (lam, bound) = if k == 0.0 {
                let empty = || "no frequencies below a zero cut-off".to_string();
                (Maybe::Undefined(empty()), Maybe::Undefined(empty()))
            } else {
                (
                    Maybe::from_result(lambda(&signal, &cfg.error, cfg.c, &cfg.weight, k, &cfg.quadrature)),
                    Maybe::from_result(mse_bound(
                        &signal,
                        &cfg.error,
                        cfg.c,
                        &cfg.weight,
                        k,
                        n,
                        &cfg.quadrature,
                    )),
                )
            };
            Some(CutoffReport {
                k,
                n,
                theta_k: tk.theta_k,
                bias_sq: tk.bias_sq,
                lambda: lam,
                mse_bound: bound,
            })
        }
    };
    let k_star = match &cfg.oracle.smoothness {
        None => Vec::new(),
        Some(sm) => cfg
            .n_list
            .iter()
            .map(|&n| {
                Ok(KStar {
                    n,
                    k_star: oracle_k_star(
                        sm,
                        cfg.oracle.a,
                        n,
                        cfg.c,
                        &cfg.weight,
                        &cfg.error,
                        &cfg.grid,
                        &cfg.quadrature,
                    )?,
                })
            })
            .collect::<CliResult<Vec<_>>>()?,
    };
    Ok(OracleReport {
        theta,
        theta_closed_form: closed_form_theta(&signal, cfg.c, &cfg.weight),
        cutoff,
        smoothness: cfg.oracle.smoothness,
        a: cfg.oracle.a,
        k_star,
    })
}

fn maybe_text(m: &Maybe<f64>) -> String {
    match m {
        Maybe::Value(v) => num(*v),
        Maybe::Undefined(why) => format!("undefined ({why})"),
    }
}

/// `key: value` lines for the terminal.
pub fn render_oracle(report: &OracleReport) -> String {
    let mut s = String::new();
    s.push_str(&format!("theta: {}\n", num(report.theta)));
    if let Some(v) = report.theta_closed_form {
        s.push_str(&format!("theta_closed_form: {}\n", num(v)));
    }
    if let Some(c) = &report.cutoff {
        s.push_str(&format!("k: {}\n", num(c.k)));
        s.push_str(&format!("theta_k: {}\n", num(c.theta_k)));
        s.push_str(&format!("bias_sq: {}\n", num(c.bias_sq)));
        s.push_str(&format!("lambda: {}\n", maybe_text(&c.lambda)));
        let bound = match &c.mse_bound {
            Maybe::Value(b) => Maybe::Value(b.total),
            Maybe::Undefined(w) => Maybe::Undefined(w.clone()),
        };
        s.push_str(&format!("mse_bound(n={}): {}\n", c.n, maybe_text(&bound)));
    }
    for ks in &report.k_star {
        s.push_str(&format!("k_star(n={}): {}\n", ks.n, num(ks.k_star)));
    }
    s
}

/// Prints the oracle report; with `out` also writes `oracle.txt` and
/// `oracle.json`.
pub fn oracle(cfg: &RunConfig, out: Option<&Path>, stdout: &mut dyn Write) -> CliResult<Vec<PathBuf>> {
    let report = oracle_report(cfg)?;
    let header = Header::new("oracle", cfg);
    let text = format!("{}{}", header.comment_block(), render_oracle(&report));
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))?;
    let mut files = Vec::new();
    if out.is_some() || cfg.output.dir.is_some() {
        let dir = output_dir(cfg, out)?;
        if cfg.output.wants(Format::Csv) {
            files.push(write_text(&dir.join("oracle.txt"), &text)?);
        }
        if cfg.output.wants(Format::Json) {
            files.push(write_json(&dir.join("oracle.json"), &header, &report)?);
        }
    }
    Ok(files)
}
