use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

use mellin_qfe::simkit::draw_replicate;
use mellin_qfe::{estimate_curve, DensitySpec, KGrid, QuadratureRule, WeightSpec};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mellin-qfe"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Data rows of a CSV written by the tool: provenance lines dropped, header
/// row split off.
fn table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let head = lines.next().unwrap().split(',').map(str::to_string).collect();
    let rows = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    (head, rows)
}

fn column(head: &[String], rows: &[Vec<String>], name: &str) -> Vec<f64> {
    let i = head
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("no column {name}"));
    rows.iter().map(|r| r[i].parse().unwrap()).collect()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn estimate_constant_sample() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"error":{"law":"no_error"},"grid":[1.5]}"#);
    let y = write(d.path(), "y.txt", "# three ones\n1\n1\n1\n");
    let out = d.path().join("out");
    let o = run(&["estimate", "--config", s(&cfg), "--input", s(&y), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("estimate.csv"));
    let theta = column(&head, &rows, "theta_hat");
    assert_eq!(rows.len(), 1);
    assert!((theta[0] - 3.0).abs() < 1e-12, "{theta:?}");
    assert!(out.join("selection.csv").exists());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("estimate.json")).unwrap()).unwrap();
    assert_eq!(json["selection"]["k_hat"], 1.5);
    assert!(json["header"].is_array());
}

#[test]
fn estimate_rejects_single_observation() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"error":{"law":"no_error"}}"#);
    let y = write(d.path(), "y.txt", "2.5\n");
    let o = run(&["estimate", "--config", s(&cfg), "--input", s(&y), "--out", s(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("need n ≥ 2"), "{}", stderr(&o));
}

#[test]
fn estimate_reports_bad_line_number() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"error":{"law":"no_error"}}"#);
    for (text, line) in [
        ("1\n-2\n3\n", "line 2"),
        ("1\n2\n\n# c\nfoo\n", "line 5"),
        ("1\n0\n", "line 2"),
    ] {
        let y = write(d.path(), "y.txt", text);
        let o = run(&["estimate", "--config", s(&cfg), "--input", s(&y), "--out", s(d.path())]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains(line), "{}", stderr(&o));
    }
    let o = run(&[
        "estimate",
        "--config",
        s(&cfg),
        "--input",
        "/nonexistent/y.txt",
        "--out",
        s(d.path()),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_matches_library_bit_for_bit() {
    let d = TempDir::new().unwrap();
    let y = draw_replicate(&DensitySpec::Beta21, &DensitySpec::Pareto1, 11, 200, 0).unwrap();
    let text: String = y.values().iter().map(|v| format!("{v}\n")).collect();
    let input = write(d.path(), "y.txt", &text);
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"signal":{"law":"beta21"},"error":{"law":"pareto1"},"grid":[0.1,0.3,0.5,0.7,0.9,1.1,1.3,1.5]}"#,
    );
    let out = d.path().join("out");
    let o = run(&["estimate", "--config", s(&cfg), "--input", s(&input), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let grid = KGrid::new(vec![0.1, 0.3, 0.5, 0.7, 0.9, 1.1, 1.3, 1.5]).unwrap();
    let lib = estimate_curve(
        &y,
        0.5,
        &WeightSpec::Unit,
        &DensitySpec::Pareto1,
        &grid,
        &QuadratureRule::default(),
    )
    .unwrap();
    let (head, rows) = table(&out.join("estimate.csv"));
    let cli = column(&head, &rows, "theta_hat");
    let want = lib.theta_hats();
    assert_eq!(cli.len(), want.len());
    for (a, b) in cli.iter().zip(&want) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

fn sim_config(dir: &Path) -> PathBuf {
    write(
        dir,
        "sim.json",
        r#"{"signal":{"law":"log_normal"},"error":{"law":"pareto1"},"n_list":[50,80],
            "replications":2,"grid":[0.5,1.0,1.5],"seed":3}"#,
    )
}

#[test]
fn simulate_row_counts_and_headers() {
    let d = TempDir::new().unwrap();
    let cfg = sim_config(d.path());
    let out = d.path().join("out");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out), "--jobs", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("replicates.csv"));
    assert_eq!(
        head,
        ["setting", "n", "replicate", "k", "theta_hat", "clipped", "k_hat_flag"]
    );
    for n in ["50", "80"] {
        assert_eq!(rows.iter().filter(|r| r[1] == n).count(), 2 * 3);
    }
    // exactly one selected cut-off per replicate
    assert_eq!(rows.iter().filter(|r| r[6] == "1").count(), 4);
    let (head, rows) = table(&out.join("summary.csv"));
    assert_eq!(rows.len(), 6);
    for name in ["min", "q1", "median", "q3", "max", "mean"] {
        assert_eq!(column(&head, &rows, name).len(), 6);
    }
    assert!(rows.iter().all(|r| r[0] == "ss-os"));
    for f in [
        "replicates.csv",
        "summary.csv",
        "khat.csv",
        "simulation.json",
        "plot_simulation.py",
    ] {
        let text = fs::read_to_string(out.join(f)).unwrap();
        if f.ends_with(".json") {
            for key in ["version", "seed", "quadrature", "kappa"] {
                assert!(text.contains(&format!("\"key\": \"{key}\"")), "{f} lacks {key}");
            }
        } else {
            for key in ["# version:", "# seed: 3", "# quadrature:", "# kappa:"] {
                assert!(text.contains(key), "{f} lacks {key}");
            }
        }
        assert!(!text.contains('\r'));
    }
}

#[test]
fn simulate_is_byte_identical_across_runs_and_jobs() {
    let d = TempDir::new().unwrap();
    let cfg = sim_config(d.path());
    let a = d.path().join("a");
    let b = d.path().join("b");
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&a), "--jobs", "1"])
        .status
        .success());
    assert!(run(&["simulate", "--config", s(&cfg), "--out", s(&b), "--jobs", "4"])
        .status
        .success());
    for f in [
        "replicates.csv",
        "summary.csv",
        "khat.csv",
        "simulation.json",
        "plot_simulation.py",
    ] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn simulate_unwritable_output_is_usage_error() {
    let d = TempDir::new().unwrap();
    let cfg = sim_config(d.path());
    let blocker = write(d.path(), "file", "x");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&blocker.join("sub"))]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn flags_override_config() {
    let d = TempDir::new().unwrap();
    let cfg = sim_config(d.path());
    let out = d.path().join("out");
    let o = run(&[
        "simulate",
        "--config",
        s(&cfg),
        "--out",
        s(&out),
        "--seed",
        "99",
        "--replications",
        "3",
        "--set",
        "n_list=[40]",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(out.join("replicates.csv")).unwrap();
    assert!(text.contains("# seed: 99"));
    let (_, rows) = table(&out.join("replicates.csv"));
    assert_eq!(rows.len(), 3 * 3);
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out), "--set", "nope=1"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["simulate", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
}

fn penalty_cfg(dir: &Path, kappa: &str) -> PathBuf {
    write(
        dir,
        &format!("p{kappa}.json"),
        &format!(
            r#"{{"signal":{{"law":"beta21"}},"error":{{"law":"no_error"}},"grid":[1,2,3],
                "n_list":[100],"kappa":{kappa},"penalty":"partial"}}"#
        ),
    )
}

#[test]
fn penalty_table_matches_hand_recomputation() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");
    let o = run(&[
        "penalty-table",
        "--config",
        s(&penalty_cfg(d.path(), "1")),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("penalty_table.csv"));
    let n = 100.0f64;
    // σ_{f,g} = E[X^{-1}] = 2 for Beta(2,1); c_g = 1 without error
    let cterm = 4.0;
    for (i, k) in [1.0f64, 2.0, 3.0].into_iter().enumerate() {
        let d4 = 2.0 * k;
        let dinf = 1.0;
        let omega = 2.0 * k.powi(3) * (dinf / n).max(1.0);
        let l = omega.ln().max(2f64.ln());
        let inner = (omega * l * (2.0 * k).max(l) / n).max(1.0);
        let spread = d4.max(l * dinf);
        let vbar = l * inner * inner * spread;
        let v = l / (n * n) * spread * (cterm + inner * inner);
        let got = |name: &str| column(&head, &rows, name)[i];
        approx::assert_relative_eq!(got("delta_four"), d4, max_relative = 1e-12);
        approx::assert_relative_eq!(got("delta_inf"), dinf, max_relative = 1e-12);
        approx::assert_relative_eq!(got("omega_k"), omega, max_relative = 1e-12);
        approx::assert_relative_eq!(got("vbar"), vbar, max_relative = 1e-12);
        approx::assert_relative_eq!(got("V_or_Vhat"), v, max_relative = 1e-12);
    }
    let marks = column(&head, &rows, "m_upper");
    assert_eq!(marks.iter().filter(|&&m| m == 1.0).count(), 1);
    for name in ["delta_four", "delta_inf", "omega_k", "vbar"] {
        let c = column(&head, &rows, name);
        assert!(c.windows(2).all(|w| w[1] >= w[0]), "{name} not monotone");
    }
}

#[test]
fn penalty_table_zero_kappa() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");
    let o = run(&[
        "penalty-table",
        "--config",
        s(&penalty_cfg(d.path(), "0")),
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("penalty_table.csv"));
    assert!(column(&head, &rows, "V_or_Vhat").iter().all(|&v| v == 0.0));
}

#[test]
fn penalty_table_full_mode_needs_sample_or_finite_moment() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"signal":{"law":"beta21"},"error":{"law":"pareto1"}}"#,
    );
    let o = run(&["penalty-table", "--config", s(&cfg), "--out", s(d.path())]);
    assert_eq!(o.status.code(), Some(2));
    let y = write(d.path(), "y.txt", "0.5\n1.5\n2.5\n");
    let out = d.path().join("out");
    let o = run(&["penalty-table", "--config", s(&cfg), "--out", s(&out), "--input", s(&y)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("penalty_table.csv"));
    assert!(column(&head, &rows, "n").iter().all(|&n| n == 3.0));
}

fn oracle_value(stdout: &str, key: &str) -> f64 {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no {key} in {stdout}"))
        .parse()
        .unwrap()
}

#[test]
fn oracle_true_values() {
    let d = TempDir::new().unwrap();
    for (law, want) in [
        (r#"{"law":"beta21"}"#, 4.0 / 3.0),
        (
            r#"{"law":"log_normal"}"#,
            0.25f64.exp() / (2.0 * std::f64::consts::PI.sqrt()),
        ),
    ] {
        let cfg = write(
            d.path(),
            "c.json",
            &format!(r#"{{"signal":{law},"error":{{"law":"pareto1"}}}}"#),
        );
        let start = Instant::now();
        let o = run(&["oracle", "--config", s(&cfg), "--k", "0"]);
        assert!(start.elapsed().as_secs_f64() < 1.0);
        assert!(o.status.success(), "{}", stderr(&o));
        let text = String::from_utf8(o.stdout).unwrap();
        assert!((oracle_value(&text, "theta") - want).abs() < 1e-6, "{text}");
        assert_eq!(oracle_value(&text, "theta_k"), 0.0);
    }
}

#[test]
fn oracle_cutoff_and_k_star() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"signal":{"law":"beta21"},"error":{"law":"pareto1"}}"#,
    );
    let out = d.path().join("out");
    let o = run(&[
        "oracle",
        "--config",
        s(&cfg),
        "--k",
        "1",
        "--smooth",
        "s=0.5",
        "--a",
        "0",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    // θ_1 = (8/(3π)) atan(4π/3)
    let want = 8.0 / (3.0 * std::f64::consts::PI) * (4.0 * std::f64::consts::PI / 3.0).atan();
    assert!((oracle_value(&text, "theta_k") - want).abs() < 1e-10);
    assert!(oracle_value(&text, "lambda") > 0.0);
    assert!(oracle_value(&text, "mse_bound(n=100)") > 0.0);
    assert!(oracle_value(&text, "k_star(n=500)") >= oracle_value(&text, "k_star(n=100)"));
    assert!(out.join("oracle.json").exists());
    let o = run(&["oracle", "--config", s(&cfg), "--smooth", "q=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn oracle_needs_signal() {
    let d = TempDir::new().unwrap();
    let cfg = write(d.path(), "c.json", r#"{"error":{"law":"pareto1"}}"#);
    assert_eq!(run(&["oracle", "--config", s(&cfg)]).status.code(), Some(2));
    assert_eq!(run(&["bogus"]).status.code(), Some(2));
}

#[test]
fn simulate_study_defaults_median_near_truth() {
    // θ_k approaches 4/3 from below; only the last grid point is within 0.15
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"signal":{"law":"beta21"},"error":{"law":"pareto1"},"n_list":[500],"replications":50,
            "grid":[0.1,0.3,0.5,0.7,0.9,1.1,1.3,1.5],"seed":2024,"mode":"fixed_k"}"#,
    );
    let out = d.path().join("out");
    let o = run(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (head, rows) = table(&out.join("summary.csv"));
    let median = column(&head, &rows, "median");
    let last = *median.last().unwrap();
    assert!((last - 4.0 / 3.0).abs() < 0.15, "{median:?}");
    // medians rise toward the target
    assert!(median.windows(2).all(|w| w[1] > w[0] - 0.05), "{median:?}");
}
