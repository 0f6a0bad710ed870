//! Sample parsing, provenance headers and deterministic file writers.

use std::fs;
use std::path::{Path, PathBuf};

use mellin_qfe::{QuadratureRule, Sample, Scheme};
use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Parses one strictly positive decimal per line. Blank lines and anything
/// after `#` are ignored; errors cite the 1-based line number.
pub fn parse_sample(text: &str) -> CliResult<Sample> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body
            .parse()
            .map_err(|_| CliError::usage(format!("line {}: `{body}` is not a number", i + 1)))?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::usage(format!(
                "line {}: {body} is not a finite strictly positive value",
                i + 1
            )));
        }
        values.push(v);
    }
    if values.len() < 2 {
        return Err(CliError::usage(format!(
            "need n ≥ 2 observations, got {}",
            values.len()
        )));
    }
    Ok(Sample::new(values)?)
}

pub fn read_sample(path: &Path) -> CliResult<Sample> {
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_sample(&text)
}

pub fn describe_rule(rule: &QuadratureRule) -> String {
    let scheme = match rule.scheme {
        Scheme::GaussLegendre => "gauss_legendre",
        Scheme::CompositeSimpson => "composite_simpson",
    };
    format!(
        "{scheme} nodes_per_unit={} min_nodes={}",
        rule.nodes_per_unit, rule.min_nodes
    )
}

/// Ordered `key: value` provenance lines written at the top of every file.
#[derive(Debug, Clone)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        let mut h = Header(Vec::new());
        h.push("version", format!("mellin-qfe {VERSION}"));
        h.push("command", command);
        h.push("seed", cfg.seed);
        h.push("quadrature", describe_rule(&cfg.quadrature));
        h.push("kappa", cfg.kappa);
        h.push("setting", cfg.setting_label());
        h.push("c", cfg.c);
        h.push("weight", cfg.weight);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    /// `# key: value` lines.
    pub fn comment_block(&self) -> String {
        self.0.iter().map(|(k, v)| format!("# {k}: {v}\n")).collect()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.0
                .iter()
                .map(|(k, v)| serde_json::json!({ "key": k, "value": v }))
                .collect(),
        )
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::usage(format!("cannot create output directory {}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult<()> {
    fs::write(path, bytes).map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

/// Shortest text that parses back to the same `f64`; exponent form outside
/// `[1e-4, 1e16)`.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e16).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Header block, then a CSV table with `\n` line endings.
pub fn write_csv(path: &Path, header: &Header, columns: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
    let mut out = header.comment_block().into_bytes();
    {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(&mut out);
        let bad = |e: csv::Error| CliError::usage(format!("cannot format {}: {e}", path.display()));
        w.write_record(columns).map_err(bad)?;
        for r in rows {
            debug_assert_eq!(r.len(), columns.len());
            w.write_record(r).map_err(bad)?;
        }
        w.flush()
            .map_err(|e| CliError::usage(format!("cannot format {}: {e}", path.display())))?;
    }
    write_file(path, &out)?;
    Ok(path.to_path_buf())
}

/// `{"header": [...], <body fields>}` pretty-printed with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, header: &Header, body: &T) -> CliResult<PathBuf> {
    let mut value = serde_json::to_value(body)
        .map_err(|e| CliError::Numeric(format!("cannot serialise {}: {e}", path.display())))?;
    let obj = value.as_object_mut().expect("command outputs serialise to objects");
    obj.insert("header".into(), header.to_json());
    let mut text = serde_json::to_string_pretty(&value).expect("json value serialises");
    text.push('\n');
    write_file(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

pub fn write_text(path: &Path, text: &str) -> CliResult<PathBuf> {
    write_file(path, text.as_bytes())?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks_skipped() {
        let s = parse_sample("# header\n1.5\n\n2 # inline\n3e-1\n").unwrap();
        assert_eq!(s.values(), &[1.5, 2.0, 0.3]);
    }

    #[test]
    fn bad_line_reports_number() {
        let e = parse_sample("1\n2\n-3\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().starts_with("line 3:"), "{e}");
        let e = parse_sample("1\nabc\n").unwrap_err();
        assert!(e.to_string().starts_with("line 2:"), "{e}");
        let e = parse_sample("1\n0\n").unwrap_err();
        assert!(e.to_string().starts_with("line 2:"), "{e}");
    }

    #[test]
    fn single_entry_needs_two() {
        let e = parse_sample("4.2\n").unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("need n ≥ 2"));
    }

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, 1.0 / 3.0, 1e-300, 4.0 / 3.0, 3.5e-7, -2e20, 0.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }
}
