//! Two-column data files extracted from a run report.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;
use crate::suites::write_csv;

fn tag_label(tag: &Value) -> Option<String> {
    match tag {
        Value::String(s) => Some(s.to_ascii_uppercase()),
        Value::Object(m) => m.get("lebesgue")?.as_f64().map(|g| format!("L{g}")),
        _ => None,
    }
}

fn field(v: &Value, key: &str) -> Option<f64> {
    v.get(key)?.as_f64()
}

fn array<'a>(v: &'a Value, path: &[&str]) -> &'a [Value] {
    let mut v = v;
    for key in path {
        match v.get(key) {
            Some(next) => v = next,
            None => return &[],
        }
    }
    v.as_array().map(Vec::as_slice).unwrap_or(&[])
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn emit(&mut self, name: &str, header: [&str; 2], rows: Vec<[f64; 2]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        write_csv(BufWriter::new(file), &header, &rows).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Writes log-log sweeps, distance series and correlation curves found in
/// the report at `report` into `out`, returning the files written.
pub fn emit_plots(report: &Path, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    let text = std::fs::read_to_string(report).map_err(|e| CliError::io(report, e))?;
    let malformed = |reason: String| CliError::Report {
        path: report.display().to_string(),
        reason,
    };
    let value: Value = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    let suites = value
        .get("suites")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed("no suites array".into()))?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut w = Writer { dir: out, written: Vec::new() };
    for suite in suites {
        let name = suite.get("name").and_then(Value::as_str).ok_or_else(|| malformed("suite without name".into()))?;
        let data = suite.get("data").unwrap_or(&Value::Null);
        match name {
            "smoothing" => {
                for entry in array(data, &["gammas"]) {
                    let gamma = field(entry, "gamma").ok_or_else(|| malformed("smoothing entry without gamma".into()))?;
                    let rows = array(entry, &["samples"])
                        .iter()
                        .filter_map(|s| Some((field(s, "initial_norm")?, field(s, "final_norm")?)))
                        .filter(|(a, b)| *a > 0.0 && *b > 0.0)
                        .map(|(a, b)| [2.0 * a.ln(), gamma * b.ln()])
                        .collect();
                    w.emit(&format!("smoothing_gamma{gamma}.csv"), ["log_norm_u0_sq", "log_norm_result_pow"], rows)?;
                }
            }
            "h1_smoothing" => {
                let rows = array(data, &["fit", "samples"])
                    .iter()
                    .filter_map(|s| Some((field(s, "initial_norm")?, field(s, "gradient_norm")?)))
                    .filter(|(a, b)| *a > 0.0 && *b > 0.0)
                    .map(|(a, b)| [a.ln(), b.ln()])
                    .collect();
                w.emit("h1_smoothing.csv", ["log_norm_u0", "log_norm_gradient"], rows)?;
            }
            "attractor" | "dimension" | "net_transport" => {
                for series in array(data, &["attraction"]) {
                    let label = series.get("tag").and_then(tag_label).unwrap_or_else(|| "unknown".into());
                    let rows = array(series, &["points"])
                        .iter()
                        .filter_map(|p| Some([p.get(0)?.as_f64()?, p.get(1)?.as_f64()?]))
                        .collect();
                    w.emit(&format!("attraction_{label}.csv"), ["t", "dist"], rows)?;
                }
                for est in array(data, &["dimension", "estimates"]) {
                    let label = est.get("tag").and_then(tag_label).unwrap_or_else(|| "unknown".into());
                    let scales = array(est, &["scales"]);
                    let fractions = array(est, &["fractions"]);
                    let rows = scales
                        .iter()
                        .zip(fractions)
                        .filter_map(|(s, f)| Some((s.as_f64()?, f.as_f64()?)))
                        .filter(|(_, f)| *f > 0.0)
                        .map(|(s, f)| [s.ln(), f.ln()])
                        .collect();
                    w.emit(&format!("correlation_{label}.csv"), ["log_eps", "log_C"], rows)?;
                }
            }
            _ => {}
        }
    }
    Ok(w.written)
}
