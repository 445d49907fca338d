use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::CliError;

/// Relative `--output` paths are resolved against this directory when set.
pub const OUTPUT_DIR_ENV: &str = "GHZ_DISTILL_OUTPUT_DIR";

pub const TABLE_HEADER: &str = "step,fidelity,success_prob,min_inputs,expected_inputs";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Row {
    pub step: usize,
    pub fidelity: f64,
    pub success_prob: f64,
    pub min_inputs: u128,
    pub expected_inputs: f64,
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "null".into()
    }
}

#[derive(Serialize)]
struct JsonRow<'a> {
    step: usize,
    fidelity: &'a RawValue,
    success_prob: &'a RawValue,
    min_inputs: &'a RawValue,
    expected_inputs: &'a RawValue,
}

fn raw(s: String) -> Result<Box<RawValue>, CliError> {
    Ok(RawValue::from_string(s)?)
}

pub fn write_rows(w: &mut dyn Write, rows: &[Row], format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            writeln!(w, "{TABLE_HEADER}")?;
            for r in rows {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    r.step,
                    num(r.fidelity),
                    num(r.success_prob),
                    r.min_inputs,
                    num(r.expected_inputs)
                )?;
            }
        }
        Format::Json => {
            let mut owned = Vec::with_capacity(rows.len());
            for r in rows {
                owned.push((
                    r.step,
                    raw(num(r.fidelity))?,
                    raw(num(r.success_prob))?,
                    raw(r.min_inputs.to_string())?,
                    raw(num(r.expected_inputs))?,
                ));
            }
            let json: Vec<JsonRow<'_>> = owned
                .iter()
                .map(|(step, f, p, m, e)| JsonRow {
                    step: *step,
                    fidelity: f,
                    success_prob: p,
                    min_inputs: m,
                    expected_inputs: e,
                })
                .collect();
            serde_json::to_writer_pretty(&mut *w, &json)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub family: String,
    pub threshold: f64,
    pub lo: f64,
    pub hi: f64,
    pub rule: String,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Serialize)]
struct JsonThreshold<'a> {
    family: &'a str,
    threshold: &'a RawValue,
    lo: &'a RawValue,
    hi: &'a RawValue,
    rule: &'a str,
}

pub fn write_threshold(w: &mut dyn Write, r: &ThresholdRow, format: Format) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            writeln!(w, "family,threshold,lo,hi,rule")?;
            writeln!(
                w,
                "{},{},{},{},{}",
                csv_field(&r.family),
                num(r.threshold),
                num(r.lo),
                num(r.hi),
                csv_field(&r.rule)
            )?;
        }
        Format::Json => {
            let (t, lo, hi) = (raw(num(r.threshold))?, raw(num(r.lo))?, raw(num(r.hi))?);
            let j = JsonThreshold { family: &r.family, threshold: &t, lo: &lo, hi: &hi, rule: &r.rule };
            serde_json::to_writer_pretty(&mut *w, &j)?;
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn resolve_output(path: &Path, env_dir: Option<PathBuf>) -> PathBuf {
    match env_dir {
        Some(dir) if path.is_relative() => dir.join(path),
        _ => path.to_path_buf(),
    }
}

/// Runs `body` against the requested destination, stdout when `path` is `None`.
pub fn with_sink(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match path {
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            body(&mut lock)?;
            lock.flush()?;
        }
        Some(p) => {
            let target = resolve_output(p, std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from));
            if let Some(parent) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            let mut w = BufWriter::new(File::create(&target)?);
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<Row> {
        vec![
            Row { step: 1, fidelity: 0.1 + 0.2, success_prob: 0.5, min_inputs: 4, expected_inputs: 8.0 },
            Row { step: 2, fidelity: 1.0, success_prob: 1.0 / 3.0, min_inputs: 16, expected_inputs: 48.0 },
        ]
    }

    #[test]
    fn csv_round_trips_losslessly() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &sample(), Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(TABLE_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[1].parse::<f64>().unwrap(), 0.1 + 0.2);
        assert_eq!(first[1], "3.0000000000000004e-1");
    }

    #[test]
    fn json_mirrors_csv_fields() {
        let mut buf = Vec::new();
        write_rows(&mut buf, &sample(), Format::Json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        let row = &v[1];
        let keys: Vec<&str> = row.as_object().unwrap().keys().map(String::as_str).collect();
        let mut want: Vec<&str> = TABLE_HEADER.split(',').collect();
        want.sort_unstable();
        let mut keys_sorted = keys.clone();
        keys_sorted.sort_unstable();
        assert_eq!(keys_sorted, want);
        assert_eq!(row["success_prob"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(row["min_inputs"].as_u64().unwrap(), 16);
    }

    #[test]
    fn env_dir_applies_to_relative_paths_only() {
        let dir = Some(PathBuf::from("/data"));
        assert_eq!(resolve_output(Path::new("a.csv"), dir.clone()), PathBuf::from("/data/a.csv"));
        assert_eq!(resolve_output(Path::new("/x/a.csv"), dir), PathBuf::from("/x/a.csv"));
        assert_eq!(resolve_output(Path::new("a.csv"), None), PathBuf::from("a.csv"));
    }
}
