//! Sweep records and their serialization.
//!
//! Fixed column order:
//! `sweep_value, mi_asymptotic, mi_mc_mean, mi_mc_stderr, mi_mc_min,
//!  mi_mc_max, residual, iterations, wall_ms`.
//!
//! Missing Monte Carlo fields are emitted as empty (CSV) or null (JSONL),
//! never as zero. Timing is recorded in memory for every record but only
//! serialized when requested: identical config and seed then produce
//! byte-identical output files.

use std::io::Write;

use crate::config::OutputFormat;
use crate::CliError;

#[derive(Debug, Clone)]
pub struct SweepRecord {
    pub sweep_value: f64,
    pub mi_asymptotic: f64,
    pub mi_mc_mean: Option<f64>,
    pub mi_mc_stderr: Option<f64>,
    pub mi_mc_min: Option<f64>,
    pub mi_mc_max: Option<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub wall_ms: u64,
}

pub const CSV_HEADER: &str = "sweep_value,mi_asymptotic,mi_mc_mean,mi_mc_stderr,\
mi_mc_min,mi_mc_max,residual,iterations,wall_ms";

fn fmt_opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

impl SweepRecord {
    pub fn to_csv_line(&self, with_timings: bool) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.sweep_value,
            self.mi_asymptotic,
            fmt_opt(self.mi_mc_mean),
            fmt_opt(self.mi_mc_stderr),
            fmt_opt(self.mi_mc_min),
            fmt_opt(self.mi_mc_max),
            self.residual,
            self.iterations,
            if with_timings {
                self.wall_ms.to_string()
            } else {
                String::new()
            }
        )
    }

    pub fn to_json_line(&self, with_timings: bool) -> String {
        let opt = |v: Option<f64>| match v {
            Some(x) => serde_json::Value::from(x),
            None => serde_json::Value::Null,
        };
        let obj = serde_json::json!({
            "sweep_value": self.sweep_value,
            "mi_asymptotic": self.mi_asymptotic,
            "mi_mc_mean": opt(self.mi_mc_mean),
            "mi_mc_stderr": opt(self.mi_mc_stderr),
            "mi_mc_min": opt(self.mi_mc_min),
            "mi_mc_max": opt(self.mi_mc_max),
            "residual": self.residual,
            "iterations": self.iterations,
            "wall_ms": if with_timings {
                serde_json::Value::from(self.wall_ms)
            } else {
                serde_json::Value::Null
            },
        });
        obj.to_string()
    }
}

pub fn render(records: &[SweepRecord], format: OutputFormat, with_timings: bool) -> String {
    let mut out = String::new();
    match format {
        OutputFormat::Csv => {
            out.push_str(CSV_HEADER);
            out.push('\n');
            for record in records {
                out.push_str(&record.to_csv_line(with_timings));
                out.push('\n');
            }
        }
        OutputFormat::Jsonl => {
            for record in records {
                out.push_str(&record.to_json_line(with_timings));
                out.push('\n');
            }
        }
    }
    out
}

pub fn write_output(path: Option<&str>, content: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, content)
            .map_err(|e| CliError::Io(format!("writing {p}: {e}"))),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(content.as_bytes())
                .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
        }
    }
}
