//! Machine-readable result output: CSV and JSON-lines with a fixed column
//! set, plus the inverse parser used for round-trip checks.

use crate::sweep::{Algorithm, SweepVariable, TrialResult};
use broad_core::Position3D;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};

/// Result serialization formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

pub const CSV_HEADER: &str = "algorithm,sweep_variable,sweep_value,trial,seed,satisfied_count,\
backhaul_util,access_util,dbs_x_m,dbs_y_m,dbs_h_m,runtime_ms";

/// Renders with 6 significant digits, plain decimal where readable and
/// scientific notation outside [1e-4, 1e6).
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 {
        return "0.00000".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exponent = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exponent) {
        let decimals = (5 - exponent).max(0) as usize;
        format!("{x:.decimals$}")
    } else {
        format!("{x:.5e}")
    }
}

/// One output row; field names are the column names in both formats.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    algorithm: String,
    sweep_variable: String,
    sweep_value: f64,
    trial: usize,
    seed: u64,
    satisfied_count: usize,
    backhaul_util: f64,
    access_util: f64,
    dbs_x_m: f64,
    dbs_y_m: f64,
    dbs_h_m: f64,
    runtime_ms: f64,
}

impl From<&TrialResult> for Record {
    fn from(r: &TrialResult) -> Self {
        Record {
            algorithm: r.algorithm.name().into(),
            sweep_variable: r.sweep_variable.name().into(),
            sweep_value: r.sweep_value,
            trial: r.trial,
            seed: r.seed,
            satisfied_count: r.satisfied_count,
            backhaul_util: r.backhaul_utilization,
            access_util: r.access_utilization,
            dbs_x_m: r.dbs_position.x,
            dbs_y_m: r.dbs_position.y,
            dbs_h_m: r.dbs_position.h,
            runtime_ms: r.runtime_ms,
        }
    }
}

impl Record {
    fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.algorithm,
            self.sweep_variable,
            format_sig6(self.sweep_value),
            self.trial,
            self.seed,
            self.satisfied_count,
            format_sig6(self.backhaul_util),
            format_sig6(self.access_util),
            format_sig6(self.dbs_x_m),
            format_sig6(self.dbs_y_m),
            format_sig6(self.dbs_h_m),
            format_sig6(self.runtime_ms),
        )
    }

    fn into_result(self) -> Result<TrialResult, String> {
        Ok(TrialResult {
            algorithm: Algorithm::parse(&self.algorithm)
                .ok_or_else(|| format!("unknown algorithm {:?}", self.algorithm))?,
            sweep_variable: SweepVariable::parse(&self.sweep_variable)
                .ok_or_else(|| format!("unknown sweep variable {:?}", self.sweep_variable))?,
            sweep_value: self.sweep_value,
            trial: self.trial,
            seed: self.seed,
            satisfied_count: self.satisfied_count,
            backhaul_utilization: self.backhaul_util,
            access_utilization: self.access_util,
            dbs_position: Position3D::new(self.dbs_x_m, self.dbs_y_m, self.dbs_h_m),
            runtime_ms: self.runtime_ms,
        })
    }
}

/// Writes all rows in the chosen format (CSV includes the header row).
pub fn emit_results<W: Write>(
    results: &[TrialResult],
    format: OutputFormat,
    dest: &mut W,
) -> io::Result<()> {
    match format {
        OutputFormat::Csv => {
            writeln!(dest, "{CSV_HEADER}")?;
            for result in results {
                writeln!(dest, "{}", Record::from(result).csv_row())?;
            }
        }
        OutputFormat::JsonLines => {
            for result in results {
                let line = serde_json::to_string(&Record::from(result))
                    .expect("record serialization is infallible");
                writeln!(dest, "{line}")?;
            }
        }
    }
    Ok(())
}

/// [`emit_results`] into an owned string.
pub fn results_to_string(results: &[TrialResult], format: OutputFormat) -> String {
    let mut buffer = Vec::new();
    emit_results(results, format, &mut buffer).expect("writing to memory cannot fail");
    String::from_utf8(buffer).expect("output is ASCII")
}

fn parse_csv_row(line: &str, number: usize) -> Result<TrialResult, String> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 12 {
        return Err(format!("line {number}: expected 12 fields, found {}", fields.len()));
    }
    let num = |i: usize| -> Result<f64, String> {
        fields[i]
            .parse::<f64>()
            .map_err(|_| format!("line {number}: field {i} is not a number"))
    };
    Record {
        algorithm: fields[0].into(),
        sweep_variable: fields[1].into(),
        sweep_value: num(2)?,
        trial: fields[3]
            .parse()
            .map_err(|_| format!("line {number}: bad trial index"))?,
        seed: fields[4]
            .parse()
            .map_err(|_| format!("line {number}: bad seed"))?,
        satisfied_count: fields[5]
            .parse()
            .map_err(|_| format!("line {number}: bad satisfied count"))?,
        backhaul_util: num(6)?,
        access_util: num(7)?,
        dbs_x_m: num(8)?,
        dbs_y_m: num(9)?,
        dbs_h_m: num(10)?,
        runtime_ms: num(11)?,
    }
    .into_result()
    .map_err(|e| format!("line {number}: {e}"))
}

/// Inverse of [`emit_results`] (values round to 6 significant digits for
/// CSV input).
pub fn parse_results(text: &str, format: OutputFormat) -> Result<Vec<TrialResult>, String> {
    match format {
        OutputFormat::Csv => {
            let mut lines = text.lines();
            match lines.next() {
                Some(header) if header == CSV_HEADER => {}
                _ => return Err("missing or wrong CSV header".into()),
            }
            lines
                .enumerate()
                .filter(|(_, line)| !line.is_empty())
                .map(|(i, line)| parse_csv_row(line, i + 2))
                .collect()
        }
        OutputFormat::JsonLines => text
            .lines()
            .enumerate()
            .filter(|(_, line)| !line.is_empty())
            .map(|(i, line)| {
                serde_json::from_str::<Record>(line)
                    .map_err(|e| format!("line {}: {e}", i + 1))
                    .and_then(Record::into_result)
            })
            .collect(),
    }
}
