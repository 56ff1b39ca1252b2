// SPDX-License-Identifier: Apache-2.0

use std::io::Write;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

impl Status {
    fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// One verified quantity. `status` is `pass` iff `residual <= max(tol, bound)`;
/// non-finite values are stored as JSON `null`.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub case: String,
    pub inputs: Value,
    pub value: f64,
    pub reference: f64,
    pub residual: f64,
    pub bound: f64,
    pub tol: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    pub fn new(case: impl Into<String>, inputs: Value, value: f64, reference: f64, bound: f64, tol: f64) -> Self {
        Self::with_residual(case, inputs, value, reference, (value - reference).abs(), bound, tol)
    }

    pub fn with_residual(
        case: impl Into<String>,
        inputs: Value,
        value: f64,
        reference: f64,
        residual: f64,
        bound: f64,
        tol: f64,
    ) -> Self {
        // NaN compares false, so it fails
        let status = if residual <= tol.max(bound) {
            Status::Pass
        } else {
            Status::Fail
        };
        Report {
            case: case.into(),
            inputs,
            value,
            reference,
            residual,
            bound,
            tol,
            status,
            error: None,
        }
    }

    pub fn failed(case: impl Into<String>, inputs: Value, err: &CliError, tol: f64) -> Self {
        Report {
            case: case.into(),
            inputs,
            value: f64::NAN,
            reference: f64::NAN,
            residual: f64::NAN,
            bound: f64::NAN,
            tol,
            status: Status::Error,
            error: Some(err.to_string()),
        }
    }
}

/// 3 if any case errored, else 1 if any failed, else 0.
pub fn exit_code(reports: &[Report]) -> u8 {
    if reports.iter().any(|r| r.status == Status::Error) {
        3
    } else if reports.iter().any(|r| r.status == Status::Fail) {
        1
    } else {
        0
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        serde_json::to_string(&x).unwrap_or_default()
    } else {
        String::new()
    }
}

pub fn write_reports<W: Write>(out: W, reports: &[Report], format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let mut out = out;
            for r in reports {
                let line = serde_json::to_string(r).map_err(|e| CliError::Input(e.to_string()))?;
                writeln!(out, "{line}")?;
            }
            out.flush()?;
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let header = ["case", "inputs", "value", "reference", "residual", "bound", "tol", "status", "error"];
            w.write_record(header).map_err(csv_err)?;
            for r in reports {
                w.write_record([
                    r.case.clone(),
                    r.inputs.to_string(),
                    num(r.value),
                    num(r.reference),
                    num(r.residual),
                    num(r.bound),
                    num(r.tol),
                    r.status.as_str().to_string(),
                    r.error.clone().unwrap_or_default(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Io(std::io::Error::other(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn status_follows_fields() {
        let r = Report::new("a", json!({}), 1.0, 1.0 + 1e-9, 0.0, 1e-8);
        assert_eq!(r.status, Status::Pass);
        let r = Report::new("a", json!({}), 1.0, 1.1, 0.2, 1e-8);
        assert_eq!(r.status, Status::Pass);
        let r = Report::new("a", json!({}), 1.0, 1.1, 0.0, 1e-8);
        assert_eq!(r.status, Status::Fail);
        let r = Report::new("a", json!({}), f64::NAN, 1.0, 0.0, 1e-8);
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn exit_codes() {
        let pass = Report::new("a", json!({}), 1.0, 1.0, 0.0, 1e-8);
        let fail = Report::new("b", json!({}), 1.0, 2.0, 0.0, 1e-8);
        let err = Report::failed("c", json!({}), &CliError::Input("x".into()), 1e-8);
        assert_eq!(exit_code(&[]), 0);
        assert_eq!(exit_code(std::slice::from_ref(&pass)), 0);
        assert_eq!(exit_code(&[pass.clone(), fail.clone()]), 1);
        assert_eq!(exit_code(&[fail, err, pass]), 3);
    }

    #[test]
    fn nan_is_null_in_json_and_empty_in_csv() {
        let err = Report::failed("c", json!({"t": 1.0}), &CliError::Input("bad".into()), 1e-8);
        let mut buf = Vec::new();
        write_reports(&mut buf, std::slice::from_ref(&err), Format::Json).unwrap();
        let line = String::from_utf8(buf).unwrap();
        assert!(line.contains("\"value\":null") && line.contains("\"status\":\"error\""));
        let mut buf = Vec::new();
        write_reports(&mut buf, &[err], Format::Csv).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().starts_with("c,\"{\"\"t\"\":1.0}\",,,,,"));
    }
}
