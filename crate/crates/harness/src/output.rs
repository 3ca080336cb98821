//! Bit-stable CSV and JSON emission.
//!
//! Floats are written as `{:.16e}` (17 significant digits), which round-trips
//! every `f64`. Missing values are empty CSV fields and JSON `null`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use hpe_admm::linalg::ProductDims;
use hpe_admm::padmm::{sigma_theta, tau_theta};
use hpe_admm::verification::{CellResult, CheckStatus};
use serde::Serialize;
use serde_json::value::RawValue;

use crate::error::{io_err, Result};

pub const CSV_HEADER: [&str; 11] = [
    "k",
    "res_pointwise",
    "res_ergodic",
    "eps_a_s",
    "eps_a_y",
    "eta_k",
    "hpe_lhs",
    "hpe_rhs",
    "bound_pointwise",
    "bound_ergodic_res",
    "bound_ergodic_eps",
];

/// `{:.16e}`, with `NaN`/`inf`/`-inf` spelled out.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// A JSON number with 17 significant digits, or `null` when not finite.
pub fn json_float(x: Option<f64>) -> Box<RawValue> {
    let text = match x {
        Some(v) if v.is_finite() => fmt_float(v),
        _ => "null".to_string(),
    };
    RawValue::from_string(text).expect("formatted float is valid json")
}

/// One CSV row per iteration of a cell.
pub fn csv_rows(cell: &CellResult<f64>) -> Vec<[String; 11]> {
    let run = &cell.run;
    run.records
        .iter()
        .zip(&cell.pointwise.rows)
        .zip(&cell.ergodic.rows)
        .map(|((rec, pw), erg)| {
            [
                rec.k.to_string(),
                fmt_float(pw.observed),
                fmt_float(erg.res_norm),
                fmt_float(erg.eps_s),
                fmt_float(erg.eps_y),
                fmt_float(rec.eta),
                fmt_float(rec.hpe_lhs),
                fmt_float(rec.hpe_rhs),
                pw.bound.map(fmt_float).unwrap_or_default(),
                fmt_float(erg.bound_res),
                fmt_float(erg.bound_eps),
            ]
        })
        .collect()
}

/// `iters_theta=<θ>.csv` with the shortest round-trip spelling of `θ`.
pub fn csv_file_name(theta: f64) -> String {
    format!("iters_theta={theta}.csv")
}

pub fn write_csv(path: &Path, rows: &[[String; 11]]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(CSV_HEADER)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Dims {
    pub s: usize,
    pub y: usize,
    pub x: usize,
}

impl From<ProductDims> for Dims {
    fn from(d: ProductDims) -> Self {
        Self { s: d.s, y: d.y, x: d.x }
    }
}

/// Per-θ entry of `summary.json`.
#[derive(Debug, Serialize)]
pub struct CellSummary {
    pub problem: String,
    pub variant: String,
    pub dims: Dims,
    pub beta: Box<RawValue>,
    pub theta: Box<RawValue>,
    pub sigma_theta: Box<RawValue>,
    pub tau_theta: Box<RawValue>,
    pub d0_estimate: Box<RawValue>,
    pub iterations: usize,
    pub certified: bool,
    /// Worst relative slack of each check; `null` when not applicable.
    pub worst_slacks: BTreeMap<String, Box<RawValue>>,
    #[serde(skip)]
    pub csv_path: PathBuf,
}

impl CellSummary {
    pub fn from_cell(problem: &str, cell: &CellResult<f64>, csv_path: PathBuf) -> Self {
        let theta = cell.spec.theta;
        let worst_slacks = cell
            .checks()
            .into_iter()
            .map(|c| {
                let v = (c.status != CheckStatus::NotApplicable).then_some(c.worst_slack);
                (c.name, json_float(v))
            })
            .collect();
        Self {
            problem: problem.to_string(),
            variant: cell.spec.variant.name().to_string(),
            dims: cell.run.z0.dims().into(),
            beta: json_float(Some(cell.spec.beta)),
            theta: json_float(Some(theta)),
            sigma_theta: json_float(sigma_theta(theta).ok()),
            tau_theta: json_float(tau_theta(theta).ok()),
            d0_estimate: json_float(Some(cell.d0)),
            iterations: cell.run.iterations(),
            certified: cell.certified(),
            worst_slacks,
            csv_path,
        }
    }
}

pub fn write_summary(path: &Path, cells: &[CellSummary]) -> Result<()> {
    let mut text = serde_json::to_string_pretty(cells)?;
    text.push('\n');
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_fixed_width_scientific() {
        assert_eq!(fmt_float(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_float(-1234.5), "-1.2345000000000000e3");
        assert_eq!(fmt_float(f64::NAN), "NaN");
        let x = 0.1f64 + 0.2;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn json_floats_are_numbers_or_null() {
        assert_eq!(json_float(Some(2.0)).get(), "2.0000000000000000e0");
        assert_eq!(json_float(None).get(), "null");
        assert_eq!(json_float(Some(f64::INFINITY)).get(), "null");
        for x in [1e-300, 0.1 + 0.2, -7.0 / 3.0] {
            assert_eq!(json_float(Some(x)).get().parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_file_names_use_round_trip_theta() {
        assert_eq!(csv_file_name(1.0), "iters_theta=1.csv");
        assert_eq!(csv_file_name(1.618033988749895), "iters_theta=1.618033988749895.csv");
    }
}
