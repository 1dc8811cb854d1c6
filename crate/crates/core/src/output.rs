//! CSV and JSON writers.
//!
//! Floats are written as `{:.16e}` (17 significant digits, `.` decimal point),
//! which round-trips every finite `f64`. Output depends only on the data, so
//! identical inputs give byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::operator::Complex;
use crate::tdi::{HarmonicFit, PhaseScan};
use crate::Vec3;

pub const TOOL_NAME: &str = "tdi";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Round-trippable text form of a double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table<W: Write>(w: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for row in rows {
        out.write_record(row.iter().map(|&x| fmt_f64(x)))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsfRow {
    pub p_dot_d: f64,
    pub t1: f64,
    pub t2: f64,
    pub value: Complex,
    /// Monte Carlo standard error; `None` for exact values.
    pub stderr: Option<f64>,
}

/// `p_dot_d,t1,t2,s_re,s_im`, plus `s_stderr` when any row carries one.
pub fn write_isf_csv<W: Write>(w: W, rows: &[IsfRow]) -> Result<()> {
    let with_se = rows.iter().any(|r| r.stderr.is_some());
    let mut header = vec!["p_dot_d", "t1", "t2", "s_re", "s_im"];
    if with_se {
        header.push("s_stderr");
    }
    write_table(
        w,
        &header,
        rows.iter().map(|r| {
            let mut v = vec![r.p_dot_d, r.t1, r.t2, r.value.re, r.value.im];
            if with_se {
                v.push(r.stderr.unwrap_or(0.0));
            }
            v
        }),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DcfRow {
    pub r: Vec3,
    pub t1: f64,
    pub t2: f64,
    pub value: Complex,
}

/// `r_x,r_y,r_z,t1,t2,g_re,g_im`.
pub fn write_dcf_csv<W: Write>(w: W, rows: &[DcfRow]) -> Result<()> {
    write_table(
        w,
        &["r_x", "r_y", "r_z", "t1", "t2", "g_re", "g_im"],
        rows.iter().map(|r| vec![r.r[0], r.r[1], r.r[2], r.t1, r.t2, r.value.re, r.value.im]),
    )
}

/// `phi,i_plus,i_minus`, plus `i_plus_stderr,i_minus_stderr` for stochastic scans.
pub fn write_scan_csv<W: Write>(w: W, scan: &PhaseScan) -> Result<()> {
    let stochastic = scan.meta.stochastic;
    let header: &[&str] = if stochastic {
        &["phi", "i_plus", "i_minus", "i_plus_stderr", "i_minus_stderr"]
    } else {
        &["phi", "i_plus", "i_minus"]
    };
    write_table(
        w,
        header,
        scan.rows.iter().map(|r| {
            if stochastic {
                vec![r.phi, r.i_plus, r.i_minus, r.i_plus_stderr, r.i_minus_stderr]
            } else {
                vec![r.phi, r.i_plus, r.i_minus]
            }
        }),
    )
}

/// `t,intensity`.
pub fn write_moessbauer_csv<W: Write>(w: W, t: &[f64], intensity: &[f64]) -> Result<()> {
    write_table(w, &["t", "intensity"], t.iter().zip(intensity).map(|(&t, &i)| vec![t, i]))
}

/// Metadata written next to every CSV file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub tool: String,
    pub tool_version: String,
    pub command: String,
    pub model_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec3>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t2: Option<f64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub time_units: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<HarmonicFit>,
    /// Fully resolved run configuration.
    pub config: serde_json::Value,
}

impl Sidecar {
    pub fn new(command: &str, model_id: &str, seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            tool_version: TOOL_VERSION.into(),
            command: command.into(),
            model_id: model_id.into(),
            p: None,
            t1: None,
            t2: None,
            seed,
            time_units: None,
            fit: None,
            config,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<W: Write, T: Serialize + ?Sized>(mut w: W, value: &T) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    Ok(())
}
