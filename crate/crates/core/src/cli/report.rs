//! CSV / JSON / plot-data writers.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::asymptotics::{SweepRecord, Verdict};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = ["case_id", "d", "s", "eps", "scaling", "raw", "scaled", "error", "method"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Dat,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "dat" => Ok(Format::Dat),
            other => Err(Error::invalid(format!("unknown format '{other}' (csv, json, dat)"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Dat => "dat",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub seed: u64,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl Meta {
    pub fn now(seed: u64) -> Self {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp,
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn io_err(e: impl fmt::Display) -> Error {
    Error::invalid(format!("write failed: {e}"))
}

pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io_err)?;
    for r in records {
        w.write_record([
            r.case_id.clone(),
            r.d.to_string(),
            fmt_float(r.s),
            fmt_float(r.eps),
            fmt_float(r.scaling),
            fmt_float(r.raw),
            fmt_float(r.scaled),
            fmt_float(r.error),
            r.method.to_string(),
        ])
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

/// `(eps, scaled, error)` columns, one block per case, blocks separated by two blank lines.
pub fn write_dat<W: Write>(records: &[SweepRecord], mut out: W) -> Result<()> {
    let mut prev: Option<&str> = None;
    for r in records {
        if prev != Some(r.case_id.as_str()) {
            if prev.is_some() {
                writeln!(out, "\n").map_err(io_err)?;
            }
            writeln!(out, "# {}  (eps scaled error)", r.case_id).map_err(io_err)?;
            prev = Some(&r.case_id);
        }
        writeln!(out, "{} {} {}", fmt_float(r.eps), fmt_float(r.scaled), fmt_float(r.error)).map_err(io_err)?;
    }
    out.flush().map_err(io_err)
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    meta: &'a Meta,
    results: &'a [T],
}

pub fn write_json<T: Serialize, W: Write>(results: &[T], meta: &Meta, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &Document { meta, results }).map_err(io_err)?;
    writeln!(out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

pub fn write_records<W: Write>(records: &[SweepRecord], format: Format, meta: &Meta, out: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(records, out),
        Format::Json => write_json(records, meta, out),
        Format::Dat => write_dat(records, out),
    }
}

/// Verdicts as JSON; the csv and dat forms are not defined for verdicts.
pub fn write_verdicts<W: Write>(verdicts: &[Verdict], meta: &Meta, out: W) -> Result<()> {
    write_json(verdicts, meta, out)
}
