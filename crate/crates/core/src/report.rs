//! Exploration reports as aligned text, CSV or JSON.
//!
//! Text and CSV round to two decimals (half-up) for display; JSON carries
//! the unrounded values.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::dse::{Exploration, Verdict};
use crate::scalar::{fmt2, Scalar};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("unknown report format `{0}` (expected text, csv or json)")]
    UnknownFormat(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(ReportError::UnknownFormat(s.to_string())),
        }
    }
}

impl fmt::Display for ReportFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReportFormat::Text => "text",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelCell {
    pub kernel: String,
    pub cycles: u32,
    pub et_ns: f64,
    pub dr_percent: f64,
    /// `None` for the base array.
    pub stalls: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub arch: String,
    pub area_slices: f64,
    pub area_reduction_percent: f64,
    pub array_delay_ns: f64,
    pub kernels: Vec<KernelCell>,
    pub total_et_ns: f64,
    pub status: String,
    pub pareto: bool,
    pub optimal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub kernels: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub pareto: Vec<String>,
    pub optimal: Option<String>,
    pub skipped: Vec<String>,
}

fn status(v: &Verdict) -> String {
    match v {
        Verdict::Accepted => "accepted".into(),
        Verdict::AreaTooLarge { .. } => "rejected:area".into(),
        Verdict::TooSlow { .. } => "rejected:et".into(),
    }
}

impl Report {
    pub fn from_exploration<T: Scalar>(x: &Exploration<T>) -> Self {
        let rows: Vec<ReportRow> = x
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let base = c.eval.arch.shared_resource().is_none();
                ReportRow {
                    arch: c.eval.label(),
                    area_slices: c.eval.area.estimated_slices.to_f64(),
                    area_reduction_percent: c.eval.area_reduction.to_f64(),
                    array_delay_ns: c.eval.array_delay.to_f64(),
                    kernels: c
                        .eval
                        .per_kernel
                        .iter()
                        .map(|k| KernelCell {
                            kernel: k.kernel_name.clone(),
                            cycles: k.cycles,
                            et_ns: k.et_ns.to_f64(),
                            dr_percent: k.dr_percent.to_f64(),
                            stalls: (!base).then_some(k.stalls),
                        })
                        .collect(),
                    total_et_ns: c.eval.total_et.to_f64(),
                    status: status(&c.verdict),
                    pareto: c.pareto,
                    optimal: x.optimal == Some(i),
                }
            })
            .collect();
        Report {
            kernels: x.kernels.clone(),
            pareto: rows.iter().filter(|r| r.pareto).map(|r| r.arch.clone()).collect(),
            optimal: rows.iter().find(|r| r.optimal).map(|r| r.arch.clone()),
            skipped: x.skipped.iter().map(|s| format!("{}: {}", s.variant, s.reason)).collect(),
            rows,
        }
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["Arch'", "area(slices)", "R(%)", "delay(ns)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        for k in &self.kernels {
            for col in ["cycle", "ET(ns)", "DR(%)", "stall"] {
                h.push(format!("{k} {col}"));
            }
        }
        h.extend(["total ET(ns)", "status", "pareto", "optimal"].map(String::from));
        h
    }

    fn cells(&self, row: &ReportRow) -> Vec<String> {
        let mut out = vec![
            row.arch.clone(),
            fmt2(row.area_slices),
            fmt2(row.area_reduction_percent),
            fmt2(row.array_delay_ns),
        ];
        for k in &row.kernels {
            out.push(k.cycles.to_string());
            out.push(fmt2(k.et_ns));
            out.push(fmt2(k.dr_percent));
            out.push(k.stalls.map_or_else(|| "-".to_string(), |s| s.to_string()));
        }
        out.push(fmt2(row.total_et_ns));
        out.push(row.status.clone());
        out.push(if row.pareto { "yes" } else { "no" }.into());
        out.push(if row.optimal { "yes" } else { "no" }.into());
        out
    }

    pub fn to_csv(&self) -> Result<String, ReportError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header())?;
        for row in &self.rows {
            w.write_record(self.cells(row))?;
        }
        let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn to_text(&self) -> String {
        let mut table = vec![self.header()];
        table.extend(self.rows.iter().map(|r| self.cells(r)));
        let widths: Vec<usize> = (0..table[0].len())
            .map(|c| table.iter().map(|r| r[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (cell, &w))| {
                    if i == 0 {
                        format!("{cell:<w$}")
                    } else {
                        format!("{cell:>w$}")
                    }
                })
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out.push_str(&format!("\nPareto set: {}\n", self.pareto.join(", ")));
        out.push_str(&format!(
            "Selected: {}\n",
            self.optimal.as_deref().unwrap_or("none")
        ));
        for s in &self.skipped {
            out.push_str(&format!("Skipped {s}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String, ReportError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, ReportError> {
        match format {
            ReportFormat::Text => Ok(self.to_text()),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }
}
