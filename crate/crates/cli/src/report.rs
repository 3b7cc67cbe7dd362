//! Report rows, CSV round trip, and the JSON summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{HarnessError, Result};

pub const CSV_HEADER: &str =
    "experiment,trial,t,eta,gamma,eps,error_clean,error_corrupted,g_value,wall_time";

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub experiment: String,
    pub trial: usize,
    pub t: usize,
    pub eta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub error_clean: f64,
    pub error_corrupted: f64,
    pub g_value: f64,
    pub wall_time: f64,
}

impl ReportRow {
    fn key(&self) -> (&str, usize, usize) {
        (&self.experiment, self.trial, self.t)
    }
}

/// Sorts rows by `(experiment, trial, t)`.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| a.key().cmp(&b.key()));
}

pub fn to_csv(rows: &[ReportRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            r.experiment,
            r.trial,
            r.t,
            r.eta,
            r.gamma,
            r.eps,
            r.error_clean,
            r.error_corrupted,
            r.g_value,
            r.wall_time
        );
    }
    out
}

pub fn from_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(HarnessError::Config("report CSV header mismatch".into()));
    }
    let mut rows = Vec::new();
    for (no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 10 {
            return Err(HarnessError::Config(format!(
                "report line {}: {} fields",
                no + 2,
                f.len()
            )));
        }
        let bad =
            |i: usize| HarnessError::Config(format!("report line {}: field {}", no + 2, i + 1));
        let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(i));
        rows.push(ReportRow {
            experiment: f[0].to_string(),
            trial: f[1].parse().map_err(|_| bad(1))?,
            t: f[2].parse().map_err(|_| bad(2))?,
            eta: num(3)?,
            gamma: num(4)?,
            eps: num(5)?,
            error_clean: num(6)?,
            error_corrupted: num(7)?,
            g_value: num(8)?,
            wall_time: num(9)?,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub experiment: String,
    pub t: usize,
    pub trials: usize,
    pub mean_error_clean: f64,
    pub min_error_clean: f64,
    pub max_error_clean: f64,
    /// Fraction of trials with `error_clean <= eps`.
    pub success_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantRecord {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub schema: u32,
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub rows: usize,
    pub series: Vec<SeriesPoint>,
    pub invariants: Vec<InvariantRecord>,
    pub extra: BTreeMap<String, f64>,
}

impl Summary {
    pub fn failures(&self) -> Vec<&InvariantRecord> {
        self.invariants.iter().filter(|r| !r.pass).collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

/// Per-`(experiment, t)` aggregates over trials, in row order.
pub fn series(rows: &[ReportRow]) -> Vec<SeriesPoint> {
    let mut groups: BTreeMap<(&str, usize), Vec<&ReportRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.experiment, r.t)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((exp, t), g)| {
            let errs: Vec<f64> = g.iter().map(|r| r.error_clean).collect();
            let n = errs.len() as f64;
            SeriesPoint {
                experiment: exp.to_string(),
                t,
                trials: errs.len(),
                mean_error_clean: errs.iter().sum::<f64>() / n,
                min_error_clean: errs.iter().copied().fold(f64::INFINITY, f64::min),
                max_error_clean: errs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                success_rate: g.iter().filter(|r| r.error_clean <= r.eps).count() as f64 / n,
            }
        })
        .collect()
}
