//! Human-facing swap plan: which sections a solution removes, which it adds,
//! and which swap penalties it activates.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evaluate::{objective_parts, DimensionError};
use crate::instance::Instance;
use crate::solver::{Solution, SolveStatus};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    Removed,
    Added,
}

/// One nonzero cell of `P`, rendered with labels.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SwapEntry {
    pub direction: Direction,
    pub course: String,
    pub faculty: String,
    pub slot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivatedPenalty {
    pub course: String,
    pub faculty: String,
    pub t_aux: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwapReport {
    pub schema_version: u32,
    pub status: SolveStatus,
    /// Removed entries first, each group sorted by (course, faculty, slot).
    pub entries: Vec<SwapEntry>,
    pub objective: f64,
    /// The `W` term of the objective.
    pub preference_delta: f64,
    /// The `alpha` term of the objective, subtracted from `preference_delta`.
    pub penalty_total: f64,
    pub activated_penalties: Vec<ActivatedPenalty>,
    pub change_count: usize,
}

impl SwapReport {
    pub fn removed(&self) -> impl Iterator<Item = &SwapEntry> {
        self.entries.iter().filter(|e| e.direction == Direction::Removed)
    }

    pub fn added(&self) -> impl Iterator<Item = &SwapEntry> {
        self.entries.iter().filter(|e| e.direction == Direction::Added)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("solution has no schedule to report (status {0:?})")]
    NoIncumbent(SolveStatus),
    #[error(transparent)]
    Dimension(#[from] DimensionError),
}

pub fn diff_schedules(instance: &Instance, solution: &Solution) -> Result<SwapReport, ReportError> {
    let inc = solution
        .incumbent
        .as_ref()
        .ok_or(ReportError::NoIncumbent(solution.status))?;
    let parts = objective_parts(instance, &inc.p, &inc.t_aux)?;

    let mut entries: Vec<SwapEntry> = inc
        .p
        .iter()
        .filter(|&(_, &v)| v != 0)
        .map(|((i, j, t), &v)| SwapEntry {
            direction: if v < 0 { Direction::Removed } else { Direction::Added },
            course: instance.courses[i].label.clone(),
            faculty: instance.faculty[j].label.clone(),
            slot: instance.slots[t].label.clone(),
        })
        .collect();
    entries.sort();

    let mut activated_penalties: Vec<ActivatedPenalty> = inc
        .t_aux
        .iter()
        .filter(|&(_, _, &v)| v > 0)
        .map(|(i, j, &v)| ActivatedPenalty {
            course: instance.courses[i].label.clone(),
            faculty: instance.faculty[j].label.clone(),
            t_aux: v,
        })
        .collect();
    activated_penalties.sort_by(|a, b| (&a.course, &a.faculty).cmp(&(&b.course, &b.faculty)));

    Ok(SwapReport {
        schema_version: REPORT_SCHEMA_VERSION,
        status: solution.status,
        change_count: entries.len(),
        entries,
        objective: parts.total(),
        preference_delta: parts.preference,
        penalty_total: parts.penalty,
        activated_penalties,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    PlainTable,
    Json,
}

pub fn render_report(report: &SwapReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("report serializes");
            s.push('\n');
            s
        }
        ReportFormat::PlainTable => plain_table(report),
    }
}

const COLUMNS: [&str; 3] = ["Course", "Faculty", "Time slot"];
const NONE_CELL: &str = "(None)";

fn side_rows<'a>(entries: impl Iterator<Item = &'a SwapEntry>) -> Vec<[&'a str; 3]> {
    let rows: Vec<[&str; 3]> = entries
        .map(|e| [e.course.as_str(), e.faculty.as_str(), e.slot.as_str()])
        .collect();
    if rows.is_empty() {
        vec![[NONE_CELL, "", ""]]
    } else {
        rows
    }
}

fn widths(rows: &[[&str; 3]]) -> [usize; 3] {
    let mut w = COLUMNS.map(|c| c.chars().count());
    for row in rows {
        for (k, cell) in row.iter().enumerate() {
            w[k] = w[k].max(cell.chars().count());
        }
    }
    w
}

fn cells(row: &[&str; 3], w: &[usize; 3]) -> String {
    format!("{:<a$}  {:<b$}  {:<c$}", row[0], row[1], row[2], a = w[0], b = w[1], c = w[2])
}

fn number(v: f64) -> String {
    // Avoid printing negative zero.
    format!("{}", if v == 0.0 { 0.0 } else { v })
}

fn plain_table(report: &SwapReport) -> String {
    let removed = side_rows(report.removed());
    let added = side_rows(report.added());
    let (wl, wr) = (widths(&removed), widths(&added));
    let left_width = wl.iter().sum::<usize>() + 4;

    let mut out = String::new();
    let line = |out: &mut String, left: &str, right: &str| {
        let row = format!("{left:<left_width$} | {right}");
        out.push_str(row.trim_end());
        out.push('\n');
    };
    line(&mut out, "Sections removed", "Sections added");
    line(&mut out, &cells(&COLUMNS, &wl), &cells(&COLUMNS, &wr));
    let rule_l = "-".repeat(left_width);
    let rule_r = "-".repeat(wr.iter().sum::<usize>() + 4);
    line(&mut out, &rule_l, &rule_r);
    for k in 0..removed.len().max(added.len()) {
        let l = removed.get(k).map(|r| cells(r, &wl)).unwrap_or_default();
        let r = added.get(k).map(|r| cells(r, &wr)).unwrap_or_default();
        line(&mut out, &l, &r);
    }

    out.push('\n');
    let _ = writeln!(out, "Status: {:?}", report.status);
    let _ = writeln!(
        out,
        "Objective: {} (preference {}, penalty {})",
        number(report.objective),
        number(report.preference_delta),
        number(report.penalty_total)
    );
    let _ = writeln!(out, "Changes: {}", report.change_count);
    if report.activated_penalties.is_empty() {
        out.push_str("Activated penalties: (None)\n");
    } else {
        out.push_str("Activated penalties:\n");
        for a in &report.activated_penalties {
            let _ = writeln!(out, "  {} / {}: {}", a.course, a.faculty, a.t_aux);
        }
    }
    out
}
