//! A small reader for the CPLEX-style LP text format, written independently
//! of the exporter so the two can check each other.

use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub name: String,
    pub coefs: BTreeMap<String, f64>,
    pub sense: RowSense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct LpFile {
    pub maximize: bool,
    pub objective: BTreeMap<String, f64>,
    pub rows: Vec<LpRow>,
    pub bounds: BTreeMap<String, (f64, f64)>,
    pub integers: BTreeSet<String>,
}

impl LpFile {
    /// Every variable name mentioned anywhere in the file.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut names: BTreeSet<String> = self.objective.keys().cloned().collect();
        for row in &self.rows {
            names.extend(row.coefs.keys().cloned());
        }
        names.extend(self.bounds.keys().cloned());
        names.extend(self.integers.iter().cloned());
        names
    }

    pub fn row_satisfied(row: &LpRow, values: &BTreeMap<String, f64>, tol: f64) -> bool {
        let lhs: f64 = row.coefs.iter().map(|(v, c)| c * values.get(v).copied().unwrap_or(0.0)).sum();
        match row.sense {
            RowSense::Le => lhs <= row.rhs + tol,
            RowSense::Ge => lhs >= row.rhs - tol,
            RowSense::Eq => (lhs - row.rhs).abs() <= tol,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Integers,
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Parses a linear expression from tokens; returns coefficients by name.
fn expression(tokens: &[&str]) -> Result<BTreeMap<String, f64>, String> {
    let mut out = BTreeMap::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            _ if is_number(tok) => coef = Some(tok.parse().unwrap()),
            _ => {
                *out.entry(tok.to_string()).or_insert(0.0) += sign * coef.unwrap_or(1.0);
                sign = 1.0;
                coef = None;
            }
        }
    }
    if coef.is_some() {
        return Err("dangling coefficient".into());
    }
    Ok(out)
}

pub fn parse(text: &str) -> Result<LpFile, String> {
    let mut lp = LpFile::default();
    let mut section = Section::None;
    // Statements may continue over several lines; collect until complete.
    let mut pending: Vec<String> = Vec::new();

    let flush = |section: Section, pending: &mut Vec<String>, lp: &mut LpFile| -> Result<(), String> {
        if pending.is_empty() {
            return Ok(());
        }
        let joined = pending.join(" ");
        pending.clear();
        let (name, body) = match joined.split_once(':') {
            Some((n, b)) => (n.trim().to_string(), b.to_string()),
            None => (String::new(), joined.clone()),
        };
        let body = body.replace("<=", " <= ").replace(">=", " >= ");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        match section {
            Section::Objective => lp.objective = expression(&tokens)?,
            Section::Constraints => {
                let k = tokens
                    .iter()
                    .position(|t| matches!(*t, "<=" | ">=" | "="))
                    .ok_or_else(|| format!("row {name} has no sense"))?;
                let sense = match tokens[k] {
                    "<=" => RowSense::Le,
                    ">=" => RowSense::Ge,
                    _ => RowSense::Eq,
                };
                let rhs: f64 = tokens[k + 1..].join("").parse().map_err(|_| format!("row {name}: bad rhs"))?;
                lp.rows.push(LpRow {
                    name,
                    coefs: expression(&tokens[..k])?,
                    sense,
                    rhs,
                });
            }
            _ => {}
        }
        Ok(())
    };

    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("").trim_end();
        if line.trim().is_empty() {
            continue;
        }
        let head = line.trim().to_ascii_lowercase();
        let next = match head.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "general" | "generals" | "gen" | "integer" | "integers" => Some(Section::Integers),
            "end" => Some(Section::None),
            _ => None,
        };
        if let Some(next) = next {
            flush(section, &mut pending, &mut lp)?;
            if next == Section::Objective {
                lp.maximize = head.starts_with("max");
            }
            section = next;
            continue;
        }
        match section {
            Section::Objective | Section::Constraints => {
                // A new statement starts with a `name:` label.
                let starts_new = line.split_whitespace().next().is_some_and(|t| t.ends_with(':') || t.contains(':'));
                if starts_new {
                    flush(section, &mut pending, &mut lp)?;
                }
                pending.push(line.trim().to_string());
            }
            Section::Bounds => {
                let tokens: Vec<&str> = line.split_whitespace().collect();
                match tokens.as_slice() {
                    [lo, "<=", name, "<=", hi] => {
                        let lo = lo.parse().map_err(|_| format!("bad bound {line}"))?;
                        let hi = hi.parse().map_err(|_| format!("bad bound {line}"))?;
                        lp.bounds.insert(name.to_string(), (lo, hi));
                    }
                    _ => return Err(format!("unsupported bound line {line:?}")),
                }
            }
            Section::Integers => lp.integers.extend(line.split_whitespace().map(str::to_string)),
            Section::None => return Err(format!("text outside a section: {line:?}")),
        }
    }
    flush(section, &mut pending, &mut lp)?;
    Ok(lp)
}
