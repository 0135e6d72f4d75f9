//! Export of an [`IlpModel`] in the CPLEX-style LP text format, for
//! cross-checking with external solvers.
//!
//! Output is byte-stable: sections, rows and terms follow model order and
//! coefficients use the shortest round-tripping decimal form.

use std::fmt::Write;

use crate::model::{IlpModel, Sense, Term};

const MAX_LINE: usize = 240;

fn coefficient(out: &mut String, first: bool, coef: f64) {
    if coef < 0.0 {
        out.push_str(if first { "-" } else { " -" });
    } else if !first {
        out.push_str(" +");
    }
    let magnitude = coef.abs();
    if magnitude != 1.0 {
        let _ = write!(out, " {magnitude}");
    }
}

fn write_terms(out: &mut String, model: &IlpModel, head: &str, terms: &[Term]) {
    let mut line = String::from(head);
    if terms.is_empty() {
        line.push_str(" 0 ");
        line.push_str(&model.variables[0].var.to_string());
    }
    for (k, term) in terms.iter().enumerate() {
        let mut piece = String::new();
        coefficient(&mut piece, k == 0, term.coef);
        let _ = write!(piece, " {}", term.var);
        if line.len() + piece.len() > MAX_LINE {
            out.push_str(&line);
            out.push('\n');
            line = String::from("   ");
        }
        line.push_str(&piece);
    }
    out.push_str(&line);
}

fn write_name_list(out: &mut String, names: impl Iterator<Item = String>) {
    let mut line = String::new();
    for name in names {
        if !line.is_empty() && line.len() + name.len() + 1 > MAX_LINE {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push(' ');
        line.push_str(&name);
    }
    if !line.is_empty() {
        out.push_str(&line);
        out.push('\n');
    }
}

pub fn write_lp(model: &IlpModel) -> String {
    let mut out = String::new();
    let d = model.dims;
    let _ = writeln!(
        out,
        "\\ minimal-perturbation reassignment: {} courses, {} faculty, {} slots",
        d.courses, d.faculty, d.slots
    );
    let _ = writeln!(
        out,
        "\\ {} variables, {} constraints",
        model.variables.len(),
        model.constraints.len()
    );
    out.push_str("Maximize\n");
    if model.variables.is_empty() {
        out.push_str(" obj:\n");
    } else {
        write_terms(&mut out, model, " obj:", &model.objective);
        out.push('\n');
    }

    out.push_str("Subject To\n");
    for row in &model.constraints {
        let head = format!(" {}:", row.tag.row_name());
        write_terms(&mut out, model, &head, &row.terms);
        let sense = match row.sense {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        };
        let rhs = if row.rhs == 0.0 { 0.0 } else { row.rhs };
        let _ = writeln!(out, " {sense} {rhs}");
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.var, v.upper);
    }

    if !model.variables.is_empty() {
        out.push_str("General\n");
        write_name_list(&mut out, model.variables.iter().map(|v| v.var.to_string()));
    }
    out.push_str("End\n");
    out
}
