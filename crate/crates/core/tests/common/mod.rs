//! Helpers shared by the integration test targets.
#![allow(dead_code)]

pub mod lp_reader;

use ttmpp_core::evaluate::{canonical_t, change_count};
use ttmpp_core::{check_feasible, evaluate_objective, solve_instance, Instance, Solution, SolveOptions, SolveStatus};

/// Re-checks a solution from the outside: every constraint family holds,
/// `T` is canonical and the objective re-evaluates within `1e-9`.
pub fn closure(instance: &Instance, solution: &Solution) -> Result<(), String> {
    if solution.status != SolveStatus::Optimal {
        return Ok(());
    }
    let inc = solution.incumbent.as_ref().ok_or("optimal without incumbent")?;
    let report = check_feasible(instance, &inc.p).map_err(|e| e.to_string())?;
    if let Some(f) = report.failed().next() {
        return Err(format!("{:?} violated", f.family));
    }
    if inc.t_aux != canonical_t(&inc.p) {
        return Err("T not canonical".into());
    }
    if inc.change_count != change_count(&inc.p) {
        return Err("change count mismatch".into());
    }
    let value = evaluate_objective(instance, &inc.p, &inc.t_aux).map_err(|e| e.to_string())?;
    if (value - inc.objective).abs() > 1e-9 {
        return Err(format!("objective {} re-evaluates to {value}", inc.objective));
    }
    Ok(())
}

/// Solves and asserts closure on the result.
pub fn solve_checked(instance: &Instance, options: &SolveOptions) -> Solution {
    let solution = solve_instance(instance, options).expect("solve");
    if let Err(e) = closure(instance, &solution) {
        panic!("validator closure failed: {e}");
    }
    solution
}
