//! Exact solution of the reassignment model.
//!
//! [`solve`] runs branch-and-bound over the simplex relaxation. With
//! `min_change_phase` enabled (the default) a second integer program then
//! minimizes the number of changed schedule cells among all optima of the
//! first, see [`min_change_refine`].

mod branch;
mod brute_force;
mod simplex;

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use brute_force::{brute_force, BruteForceError, ENUMERATION_BUDGET};
pub use simplex::{solve_lp_relaxation, solve_lp_relaxation_with, LpSolution, LpStatus};

use crate::evaluate::{canonical_t, change_count, check_feasible, evaluate_objective, FeasibilityReport};
use crate::grid::{Array3, Matrix};
use crate::instance::{Instance, ValidationReport};
use crate::model::{build_model, IlpModel, LinearConstraint, RowTag, Sense, Term, VarKind, VariableRef};
use branch::{branch_and_bound, SearchResult, SearchStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchingRule {
    #[default]
    MostFractional,
    FirstFractional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub integrality_tolerance: f64,
    pub lp_pivot_tolerance: f64,
    /// `None` means unlimited.
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
    pub min_change_phase: bool,
    pub branching_rule: BranchingRule,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            integrality_tolerance: 1e-6,
            lp_pivot_tolerance: 1e-9,
            node_limit: None,
            time_limit: None,
            min_change_phase: true,
            branching_rule: BranchingRule::MostFractional,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptionsError {
    #[error("{0} must be positive and finite")]
    NonPositiveTolerance(&'static str),
    #[error("{0} must be positive when set")]
    ZeroLimit(&'static str),
}

impl SolveOptions {
    pub fn validate(&self) -> Result<(), OptionsError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.integrality_tolerance) {
            return Err(OptionsError::NonPositiveTolerance("integrality_tolerance"));
        }
        if !positive(self.lp_pivot_tolerance) {
            return Err(OptionsError::NonPositiveTolerance("lp_pivot_tolerance"));
        }
        if self.node_limit == Some(0) {
            return Err(OptionsError::ZeroLimit("node_limit"));
        }
        if self.time_limit == Some(Duration::ZERO) {
            return Err(OptionsError::ZeroLimit("time_limit"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    LimitReached,
    /// The relaxation could not be solved reliably.
    NumericalFailure,
}

/// A feasible perturbation with its canonical linearization values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    pub p: Array3<i8>,
    /// Always `|sum_t p[i][j][t]|`.
    pub t_aux: Matrix<u32>,
    pub objective: f64,
    pub change_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time: Duration,
    /// Relaxation bound at the root of the first phase.
    pub root_bound: Option<f64>,
    pub refine_nodes: u64,
    /// False when the second phase stopped early; the reported schedule is
    /// still optimal for the primary objective.
    pub min_change_proven: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: SolveStatus,
    pub incumbent: Option<Incumbent>,
    /// Upper bound on the optimum; equals the incumbent objective once the
    /// search is exhausted.
    pub best_bound: Option<f64>,
    pub stats: SolveStats,
}

impl Solution {
    pub fn objective(&self) -> Option<f64> {
        self.incumbent.as_ref().map(|inc| inc.objective)
    }

    pub fn change_count(&self) -> Option<usize> {
        self.incumbent.as_ref().map(|inc| inc.change_count)
    }

    /// `best_bound - objective` when both exist.
    pub fn gap(&self) -> Option<f64> {
        Some(self.best_bound? - self.objective()?)
    }
}

fn incumbent_from_values(model: &IlpModel, values: &[f64]) -> Incumbent {
    let d = model.dims;
    let mut p = Array3::filled(d.courses, d.faculty, d.slots, 0i8);
    for v in &model.variables {
        if let (VarKind::P, Some(t)) = (v.var.kind, v.var.slot) {
            p.set(v.var.course, v.var.faculty, t, values[model.index_of(v.var)].round() as i8);
        }
    }
    let t_aux = canonical_t(&p);
    let mut canonical = values.to_vec();
    for (i, j, &t) in t_aux.iter() {
        canonical[model.index_of(VariableRef::t(i, j))] = f64::from(t);
    }
    Incumbent {
        objective: model.objective_value(&canonical),
        change_count: change_count(&p),
        t_aux,
        p,
    }
}

fn incumbent_values(model: &IlpModel, inc: &Incumbent) -> Vec<f64> {
    let mut values = vec![0.0; model.variables.len()];
    for v in &model.variables {
        values[model.index_of(v.var)] = match (v.var.kind, v.var.slot) {
            (VarKind::P, Some(t)) => f64::from(*inc.p.get(v.var.course, v.var.faculty, t)),
            _ => f64::from(*inc.t_aux.get(v.var.course, v.var.faculty)),
        };
    }
    values
}

fn level_tolerance(z: f64) -> f64 {
    1e-6 * z.abs().max(1.0)
}

/// Second-phase model: fewest changed cells subject to the original rows and
/// the original objective staying at `z_star`.
///
/// With `P` bounded to `[-X, 1 - X]`, `sum (1 - 2X) P` equals `sum |P|`, so the
/// count is linear. The model is maximized, hence the negated coefficients.
pub fn min_change_model(model: &IlpModel, z_star: f64) -> IlpModel {
    let mut refined = model.clone();
    refined.constraints.push(LinearConstraint {
        terms: model.objective.clone(),
        sense: Sense::Ge,
        rhs: z_star - level_tolerance(z_star),
        tag: RowTag::ObjectiveLevel,
    });
    refined.objective = model
        .variables
        .iter()
        .filter(|v| v.var.kind == VarKind::P)
        .map(|v| {
            let x = -v.lower;
            Term {
                var: v.var,
                coef: -((1 - 2 * x) as f64),
            }
        })
        .collect();
    refined
}

fn status_of(result: &SearchResult) -> SolveStatus {
    match result.status {
        SearchStatus::Optimal => SolveStatus::Optimal,
        SearchStatus::Infeasible => SolveStatus::Infeasible,
        SearchStatus::LimitReached => SolveStatus::LimitReached,
        SearchStatus::NumericalFailure => SolveStatus::NumericalFailure,
    }
}

struct Refined {
    incumbent: Option<Incumbent>,
    proven: bool,
    nodes: u64,
    lp_iterations: u64,
}

fn refine(
    model: &IlpModel,
    z_star: f64,
    options: &SolveOptions,
    deadline: Option<Instant>,
    start_from: Option<&Incumbent>,
) -> Refined {
    let refined = min_change_model(model, z_star);
    let initial = start_from.map(|inc| {
        let values = incumbent_values(&refined, inc);
        let obj = refined.objective_value(&values);
        (values, obj)
    });
    let result = branch_and_bound(&refined, options, deadline, initial);
    let incumbent = result
        .incumbent
        .as_ref()
        .map(|(values, _)| incumbent_from_values(model, values))
        .filter(|inc| inc.objective >= z_star - 1e-9 * z_star.abs().max(1.0));
    Refined {
        incumbent,
        proven: result.status == SearchStatus::Optimal,
        nodes: result.nodes,
        lp_iterations: result.lp_iterations,
    }
}

/// Maximizes the model objective; see the module docs for the second phase.
pub fn solve(model: &IlpModel, options: &SolveOptions) -> Solution {
    let start = Instant::now();
    let deadline = options.time_limit.map(|limit| start + limit);
    let first = branch_and_bound(model, options, deadline, None);
    let status = status_of(&first);
    let mut incumbent = first
        .incumbent
        .as_ref()
        .map(|(values, _)| incumbent_from_values(model, values));
    let mut stats = SolveStats {
        nodes: first.nodes,
        lp_iterations: first.lp_iterations,
        root_bound: first.root_bound,
        ..SolveStats::default()
    };

    if status == SolveStatus::Optimal && options.min_change_phase {
        let phase_one = incumbent.clone().expect("optimal search has an incumbent");
        let refined = refine(model, phase_one.objective, options, deadline, Some(&phase_one));
        stats.refine_nodes = refined.nodes;
        stats.lp_iterations += refined.lp_iterations;
        stats.min_change_proven = refined.proven;
        if let Some(better) = refined.incumbent {
            if better.change_count < phase_one.change_count {
                incumbent = Some(better);
            }
        }
    }

    let best_bound = match status {
        SolveStatus::Optimal => incumbent.as_ref().map(|inc| inc.objective),
        _ => first.best_bound,
    };
    stats.wall_time = start.elapsed();
    Solution {
        status,
        incumbent,
        best_bound,
        stats,
    }
}

/// Among solutions reaching objective `z_star`, finds one with the fewest
/// changed cells. `z_star` must be the proven optimum of `model`.
pub fn min_change_refine(model: &IlpModel, z_star: f64, options: &SolveOptions) -> Solution {
    let start = Instant::now();
    let deadline = options.time_limit.map(|limit| start + limit);
    let refined = refine(model, z_star, options, deadline, None);
    let status = match (&refined.incumbent, refined.proven) {
        (Some(_), true) => SolveStatus::Optimal,
        (None, true) => SolveStatus::Infeasible,
        _ => SolveStatus::LimitReached,
    };
    Solution {
        status,
        best_bound: refined.incumbent.as_ref().map(|_| z_star),
        incumbent: refined.incumbent,
        stats: SolveStats {
            nodes: refined.nodes,
            lp_iterations: refined.lp_iterations,
            wall_time: start.elapsed(),
            root_bound: None,
            refine_nodes: refined.nodes,
            min_change_proven: refined.proven,
        },
    }
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("invalid instance:\n{0}")]
    InvalidInstance(ValidationReport),
    #[error(transparent)]
    Options(#[from] OptionsError),
    #[error("solver returned a schedule that fails verification: {0}")]
    Verification(String),
}

/// Validates the instance, solves it and re-checks any returned schedule
/// against the instance data with [`check_feasible`] and
/// [`evaluate_objective`].
pub fn solve_instance(instance: &Instance, options: &SolveOptions) -> Result<Solution, SolveError> {
    options.validate()?;
    let report = instance.validate();
    if !report.is_valid() {
        return Err(SolveError::InvalidInstance(report));
    }
    let solution = solve(&build_model(instance), options);
    verify_solution(instance, &solution)?;
    Ok(solution)
}

/// Checks an incumbent against the instance: every constraint family must
/// pass and the objective must match within `1e-9`.
pub fn verify_solution(instance: &Instance, solution: &Solution) -> Result<(), SolveError> {
    let Some(inc) = &solution.incumbent else {
        return Ok(());
    };
    let report: FeasibilityReport =
        check_feasible(instance, &inc.p).map_err(|e| SolveError::Verification(e.to_string()))?;
    if let Some(failed) = report.failed().next() {
        return Err(SolveError::Verification(format!(
            "{} violated at {:?}",
            failed.family,
            failed.first_violation.as_ref().map(|v| &v.indices)
        )));
    }
    if inc.t_aux != canonical_t(&inc.p) {
        return Err(SolveError::Verification("T is not canonical".into()));
    }
    let value =
        evaluate_objective(instance, &inc.p, &inc.t_aux).map_err(|e| SolveError::Verification(e.to_string()))?;
    if (value - inc.objective).abs() > 1e-9 {
        return Err(SolveError::Verification(format!(
            "objective {} re-evaluates to {value}",
            inc.objective
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cancel_a_s3, reference_instance};
    use crate::scenario::apply_scenario;

    #[test]
    fn unmodified_reference_keeps_schedule() {
        let sol = solve_instance(&reference_instance(), &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective(), Some(0.0));
        assert_eq!(sol.change_count(), Some(0));
        assert_eq!(sol.gap(), Some(0.0));
    }

    #[test]
    fn cancelling_a_at_s3_removes_only_that_section() {
        let inst = apply_scenario(&reference_instance(), &cancel_a_s3()).unwrap();
        let sol = solve_instance(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.objective(), Some(-2.0));
        let inc = sol.incumbent.unwrap();
        assert_eq!(inc.change_count, 1);
        assert_eq!(*inc.p.get(0, 1, 2), -1);
        assert_eq!(*inc.t_aux.get(0, 1), 1);
    }

    #[test]
    fn refine_alone_on_reference() {
        let inst = apply_scenario(&reference_instance(), &cancel_a_s3()).unwrap();
        let model = build_model(&inst);
        let sol = min_change_refine(&model, -2.0, &SolveOptions::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.change_count(), Some(1));
        assert_eq!(sol.objective(), Some(-2.0));

        let base = build_model(&reference_instance());
        let sol = min_change_refine(&base, 0.0, &SolveOptions::default());
        assert_eq!(sol.change_count(), Some(0));
    }

    #[test]
    fn infeasible_demand() {
        let mut inst = reference_instance();
        inst.demand.set(1, 1, 2);
        let sol = solve_instance(&inst, &SolveOptions::default()).unwrap();
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert!(sol.incumbent.is_none());
    }

    #[test]
    fn options_are_validated() {
        let bad = SolveOptions {
            integrality_tolerance: 0.0,
            ..SolveOptions::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolveOptions {
            node_limit: Some(0),
            ..SolveOptions::default()
        };
        assert!(matches!(
            solve_instance(&reference_instance(), &bad),
            Err(SolveError::Options(_))
        ));
    }

    #[test]
    fn min_change_objective_counts_changes() {
        let model = build_model(&reference_instance());
        let refined = min_change_model(&model, 0.0);
        assert_eq!(refined.constraints.len(), model.constraints.len() + 1);
        let mut values = vec![0.0; model.variables.len()];
        // drop A@s1 from f1 (X = 1) and give it to f2 (X = 0)
        values[model.index_of(crate::model::VariableRef::p(0, 0, 0))] = -1.0;
        values[model.index_of(crate::model::VariableRef::p(0, 1, 0))] = 1.0;
        assert_eq!(refined.objective_value(&values), -2.0);
    }
}
