//! Minimal-perturbation repair of university teaching schedules.
//!
//! An [`Instance`] holds the obsolete schedule and the new section demand.
//! [`build_model`] turns it into an integer program whose variables are the
//! changes `P` to the schedule, [`solve_instance`] solves that program
//! exactly and [`diff_schedules`] lists the resulting swaps.

pub mod evaluate;
pub mod fixtures;
pub mod grid;
pub mod instance;
pub mod io;
pub mod lp_format;
pub mod model;
pub mod report;
pub mod scenario;
pub mod solver;
pub mod synthetic;

pub use evaluate::{check_feasible, evaluate_objective, FeasibilityReport};
pub use grid::{Array3, Matrix};
pub use instance::{ConflictPair, Course, Dims, FacultyMember, Instance, TimeSlot, ValidationReport};
pub use lp_format::write_lp;
pub use model::{build_model, IlpModel};
pub use report::{diff_schedules, render_report, ReportFormat, SwapEntry, SwapReport};
pub use scenario::{apply_scenario, Scenario, ScenarioError};
pub use solver::{solve, solve_instance, Solution, SolveOptions, SolveStatus};
