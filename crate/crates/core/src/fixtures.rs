//! A three-slot reference instance small enough to enumerate by hand. Used by
//! the test suites, the CLI golden files and the documentation.
//!
//! Courses `A`, `B` (one load unit each); faculty `f1` (load exactly 2) and
//! `f2` (load 0 to 1); slots `s1`..`s3` without conflicts; all weights and
//! eligibilities equal to one. In the obsolete schedule `f1` teaches A@s1
//! and B@s2 while `f2` teaches A@s3, and the demand equals that schedule.

use crate::grid::{Array3, Matrix};
use crate::instance::{Course, FacultyMember, Instance, TimeSlot};
use crate::scenario::Scenario;

pub fn reference_instance() -> Instance {
    let mut x = Array3::filled(2, 2, 3, false);
    x.set(0, 0, 0, true);
    x.set(1, 0, 1, true);
    x.set(0, 1, 2, true);
    let mut instance = Instance {
        courses: vec![Course::new("A", "A", 1.0), Course::new("B", "B", 1.0)],
        faculty: vec![
            FacultyMember::new("f1", "f1", 2.0, 2.0),
            FacultyMember::new("f2", "f2", 0.0, 1.0),
        ],
        slots: vec![
            TimeSlot::new("s1", "s1"),
            TimeSlot::new("s2", "s2"),
            TimeSlot::new("s3", "s3"),
        ],
        conflicts: Vec::new(),
        obsolete_schedule: x,
        preferences: Matrix::filled(2, 3, 1.0),
        swap_penalties: Matrix::filled(2, 2, 1.0),
        demand: Matrix::filled(2, 3, 0),
        eligibility: Matrix::filled(2, 2, true),
    };
    instance.demand = instance.baseline_demand();
    instance
}

/// Cancels the section of `A` at `s3` (taught by `f2`).
pub fn cancel_a_s3() -> Scenario {
    Scenario::new("cancel A@s3").cancel("A", "s3", 1)
}
