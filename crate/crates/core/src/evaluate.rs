//! Objective evaluation and constraint checking computed straight from the
//! instance data. Nothing here goes through [`crate::model::IlpModel`], so
//! these functions can independently validate solver output.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{Array3, Matrix};
use crate::instance::{Dims, Instance};
use crate::model::Family;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{array} has shape {found:?}, instance expects {expected:?}")]
pub struct DimensionError {
    pub array: &'static str,
    pub expected: Vec<usize>,
    pub found: Vec<usize>,
}

fn check_p(instance: &Instance, p: &Array3<i8>) -> Result<(), DimensionError> {
    let Dims { courses, faculty, slots } = instance.dims();
    if p.has_shape(courses, faculty, slots) {
        Ok(())
    } else {
        let (a, b, c) = p.dims();
        Err(DimensionError {
            array: "P",
            expected: vec![courses, faculty, slots],
            found: vec![a, b, c],
        })
    }
}

/// The two parts of the objective: `sum W * P` and `sum alpha * T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParts {
    pub preference: f64,
    pub penalty: f64,
}

impl ObjectiveParts {
    pub fn total(&self) -> f64 {
        self.preference - self.penalty
    }
}

pub fn objective_parts(
    instance: &Instance,
    p: &Array3<i8>,
    t_aux: &Matrix<u32>,
) -> Result<ObjectiveParts, DimensionError> {
    check_p(instance, p)?;
    let Dims { courses, faculty, .. } = instance.dims();
    if !t_aux.has_shape(courses, faculty) {
        return Err(DimensionError {
            array: "T",
            expected: vec![courses, faculty],
            found: vec![t_aux.rows(), t_aux.cols()],
        });
    }
    let mut preference = 0.0;
    for ((_, j, t), &v) in p.iter() {
        if v != 0 {
            preference += instance.preferences.get(j, t) * f64::from(v);
        }
    }
    let mut penalty = 0.0;
    for (i, j, &v) in t_aux.iter() {
        if v != 0 {
            penalty += instance.swap_penalties.get(i, j) * f64::from(v);
        }
    }
    Ok(ObjectiveParts { preference, penalty })
}

/// `sum_{j,t} W[j][t] sum_i P[i][j][t] - sum_{i,j} alpha[i][j] T[i][j]`.
pub fn evaluate_objective(instance: &Instance, p: &Array3<i8>, t_aux: &Matrix<u32>) -> Result<f64, DimensionError> {
    objective_parts(instance, p, t_aux).map(|parts| parts.total())
}

/// `T[i][j] = |sum_t P[i][j][t]|`, the smallest values the linearization
/// rows allow.
pub fn canonical_t(p: &Array3<i8>) -> Matrix<u32> {
    let (courses, faculty, slots) = p.dims();
    Matrix::from_fn(courses, faculty, |i, j| {
        (0..slots).map(|t| i64::from(*p.get(i, j, t))).sum::<i64>().unsigned_abs() as u32
    })
}

pub fn change_count(p: &Array3<i8>) -> usize {
    p.as_slice().iter().filter(|&&v| v != 0).count()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyViolation {
    /// Indices of the first violated row, in the family's own index order
    /// (for example `[course, slot]` for assign-all).
    pub indices: Vec<usize>,
    /// Signed amount by which the row misses its bound.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyCheck {
    pub family: Family,
    pub first_violation: Option<FamilyViolation>,
}

impl FamilyCheck {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub families: Vec<FamilyCheck>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.families.iter().all(FamilyCheck::passed)
    }

    pub fn family(&self, family: Family) -> Option<&FamilyCheck> {
        self.families.iter().find(|f| f.family == family)
    }

    pub fn failed(&self) -> impl Iterator<Item = &FamilyCheck> {
        self.families.iter().filter(|f| !f.passed())
    }
}

const LOAD_TOL: f64 = 1e-9;

/// Checks every constraint family for the new schedule `X + P`. Counts are
/// exact integers; only teaching loads (weighted by real-valued units) use a
/// `1e-9` tolerance.
pub fn check_feasible(instance: &Instance, p: &Array3<i8>) -> Result<FeasibilityReport, DimensionError> {
    check_p(instance, p)?;
    let Dims { courses, faculty, slots } = instance.dims();
    let new = |i: usize, j: usize, t: usize| -> i64 {
        i64::from(*instance.obsolete_schedule.get(i, j, t)) + i64::from(*p.get(i, j, t))
    };

    let mut binary = None;
    'binary: for i in 0..courses {
        for j in 0..faculty {
            for t in 0..slots {
                let v = new(i, j, t);
                if !(0..=1).contains(&v) {
                    binary = Some(FamilyViolation {
                        indices: vec![i, j, t],
                        residual: if v < 0 { v as f64 } else { (v - 1) as f64 },
                    });
                    break 'binary;
                }
            }
        }
    }

    let mut assign = None;
    'assign: for i in 0..courses {
        for t in 0..slots {
            let total: i64 = (0..faculty).map(|j| new(i, j, t)).sum();
            let demand = i64::from(*instance.demand.get(i, t));
            if total != demand {
                assign = Some(FamilyViolation {
                    indices: vec![i, t],
                    residual: (total - demand) as f64,
                });
                break 'assign;
            }
        }
    }

    let mut choice = None;
    'choice: for i in 0..courses {
        let sections: i64 = instance.demand.row(i).iter().map(|&m| i64::from(m)).sum();
        for j in 0..faculty {
            let taught: i64 = (0..slots).map(|t| new(i, j, t)).sum();
            let cap = if *instance.eligibility.get(i, j) { sections } else { 0 };
            if taught > cap {
                choice = Some(FamilyViolation {
                    indices: vec![i, j],
                    residual: (taught - cap) as f64,
                });
                break 'choice;
            }
        }
    }

    let mut avail = None;
    'avail: for j in 0..faculty {
        for t in 0..slots {
            let busy: i64 = (0..courses).map(|i| new(i, j, t)).sum();
            let cap = i64::from(*instance.preferences.get(j, t) > 0.0);
            if busy > cap {
                avail = Some(FamilyViolation {
                    indices: vec![j, t],
                    residual: (busy - cap) as f64,
                });
                break 'avail;
            }
        }
    }

    let mut load = None;
    for (j, member) in instance.faculty.iter().enumerate() {
        let total: f64 = instance
            .courses
            .iter()
            .enumerate()
            .map(|(i, c)| c.load_units * (0..slots).map(|t| new(i, j, t)).sum::<i64>() as f64)
            .sum();
        if total > member.load_max + LOAD_TOL {
            load = Some(FamilyViolation {
                indices: vec![j],
                residual: total - member.load_max,
            });
            break;
        }
        if total < member.load_min - LOAD_TOL {
            load = Some(FamilyViolation {
                indices: vec![j],
                residual: total - member.load_min,
            });
            break;
        }
    }

    let mut conflict = None;
    'conflict: for j in 0..faculty {
        for pair in &instance.conflicts {
            let busy: i64 = (0..courses)
                .map(|i| new(i, j, pair.slot_a) + new(i, j, pair.slot_b))
                .sum();
            if busy > 1 {
                conflict = Some(FamilyViolation {
                    indices: vec![j, pair.slot_a, pair.slot_b],
                    residual: (busy - 1) as f64,
                });
                break 'conflict;
            }
        }
    }

    let families = [
        (Family::BinarySchedule, binary),
        (Family::AssignAll, assign),
        (Family::ChoiceList, choice),
        (Family::Availability, avail),
        (Family::TeachingLoad, load),
        (Family::TimeSlotConflict, conflict),
    ]
    .into_iter()
    .map(|(family, first_violation)| FamilyCheck { family, first_violation })
    .collect();
    Ok(FeasibilityReport { families })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_instance;

    fn zeros() -> Array3<i8> {
        Array3::filled(2, 2, 3, 0)
    }

    #[test]
    fn zero_perturbation_scores_zero() {
        let t1 = reference_instance();
        let v = evaluate_objective(&t1, &zeros(), &Matrix::filled(2, 2, 0)).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn removal_with_penalty() {
        let t1 = reference_instance();
        let mut p = zeros();
        p.set(0, 1, 2, -1);
        let t = canonical_t(&p);
        assert_eq!(*t.get(0, 1), 1);
        assert_eq!(evaluate_objective(&t1, &p, &t).unwrap(), -2.0);
    }

    #[test]
    fn moving_a_section_for_same_faculty_is_free() {
        let t1 = reference_instance();
        let mut p = zeros();
        p.set(0, 0, 0, -1);
        p.set(0, 0, 2, 1);
        let t = canonical_t(&p);
        assert_eq!(*t.get(0, 0), 0);
        assert_eq!(evaluate_objective(&t1, &p, &t).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let t1 = reference_instance();
        let err = evaluate_objective(&t1, &Array3::filled(1, 2, 3, 0), &Matrix::filled(2, 2, 0)).unwrap_err();
        assert_eq!(err.array, "P");
        assert!(evaluate_objective(&t1, &zeros(), &Matrix::filled(2, 1, 0)).is_err());
        assert!(check_feasible(&t1, &Array3::filled(2, 2, 2, 0)).is_err());
    }

    #[test]
    fn baseline_is_feasible() {
        let t1 = reference_instance();
        let report = check_feasible(&t1, &zeros()).unwrap();
        assert!(report.is_feasible());
        assert_eq!(report.families.len(), 6);
    }

    #[test]
    fn stale_schedule_misses_new_demand() {
        let mut t1 = reference_instance();
        t1.demand.set(0, 2, 0);
        let report = check_feasible(&t1, &zeros()).unwrap();
        let assign = report.family(Family::AssignAll).unwrap();
        assert_eq!(
            assign.first_violation,
            Some(FamilyViolation {
                indices: vec![0, 2],
                residual: 1.0
            })
        );
    }

    #[test]
    fn second_course_for_f2_at_s1() {
        let t1 = reference_instance();
        let mut p = zeros();
        p.set(1, 1, 0, 1);
        let report = check_feasible(&t1, &p).unwrap();
        assert!(!report.is_feasible());
        let load = report.family(Family::TeachingLoad).unwrap();
        assert_eq!(load.first_violation.as_ref().unwrap().indices, vec![1]);
    }

    #[test]
    fn out_of_range_perturbation_breaks_binary_schedule() {
        let t1 = reference_instance();
        let mut p = zeros();
        p.set(0, 0, 0, 1);
        let report = check_feasible(&t1, &p).unwrap();
        assert!(!report.family(Family::BinarySchedule).unwrap().passed());
    }
}
