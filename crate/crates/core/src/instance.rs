//! Problem data: courses, faculty, time slots and the parameter arrays that
//! describe the obsolete schedule and the new demand.
//!
//! Every array is indexed in `(course i, faculty j, slot t)` order. Shapes are
//! not enforced at construction time; [`Instance::validate`] reports every
//! structural problem instead of panicking, so partially broken data loaded
//! from disk can still be inspected.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::grid::{Array3, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Course {
    pub id: String,
    pub label: String,
    /// Courses or credit hours this course counts toward a teaching load.
    pub load_units: f64,
}

impl Course {
    pub fn new(id: impl Into<String>, label: impl Into<String>, load_units: f64) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            load_units,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacultyMember {
    pub id: String,
    pub label: String,
    pub load_min: f64,
    pub load_max: f64,
}

impl FacultyMember {
    pub fn new(id: impl Into<String>, label: impl Into<String>, load_min: f64, load_max: f64) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
            load_min,
            load_max,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSlot {
    pub id: String,
    pub label: String,
}

impl TimeSlot {
    pub fn new(id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            label: label.into(),
        }
    }
}

/// Two slots that one faculty member may not both teach in. Stored by slot
/// index with `slot_a < slot_b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConflictPair {
    pub slot_a: usize,
    pub slot_b: usize,
}

impl ConflictPair {
    /// Canonicalizes the order; `None` for a slot paired with itself.
    pub fn new(a: usize, b: usize) -> Option<Self> {
        match a.cmp(&b) {
            std::cmp::Ordering::Less => Some(Self { slot_a: a, slot_b: b }),
            std::cmp::Ordering::Greater => Some(Self { slot_a: b, slot_b: a }),
            std::cmp::Ordering::Equal => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub courses: Vec<Course>,
    pub faculty: Vec<FacultyMember>,
    pub slots: Vec<TimeSlot>,
    pub conflicts: Vec<ConflictPair>,
    /// `X[i][j][t]`: the schedule being repaired.
    pub obsolete_schedule: Array3<bool>,
    /// `W[j][t]`: time preference, 0 meaning unavailable.
    pub preferences: Matrix<f64>,
    /// `alpha[i][j]`: penalty for changing how many sections of course i faculty j teaches.
    pub swap_penalties: Matrix<f64>,
    /// `M[i][t]`: sections of course i required at slot t.
    pub demand: Matrix<u32>,
    /// `C[i][j]`: whether faculty j may teach course i.
    pub eligibility: Matrix<bool>,
}

/// Index-set sizes `(courses, faculty, slots)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub courses: usize,
    pub faculty: usize,
    pub slots: usize,
}

impl Instance {
    pub fn dims(&self) -> Dims {
        Dims {
            courses: self.courses.len(),
            faculty: self.faculty.len(),
            slots: self.slots.len(),
        }
    }

    pub fn course_index(&self, id: &str) -> Option<usize> {
        self.courses.iter().position(|c| c.id == id)
    }

    pub fn faculty_index(&self, id: &str) -> Option<usize> {
        self.faculty.iter().position(|f| f.id == id)
    }

    pub fn slot_index(&self, id: &str) -> Option<usize> {
        self.slots.iter().position(|s| s.id == id)
    }

    /// `F[j][t] = 1` exactly when `W[j][t] > 0`.
    pub fn availability(&self) -> Matrix<u8> {
        self.preferences.map(|&w| u8::from(w > 0.0))
    }

    /// Demand implied by the obsolete schedule: `sum_j X[i][j][t]`.
    pub fn baseline_demand(&self) -> Matrix<u32> {
        let Dims { courses, faculty, slots } = self.dims();
        Matrix::from_fn(courses, slots, |i, t| {
            (0..faculty)
                .filter(|&j| *self.obsolete_schedule.get(i, j, t))
                .count() as u32
        })
    }

    /// Obsolete assignments as `(course, faculty, slot)` index triples in
    /// lexicographic order.
    pub fn assignments(&self) -> Vec<(usize, usize, usize)> {
        self.obsolete_schedule
            .iter()
            .filter(|(_, &x)| x)
            .map(|(k, _)| k)
            .collect()
    }

    pub fn conflicts_with(&self, a: usize, b: usize) -> bool {
        ConflictPair::new(a, b).is_some_and(|p| self.conflicts.contains(&p))
    }

    pub fn validate(&self) -> ValidationReport {
        validate_instance(self)
    }
}

/// `F[j][t] = 1` exactly when `W[j][t] > 0`.
pub fn derive_availability(instance: &Instance) -> Matrix<u8> {
    instance.availability()
}

pub fn baseline_demand(instance: &Instance) -> Matrix<u32> {
    instance.baseline_demand()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entity {
    Course,
    Faculty,
    Slot,
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Entity::Course => "course",
            Entity::Faculty => "faculty",
            Entity::Slot => "slot",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId { entity: Entity, id: String },
    NonPositiveLoadUnits { course: usize, value: f64 },
    InvalidLoadRange { faculty: usize, load_min: f64, load_max: f64 },
    DimensionMismatch {
        parameter: &'static str,
        expected: Vec<usize>,
        found: Vec<usize>,
    },
    ConflictOutOfRange { slot_a: usize, slot_b: usize },
    ConflictSelfPair { slot: usize },
    ConflictNotCanonical { slot_a: usize, slot_b: usize },
    DuplicateConflict { slot_a: usize, slot_b: usize },
    NegativePreference { faculty: usize, slot: usize, value: f64 },
    NegativeSwapPenalty { course: usize, faculty: usize, value: f64 },
    AssignmentNotEligible { course: usize, faculty: usize, slot: usize },
    AssignmentUnavailable { course: usize, faculty: usize, slot: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateId { entity, id } => write!(f, "duplicate {entity} id {id:?}"),
            NonPositiveLoadUnits { course, value } => {
                write!(f, "non-positive load units {value} for course {course}")
            }
            InvalidLoadRange { faculty, load_min, load_max } => write!(
                f,
                "invalid load range [{load_min}, {load_max}] for faculty {faculty}"
            ),
            DimensionMismatch { parameter, expected, found } => write!(
                f,
                "dimension mismatch in {parameter}: expected {expected:?}, found {found:?}"
            ),
            ConflictOutOfRange { slot_a, slot_b } => {
                write!(f, "conflict pair ({slot_a}, {slot_b}) references an unknown slot")
            }
            ConflictSelfPair { slot } => write!(f, "slot {slot} conflicts with itself"),
            ConflictNotCanonical { slot_a, slot_b } => {
                write!(f, "conflict pair ({slot_a}, {slot_b}) is not in canonical order")
            }
            DuplicateConflict { slot_a, slot_b } => {
                write!(f, "duplicate conflict pair ({slot_a}, {slot_b})")
            }
            NegativePreference { faculty, slot, value } => write!(
                f,
                "negative time preference {value} at (faculty {faculty}, slot {slot})"
            ),
            NegativeSwapPenalty { course, faculty, value } => write!(
                f,
                "negative swap penalty {value} at (course {course}, faculty {faculty})"
            ),
            AssignmentNotEligible { course, faculty, slot } => write!(
                f,
                "assignment to ineligible faculty at (course {course}, faculty {faculty}, slot {slot})"
            ),
            AssignmentUnavailable { course, faculty, slot } => write!(
                f,
                "assignment in unavailable slot at (course {course}, faculty {faculty}, slot {slot})"
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

fn check_unique<'a>(entity: Entity, ids: impl Iterator<Item = &'a str>, out: &mut Vec<Violation>) {
    let mut seen = HashSet::new();
    for id in ids {
        if !seen.insert(id) {
            out.push(Violation::DuplicateId {
                entity,
                id: id.to_string(),
            });
        }
    }
}

fn check_shape2<T: Clone>(
    parameter: &'static str,
    m: &Matrix<T>,
    rows: usize,
    cols: usize,
    out: &mut Vec<Violation>,
) -> bool {
    if m.has_shape(rows, cols) {
        return true;
    }
    out.push(Violation::DimensionMismatch {
        parameter,
        expected: vec![rows, cols],
        found: vec![m.rows(), m.cols()],
    });
    false
}

/// Collects every violated structural invariant. Feasibility of the
/// reassignment problem itself is not checked here.
pub fn validate_instance(instance: &Instance) -> ValidationReport {
    let mut out = Vec::new();
    let Dims { courses, faculty, slots } = instance.dims();

    check_unique(Entity::Course, instance.courses.iter().map(|c| c.id.as_str()), &mut out);
    check_unique(Entity::Faculty, instance.faculty.iter().map(|f| f.id.as_str()), &mut out);
    check_unique(Entity::Slot, instance.slots.iter().map(|s| s.id.as_str()), &mut out);

    for (i, c) in instance.courses.iter().enumerate() {
        if !(c.load_units.is_finite() && c.load_units > 0.0) {
            out.push(Violation::NonPositiveLoadUnits {
                course: i,
                value: c.load_units,
            });
        }
    }
    for (j, f) in instance.faculty.iter().enumerate() {
        let ok = f.load_min.is_finite()
            && f.load_max.is_finite()
            && f.load_min >= 0.0
            && f.load_min <= f.load_max;
        if !ok {
            out.push(Violation::InvalidLoadRange {
                faculty: j,
                load_min: f.load_min,
                load_max: f.load_max,
            });
        }
    }

    let mut seen = HashSet::new();
    for p in &instance.conflicts {
        if p.slot_a >= slots || p.slot_b >= slots {
            out.push(Violation::ConflictOutOfRange {
                slot_a: p.slot_a,
                slot_b: p.slot_b,
            });
        } else if p.slot_a == p.slot_b {
            out.push(Violation::ConflictSelfPair { slot: p.slot_a });
        } else if p.slot_a > p.slot_b {
            out.push(Violation::ConflictNotCanonical {
                slot_a: p.slot_a,
                slot_b: p.slot_b,
            });
        } else if !seen.insert(*p) {
            out.push(Violation::DuplicateConflict {
                slot_a: p.slot_a,
                slot_b: p.slot_b,
            });
        }
    }

    let w_ok = check_shape2("W", &instance.preferences, faculty, slots, &mut out);
    let a_ok = check_shape2("alpha", &instance.swap_penalties, courses, faculty, &mut out);
    check_shape2("M", &instance.demand, courses, slots, &mut out);
    let c_ok = check_shape2("C", &instance.eligibility, courses, faculty, &mut out);
    let x_ok = instance.obsolete_schedule.has_shape(courses, faculty, slots);
    if !x_ok {
        let (a, b, c) = instance.obsolete_schedule.dims();
        out.push(Violation::DimensionMismatch {
            parameter: "X",
            expected: vec![courses, faculty, slots],
            found: vec![a, b, c],
        });
    }

    if w_ok {
        for (j, t, &w) in instance.preferences.iter() {
            if !(w.is_finite() && w >= 0.0) {
                out.push(Violation::NegativePreference {
                    faculty: j,
                    slot: t,
                    value: w,
                });
            }
        }
    }
    if a_ok {
        for (i, j, &a) in instance.swap_penalties.iter() {
            if !(a.is_finite() && a >= 0.0) {
                out.push(Violation::NegativeSwapPenalty {
                    course: i,
                    faculty: j,
                    value: a,
                });
            }
        }
    }
    if x_ok {
        for ((i, j, t), &x) in instance.obsolete_schedule.iter() {
            if !x {
                continue;
            }
            if c_ok && !*instance.eligibility.get(i, j) {
                out.push(Violation::AssignmentNotEligible {
                    course: i,
                    faculty: j,
                    slot: t,
                });
            }
            if w_ok && instance.preferences.get(j, t).partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
                out.push(Violation::AssignmentUnavailable {
                    course: i,
                    faculty: j,
                    slot: t,
                });
            }
        }
    }

    ValidationReport { violations: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_instance;

    #[test]
    fn reference_instance_is_valid() {
        let report = reference_instance().validate();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn assignment_in_unavailable_slot() {
        let mut t1 = reference_instance();
        // f2 teaches A at s3 in X
        t1.preferences.set(1, 2, 0.0);
        let report = t1.validate();
        assert_eq!(
            report.violations,
            vec![Violation::AssignmentUnavailable {
                course: 0,
                faculty: 1,
                slot: 2
            }]
        );
        assert!(report.to_string().contains("assignment in unavailable slot"));
    }

    #[test]
    fn negative_swap_penalty() {
        let mut t1 = reference_instance();
        t1.swap_penalties.set(0, 0, -1.0);
        let report = t1.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(report.to_string().contains("negative swap penalty"));
    }

    #[test]
    fn malformed_dimensions_are_reported_not_panics() {
        let mut t1 = reference_instance();
        t1.preferences = Matrix::filled(3, 1, 1.0);
        t1.obsolete_schedule = Array3::filled(1, 1, 1, true);
        t1.conflicts.push(ConflictPair { slot_a: 2, slot_b: 9 });
        t1.conflicts.push(ConflictPair { slot_a: 1, slot_b: 1 });
        let report = t1.validate();
        let dims = report
            .violations
            .iter()
            .filter(|v| matches!(v, Violation::DimensionMismatch { .. }))
            .count();
        assert_eq!(dims, 2);
        assert!(report.violations.contains(&Violation::ConflictOutOfRange { slot_a: 2, slot_b: 9 }));
        assert!(report.violations.contains(&Violation::ConflictSelfPair { slot: 1 }));
    }

    #[test]
    fn duplicates_and_bad_loads() {
        let mut t1 = reference_instance();
        t1.courses[1].id = "A".into();
        t1.courses[0].load_units = 0.0;
        t1.faculty[1].load_min = 2.0;
        t1.conflicts = vec![ConflictPair::new(0, 1).unwrap(), ConflictPair::new(1, 0).unwrap()];
        let v = t1.validate().violations;
        assert!(v.contains(&Violation::DuplicateId { entity: Entity::Course, id: "A".into() }));
        assert!(v.iter().any(|v| matches!(v, Violation::NonPositiveLoadUnits { course: 0, .. })));
        assert!(v.iter().any(|v| matches!(v, Violation::InvalidLoadRange { faculty: 1, .. })));
        assert!(v.contains(&Violation::DuplicateConflict { slot_a: 0, slot_b: 1 }));
    }

    #[test]
    fn availability_follows_preferences() {
        let mut t1 = reference_instance();
        for (t, w) in [2.0, 0.0, 1.0].into_iter().enumerate() {
            t1.preferences.set(0, t, w);
        }
        let f = derive_availability(&t1);
        assert_eq!(f.row(0), &[1, 0, 1]);

        t1.preferences = Matrix::filled(2, 3, 0.0);
        assert!(derive_availability(&t1).as_slice().iter().all(|&v| v == 0));
        t1.preferences = Matrix::filled(2, 3, 1.0);
        assert!(derive_availability(&t1).as_slice().iter().all(|&v| v == 1));
    }

    #[test]
    fn baseline_demand_counts_sections() {
        let t1 = reference_instance();
        let m = baseline_demand(&t1);
        assert_eq!(m.row(0), &[1, 0, 1]);
        assert_eq!(m.row(1), &[0, 1, 0]);

        let mut x0 = t1.clone();
        x0.obsolete_schedule = Array3::filled(2, 2, 3, false);
        assert!(baseline_demand(&x0).as_slice().iter().all(|&v| v == 0));

        let mut two = x0.clone();
        two.obsolete_schedule.set(1, 0, 0, true);
        two.obsolete_schedule.set(1, 1, 0, true);
        assert_eq!(*baseline_demand(&two).get(1, 0), 2);
    }
}
