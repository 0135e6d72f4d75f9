//! Solver-neutral integer program for the reassignment problem.
//!
//! Decision variables are the perturbation `P[i][j][t]` (new schedule is
//! `X + P`) and the linearization variables `T[i][j] >= |sum_t P[i][j][t]|`.
//! Because `X` is a 0/1 constant, the requirement `0 <= X + P <= 1` is
//! expressed through the variable bounds `P in [-X, 1 - X]` rather than rows.
//! All constant `X` terms are moved to the right-hand sides.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::instance::{Dims, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VarKind {
    P,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableRef {
    pub kind: VarKind,
    pub course: usize,
    pub faculty: usize,
    /// Always `None` for `T` variables.
    pub slot: Option<usize>,
}

impl VariableRef {
    pub fn p(course: usize, faculty: usize, slot: usize) -> Self {
        Self {
            kind: VarKind::P,
            course,
            faculty,
            slot: Some(slot),
        }
    }

    pub fn t(course: usize, faculty: usize) -> Self {
        Self {
            kind: VarKind::T,
            course,
            faculty,
            slot: None,
        }
    }
}

impl fmt::Display for VariableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, self.slot) {
            (VarKind::P, Some(t)) => write!(f, "P_{}_{}_{}", self.course, self.faculty, t),
            _ => write!(f, "T_{}_{}", self.course, self.faculty),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub var: VariableRef,
    pub lower: i64,
    pub upper: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

/// Constraint families of the model, in emission order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    NewVariable,
    BinarySchedule,
    AssignAll,
    ChoiceList,
    Availability,
    TeachingLoad,
    TimeSlotConflict,
    /// Added by the lexicographic second phase only.
    ObjectiveLevel,
}

impl Family {
    pub fn heading(self) -> &'static str {
        match self {
            Family::NewVariable => "New variable constraints",
            Family::BinarySchedule => "New schedule is binary",
            Family::AssignAll => "Assign all courses",
            Family::ChoiceList => "Faculty teach only courses from their choice list",
            Family::Availability => "Faculty teach only during their available times",
            Family::TeachingLoad => "Teaching load requirements",
            Family::TimeSlotConflict => "Avoid time slot conflicts",
            Family::ObjectiveLevel => "Objective level",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.heading())
    }
}

/// Which row of which family a constraint is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowTag {
    /// `T[i][j] - sum_t P[i][j][t] >= 0`
    AbsUpper { course: usize, faculty: usize },
    /// `T[i][j] + sum_t P[i][j][t] >= 0`
    AbsLower { course: usize, faculty: usize },
    AssignAll { course: usize, slot: usize },
    ChoiceList { course: usize, faculty: usize },
    Availability { faculty: usize, slot: usize },
    LoadMax { faculty: usize },
    LoadMin { faculty: usize },
    Conflict { faculty: usize, slot_a: usize, slot_b: usize },
    ObjectiveLevel,
}

impl RowTag {
    pub fn family(&self) -> Family {
        match self {
            RowTag::AbsUpper { .. } | RowTag::AbsLower { .. } => Family::NewVariable,
            RowTag::AssignAll { .. } => Family::AssignAll,
            RowTag::ChoiceList { .. } => Family::ChoiceList,
            RowTag::Availability { .. } => Family::Availability,
            RowTag::LoadMax { .. } | RowTag::LoadMin { .. } => Family::TeachingLoad,
            RowTag::Conflict { .. } => Family::TimeSlotConflict,
            RowTag::ObjectiveLevel => Family::ObjectiveLevel,
        }
    }

    /// Identifier-safe row name, unique within a model.
    pub fn row_name(&self) -> String {
        match *self {
            RowTag::AbsUpper { course, faculty } => format!("absU_{course}_{faculty}"),
            RowTag::AbsLower { course, faculty } => format!("absL_{course}_{faculty}"),
            RowTag::AssignAll { course, slot } => format!("assign_{course}_{slot}"),
            RowTag::ChoiceList { course, faculty } => format!("choice_{course}_{faculty}"),
            RowTag::Availability { faculty, slot } => format!("avail_{faculty}_{slot}"),
            RowTag::LoadMax { faculty } => format!("loadmax_{faculty}"),
            RowTag::LoadMin { faculty } => format!("loadmin_{faculty}"),
            RowTag::Conflict { faculty, slot_a, slot_b } => format!("conflict_{faculty}_{slot_a}_{slot_b}"),
            RowTag::ObjectiveLevel => "objective_level".to_string(),
        }
    }
}

impl fmt::Display for RowTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} [{}]", self.family(), self.row_name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub var: VariableRef,
    pub coef: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub terms: Vec<Term>,
    pub sense: Sense,
    pub rhs: f64,
    pub tag: RowTag,
}

impl LinearConstraint {
    pub fn activity(&self, model: &IlpModel, values: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|term| term.coef * values[model.index_of(term.var)])
            .sum()
    }

    pub fn is_satisfied(&self, activity: f64, tol: f64) -> bool {
        match self.sense {
            Sense::Le => activity <= self.rhs + tol,
            Sense::Ge => activity >= self.rhs - tol,
            Sense::Eq => (activity - self.rhs).abs() <= tol,
        }
    }
}

/// Variables, rows and a maximization objective. Variables are ordered all
/// `P` in `(i, j, t)` order followed by all `T` in `(i, j)` order, so
/// [`IlpModel::index_of`] is pure arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlpModel {
    pub dims: Dims,
    pub variables: Vec<Variable>,
    pub constraints: Vec<LinearConstraint>,
    /// Maximized.
    pub objective: Vec<Term>,
}

impl IlpModel {
    pub fn num_p(&self) -> usize {
        self.dims.courses * self.dims.faculty * self.dims.slots
    }

    pub fn index_of(&self, var: VariableRef) -> usize {
        let Dims { faculty, slots, .. } = self.dims;
        match (var.kind, var.slot) {
            (VarKind::P, Some(t)) => (var.course * faculty + var.faculty) * slots + t,
            _ => self.num_p() + var.course * faculty + var.faculty,
        }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|term| term.coef * values[self.index_of(term.var)])
            .sum()
    }

    /// Rows whose activity misses the right-hand side by more than `tol`.
    pub fn violated_rows(&self, values: &[f64], tol: f64) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, row)| !row.is_satisfied(row.activity(self, values), tol))
            .map(|(r, _)| r)
            .collect()
    }

    pub fn within_bounds(&self, values: &[f64], tol: f64) -> bool {
        self.variables
            .iter()
            .zip(values)
            .all(|(v, &x)| x >= v.lower as f64 - tol && x <= v.upper as f64 + tol)
    }
}

/// Builds the full integer program for a structurally valid instance.
pub fn build_model(instance: &Instance) -> IlpModel {
    let dims = instance.dims();
    let Dims { courses, faculty, slots } = dims;
    let x = |i: usize, j: usize, t: usize| -> f64 {
        if *instance.obsolete_schedule.get(i, j, t) {
            1.0
        } else {
            0.0
        }
    };
    let p_terms = |i: usize, j: usize| -> Vec<Term> {
        (0..slots)
            .map(|t| Term {
                var: VariableRef::p(i, j, t),
                coef: 1.0,
            })
            .collect()
    };

    let mut variables = Vec::with_capacity(courses * faculty * (slots + 1));
    for i in 0..courses {
        for j in 0..faculty {
            for t in 0..slots {
                let xi = i64::from(*instance.obsolete_schedule.get(i, j, t));
                variables.push(Variable {
                    var: VariableRef::p(i, j, t),
                    lower: -xi,
                    upper: 1 - xi,
                });
            }
        }
    }
    for i in 0..courses {
        for j in 0..faculty {
            variables.push(Variable {
                var: VariableRef::t(i, j),
                lower: 0,
                upper: slots as i64,
            });
        }
    }

    let mut constraints = Vec::new();

    for i in 0..courses {
        for j in 0..faculty {
            let t_term = Term {
                var: VariableRef::t(i, j),
                coef: 1.0,
            };
            let mut upper = vec![t_term];
            upper.extend(p_terms(i, j).into_iter().map(|t| Term { coef: -1.0, ..t }));
            constraints.push(LinearConstraint {
                terms: upper,
                sense: Sense::Ge,
                rhs: 0.0,
                tag: RowTag::AbsUpper { course: i, faculty: j },
            });
            let mut lower = vec![t_term];
            lower.extend(p_terms(i, j));
            constraints.push(LinearConstraint {
                terms: lower,
                sense: Sense::Ge,
                rhs: 0.0,
                tag: RowTag::AbsLower { course: i, faculty: j },
            });
        }
    }

    for i in 0..courses {
        for t in 0..slots {
            let terms = (0..faculty)
                .map(|j| Term {
                    var: VariableRef::p(i, j, t),
                    coef: 1.0,
                })
                .collect();
            let fixed: f64 = (0..faculty).map(|j| x(i, j, t)).sum();
            constraints.push(LinearConstraint {
                terms,
                sense: Sense::Eq,
                rhs: f64::from(*instance.demand.get(i, t)) - fixed,
                tag: RowTag::AssignAll { course: i, slot: t },
            });
        }
    }

    for i in 0..courses {
        let sections: f64 = instance.demand.row(i).iter().map(|&m| f64::from(m)).sum();
        for j in 0..faculty {
            let eligible = if *instance.eligibility.get(i, j) { 1.0 } else { 0.0 };
            let fixed: f64 = (0..slots).map(|t| x(i, j, t)).sum();
            constraints.push(LinearConstraint {
                terms: p_terms(i, j),
                sense: Sense::Le,
                rhs: eligible * sections - fixed,
                tag: RowTag::ChoiceList { course: i, faculty: j },
            });
        }
    }

    let availability = instance.availability();
    for j in 0..faculty {
        for t in 0..slots {
            let terms = (0..courses)
                .map(|i| Term {
                    var: VariableRef::p(i, j, t),
                    coef: 1.0,
                })
                .collect();
            let fixed: f64 = (0..courses).map(|i| x(i, j, t)).sum();
            constraints.push(LinearConstraint {
                terms,
                sense: Sense::Le,
                rhs: f64::from(*availability.get(j, t)) - fixed,
                tag: RowTag::Availability { faculty: j, slot: t },
            });
        }
    }

    for (j, member) in instance.faculty.iter().enumerate() {
        let mut terms = Vec::with_capacity(courses * slots);
        let mut fixed = 0.0;
        for (i, course) in instance.courses.iter().enumerate() {
            for t in 0..slots {
                terms.push(Term {
                    var: VariableRef::p(i, j, t),
                    coef: course.load_units,
                });
                fixed += course.load_units * x(i, j, t);
            }
        }
        constraints.push(LinearConstraint {
            terms: terms.clone(),
            sense: Sense::Le,
            rhs: member.load_max - fixed,
            tag: RowTag::LoadMax { faculty: j },
        });
        constraints.push(LinearConstraint {
            terms,
            sense: Sense::Ge,
            rhs: member.load_min - fixed,
            tag: RowTag::LoadMin { faculty: j },
        });
    }

    for j in 0..faculty {
        for pair in &instance.conflicts {
            let (a, b) = (pair.slot_a, pair.slot_b);
            let mut terms = Vec::with_capacity(2 * courses);
            let mut fixed = 0.0;
            for slot in [a, b] {
                for i in 0..courses {
                    terms.push(Term {
                        var: VariableRef::p(i, j, slot),
                        coef: 1.0,
                    });
                    fixed += x(i, j, slot);
                }
            }
            constraints.push(LinearConstraint {
                terms,
                sense: Sense::Le,
                rhs: 1.0 - fixed,
                tag: RowTag::Conflict {
                    faculty: j,
                    slot_a: a,
                    slot_b: b,
                },
            });
        }
    }

    let mut objective = Vec::new();
    for i in 0..courses {
        for j in 0..faculty {
            for t in 0..slots {
                let w = *instance.preferences.get(j, t);
                if w != 0.0 {
                    objective.push(Term {
                        var: VariableRef::p(i, j, t),
                        coef: w,
                    });
                }
            }
        }
    }
    for i in 0..courses {
        for j in 0..faculty {
            let a = *instance.swap_penalties.get(i, j);
            if a != 0.0 {
                objective.push(Term {
                    var: VariableRef::t(i, j),
                    coef: -a,
                });
            }
        }
    }

    IlpModel {
        dims,
        variables,
        constraints,
        objective,
    }
}

/// Row count of [`build_model`]: `2IJ + IT + IJ + JT + 2J + J * conflicts`.
pub fn expected_row_count(dims: Dims, conflict_pairs: usize) -> usize {
    let Dims { courses: i, faculty: j, slots: t } = dims;
    2 * i * j + i * t + i * j + j * t + 2 * j + j * conflict_pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_instance;
    use crate::grid::{Array3, Matrix};
    use crate::instance::{Course, FacultyMember, TimeSlot};

    #[test]
    fn reference_instance_shape() {
        let t1 = reference_instance();
        let model = build_model(&t1);
        assert_eq!(model.variables.len(), 2 * 2 * 3 + 2 * 2);
        // 8 + 6 + 4 + 6 + 4 + 0
        assert_eq!(model.constraints.len(), 28);
        assert_eq!(model.constraints.len(), expected_row_count(t1.dims(), 0));
    }

    #[test]
    fn single_cell_instance_has_two_variables() {
        let inst = Instance {
            courses: vec![Course::new("c", "c", 1.0)],
            faculty: vec![FacultyMember::new("f", "f", 0.0, 1.0)],
            slots: vec![TimeSlot::new("s", "s")],
            conflicts: vec![],
            obsolete_schedule: Array3::filled(1, 1, 1, false),
            preferences: Matrix::filled(1, 1, 1.0),
            swap_penalties: Matrix::filled(1, 1, 1.0),
            demand: Matrix::filled(1, 1, 0),
            eligibility: Matrix::filled(1, 1, true),
        };
        assert_eq!(build_model(&inst).variables.len(), 2);
    }

    #[test]
    fn variable_order_and_bounds() {
        let t1 = reference_instance();
        let model = build_model(&t1);
        for (k, v) in model.variables.iter().enumerate() {
            assert_eq!(model.index_of(v.var), k);
            match v.var.kind {
                VarKind::P => {
                    let x = i64::from(*t1.obsolete_schedule.get(v.var.course, v.var.faculty, v.var.slot.unwrap()));
                    assert_eq!((v.lower, v.upper), (-x, 1 - x));
                }
                VarKind::T => assert_eq!((v.lower, v.upper), (0, 3)),
            }
        }
        let mut sorted = model.variables.iter().map(|v| v.var).collect::<Vec<_>>();
        sorted.sort();
        assert_eq!(sorted, model.variables.iter().map(|v| v.var).collect::<Vec<_>>());
    }

    #[test]
    fn no_duplicate_terms_and_finite_coefficients() {
        let mut t1 = reference_instance();
        t1.conflicts.push(crate::instance::ConflictPair::new(0, 2).unwrap());
        let model = build_model(&t1);
        assert_eq!(model.constraints.len(), expected_row_count(t1.dims(), 1));
        for row in &model.constraints {
            let mut vars: Vec<_> = row.terms.iter().map(|t| t.var).collect();
            vars.sort();
            vars.dedup();
            assert_eq!(vars.len(), row.terms.len(), "{}", row.tag);
            assert!(row.terms.iter().all(|t| t.coef.is_finite()));
            assert!(row.rhs.is_finite());
        }
    }

    #[test]
    fn zero_perturbation_satisfies_baseline_model() {
        let t1 = reference_instance();
        let model = build_model(&t1);
        let values = vec![0.0; model.variables.len()];
        assert!(model.violated_rows(&values, 1e-9).is_empty());
        assert_eq!(model.objective_value(&values), 0.0);
    }
}
