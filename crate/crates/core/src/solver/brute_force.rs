//! Exhaustive reference solver for tiny instances.
//!
//! Every schedule cell either keeps its obsolete value or flips, so there are
//! `2^(I*J*T)` candidates. Cells are visited course by course and slot by
//! slot, and a branch is abandoned as soon as one `(course, slot)` column
//! misses its demand. Surviving leaves are checked with
//! [`check_feasible`] and scored with [`evaluate_objective`]; the model
//! builder and the simplex are not involved.

use thiserror::Error;

use super::{Incumbent, Solution, SolveStats, SolveStatus};
use crate::evaluate::{canonical_t, change_count, check_feasible, evaluate_objective};
use crate::grid::Array3;
use crate::instance::Instance;

/// Largest number of schedule cells the enumeration accepts.
pub const ENUMERATION_BUDGET: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BruteForceError {
    #[error("instance has {cells} schedule cells, enumeration is limited to {ENUMERATION_BUDGET}")]
    TooLarge { cells: usize },
    #[error("instance is invalid:\n{0}")]
    Invalid(String),
}

struct Search<'a> {
    instance: &'a Instance,
    p: Array3<i8>,
    best: Option<Incumbent>,
}

impl Search<'_> {
    fn better(&self, candidate: &Incumbent) -> bool {
        let Some(best) = &self.best else { return true };
        let tol = 1e-9 * best.objective.abs().max(1.0);
        if candidate.objective > best.objective + tol {
            return true;
        }
        if candidate.objective < best.objective - tol {
            return false;
        }
        (candidate.change_count, candidate.p.as_slice()) < (best.change_count, best.p.as_slice())
    }

    fn leaf(&mut self) {
        let report = check_feasible(self.instance, &self.p).expect("shape checked up front");
        if !report.is_feasible() {
            return;
        }
        let t_aux = canonical_t(&self.p);
        let objective = evaluate_objective(self.instance, &self.p, &t_aux).expect("shape checked up front");
        let candidate = Incumbent {
            p: self.p.clone(),
            t_aux,
            objective,
            change_count: change_count(&self.p),
        };
        if self.better(&candidate) {
            self.best = Some(candidate);
        }
    }

    /// Fills the cells of column `(i, t)` from faculty `j` onwards; `placed`
    /// counts the sections already scheduled in that column.
    fn column(&mut self, i: usize, t: usize, j: usize, placed: u32) {
        let d = self.instance.dims();
        if j == d.faculty {
            if placed != *self.instance.demand.get(i, t) {
                return;
            }
            let (ni, nt) = if t + 1 == d.slots { (i + 1, 0) } else { (i, t + 1) };
            if ni == d.courses {
                self.leaf();
            } else {
                self.column(ni, nt, 0, 0);
            }
            return;
        }
        let x = *self.instance.obsolete_schedule.get(i, j, t);
        for flip in [false, true] {
            let taught = x != flip;
            self.p.set(i, j, t, if flip { if x { -1 } else { 1 } } else { 0 });
            self.column(i, t, j + 1, placed + u32::from(taught));
        }
        self.p.set(i, j, t, 0);
    }
}

/// Optimal perturbation by enumeration. Ties on the objective go to the
/// fewest changes, then to the lexicographically smallest `P` in
/// `(course, faculty, slot)` order.
pub fn brute_force(instance: &Instance) -> Result<Solution, BruteForceError> {
    let report = instance.validate();
    if !report.is_valid() {
        return Err(BruteForceError::Invalid(report.to_string()));
    }
    let d = instance.dims();
    let cells = d.courses * d.faculty * d.slots;
    if cells > ENUMERATION_BUDGET {
        return Err(BruteForceError::TooLarge { cells });
    }
    let start = std::time::Instant::now();
    let mut search = Search {
        instance,
        p: Array3::filled(d.courses, d.faculty, d.slots, 0),
        best: None,
    };
    if cells == 0 {
        search.leaf();
    } else {
        search.column(0, 0, 0, 0);
    }
    let best = search.best;
    Ok(Solution {
        status: if best.is_some() {
            SolveStatus::Optimal
        } else {
            SolveStatus::Infeasible
        },
        best_bound: best.as_ref().map(|b| b.objective),
        incumbent: best,
        stats: SolveStats {
            wall_time: start.elapsed(),
            min_change_proven: true,
            ..SolveStats::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{cancel_a_s3, reference_instance};
    use crate::scenario::apply_scenario;

    #[test]
    fn reference_is_its_own_optimum() {
        let sol = brute_force(&reference_instance()).unwrap();
        assert_eq!(sol.objective(), Some(0.0));
        assert_eq!(sol.change_count(), Some(0));
    }

    #[test]
    fn cancellation_has_a_unique_single_change_optimum() {
        let inst = apply_scenario(&reference_instance(), &cancel_a_s3()).unwrap();
        let sol = brute_force(&inst).unwrap();
        let inc = sol.incumbent.unwrap();
        assert_eq!(inc.objective, -2.0);
        assert_eq!(inc.change_count, 1);
        assert_eq!(*inc.p.get(0, 1, 2), -1);
    }

    #[test]
    fn refuses_large_instances() {
        let mut inst = reference_instance();
        for k in 4..=7 {
            inst.slots.push(crate::instance::TimeSlot::new(format!("s{k}"), format!("s{k}")));
        }
        let d = inst.dims();
        let mut x = Array3::filled(d.courses, d.faculty, d.slots, false);
        for ((i, j, t), &v) in reference_instance().obsolete_schedule.iter() {
            x.set(i, j, t, v);
        }
        inst.obsolete_schedule = x;
        inst.preferences = crate::grid::Matrix::filled(2, 7, 1.0);
        inst.demand = inst.baseline_demand();
        assert_eq!(brute_force(&inst).unwrap_err(), BruteForceError::TooLarge { cells: 28 });
    }
}
