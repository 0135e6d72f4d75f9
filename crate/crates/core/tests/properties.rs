//! Structural invariants of the model, the evaluator and the solver.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ttmpp_core::evaluate::{canonical_t, objective_parts};
use ttmpp_core::model::{expected_row_count, Family};
use ttmpp_core::solver::{brute_force, ENUMERATION_BUDGET};
use ttmpp_core::synthetic::random_instance;
use ttmpp_core::{
    apply_scenario, build_model, check_feasible, diff_schedules, evaluate_objective, fixtures, render_report, Array3,
    Instance, ReportFormat, SolveOptions, SolveStatus,
};

use common::solve_checked;

/// A perturbation within the variable bounds `[-X, 1 - X]`.
fn random_p(inst: &Instance, seed: u64, density: f64) -> Array3<i8> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inst.obsolete_schedule.map(|&x| {
        if rng.gen_bool(density) {
            if x { -1 } else { 1 }
        } else {
            0
        }
    })
}

fn model_values(inst: &Instance, p: &Array3<i8>) -> Vec<f64> {
    let mut values: Vec<f64> = p.as_slice().iter().map(|&v| f64::from(v)).collect();
    values.extend(canonical_t(p).as_slice().iter().map(|&t| f64::from(t)));
    debug_assert_eq!(values.len(), build_model(inst).variables.len());
    values
}

fn scaled(inst: &Instance, c: f64) -> Instance {
    let mut out = inst.clone();
    out.preferences = inst.preferences.map(|w| w * c);
    out.swap_penalties = inst.swap_penalties.map(|a| a * c);
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    /// The checker and the model rows accept exactly the same perturbations.
    #[test]
    fn checker_agrees_with_model_rows(seed in any::<u64>(), p_seed in any::<u64>(), density in 0.0f64..0.5) {
        let inst = random_instance(seed, 60);
        let model = build_model(&inst);
        let p = random_p(&inst, p_seed, density);
        let report = check_feasible(&inst, &p).unwrap();
        let violated: BTreeSet<String> = model
            .violated_rows(&model_values(&inst, &p), 1e-9)
            .into_iter()
            .map(|r| format!("{:?}", model.constraints[r].tag.family()))
            .collect();
        let failed: BTreeSet<String> = report
            .failed()
            .map(|f| format!("{:?}", f.family))
            .filter(|f| f != &format!("{:?}", Family::BinarySchedule))
            .collect();
        prop_assert_eq!(violated, failed);
    }

    /// The model objective is the evaluator's objective.
    #[test]
    fn model_objective_matches_evaluator(seed in any::<u64>(), p_seed in any::<u64>()) {
        let inst = random_instance(seed, 60);
        let model = build_model(&inst);
        let p = random_p(&inst, p_seed, 0.3);
        let direct = evaluate_objective(&inst, &p, &canonical_t(&p)).unwrap();
        prop_assert!((model.objective_value(&model_values(&inst, &p)) - direct).abs() <= 1e-9);
    }

    /// The objective is linear in the weights.
    #[test]
    fn objective_is_linear_in_weights(seed in any::<u64>(), p_seed in any::<u64>(), k in 0usize..4) {
        let c = [0.5, 2.0, 3.0, 0.25][k];
        let inst = random_instance(seed, 60);
        let p = random_p(&inst, p_seed, 0.3);
        let t = canonical_t(&p);
        let base = objective_parts(&inst, &p, &t).unwrap();
        let up = objective_parts(&scaled(&inst, c), &p, &t).unwrap();
        prop_assert_eq!(up.preference, c * base.preference);
        prop_assert_eq!(up.penalty, c * base.penalty);
    }

    /// Every row count follows the closed form.
    #[test]
    fn row_count_closed_form(seed in any::<u64>()) {
        let inst = random_instance(seed, 60);
        let model = build_model(&inst);
        prop_assert_eq!(model.constraints.len(), expected_row_count(inst.dims(), inst.conflicts.len()));
        let d = inst.dims();
        prop_assert_eq!(model.variables.len(), d.courses * d.faculty * (d.slots + 1));
    }

    /// Scaling W and alpha together by c scales the optimum by c and keeps
    /// the unscaled optimum optimal.
    #[test]
    fn joint_scaling(seed in any::<u64>(), k in 0usize..2) {
        let c = [0.5, 3.0][k];
        let inst = random_instance(seed, ENUMERATION_BUDGET);
        let base = solve_checked(&inst, &SolveOptions::default());
        let up_inst = scaled(&inst, c);
        let up = solve_checked(&up_inst, &SolveOptions::default());
        prop_assert_eq!(base.status, up.status);
        if let (Some(a), Some(b)) = (&base.incumbent, &up.incumbent) {
            prop_assert_eq!(b.objective, c * a.objective);
            prop_assert_eq!(evaluate_objective(&up_inst, &a.p, &a.t_aux).unwrap(), b.objective);
        }
    }

    /// Sections removed minus sections added equals the net cancellation.
    #[test]
    fn report_conserves_sections(seed in any::<u64>()) {
        let inst = random_instance(seed, ENUMERATION_BUDGET);
        let sol = solve_checked(&inst, &SolveOptions::default());
        if sol.status == SolveStatus::Optimal {
            let report = diff_schedules(&inst, &sol).unwrap();
            let net: i64 = inst
                .baseline_demand()
                .iter()
                .map(|(i, t, &b)| i64::from(b) - i64::from(*inst.demand.get(i, t)))
                .sum();
            prop_assert_eq!(report.removed().count() as i64 - report.added().count() as i64, net);
            prop_assert_eq!(report.entries.len(), sol.change_count().unwrap());
            prop_assert!((report.preference_delta - report.penalty_total - report.objective).abs() <= 1e-9);
            prop_assert_eq!(report.objective, sol.objective().unwrap());
        }
    }
}

#[test]
fn solving_is_deterministic() {
    for seed in 0..40 {
        let inst = random_instance(seed, 60);
        let a = solve_checked(&inst, &SolveOptions::default());
        let b = solve_checked(&inst, &SolveOptions::default());
        assert_eq!(a.status, b.status, "seed {seed}");
        assert_eq!(a.incumbent, b.incumbent, "seed {seed}");
        assert_eq!(a.stats.nodes, b.stats.nodes, "seed {seed}");
        assert_eq!(a.stats.lp_iterations, b.stats.lp_iterations, "seed {seed}");
    }
}

#[test]
fn larger_random_instances_are_closed() {
    // Too large to enumerate; the external re-check is the only oracle.
    for seed in 0..40 {
        let inst = random_instance(seed, 60);
        solve_checked(&inst, &SolveOptions::default());
    }
}

#[test]
fn reports_render_deterministically() {
    let t1 = fixtures::reference_instance();
    let inst = apply_scenario(&t1, &fixtures::cancel_a_s3()).unwrap();
    let sol = solve_checked(&inst, &SolveOptions::default());
    // Solver statistics do not leak into the report.
    let mut other = sol.clone();
    other.stats = Default::default();
    let a = diff_schedules(&inst, &sol).unwrap();
    let b = diff_schedules(&inst, &other).unwrap();
    for format in [ReportFormat::PlainTable, ReportFormat::Json] {
        assert_eq!(render_report(&a, format), render_report(&b, format));
    }
}

#[test]
fn small_enumeration_cases_are_exact() {
    let t1 = fixtures::reference_instance();
    let cancelled = apply_scenario(&t1, &fixtures::cancel_a_s3()).unwrap();
    for inst in [t1, cancelled] {
        let exact = brute_force(&inst).unwrap();
        let sol = solve_checked(&inst, &SolveOptions::default());
        assert_eq!(sol.objective(), exact.objective());
        assert_eq!(sol.incumbent.as_ref().map(|i| &i.p), exact.incumbent.as_ref().map(|i| &i.p));
    }
}
