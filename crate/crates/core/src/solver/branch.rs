//! Best-bound branch-and-bound with depth-first dives.
//!
//! After a node is branched, the child on the side of the rounded value is
//! solved immediately from the parent's basis (a dive); the sibling goes into
//! a max-heap keyed by the parent's relaxation bound. When a dive ends the
//! best open node is taken from the heap and its stored basis is reloaded.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::Instant;

use super::simplex::{default_iteration_limit, BasisSnapshot, LpData, LpStatus, Simplex};
use super::{BranchingRule, SolveOptions};
use crate::model::IlpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum SearchStatus {
    Optimal,
    Infeasible,
    LimitReached,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub(crate) struct SearchResult {
    pub status: SearchStatus,
    /// Rounded values and their objective.
    pub incumbent: Option<(Vec<f64>, f64)>,
    pub best_bound: Option<f64>,
    pub root_bound: Option<f64>,
    pub nodes: u64,
    pub lp_iterations: u64,
}

type BoundChange = (usize, f64, f64);

struct Node {
    id: u64,
    bound: f64,
    changes: Vec<BoundChange>,
    basis: Option<Rc<BasisSnapshot>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Pruner {
    integral_objective: bool,
}

impl Pruner {
    /// True when a node with relaxation bound `bound` cannot beat `incumbent`.
    fn prune(&self, bound: f64, incumbent: f64) -> bool {
        if self.integral_objective {
            (bound + 1e-6).floor() <= incumbent + 1e-9
        } else {
            bound <= incumbent + 1e-9 * incumbent.abs().max(1.0)
        }
    }
}

fn pick_branch(values: &[f64], tol: f64, rule: BranchingRule) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (j, &v) in values.iter().enumerate() {
        let frac = v - v.floor();
        let dist = frac.min(1.0 - frac);
        if dist <= tol {
            continue;
        }
        match rule {
            BranchingRule::FirstFractional => return Some((j, v)),
            BranchingRule::MostFractional => {
                if best.is_none_or(|(_, _, d)| dist > d + 1e-12) {
                    best = Some((j, v, dist));
                }
            }
        }
    }
    best.map(|(j, v, _)| (j, v))
}

pub(crate) fn branch_and_bound(
    model: &IlpModel,
    options: &SolveOptions,
    deadline: Option<Instant>,
    initial: Option<(Vec<f64>, f64)>,
) -> SearchResult {
    let data = LpData::from_model(model);
    let root_lower = data.lower.clone();
    let root_upper = data.upper.clone();
    let iteration_limit = default_iteration_limit(&data);
    let mut lp = Simplex::new(&data, options.lp_pivot_tolerance);
    let pruner = Pruner {
        integral_objective: model.objective.iter().all(|t| t.coef.fract() == 0.0),
    };

    let mut incumbent = initial;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    let mut next = Some(Node {
        id: 0,
        bound: f64::INFINITY,
        changes: Vec::new(),
        basis: None,
    });
    let mut next_id = 1u64;
    let mut applied: Vec<BoundChange> = Vec::new();
    let mut nodes = 0u64;
    let mut root_bound = None;
    let mut status = SearchStatus::Optimal;
    let mut limit_hit = false;

    loop {
        let (node, warm) = match next.take() {
            Some(n) => (n, true),
            None => match heap.pop() {
                Some(n) => (n, false),
                None => break,
            },
        };
        if let Some((_, inc)) = &incumbent {
            if pruner.prune(node.bound, *inc) {
                continue;
            }
        }
        let out_of_nodes = options.node_limit.is_some_and(|limit| nodes >= limit);
        let out_of_time = deadline.is_some_and(|d| Instant::now() >= d);
        if out_of_nodes || out_of_time {
            heap.push(node);
            limit_hit = true;
            break;
        }
        nodes += 1;

        for &(j, _, _) in &applied {
            lp.set_bounds(j, root_lower[j], root_upper[j]);
        }
        for &(j, lo, hi) in &node.changes {
            lp.set_bounds(j, lo, hi);
        }
        if !warm {
            if let Some(basis) = &node.basis {
                lp.load(basis);
            }
        }
        applied.clone_from(&node.changes);

        match lp.solve(iteration_limit) {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded | LpStatus::IterationLimit | LpStatus::NumericalFailure => {
                status = SearchStatus::NumericalFailure;
                break;
            }
        }
        let bound = lp.objective();
        if node.id == 0 {
            root_bound = Some(bound);
        }
        if let Some((_, inc)) = &incumbent {
            if pruner.prune(bound, *inc) {
                continue;
            }
        }

        let values = lp.structural_values();
        match pick_branch(values, options.integrality_tolerance, options.branching_rule) {
            None => {
                let rounded: Vec<f64> = values.iter().map(|v| v.round()).collect();
                if model.within_bounds(&rounded, 0.0) && model.violated_rows(&rounded, 1e-6).is_empty() {
                    let obj = data.objective(&rounded);
                    if incumbent.as_ref().is_none_or(|(_, inc)| obj > *inc) {
                        incumbent = Some((rounded, obj));
                    }
                }
            }
            Some((j, v)) => {
                let (lo, hi) = (lp.lower[j], lp.upper[j]);
                let mut down = node.changes.clone();
                down.push((j, lo, v.floor()));
                let mut up = node.changes;
                up.push((j, v.ceil(), hi));
                let basis = Some(Rc::new(lp.snapshot()));
                let (first, second) = if v - v.floor() >= 0.5 { (up, down) } else { (down, up) };
                heap.push(Node {
                    id: next_id,
                    bound,
                    changes: second,
                    basis: basis.clone(),
                });
                next = Some(Node {
                    id: next_id + 1,
                    bound,
                    changes: first,
                    basis,
                });
                next_id += 2;
            }
        }
    }

    let lp_iterations = lp.iterations;
    if status == SearchStatus::NumericalFailure {
        return SearchResult {
            status,
            best_bound: None,
            incumbent,
            root_bound,
            nodes,
            lp_iterations,
        };
    }
    let inc_obj = incumbent.as_ref().map(|(_, o)| *o);
    if limit_hit {
        let open = heap
            .iter()
            .map(|n| n.bound)
            .chain(next.iter().map(|n| n.bound))
            .fold(f64::NEG_INFINITY, f64::max);
        let best_bound = match inc_obj {
            Some(o) => Some(open.max(o)),
            None if open.is_finite() => Some(open),
            None => root_bound,
        };
        return SearchResult {
            status: SearchStatus::LimitReached,
            incumbent,
            best_bound,
            root_bound,
            nodes,
            lp_iterations,
        };
    }
    SearchResult {
        status: if incumbent.is_some() {
            SearchStatus::Optimal
        } else {
            SearchStatus::Infeasible
        },
        best_bound: inc_obj,
        incumbent,
        root_bound,
        nodes,
        lp_iterations,
    }
}
