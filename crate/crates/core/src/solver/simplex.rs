//! Bounded-variable primal simplex on the relaxation of an [`IlpModel`].
//!
//! Every row `a_i x` gets a logical variable `s_i` with `a_i x - s_i = 0`, and
//! the row sense becomes a bound on `s_i`. All structural and logical
//! variables are boxed, nonbasic variables sit at one of their bounds, and the
//! basis inverse is kept as a dense column-major matrix updated in product
//! form. Phase 1 minimizes the sum of bound violations of the basic
//! variables; phase 2 minimizes the (negated) objective.
//!
//! Pricing uses Devex reference weights with a Harris two-pass ratio test. After a run
//! of degenerate pivots the engine falls back to Bland's rule until progress
//! resumes, which rules out cycling.
//!
//! Long runs of degenerate pivots first trigger a small random widening of
//! the basic variables' bounds; the true bounds are restored before a
//! solution is reported.
//!
//! A basis that is dual feasible but primal infeasible, which is what a
//! branching bound change leaves behind, is repaired with the bounded dual
//! simplex first. The primal phases only take over if that stalls.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{IlpModel, Sense};

const NONBASIC: usize = usize::MAX;
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-13;
const DEGENERATE_RUN: usize = 60;
const REFRESH_EVERY: u64 = 100;
/// Dual iterations allowed without the dual objective improving.
const DUAL_STALL: u64 = 5_000;
const DEVEX_RESET: f64 = 1e6;
const MAX_PERTURBATIONS: u32 = 3;
/// Relative size range of a bound perturbation.
const PERTURB_MIN: f64 = 1e-7;
const PERTURB_MAX: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    NumericalFailure,
}

/// Outcome of [`solve_lp_relaxation`]. `objective` is in the model's
/// maximization sense.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: Option<f64>,
    pub values: Vec<f64>,
    pub iterations: u64,
}

/// Sparse standard-form data shared by every node of a search.
#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub n: usize,
    pub m: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
    /// Minimization costs of the structural variables.
    cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpData {
    pub fn from_model(model: &IlpModel) -> Self {
        let n = model.variables.len();
        let m = model.constraints.len();
        let mut cols = vec![Vec::new(); n];
        let mut rows = Vec::with_capacity(m);
        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        for v in &model.variables {
            lower.push(v.lower as f64);
            upper.push(v.upper as f64);
        }
        for (r, row) in model.constraints.iter().enumerate() {
            let mut entries: Vec<(usize, f64)> = row
                .terms
                .iter()
                .filter(|t| t.coef != 0.0)
                .map(|t| (model.index_of(t.var), t.coef))
                .collect();
            entries.sort_by_key(|e| e.0);
            for &(j, a) in &entries {
                cols[j].push((r, a));
            }
            rows.push(entries);
            let (lo, hi) = match row.sense {
                Sense::Le => (f64::NEG_INFINITY, row.rhs),
                Sense::Ge => (row.rhs, f64::INFINITY),
                Sense::Eq => (row.rhs, row.rhs),
            };
            lower.push(lo);
            upper.push(hi);
        }
        let mut cost = vec![0.0; n];
        for term in &model.objective {
            cost[model.index_of(term.var)] -= term.coef;
        }
        Self {
            n,
            m,
            cols,
            rows,
            cost,
            lower,
            upper,
        }
    }

    /// Objective in maximization sense for structural values.
    pub fn objective(&self, x: &[f64]) -> f64 {
        -self.cost.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }
}

/// Enough information to rebuild a basis later.
#[derive(Debug, Clone)]
pub(crate) struct BasisSnapshot {
    basis: Vec<usize>,
    at_upper: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

enum DualOutcome {
    Feasible,
    Infeasible,
    GaveUp,
}

struct Ratio {
    theta: f64,
    /// Basis position and whether the leaving variable ends at its upper bound.
    leave: Option<(usize, bool)>,
}

pub(crate) struct Simplex<'a> {
    data: &'a LpData,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    x: Vec<f64>,
    at_upper: Vec<bool>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    binv: Vec<f64>,
    d: Vec<f64>,
    pivot_tol: f64,
    pub iterations: u64,
    degenerate_run: usize,
    alpha: Vec<f64>,
    alpha_nz: Vec<usize>,
    row_alpha: Vec<f64>,
    row_touched: Vec<usize>,
    row_mark: Vec<bool>,
    /// Devex pricing weights.
    weights: Vec<f64>,
    rho_nz: Vec<usize>,
    y: Vec<f64>,
    /// True bounds while a perturbation is active.
    saved_bounds: Option<(Vec<f64>, Vec<f64>)>,
    perturbations: u32,
    rng: ChaCha8Rng,
}

impl<'a> Simplex<'a> {
    /// Starts from the all-logical basis with every structural variable at
    /// the bound nearest zero.
    pub fn new(data: &'a LpData, pivot_tol: f64) -> Self {
        let (n, m) = (data.n, data.m);
        let mut s = Self {
            data,
            lower: data.lower.clone(),
            upper: data.upper.clone(),
            x: vec![0.0; n + m],
            at_upper: vec![false; n + m],
            basis: (n..n + m).collect(),
            pos: (0..n).map(|_| NONBASIC).chain(0..m).collect(),
            binv: vec![0.0; m * m],
            d: vec![0.0; n + m],
            pivot_tol,
            iterations: 0,
            degenerate_run: 0,
            alpha: vec![0.0; m],
            alpha_nz: Vec::new(),
            row_alpha: vec![0.0; n + m],
            row_touched: Vec::new(),
            row_mark: vec![false; n + m],
            weights: vec![1.0; n + m],
            rho_nz: Vec::new(),
            y: vec![0.0; m],
            saved_bounds: None,
            perturbations: 0,
            rng: ChaCha8Rng::seed_from_u64(0x5eed),
        };
        for j in 0..n {
            s.at_upper[j] = data.upper[j].abs() < data.lower[j].abs();
            s.x[j] = s.bound_value(j);
        }
        s.reset_inverse();
        s.recompute_primal();
        s
    }

    fn reset_inverse(&mut self) {
        let m = self.data.m;
        self.binv.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..m {
            self.binv[k * m + k] = -1.0;
        }
    }

    fn bound_value(&self, j: usize) -> f64 {
        let (lo, hi) = (self.lower[j], self.upper[j]);
        if self.at_upper[j] && hi.is_finite() {
            hi
        } else if lo.is_finite() {
            lo
        } else if hi.is_finite() {
            hi
        } else {
            0.0
        }
    }

    /// Moves a nonbasic variable to a finite bound and makes `at_upper`
    /// agree with where it sits.
    fn place_nonbasic(&mut self, j: usize) {
        if self.at_upper[j] && !self.upper[j].is_finite() {
            self.at_upper[j] = false;
        } else if !self.at_upper[j] && !self.lower[j].is_finite() && self.upper[j].is_finite() {
            self.at_upper[j] = true;
        }
        self.x[j] = self.bound_value(j);
    }

    pub fn structural_values(&self) -> &[f64] {
        &self.x[..self.data.n]
    }

    pub fn objective(&self) -> f64 {
        self.data.objective(self.structural_values())
    }

    pub fn is_basic(&self, j: usize) -> bool {
        self.pos[j] != NONBASIC
    }

    /// Changes the bounds of a variable. A nonbasic variable moves with its
    /// bound; callers must run [`Simplex::solve`] afterwards.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        if !self.is_basic(j) {
            self.place_nonbasic(j);
        }
    }

    pub fn snapshot(&self) -> BasisSnapshot {
        BasisSnapshot {
            basis: self.basis.clone(),
            at_upper: self.at_upper.clone(),
        }
    }

    /// Rebuilds the inverse for a stored basis by pivoting its structural
    /// columns into the logical basis. Columns that turn out dependent stay
    /// nonbasic and their logical keeps the slot.
    pub fn load(&mut self, snap: &BasisSnapshot) {
        let (n, m) = (self.data.n, self.data.m);
        self.at_upper.clone_from(&snap.at_upper);
        self.basis = (n..n + m).collect();
        self.pos = (0..n).map(|_| NONBASIC).chain(0..m).collect();
        self.reset_inverse();
        let mut wanted = vec![false; n + m];
        for &v in &snap.basis {
            wanted[v] = true;
        }
        for &q in snap.basis.iter().filter(|&&q| q < n) {
            self.ftran(q);
            let mut best: Option<(usize, f64)> = None;
            for &k in &self.alpha_nz {
                let var = self.basis[k];
                if var < n || wanted[var] {
                    continue;
                }
                let a = self.alpha[k].abs();
                if best.is_none_or(|(_, b)| a > b) {
                    best = Some((k, a));
                }
            }
            match best {
                Some((r, a)) if a > 1e-7 => {
                    self.update_inverse(r);
                    let leaving = self.basis[r];
                    self.pos[leaving] = NONBASIC;
                    self.basis[r] = q;
                    self.pos[q] = r;
                }
                _ => self.at_upper[q] = false,
            }
        }
        for j in 0..n + m {
            if !self.is_basic(j) {
                self.place_nonbasic(j);
            }
        }
        self.recompute_primal();
    }

    fn column(&self, j: usize) -> ColumnIter<'_> {
        if j < self.data.n {
            ColumnIter::Structural(self.data.cols[j].iter())
        } else {
            ColumnIter::Logical(Some(j - self.data.n))
        }
    }

    /// `alpha = B^-1 a_q`.
    fn ftran(&mut self, q: usize) {
        let m = self.data.m;
        let mut alpha = std::mem::take(&mut self.alpha);
        alpha.iter_mut().for_each(|v| *v = 0.0);
        for (r, a) in self.column(q) {
            let col = &self.binv[r * m..(r + 1) * m];
            for (out, &b) in alpha.iter_mut().zip(col) {
                *out += a * b;
            }
        }
        self.alpha = alpha;
        self.alpha_nz.clear();
        for (k, v) in self.alpha.iter_mut().enumerate() {
            if v.abs() > DROP_TOL {
                self.alpha_nz.push(k);
            } else {
                *v = 0.0;
            }
        }
    }

    /// Devex reference weights after `q` replaces `leaving`; uses the pivot
    /// row left in `row_alpha`.
    fn update_devex(&mut self, q: usize, leaving: usize, pivot: f64) {
        let wq = self.weights[q];
        for &j in &self.row_touched {
            if j != q && !self.is_basic(j) {
                let ratio = self.row_alpha[j] / pivot;
                self.weights[j] = self.weights[j].max(ratio * ratio * wq);
            }
        }
        let wl = (wq / (pivot * pivot)).max(1.0);
        if wl > DEVEX_RESET {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        } else {
            self.weights[leaving] = wl;
        }
    }

    /// Product-form update of `B^-1` for pivot position `r`, using the
    /// current `alpha`.
    fn update_inverse(&mut self, r: usize) {
        let m = self.data.m;
        let pivot = self.alpha[r];
        self.rho_nz.clear();
        for c in 0..m {
            if self.binv[c * m + r] != 0.0 {
                self.rho_nz.push(c);
            }
        }
        let dense = self.alpha_nz.len() * 8 > m;
        for &c in &self.rho_nz {
            let col = &mut self.binv[c * m..(c + 1) * m];
            let f = col[r] / pivot;
            if dense {
                for (v, &a) in col.iter_mut().zip(&self.alpha) {
                    *v -= a * f;
                }
            } else {
                for &k in &self.alpha_nz {
                    col[k] -= self.alpha[k] * f;
                }
            }
            col[r] = f;
        }
    }

    /// Flushes round-off residue out of the inverse.
    fn clean_inverse(&mut self) {
        for v in &mut self.binv {
            if v.abs() < DROP_TOL {
                *v = 0.0;
            }
        }
    }

    /// Pivot row `e_r^T B^-1 A` restricted to nonbasic columns, into `row_alpha`.
    fn pivot_row(&mut self, r: usize) {
        let (n, m) = (self.data.n, self.data.m);
        for &j in &self.row_touched {
            self.row_alpha[j] = 0.0;
            self.row_mark[j] = false;
        }
        self.row_touched.clear();
        for c in 0..m {
            let rho = self.binv[c * m + r];
            if rho == 0.0 {
                continue;
            }
            for &(j, a) in &self.data.rows[c] {
                if !self.row_mark[j] {
                    self.row_mark[j] = true;
                    self.row_touched.push(j);
                }
                self.row_alpha[j] += rho * a;
            }
            self.row_alpha[n + c] = -rho;
            self.row_mark[n + c] = true;
            self.row_touched.push(n + c);
        }
    }

    /// `x_B = -B^-1 N x_N`.
    fn recompute_primal(&mut self) {
        let (n, m) = (self.data.n, self.data.m);
        let mut v = vec![0.0; m];
        for j in 0..n + m {
            if self.is_basic(j) || self.x[j] == 0.0 {
                continue;
            }
            let xj = self.x[j];
            for (r, a) in self.column(j) {
                v[r] += a * xj;
            }
        }
        let mut xb = vec![0.0; m];
        for (c, &vc) in v.iter().enumerate() {
            if vc == 0.0 {
                continue;
            }
            let col = &self.binv[c * m..(c + 1) * m];
            for (out, &b) in xb.iter_mut().zip(col) {
                *out -= b * vc;
            }
        }
        for (k, val) in xb.into_iter().enumerate() {
            self.x[self.basis[k]] = val;
        }
    }

    fn cost(&self, j: usize) -> f64 {
        if j < self.data.n {
            self.data.cost[j]
        } else {
            0.0
        }
    }

    /// `y = c_B^T B^-1` for the given basic costs.
    fn compute_duals(&mut self, basic_cost: impl Fn(&Self, usize) -> f64) {
        let m = self.data.m;
        let cb: Vec<(usize, f64)> = (0..m)
            .map(|k| (k, basic_cost(self, k)))
            .filter(|&(_, c)| c != 0.0)
            .collect();
        for c in 0..m {
            let col = &self.binv[c * m..(c + 1) * m];
            self.y[c] = cb.iter().map(|&(k, ck)| ck * col[k]).sum();
        }
    }

    fn reduced_cost(&self, j: usize, own_cost: f64) -> f64 {
        let ya: f64 = self.column(j).map(|(r, a)| self.y[r] * a).sum();
        own_cost - ya
    }

    fn recompute_phase2_duals(&mut self) {
        self.compute_duals(|s, k| s.cost(s.basis[k]));
        for j in 0..self.data.n + self.data.m {
            self.d[j] = if self.is_basic(j) {
                0.0
            } else {
                self.reduced_cost(j, self.cost(j))
            };
        }
    }

    fn infeasibility(&self, k: usize) -> f64 {
        let v = self.basis[k];
        let xv = self.x[v];
        if xv < self.lower[v] - FEAS_TOL {
            -1.0
        } else if xv > self.upper[v] + FEAS_TOL {
            1.0
        } else {
            0.0
        }
    }

    fn primal_infeasible(&self) -> bool {
        (0..self.data.m).any(|k| self.infeasibility(k) != 0.0)
    }

    /// Entering variable and direction (+1 increase, -1 decrease).
    fn price(&self, phase: Phase, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.data.n + self.data.m {
            if self.is_basic(j) || self.lower[j] == self.upper[j] {
                continue;
            }
            let dj = match phase {
                Phase::One => self.reduced_cost(j, 0.0),
                Phase::Two => self.d[j],
            };
            let dir = if !self.at_upper[j] && dj < -OPT_TOL && self.x[j] < self.upper[j] {
                1.0
            } else if self.at_upper[j] && dj > OPT_TOL && self.x[j] > self.lower[j] {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            let score = dj * dj / self.weights[j];
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn ratio_test(&self, q: usize, dir: f64, phase: Phase, bland: bool) -> Option<Ratio> {
        let flip = self.upper[q] - self.lower[q];
        // (position, exact ratio, relaxed ratio, |alpha|, ends at upper)
        let mut cands: Vec<(usize, f64, f64, f64, bool)> = Vec::new();
        for &k in &self.alpha_nz {
            let a = self.alpha[k];
            if a.abs() < self.pivot_tol {
                continue;
            }
            let rate = -dir * a;
            let v = self.basis[k];
            let (lo, hi, xv) = (self.lower[v], self.upper[v], self.x[v]);
            let below = phase == Phase::One && xv < lo - FEAS_TOL;
            let above = phase == Phase::One && xv > hi + FEAS_TOL;
            let hit = if below {
                (rate > 0.0).then_some((lo - xv, false))
            } else if above {
                (rate < 0.0).then_some((xv - hi, true))
            } else if rate < 0.0 && lo.is_finite() {
                Some((xv - lo, false))
            } else if rate > 0.0 && hi.is_finite() {
                Some((hi - xv, true))
            } else {
                None
            };
            if let Some((dist, up)) = hit {
                let dist = dist.max(0.0);
                let r = rate.abs();
                cands.push((k, dist / r, (dist + FEAS_TOL) / r, a.abs(), up));
            }
        }

        let chosen = if bland {
            let min = cands.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= min + 1e-12)
                .min_by_key(|c| self.basis[c.0])
                .copied()
        } else {
            let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            cands
                .iter()
                .filter(|c| c.1 <= bound)
                .fold(None, |acc: Option<(usize, f64, f64, f64, bool)>, c| match acc {
                    Some(b) if b.3 >= c.3 => Some(b),
                    _ => Some(*c),
                })
        };

        match chosen {
            Some((k, theta, _, _, up)) if theta < flip => Some(Ratio {
                theta,
                leave: Some((k, up)),
            }),
            _ if flip.is_finite() => Some(Ratio {
                theta: flip,
                leave: None,
            }),
            Some((k, theta, _, _, up)) => Some(Ratio {
                theta,
                leave: Some((k, up)),
            }),
            None => None,
        }
    }

    fn step(&mut self, q: usize, dir: f64, ratio: &Ratio, phase: Phase) {
        let theta = ratio.theta;
        if theta > 0.0 {
            self.x[q] += dir * theta;
            for &k in &self.alpha_nz {
                let v = self.basis[k];
                self.x[v] -= dir * theta * self.alpha[k];
            }
        }
        if theta <= FEAS_TOL {
            self.degenerate_run += 1;
        } else {
            self.degenerate_run = 0;
        }
        match ratio.leave {
            None => {
                self.at_upper[q] = !self.at_upper[q];
                self.x[q] = self.bound_value(q);
            }
            Some((r, up)) => {
                let leaving = self.basis[r];
                self.pivot_row(r);
                let pivot = self.alpha[r];
                if phase == Phase::Two {
                    let f = self.d[q] / pivot;
                    for &j in &self.row_touched {
                        if !self.is_basic(j) {
                            self.d[j] -= f * self.row_alpha[j];
                        }
                    }
                    self.d[leaving] = -f;
                    self.d[q] = 0.0;
                }
                self.update_devex(q, leaving, pivot);
                self.update_inverse(r);
                self.basis[r] = q;
                self.pos[q] = r;
                self.pos[leaving] = NONBASIC;
                self.at_upper[leaving] = up;
                self.place_nonbasic(leaving);
            }
        }
        self.iterations += 1;
    }

    fn dual_feasible(&self) -> bool {
        (0..self.data.n + self.data.m).all(|j| {
            self.is_basic(j)
                || self.lower[j] == self.upper[j]
                || if self.at_upper[j] {
                    self.d[j] <= OPT_TOL
                } else {
                    self.d[j] >= -OPT_TOL
                }
        })
    }

    /// Basis position of the most infeasible basic variable and the bound it
    /// should be moved to.
    fn dual_leaving(&self) -> Option<(usize, f64, bool)> {
        let mut best: Option<(usize, f64, bool, f64)> = None;
        for k in 0..self.data.m {
            let v = self.basis[k];
            let xv = self.x[v];
            let (viol, target, up) = if xv < self.lower[v] - FEAS_TOL {
                (self.lower[v] - xv, self.lower[v], false)
            } else if xv > self.upper[v] + FEAS_TOL {
                (xv - self.upper[v], self.upper[v], true)
            } else {
                continue;
            };
            if best.is_none_or(|b| viol > b.3) {
                best = Some((k, target, up, viol));
            }
        }
        best.map(|(k, target, up, _)| (k, target, up))
    }

    /// Bounded dual simplex from a dual feasible basis. Stops once the basis
    /// is primal feasible, which makes it optimal.
    fn dual_simplex(&mut self, max_iterations: u64) -> DualOutcome {
        let n = self.data.n;
        let start = self.iterations;
        let mut since_refresh = 0u64;
        let mut best = f64::NEG_INFINITY;
        let mut last_progress = start;
        loop {
            if self.iterations - start >= max_iterations || self.iterations - last_progress >= DUAL_STALL {
                return DualOutcome::GaveUp;
            }
            if since_refresh >= REFRESH_EVERY {
                since_refresh = 0;
                self.clean_inverse();
                self.recompute_primal();
                self.recompute_phase2_duals();
                if !self.dual_feasible() {
                    return DualOutcome::GaveUp;
                }
            }
            let Some((r, target, up)) = self.dual_leaving() else {
                return DualOutcome::Feasible;
            };
            let leaving = self.basis[r];
            let must_rise = !up;
            self.pivot_row(r);

            // (variable, exact ratio, relaxed ratio, |alpha|)
            let mut cands: Vec<(usize, f64, f64, f64)> = Vec::new();
            for &j in &self.row_touched {
                if self.is_basic(j) || self.lower[j] == self.upper[j] {
                    continue;
                }
                let a = self.row_alpha[j];
                if a.abs() < self.pivot_tol {
                    continue;
                }
                // x_leaving moves by -a per unit increase of x_j
                let increases = !self.at_upper[j];
                let raises = if increases { a < 0.0 } else { a > 0.0 };
                if raises != must_rise {
                    continue;
                }
                let dj = self.d[j].abs();
                cands.push((j, dj / a.abs(), (dj + OPT_TOL) / a.abs(), a.abs()));
            }
            if cands.is_empty() {
                return DualOutcome::Infeasible;
            }
            let bound = cands.iter().map(|c| c.2).fold(f64::INFINITY, f64::min);
            let (q, _, _, _) = cands
                .iter()
                .filter(|c| c.1 <= bound)
                .fold(None, |acc: Option<(usize, f64, f64, f64)>, c| match acc {
                    Some(b) if b.3 > c.3 || (b.3 == c.3 && b.0 < c.0) => Some(b),
                    _ => Some(*c),
                })
                .expect("candidate list is not empty");

            self.ftran(q);
            let pivot = self.alpha[r];
            if pivot.abs() < self.pivot_tol || (pivot - self.row_alpha[q]).abs() > 1e-7 * pivot.abs().max(1.0) {
                return DualOutcome::GaveUp;
            }
            let delta = (self.x[leaving] - target) / pivot;
            self.x[q] += delta;
            for &k in &self.alpha_nz {
                let v = self.basis[k];
                self.x[v] -= delta * self.alpha[k];
            }

            let f = self.d[q] / pivot;
            for &j in &self.row_touched {
                if !self.is_basic(j) {
                    self.d[j] -= f * self.row_alpha[j];
                }
            }
            self.d[leaving] = -f;
            self.d[q] = 0.0;

            self.update_inverse(r);
            self.basis[r] = q;
            self.pos[q] = r;
            self.pos[leaving] = NONBASIC;
            self.at_upper[leaving] = up;
            self.place_nonbasic(leaving);
            debug_assert!(leaving < n + self.data.m);
            self.iterations += 1;
            since_refresh += 1;
            // minimization cost of the current point, which the dual method only raises
            let value = -self.objective();
            if best == f64::NEG_INFINITY || value > best + 1e-9 * best.abs().max(1.0) {
                best = value;
                last_progress = self.iterations;
            }
        }
    }

    /// Widens the finite bounds of every basic variable so that degenerate
    /// basics sit strictly inside their range.
    fn perturb(&mut self) {
        self.saved_bounds = Some((self.lower.clone(), self.upper.clone()));
        self.perturbations += 1;
        for k in 0..self.data.m {
            let v = self.basis[k];
            if self.lower[v].is_finite() {
                let xi = self.rng.gen_range(PERTURB_MIN..PERTURB_MAX);
                self.lower[v] -= xi * (1.0 + self.lower[v].abs());
            }
            if self.upper[v].is_finite() {
                let xi = self.rng.gen_range(PERTURB_MIN..PERTURB_MAX);
                self.upper[v] += xi * (1.0 + self.upper[v].abs());
            }
        }
    }

    /// Restores the true bounds. Nonbasic variables snap back to them, which
    /// may leave basic variables slightly infeasible.
    fn unperturb(&mut self) {
        if let Some((lower, upper)) = self.saved_bounds.take() {
            self.lower = lower;
            self.upper = upper;
            for j in 0..self.data.n + self.data.m {
                if !self.is_basic(j) {
                    self.place_nonbasic(j);
                }
            }
            self.recompute_primal();
        }
    }

    /// Dual simplex when the basis allows it. `Some` carries a final status.
    fn dual_repair(&mut self, max_iterations: u64) -> Option<LpStatus> {
        if !self.primal_infeasible() {
            return None;
        }
        self.recompute_phase2_duals();
        if !self.dual_feasible() {
            return None;
        }
        match self.dual_simplex(max_iterations) {
            DualOutcome::Infeasible => Some(LpStatus::Infeasible),
            DualOutcome::Feasible | DualOutcome::GaveUp => None,
        }
    }

    /// Runs phase 1 and phase 2 from the current basis.
    pub fn solve(&mut self, max_iterations: u64) -> LpStatus {
        self.perturbations = 0;
        self.recompute_primal();
        let status = match self.dual_repair(max_iterations) {
            Some(status) => status,
            None => self.primal(max_iterations),
        };
        self.unperturb();
        status
    }

    fn primal(&mut self, max_iterations: u64) -> LpStatus {
        self.recompute_primal();
        let start = self.iterations;
        let mut phase = Phase::One;
        let mut since_refresh = 0u64;
        let mut confirmations = 0;
        self.degenerate_run = 0;
        loop {
            if self.iterations - start >= max_iterations {
                return LpStatus::IterationLimit;
            }
            if since_refresh >= REFRESH_EVERY {
                since_refresh = 0;
                self.clean_inverse();
                self.recompute_primal();
                if phase == Phase::Two {
                    if self.primal_infeasible() {
                        phase = Phase::One;
                    } else {
                        self.recompute_phase2_duals();
                    }
                }
            }
            if self.degenerate_run >= DEGENERATE_RUN
                && self.saved_bounds.is_none()
                && self.perturbations < MAX_PERTURBATIONS
            {
                self.perturb();
                self.degenerate_run = 0;
            }
            let bland = self.degenerate_run >= DEGENERATE_RUN;

            if phase == Phase::One {
                if !self.primal_infeasible() {
                    phase = Phase::Two;
                    self.recompute_phase2_duals();
                    continue;
                }
                self.compute_duals(|s, k| s.infeasibility(k));
                let Some((q, dir)) = self.price(Phase::One, bland) else {
                    self.recompute_primal();
                    if self.primal_infeasible() {
                        return LpStatus::Infeasible;
                    }
                    continue;
                };
                self.ftran(q);
                let Some(ratio) = self.ratio_test(q, dir, Phase::One, bland) else {
                    return LpStatus::NumericalFailure;
                };
                self.step(q, dir, &ratio, Phase::One);
            } else {
                let Some((q, dir)) = self.price(Phase::Two, bland) else {
                    // confirm optimality with fresh values before stopping
                    self.recompute_primal();
                    if self.primal_infeasible() {
                        phase = Phase::One;
                        continue;
                    }
                    self.recompute_phase2_duals();
                    if self.price(Phase::Two, false).is_none() {
                        if self.saved_bounds.is_none() {
                            return LpStatus::Optimal;
                        }
                        self.unperturb();
                        if let Some(status) = self.dual_repair(max_iterations) {
                            return status;
                        }
                        phase = Phase::One;
                        continue;
                    }
                    confirmations += 1;
                    if confirmations > 50 {
                        return LpStatus::NumericalFailure;
                    }
                    continue;
                };
                self.ftran(q);
                let Some(ratio) = self.ratio_test(q, dir, Phase::Two, bland) else {
                    return LpStatus::Unbounded;
                };
                if let Some((r, _)) = ratio.leave {
                    if self.alpha[r].abs() < self.pivot_tol {
                        return LpStatus::NumericalFailure;
                    }
                }
                self.step(q, dir, &ratio, Phase::Two);
            }
            since_refresh += 1;
        }
    }
}

enum ColumnIter<'c> {
    Structural(std::slice::Iter<'c, (usize, f64)>),
    Logical(Option<usize>),
}

impl Iterator for ColumnIter<'_> {
    type Item = (usize, f64);

    fn next(&mut self) -> Option<(usize, f64)> {
        match self {
            ColumnIter::Structural(it) => it.next().copied(),
            ColumnIter::Logical(slot) => slot.take().map(|r| (r, -1.0)),
        }
    }
}

pub(crate) fn default_iteration_limit(data: &LpData) -> u64 {
    (50 * (data.n + data.m) as u64).max(100_000)
}

/// Solves the continuous relaxation of `model` (integrality dropped, bounds
/// kept).
pub fn solve_lp_relaxation(model: &IlpModel) -> LpSolution {
    solve_lp_relaxation_with(model, 1e-9)
}

pub fn solve_lp_relaxation_with(model: &IlpModel, pivot_tol: f64) -> LpSolution {
    let data = LpData::from_model(model);
    let mut simplex = Simplex::new(&data, pivot_tol);
    let status = simplex.solve(default_iteration_limit(&data));
    let optimal = status == LpStatus::Optimal;
    LpSolution {
        status,
        objective: optimal.then(|| simplex.objective()),
        values: if optimal {
            simplex.structural_values().to_vec()
        } else {
            Vec::new()
        },
        iterations: simplex.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::reference_instance;
    use crate::instance::Dims;
    use crate::model::{build_model, LinearConstraint, RowTag, Term, Variable, VariableRef};

    type Row = (Vec<(usize, f64)>, Sense, f64);

    /// A tiny hand-made LP over `T` variables only (P dimension zero).
    fn toy(vars: &[(i64, i64)], rows: Vec<Row>, obj: &[f64]) -> IlpModel {
        let dims = Dims {
            courses: 1,
            faculty: vars.len(),
            slots: 0,
        };
        let var = |k: usize| VariableRef::t(0, k);
        IlpModel {
            dims,
            variables: vars
                .iter()
                .enumerate()
                .map(|(k, &(lower, upper))| Variable { var: var(k), lower, upper })
                .collect(),
            constraints: rows
                .into_iter()
                .map(|(terms, sense, rhs)| LinearConstraint {
                    terms: terms.into_iter().map(|(k, coef)| Term { var: var(k), coef }).collect(),
                    sense,
                    rhs,
                    tag: RowTag::ObjectiveLevel,
                })
                .collect(),
            objective: obj
                .iter()
                .enumerate()
                .map(|(k, &coef)| Term { var: var(k), coef })
                .collect(),
        }
    }

    #[test]
    fn textbook_lp() {
        // max 3x + 2y, x + y <= 4, x + 3y <= 6, 0 <= x <= 3, 0 <= y <= 10
        let model = toy(
            &[(0, 3), (0, 10)],
            vec![
                (vec![(0, 1.0), (1, 1.0)], Sense::Le, 4.0),
                (vec![(0, 1.0), (1, 3.0)], Sense::Le, 6.0),
            ],
            &[3.0, 2.0],
        );
        let sol = solve_lp_relaxation(&model);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() - 11.0).abs() < 1e-9);
        assert!((sol.values[0] - 3.0).abs() < 1e-9 && (sol.values[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fractional_vertex() {
        // max x + y, 2x + 2y <= 3, x, y in [0, 1]
        let model = toy(
            &[(0, 1), (0, 1)],
            vec![(vec![(0, 2.0), (1, 2.0)], Sense::Le, 3.0)],
            &[1.0, 1.0],
        );
        let sol = solve_lp_relaxation(&model);
        assert!((sol.objective.unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn equality_needs_phase_one() {
        // min x + y (max -x - y), x + 2y = 5, x - y >= -1, bounds [0, 5]
        let model = toy(
            &[(0, 5), (0, 5)],
            vec![
                (vec![(0, 1.0), (1, 2.0)], Sense::Eq, 5.0),
                (vec![(0, 1.0), (1, -1.0)], Sense::Ge, -1.0),
            ],
            &[-1.0, -1.0],
        );
        let sol = solve_lp_relaxation(&model);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective.unwrap() + 3.0).abs() < 1e-9, "{:?}", sol);
        assert!((sol.values[0] - 1.0).abs() < 1e-9 && (sol.values[1] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let model = toy(
            &[(0, 1), (0, 1)],
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)],
            &[1.0, 0.0],
        );
        assert_eq!(solve_lp_relaxation(&model).status, LpStatus::Infeasible);
    }

    #[test]
    fn reference_instance_relaxation_is_zero() {
        let model = build_model(&reference_instance());
        let sol = solve_lp_relaxation(&model);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!(sol.objective.unwrap().abs() < 1e-9);
    }

    #[test]
    fn nobody_available_for_new_demand_is_infeasible() {
        let mut t1 = reference_instance();
        // a second B section at s2 where f1 is busy and f2 unavailable
        t1.demand.set(1, 1, 2);
        t1.preferences.set(1, 1, 0.0);
        let sol = solve_lp_relaxation(&build_model(&t1));
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn fixed_perturbation_leaves_t_at_zero() {
        let mut model = build_model(&reference_instance());
        for v in model.variables.iter_mut() {
            if v.var.kind == crate::model::VarKind::P {
                v.lower = 0;
                v.upper = 0;
            }
        }
        let sol = solve_lp_relaxation(&model);
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.objective.unwrap(), 0.0);
        assert!(sol.values[model.num_p()..].iter().all(|&t| t == 0.0));
    }

    #[test]
    fn warm_restart_from_snapshot_matches_cold_solve() {
        let mut t1 = reference_instance();
        t1.demand.set(0, 2, 0);
        let model = build_model(&t1);
        let data = LpData::from_model(&model);
        let mut a = Simplex::new(&data, 1e-9);
        assert_eq!(a.solve(10_000), LpStatus::Optimal);
        let snap = a.snapshot();
        let mut b = Simplex::new(&data, 1e-9);
        b.load(&snap);
        assert_eq!(b.solve(10_000), LpStatus::Optimal);
        assert!((a.objective() - b.objective()).abs() < 1e-9);
        assert_eq!(b.iterations, 0);
    }
}
