//! The relaxed linear program over epochs `t0..T` and the expected-transition
//! map `phi`.
//!
//! Variables are `y_{s,a}(t)` ordered by `(t, s, a)`. Equality rows are the
//! initial condition at `t0` followed by one flow row per `(t, s)`, `t > t0`;
//! the budget rows `D y(t) <= b` follow, epoch by epoch. The all-passive
//! trajectory is feasible and its basis is lower triangular in this order,
//! so [`solve_relaxed`] starts from it and skips phase one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ConfigVector, DecisionVector, WcMdpModel};
use crate::numerics::{solve_lp_with, LpStatus, Matrix, PivotRule, SimplexOptions, StandardLp};
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// Optimal trajectory of the relaxed LP started at `t0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RelaxedSolution<S> {
    pub t0: usize,
    /// `y_star[k]` is `y*(t0 + k)` for `k < T - t0`.
    pub y_star: Vec<DecisionVector<S>>,
    /// `m_star[k]` is `m*(t0 + k)` for `k <= T - t0`.
    pub m_star: Vec<ConfigVector<S>>,
    pub value: S,
    /// Simplex pivots spent on the solve.
    pub iterations: usize,
}

impl<S: Scalar> RelaxedSolution<S> {
    /// One past the last decision epoch.
    pub fn horizon(&self) -> usize {
        self.t0 + self.y_star.len()
    }

    pub fn y_at(&self, t: usize) -> &DecisionVector<S> {
        &self.y_star[t - self.t0]
    }

    pub fn m_at(&self, t: usize) -> &ConfigVector<S> {
        &self.m_star[t - self.t0]
    }

    /// Reward collected from epoch `t` onwards along the stored trajectory.
    pub fn value_from(&self, model: &WcMdpModel<S>, t: usize) -> S {
        (t..self.horizon())
            .map(|u| self.y_at(u).reward(model.epoch(u)))
            .sum()
    }

    /// Largest violation among the initial condition, flow and budget
    /// constraints; `m0` is the configuration the LP was started from.
    pub fn max_residual(&self, model: &WcMdpModel<S>, m0: &ConfigVector<S>) -> f64 {
        let mut worst = linf(self.m_star[0].as_slice(), m0.as_slice());
        for (k, y) in self.y_star.iter().enumerate() {
            let t = self.t0 + k;
            worst = worst.max(linf(y.marginal().as_slice(), self.m_star[k].as_slice()));
            let next = apply_phi(model, t, y);
            worst = worst.max(linf(next.as_slice(), self.m_star[k + 1].as_slice()));
            let e = model.epoch(t);
            for j in 0..model.num_resources() {
                let used = crate::model::dot(e.consumption_row(j), y.as_slice());
                worst = worst.max((used - e.budget(j)).as_f64());
            }
            worst = worst.max(-y.as_slice().iter().fold(S::zero(), |a, &v| a.min(v)).as_f64());
        }
        worst
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(SolutionFile::from(self)).expect("solution serializes")
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let f: SolutionFile<S> = serde_json::from_value(value.clone())
            .map_err(|e| Error::Parse { line: 0, column: 0, message: e.to_string() })?;
        let y_star = f
            .y_star
            .into_iter()
            .map(|rows| {
                let width = rows.first().map_or(1, Vec::len).max(1);
                DecisionVector::new(width, rows.concat())
            })
            .collect();
        Ok(Self {
            t0: f.t0,
            y_star,
            m_star: f.m_star,
            value: f.value,
            iterations: 0,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct SolutionFile<S> {
    t0: usize,
    value: S,
    y_star: Vec<Vec<Vec<S>>>,
    m_star: Vec<ConfigVector<S>>,
}

impl<S: Scalar> From<&RelaxedSolution<S>> for SolutionFile<S> {
    fn from(s: &RelaxedSolution<S>) -> Self {
        Self {
            t0: s.t0,
            value: s.value,
            y_star: s.y_star.iter().map(DecisionVector::to_nested).collect(),
            m_star: s.m_star.clone(),
        }
    }
}

fn linf<S: Scalar>(a: &[S], b: &[S]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |acc, (x, y)| acc.max((*x - *y).abs().as_f64()))
}

/// `phi(y)_s = sum_{s',a} y_{s',a} P^a_{s',s}` with the epoch-`t` matrices.
pub fn phi<S: Scalar>(model: &WcMdpModel<S>, t: usize, y: &DecisionVector<S>) -> Result<ConfigVector<S>> {
    check_decision_shape(model, y)?;
    if t >= model.horizon() {
        return Err(Error::Dimension(format!("epoch {t} outside horizon {}", model.horizon())));
    }
    if y.as_slice().iter().any(|v| v.as_f64() < -1e-9) {
        return Err(Error::Precondition("phi needs a nonnegative decision vector".into()));
    }
    let total: S = y.as_slice().iter().copied().sum();
    if (total.as_f64() - 1.0).abs() > 1e-9 {
        return Err(Error::Precondition(format!("decision vector has mass {total}, expected 1")));
    }
    Ok(apply_phi(model, t, y))
}

/// `phi` without the simplex precondition; linear in `y`.
pub(crate) fn apply_phi<S: Scalar>(model: &WcMdpModel<S>, t: usize, y: &DecisionVector<S>) -> ConfigVector<S> {
    let d = model.num_states();
    let e = model.epoch(t);
    let mut out = vec![S::zero(); d];
    for s in 0..d {
        for a in 0..model.num_action_values() {
            let w = y.get(s, a);
            if w == S::zero() {
                continue;
            }
            for (o, &p) in out.iter_mut().zip(e.transition_row(a, s)) {
                *o = *o + w * p;
            }
        }
    }
    ConfigVector(out)
}

fn check_decision_shape<S: Scalar>(model: &WcMdpModel<S>, y: &DecisionVector<S>) -> Result<()> {
    if y.num_states() != model.num_states() || y.num_action_values() != model.num_action_values() {
        return Err(Error::Dimension(format!(
            "decision vector is {}x{}, model needs {}x{}",
            y.num_states(),
            y.num_action_values(),
            model.num_states(),
            model.num_action_values()
        )));
    }
    Ok(())
}

/// Knobs for building the relaxed LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RelaxOptions {
    /// Pose `D y(t) = b` instead of `D y(t) <= b`.
    pub budget_equality: bool,
    /// Drop states unreachable from the support of `m0` (their mass is zero
    /// in every feasible trajectory) and actions dominated by the passive
    /// action (same transition row, no more reward, no less consumption).
    /// Neither changes the optimal value. Dominance is skipped when budgets
    /// are equalities.
    pub prune: bool,
    pub rule: PivotRule,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            budget_equality: false,
            prune: true,
            rule: PivotRule::Dantzig,
        }
    }
}

/// The LP together with the map from its columns back to `(t, s, a)`.
#[derive(Clone, Debug)]
pub struct RelaxedLp<S> {
    pub lp: StandardLp<S>,
    pub t0: usize,
    /// `states[k]` are the states carried at epoch `t0 + k`.
    pub states: Vec<Vec<usize>>,
    /// `(t, s, a)` of every column.
    pub columns: Vec<(usize, usize, usize)>,
    /// Column of the passive pair of each carried state, in row order.
    passive: Vec<usize>,
    budget_equality: bool,
}

impl<S: Scalar> RelaxedLp<S> {
    /// All-passive basis in row order, when the budget rows are inequalities.
    fn passive_basis(&self) -> Option<Vec<usize>> {
        if self.budget_equality {
            return None;
        }
        let n = self.lp.num_vars();
        let mut basis = self.passive.clone();
        basis.extend((0..self.lp.b_ub.len()).map(|i| n + i));
        Some(basis)
    }
}

fn dominated<S: Scalar>(model: &WcMdpModel<S>, t: usize, s: usize, a: usize) -> bool {
    let e = model.epoch(t);
    a != 0
        && e.transition_row(a, s) == e.transition_row(0, s)
        && e.reward(s, a) <= e.reward(s, 0)
        && (0..model.num_resources()).all(|j| e.consumption(j, s, a) >= e.consumption(j, s, 0))
}

/// The relaxed LP at `(m0, t0)` over every state and action (no pruning).
pub fn build_relaxed_lp<S: Scalar>(model: &WcMdpModel<S>, m0: &ConfigVector<S>, t0: usize) -> Result<StandardLp<S>> {
    let opts = RelaxOptions {
        prune: false,
        ..RelaxOptions::default()
    };
    Ok(build_relaxed_lp_with(model, m0, t0, &opts)?.lp)
}

pub fn build_relaxed_lp_with<S: Scalar>(
    model: &WcMdpModel<S>,
    m0: &ConfigVector<S>,
    t0: usize,
    opts: &RelaxOptions,
) -> Result<RelaxedLp<S>> {
    let d = model.num_states();
    let na = model.num_action_values();
    let horizon = model.horizon();
    if t0 >= horizon {
        return Err(Error::Precondition(format!("start epoch {t0} must be below horizon {horizon}")));
    }
    if m0.len() != d {
        return Err(Error::Dimension(format!("m0 has {} entries, model has {d} states", m0.len())));
    }
    m0.check(None, 1e-9)?;

    let epochs = horizon - t0;
    let states: Vec<Vec<usize>> = if opts.prune {
        reachable_states(model, m0, t0)
    } else {
        vec![(0..d).collect(); epochs]
    };
    let mut columns = Vec::new();
    let mut passive = Vec::new();
    // row_of[k][s]: equality row of state s at epoch t0 + k.
    let mut row_of = vec![vec![usize::MAX; d]; epochs];
    let mut n_rows = 0;
    for (k, st) in states.iter().enumerate() {
        let t = t0 + k;
        for &s in st {
            row_of[k][s] = n_rows;
            n_rows += 1;
            for a in 0..na {
                if a == 0 {
                    passive.push(columns.len());
                } else if opts.prune && !opts.budget_equality && dominated(model, t, s, a) {
                    continue;
                }
                columns.push((t, s, a));
            }
        }
    }
    let n = columns.len();

    let c: Vec<S> = columns.iter().map(|&(t, s, a)| model.epoch(t).reward(s, a)).collect();
    let mut a_eq = Matrix::zeros(n_rows, n);
    let mut b_eq = vec![S::zero(); n_rows];
    for &s in &states[0] {
        b_eq[row_of[0][s]] = m0.as_slice()[s];
    }
    let nj = model.num_resources();
    let mut a_budget = Matrix::zeros(epochs * nj, n);
    for (col, &(t, s, a)) in columns.iter().enumerate() {
        let k = t - t0;
        a_eq[(row_of[k][s], col)] = S::one();
        let e = model.epoch(t);
        if k + 1 < epochs {
            for (next, &p) in e.transition_row(a, s).iter().enumerate() {
                if p != S::zero() {
                    let r = row_of[k + 1][next];
                    debug_assert!(r != usize::MAX);
                    a_eq[(r, col)] = a_eq[(r, col)] - p;
                }
            }
        }
        for j in 0..nj {
            a_budget[(k * nj + j, col)] = e.consumption(j, s, a);
        }
    }
    let b_budget: Vec<S> = (0..epochs)
        .flat_map(|k| model.epoch(t0 + k).budgets().to_vec())
        .collect();

    let lp = if opts.budget_equality {
        let mut a = a_eq;
        for i in 0..a_budget.rows() {
            a.push_row(a_budget.row(i));
        }
        b_eq.extend(b_budget);
        StandardLp::new(c, a, b_eq, Matrix::empty(n), Vec::new())?
    } else {
        StandardLp::new(c, a_eq, b_eq, a_budget, b_budget)?
    };
    Ok(RelaxedLp {
        lp,
        t0,
        states,
        columns,
        passive,
        budget_equality: opts.budget_equality,
    })
}

/// States that can carry mass at each epoch `t0..T` starting from `supp(m0)`.
pub fn reachable_states<S: Scalar>(model: &WcMdpModel<S>, m0: &ConfigVector<S>, t0: usize) -> Vec<Vec<usize>> {
    let d = model.num_states();
    let mut out = Vec::with_capacity(model.horizon() - t0);
    let mut cur: Vec<bool> = m0.as_slice().iter().map(|&v| v > S::zero()).collect();
    for t in t0..model.horizon() {
        out.push((0..d).filter(|&s| cur[s]).collect());
        if t + 1 == model.horizon() {
            break;
        }
        let e = model.epoch(t);
        let mut next = vec![false; d];
        for s in (0..d).filter(|&s| cur[s]) {
            for a in 0..model.num_action_values() {
                for (s2, &p) in e.transition_row(a, s).iter().enumerate() {
                    if p > S::zero() {
                        next[s2] = true;
                    }
                }
            }
        }
        cur = next;
    }
    out
}

pub fn solve_relaxed<S: Scalar>(model: &WcMdpModel<S>, m0: &ConfigVector<S>, t0: usize) -> Result<RelaxedSolution<S>> {
    solve_relaxed_with(model, m0, t0, &RelaxOptions::default())
}

pub fn solve_relaxed_with<S: Scalar>(
    model: &WcMdpModel<S>,
    m0: &ConfigVector<S>,
    t0: usize,
    opts: &RelaxOptions,
) -> Result<RelaxedSolution<S>> {
    let built = build_relaxed_lp_with(model, m0, t0, opts)?;
    let horizon = model.horizon();
    let simplex = SimplexOptions {
        rule: opts.rule,
        crash_basis: built.passive_basis(),
        tolerances: Some(Tolerances::for_scalar::<S>()),
        max_iterations: None,
    };
    let sol = solve_lp_with(&built.lp, &simplex).map_err(|e| match e {
        Error::SolverFailure(msg) => Error::SolverFailure(format!("epochs {t0}..{horizon}: {msg}")),
        other => other,
    })?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::RelaxationStatus {
            t0,
            horizon,
            status: sol.status.to_string(),
        });
    }

    let d = model.num_states();
    let na = model.num_action_values();
    let mut y_star = vec![DecisionVector::zeros(d, na); built.states.len()];
    for (&(t, s, a), &v) in built.columns.iter().zip(&sol.y) {
        y_star[t - t0].set(s, a, v);
    }
    let mut m_star: Vec<ConfigVector<S>> = y_star.iter().map(DecisionVector::marginal).collect();
    m_star.push(apply_phi(model, horizon - 1, y_star.last().expect("at least one epoch")));
    Ok(RelaxedSolution {
        t0,
        y_star,
        m_star,
        value: sol.value,
        iterations: sol.iterations,
    })
}
