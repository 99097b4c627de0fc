//! Active sets of a relaxed solution, the stacked equality system `C*(t)`,
//! the rank test for non-degeneracy and the local linear decision map.
//!
//! `C*(t)` stacks, in this order, one unit row per zero pair `(s, a)`, the
//! budget row `D_j` of every tight resource, and the aggregation row `E_s` of
//! every state with positive mass. Columns follow the decision-vector layout.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{dot, ConfigVector, DecisionVector, WcMdpModel};
use crate::numerics::{matrix_rank, right_inverse, Matrix};
use crate::relaxation::RelaxedSolution;
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// Tight budgets, zero pairs and charged states of `y*(t)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActiveSets {
    pub t: usize,
    pub j_star: Vec<usize>,
    pub u_star: Vec<(usize, usize)>,
    pub s_star: Vec<usize>,
}

impl ActiveSets {
    pub fn rows(&self) -> usize {
        self.j_star.len() + self.u_star.len() + self.s_star.len()
    }
}

/// Membership threshold `active * max(1, |b(t)|_inf)`.
pub fn active_threshold<S: Scalar>(model: &WcMdpModel<S>, t: usize, tol: &Tolerances) -> f64 {
    let bmax = model
        .epoch(t)
        .budgets()
        .iter()
        .fold(0.0f64, |acc, b| acc.max(b.as_f64().abs()));
    tol.active * bmax.max(1.0)
}

pub fn active_sets<S: Scalar>(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>, t: usize) -> ActiveSets {
    let delta = active_threshold(model, t, &Tolerances::for_scalar::<S>());
    active_sets_with(model, sol, t, delta)
}

pub fn active_sets_with<S: Scalar>(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>, t: usize, delta: f64) -> ActiveSets {
    let y = sol.y_at(t);
    let m = sol.m_at(t);
    let e = model.epoch(t);
    let j_star = (0..model.num_resources())
        .filter(|&j| (e.budget(j) - dot(e.consumption_row(j), y.as_slice())).as_f64() <= delta)
        .collect();
    let mut u_star = Vec::new();
    for s in 0..model.num_states() {
        for a in 0..model.num_action_values() {
            if y.get(s, a).as_f64() <= delta {
                u_star.push((s, a));
            }
        }
    }
    let s_star = (0..model.num_states())
        .filter(|&s| m.as_slice()[s].as_f64() > delta)
        .collect();
    ActiveSets {
        t,
        j_star,
        u_star,
        s_star,
    }
}

pub fn build_cstar<S: Scalar>(model: &WcMdpModel<S>, active: &ActiveSets) -> Matrix<S> {
    let na = model.num_action_values();
    let cols = model.num_pairs();
    let e = model.epoch(active.t);
    let mut c = Matrix::zeros(active.rows(), cols);
    let mut r = 0;
    for &(s, a) in &active.u_star {
        c[(r, s * na + a)] = S::one();
        r += 1;
    }
    for &j in &active.j_star {
        c.row_mut(r).copy_from_slice(e.consumption_row(j));
        r += 1;
    }
    for &s in &active.s_star {
        for a in 0..na {
            c[(r, s * na + a)] = S::one();
        }
        r += 1;
    }
    c
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpochRank {
    pub t: usize,
    pub j: usize,
    pub s: usize,
    pub u: usize,
    pub rank: usize,
    pub required: usize,
    pub pass: bool,
}

/// Per-epoch rank results; the verdict covers epochs after the start epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegeneracyReport {
    pub t0: usize,
    pub epochs: Vec<EpochRank>,
}

impl DegeneracyReport {
    pub fn nondegenerate(&self) -> bool {
        self.epochs.iter().filter(|e| e.t > self.t0).all(|e| e.pass)
    }

    pub fn verdict(&self) -> &'static str {
        if self.nondegenerate() {
            "non-degenerate"
        } else {
            "degenerate at the computed vertex"
        }
    }
}

impl fmt::Display for DegeneracyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>5} {:>5} {:>5} {:>5} {:>6} {:>8} {:>5}", "epoch", "|J*|", "|S*|", "|U*|", "rank", "required", "pass")?;
        for e in &self.epochs {
            let mark = if e.t == self.t0 { " (not in verdict)" } else { "" };
            writeln!(
                f,
                "{:>5} {:>5} {:>5} {:>5} {:>6} {:>8} {:>5}{mark}",
                e.t, e.j, e.s, e.u, e.rank, e.required, if e.pass { "yes" } else { "no" }
            )?;
        }
        write!(f, "verdict: {}", self.verdict())
    }
}

pub fn is_nondegenerate<S: Scalar>(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>) -> DegeneracyReport {
    let epochs = (sol.t0..sol.horizon())
        .map(|t| {
            let act = active_sets(model, sol, t);
            let rank = matrix_rank(&build_cstar(model, &act));
            let required = act.rows();
            EpochRank {
                t,
                j: act.j_star.len(),
                s: act.s_star.len(),
                u: act.u_star.len(),
                rank,
                required,
                pass: rank == required,
            }
        })
        .collect();
    DegeneracyReport { t0: sol.t0, epochs }
}

/// `y(m) = y* + C+ [0; 0; (m - m*)|S*]` around one epoch of a relaxed solution.
#[derive(Clone, Debug)]
pub struct LocalLinearMap<S> {
    pub t: usize,
    pub y_anchor: DecisionVector<S>,
    pub m_anchor: ConfigVector<S>,
    pub c_star: Matrix<S>,
    pub c_plus: Matrix<S>,
    pub active: ActiveSets,
}

impl<S: Scalar> LocalLinearMap<S> {
    /// Fails with a rank error when `C*(t)` lacks full row rank.
    pub fn new(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>, t: usize) -> Result<Self> {
        let active = active_sets(model, sol, t);
        let c_star = build_cstar(model, &active);
        let c_plus = right_inverse(&c_star)?;
        Ok(Self {
            t,
            y_anchor: sol.y_at(t).clone(),
            m_anchor: sol.m_at(t).clone(),
            c_star,
            c_plus,
            active,
        })
    }
}

pub fn local_linear_decision<S: Scalar>(map: &LocalLinearMap<S>, m: &ConfigVector<S>) -> DecisionVector<S> {
    let rows = map.active.rows();
    let first_s = rows - map.active.s_star.len();
    let mut rhs = vec![S::zero(); rows];
    for (k, &s) in map.active.s_star.iter().enumerate() {
        rhs[first_s + k] = m.as_slice()[s] - map.m_anchor.as_slice()[s];
    }
    let delta = map.c_plus.mul_vec(&rhs);
    let mut y = map.y_anchor.clone();
    for (v, dv) in y.as_mut_slice().iter_mut().zip(delta) {
        *v = *v + dv;
    }
    y
}

/// The same map as [`LocalLinearMap`], computed on the columns outside
/// `U*`. The unit rows of `C*` pin those columns, so
/// `rank C* = |U*| + rank C_F` where `C_F` keeps the budget and aggregation
/// rows restricted to the free columns, and the minimum-norm correction is
/// zero on `U*`. Only the gain from `(m - m*)|S*` to the free entries is kept.
#[derive(Clone, Debug)]
pub struct ReducedLinearMap<S> {
    pub t: usize,
    y_anchor: DecisionVector<S>,
    m_anchor: ConfigVector<S>,
    free: Vec<usize>,
    s_star: Vec<usize>,
    /// `gain[(i, k)]`: change of free entry `i` per unit of `m_{s_star[k]}`.
    gain: Matrix<S>,
}

impl<S: Scalar> ReducedLinearMap<S> {
    /// `None` when the rank test fails at `t`.
    pub fn new(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>, t: usize) -> Option<Self> {
        let active = active_sets(model, sol, t);
        let na = model.num_action_values();
        let mut pinned = vec![false; model.num_pairs()];
        for &(s, a) in &active.u_star {
            pinned[s * na + a] = true;
        }
        let free: Vec<usize> = (0..model.num_pairs()).filter(|&c| !pinned[c]).collect();
        let e = model.epoch(t);
        let p = active.j_star.len() + active.s_star.len();
        let mut cf = Matrix::zeros(p, free.len());
        for (r, &j) in active.j_star.iter().enumerate() {
            let row = e.consumption_row(j);
            for (i, &c) in free.iter().enumerate() {
                cf[(r, i)] = row[c];
            }
        }
        let first_s = active.j_star.len();
        for (k, &s) in active.s_star.iter().enumerate() {
            for (i, &c) in free.iter().enumerate() {
                if c / na == s {
                    cf[(first_s + k, i)] = S::one();
                }
            }
        }
        if p > 0 && matrix_rank(&cf) < p {
            return None;
        }
        let plus = if p == 0 { Matrix::zeros(free.len(), 0) } else { right_inverse(&cf).ok()? };
        let mut gain = Matrix::zeros(free.len(), active.s_star.len());
        for i in 0..free.len() {
            for k in 0..active.s_star.len() {
                gain[(i, k)] = plus[(i, first_s + k)];
            }
        }
        Some(Self {
            t,
            y_anchor: sol.y_at(t).clone(),
            m_anchor: sol.m_at(t).clone(),
            free,
            s_star: active.s_star,
            gain,
        })
    }

    pub fn decision(&self, m: &ConfigVector<S>) -> DecisionVector<S> {
        let dm: Vec<S> = self
            .s_star
            .iter()
            .map(|&s| m.as_slice()[s] - self.m_anchor.as_slice()[s])
            .collect();
        let delta = self.gain.mul_vec(&dm);
        let mut y = self.y_anchor.clone();
        let vals = y.as_mut_slice();
        for (&c, dv) in self.free.iter().zip(delta) {
            vals[c] = vals[c] + dv;
        }
        y
    }
}

/// Non-degeneracy of a two-action, single-constraint model whose budget is
/// posed as an equality: every epoch after the start has a state where both
/// actions carry mass. `sol` must come from the equality-constrained LP.
pub fn twoaction_nondegenerate<S: Scalar>(model: &WcMdpModel<S>, sol: &RelaxedSolution<S>) -> Result<bool> {
    if model.num_action_values() != 2 || model.num_resources() != 1 {
        return Err(Error::Unsupported(
            "two-action check needs actions {0, 1} and a single resource".into(),
        ));
    }
    for t in 0..model.horizon() {
        let e = model.epoch(t);
        if (0..model.num_states()).any(|s| e.consumption(0, s, 1) != S::one()) {
            return Err(Error::Unsupported(format!(
                "two-action check needs D(s, 1) = 1 for every state (epoch {t})"
            )));
        }
    }
    let tol = Tolerances::for_scalar::<S>();
    Ok(((sol.t0 + 1)..sol.horizon()).all(|t| {
        let delta = active_threshold(model, t, &tol);
        let y = sol.y_at(t);
        (0..model.num_states()).any(|s| y.get(s, 0).as_f64() > delta && y.get(s, 1).as_f64() > delta)
    }))
}
