//! Weakly coupled MDP instances and population-level state/decision vectors.
//!
//! States are dense indices `0..d`, actions `0..=A` with `0` the passive
//! action. A decision vector is indexed by the pair `(s, a)` at flat position
//! `s * (A + 1) + a`; the consumption matrix uses the same column order.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

/// Parameters of one decision epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochParams<S> {
    d: usize,
    actions: usize,
    resources: usize,
    /// `transitions[(a * d + s) * d + s2] = P^a_{s, s2}`
    transitions: Vec<S>,
    /// `rewards[s * actions + a] = R_s^a`
    rewards: Vec<S>,
    /// `consumption[j * d * actions + s * actions + a] = D_j(s, a)`
    consumption: Vec<S>,
    budgets: Vec<S>,
}

impl<S: Scalar> EpochParams<S> {
    /// Builds an epoch from nested arrays:
    /// `p[a][s][s2]`, `r[s][a]`, `cons[j][s * (A + 1) + a]`, `b[j]`.
    pub fn from_nested(
        p: &[Vec<Vec<S>>],
        r: &[Vec<S>],
        cons: &[Vec<S>],
        b: &[S],
    ) -> Result<Self> {
        let actions = p.len();
        if actions == 0 {
            return Err(Error::Dimension("no transition matrices".into()));
        }
        let d = p[0].len();
        if d == 0 {
            return Err(Error::Dimension("transition matrices have no rows".into()));
        }
        let mut transitions = Vec::with_capacity(actions * d * d);
        for (a, mat) in p.iter().enumerate() {
            if mat.len() != d {
                return Err(Error::Dimension(format!("P^{a} has {} rows, expected {d}", mat.len())));
            }
            for (s, row) in mat.iter().enumerate() {
                if row.len() != d {
                    return Err(Error::Dimension(format!(
                        "P^{a} row {s} has {} entries, expected {d}",
                        row.len()
                    )));
                }
                transitions.extend_from_slice(row);
            }
        }
        if r.len() != d {
            return Err(Error::Dimension(format!("R has {} rows, expected {d}", r.len())));
        }
        let mut rewards = Vec::with_capacity(d * actions);
        for (s, row) in r.iter().enumerate() {
            if row.len() != actions {
                return Err(Error::Dimension(format!(
                    "R row {s} has {} entries, expected {actions}",
                    row.len()
                )));
            }
            rewards.extend_from_slice(row);
        }
        let resources = b.len();
        if cons.len() != resources {
            return Err(Error::Dimension(format!(
                "D has {} rows but b has {resources} entries",
                cons.len()
            )));
        }
        let mut consumption = Vec::with_capacity(resources * d * actions);
        for (j, row) in cons.iter().enumerate() {
            if row.len() != d * actions {
                return Err(Error::Dimension(format!(
                    "D row {j} has {} columns, expected {}",
                    row.len(),
                    d * actions
                )));
            }
            consumption.extend_from_slice(row);
        }
        Ok(Self {
            d,
            actions,
            resources,
            transitions,
            rewards,
            consumption,
            budgets: b.to_vec(),
        })
    }

    pub fn num_states(&self) -> usize {
        self.d
    }

    /// Number of action values `A + 1`.
    pub fn num_action_values(&self) -> usize {
        self.actions
    }

    pub fn num_resources(&self) -> usize {
        self.resources
    }

    #[inline]
    pub fn transition(&self, a: usize, s: usize, next: usize) -> S {
        self.transitions[(a * self.d + s) * self.d + next]
    }

    /// Row `P^a_{s, .}`.
    #[inline]
    pub fn transition_row(&self, a: usize, s: usize) -> &[S] {
        let start = (a * self.d + s) * self.d;
        &self.transitions[start..start + self.d]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> S {
        self.rewards[s * self.actions + a]
    }

    /// Rewards in decision-vector order.
    pub fn rewards(&self) -> &[S] {
        &self.rewards
    }

    #[inline]
    pub fn consumption(&self, j: usize, s: usize, a: usize) -> S {
        self.consumption[j * self.d * self.actions + s * self.actions + a]
    }

    /// Row `D_j` in decision-vector order.
    pub fn consumption_row(&self, j: usize) -> &[S] {
        let u = self.d * self.actions;
        &self.consumption[j * u..(j + 1) * u]
    }

    pub fn budget(&self, j: usize) -> S {
        self.budgets[j]
    }

    pub fn budgets(&self) -> &[S] {
        &self.budgets
    }

    fn to_file(&self) -> EpochFile<S> {
        let d = self.d;
        let p = (0..self.actions)
            .map(|a| (0..d).map(|s| self.transition_row(a, s).to_vec()).collect())
            .collect();
        let r = (0..d)
            .map(|s| self.rewards[s * self.actions..(s + 1) * self.actions].to_vec())
            .collect();
        let cons = (0..self.resources).map(|j| self.consumption_row(j).to_vec()).collect();
        EpochFile {
            p,
            r,
            d: cons,
            b: self.budgets.clone(),
            stationary: None,
        }
    }
}

/// A finite-horizon weakly coupled MDP with possibly time-dependent parameters.
///
/// Immutable after construction; shape consistency is checked by the
/// constructor, value invariants by [`validate_model`].
#[derive(Clone, Debug, PartialEq)]
pub struct WcMdpModel<S> {
    d: usize,
    max_action: usize,
    resources: usize,
    horizon: usize,
    epochs: Vec<EpochParams<S>>,
    stationary: bool,
    state_labels: Option<Vec<String>>,
}

impl<S: Scalar> WcMdpModel<S> {
    /// Model with one parameter set per epoch (`epochs.len() == horizon`).
    pub fn new(horizon: usize, epochs: Vec<EpochParams<S>>) -> Result<Self> {
        if epochs.len() != horizon {
            return Err(Error::Dimension(format!(
                "{} epochs given for horizon {horizon}",
                epochs.len()
            )));
        }
        Self::build(horizon, epochs, false)
    }

    /// Model whose single parameter set is broadcast to every epoch.
    pub fn stationary(horizon: usize, epoch: EpochParams<S>) -> Result<Self> {
        Self::build(horizon, vec![epoch], true)
    }

    fn build(horizon: usize, epochs: Vec<EpochParams<S>>, stationary: bool) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Dimension("horizon must be at least 1".into()));
        }
        let first = epochs
            .first()
            .ok_or_else(|| Error::Dimension("no epoch parameters".into()))?;
        let (d, actions, resources) = (first.d, first.actions, first.resources);
        if actions < 2 {
            return Err(Error::Dimension("at least two actions (A >= 1) are required".into()));
        }
        for (t, e) in epochs.iter().enumerate() {
            if e.d != d || e.actions != actions || e.resources != resources {
                return Err(Error::Dimension(format!(
                    "epoch {t} has shape (d={}, A+1={}, J={}), expected ({d}, {actions}, {resources})",
                    e.d, e.actions, e.resources
                )));
            }
        }
        Ok(Self {
            d,
            max_action: actions - 1,
            resources,
            horizon,
            epochs,
            stationary,
            state_labels: None,
        })
    }

    pub fn with_state_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.d {
            return Err(Error::Dimension(format!(
                "{} state labels for {} states",
                labels.len(),
                self.d
            )));
        }
        self.state_labels = Some(labels);
        Ok(self)
    }

    pub fn num_states(&self) -> usize {
        self.d
    }

    /// Largest action index `A`.
    pub fn max_action(&self) -> usize {
        self.max_action
    }

    /// Number of action values `A + 1`.
    pub fn num_action_values(&self) -> usize {
        self.max_action + 1
    }

    pub fn num_resources(&self) -> usize {
        self.resources
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Length `d (A + 1)` of a decision vector.
    pub fn num_pairs(&self) -> usize {
        self.d * (self.max_action + 1)
    }

    #[inline]
    pub fn pair(&self, s: usize, a: usize) -> usize {
        s * (self.max_action + 1) + a
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn state_labels(&self) -> Option<&[String]> {
        self.state_labels.as_deref()
    }

    /// Parameters in force at epoch `t` (`t < horizon`).
    #[inline]
    pub fn epoch(&self, t: usize) -> &EpochParams<S> {
        if self.stationary {
            &self.epochs[0]
        } else {
            &self.epochs[t]
        }
    }

    /// The distinct stored parameter sets (one for a stationary model).
    pub fn stored_epochs(&self) -> &[EpochParams<S>] {
        &self.epochs
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: ModelFile<S> = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        file.into_model()
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_string(&self) -> String {
        let file = ModelFile {
            d: self.d,
            num_actions: self.max_action,
            j: self.resources,
            horizon: self.horizon,
            epochs: self.epochs.iter().map(EpochParams::to_file).collect(),
            stationary: self.stationary.then_some(true),
            state_labels: self.state_labels.clone(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct ModelFile<S> {
    d: usize,
    num_actions: usize,
    #[serde(rename = "J")]
    j: usize,
    horizon: usize,
    epochs: Vec<EpochFile<S>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stationary: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    state_labels: Option<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "S: Scalar")]
struct EpochFile<S> {
    #[serde(rename = "P")]
    p: Vec<Vec<Vec<S>>>,
    #[serde(rename = "R")]
    r: Vec<Vec<S>>,
    #[serde(rename = "D")]
    d: Vec<Vec<S>>,
    b: Vec<S>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stationary: Option<bool>,
}

impl<S: Scalar> ModelFile<S> {
    fn into_model(self) -> Result<WcMdpModel<S>> {
        let stationary = self.stationary.unwrap_or(false)
            || (self.epochs.len() == 1 && self.epochs[0].stationary.unwrap_or(false));
        let epochs = self
            .epochs
            .iter()
            .map(|e| EpochParams::from_nested(&e.p, &e.r, &e.d, &e.b))
            .collect::<Result<Vec<_>>>()?;
        let mut model = if stationary {
            if epochs.len() != 1 {
                return Err(Error::Dimension(format!(
                    "stationary model must give exactly one epoch, got {}",
                    epochs.len()
                )));
            }
            WcMdpModel::stationary(self.horizon, epochs.into_iter().next().unwrap())?
        } else {
            WcMdpModel::new(self.horizon, epochs)?
        };
        if model.d != self.d || model.max_action != self.num_actions || model.resources != self.j {
            return Err(Error::Dimension(format!(
                "header (d={}, num_actions={}, J={}) disagrees with epoch data (d={}, num_actions={}, J={})",
                self.d, self.num_actions, self.j, model.d, model.max_action, model.resources
            )));
        }
        if let Some(labels) = self.state_labels {
            model = model.with_state_labels(labels)?;
        }
        Ok(model)
    }
}

/// Population-level state: fraction of arms in each state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "S: Scalar", transparent)]
pub struct ConfigVector<S>(pub Vec<S>);

impl<S: Scalar> ConfigVector<S> {
    pub fn new(values: Vec<S>) -> Self {
        Self(values)
    }

    /// Configuration from integer arm counts.
    pub fn from_counts(counts: &[u64], n: u64) -> Self {
        let nn = S::lit(n as f64);
        Self(counts.iter().map(|&c| S::lit(c as f64) / nn).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    pub fn total(&self) -> S {
        self.0.iter().copied().sum()
    }

    /// Checks membership of the simplex (and of the `1/N` grid when `n` is given).
    pub fn check(&self, n: Option<u64>, tol: f64) -> Result<()> {
        if self.0.iter().any(|x| !x.is_finite() || x.as_f64() < -tol) {
            return Err(Error::Precondition("configuration has negative or non-finite entries".into()));
        }
        if (self.total().as_f64() - 1.0).abs() > tol {
            return Err(Error::Precondition(format!(
                "configuration sums to {}, expected 1",
                self.total()
            )));
        }
        if let Some(n) = n {
            if !on_grid(&self.0, n, tol) {
                return Err(Error::Precondition(format!("N*m is not integral for N={n}")));
            }
        }
        Ok(())
    }

    /// Integer arm counts `N m_s`; fails if `m` is not on the `1/N` grid.
    pub fn to_counts(&self, n: u64, tol: f64) -> Result<Vec<u64>> {
        to_counts(&self.0, n, tol)
    }

    /// Nearest point of the `1/N` grid (largest-remainder rounding).
    pub fn round_to_population(&self, n: u64) -> Self {
        let counts = largest_remainder(&self.0, n);
        Self::from_counts(&counts, n)
    }
}

/// Population-level decision: fraction of arms in each `(s, a)` pair.
#[derive(Clone, Debug, PartialEq)]
pub struct DecisionVector<S> {
    actions: usize,
    values: Vec<S>,
}

impl<S: Scalar> DecisionVector<S> {
    pub fn new(num_action_values: usize, values: Vec<S>) -> Self {
        assert!(num_action_values > 0 && values.len() % num_action_values == 0);
        Self {
            actions: num_action_values,
            values,
        }
    }

    pub fn zeros(num_states: usize, num_action_values: usize) -> Self {
        Self::new(num_action_values, vec![S::zero(); num_states * num_action_values])
    }

    /// All arms passive: `y_{s,0} = m_s`.
    pub fn passive(m: &ConfigVector<S>, num_action_values: usize) -> Self {
        let mut y = Self::zeros(m.len(), num_action_values);
        for (s, &ms) in m.0.iter().enumerate() {
            y.set(s, 0, ms);
        }
        y
    }

    /// Decision from integer counts per pair.
    pub fn from_counts(num_action_values: usize, counts: &[u64], n: u64) -> Self {
        let nn = S::lit(n as f64);
        Self::new(
            num_action_values,
            counts.iter().map(|&c| S::lit(c as f64) / nn).collect(),
        )
    }

    pub fn num_states(&self) -> usize {
        self.values.len() / self.actions
    }

    pub fn num_action_values(&self) -> usize {
        self.actions
    }

    #[inline]
    pub fn get(&self, s: usize, a: usize) -> S {
        self.values[s * self.actions + a]
    }

    #[inline]
    pub fn set(&mut self, s: usize, a: usize, v: S) {
        self.values[s * self.actions + a] = v;
    }

    pub fn as_slice(&self) -> &[S] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [S] {
        &mut self.values
    }

    /// Row sums `m_s = sum_a y_{s,a}`.
    pub fn marginal(&self) -> ConfigVector<S> {
        ConfigVector(
            self.values
                .chunks(self.actions)
                .map(|row| row.iter().copied().sum())
                .collect(),
        )
    }

    /// `R^T y` for the given epoch.
    pub fn reward(&self, epoch: &EpochParams<S>) -> S {
        dot(epoch.rewards(), &self.values)
    }

    /// `max |y - other|` over all entries.
    pub fn distance(&self, other: &Self) -> S {
        self.values
            .iter()
            .zip(&other.values)
            .fold(S::zero(), |acc, (a, b)| acc.max((*a - *b).abs()))
    }

    pub fn to_counts(&self, n: u64, tol: f64) -> Result<Vec<u64>> {
        to_counts(&self.values, n, tol)
    }

    pub fn to_nested(&self) -> Vec<Vec<S>> {
        self.values.chunks(self.actions).map(<[S]>::to_vec).collect()
    }
}

/// Population size for feasibility checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Population {
    /// Relaxed feasibility set `Y(m)`: no integrality.
    Relaxed,
    /// Finite-N set `Y^N(m)`: every `N y_{s,a}` integral.
    Finite(u64),
}

/// One invariant violation found by [`validate_model`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    NonFinite { epoch: usize, what: &'static str },
    NegativeTransition { epoch: usize, action: usize, state: usize, next: usize, value: f64 },
    RowNotStochastic { epoch: usize, action: usize, state: usize, sum: f64 },
    PassiveConsumes { epoch: usize, resource: usize, state: usize, value: f64 },
    NegativeConsumption { epoch: usize, resource: usize, state: usize, action: usize, value: f64 },
    NegativeBudget { epoch: usize, resource: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonFinite { epoch, what } => write!(f, "epoch {epoch}: non-finite entry in {what}"),
            Violation::NegativeTransition { epoch, action, state, next, value } => write!(
                f,
                "epoch {epoch}: P^{action}[{state}][{next}] = {value} is negative"
            ),
            Violation::RowNotStochastic { epoch, action, state, sum } => write!(
                f,
                "epoch {epoch}: row {state} of P^{action} sums to {sum}"
            ),
            Violation::PassiveConsumes { epoch, resource, state, value } => write!(
                f,
                "epoch {epoch}: passive action consumes D_{resource}({state},0) = {value}"
            ),
            Violation::NegativeConsumption { epoch, resource, state, action, value } => write!(
                f,
                "epoch {epoch}: D_{resource}({state},{action}) = {value} is negative"
            ),
            Violation::NegativeBudget { epoch, resource, value } => {
                write!(f, "epoch {epoch}: budget b_{resource} = {value} is negative")
            }
        }
    }
}

/// Every invariant violation of the model; empty iff the model is valid.
pub fn validate_model<S: Scalar>(model: &WcMdpModel<S>, tol: &Tolerances) -> Vec<Violation> {
    let mut out = Vec::new();
    let d = model.num_states();
    let actions = model.num_action_values();
    for (t, e) in model.stored_epochs().iter().enumerate() {
        if e.transitions.iter().any(|x| !x.is_finite()) {
            out.push(Violation::NonFinite { epoch: t, what: "P" });
        }
        if e.rewards.iter().any(|x| !x.is_finite()) {
            out.push(Violation::NonFinite { epoch: t, what: "R" });
        }
        if e.consumption.iter().chain(&e.budgets).any(|x| !x.is_finite()) {
            out.push(Violation::NonFinite { epoch: t, what: "D/b" });
        }
        for a in 0..actions {
            for s in 0..d {
                let row = e.transition_row(a, s);
                for (next, &p) in row.iter().enumerate() {
                    if p < S::zero() {
                        out.push(Violation::NegativeTransition {
                            epoch: t,
                            action: a,
                            state: s,
                            next,
                            value: p.as_f64(),
                        });
                    }
                }
                let sum: f64 = row.iter().map(|p| p.as_f64()).sum();
                if (sum - 1.0).abs() > tol.stochastic {
                    out.push(Violation::RowNotStochastic { epoch: t, action: a, state: s, sum });
                }
            }
        }
        for j in 0..e.resources {
            for s in 0..d {
                for a in 0..actions {
                    let v = e.consumption(j, s, a);
                    if a == 0 && v != S::zero() {
                        out.push(Violation::PassiveConsumes {
                            epoch: t,
                            resource: j,
                            state: s,
                            value: v.as_f64(),
                        });
                    } else if v < S::zero() {
                        out.push(Violation::NegativeConsumption {
                            epoch: t,
                            resource: j,
                            state: s,
                            action: a,
                            value: v.as_f64(),
                        });
                    }
                }
            }
            if e.budgets[j] < S::zero() {
                out.push(Violation::NegativeBudget {
                    epoch: t,
                    resource: j,
                    value: e.budgets[j].as_f64(),
                });
            }
        }
    }
    out
}

/// Membership of `y` in `Y(m)` (relaxed) or `Y^N(m)` (finite `N`) at epoch `t`.
pub fn is_feasible_decision<S: Scalar>(
    model: &WcMdpModel<S>,
    t: usize,
    m: &ConfigVector<S>,
    y: &DecisionVector<S>,
    population: Population,
    tol: &Tolerances,
) -> Result<bool> {
    let d = model.num_states();
    let actions = model.num_action_values();
    if t >= model.horizon() {
        return Err(Error::Dimension(format!("epoch {t} outside horizon {}", model.horizon())));
    }
    if m.len() != d || y.num_action_values() != actions || y.num_states() != d {
        return Err(Error::Dimension(format!(
            "expected m of length {d} and y of shape {d}x{actions}, got {} and {}x{}",
            m.len(),
            y.num_states(),
            y.num_action_values()
        )));
    }
    let eps = tol.feasibility;
    if y.as_slice().iter().any(|v| !v.is_finite() || v.as_f64() < -eps) {
        return Ok(false);
    }
    let marg = y.marginal();
    if marg.0.iter().zip(&m.0).any(|(a, b)| (a.as_f64() - b.as_f64()).abs() > eps) {
        return Ok(false);
    }
    let e = model.epoch(t);
    for j in 0..model.num_resources() {
        let used = dot(e.consumption_row(j), y.as_slice()).as_f64();
        if used > e.budget(j).as_f64() + eps {
            return Ok(false);
        }
    }
    if let Population::Finite(n) = population {
        if !on_grid(y.as_slice(), n, eps) {
            return Ok(false);
        }
    }
    Ok(true)
}

#[inline]
pub(crate) fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (x, y)| acc + *x * *y)
}

fn on_grid<S: Scalar>(v: &[S], n: u64, tol: f64) -> bool {
    let nn = n as f64;
    v.iter().all(|x| {
        let scaled = x.as_f64() * nn;
        (scaled - scaled.round()).abs() <= tol * nn.max(1.0)
    })
}

fn to_counts<S: Scalar>(v: &[S], n: u64, tol: f64) -> Result<Vec<u64>> {
    let nn = n as f64;
    v.iter()
        .map(|x| {
            let scaled = x.as_f64() * nn;
            let k = scaled.round();
            if (scaled - k).abs() > tol * nn.max(1.0) || k < 0.0 {
                Err(Error::Precondition(format!(
                    "{x} is not a nonnegative multiple of 1/{n}"
                )))
            } else {
                Ok(k as u64)
            }
        })
        .collect()
}

fn largest_remainder<S: Scalar>(v: &[S], n: u64) -> Vec<u64> {
    let total: f64 = v.iter().map(|x| x.as_f64().max(0.0)).sum();
    let scaled: Vec<f64> = v
        .iter()
        .map(|x| x.as_f64().max(0.0) / total * n as f64)
        .collect();
    let mut counts: Vec<u64> = scaled.iter().map(|x| x.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..v.len()).collect();
    // Stable sort keeps ties in index order.
    order.sort_by(|&a, &b| {
        let ra = scaled[a] - scaled[a].floor();
        let rb = scaled[b] - scaled[b].floor();
        rb.partial_cmp(&ra).unwrap_or(std::cmp::Ordering::Equal)
    });
    for &i in order.iter().take((n - assigned.min(n)) as usize) {
        counts[i] += 1;
    }
    counts
}
