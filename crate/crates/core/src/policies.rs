//! Decision engines for the `N`-arm system: LP-update with full or selective
//! re-solves, the occupation-measure benchmark, and the all-passive baseline.
//!
//! Every policy maps `(t, M)` with `N M` integral to an integer-feasible
//! decision. When the relaxed LP has several optimal vertices the LP-update
//! policies follow the one the simplex returns, so the selective variant
//! matches the full variant only where that vertex is unique.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, RngCore};

use crate::degeneracy::ReducedLinearMap;
use crate::error::{Error, Result};
use crate::model::{is_feasible_decision, ConfigVector, DecisionVector, Population, WcMdpModel};
use crate::relaxation::{solve_relaxed, RelaxedSolution};
use crate::rounding::{round_decision, RoundingMethod};
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PolicyKind {
    LpUpdateFull,
    LpUpdateSelective,
    OccupationMeasure,
    Passive,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::LpUpdateFull,
        PolicyKind::LpUpdateSelective,
        PolicyKind::OccupationMeasure,
        PolicyKind::Passive,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::LpUpdateFull => "lp-update-full",
            PolicyKind::LpUpdateSelective => "lp-update-selective",
            PolicyKind::OccupationMeasure => "occupation",
            PolicyKind::Passive => "passive",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lp-update-full" => Ok(PolicyKind::LpUpdateFull),
            "lp-update-selective" => Ok(PolicyKind::LpUpdateSelective),
            "occupation" | "occupation-measure" => Ok(PolicyKind::OccupationMeasure),
            "passive" => Ok(PolicyKind::Passive),
            _ => Err(Error::Precondition(format!("unknown policy `{s}`"))),
        }
    }
}

/// An integer-feasible decision and its arm counts.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegerDecision<S> {
    pub y: DecisionVector<S>,
    /// `N Y_{s,a}` in decision-vector order.
    pub counts: Vec<u64>,
}

impl<S: Scalar> IntegerDecision<S> {
    fn from_counts(num_action_values: usize, counts: Vec<u64>, n: u64) -> Self {
        Self {
            y: DecisionVector::from_counts(num_action_values, &counts, n),
            counts,
        }
    }
}

pub trait Policy<S: Scalar> {
    fn kind(&self) -> PolicyKind;

    /// Prepares a new episode started from `m0` with `n` arms.
    fn reset(&mut self, model: &WcMdpModel<S>, m0: &ConfigVector<S>, n: u64) -> Result<()>;

    fn next_decision(
        &mut self,
        model: &WcMdpModel<S>,
        t: usize,
        m: &ConfigVector<S>,
        n: u64,
        rng: &mut dyn RngCore,
    ) -> Result<IntegerDecision<S>>;

    /// LP solves performed in the current episode.
    fn update_count(&self) -> usize;
}

/// A relaxed solution with lazily built per-epoch linear maps; shareable
/// across episodes.
#[derive(Debug)]
pub struct Trajectory<S> {
    pub solution: RelaxedSolution<S>,
    pub start: ConfigVector<S>,
    maps: Vec<OnceLock<Option<ReducedLinearMap<S>>>>,
}

impl<S: Scalar> Trajectory<S> {
    pub fn new(solution: RelaxedSolution<S>, start: ConfigVector<S>) -> Self {
        let maps = (0..solution.y_star.len()).map(|_| OnceLock::new()).collect();
        Self { solution, start, maps }
    }

    pub fn solve(model: &WcMdpModel<S>, m: &ConfigVector<S>, t: usize) -> Result<Self> {
        Ok(Self::new(solve_relaxed(model, m, t)?, m.clone()))
    }

    /// The linear decision map at `t`, or `None` when the rank test fails.
    pub fn map(&self, model: &WcMdpModel<S>, t: usize) -> Option<&ReducedLinearMap<S>> {
        self.maps[t - self.solution.t0]
            .get_or_init(|| ReducedLinearMap::new(model, &self.solution, t))
            .as_ref()
    }

    fn starts_at(&self, t: usize, m: &ConfigVector<S>) -> bool {
        self.solution.t0 == t && self.start == *m
    }
}

/// Policy construction parameters.
#[derive(Clone, Debug)]
pub struct PolicyConfig<S> {
    pub kind: PolicyKind,
    pub rounding: RoundingMethod,
    /// Visit arms in a random order in the occupation-measure policy.
    pub shuffle_arms: bool,
    /// Precomputed LP solution from the initial configuration at epoch 0.
    pub initial: Option<Arc<Trajectory<S>>>,
}

impl<S: Scalar> PolicyConfig<S> {
    pub fn new(kind: PolicyKind) -> Self {
        Self {
            kind,
            rounding: RoundingMethod::Floor,
            shuffle_arms: false,
            initial: None,
        }
    }

    pub fn with_rounding(mut self, rounding: RoundingMethod) -> Self {
        self.rounding = rounding;
        self
    }

    /// Solves the LP from `(m0, 0)` once so that every policy built from this
    /// configuration reuses it.
    pub fn with_initial_solution(mut self, model: &WcMdpModel<S>, m0: &ConfigVector<S>) -> Result<Self> {
        if self.kind != PolicyKind::Passive {
            self.initial = Some(Arc::new(Trajectory::solve(model, m0, 0)?));
        }
        Ok(self)
    }

    pub fn build(&self) -> Box<dyn Policy<S>> {
        match self.kind {
            PolicyKind::LpUpdateFull => Box::new(LpUpdateFull {
                rounding: self.rounding,
                initial: self.initial.clone(),
                updates: 0,
            }),
            PolicyKind::LpUpdateSelective => Box::new(LpUpdateSelective {
                rounding: self.rounding,
                initial: self.initial.clone(),
                current: None,
                update: true,
                updates: 0,
            }),
            PolicyKind::OccupationMeasure => Box::new(OccupationMeasure {
                shuffle: self.shuffle_arms,
                initial: self.initial.clone(),
                current: None,
                updates: 0,
            }),
            PolicyKind::Passive => Box::new(Passive),
        }
    }
}

fn solve_or_reuse<S: Scalar>(
    initial: &Option<Arc<Trajectory<S>>>,
    model: &WcMdpModel<S>,
    m: &ConfigVector<S>,
    t: usize,
) -> Result<Arc<Trajectory<S>>> {
    match initial {
        Some(tr) if tr.starts_at(t, m) => Ok(Arc::clone(tr)),
        _ => Ok(Arc::new(Trajectory::solve(model, m, t)?)),
    }
}

fn check_population<S: Scalar>(m: &ConfigVector<S>, n: u64) -> Result<()> {
    m.check(Some(n), 1e-7)
}

/// Re-solves the LP at every epoch and rounds its first decision.
pub struct LpUpdateFull<S> {
    rounding: RoundingMethod,
    initial: Option<Arc<Trajectory<S>>>,
    updates: usize,
}

impl<S: Scalar> Policy<S> for LpUpdateFull<S> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LpUpdateFull
    }

    fn reset(&mut self, _model: &WcMdpModel<S>, m0: &ConfigVector<S>, n: u64) -> Result<()> {
        check_population(m0, n)?;
        self.updates = 0;
        Ok(())
    }

    fn next_decision(
        &mut self,
        model: &WcMdpModel<S>,
        t: usize,
        m: &ConfigVector<S>,
        n: u64,
        rng: &mut dyn RngCore,
    ) -> Result<IntegerDecision<S>> {
        let tr = solve_or_reuse(&self.initial, model, m, t)?;
        self.updates += 1;
        let out = round_decision(self.rounding, tr.solution.y_at(t), m, n, model, t, rng)?;
        Ok(IntegerDecision { y: out.y, counts: out.counts })
    }

    fn update_count(&self) -> usize {
        self.updates
    }
}

/// Follows the cached LP trajectory through its local linear map and
/// re-solves only when the rank test or the feasibility test fails.
pub struct LpUpdateSelective<S> {
    rounding: RoundingMethod,
    initial: Option<Arc<Trajectory<S>>>,
    current: Option<Arc<Trajectory<S>>>,
    update: bool,
    updates: usize,
}

impl<S: Scalar> Policy<S> for LpUpdateSelective<S> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::LpUpdateSelective
    }

    fn reset(&mut self, _model: &WcMdpModel<S>, m0: &ConfigVector<S>, n: u64) -> Result<()> {
        check_population(m0, n)?;
        self.current = None;
        self.update = true;
        self.updates = 0;
        Ok(())
    }

    fn next_decision(
        &mut self,
        model: &WcMdpModel<S>,
        t: usize,
        m: &ConfigVector<S>,
        n: u64,
        rng: &mut dyn RngCore,
    ) -> Result<IntegerDecision<S>> {
        let mut y = None;
        if !self.update {
            self.update = true;
            if let Some(map) = self.current.as_ref().and_then(|tr| tr.map(model, t)) {
                let candidate = map.decision(m);
                let tol = Tolerances::for_scalar::<S>();
                if is_feasible_decision(model, t, m, &candidate, Population::Relaxed, &tol)? {
                    y = Some(candidate);
                    self.update = false;
                }
            }
        }
        if self.update {
            let tr = solve_or_reuse(&self.initial, model, m, t)?;
            self.updates += 1;
            y = Some(tr.solution.y_at(t).clone());
            self.current = Some(tr);
            self.update = false;
        }
        let y = y.expect("decision set by one of the branches");
        let out = round_decision(self.rounding, &y, m, n, model, t, rng)?;
        Ok(IntegerDecision { y: out.y, counts: out.counts })
    }

    fn update_count(&self) -> usize {
        self.updates
    }
}

/// Samples each arm's action from `y*(t) / m*(t)` of the initial LP and
/// accepts it while the budget lasts.
pub struct OccupationMeasure<S> {
    shuffle: bool,
    initial: Option<Arc<Trajectory<S>>>,
    current: Option<Arc<Trajectory<S>>>,
    updates: usize,
}

impl<S: Scalar> OccupationMeasure<S> {
    /// `mu_{s,.}(t)`; the passive action when `m*_s(t) = 0`.
    pub fn occupation(&self, t: usize, s: usize) -> Vec<f64> {
        let tr = self.current.as_ref().expect("reset before use");
        occupation_row(&tr.solution, t, s)
    }
}

fn occupation_row<S: Scalar>(sol: &RelaxedSolution<S>, t: usize, s: usize) -> Vec<f64> {
    let y = sol.y_at(t);
    let na = y.num_action_values();
    let row: Vec<f64> = (0..na).map(|a| y.get(s, a).as_f64().max(0.0)).collect();
    let total: f64 = row.iter().sum();
    if sol.m_at(t).as_slice()[s].as_f64() > 0.0 && total > 0.0 {
        row.into_iter().map(|v| v / total).collect()
    } else {
        let mut mu = vec![0.0; na];
        mu[0] = 1.0;
        mu
    }
}

impl<S: Scalar> Policy<S> for OccupationMeasure<S> {
    fn kind(&self) -> PolicyKind {
        PolicyKind::OccupationMeasure
    }

    fn reset(&mut self, model: &WcMdpModel<S>, m0: &ConfigVector<S>, n: u64) -> Result<()> {
        check_population(m0, n)?;
        self.current = Some(solve_or_reuse(&self.initial, model, m0, 0)?);
        self.updates = 1;
        Ok(())
    }

    fn next_decision(
        &mut self,
        model: &WcMdpModel<S>,
        t: usize,
        m: &ConfigVector<S>,
        n: u64,
        rng: &mut dyn RngCore,
    ) -> Result<IntegerDecision<S>> {
        let tr = self.current.as_ref().ok_or_else(|| Error::Precondition("policy not reset".into()))?;
        let per_state = m.to_counts(n, 1e-7)?;
        let na = model.num_action_values();
        let e = model.epoch(t);
        let nj = model.num_resources();
        let nn = n as f64;
        let mut budget: Vec<f64> = (0..nj).map(|j| nn * e.budget(j).as_f64()).collect();
        let slack: Vec<f64> = budget.iter().map(|b| 1e-9 * b.abs().max(1.0)).collect();
        let mu: Vec<Vec<f64>> = (0..model.num_states()).map(|s| occupation_row(&tr.solution, t, s)).collect();

        let mut arms: Vec<usize> = per_state
            .iter()
            .enumerate()
            .flat_map(|(s, &k)| std::iter::repeat(s).take(k as usize))
            .collect();
        if self.shuffle {
            arms.shuffle(rng);
        }
        let mut counts = vec![0u64; model.num_pairs()];
        for s in arms {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            let mut a = na - 1;
            for (k, &p) in mu[s].iter().enumerate() {
                acc += p;
                if u < acc {
                    a = k;
                    break;
                }
            }
            while mu[s][a] == 0.0 && a > 0 {
                a -= 1;
            }
            let fits = (0..nj).all(|j| budget[j] - e.consumption(j, s, a).as_f64() >= -slack[j]);
            let chosen = if a != 0 && fits {
                for (j, b) in budget.iter_mut().enumerate() {
                    *b -= e.consumption(j, s, a).as_f64();
                }
                a
            } else {
                0
            };
            counts[s * na + chosen] += 1;
        }
        Ok(IntegerDecision::from_counts(na, counts, n))
    }

    fn update_count(&self) -> usize {
        self.updates
    }
}

/// Every arm passive.
pub struct Passive;

impl<S: Scalar> Policy<S> for Passive {
    fn kind(&self) -> PolicyKind {
        PolicyKind::Passive
    }

    fn reset(&mut self, _model: &WcMdpModel<S>, m0: &ConfigVector<S>, n: u64) -> Result<()> {
        check_population(m0, n)
    }

    fn next_decision(
        &mut self,
        model: &WcMdpModel<S>,
        _t: usize,
        m: &ConfigVector<S>,
        n: u64,
        _rng: &mut dyn RngCore,
    ) -> Result<IntegerDecision<S>> {
        let na = model.num_action_values();
        let mut counts = vec![0u64; model.num_pairs()];
        for (s, k) in m.to_counts(n, 1e-7)?.into_iter().enumerate() {
            counts[s * na] = k;
        }
        Ok(IntegerDecision::from_counts(na, counts, n))
    }

    fn update_count(&self) -> usize {
        0
    }
}
