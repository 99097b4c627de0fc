//! Built-in instances: the two-state lower-bound counterexample with its
//! exact value oracle, and the two-group applicant screening model.

use num_rational::Ratio;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{ConfigVector, EpochParams, WcMdpModel};
use crate::scalar::Scalar;

/// Consumption assigned to forbidden actions; exceeds every budget.
pub const FORBIDDEN_COST: f64 = 1.0e6;

/// The two-state counterexample and what is known about it in closed form.
#[derive(Clone, Debug)]
pub struct Counterexample<S> {
    pub model: WcMdpModel<S>,
    pub m0: ConfigVector<S>,
    pub budget: f64,
    /// `2 b`.
    pub v_rel_exact: f64,
    pub degenerate_expected: bool,
}

/// `d = 2`, two actions, one resource, `T = 2`; every transition row is
/// `(1/2, 1/2)`, only activating state 0 pays, and activation costs one
/// unit of the budget `b`.
pub fn build_counterexample<S: Scalar>(b: f64) -> Result<Counterexample<S>> {
    if !(b > 0.0 && b <= 0.5) {
        return Err(Error::Precondition(format!("counterexample budget must lie in (0, 0.5], got {b}")));
    }
    let h = S::lit(0.5);
    let (z, o) = (S::zero(), S::one());
    let half = vec![vec![h, h], vec![h, h]];
    let epoch = EpochParams::from_nested(
        &[half.clone(), half],
        &[vec![z, o], vec![z, z]],
        &[vec![z, o, z, o]],
        &[S::lit(b)],
    )?;
    let model = WcMdpModel::stationary(2, epoch)?;
    Ok(Counterexample {
        model,
        m0: ConfigVector::new(vec![h, h]),
        budget: b,
        v_rel_exact: 2.0 * b,
        degenerate_expected: b == 0.5,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleRounding {
    Floor,
    Randomized,
}

/// `ln P(Bin(n, 1/2) = k)` for `k = 0..=n`.
pub fn binomial_half_log_pmf(n: u64) -> Vec<f64> {
    let mut ln_fact = Vec::with_capacity(n as usize + 1);
    ln_fact.push(0.0f64);
    for i in 1..=n {
        ln_fact.push(ln_fact[i as usize - 1] + (i as f64).ln());
    }
    let nn = n as usize;
    let ln_half = n as f64 * 0.5f64.ln();
    (0..=nn)
        .map(|k| ln_fact[nn] - ln_fact[k] - ln_fact[nn - k] + ln_half)
        .collect()
}

/// Optimality gap `2b - V` of the LP-update policy on the counterexample.
///
/// At epoch 0 the policy activates `floor(N b)` arms of state 0 (the grid
/// rounding of `m0` always leaves at least that many there). At epoch 1 state
/// 0 holds `X ~ Bin(N, 1/2)` arms and the policy activates `min(floor(N b), X)`
/// of them. Randomized rounding needs `N b` integral, in which case both
/// modes coincide.
pub fn exact_gap_oracle(b: f64, n: u64, rounding: OracleRounding) -> Result<f64> {
    if n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    let nb = n as f64 * b;
    let cap = (nb + 1e-9).floor();
    if rounding == OracleRounding::Randomized && (nb - nb.round()).abs() > 1e-9 {
        return Err(Error::Precondition(format!("randomized rounding needs N b integral, N={n}, b={b}")));
    }
    // 2b - cap/N - E[min(X, cap)]/N, written with the shortfall E[(cap - X)^+]
    // so that only the lower tail is summed.
    let shortfall: f64 = binomial_half_log_pmf(n)
        .iter()
        .enumerate()
        .take_while(|(k, _)| (*k as f64) < cap)
        .map(|(k, lp)| lp.exp() * (cap - k as f64))
        .sum();
    Ok(2.0 * (b - cap / n as f64) + shortfall / n as f64)
}

/// Parameters of the applicant screening model.
#[derive(Clone, Debug, PartialEq)]
pub struct ScreeningParams {
    /// Number of interview rounds; the admission round follows them.
    pub interview_rounds: usize,
    /// Most questions any applicant may be asked.
    pub question_cap: usize,
    /// Interview budget per arm and round.
    pub alpha: f64,
    /// Admitted fraction.
    pub beta: f64,
    /// Per-group interview budget, enforced when `fairness` is set.
    pub gamma: f64,
    pub fairness: bool,
    /// Beta prior `(a, b)` of each group.
    pub priors: [(u32, u32); 2],
    pub shares: [f64; 2],
}

impl Default for ScreeningParams {
    fn default() -> Self {
        Self::scarce(false)
    }
}

impl ScreeningParams {
    pub fn scarce(fairness: bool) -> Self {
        Self::with_budgets(0.15, 0.1, fairness)
    }

    pub fn abundant(fairness: bool) -> Self {
        Self::with_budgets(0.3, 0.2, fairness)
    }

    fn with_budgets(alpha: f64, gamma: f64, fairness: bool) -> Self {
        Self {
            interview_rounds: 10,
            question_cap: 10,
            alpha,
            beta: 0.1,
            gamma,
            fairness,
            priors: [(1, 1), (2, 2)],
            shares: [0.5, 0.5],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.interview_rounds == 0 || self.question_cap == 0 {
            return Err(Error::Precondition("need at least one interview round and one question".into()));
        }
        if self.priors.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(Error::Precondition("Beta priors need positive parameters".into()));
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0) {
            return Err(Error::Precondition("budgets must be nonnegative".into()));
        }
        if self.shares.iter().any(|&w| w < 0.0) || (self.shares.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Precondition("group shares must be a probability vector".into()));
        }
        if self.fairness && !(self.gamma < self.alpha && self.alpha < 2.0 * self.gamma) {
            return Err(Error::Precondition(format!(
                "fairness needs gamma < alpha < 2 gamma, got alpha={} gamma={}",
                self.alpha, self.gamma
            )));
        }
        Ok(())
    }

    /// States per group: pairs `(i, j)` of extra successes and failures with
    /// `i + j <= cap`.
    pub fn states_per_group(&self) -> usize {
        (self.question_cap + 1) * (self.question_cap + 2) / 2
    }
}

/// One screening state: group and posterior Beta parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ApplicantState {
    pub group: usize,
    pub a: u32,
    pub b: u32,
    /// Questions asked so far.
    pub asked: usize,
}

impl ApplicantState {
    pub fn label(&self) -> String {
        format!("g{}:({},{})", self.group, self.a, self.b)
    }

    pub fn posterior_mean(&self) -> f64 {
        self.a as f64 / (self.a + self.b) as f64
    }
}

#[derive(Clone, Debug)]
pub struct ScreeningInstance<S> {
    pub model: WcMdpModel<S>,
    pub m0: ConfigVector<S>,
    pub catalog: Vec<ApplicantState>,
    pub params: ScreeningParams,
}

type Q = Ratio<i64>;

/// Next-state distributions of one interview round from posterior `(a, b)`:
/// one question (two outcomes) and two questions (three outcomes).
fn posterior_updates(a: u32, b: u32) -> ([((u32, u32), Q); 2], [((u32, u32), Q); 3]) {
    let (ai, bi) = (a as i64, b as i64);
    let n = ai + bi;
    let one = [((a + 1, b), Q::new(ai, n)), ((a, b + 1), Q::new(bi, n))];
    let d2 = n * (n + 1);
    let two = [
        ((a + 2, b), Q::new(ai * (ai + 1), d2)),
        ((a + 1, b + 1), Q::new(2 * ai * bi, d2)),
        ((a, b + 2), Q::new(bi * (bi + 1), d2)),
    ];
    (one, two)
}

fn to_scalar<S: Scalar>(q: Q) -> S {
    S::lit(*q.numer() as f64 / *q.denom() as f64)
}

pub fn build_screening_model<S: Scalar>(p: &ScreeningParams) -> Result<ScreeningInstance<S>> {
    p.validate()?;
    let cap = p.question_cap;
    let mut catalog = Vec::new();
    for (g, &(a0, b0)) in p.priors.iter().enumerate() {
        for k in 0..=cap {
            for i in 0..=k {
                let j = k - i;
                catalog.push(ApplicantState {
                    group: g,
                    a: a0 + i as u32,
                    b: b0 + j as u32,
                    asked: k,
                });
            }
        }
    }
    let d = catalog.len();
    let index = |g: usize, a: u32, b: u32| -> usize {
        catalog
            .iter()
            .position(|st| st.group == g && st.a == a && st.b == b)
            .expect("successor within the question cap")
    };

    let zero = Q::from_integer(0);
    let mut p_exact = vec![vec![vec![zero; d]; d]; 3];
    let mut forbidden = vec![[false; 3]; d];
    for (s, st) in catalog.iter().enumerate() {
        p_exact[0][s][s] = Q::from_integer(1);
        let (one, two) = posterior_updates(st.a, st.b);
        if st.asked < cap {
            for ((a, b), q) in one {
                p_exact[1][s][index(st.group, a, b)] += q;
            }
        } else {
            p_exact[1][s][s] = Q::from_integer(1);
            forbidden[s][1] = true;
        }
        if st.asked + 2 <= cap {
            for ((a, b), q) in two {
                p_exact[2][s][index(st.group, a, b)] += q;
            }
        } else {
            p_exact[2][s][s] = Q::from_integer(1);
            forbidden[s][2] = true;
        }
    }
    for (a, mat) in p_exact.iter().enumerate() {
        for (s, row) in mat.iter().enumerate() {
            let total: Q = row.iter().copied().sum();
            if total != Q::from_integer(1) {
                return Err(Error::Precondition(format!("row {s} of P^{a} sums to {total}")));
            }
        }
    }
    let p_float: Vec<Vec<Vec<S>>> = p_exact
        .iter()
        .map(|m| m.iter().map(|r| r.iter().map(|&q| to_scalar(q)).collect()).collect())
        .collect();

    let na = 3;
    let sentinel = S::lit(FORBIDDEN_COST);
    let cost = [S::zero(), S::one(), S::lit(1.5)];
    let groups = if p.fairness { 2 } else { 0 };
    let mut interview_cons = vec![vec![S::zero(); d * na]; 1 + groups];
    for (s, st) in catalog.iter().enumerate() {
        for a in 1..na {
            let c = if forbidden[s][a] { sentinel } else { cost[a] };
            interview_cons[0][s * na + a] = c;
            if p.fairness && !forbidden[s][a] {
                interview_cons[1 + st.group][s * na + a] = cost[a];
            }
        }
    }
    let mut interview_budget = vec![S::lit(p.alpha)];
    interview_budget.extend(std::iter::repeat(S::lit(p.gamma)).take(groups));
    let interview = EpochParams::from_nested(
        &p_float,
        &vec![vec![S::zero(); na]; d],
        &interview_cons,
        &interview_budget,
    )?;

    let identity: Vec<Vec<S>> = (0..d)
        .map(|s| (0..d).map(|k| if k == s { S::one() } else { S::zero() }).collect())
        .collect();
    let mut admit_cons = vec![vec![S::zero(); d * na]; 1 + groups];
    let mut admit_reward = vec![vec![S::zero(); na]; d];
    for (s, st) in catalog.iter().enumerate() {
        admit_cons[0][s * na + 1] = S::one();
        admit_cons[0][s * na + 2] = sentinel;
        admit_reward[s][1] = to_scalar(Q::new(st.a as i64, (st.a + st.b) as i64));
    }
    let mut admit_budget = vec![S::lit(p.beta)];
    admit_budget.extend(std::iter::repeat(S::lit(p.gamma)).take(groups));
    let admission = EpochParams::from_nested(
        &[identity.clone(), identity.clone(), identity],
        &admit_reward,
        &admit_cons,
        &admit_budget,
    )?;

    let mut epochs = vec![interview; p.interview_rounds];
    epochs.push(admission);
    let labels = catalog.iter().map(ApplicantState::label).collect();
    let model = WcMdpModel::new(p.interview_rounds + 1, epochs)?.with_state_labels(labels)?;

    let mut m0 = vec![S::zero(); d];
    for (g, &(a0, b0)) in p.priors.iter().enumerate() {
        m0[index(g, a0, b0)] = S::lit(p.shares[g]);
    }
    Ok(ScreeningInstance {
        model,
        m0: ConfigVector::new(m0),
        catalog,
        params: p.clone(),
    })
}

/// Scenario preset file: `{"scenario":"scarce"|"abundant","fairness":bool}`.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub fairness: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Scarce,
    Abundant,
}

impl Scenario {
    pub fn params(self, fairness: bool) -> ScreeningParams {
        match self {
            Scenario::Scarce => ScreeningParams::scarce(fairness),
            Scenario::Abundant => ScreeningParams::abundant(fairness),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scenario::Scarce => "scarce",
            Scenario::Abundant => "abundant",
        }
    }
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    pub fn params(&self) -> ScreeningParams {
        self.scenario.params(self.fairness)
    }
}

/// A named built-in instance.
#[derive(Clone, Debug, PartialEq)]
pub enum Preset {
    Counterexample { b: f64 },
    Screening(ScreeningParams),
}

impl Preset {
    /// Parses `counterexample[:b=<x>]` and
    /// `screening[:<scarce|abundant>][,fairness|,nofairness][,rounds=<k>][,cap=<k>]`.
    pub fn parse(name: &str) -> Result<Self> {
        let (kind, rest) = name.split_once(':').unwrap_or((name, ""));
        let opts: Vec<&str> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
        let bad = || Error::Preset(name.to_string());
        match kind {
            "counterexample" => {
                let mut b = 0.5;
                for o in opts {
                    let v = o.strip_prefix("b=").ok_or_else(bad)?;
                    b = v.parse().map_err(|_| bad())?;
                }
                build_counterexample::<f64>(b).map_err(|_| bad())?;
                Ok(Preset::Counterexample { b })
            }
            "screening" => {
                let mut p = ScreeningParams::scarce(false);
                for o in opts {
                    match o {
                        "scarce" => p = ScreeningParams { fairness: p.fairness, ..ScreeningParams::scarce(false) },
                        "abundant" => p = ScreeningParams { fairness: p.fairness, ..ScreeningParams::abundant(false) },
                        "fairness" => p.fairness = true,
                        "nofairness" => p.fairness = false,
                        _ => {
                            let (k, v) = o.split_once('=').ok_or_else(bad)?;
                            let v: usize = v.parse().map_err(|_| bad())?;
                            match k {
                                "rounds" => p.interview_rounds = v,
                                "cap" => p.question_cap = v,
                                _ => return Err(bad()),
                            }
                        }
                    }
                }
                p.validate().map_err(|_| bad())?;
                Ok(Preset::Screening(p))
            }
            _ => Err(bad()),
        }
    }

    pub fn with_fairness(self, fairness: bool) -> Self {
        match self {
            Preset::Screening(p) => Preset::Screening(ScreeningParams { fairness, ..p }),
            other => other,
        }
    }

    /// Builds the model and its default initial configuration.
    pub fn instantiate<S: Scalar>(&self) -> Result<(WcMdpModel<S>, ConfigVector<S>)> {
        match self {
            Preset::Counterexample { b } => {
                let c = build_counterexample(*b)?;
                Ok((c.model, c.m0))
            }
            Preset::Screening(p) => {
                let inst = build_screening_model(p)?;
                Ok((inst.model, inst.m0))
            }
        }
    }
}
