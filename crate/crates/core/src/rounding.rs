//! Turning a fractional decision `y in Y(m)` into an integer-feasible one
//! `Y in Y^N(m)`: truncation, an exact floor/ceil search minimizing the
//! sup-distance, and unbiased dependent rounding for the two-action
//! single-budget family.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ConfigVector, DecisionVector, WcMdpModel};
use crate::scalar::Scalar;

/// Largest `d * A` accepted by [`min_distance_round`] before it falls back to
/// truncation.
pub const MIN_DISTANCE_GUARD: usize = 20;

/// Distance of `N y` to the nearest integer below which it counts as integral.
const SNAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RoundingMethod {
    #[default]
    Floor,
    MinDistance,
    Randomized,
}

impl RoundingMethod {
    pub fn name(self) -> &'static str {
        match self {
            RoundingMethod::Floor => "floor",
            RoundingMethod::MinDistance => "min-distance",
            RoundingMethod::Randomized => "randomized",
        }
    }
}

impl fmt::Display for RoundingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RoundingMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(RoundingMethod::Floor),
            "min-distance" | "min_distance" => Ok(RoundingMethod::MinDistance),
            "randomized" => Ok(RoundingMethod::Randomized),
            _ => Err(Error::Precondition(format!("unknown rounding mode `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoundingOutcome<S> {
    pub y: DecisionVector<S>,
    /// Arm counts `N Y_{s,a}`, in decision-vector order.
    pub counts: Vec<u64>,
    /// `|Y - y|_inf`.
    pub distance: S,
    pub method: RoundingMethod,
    /// Set when the search guard forced truncation instead.
    pub fell_back: bool,
}

fn snapped(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP * r.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// `N m_s` as integers, after checking that `y` decomposes `m`.
fn state_counts<S: Scalar>(y: &DecisionVector<S>, m: &ConfigVector<S>, n: u64) -> Result<Vec<u64>> {
    if y.num_states() != m.len() {
        return Err(Error::Dimension(format!(
            "decision has {} states, configuration {}",
            y.num_states(),
            m.len()
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("N must be positive".into()));
    }
    let counts = m.to_counts(n, 1e-7)?;
    let marg = y.marginal();
    for (s, (a, b)) in marg.as_slice().iter().zip(m.as_slice()).enumerate() {
        if (a.as_f64() - b.as_f64()).abs() > 1e-7 {
            return Err(Error::Precondition(format!("decision row {s} sums to {a}, expected {b}")));
        }
    }
    if y.as_slice().iter().any(|v| v.as_f64() < -1e-7) {
        return Err(Error::Precondition("decision has negative entries".into()));
    }
    Ok(counts)
}

fn outcome<S: Scalar>(
    y: &DecisionVector<S>,
    counts: Vec<u64>,
    n: u64,
    method: RoundingMethod,
    fell_back: bool,
) -> RoundingOutcome<S> {
    let rounded = DecisionVector::from_counts(y.num_action_values(), &counts, n);
    let distance = rounded.distance(y);
    RoundingOutcome {
        y: rounded,
        counts,
        distance,
        method,
        fell_back,
    }
}

/// Fills the passive entry of every state with the arms left over.
fn complete_passive(counts: &mut [u64], per_state: &[u64], na: usize) -> Result<()> {
    for (s, &total) in per_state.iter().enumerate() {
        let row = &mut counts[s * na..(s + 1) * na];
        let active: u64 = row[1..].iter().sum();
        if active > total {
            return Err(Error::Precondition(format!(
                "state {s}: {active} active arms exceed the {total} present"
            )));
        }
        row[0] = total - active;
    }
    Ok(())
}

/// `Y_{s,a} = floor(N y_{s,a}) / N` for `a != 0`, passive entries absorb the rest.
pub fn floor_round<S: Scalar>(y: &DecisionVector<S>, m: &ConfigVector<S>, n: u64) -> Result<RoundingOutcome<S>> {
    let per_state = state_counts(y, m, n)?;
    let na = y.num_action_values();
    let nn = n as f64;
    let mut counts = vec![0u64; y.as_slice().len()];
    for s in 0..y.num_states() {
        for a in 1..na {
            counts[s * na + a] = snapped(nn * y.get(s, a).as_f64()).floor().max(0.0) as u64;
        }
    }
    complete_passive(&mut counts, &per_state, na)?;
    Ok(outcome(y, counts, n, RoundingMethod::Floor, false))
}

/// Exact minimizer of `|Y - y|_inf` over per-entry floor/ceil choices for the
/// active actions, subject to the epoch-`t` budgets; ties resolve towards
/// floor in lexicographic `(s, a)` order.
pub fn min_distance_round<S: Scalar>(
    y: &DecisionVector<S>,
    m: &ConfigVector<S>,
    n: u64,
    model: &WcMdpModel<S>,
    t: usize,
) -> Result<RoundingOutcome<S>> {
    let per_state = state_counts(y, m, n)?;
    if model.num_states() * model.max_action() > MIN_DISTANCE_GUARD {
        let mut out = floor_round(y, m, n)?;
        out.method = RoundingMethod::MinDistance;
        out.fell_back = true;
        return Ok(out);
    }
    let na = y.num_action_values();
    let d = y.num_states();
    let nn = n as f64;
    let scaled: Vec<f64> = y.as_slice().iter().map(|v| snapped(nn * v.as_f64())).collect();
    let e = model.epoch(t);
    let nj = model.num_resources();
    let budget: Vec<f64> = (0..nj).map(|j| nn * e.budget(j).as_f64() + 1e-9 * nn.max(1.0)).collect();
    let cons: Vec<Vec<f64>> = (0..nj)
        .map(|j| e.consumption_row(j).iter().map(|c| c.as_f64()).collect())
        .collect();

    let vars: Vec<usize> = (0..d).flat_map(|s| (1..na).map(move |a| s * na + a)).collect();
    let lo: Vec<u64> = vars.iter().map(|&c| scaled[c].floor().max(0.0) as u64).collect();
    let hi: Vec<u64> = vars
        .iter()
        .enumerate()
        .map(|(i, &c)| (scaled[c].ceil().max(0.0) as u64).min(lo[i] + 1).min(per_state[c / na]))
        .collect();
    // Consumption of the all-floor choice from variable i on.
    let mut floor_tail = vec![vec![0.0f64; vars.len() + 1]; nj];
    for j in 0..nj {
        for i in (0..vars.len()).rev() {
            floor_tail[j][i] = floor_tail[j][i + 1] + cons[j][vars[i]] * lo[i] as f64;
        }
    }

    struct Search<'a> {
        vars: &'a [usize],
        lo: &'a [u64],
        hi: &'a [u64],
        scaled: &'a [f64],
        per_state: &'a [u64],
        cons: &'a [Vec<f64>],
        budget: &'a [f64],
        floor_tail: &'a [Vec<f64>],
        na: usize,
        choice: Vec<u64>,
        used: Vec<f64>,
        best: Option<(f64, Vec<u64>)>,
    }

    impl Search<'_> {
        fn go(&mut self, i: usize, worst: f64) {
            if let Some((b, _)) = &self.best {
                if worst >= *b {
                    return;
                }
            }
            if i == self.vars.len() {
                self.best = Some((worst, self.choice.clone()));
                return;
            }
            let c = self.vars[i];
            let (s, a) = (c / self.na, c % self.na);
            let candidates = if self.hi[i] > self.lo[i] { &[self.lo[i], self.hi[i]][..] } else { &[self.lo[i]][..] };
            for &k in candidates {
                let fits = (0..self.budget.len()).all(|j| {
                    self.used[j] + self.cons[j][c] * k as f64 + self.floor_tail[j][i + 1] <= self.budget[j]
                });
                if !fits {
                    continue;
                }
                self.choice[i] = k;
                let mut w = worst.max((k as f64 - self.scaled[c]).abs());
                if a == self.na - 1 {
                    let first = i + 1 - (self.na - 1);
                    let active: u64 = self.choice[first..=i].iter().sum();
                    if active > self.per_state[s] {
                        continue;
                    }
                    let passive = (self.per_state[s] - active) as f64;
                    w = w.max((passive - self.scaled[s * self.na]).abs());
                }
                for j in 0..self.budget.len() {
                    self.used[j] += self.cons[j][c] * k as f64;
                }
                self.go(i + 1, w);
                for j in 0..self.budget.len() {
                    self.used[j] -= self.cons[j][c] * k as f64;
                }
            }
        }
    }

    let mut search = Search {
        vars: &vars,
        lo: &lo,
        hi: &hi,
        scaled: &scaled,
        per_state: &per_state,
        cons: &cons,
        budget: &budget,
        floor_tail: &floor_tail,
        na,
        choice: vec![0; vars.len()],
        used: vec![0.0; nj],
        best: None,
    };
    search.go(0, 0.0);
    let (_, choice) = search
        .best
        .ok_or_else(|| Error::Precondition("no floor/ceil rounding satisfies the budgets".into()))?;
    let mut counts = vec![0u64; y.as_slice().len()];
    for (&c, k) in vars.iter().zip(choice) {
        counts[c] = k;
    }
    complete_passive(&mut counts, &per_state, na)?;
    Ok(outcome(y, counts, n, RoundingMethod::MinDistance, false))
}

/// Unbiased rounding for two actions and one budget with `D(s, 1) = 1`.
///
/// The active counts `x_s = N y_{s,1}` plus the slack `N b - sum_s x_s` are
/// rounded by pairwise pipage merges: two fractional coordinates move in
/// opposite directions until one of them is integral, with probabilities
/// that keep every expectation unchanged. The total `N b` is an integer, so
/// all coordinates end integral and within one of their start.
pub fn randomized_round<S: Scalar, R: Rng + ?Sized>(
    y: &DecisionVector<S>,
    m: &ConfigVector<S>,
    n: u64,
    model: &WcMdpModel<S>,
    t: usize,
    rng: &mut R,
) -> Result<RoundingOutcome<S>> {
    let per_state = state_counts(y, m, n)?;
    let e = model.epoch(t);
    if model.num_action_values() != 2 || model.num_resources() != 1 {
        return Err(Error::Unsupported("randomized rounding needs two actions and one budget".into()));
    }
    if (0..model.num_states()).any(|s| e.consumption(0, s, 1) != S::one()) {
        return Err(Error::Unsupported("randomized rounding needs D(s, 1) = 1".into()));
    }
    let nn = n as f64;
    let total = nn * e.budget(0).as_f64();
    if (total - total.round()).abs() > SNAP * total.abs().max(1.0) {
        return Err(Error::Unsupported(format!("randomized rounding needs N b integral, got {total}")));
    }
    let total = total.round();
    let d = y.num_states();
    let mut x: Vec<f64> = (0..d).map(|s| snapped(nn * y.get(s, 1).as_f64()).max(0.0)).collect();
    let active: f64 = x.iter().sum();
    if active > total + 1e-7 {
        return Err(Error::Precondition(format!("active mass {active} exceeds budget {total}")));
    }
    x.push(snapped((total - active).max(0.0)));

    let frac = |v: f64| v - v.floor() > SNAP && v.ceil() - v > SNAP;
    loop {
        let mut it = (0..x.len()).filter(|&i| frac(x[i]));
        let Some(i) = it.next() else { break };
        let Some(j) = it.next() else {
            x[i] = x[i].round();
            break;
        };
        let fi = x[i] - x[i].floor();
        let fj = x[j] - x[j].floor();
        let up = (1.0 - fi).min(fj);
        let down = fi.min(1.0 - fj);
        if rng.random::<f64>() * (up + down) < down {
            x[i] += up;
            x[j] -= up;
        } else {
            x[i] -= down;
            x[j] += down;
        }
        x[i] = snapped(x[i]);
        x[j] = snapped(x[j]);
    }

    let mut counts = vec![0u64; 2 * d];
    for s in 0..d {
        let k = x[s].round() as u64;
        assert!(k <= per_state[s], "ceiling exceeds the arms present in state {s}");
        counts[2 * s + 1] = k;
    }
    complete_passive(&mut counts, &per_state, 2)?;
    Ok(outcome(y, counts, n, RoundingMethod::Randomized, false))
}

/// Dispatches on the method.
pub fn round_decision<S: Scalar, R: Rng + ?Sized>(
    method: RoundingMethod,
    y: &DecisionVector<S>,
    m: &ConfigVector<S>,
    n: u64,
    model: &WcMdpModel<S>,
    t: usize,
    rng: &mut R,
) -> Result<RoundingOutcome<S>> {
    match method {
        RoundingMethod::Floor => floor_round(y, m, n),
        RoundingMethod::MinDistance => min_distance_round(y, m, n, model, t),
        RoundingMethod::Randomized => randomized_round(y, m, n, model, t, rng),
    }
}
