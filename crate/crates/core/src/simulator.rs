//! Population-level Monte Carlo: multinomial transitions, episodes,
//! replication campaigns, rate studies and concentration diagnostics.
//!
//! Random streams are ChaCha8 generators seeded from
//! `derive_seed(master, replication, stream)`, with separate streams for the
//! policy and for the transitions, so results depend only on the master seed.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::model::{is_feasible_decision, ConfigVector, DecisionVector, Population, WcMdpModel};
use crate::policies::{Policy, PolicyConfig, PolicyKind};
use crate::relaxation::{apply_phi, solve_relaxed};
use crate::rounding::RoundingMethod;
use crate::scalar::Scalar;
use crate::tolerance::Tolerances;

pub const STREAM_POLICY: u64 = 0x706f_6c69_6379;
pub const STREAM_TRANSITION: u64 = 0x7472_616e_7369;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one replication stream: splitmix64 avalanche applied to the
/// master seed, then mixed with the replication index and the stream tag.
pub fn derive_seed(master: u64, replication: u64, stream: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ replication) ^ stream)
}

/// Multinomial counts of `n` draws over `probs` by sequential conditional
/// binomials; `probs` need only be nonnegative with positive sum.
pub fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R, out: &mut [u64]) {
    out.iter_mut().for_each(|c| *c = 0);
    let mut left = n;
    let mut mass: f64 = probs.iter().sum();
    let last = probs.iter().rposition(|&p| p > 0.0);
    for (k, &p) in probs.iter().enumerate() {
        if left == 0 {
            break;
        }
        if Some(k) == last {
            out[k] = left;
            break;
        }
        if p <= 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let draw = if q >= 1.0 {
            left
        } else {
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out[k] = draw;
        left -= draw;
        mass -= p;
    }
}

/// Next-epoch state counts given decision counts `N Y_{s,a}`.
pub fn step_counts<S: Scalar, R: Rng + ?Sized>(model: &WcMdpModel<S>, t: usize, counts: &[u64], rng: &mut R) -> Vec<u64> {
    let d = model.num_states();
    let na = model.num_action_values();
    let e = model.epoch(t);
    let mut next = vec![0u64; d];
    let mut draw = vec![0u64; d];
    let mut probs = vec![0.0f64; d];
    for s in 0..d {
        for a in 0..na {
            let k = counts[s * na + a];
            if k == 0 {
                continue;
            }
            for (p, &v) in probs.iter_mut().zip(e.transition_row(a, s)) {
                *p = v.as_f64().max(0.0);
            }
            multinomial(k, &probs, rng, &mut draw);
            for (x, dx) in next.iter_mut().zip(&draw) {
                *x += dx;
            }
        }
    }
    next
}

/// `M(t+1)` after applying the integer decision `Y` to `N` arms.
pub fn step_population<S: Scalar, R: Rng + ?Sized>(
    model: &WcMdpModel<S>,
    t: usize,
    y: &DecisionVector<S>,
    n: u64,
    rng: &mut R,
) -> Result<ConfigVector<S>> {
    let counts = y.to_counts(n, 1e-7)?;
    Ok(ConfigVector::from_counts(&step_counts(model, t, &counts, rng), n))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeResult<S> {
    pub reward_per_arm: f64,
    /// `M(0), ..., M(T)`.
    pub trajectory: Vec<ConfigVector<S>>,
    pub decisions: Vec<DecisionVector<S>>,
    pub update_count: usize,
    pub seed: u64,
}

/// Runs one episode; `m0` must lie on the `1/N` grid.
pub fn run_episode<S: Scalar>(
    model: &WcMdpModel<S>,
    policy: &mut dyn Policy<S>,
    m0: &ConfigVector<S>,
    n: u64,
    seed: u64,
) -> Result<EpisodeResult<S>> {
    policy.reset(model, m0, n)?;
    let mut policy_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, STREAM_POLICY));
    let mut transition_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0, STREAM_TRANSITION));
    let mut m = m0.clone();
    let mut trajectory = vec![m.clone()];
    let mut decisions = Vec::with_capacity(model.horizon());
    let mut reward = 0.0f64;
    for t in 0..model.horizon() {
        let dec = policy.next_decision(model, t, &m, n, &mut policy_rng)?;
        let e = model.epoch(t);
        reward += dec
            .counts
            .iter()
            .zip(e.rewards())
            .map(|(&k, r)| k as f64 * r.as_f64())
            .sum::<f64>();
        let next = step_counts(model, t, &dec.counts, &mut transition_rng);
        m = ConfigVector::from_counts(&next, n);
        trajectory.push(m.clone());
        decisions.push(dec.y);
    }
    Ok(EpisodeResult {
        reward_per_arm: reward / n as f64,
        trajectory,
        decisions,
        update_count: policy.update_count(),
        seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignResult {
    pub n: u64,
    pub policy: PolicyKind,
    pub rounding: RoundingMethod,
    pub replications: usize,
    pub mean: f64,
    pub ci95: f64,
    pub v_rel: f64,
    pub gap: f64,
    pub updates_mean: f64,
    pub values: Vec<f64>,
}

impl CampaignResult {
    /// Sample standard deviation of the per-replication values.
    pub fn std_dev(&self) -> f64 {
        sample_std(&self.values, self.mean)
    }

    /// Half-width of the two-sided normal interval at quantile `z`.
    pub fn half_width(&self, z: f64) -> f64 {
        z * self.std_dev() / (self.replications as f64).sqrt()
    }
}

pub const CSV_HEADER: &str = "N,policy,replications,mean,ci95,gap,updates_mean";

pub fn csv_row(r: &CampaignResult) -> String {
    format!(
        "{},{},{},{:.12},{:.12},{:.12},{:.6}",
        r.n, r.policy, r.replications, r.mean, r.ci95, r.gap, r.updates_mean
    )
}

/// Header plus one row per result, `\n`-terminated.
pub fn to_csv(rows: &[CampaignResult]) -> String {
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").expect("write to string");
    for r in rows {
        writeln!(out, "{}", csv_row(r)).expect("write to string");
    }
    out
}

/// Neumaier summation.
fn compensated_sum(values: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        comp += if sum.abs() >= v.abs() { (sum - t) + v } else { (v - t) + sum };
        sum = t;
    }
    sum + comp
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Monte Carlo estimate of the policy value with `n` arms. `m0` is moved to
/// the nearest point of the `1/N` grid; the gap is measured against the
/// relaxed value at `m0` itself.
pub fn evaluate<S: Scalar>(
    model: &WcMdpModel<S>,
    config: &PolicyConfig<S>,
    m0: &ConfigVector<S>,
    n: u64,
    replications: usize,
    master_seed: u64,
) -> Result<CampaignResult> {
    let v_rel = solve_relaxed(model, m0, 0)?.value.as_f64();
    evaluate_against(model, config, m0, n, replications, master_seed, v_rel)
}

/// [`evaluate`] with a precomputed relaxed value.
pub fn evaluate_against<S: Scalar>(
    model: &WcMdpModel<S>,
    config: &PolicyConfig<S>,
    m0: &ConfigVector<S>,
    n: u64,
    replications: usize,
    master_seed: u64,
    v_rel: f64,
) -> Result<CampaignResult> {
    if replications < 2 {
        return Err(Error::Precondition("a campaign needs at least two replications".into()));
    }
    let start = m0.round_to_population(n);
    let config = match (&config.initial, config.kind) {
        (None, kind) if kind != PolicyKind::Passive => config.clone().with_initial_solution(model, &start)?,
        _ => config.clone(),
    };
    let mut policy = config.build();
    let mut values = Vec::with_capacity(replications);
    let mut updates = 0usize;
    for rep in 0..replications {
        let seed = derive_seed(master_seed, rep as u64, 0);
        let ep = run_episode(model, policy.as_mut(), &start, n, seed)?;
        values.push(ep.reward_per_arm);
        updates += ep.update_count;
    }
    let mean = compensated_sum(&values) / replications as f64;
    let ci95 = 1.96 * sample_std(&values, mean) / (replications as f64).sqrt();
    Ok(CampaignResult {
        n,
        policy: config.kind,
        rounding: config.rounding,
        replications,
        mean,
        ci95,
        v_rel,
        gap: v_rel - mean,
        updates_mean: updates as f64 / replications as f64,
        values,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateStudy {
    pub rows: Vec<CampaignResult>,
    /// Least-squares slope of `ln gap` against `ln N` over positive gaps.
    pub slope: Option<f64>,
}

pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn rate_study<S: Scalar>(
    model: &WcMdpModel<S>,
    config: &PolicyConfig<S>,
    m0: &ConfigVector<S>,
    n_list: &[u64],
    replications: usize,
    master_seed: u64,
) -> Result<RateStudy> {
    if n_list.is_empty() {
        return Err(Error::Precondition("rate study needs at least one N".into()));
    }
    let v_rel = solve_relaxed(model, m0, 0)?.value.as_f64();
    let rows = n_list
        .iter()
        .map(|&n| evaluate_against(model, config, m0, n, replications, master_seed, v_rel))
        .collect::<Result<Vec<_>>>()?;
    let slope = log_log_slope(&rows.iter().map(|r| (r.n as f64, r.gap)).collect::<Vec<_>>());
    Ok(RateStudy { rows, slope })
}

/// Per-epoch statistics of `E(t) = M(t+1) - phi(Y(t))`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpochConcentration {
    pub t: usize,
    pub mean_norm: f64,
    pub std_err: f64,
    /// `sqrt(d / N)`.
    pub bound: f64,
    pub exceed_freq: f64,
    /// `2 d exp(-2 N eps^2 / d^2)`.
    pub tail_bound_strong: f64,
    /// `2 d exp(-N eps^2 / d^2)`, the conservative exponent that checks use.
    pub tail_bound_weak: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationReport {
    pub n: u64,
    pub epsilon: f64,
    pub replications: usize,
    pub epochs: Vec<EpochConcentration>,
    /// Every emitted decision was feasible and every step conserved mass.
    pub consistent: bool,
}

impl ConcentrationReport {
    /// Mean norm within `bound + k` standard errors at every epoch.
    pub fn mean_within(&self, k: f64) -> bool {
        self.epochs.iter().all(|e| e.mean_norm <= e.bound + k * e.std_err)
    }
}

pub fn concentration_check<S: Scalar>(
    model: &WcMdpModel<S>,
    config: &PolicyConfig<S>,
    m0: &ConfigVector<S>,
    n: u64,
    replications: usize,
    master_seed: u64,
    epsilon: f64,
) -> Result<ConcentrationReport> {
    if replications < 2 {
        return Err(Error::Precondition("need at least two replications".into()));
    }
    let start = m0.round_to_population(n);
    let config = match (&config.initial, config.kind) {
        (None, kind) if kind != PolicyKind::Passive => config.clone().with_initial_solution(model, &start)?,
        _ => config.clone(),
    };
    let mut policy = config.build();
    let horizon = model.horizon();
    let mut norms = vec![Vec::with_capacity(replications); horizon];
    let tol = Tolerances::for_scalar::<S>();
    let mut consistent = true;
    for rep in 0..replications {
        let ep = run_episode(model, policy.as_mut(), &start, n, derive_seed(master_seed, rep as u64, 0))?;
        for t in 0..horizon {
            let m = &ep.trajectory[t];
            let y = &ep.decisions[t];
            consistent &= is_feasible_decision(model, t, m, y, Population::Finite(n), &tol)?;
            consistent &= ep.trajectory[t + 1].to_counts(n, 1e-7)?.iter().sum::<u64>() == n;
            let phi = apply_phi(model, t, y);
            let norm: f64 = ep.trajectory[t + 1]
                .as_slice()
                .iter()
                .zip(phi.as_slice())
                .map(|(a, b)| (a.as_f64() - b.as_f64()).powi(2))
                .sum::<f64>()
                .sqrt();
            norms[t].push(norm);
        }
    }
    let d = model.num_states() as f64;
    let nn = n as f64;
    let epochs = norms
        .iter()
        .enumerate()
        .map(|(t, v)| {
            let mean = v.iter().sum::<f64>() / v.len() as f64;
            let std_err = sample_std(v, mean) / (v.len() as f64).sqrt();
            let exceed = v.iter().filter(|&&x| x >= epsilon).count() as f64 / v.len() as f64;
            EpochConcentration {
                t,
                mean_norm: mean,
                std_err,
                bound: (d / nn).sqrt(),
                exceed_freq: exceed,
                tail_bound_strong: 2.0 * d * (-2.0 * nn * epsilon * epsilon / (d * d)).exp(),
                tail_bound_weak: 2.0 * d * (-nn * epsilon * epsilon / (d * d)).exp(),
            }
        })
        .collect();
    Ok(ConcentrationReport {
        n,
        epsilon,
        replications,
        epochs,
        consistent,
    })
}
