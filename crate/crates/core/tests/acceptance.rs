//! End-to-end acceptance suite. Runs without the libtest harness so that the
//! one-line verdict of every criterion is always printed; the process exits
//! nonzero when any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use wcmdp::casestudy::{build_counterexample, build_screening_model, exact_gap_oracle, OracleRounding, ScreeningParams};
use wcmdp::degeneracy::{is_nondegenerate, local_linear_decision, twoaction_nondegenerate, LocalLinearMap};
use wcmdp::model::{is_feasible_decision, ConfigVector, Population};
use wcmdp::numerics::{solve_lp, LpStatus};
use wcmdp::policies::{PolicyConfig, PolicyKind};
use wcmdp::relaxation::{phi, solve_relaxed, solve_relaxed_with, RelaxOptions};
use wcmdp::rounding::RoundingMethod;
use wcmdp::simulator::{concentration_check, evaluate, rate_study, run_episode, CampaignResult};
use wcmdp::Tolerances;

const SEED: u64 = 0x5eed_2024;
const Z99: f64 = 2.5758;
const Z95_ONE_SIDED: f64 = 1.6449;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn criterion(id: u32, title: &str, limit: Duration, body: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let in_time = elapsed < limit;
    let pass = v.pass && in_time;
    println!(
        "criterion {id:>2} {} | {title} | {} | {:.1}s of {}s{}",
        if pass { "PASS" } else { "FAIL" },
        v.detail,
        elapsed.as_secs_f64(),
        limit.as_secs(),
        if in_time { "" } else { " (over time limit)" }
    );
    pass
}

fn relaxed_values() -> Verdict {
    let mut worst = 0.0f64;
    for b in [0.3, 0.5] {
        let c = build_counterexample::<f64>(b).unwrap();
        let v = solve_relaxed(&c.model, &c.m0, 0).unwrap().value;
        worst = worst.max((v - 2.0 * b).abs());
    }
    verdict(worst <= 1e-9, format!("max |V_rel - 2b| = {worst:.2e}"))
}

fn degeneracy_verdicts() -> Verdict {
    let check = |b: f64| {
        let c = build_counterexample::<f64>(b).unwrap();
        let sol = solve_relaxed(&c.model, &c.m0, 0).unwrap();
        is_nondegenerate(&c.model, &sol).nondegenerate()
    };
    let (a, b) = (check(0.3), check(0.5));
    verdict(a && !b, format!("b=0.3 non-degenerate: {a}, b=0.5 non-degenerate: {b}"))
}

/// `sum_{k<5} C(10, k) (5 - k)` by integer arithmetic.
fn shortfall_numerator_n10() -> u64 {
    let mut binom = 1u64;
    let mut total = 0;
    for k in 0..5u64 {
        total += binom * (5 - k);
        binom = binom * (10 - k) / (k + 1);
    }
    total
}

fn exact_oracle_match() -> Verdict {
    let num = shortfall_numerator_n10();
    let exact = 1.0 - num as f64 / 10240.0;
    let lib = 1.0 - exact_gap_oracle(0.5, 10, OracleRounding::Floor).unwrap();
    if num != 630 || (exact - 0.9384765625).abs() > 1e-15 || (lib - exact).abs() > 1e-14 {
        return verdict(false, format!("oracle disagreement: numerator {num}, library {lib}"));
    }
    let c = build_counterexample::<f64>(0.5).unwrap();
    let r = evaluate(&c.model, &PolicyConfig::new(PolicyKind::LpUpdateFull), &c.m0, 10, 100_000, SEED).unwrap();
    let hw = r.half_width(Z99);
    verdict(
        (r.mean - exact).abs() <= hw,
        format!("mean {:.6} vs exact {exact:.10}, 99% half-width {hw:.6}", r.mean),
    )
}

fn sqrt_regime() -> Verdict {
    let c = build_counterexample::<f64>(0.5).unwrap();
    let study = rate_study(&c.model, &PolicyConfig::new(PolicyKind::LpUpdateFull), &c.m0, &[100, 400, 1600], 10_000, SEED).unwrap();
    let constant = counterexample_gap(0.5, 1600) * 40.0;
    let lib = exact_gap_oracle(0.5, 1600, OracleRounding::Floor).unwrap() * 40.0;
    let slope = study.slope.unwrap_or(f64::NAN);
    let scaled: Vec<f64> = study.rows.iter().map(|r| r.gap * (r.n as f64).sqrt()).collect();
    let within = scaled.iter().all(|s| (s / constant - 1.0).abs() <= 0.15);
    verdict(
        (-0.6..=-0.4).contains(&slope) && within && (lib / constant - 1.0).abs() < 1e-9,
        format!("slope {slope:.3}, gap*sqrt(N) {scaled:.4?} vs constant {constant:.5}"),
    )
}

fn inverse_n_regime() -> Verdict {
    let c = build_counterexample::<f64>(0.3).unwrap();
    let cfg = PolicyConfig::new(PolicyKind::LpUpdateFull).with_rounding(RoundingMethod::Floor);
    let ns = [33, 77, 231];
    let study = rate_study(&c.model, &cfg, &c.m0, &ns, 10_000, SEED).unwrap();
    let slope = study.slope.unwrap_or(f64::NAN);
    let floor_ok = study.rows.iter().all(|r| r.gap >= 0.1 / r.n as f64);
    let exact: Vec<(f64, f64)> = ns.iter().map(|&n| (n as f64, counterexample_gap(0.3, n))).collect();
    let exact_slope = wcmdp::simulator::log_log_slope(&exact).unwrap();
    let gaps: Vec<f64> = study.rows.iter().map(|r| r.gap).collect();
    verdict(
        floor_ok && (-1.15..=-0.85).contains(&slope),
        format!(
            "gaps {gaps:.5?}, all >= 0.1/N: {floor_ok}, fitted slope {slope:.3} (exact-oracle slope {exact_slope:.3})"
        ),
    )
}

fn exponential_regime() -> Verdict {
    let c = build_counterexample::<f64>(0.3).unwrap();
    let cfg = PolicyConfig::new(PolicyKind::LpUpdateFull).with_rounding(RoundingMethod::Randomized);
    let g50 = evaluate(&c.model, &cfg, &c.m0, 50, 20_000, SEED).unwrap().gap;
    let g100 = evaluate(&c.model, &cfg, &c.m0, 100, 20_000, SEED).unwrap().gap;
    verdict(
        g100 <= 1e-3 && g100 < g50 / 4.0,
        format!(
            "gap(50) {g50:.3e} (exact {:.3e}), gap(100) {g100:.3e} (exact {:.3e})",
            counterexample_gap(0.3, 50),
            counterexample_gap(0.3, 100)
        ),
    )
}

fn local_linearity() -> Verdict {
    let c = build_counterexample::<f64>(0.3).unwrap();
    let model = &c.model;
    let sol = solve_relaxed(model, &c.m0, 0).unwrap();
    let horizon = model.horizon();
    let maps: Vec<Option<LocalLinearMap<f64>>> = (0..horizon).map(|t| LocalLinearMap::new(model, &sol, t).ok()).collect();
    let starts: Vec<usize> = (0..horizon).filter(|&t| maps[t..].iter().all(Option::is_some)).collect();
    if starts.is_empty() {
        return verdict(false, "no epoch admits a local linear map");
    }
    let tol = Tolerances::default();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0f64;
    let mut tested = 0;
    while tested < 100 {
        let t = starts[tested % starts.len()];
        let anchor = sol.m_at(t);
        let support: Vec<usize> = (0..anchor.len()).filter(|&s| anchor.as_slice()[s] > 1e-12).collect();
        let mut dir: Vec<f64> = support.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
        let mean = dir.iter().sum::<f64>() / dir.len() as f64;
        dir.iter_mut().for_each(|x| *x -= mean);
        let scale = dir.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if scale == 0.0 {
            continue;
        }
        let mut eps = 0.25 / scale;
        let mut found = None;
        for _ in 0..40 {
            let mut m = anchor.clone();
            for (&s, dx) in support.iter().zip(&dir) {
                m.0[s] += eps * dx;
            }
            if let Some(value) = rollout(model, &maps, t, &m, &tol) {
                found = Some((m, value));
                break;
            }
            eps /= 2.0;
        }
        let Some((m, value)) = found else {
            return verdict(false, format!("no feasible perturbation found at epoch {t}"));
        };
        let fresh = solve_relaxed(model, &m, t).unwrap().value;
        worst = worst.max((value - fresh).abs());
        tested += 1;
    }
    verdict(worst <= 1e-7, format!("100 perturbations, max |map value - LP value| = {worst:.2e}"))
}

/// Value of following the local linear maps from `(t, m)`, or `None` when a
/// mapped decision leaves the feasible set.
fn rollout(
    model: &wcmdp::Model,
    maps: &[Option<LocalLinearMap<f64>>],
    t: usize,
    m: &ConfigVector<f64>,
    tol: &Tolerances,
) -> Option<f64> {
    if m.as_slice().iter().any(|&x| x < 0.0) {
        return None;
    }
    let mut m = m.clone();
    let mut value = 0.0;
    for (k, map) in maps.iter().enumerate().skip(t) {
        let y = local_linear_decision(map.as_ref()?, &m);
        if !is_feasible_decision(model, k, &m, &y, Population::Relaxed, tol).ok()? {
            return None;
        }
        value += y.reward(model.epoch(k));
        m = phi(model, k, &y).ok()?;
    }
    Some(value)
}

fn twoaction_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 8);
    let opts = RelaxOptions {
        budget_equality: true,
        ..RelaxOptions::default()
    };
    let (mut agree, mut degenerate) = (0, 0);
    let mut first_disagreement = None;
    for i in 0..100 {
        let grid = i % 2 == 0;
        let d = rng.random_range(2..=4);
        let h = rng.random_range(2..=4);
        let b = if grid { [0.25, 0.5][rng.random_range(0..2)] } else { rng.random_range(0.05..0.95) };
        let model = twoaction_model(&mut rng, d, h, b, grid);
        let m0 = if grid {
            ConfigVector::new(quarter_row(&mut rng, d))
        } else {
            simplex_point(&mut rng, d)
        };
        let sol = solve_relaxed_with(&model, &m0, 0, &opts).unwrap();
        let rank = is_nondegenerate(&model, &sol).nondegenerate();
        let support = twoaction_nondegenerate(&model, &sol).unwrap();
        degenerate += usize::from(!rank);
        if rank == support {
            agree += 1;
        } else if first_disagreement.is_none() {
            first_disagreement = Some(i);
        }
    }
    verdict(
        agree == 100,
        format!("{agree}/100 agree ({degenerate} degenerate by rank), first disagreement {first_disagreement:?}"),
    )
}

fn concentration() -> Verdict {
    let c = build_counterexample::<f64>(0.3).unwrap();
    let a = concentration_check(&c.model, &PolicyConfig::new(PolicyKind::LpUpdateFull), &c.m0, 100, 10_000, SEED, 0.1).unwrap();
    let s = build_screening_model::<f64>(&ScreeningParams::scarce(true)).unwrap();
    let b = concentration_check(&s.model, &PolicyConfig::new(PolicyKind::OccupationMeasure), &s.m0, 100, 10_000, SEED, 0.5).unwrap();
    let worst = |r: &wcmdp::simulator::ConcentrationReport| {
        r.epochs
            .iter()
            .map(|e| e.mean_norm / e.bound)
            .fold(0.0f64, f64::max)
    };
    let tails = a.epochs.iter().chain(&b.epochs).all(|e| e.exceed_freq <= e.tail_bound_weak.min(1.0));
    verdict(
        a.mean_within(3.0) && b.mean_within(3.0) && a.consistent && b.consistent,
        format!(
            "max mean/bound: counterexample {:.3}, screening {:.3}; tail frequencies within the weaker bound: {tails}",
            worst(&a),
            worst(&b)
        ),
    )
}

fn feasibility_fuzz() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 10);
    let tol = Tolerances::default();
    let mut failures = Vec::new();
    for i in 0..1000u64 {
        let n = rng.random_range(1..=50u64);
        let h = rng.random_range(1..=3);
        let d = rng.random_range(2..=4);
        let (model, rounding) = if rng.random_bool(0.3) {
            let b = rng.random_range(0..=n) as f64 / n as f64;
            let grid = rng.random_bool(0.5);
            let r = [RoundingMethod::Floor, RoundingMethod::MinDistance, RoundingMethod::Randomized][rng.random_range(0..3)];
            (twoaction_model(&mut rng, d, h, b, grid), r)
        } else {
            let na = rng.random_range(2..=3);
            let k = rng.random_range(1..=2);
            let r = [RoundingMethod::Floor, RoundingMethod::MinDistance][rng.random_range(0..2)];
            (random_model(&mut rng, d, na, k, h), r)
        };
        let kind = PolicyKind::ALL[rng.random_range(0..PolicyKind::ALL.len())];
        let m0 = simplex_point(&mut rng, d).round_to_population(n);
        let mut policy = PolicyConfig::new(kind).with_rounding(rounding).build();
        let ep = match run_episode(&model, policy.as_mut(), &m0, n, rng.random()) {
            Ok(ep) => ep,
            Err(e) => {
                failures.push(format!("episode {i} ({kind}, {rounding}): {e}"));
                continue;
            }
        };
        for t in 0..h {
            let ok = is_feasible_decision(&model, t, &ep.trajectory[t], &ep.decisions[t], Population::Finite(n), &tol).unwrap();
            let mass = ep.trajectory[t + 1].to_counts(n, 1e-7).map(|c| c.iter().sum::<u64>() == n).unwrap_or(false);
            if !(ok && mass) {
                failures.push(format!("episode {i} ({kind}, {rounding}) epoch {t}: feasible {ok}, mass {mass}"));
            }
        }
    }
    verdict(
        failures.is_empty(),
        match failures.first() {
            None => "1000 episodes, every decision feasible and mass conserved".to_string(),
            Some(f) => format!("{} failures, first: {f}", failures.len()),
        },
    )
}

fn standard_error(r: &CampaignResult) -> f64 {
    r.std_dev() / (r.replications as f64).sqrt()
}

fn case_study_ordering() -> Verdict {
    let s = build_screening_model::<f64>(&ScreeningParams::scarce(true)).unwrap();
    let sel = evaluate(&s.model, &PolicyConfig::new(PolicyKind::LpUpdateSelective), &s.m0, 20, 1600, SEED).unwrap();
    let occ = evaluate(&s.model, &PolicyConfig::new(PolicyKind::OccupationMeasure), &s.m0, 20, 1600, SEED).unwrap();
    let se = standard_error(&sel).hypot(standard_error(&occ));
    let ordering = sel.mean >= occ.mean - Z95_ONE_SIDED * se;
    let v = |fair| {
        let inst = build_screening_model::<f64>(&ScreeningParams::abundant(fair)).unwrap();
        solve_relaxed(&inst.model, &inst.m0, 0).unwrap().value
    };
    let (on, off) = (v(true), v(false));
    verdict(
        ordering && (on - off).abs() <= 1e-8,
        format!(
            "scarce N=20: selective {:.5} vs occupation {:.5} (z = {:.2}); abundant V_rel fair {on:.10} / unfair {off:.10}",
            sel.mean,
            occ.mean,
            (sel.mean - occ.mean) / se
        ),
    )
}

fn update_trend() -> Verdict {
    let s = build_screening_model::<f64>(&ScreeningParams::scarce(true)).unwrap();
    let cfg = PolicyConfig::new(PolicyKind::LpUpdateSelective);
    let small = evaluate(&s.model, &cfg, &s.m0, 20, 200, SEED).unwrap().updates_mean;
    let large = evaluate(&s.model, &cfg, &s.m0, 1000, 200, SEED).unwrap().updates_mean;
    verdict(large <= small, format!("mean updates N=20 {small:.3}, N=1000 {large:.3}"))
}

fn lp_kernel() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 13);
    let mut worst = 0.0f64;
    let mut infeasible = 0;
    for i in 0..200 {
        let lp = random_lp(&mut rng, 8, i % 5 != 0);
        let sol = solve_lp(&lp).unwrap();
        match vertex_enumeration(&lp) {
            Some(best) => {
                if sol.status != LpStatus::Optimal {
                    return verdict(false, format!("LP {i}: status {} but a vertex with value {best} exists", sol.status));
                }
                worst = worst.max((sol.value - best).abs());
            }
            None => {
                if sol.status != LpStatus::Infeasible {
                    return verdict(false, format!("LP {i}: status {} but no feasible vertex", sol.status));
                }
                infeasible += 1;
            }
        }
    }
    verdict(
        worst <= 1e-8,
        format!("200 LPs ({infeasible} infeasible), max |simplex - enumeration| = {worst:.2e}"),
    )
}

fn main() {
    let s = Duration::from_secs;
    let results = [
        criterion(1, "relaxed values", s(1), relaxed_values),
        criterion(2, "degeneracy verdicts", s(1), degeneracy_verdicts),
        criterion(3, "exact-oracle match", s(30), exact_oracle_match),
        criterion(4, "1/sqrt(N) regime", s(300), sqrt_regime),
        criterion(5, "1/N regime", s(300), inverse_n_regime),
        criterion(6, "exponential regime", s(120), exponential_regime),
        criterion(7, "local linearity", s(10), local_linearity),
        criterion(8, "non-degeneracy equivalence", s(60), twoaction_equivalence),
        criterion(9, "concentration", s(120), concentration),
        criterion(10, "feasibility fuzzing", s(120), feasibility_fuzz),
        criterion(11, "case study ordering", s(600), case_study_ordering),
        criterion(12, "update-count trend", s(600), update_trend),
        criterion(13, "LP kernel oracle", s(30), lp_kernel),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
