//! Shared generators and independent oracles for the integration tests.
#![allow(dead_code)]

use rand::Rng;
use wcmdp::model::{ConfigVector, EpochParams, WcMdpModel};
use wcmdp::numerics::{Matrix, StandardLp};

pub fn stochastic_row<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut w: Vec<f64> = (0..d)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.05..1.0) })
        .collect();
    if w.iter().all(|&x| x == 0.0) {
        w[rng.random_range(0..d)] = 1.0;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

/// A row with entries in quarters; such data makes ties and degenerate
/// vertices common.
pub fn quarter_row<R: Rng>(rng: &mut R, d: usize) -> Vec<f64> {
    let mut row = vec![0.0; d];
    for _ in 0..4 {
        row[rng.random_range(0..d)] += 0.25;
    }
    row
}

pub fn simplex_point<R: Rng>(rng: &mut R, d: usize) -> ConfigVector<f64> {
    ConfigVector::new(stochastic_row(rng, d))
}

/// `d` states, `na` action values, `k` resources, horizon `h`; the passive
/// action consumes nothing so the all-passive decision is always feasible.
pub fn random_model<R: Rng>(rng: &mut R, d: usize, na: usize, k: usize, h: usize) -> WcMdpModel<f64> {
    random_model_scaled(rng, d, na, k, h, 1.0)
}

/// [`random_model`] with every budget multiplied by `scale`; the same
/// generator state yields the same model up to the budgets.
pub fn random_model_scaled<R: Rng>(rng: &mut R, d: usize, na: usize, k: usize, h: usize, scale: f64) -> WcMdpModel<f64> {
    let epoch = |rng: &mut R| {
        let p: Vec<Vec<Vec<f64>>> = (0..na).map(|_| (0..d).map(|_| stochastic_row(rng, d)).collect()).collect();
        let r: Vec<Vec<f64>> = (0..d).map(|_| (0..na).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let cons: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                (0..d * na)
                    .map(|c| if c % na == 0 { 0.0 } else { rng.random_range(0.0..1.0) })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..k).map(|_| scale * rng.random_range(0.05..0.6)).collect();
        EpochParams::from_nested(&p, &r, &cons, &b).unwrap()
    };
    if rng.random_bool(0.5) {
        let e = epoch(rng);
        WcMdpModel::stationary(h, e).unwrap()
    } else {
        let epochs = (0..h).map(|_| epoch(rng)).collect();
        WcMdpModel::new(h, epochs).unwrap()
    }
}

/// Two actions, one resource with `D(s, 1) = 1`, budget `b`. With `grid`
/// set, transitions and rewards are multiples of a quarter.
pub fn twoaction_model<R: Rng>(rng: &mut R, d: usize, h: usize, b: f64, grid: bool) -> WcMdpModel<f64> {
    let epochs = (0..h)
        .map(|_| {
            let p: Vec<Vec<Vec<f64>>> = (0..2)
                .map(|_| {
                    (0..d)
                        .map(|_| if grid { quarter_row(rng, d) } else { stochastic_row(rng, d) })
                        .collect()
                })
                .collect();
            let r: Vec<Vec<f64>> = (0..d)
                .map(|_| {
                    (0..2)
                        .map(|_| {
                            if grid {
                                rng.random_range(0..5) as f64 / 4.0
                            } else {
                                rng.random_range(0.0..1.0)
                            }
                        })
                        .collect()
                })
                .collect();
            let cons = vec![(0..2 * d).map(|c| (c % 2) as f64).collect::<Vec<_>>()];
            EpochParams::from_nested(&p, &r, &cons, &[b]).unwrap()
        })
        .collect();
    WcMdpModel::new(h, epochs).unwrap()
}

/// Optimal value of a bounded LP by enumerating every basic solution, or
/// `None` when no feasible vertex exists.
pub fn vertex_enumeration(lp: &StandardLp<f64>) -> Option<f64> {
    let n = lp.num_vars();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..lp.a_eq.rows() {
        rows.push((lp.a_eq.row(i).to_vec(), lp.b_eq[i]));
    }
    for i in 0..lp.a_ub.rows() {
        rows.push((lp.a_ub.row(i).to_vec(), lp.b_ub[i]));
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        rows.push((e, 0.0));
    }
    let feasible = |y: &[f64]| {
        let dot = |a: &[f64]| a.iter().zip(y).map(|(p, q)| p * q).sum::<f64>();
        y.iter().all(|&v| v >= -1e-9)
            && (0..lp.a_eq.rows()).all(|i| (dot(lp.a_eq.row(i)) - lp.b_eq[i]).abs() <= 1e-9)
            && (0..lp.a_ub.rows()).all(|i| dot(lp.a_ub.row(i)) <= lp.b_ub[i] + 1e-9)
    };
    let mut best: Option<f64> = None;
    let mut pick = Vec::with_capacity(n);
    choose(rows.len(), n, 0, &mut pick, &mut |idx| {
        let a: Vec<Vec<f64>> = idx.iter().map(|&i| rows[i].0.clone()).collect();
        let b: Vec<f64> = idx.iter().map(|&i| rows[i].1).collect();
        if let Some(y) = gauss_solve(a, b) {
            if feasible(&y) {
                let v: f64 = lp.c.iter().zip(&y).map(|(c, x)| c * x).sum();
                best = Some(best.map_or(v, |b| b.max(v)));
            }
        }
    });
    best
}

fn choose(n: usize, k: usize, from: usize, pick: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
    if pick.len() == k {
        f(pick);
        return;
    }
    for i in from..n {
        if n - i < k - pick.len() {
            break;
        }
        pick.push(i);
        choose(n, k, i + 1, pick, f);
        pick.pop();
    }
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut y = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * y[c]).sum();
        y[r] = (b[r] - s) / a[r][r];
    }
    Some(y)
}

/// A random LP with at most `max_vars` variables kept bounded by a
/// cardinality row. With `feasible` set, the right-hand sides come from a
/// random nonnegative point.
pub fn random_lp<R: Rng>(rng: &mut R, max_vars: usize, feasible: bool) -> StandardLp<f64> {
    let n = rng.random_range(1..=max_vars);
    let m_eq = rng.random_range(0..=2.min(n));
    let m_ub = rng.random_range(0..=3);
    let coef = |rng: &mut R| {
        if rng.random_bool(0.5) {
            rng.random_range(-4..=4) as f64 / 4.0
        } else {
            rng.random_range(-1.0..1.0)
        }
    };
    let y0: Vec<f64> = (0..n)
        .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..2.0) })
        .collect();
    let mut a_eq = Matrix::zeros(0, n);
    let mut b_eq = Vec::new();
    for _ in 0..m_eq {
        let row: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let rhs = if feasible {
            row.iter().zip(&y0).map(|(a, y)| a * y).sum()
        } else {
            rng.random_range(-2.0..2.0)
        };
        a_eq.push_row(&row);
        b_eq.push(rhs);
    }
    let mut a_ub = Matrix::zeros(0, n);
    let mut b_ub = Vec::new();
    for _ in 0..m_ub {
        let row: Vec<f64> = (0..n).map(|_| coef(rng)).collect();
        let at: f64 = row.iter().zip(&y0).map(|(a, y)| a * y).sum();
        let rhs = if feasible {
            at + if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..1.0) }
        } else {
            rng.random_range(-2.0..2.0)
        };
        a_ub.push_row(&row);
        b_ub.push(rhs);
    }
    a_ub.push_row(&vec![1.0; n]);
    b_ub.push(y0.iter().sum::<f64>() + rng.random_range(0.0..3.0));
    let c = (0..n).map(|_| coef(rng)).collect();
    StandardLp::new(c, a_eq, b_eq, a_ub, b_ub).unwrap()
}

/// `E[(cap - X)^+] / n` for `X ~ Bin(n, 1/2)`, normalising weights taken
/// relative to the central term so that nothing underflows.
pub fn half_binomial_shortfall(n: u64, cap: u64) -> f64 {
    let mid = n / 2;
    let mut w = vec![0.0f64; n as usize + 1];
    w[mid as usize] = 1.0;
    for k in (0..mid).rev() {
        // w_k / w_{k+1} = (k + 1) / (n - k)
        w[k as usize] = w[k as usize + 1] * (k + 1) as f64 / (n - k) as f64;
    }
    for k in mid + 1..=n {
        // w_k / w_{k-1} = (n - k + 1) / k
        w[k as usize] = w[k as usize - 1] * (n - k + 1) as f64 / k as f64;
    }
    let total: f64 = w.iter().sum();
    let short: f64 = (0..cap.min(n + 1)).map(|k| w[k as usize] * (cap - k) as f64).sum();
    short / total / n as f64
}

/// Expected gap of the LP-update policy on the two-state counterexample:
/// two epochs of budget left idle by integrality plus the second-epoch
/// shortfall of arms in the paying state.
pub fn counterexample_gap(b: f64, n: u64) -> f64 {
    let cap = (n as f64 * b + 1e-9).floor();
    2.0 * (b - cap / n as f64) + half_binomial_shortfall(n, cap as u64)
}
