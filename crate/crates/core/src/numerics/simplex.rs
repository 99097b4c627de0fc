//! Two-phase revised simplex with an explicit dense basis inverse.
//!
//! Problem: maximize `c^T y` subject to `A_eq y = b_eq`, `A_ub y <= b_ub`,
//! `y >= 0`. Inequality rows get a slack column each; columns are indexed
//! structural `0..n`, then slacks `n..n+m_ub`, then phase-one artificials.
//!
//! The basis inverse is kept as a dense row-major matrix and updated by
//! elementary row operations (product-form update applied in place). Columns
//! of the constraint matrix are stored sparsely for pricing. Entering
//! variables are chosen by Bland's rule (smallest eligible index) unless
//! [`PivotRule::Dantzig`] is requested, which falls back to Bland's rule on
//! degenerate stalls. Leaving-variable ties are always broken by smallest
//! column index, so output is deterministic.

use crate::error::{Error, Result};
use crate::numerics::linalg::{invert, Matrix};
use crate::scalar::{max_abs, Scalar};
use crate::tolerance::Tolerances;

/// LP in the canonical form used by the crate (maximization, `y >= 0`).
#[derive(Clone, Debug)]
pub struct StandardLp<S> {
    pub c: Vec<S>,
    pub a_eq: Matrix<S>,
    pub b_eq: Vec<S>,
    pub a_ub: Matrix<S>,
    pub b_ub: Vec<S>,
}

impl<S: Scalar> StandardLp<S> {
    pub fn new(c: Vec<S>, a_eq: Matrix<S>, b_eq: Vec<S>, a_ub: Matrix<S>, b_ub: Vec<S>) -> Result<Self> {
        let lp = Self { c, a_eq, b_eq, a_ub, b_ub };
        lp.check()?;
        Ok(lp)
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn check(&self) -> Result<()> {
        let n = self.c.len();
        if self.a_eq.cols() != n || self.a_ub.cols() != n {
            return Err(Error::Dimension(format!(
                "constraint matrices have {} / {} columns for {n} variables",
                self.a_eq.cols(),
                self.a_ub.cols()
            )));
        }
        if self.a_eq.rows() != self.b_eq.len() || self.a_ub.rows() != self.b_ub.len() {
            return Err(Error::Dimension("right-hand side length mismatch".into()));
        }
        let finite = |v: &[S]| v.iter().all(|x| x.is_finite());
        let rows_finite = |m: &Matrix<S>| (0..m.rows()).all(|i| finite(m.row(i)));
        if !(finite(&self.c)
            && finite(&self.b_eq)
            && finite(&self.b_ub)
            && rows_finite(&self.a_eq)
            && rows_finite(&self.a_ub))
        {
            return Err(Error::Precondition("LP data contains non-finite entries".into()));
        }
        Ok(())
    }

    /// Largest constraint violation of `y` (equality residual, inequality
    /// excess, negativity), each measured against its own tolerance scale.
    pub fn max_violation(&self, y: &[S]) -> (f64, f64, f64) {
        let eq = self
            .a_eq
            .mul_vec(y)
            .iter()
            .zip(&self.b_eq)
            .fold(0.0f64, |acc, (a, b)| acc.max((*a - *b).abs().as_f64()));
        let ub = self
            .a_ub
            .mul_vec(y)
            .iter()
            .zip(&self.b_ub)
            .fold(0.0f64, |acc, (a, b)| acc.max((*a - *b).as_f64()));
        let neg = y.iter().fold(0.0f64, |acc, x| acc.max(-x.as_f64()));
        (eq, ub, neg)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl std::fmt::Display for LpStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        })
    }
}

#[derive(Clone, Debug)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub y: Vec<S>,
    pub value: S,
    /// Basic columns: structural indices `< n`, slack of inequality row `i`
    /// as `n + i`. Artificials left on redundant rows are omitted.
    pub basis: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest-index entering variable; never cycles.
    #[default]
    Bland,
    /// Largest reduced cost, switching to Bland's rule after a run of
    /// degenerate pivots until progress resumes.
    Dantzig,
}

#[derive(Clone, Debug, Default)]
pub struct SimplexOptions {
    pub rule: PivotRule,
    /// Starting basis (one column per row, in row order, using the column
    /// numbering of [`LpSolution::basis`]). Used only if it is nonsingular
    /// and primal feasible; otherwise phase one runs from artificials.
    pub crash_basis: Option<Vec<usize>>,
    pub tolerances: Option<Tolerances>,
    pub max_iterations: Option<usize>,
}

pub fn solve_lp<S: Scalar>(lp: &StandardLp<S>) -> Result<LpSolution<S>> {
    solve_lp_with(lp, &SimplexOptions::default())
}

pub fn solve_lp_with<S: Scalar>(lp: &StandardLp<S>, opts: &SimplexOptions) -> Result<LpSolution<S>> {
    lp.check()?;
    let tol = opts.tolerances.unwrap_or_else(Tolerances::for_scalar::<S>);
    let mut sx = Simplex::new(lp, opts, tol);
    sx.run(lp)
}

const NONE: usize = usize::MAX;
const DEGENERATE_STALL: usize = 50;
const RECOMPUTE_EVERY: usize = 100;

struct Simplex<S> {
    m: usize,
    n: usize,
    n_slack: usize,
    cols: Vec<Vec<(usize, S)>>,
    rhs: Vec<S>,
    cost: Vec<S>,
    is_artificial: Vec<bool>,
    basis: Vec<usize>,
    position: Vec<usize>,
    binv: Vec<S>,
    x: Vec<S>,
    duals: Vec<S>,
    rule: PivotRule,
    tol: Tolerances,
    opt_tol: S,
    iterations: usize,
    max_iterations: usize,
    refactored: bool,
}

enum Phase {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Simplex<S> {
    fn new(lp: &StandardLp<S>, opts: &SimplexOptions, tol: Tolerances) -> Self {
        let n = lp.num_vars();
        let me = lp.a_eq.rows();
        let mu = lp.a_ub.rows();
        let m = me + mu;
        let mut cols: Vec<Vec<(usize, S)>> = vec![Vec::new(); n + mu];
        for i in 0..me {
            for (j, &v) in lp.a_eq.row(i).iter().enumerate() {
                if v != S::zero() {
                    cols[j].push((i, v));
                }
            }
        }
        for i in 0..mu {
            for (j, &v) in lp.a_ub.row(i).iter().enumerate() {
                if v != S::zero() {
                    cols[j].push((me + i, v));
                }
            }
            cols[n + i].push((me + i, S::one()));
        }
        let mut rhs = lp.b_eq.clone();
        rhs.extend_from_slice(&lp.b_ub);
        let cmax = max_abs(&lp.c).max(S::one());
        let ncols = cols.len();
        Self {
            m,
            n,
            n_slack: mu,
            cols,
            rhs,
            cost: vec![S::zero(); ncols],
            is_artificial: vec![false; ncols],
            basis: Vec::new(),
            position: vec![NONE; ncols],
            binv: Vec::new(),
            x: Vec::new(),
            duals: vec![S::zero(); m],
            rule: opts.rule,
            opt_tol: S::lit(tol.feasibility) * cmax,
            tol,
            iterations: 0,
            max_iterations: opts.max_iterations.unwrap_or(200 * (m + n + mu) + 10_000),
            refactored: false,
        }
        .with_crash(opts.crash_basis.as_deref())
    }

    /// Installs the crash basis when valid; leaves `basis` empty otherwise.
    fn with_crash(mut self, crash: Option<&[usize]>) -> Self {
        let Some(crash) = crash else { return self };
        if crash.len() != self.m || crash.iter().any(|&c| c >= self.n + self.n_slack) {
            return self;
        }
        let mut seen = vec![false; self.cols.len()];
        for &c in crash {
            if std::mem::replace(&mut seen[c], true) {
                return self;
            }
        }
        let binv = match triangular_inverse(&self.cols, crash, self.m, S::lit(self.tol.pivot)) {
            Some(b) => b,
            None => match self.dense_inverse(crash) {
                Some(b) => b,
                None => return self,
            },
        };
        let x = mat_vec(&binv, self.m, &self.rhs);
        let ftol = S::lit(self.tol.feasibility) * max_abs(&self.rhs).max(S::one());
        if x.iter().any(|&v| v < -ftol) {
            return self;
        }
        self.binv = binv;
        self.x = x.into_iter().map(|v| v.max(S::zero())).collect();
        self.set_basis(crash.to_vec());
        self
    }

    fn set_basis(&mut self, basis: Vec<usize>) {
        self.position.iter_mut().for_each(|p| *p = NONE);
        for (i, &c) in basis.iter().enumerate() {
            self.position[c] = i;
        }
        self.basis = basis;
    }

    fn dense_inverse(&self, basis: &[usize]) -> Option<Vec<S>> {
        let mut b = Matrix::zeros(self.m, self.m);
        for (pos, &c) in basis.iter().enumerate() {
            for &(r, v) in &self.cols[c] {
                b[(r, pos)] = v;
            }
        }
        let inv = invert(&b, S::lit(self.tol.pivot))?;
        Some((0..self.m).flat_map(|i| inv.row(i).to_vec()).collect())
    }

    fn run(&mut self, lp: &StandardLp<S>) -> Result<LpSolution<S>> {
        if self.basis.is_empty() && self.m > 0 {
            match self.phase_one()? {
                Some(()) => {}
                None => return Ok(self.finish(lp, LpStatus::Infeasible)),
            }
        } else if self.m == 0 {
            self.binv.clear();
            self.x.clear();
        }
        // Phase two.
        for (j, c) in self.cost.iter_mut().enumerate() {
            *c = if j < self.n { lp.c[j] } else { S::zero() };
        }
        loop {
            match self.iterate()? {
                Phase::Unbounded => return Ok(self.finish(lp, LpStatus::Unbounded)),
                Phase::Optimal => {}
            }
            let y = self.primal();
            let (eq, ub, neg) = lp.max_violation(&y);
            let scale = |b: &[S]| 1.0 + max_abs(b).as_f64();
            let ok = eq <= self.tol.lp * scale(&lp.b_eq)
                && ub <= self.tol.lp * scale(&lp.b_ub)
                && neg <= self.tol.lp * 1e-2;
            if ok {
                return Ok(self.finish(lp, LpStatus::Optimal));
            }
            if self.refactored {
                return Err(Error::SolverFailure(format!(
                    "residuals after refactorization: equality {eq:.3e}, inequality {ub:.3e}, negativity {neg:.3e} ({} rows, {} columns, {} iterations)",
                    self.m,
                    self.n,
                    self.iterations
                )));
            }
            self.refactor()?;
        }
    }

    /// Returns `None` when the LP is infeasible.
    fn phase_one(&mut self) -> Result<Option<()>> {
        let me = self.m - self.n_slack;
        let mut basis = Vec::with_capacity(self.m);
        for i in 0..self.m {
            let negative = self.rhs[i] < S::zero();
            if negative {
                self.rhs[i] = -self.rhs[i];
                for col in self.cols.iter_mut() {
                    for e in col.iter_mut().filter(|e| e.0 == i) {
                        e.1 = -e.1;
                    }
                }
            }
            if i >= me && !negative {
                basis.push(self.n + (i - me));
            } else {
                let c = self.cols.len();
                self.cols.push(vec![(i, S::one())]);
                self.is_artificial.push(true);
                self.position.push(NONE);
                basis.push(c);
            }
        }
        self.cost = self
            .is_artificial
            .iter()
            .map(|&a| if a { -S::one() } else { S::zero() })
            .collect();
        let mut binv = vec![S::zero(); self.m * self.m];
        for i in 0..self.m {
            binv[i * self.m + i] = S::one();
        }
        self.binv = binv;
        self.x = self.rhs.clone();
        self.set_basis(basis);

        match self.iterate()? {
            Phase::Optimal => {}
            Phase::Unbounded => {
                return Err(Error::SolverFailure("phase one reported unbounded".into()))
            }
        }
        let infeas: S = self
            .basis
            .iter()
            .zip(&self.x)
            .filter(|(c, _)| self.is_artificial[**c])
            .map(|(_, v)| v.max(S::zero()))
            .sum();
        if infeas.as_f64() > self.tol.feasibility * (1.0 + max_abs(&self.rhs).as_f64()) * 10.0 {
            return Ok(None);
        }
        self.drive_out_artificials();
        Ok(Some(()))
    }

    fn drive_out_artificials(&mut self) {
        for r in 0..self.m {
            if !self.is_artificial[self.basis[r]] {
                continue;
            }
            self.x[r] = S::zero();
            let row = &self.binv[r * self.m..(r + 1) * self.m];
            let entering = (0..self.cols.len()).find(|&j| {
                !self.is_artificial[j]
                    && self.position[j] == NONE
                    && self.cols[j]
                        .iter()
                        .fold(S::zero(), |acc, &(k, v)| acc + row[k] * v)
                        .abs()
                        > S::lit(1e-7)
            });
            if let Some(q) = entering {
                let d = self.ftran(q);
                self.pivot(r, q, &d, S::zero());
            }
        }
    }

    fn refactor(&mut self) -> Result<()> {
        self.refactored = true;
        let basis = self.basis.clone();
        let binv = self
            .dense_inverse(&basis)
            .ok_or_else(|| Error::SolverFailure("basis became singular".into()))?;
        self.binv = binv;
        self.x = mat_vec(&self.binv, self.m, &self.rhs)
            .into_iter()
            .map(|v| v.max(S::zero()))
            .collect();
        Ok(())
    }

    fn compute_duals(&mut self) {
        let m = self.m;
        let mut duals = vec![S::zero(); m];
        for (i, &c) in self.basis.iter().enumerate() {
            let cb = self.cost[c];
            if cb == S::zero() {
                continue;
            }
            for (dk, &b) in duals.iter_mut().zip(&self.binv[i * m..(i + 1) * m]) {
                *dk = *dk + cb * b;
            }
        }
        self.duals = duals;
    }

    #[inline]
    fn reduced_cost(&self, j: usize) -> S {
        self.cols[j]
            .iter()
            .fold(self.cost[j], |acc, &(r, v)| acc - self.duals[r] * v)
    }

    fn ftran(&self, j: usize) -> Vec<S> {
        let m = self.m;
        let mut d = vec![S::zero(); m];
        for &(r, v) in &self.cols[j] {
            for (i, di) in d.iter_mut().enumerate() {
                let b = self.binv[i * m + r];
                if b != S::zero() {
                    *di = *di + b * v;
                }
            }
        }
        d
    }

    fn price(&self, bland: bool) -> Option<(usize, S)> {
        let eligible = |j: usize| self.position[j] == NONE && !self.is_artificial[j];
        if bland {
            (0..self.cols.len())
                .filter(|&j| eligible(j))
                .map(|j| (j, self.reduced_cost(j)))
                .find(|&(_, rc)| rc > self.opt_tol)
        } else {
            (0..self.cols.len())
                .filter(|&j| eligible(j))
                .map(|j| (j, self.reduced_cost(j)))
                .filter(|&(_, rc)| rc > self.opt_tol)
                .fold(None, |best: Option<(usize, S)>, cand| match best {
                    Some(b) if b.1 >= cand.1 => Some(b),
                    _ => Some(cand),
                })
        }
    }

    fn ratio_test(&self, d: &[S]) -> Option<(usize, S)> {
        for threshold in [S::lit(1e-9), S::lit(self.tol.pivot)] {
            let mut best: Option<(usize, S)> = None;
            for (i, &di) in d.iter().enumerate() {
                if di <= threshold {
                    continue;
                }
                let theta = self.x[i].max(S::zero()) / di;
                best = match best {
                    None => Some((i, theta)),
                    Some((bi, bt)) => {
                        let tie = (theta - bt).abs() <= S::lit(1e-12) * bt.max(S::one());
                        if theta < bt && !tie {
                            Some((i, theta))
                        } else if tie && self.basis[i] < self.basis[bi] {
                            Some((i, theta.min(bt)))
                        } else {
                            Some((bi, bt))
                        }
                    }
                };
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    fn pivot(&mut self, r: usize, q: usize, d: &[S], theta: S) {
        let m = self.m;
        let dr = d[r];
        for (i, &di) in d.iter().enumerate() {
            if i != r && di != S::zero() {
                let v = self.x[i] - theta * di;
                self.x[i] = if v < S::zero() && v > -S::lit(self.tol.feasibility) { S::zero() } else { v };
            }
        }
        self.x[r] = theta;
        let (before, rest) = self.binv.split_at_mut(r * m);
        let (pivot_row, after) = rest.split_at_mut(m);
        for v in pivot_row.iter_mut() {
            *v = *v / dr;
        }
        for (i, &di) in d.iter().enumerate() {
            if i == r || di == S::zero() {
                continue;
            }
            let row = if i < r {
                &mut before[i * m..(i + 1) * m]
            } else {
                &mut after[(i - r - 1) * m..(i - r) * m]
            };
            for (a, &p) in row.iter_mut().zip(pivot_row.iter()) {
                if p != S::zero() {
                    *a = *a - di * p;
                }
            }
        }
        let leaving = self.basis[r];
        self.position[leaving] = NONE;
        self.position[q] = r;
        self.basis[r] = q;
    }

    fn iterate(&mut self) -> Result<Phase> {
        self.compute_duals();
        let mut degenerate_run = 0usize;
        let mut since_recompute = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(Error::SolverFailure(format!(
                    "iteration limit {} reached ({} rows, {} columns)",
                    self.max_iterations, self.m, self.n
                )));
            }
            let bland = self.rule == PivotRule::Bland || degenerate_run >= DEGENERATE_STALL;
            let Some((q, rc)) = self.price(bland) else {
                return Ok(Phase::Optimal);
            };
            let d = self.ftran(q);
            let Some((r, theta)) = self.ratio_test(&d) else {
                return Ok(Phase::Unbounded);
            };
            if d[r].abs() < S::lit(self.tol.pivot) {
                return Err(Error::SolverFailure(format!(
                    "pivot {:.3e} below threshold at iteration {}",
                    d[r].as_f64(),
                    self.iterations
                )));
            }
            if theta <= S::lit(1e-12) {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, q, &d, theta);
            self.iterations += 1;
            since_recompute += 1;
            if since_recompute >= RECOMPUTE_EVERY {
                since_recompute = 0;
                self.compute_duals();
            } else {
                // duals += rc * (new pivot row of B^{-1})
                let m = self.m;
                for (dk, &b) in self.duals.iter_mut().zip(&self.binv[r * m..(r + 1) * m]) {
                    *dk = *dk + rc * b;
                }
            }
        }
    }

    fn primal(&self) -> Vec<S> {
        let mut y = vec![S::zero(); self.n];
        for (i, &c) in self.basis.iter().enumerate() {
            if c < self.n {
                y[c] = self.x[i].max(S::zero());
            }
        }
        y
    }

    fn finish(&self, lp: &StandardLp<S>, status: LpStatus) -> LpSolution<S> {
        let y = if status == LpStatus::Optimal { self.primal() } else { vec![S::zero(); self.n] };
        let value = lp.c.iter().zip(&y).fold(S::zero(), |acc, (c, v)| acc + *c * *v);
        let mut basis: Vec<usize> = self
            .basis
            .iter()
            .copied()
            .filter(|&c| c < self.n + self.n_slack)
            .collect();
        basis.sort_unstable();
        LpSolution {
            status,
            y,
            value,
            basis,
            iterations: self.iterations,
        }
    }
}

fn mat_vec<S: Scalar>(a: &[S], m: usize, v: &[S]) -> Vec<S> {
    (0..m)
        .map(|i| {
            a[i * m..(i + 1) * m]
                .iter()
                .zip(v)
                .fold(S::zero(), |acc, (x, y)| acc + *x * *y)
        })
        .collect()
}

/// Inverse of the basis matrix when, in the given order, it is lower
/// triangular with nonzero diagonal; computed by forward substitution.
fn triangular_inverse<S: Scalar>(
    cols: &[Vec<(usize, S)>],
    basis: &[usize],
    m: usize,
    pivot_tol: S,
) -> Option<Vec<S>> {
    let mut diag = vec![S::zero(); m];
    for (pos, &c) in basis.iter().enumerate() {
        for &(r, v) in &cols[c] {
            if r < pos {
                return None;
            }
            if r == pos {
                diag[pos] = v;
            }
        }
        if diag[pos].abs() <= pivot_tol {
            return None;
        }
    }
    let mut inv = vec![S::zero(); m * m];
    let mut x = vec![S::zero(); m];
    for j in 0..m {
        x.iter_mut().for_each(|v| *v = S::zero());
        x[j] = S::one();
        for i in j..m {
            if x[i] == S::zero() {
                continue;
            }
            x[i] = x[i] / diag[i];
            let xi = x[i];
            for &(r, v) in &cols[basis[i]] {
                if r > i {
                    x[r] = x[r] - v * xi;
                }
            }
        }
        for i in j..m {
            inv[i * m + j] = x[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(c: Vec<f64>, eq: &[Vec<f64>], beq: Vec<f64>, ub: &[Vec<f64>], bub: Vec<f64>) -> StandardLp<f64> {
        let n = c.len();
        let a_eq = if eq.is_empty() { Matrix::empty(n) } else { Matrix::from_rows(eq) };
        let a_ub = if ub.is_empty() { Matrix::empty(n) } else { Matrix::from_rows(ub) };
        StandardLp::new(c, a_eq, beq, a_ub, bub).unwrap()
    }

    #[test]
    fn single_variable_bound() {
        let s = solve_lp(&lp(vec![1.0], &[], vec![], &[vec![1.0]], vec![1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_returns_a_vertex() {
        let s = solve_lp(&lp(vec![1.0, 1.0], &[], vec![], &[vec![1.0, 1.0]], vec![1.0])).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert!(s.y.iter().any(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn infeasible_and_unbounded() {
        let inf = solve_lp(&lp(vec![1.0], &[vec![1.0]], vec![2.0], &[vec![1.0]], vec![1.0])).unwrap();
        assert_eq!(inf.status, LpStatus::Infeasible);
        let unb = solve_lp(&lp(vec![1.0, 0.0], &[vec![0.0, 1.0]], vec![1.0], &[], vec![])).unwrap();
        assert_eq!(unb.status, LpStatus::Unbounded);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x1 + x2 >= 1 written as -x1 - x2 <= -1; maximize -x1 - 2 x2.
        let s = solve_lp(&lp(vec![-1.0, -2.0], &[], vec![], &[vec![-1.0, -1.0]], vec![-1.0])).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value + 1.0).abs() < 1e-12);
        assert!((s.y[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let s = solve_lp(&lp(
            vec![1.0, 2.0],
            &[vec![1.0, 1.0], vec![2.0, 2.0]],
            vec![1.0, 2.0],
            &[],
            vec![],
        ))
        .unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn crash_basis_matches_cold_start() {
        let p = lp(
            vec![3.0, 1.0, 2.0],
            &[vec![1.0, 1.0, 1.0]],
            vec![1.0],
            &[vec![1.0, 0.0, 2.0]],
            vec![0.8],
        );
        let cold = solve_lp(&p).unwrap();
        let warm = solve_lp_with(
            &p,
            &SimplexOptions {
                crash_basis: Some(vec![1, 3]),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((cold.value - warm.value).abs() < 1e-12);
        assert!((cold.value - 2.6).abs() < 1e-12);
        let dz = solve_lp_with(&p, &SimplexOptions { rule: PivotRule::Dantzig, ..Default::default() }).unwrap();
        assert!((dz.value - 2.6).abs() < 1e-12);
    }

    #[test]
    fn deterministic() {
        let p = lp(vec![1.0, 1.0, 1.0], &[], vec![], &[vec![1.0, 1.0, 1.0], vec![1.0, 0.0, 0.0]], vec![1.0, 0.5]);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(a.y, b.y);
        assert_eq!(a.basis, b.basis);
    }
}
