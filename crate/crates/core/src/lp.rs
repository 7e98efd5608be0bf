//! Dense two-phase primal simplex, generic over the scalar backend.
//!
//! Problems are stated as
//!
//! ```text
//! maximize    c^T v
//! subject to  G v <= h,   A v = b,   lower <= v <= upper
//! ```
//!
//! with every bound optional (variables are free unless bounded).

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct LinearProgram<S> {
    num_vars: usize,
    objective: Vec<S>,
    minimizing: bool,
    leq: Vec<(Vec<S>, S)>,
    eq: Vec<(Vec<S>, S)>,
    lower: Vec<Option<S>>,
    upper: Vec<Option<S>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpOutcome<S> {
    pub status: LpStatus,
    /// Optimal point; empty unless `status` is `Optimal`.
    pub x: Vec<S>,
    /// Objective value in the sense it was stated (minimum or maximum).
    pub objective: S,
}

impl<S: Scalar> LpOutcome<S> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Clone, Debug, Error)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex iteration limit ({0}) reached")]
    IterationLimit(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PivotRule {
    /// Smallest improving index throughout.
    Bland,
    /// Largest reduced cost, falling back to Bland's rule after a run of degenerate pivots.
    DantzigThenBland,
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub rule: PivotRule,
    pub max_iters: Option<usize>,
}

impl Default for LpOptions {
    fn default() -> Self {
        Self { rule: PivotRule::DantzigThenBland, max_iters: None }
    }
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![S::zero(); num_vars],
            minimizing: false,
            leq: Vec::new(),
            eq: Vec::new(),
            lower: vec![None; num_vars],
            upper: vec![None; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn maximize(&mut self, c: Vec<S>) -> &mut Self {
        self.objective = c;
        self.minimizing = false;
        self
    }

    pub fn minimize(&mut self, c: Vec<S>) -> &mut Self {
        self.objective = c.into_iter().map(|v| -v).collect();
        self.minimizing = true;
        self
    }

    /// `row . v <= rhs`
    pub fn leq(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        self.leq.push((row, rhs));
        self
    }

    /// `row . v >= rhs`
    pub fn geq(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        self.leq.push((row.into_iter().map(|v| -v).collect(), -rhs));
        self
    }

    /// `row . v == rhs`
    pub fn eq(&mut self, row: Vec<S>, rhs: S) -> &mut Self {
        self.eq.push((row, rhs));
        self
    }

    pub fn bounds(&mut self, var: usize, lower: Option<S>, upper: Option<S>) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn nonneg(&mut self, var: usize) -> &mut Self {
        self.lower[var] = Some(S::zero());
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars;
        if self.objective.len() != n {
            return Err(LpError::Malformed(format!("objective has {} entries, expected {n}", self.objective.len())));
        }
        for (row, _) in self.leq.iter().chain(&self.eq) {
            if row.len() != n {
                return Err(LpError::Malformed(format!("constraint has {} entries, expected {n}", row.len())));
            }
        }
        for j in 0..n {
            if let (Some(l), Some(u)) = (&self.lower[j], &self.upper[j]) {
                if l > u {
                    return Err(LpError::Malformed(format!("variable {j} has lower bound above upper bound")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of the constraints and bounds at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for (row, rhs) in &self.leq {
            let lhs = crate::scalar::dot(row, x);
            worst = S::max_of(worst, lhs - rhs.clone());
        }
        for (row, rhs) in &self.eq {
            let lhs = crate::scalar::dot(row, x);
            worst = S::max_of(worst, (lhs - rhs.clone()).abs_val());
        }
        for (j, v) in x.iter().enumerate() {
            if let Some(l) = &self.lower[j] {
                worst = S::max_of(worst, l.clone() - v.clone());
            }
            if let Some(u) = &self.upper[j] {
                worst = S::max_of(worst, v.clone() - u.clone());
            }
        }
        worst
    }
}

pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpOutcome<S>, LpError> {
    solve_lp_with(lp, LpOptions::default())
}

#[derive(Clone, Debug)]
enum VarMap<S> {
    /// `v = offset + y[col]`
    Shift(usize, S),
    /// `v = offset - y[col]`
    Flip(usize, S),
    /// `v = y[pos] - y[neg]`
    Split(usize, usize),
}

pub fn solve_lp_with<S: Scalar>(lp: &LinearProgram<S>, opts: LpOptions) -> Result<LpOutcome<S>, LpError> {
    lp.validate()?;
    let n = lp.num_vars;

    let mut maps = Vec::with_capacity(n);
    let mut ny = 0usize;
    let mut bound_rows: Vec<(usize, S)> = Vec::new();
    for j in 0..n {
        match (&lp.lower[j], &lp.upper[j]) {
            (Some(l), u) => {
                maps.push(VarMap::Shift(ny, l.clone()));
                if let Some(u) = u {
                    bound_rows.push((ny, u.clone() - l.clone()));
                }
                ny += 1;
            }
            (None, Some(u)) => {
                maps.push(VarMap::Flip(ny, u.clone()));
                ny += 1;
            }
            (None, None) => {
                maps.push(VarMap::Split(ny, ny + 1));
                ny += 2;
            }
        }
    }

    let substitute = |row: &[S], rhs: &S| -> (Vec<S>, S) {
        let mut out = vec![S::zero(); ny];
        let mut rhs = rhs.clone();
        for (j, coef) in row.iter().enumerate() {
            if coef.is_zero() {
                continue;
            }
            match &maps[j] {
                VarMap::Shift(c, off) => {
                    out[*c] = out[*c].clone() + coef.clone();
                    rhs = rhs - coef.clone() * off.clone();
                }
                VarMap::Flip(c, off) => {
                    out[*c] = out[*c].clone() - coef.clone();
                    rhs = rhs - coef.clone() * off.clone();
                }
                VarMap::Split(p, q) => {
                    out[*p] = out[*p].clone() + coef.clone();
                    out[*q] = out[*q].clone() - coef.clone();
                }
            }
        }
        (out, rhs)
    };

    let mut le_rows: Vec<(Vec<S>, S)> = lp.leq.iter().map(|(r, b)| substitute(r, b)).collect();
    for (col, cap) in bound_rows {
        let mut row = vec![S::zero(); ny];
        row[col] = S::one();
        le_rows.push((row, cap));
    }
    let eq_rows: Vec<(Vec<S>, S)> = lp.eq.iter().map(|(r, b)| substitute(r, b)).collect();

    let mut cost = vec![S::zero(); ny];
    for (j, c) in lp.objective.iter().enumerate() {
        match &maps[j] {
            VarMap::Shift(col, _) => {
                cost[*col] = cost[*col].clone() + c.clone();
            }
            VarMap::Flip(col, _) => {
                cost[*col] = cost[*col].clone() - c.clone();
            }
            VarMap::Split(p, q) => {
                cost[*p] = cost[*p].clone() + c.clone();
                cost[*q] = cost[*q].clone() - c.clone();
            }
        }
    }

    let mut tab = Tableau::build(ny, le_rows, eq_rows);
    let max_iters = opts.max_iters.unwrap_or(50_000 + 200 * (tab.rows.len() + tab.ncols));

    if tab.num_art > 0 {
        let mut phase1 = vec![S::zero(); tab.ncols];
        for c in tab.art_start..tab.ncols {
            phase1[c] = -S::one();
        }
        tab.set_costs(&phase1);
        match tab.optimize(opts.rule, max_iters)? {
            Step::Optimal => {}
            Step::Unbounded => return Err(LpError::Malformed("phase one unbounded".into())),
        }
        let scale = tab.rhs_scale();
        if -tab.value.clone() > S::feas_tol() * scale {
            return Ok(LpOutcome { status: LpStatus::Infeasible, x: Vec::new(), objective: S::zero() });
        }
        tab.evict_artificials();
    }

    let mut phase2 = vec![S::zero(); tab.ncols];
    phase2[..ny].clone_from_slice(&cost);
    tab.set_costs(&phase2);
    match tab.optimize(opts.rule, max_iters)? {
        Step::Optimal => {}
        Step::Unbounded => {
            return Ok(LpOutcome { status: LpStatus::Unbounded, x: Vec::new(), objective: S::zero() });
        }
    }

    let mut y = vec![S::zero(); tab.ncols];
    for (r, &b) in tab.basis.iter().enumerate() {
        y[b] = tab.rows[r][tab.ncols].clone();
    }
    let x: Vec<S> = maps
        .iter()
        .map(|m| match m {
            VarMap::Shift(c, off) => off.clone() + y[*c].clone(),
            VarMap::Flip(c, off) => off.clone() - y[*c].clone(),
            VarMap::Split(p, q) => y[*p].clone() - y[*q].clone(),
        })
        .collect();
    let mut objective = crate::scalar::dot(&lp.objective, &x);
    if lp.minimizing {
        objective = -objective;
    }
    Ok(LpOutcome { status: LpStatus::Optimal, x, objective })
}

enum Step {
    Optimal,
    Unbounded,
}

struct Tableau<S> {
    /// Each row holds `ncols` coefficients followed by the right-hand side.
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    ncols: usize,
    art_start: usize,
    num_art: usize,
    /// Reduced costs; a positive entry improves the objective.
    reduced: Vec<S>,
    value: S,
    forbidden_from: usize,
}

impl<S: Scalar> Tableau<S> {
    fn build(ny: usize, le_rows: Vec<(Vec<S>, S)>, eq_rows: Vec<(Vec<S>, S)>) -> Self {
        let n_le = le_rows.len();
        let m = n_le + eq_rows.len();
        let slack_start = ny;
        let art_start = ny + n_le;
        let needs_art: Vec<bool> = le_rows.iter().map(|(_, b)| *b < S::zero()).chain(eq_rows.iter().map(|_| true)).collect();
        let num_art = needs_art.iter().filter(|&&a| a).count();
        let ncols = art_start + num_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut next_art = art_start;
        for (i, (coefs, rhs)) in le_rows.into_iter().chain(eq_rows).enumerate() {
            let mut row = vec![S::zero(); ncols + 1];
            for (j, c) in coefs.into_iter().enumerate() {
                row[j] = c;
            }
            if i < n_le {
                row[slack_start + i] = S::one();
            }
            row[ncols] = rhs;
            if needs_art[i] {
                if row[ncols] < S::zero() {
                    for v in row.iter_mut() {
                        *v = -v.clone();
                    }
                }
                row[next_art] = S::one();
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(slack_start + i);
            }
            rows.push(row);
        }
        Self { rows, basis, ncols, art_start, num_art, reduced: vec![S::zero(); ncols], value: S::zero(), forbidden_from: ncols }
    }

    fn rhs_scale(&self) -> S {
        let mut s = S::one();
        for row in &self.rows {
            s = S::max_of(s, row[self.ncols].abs_val());
        }
        s
    }

    fn set_costs(&mut self, costs: &[S]) {
        let mut reduced = costs.to_vec();
        let mut value = S::zero();
        for (r, &b) in self.basis.iter().enumerate() {
            let cb = costs[b].clone();
            if cb.is_zero() {
                continue;
            }
            let row = &self.rows[r];
            for (j, red) in reduced.iter_mut().enumerate() {
                if !row[j].is_zero() {
                    *red = red.clone() - cb.clone() * row[j].clone();
                }
            }
            value = value + cb * row[self.ncols].clone();
        }
        self.reduced = reduced;
        self.value = value;
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let width = self.ncols + 1;
        let piv = self.rows[r][e].clone();
        {
            let row = &mut self.rows[r];
            for v in row.iter_mut() {
                if !v.is_zero() {
                    *v = v.clone() / piv.clone();
                }
            }
            row[e] = S::one();
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..width).filter(|&j| !pivot_row[j].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[e].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                row[j] = row[j].clone() - f.clone() * pivot_row[j].clone();
            }
            row[e] = S::zero();
        }
        let f = self.reduced[e].clone();
        if !f.is_zero() {
            for &j in &nz {
                if j < self.ncols {
                    self.reduced[j] = self.reduced[j].clone() - f.clone() * pivot_row[j].clone();
                }
            }
            self.reduced[e] = S::zero();
            self.value = self.value.clone() + f * pivot_row[self.ncols].clone();
        }
        self.basis[r] = e;
    }

    fn entering(&self, bland: bool) -> Option<usize> {
        let tol = S::pivot_tol();
        let limit = self.forbidden_from.min(self.ncols);
        if bland {
            (0..limit).find(|&j| self.reduced[j] > tol)
        } else {
            let mut best: Option<usize> = None;
            for j in 0..limit {
                if self.reduced[j] > tol && best.is_none_or(|b| self.reduced[j] > self.reduced[b]) {
                    best = Some(j);
                }
            }
            best
        }
    }

    fn leaving(&self, e: usize) -> Option<usize> {
        let tol = S::pivot_tol();
        let mut best: Option<(usize, S)> = None;
        for (i, row) in self.rows.iter().enumerate() {
            if row[e] > tol {
                let ratio = row[self.ncols].clone() / row[e].clone();
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let better = if ratio.approx_eq(&br) { self.basis[i] < self.basis[bi] } else { ratio < br };
                        if better {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    fn optimize(&mut self, rule: PivotRule, max_iters: usize) -> Result<Step, LpError> {
        let mut bland = rule == PivotRule::Bland;
        let mut degenerate_run = 0usize;
        for _ in 0..max_iters {
            let Some(e) = self.entering(bland) else {
                return Ok(Step::Optimal);
            };
            let Some(r) = self.leaving(e) else {
                return Ok(Step::Unbounded);
            };
            if self.rows[r][self.ncols].abs_val() <= S::pivot_tol() {
                degenerate_run += 1;
                if degenerate_run > 50 {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, e);
            if !S::EXACT {
                for row in &mut self.rows {
                    let rhs = &mut row[self.ncols];
                    if *rhs < S::zero() && rhs.abs_val() <= S::pivot_tol() {
                        *rhs = S::zero();
                    }
                }
            }
        }
        Err(LpError::IterationLimit(max_iters))
    }

    /// Pivots basic artificial variables out (or drops redundant rows) and forbids artificial columns.
    fn evict_artificials(&mut self) {
        let mut r = 0;
        while r < self.rows.len() {
            if self.basis[r] >= self.art_start {
                let mut best: Option<usize> = None;
                for j in 0..self.art_start {
                    let mag = self.rows[r][j].abs_val();
                    if mag > S::pivot_tol() && best.is_none_or(|b| mag > self.rows[r][b].abs_val()) {
                        best = Some(j);
                        if S::EXACT {
                            break;
                        }
                    }
                }
                match best {
                    Some(j) => {
                        self.pivot(r, j);
                        r += 1;
                    }
                    None => {
                        self.rows.remove(r);
                        self.basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        self.forbidden_from = self.art_start;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rational};

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0 -> (2, 6), 36
        let mut lp = LinearProgram::<f64>::new(2);
        lp.maximize(vec![3.0, 5.0])
            .leq(vec![1.0, 0.0], 4.0)
            .leq(vec![0.0, 2.0], 12.0)
            .leq(vec![3.0, 2.0], 18.0)
            .nonneg(0)
            .nonneg(1);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective - 36.0).abs() < 1e-9);
        assert!((out.x[0] - 2.0).abs() < 1e-9 && (out.x[1] - 6.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.leq(vec![1.0], 0.0).geq(vec![1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::<f64>::new(1);
        lp.maximize(vec![1.0]).nonneg(0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // min x + y with x >= -3 (bound), y free, x + y >= -5, y <= 2 -> objective -5
        let mut lp = LinearProgram::<f64>::new(2);
        lp.minimize(vec![1.0, 1.0]).bounds(0, Some(-3.0), None).geq(vec![1.0, 1.0], -5.0).leq(vec![0.0, 1.0], 2.0);
        let out = solve_lp(&lp).unwrap();
        assert!((out.objective + 5.0).abs() < 1e-9);

        let mut lp = LinearProgram::<f64>::new(1);
        lp.maximize(vec![1.0]).bounds(0, None, Some(-2.0));
        let out = solve_lp(&lp).unwrap();
        assert!((out.x[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn equalities_with_redundant_rows() {
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.maximize(vec![rat_int(1), rat_int(0)])
            .eq(vec![rat_int(1), rat_int(1)], rat_int(1))
            .eq(vec![rat_int(2), rat_int(2)], rat_int(2))
            .nonneg(0)
            .nonneg(1);
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.status, LpStatus::Optimal);
        assert_eq!(out.x, vec![rat_int(1), rat_int(0)]);
    }

    #[test]
    fn exact_fractional_optimum() {
        // max x + y, 3x + y <= 2, x + 3y <= 2 -> x = y = 1/2
        let mut lp = LinearProgram::<Rational>::new(2);
        lp.maximize(vec![rat_int(1), rat_int(1)])
            .leq(vec![rat_int(3), rat_int(1)], rat_int(2))
            .leq(vec![rat_int(1), rat_int(3)], rat_int(2));
        let out = solve_lp(&lp).unwrap();
        assert_eq!(out.x, vec![rat(1, 2), rat(1, 2)]);
        assert_eq!(out.objective, rat_int(1));
    }

    #[test]
    fn cycling_example_terminates() {
        // Beale's example cycles under the textbook largest-coefficient rule.
        let mut lp = LinearProgram::<Rational>::new(4);
        lp.maximize(vec![rat(3, 4), rat_int(-150), rat(1, 50), rat_int(-6)])
            .leq(vec![rat(1, 4), rat_int(-60), rat(-1, 25), rat_int(9)], rat_int(0))
            .leq(vec![rat(1, 2), rat_int(-90), rat(-1, 50), rat_int(3)], rat_int(0))
            .leq(vec![rat_int(0), rat_int(0), rat_int(1), rat_int(0)], rat_int(1));
        for j in 0..4 {
            lp.nonneg(j);
        }
        for rule in [PivotRule::Bland, PivotRule::DantzigThenBland] {
            let out = solve_lp_with(&lp, LpOptions { rule, max_iters: Some(500) }).unwrap();
            assert_eq!(out.status, LpStatus::Optimal);
            assert_eq!(out.objective, rat(1, 20));
        }
    }
}
