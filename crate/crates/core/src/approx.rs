//! Sample-based division: alternating partition and per-cluster linear programs.
//!
//! Each quotient term is fitted by a linear program over the samples assigned to it:
//! maximize the summed value of the term on its cluster while staying below `f = p - d` on the
//! samples and keeping the slope in the set `C` of admissible slopes. Samples are then
//! reassigned to the term that is largest on them and the two steps repeat.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::poly::{DivisionProblem, DivisionResult, TropicalPolynomial, TropicalTerm};
use crate::polyhedral::{extreme_point_indices, lower_hull_indices};
use crate::rng::{seeded, substream, Rng};
use crate::scalar::{dot, ExtReal};

/// Shape of a Newton polytope given by generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewtonShape {
    /// Convex hull of the generators.
    Hull,
    /// Minkowski sum of the segments `[0, g]`.
    Zonotope,
}

/// A convex function that can be divided approximately.
pub trait Dividend: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn newton_shape(&self) -> NewtonShape;
    /// Generators of the Newton polytope in the sense of [`Dividend::newton_shape`].
    fn newton_generators(&self) -> Result<Vec<Vec<f64>>>;
}

impl Dividend for TropicalPolynomial<f64> {
    fn dim(&self) -> usize {
        TropicalPolynomial::dim(self)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x).to_f64()
    }

    fn newton_shape(&self) -> NewtonShape {
        NewtonShape::Hull
    }

    fn newton_generators(&self) -> Result<Vec<Vec<f64>>> {
        let pts = self.newton_points();
        Ok(extreme_point_indices(&pts)?.into_iter().map(|i| pts[i].clone()).collect())
    }
}

/// Admissible slopes `C = { c : c + Newt(d) in Newt(p) }` written with one weight vector per
/// divisor term: `c + a~_j = G w_j` with `w_j` in the simplex (hull) or the unit box (zonotope).
#[derive(Clone, Debug)]
pub struct ConstraintSetC {
    pub dim: usize,
    pub shape: NewtonShape,
    pub generators: Vec<Vec<f64>>,
    pub shifts: Vec<Vec<f64>>,
}

pub fn build_constraints_c<D: Dividend + ?Sized>(p: &D, d: &TropicalPolynomial<f64>) -> Result<ConstraintSetC> {
    check_dim(p.dim(), d.dim())?;
    if d.is_neg_inf() {
        return Err(Error::EmptyDivisor);
    }
    Ok(ConstraintSetC { dim: p.dim(), shape: p.newton_shape(), generators: p.newton_generators()?, shifts: d.newton_points() })
}

impl ConstraintSetC {
    fn weights(&self) -> usize {
        self.generators.len() * self.shifts.len()
    }

    /// Adds the weight variables (starting at column `offset`) and their constraints to `lp`.
    fn constrain(&self, lp: &mut LinearProgram<f64>, offset: usize) {
        let l = self.generators.len();
        let nv = lp.num_vars();
        for j in 0..self.shifts.len() {
            let base = offset + j * l;
            match self.shape {
                NewtonShape::Hull => {
                    let mut row = vec![0.0; nv];
                    for k in 0..l {
                        row[base + k] = 1.0;
                        lp.nonneg(base + k);
                    }
                    lp.eq(row, 1.0);
                }
                NewtonShape::Zonotope => {
                    for k in 0..l {
                        lp.bounds(base + k, Some(0.0), Some(1.0));
                    }
                }
            }
            if j > 0 {
                for c in 0..self.dim {
                    let mut row = vec![0.0; nv];
                    for k in 0..l {
                        row[base + k] += self.generators[k][c];
                        row[offset + k] -= self.generators[k][c];
                    }
                    lp.eq(row, self.shifts[j][c] - self.shifts[0][c]);
                }
            }
        }
    }

    /// Slope encoded by the first weight vector.
    fn slope(&self, w: &[f64]) -> Vec<f64> {
        (0..self.dim).map(|c| self.generators.iter().zip(w).map(|(g, wk)| g[c] * wk).sum::<f64>() - self.shifts[0][c]).collect()
    }

    pub fn contains(&self, c: &[f64]) -> Result<bool> {
        check_dim(self.dim, c.len())?;
        if self.generators.is_empty() {
            return Ok(false);
        }
        let mut lp = LinearProgram::new(self.weights());
        self.constrain(&mut lp, 0);
        for k in 0..self.dim {
            let mut row = vec![0.0; self.weights()];
            for (q, g) in self.generators.iter().enumerate() {
                row[q] = g[k];
            }
            lp.eq(row, c[k] + self.shifts[0][k]);
        }
        Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
    }

    pub fn is_empty(&self) -> Result<bool> {
        if self.generators.is_empty() {
            return Ok(true);
        }
        let mut lp = LinearProgram::new(self.weights());
        self.constrain(&mut lp, 0);
        Ok(solve_lp(&lp)?.status != LpStatus::Optimal)
    }
}

/// Sample points with the values of `f` and the indices of the lower hull.
#[derive(Clone, Debug)]
pub struct SampleSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub hull: Vec<usize>,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        check_dim(points.len(), values.len())?;
        let hull = lower_hull_indices(&points, &values)?;
        Ok(Self { points, values, hull })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `count` standard normal points in `dim` dimensions.
pub fn draw_samples(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    (0..count).map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect()).collect()
}

/// Index of the largest term at each sample, lowest index on ties.
pub fn assign_clusters(terms: &[TropicalTerm<f64>], points: &[Vec<f64>]) -> Vec<usize> {
    points
        .iter()
        .map(|x| {
            let mut best = 0;
            let mut best_val = f64::NEG_INFINITY;
            for (i, t) in terms.iter().enumerate() {
                let v = t.eval(x);
                if v > best_val {
                    best = i;
                    best_val = v;
                }
            }
            best
        })
        .collect()
}

/// Fits the best term for `members`, `None` when `C` is empty.
pub fn fit_cluster(c: &ConstraintSetC, samples: &SampleSet, members: &[usize]) -> Result<Option<TropicalTerm<f64>>> {
    let l = c.generators.len();
    if l == 0 {
        return Ok(None);
    }
    let nw = c.weights();
    let bias = nw;
    let mut lp = LinearProgram::new(nw + 1);

    let mut objective = vec![0.0; nw + 1];
    let mut sum = vec![0.0; c.dim];
    for &m in members {
        for (s, x) in sum.iter_mut().zip(&samples.points[m]) {
            *s += x;
        }
    }
    for (k, g) in c.generators.iter().enumerate() {
        objective[k] = dot(g, &sum);
    }
    objective[bias] = members.len() as f64;
    lp.maximize(objective);

    for &k in &samples.hull {
        let x = &samples.points[k];
        let mut row = vec![0.0; nw + 1];
        for (q, g) in c.generators.iter().enumerate() {
            row[q] = dot(g, x);
        }
        row[bias] = 1.0;
        lp.leq(row, samples.values[k] + dot(&c.shifts[0], x));
    }
    c.constrain(&mut lp, 0);

    let out = solve_lp(&lp)?;
    match out.status {
        LpStatus::Optimal => Ok(Some(TropicalTerm::new(c.slope(&out.x[..l]), out.x[bias]))),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(Error::Invariant("cluster program unbounded; the sample set is empty".into())),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ApproxConfig {
    /// Number of quotient terms.
    pub terms: usize,
    /// Number of samples drawn when none are supplied.
    pub samples: usize,
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    /// Tolerance for the remainder and effectiveness tests.
    pub tol: f64,
}

impl Default for ApproxConfig {
    fn default() -> Self {
        Self { terms: 3, samples: 200, max_iters: 20, restarts: 1, seed: 0, tol: 1e-6 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartLog {
    pub restart: usize,
    /// `e(t) = sum_j f(x_j) - q_t(x_j)` after each iteration.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub final_error: f64,
}

/// Fitted quotient terms and the run logs.
#[derive(Clone, Debug)]
pub struct QuotientFit {
    /// `None` when the set of admissible slopes is empty.
    pub terms: Option<Vec<TropicalTerm<f64>>>,
    pub restarts: Vec<RestartLog>,
    pub best_restart: usize,
    /// Largest `q(x_j) - f(x_j)` over all samples.
    pub max_violation: f64,
}

impl QuotientFit {
    pub fn best_trace(&self) -> &[f64] {
        self.restarts.get(self.best_restart).map(|r| r.trace.as_slice()).unwrap_or(&[])
    }
}

fn residual(terms: &[TropicalTerm<f64>], samples: &SampleSet) -> f64 {
    samples
        .points
        .iter()
        .zip(&samples.values)
        .map(|(x, f)| f - terms.iter().map(|t| t.eval(x)).fold(f64::NEG_INFINITY, f64::max))
        .sum()
}

/// Gives every empty cluster half of the (randomly shuffled) largest cluster.
fn repair_empty(assign: &mut [usize], k: usize, rng: &mut Rng) {
    loop {
        let mut sizes = vec![0usize; k];
        for &a in assign.iter() {
            sizes[a] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else { return };
        let largest = (0..k).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap();
        if sizes[largest] < 2 {
            return;
        }
        let mut members: Vec<usize> = (0..assign.len()).filter(|&j| assign[j] == largest).collect();
        members.shuffle(rng);
        for &j in &members[..sizes[largest] / 2] {
            assign[j] = empty;
        }
    }
}

fn single_run(
    c: &ConstraintSetC,
    samples: &SampleSet,
    config: &ApproxConfig,
    restart: usize,
) -> Result<Option<(Vec<TropicalTerm<f64>>, RestartLog)>> {
    let k = config.terms;
    let mut rng = substream(config.seed, restart as u64);
    let mut assign: Vec<usize> = (0..samples.len()).map(|_| rng.random_range(0..k)).collect();
    repair_empty(&mut assign, k, &mut rng);

    let mut trace = Vec::new();
    let mut terms = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters {
        let clusters: Vec<Vec<usize>> = (0..k).map(|i| (0..samples.len()).filter(|&j| assign[j] == i).collect()).collect();
        let fitted: Vec<Option<TropicalTerm<f64>>> =
            clusters.par_iter().map(|m| fit_cluster(c, samples, m)).collect::<Result<_>>()?;
        if fitted.iter().any(Option::is_none) {
            return Ok(None);
        }
        terms = fitted.into_iter().flatten().collect();
        trace.push(residual(&terms, samples));

        let mut next = assign_clusters(&terms, &samples.points);
        repair_empty(&mut next, k, &mut rng);
        if next == assign {
            converged = true;
            break;
        }
        assign = next;
    }
    let final_error = *trace.last().unwrap_or(&f64::INFINITY);
    let log = RestartLog { restart, iterations: trace.len(), trace, converged, final_error };
    Ok(Some((terms, log)))
}

/// Fits `config.terms` quotient terms of `p / d` on the given samples.
pub fn approx_quotient<D: Dividend + ?Sized>(
    p: &D,
    d: &TropicalPolynomial<f64>,
    points: Vec<Vec<f64>>,
    config: &ApproxConfig,
) -> Result<(QuotientFit, SampleSet)> {
    if config.terms == 0 || config.restarts == 0 || config.max_iters == 0 {
        return Err(Error::InvalidInput("terms, restarts and iterations must be positive".into()));
    }
    if points.len() < config.terms {
        return Err(Error::InvalidInput(format!("need at least {} samples, got {}", config.terms, points.len())));
    }
    for x in &points {
        check_dim(p.dim(), x.len())?;
    }
    let values: Vec<f64> = points
        .iter()
        .map(|x| match d.eval(x) {
            ExtReal::Finite(dv) => Ok(p.value(x) - dv),
            ExtReal::NegInf => Err(Error::EmptyDivisor),
        })
        .collect::<Result<_>>()?;
    let samples = SampleSet::new(points, values)?;
    let c = build_constraints_c(p, d)?;

    let runs: Vec<Option<(Vec<TropicalTerm<f64>>, RestartLog)>> =
        (0..config.restarts).into_par_iter().map(|r| single_run(&c, &samples, config, r)).collect::<Result<_>>()?;
    if runs.iter().any(Option::is_none) {
        let fit = QuotientFit { terms: None, restarts: Vec::new(), best_restart: 0, max_violation: 0.0 };
        return Ok((fit, samples));
    }
    let runs: Vec<(Vec<TropicalTerm<f64>>, RestartLog)> = runs.into_iter().flatten().collect();
    let best = (0..runs.len()).min_by(|&a, &b| runs[a].1.final_error.total_cmp(&runs[b].1.final_error).then(a.cmp(&b))).unwrap();
    let terms = runs[best].0.clone();
    let max_violation = samples
        .points
        .iter()
        .zip(&samples.values)
        .map(|(x, f)| terms.iter().map(|t| t.eval(x)).fold(f64::NEG_INFINITY, f64::max) - f)
        .fold(f64::NEG_INFINITY, f64::max);
    let fit = QuotientFit {
        terms: Some(terms),
        restarts: runs.into_iter().map(|(_, log)| log).collect(),
        best_restart: best,
        max_violation,
    };
    Ok((fit, samples))
}

/// Result of an approximate division together with its run logs.
#[derive(Clone, Debug)]
pub struct ApproxOutcome {
    pub result: DivisionResult<f64>,
    pub fit: QuotientFit,
    pub samples: SampleSet,
}

/// Approximate division of tropical polynomials on standard normal samples.
pub fn approx_divide(problem: &DivisionProblem<f64>, config: &ApproxConfig) -> Result<ApproxOutcome> {
    let points = draw_samples(problem.dim(), config.samples, config.seed);
    approx_divide_on(problem, points, config)
}

/// Approximate division on caller-supplied sample points.
pub fn approx_divide_on(problem: &DivisionProblem<f64>, points: Vec<Vec<f64>>, config: &ApproxConfig) -> Result<ApproxOutcome> {
    let p = &problem.dividend;
    let n = problem.dim();
    if p.is_neg_inf() {
        return Err(Error::InvalidInput("the dividend has no terms".into()));
    }
    let (fit, samples) = approx_quotient(p, &problem.divisor, points, config)?;
    let quotient = match &fit.terms {
        Some(t) => TropicalPolynomial::new(n, t.clone())?,
        None => TropicalPolynomial::neg_inf(n),
    };
    let dq = problem.divisor.tropical_sum(&quotient)?;
    let mut keep = vec![false; p.len()];
    for x in &samples.points {
        let Some(i) = p.argmax(x) else { continue };
        if p.eval(x).to_f64() > dq.eval(x).to_f64() + config.tol {
            keep[i] = true;
        }
    }
    let remainder =
        TropicalPolynomial::new(n, p.terms().iter().zip(&keep).filter(|(_, &k)| k).map(|(t, _)| t.clone()).collect())?;
    let effective = samples.points.iter().any(|x| remainder.eval(x).to_f64() < p.eval(x).to_f64() - config.tol);
    let result = DivisionResult {
        nontrivial: !quotient.is_neg_inf(),
        quotient,
        remainder,
        effective,
        exact: false,
        error_trace: fit.best_trace().to_vec(),
    };
    Ok(ApproxOutcome { result, fit, samples })
}

/// JSON run log of an approximate division.
#[derive(Serialize)]
pub struct RunLog<'a> {
    pub config: &'a ApproxConfig,
    pub samples: usize,
    pub lower_hull_size: usize,
    pub best_restart: usize,
    pub max_violation: f64,
    pub restarts: &'a [RestartLog],
}

impl ApproxOutcome {
    pub fn run_log<'a>(&'a self, config: &'a ApproxConfig) -> RunLog<'a> {
        RunLog {
            config,
            samples: self.samples.len(),
            lower_hull_size: self.samples.hull.len(),
            best_restart: self.fit.best_restart,
            max_violation: self.fit.max_violation,
            restarts: &self.fit.restarts,
        }
    }
}

/// `iteration,error` rows for plotting the residual trace.
pub fn trace_csv(trace: &[f64]) -> String {
    let mut out = String::from("iteration,error\n");
    for (t, e) in trace.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, e));
    }
    out
}
