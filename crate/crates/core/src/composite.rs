//! Composite polynomials `sum_v max(a_v . x + b_v, 0)` and their division.
//!
//! When the unit coefficient vectors form an invertible matrix `A` with biases `B`, a candidate
//! `q = sum_i max(a^_i . x + b^_i, 0)` satisfies `q <= p` exactly when, with `mu_i = A^-1 a^_i`,
//!
//! * `mu_i >= 0` for every `i`,
//! * `sum_i mu_i <= 1` componentwise,
//! * `b^_i <= B . mu_i` for every `i`.
//!
//! [`composite_quotient_fw`] maximizes `sum_j q(x_j)` over this set by Frank-Wolfe steps whose
//! linear subproblem separates into one small problem per coordinate.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{Dividend, NewtonShape};
use crate::error::{check_dim, Error, Result};
use crate::exact::exact_divide;
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::poly::{DivisionProblem, TropicalPolynomial, TropicalTerm};
use crate::rng::seeded;
use crate::scalar::{dot, ExtReal, Rational, Scalar};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReluUnit {
    pub a: Vec<f64>,
    pub b: f64,
}

impl ReluUnit {
    pub fn new(a: Vec<f64>, b: f64) -> Self {
        Self { a, b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (dot(&self.a, x) + self.b).max(0.0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompositePolynomial {
    pub dim: usize,
    pub units: Vec<ReluUnit>,
}

#[derive(Deserialize)]
struct CompositeWire {
    dim: usize,
    units: Vec<ReluUnit>,
}

impl<'de> Deserialize<'de> for CompositePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = CompositeWire::deserialize(de)?;
        CompositePolynomial::new(w.dim, w.units).map_err(serde::de::Error::custom)
    }
}

impl CompositePolynomial {
    pub fn new(dim: usize, units: Vec<ReluUnit>) -> Result<Self> {
        for u in &units {
            check_dim(dim, u.a.len())?;
        }
        Ok(Self { dim, units })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.units.iter().map(|u| u.eval(x)).sum()
    }

    /// Coefficient matrix with one column per unit.
    pub fn coefficient_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.units.len(), |r, c| self.units[c].a[r])
    }

    pub fn biases(&self) -> Vec<f64> {
        self.units.iter().map(|u| u.b).collect()
    }

    /// Expansion into an ordinary tropical polynomial (`2^units` terms before merging).
    pub fn to_tropical(&self) -> Result<TropicalPolynomial<f64>> {
        if self.units.len() > 20 {
            return Err(Error::InvalidInput("too many units to expand".into()));
        }
        let mut acc = TropicalPolynomial::constant(self.dim, 0.0);
        for u in &self.units {
            let relu = TropicalPolynomial::new(
                self.dim,
                vec![TropicalTerm::new(u.a.clone(), u.b), TropicalTerm::new(vec![0.0; self.dim], 0.0)],
            )?;
            acc = acc.tropical_sum(&relu)?;
        }
        Ok(acc)
    }
}

impl Dividend for CompositePolynomial {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }

    fn newton_shape(&self) -> NewtonShape {
        NewtonShape::Zonotope
    }

    fn newton_generators(&self) -> Result<Vec<Vec<f64>>> {
        Ok(self.units.iter().map(|u| u.a.clone()).collect())
    }
}

/// One factor `{ F alpha : A alpha <= beta }` of an extended Newton representation.
#[derive(Clone, Debug)]
pub struct NewtonFactor {
    /// Columns of `F`.
    pub columns: Vec<Vec<f64>>,
    /// Rows of `A`.
    pub rows: Vec<Vec<f64>>,
    pub beta: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Combination {
    /// Minkowski sum of the factors (Newton polytope of a sum).
    Sum,
    /// Convex hull of the union of the factors (Newton polytope of a maximum).
    Max,
}

/// Newton polytope kept in lifted form so membership stays a small linear program.
#[derive(Clone, Debug)]
pub struct ExtendedNewtonRep {
    pub dim: usize,
    pub factors: Vec<NewtonFactor>,
    pub combination: Combination,
}

/// Minkowski-sum representation of a composite's Newton polytope: one segment per unit.
pub fn minkowski_newton(p: &CompositePolynomial) -> ExtendedNewtonRep {
    let factors = p
        .units
        .iter()
        .map(|u| NewtonFactor { columns: vec![u.a.clone()], rows: vec![vec![1.0], vec![-1.0]], beta: vec![1.0, 0.0] })
        .collect();
    ExtendedNewtonRep { dim: p.dim, factors, combination: Combination::Sum }
}

impl ExtendedNewtonRep {
    pub fn contains(&self, point: &[f64]) -> Result<bool> {
        check_dim(self.dim, point.len())?;
        let widths: Vec<usize> = self.factors.iter().map(|f| f.columns.len()).collect();
        let n_alpha: usize = widths.iter().sum();
        let n_lambda = if self.combination == Combination::Max { self.factors.len() } else { 0 };
        let nv = n_alpha + n_lambda;
        if self.factors.is_empty() {
            return Ok(point.iter().all(|v| v.abs() <= f64::eq_tol()) && self.combination == Combination::Sum);
        }
        let mut lp = LinearProgram::new(nv);
        for k in 0..self.dim {
            let mut row = vec![0.0; nv];
            let mut off = 0;
            for f in &self.factors {
                for (c, col) in f.columns.iter().enumerate() {
                    row[off + c] = col[k];
                }
                off += f.columns.len();
            }
            lp.eq(row, point[k]);
        }
        let mut off = 0;
        for (fi, f) in self.factors.iter().enumerate() {
            for (r, beta) in f.rows.iter().zip(&f.beta) {
                let mut row = vec![0.0; nv];
                row[off..off + r.len()].copy_from_slice(r);
                match self.combination {
                    Combination::Sum => {
                        lp.leq(row, *beta);
                    }
                    Combination::Max => {
                        row[n_alpha + fi] = -beta;
                        lp.leq(row, 0.0);
                    }
                }
            }
            off += f.columns.len();
        }
        if self.combination == Combination::Max {
            let mut row = vec![0.0; nv];
            for j in 0..n_lambda {
                row[n_alpha + j] = 1.0;
                lp.nonneg(n_alpha + j);
            }
            lp.eq(row, 1.0);
        }
        Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
    }
}

/// Combines representations under tropical addition (`Max`) of their polynomials.
pub fn max_combine(parts: &[ExtendedNewtonRep]) -> Result<ExtendedNewtonRep> {
    let dim = parts.first().map(|p| p.dim).ok_or_else(|| Error::InvalidInput("nothing to combine".into()))?;
    let mut factors = Vec::new();
    for p in parts {
        check_dim(dim, p.dim)?;
        if p.combination != Combination::Sum {
            return Err(Error::InvalidInput("only sum representations can be combined".into()));
        }
        // A Minkowski sum of factors becomes one factor with stacked columns and block rows.
        let width: usize = p.factors.iter().map(|f| f.columns.len()).sum();
        let mut columns = Vec::with_capacity(width);
        let mut rows = Vec::new();
        let mut beta = Vec::new();
        let mut off = 0;
        for f in &p.factors {
            columns.extend(f.columns.iter().cloned());
            for (r, b) in f.rows.iter().zip(&f.beta) {
                let mut row = vec![0.0; width];
                row[off..off + r.len()].copy_from_slice(r);
                rows.push(row);
                beta.push(*b);
            }
            off += f.columns.len();
        }
        factors.push(NewtonFactor { columns, rows, beta });
    }
    Ok(ExtendedNewtonRep { dim, factors, combination: Combination::Max })
}

/// Inverse of the unit coefficient matrix of a square, independent composite.
pub fn unit_inverse(p: &CompositePolynomial) -> Result<DMatrix<f64>> {
    if p.units.len() != p.dim {
        return Err(Error::InvalidInput(format!(
            "need as many units as dimensions ({} units in dimension {}); reduce the input first",
            p.units.len(),
            p.dim
        )));
    }
    let a = p.coefficient_matrix();
    let svd = a.clone().svd(false, false);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if smax == 0.0 || smin <= 1e-8 * smax {
        return Err(Error::Singular);
    }
    a.try_inverse().ok_or(Error::Singular)
}

/// Whether every candidate unit set gives `q <= p`, decided by the weight conditions.
pub fn weights_below_dividend(p: &CompositePolynomial, candidate: &[ReluUnit]) -> Result<bool> {
    let inv = unit_inverse(p)?;
    let tol = 1e-9;
    let bias = DVector::from_vec(p.biases());
    let mut total = DVector::zeros(p.dim);
    for u in candidate {
        check_dim(p.dim, u.a.len())?;
        let mu = &inv * DVector::from_column_slice(&u.a);
        if mu.iter().any(|&m| m < -tol) {
            return Ok(false);
        }
        if u.b > bias.dot(&mu) + tol {
            return Ok(false);
        }
        total += mu;
    }
    Ok(total.iter().all(|&s| s <= 1.0 + tol))
}

/// Exact maximizer of `sum_i c1_i . a^_i + c2_i b^_i` over the feasible set.
///
/// With `mu_i = A^-1 a^_i` and `b^_i = B . mu_i` the objective becomes `sum_i g_i . mu_i` with
/// `g_i = A^T c1_i + c2_i B`, and each coordinate `k` picks the single largest positive `g_ik`.
pub fn analytic_phase2(c1: &[Vec<f64>], c2: &[f64], p: &CompositePolynomial) -> Result<Vec<ReluUnit>> {
    check_dim(c1.len(), c2.len())?;
    let a = p.coefficient_matrix();
    let bias = DVector::from_vec(p.biases());
    let n = p.dim;
    let m = c1.len();
    let g: Vec<DVector<f64>> =
        c1.iter().zip(c2).map(|(c, &w)| a.transpose() * DVector::from_column_slice(c) + &bias * w).collect();
    let mut mu = vec![DVector::<f64>::zeros(n); m];
    for k in 0..n {
        let mut best: Option<usize> = None;
        for i in 0..m {
            if g[i][k] > 0.0 && best.is_none_or(|b| g[i][k] > g[b][k]) {
                best = Some(i);
            }
        }
        if let Some(i) = best {
            mu[i][k] = 1.0;
        }
    }
    Ok(mu.iter().map(|mu_i| ReluUnit::new((&a * mu_i).iter().copied().collect(), bias.dot(mu_i))).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct FwConfig {
    pub terms: usize,
    /// Step size of each Frank-Wolfe update.
    pub rho: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for FwConfig {
    fn default() -> Self {
        Self { terms: 5, rho: 0.2, iterations: 50, seed: 0 }
    }
}

#[derive(Clone, Debug)]
pub struct FwOutcome {
    pub quotient: CompositePolynomial,
    /// `sum_j q(x_j)` before the first and after every update.
    pub objective_trace: Vec<f64>,
}

/// Random feasible start: nonnegative weights whose sums stay below one in every coordinate.
pub fn feasible_start(p: &CompositePolynomial, terms: usize, seed: u64) -> Vec<ReluUnit> {
    let mut rng = seeded(seed);
    let n = p.dim;
    let mut mu = vec![DVector::<f64>::zeros(n); terms];
    for k in 0..n {
        let draws: Vec<f64> = (0..=terms).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = draws.iter().sum();
        for i in 0..terms {
            mu[i][k] = draws[i] / total;
        }
    }
    let a = p.coefficient_matrix();
    let bias = DVector::from_vec(p.biases());
    mu.iter().map(|m| ReluUnit::new((&a * m).iter().copied().collect(), bias.dot(m))).collect()
}

pub fn composite_objective(units: &[ReluUnit], samples: &[Vec<f64>]) -> f64 {
    samples.iter().map(|x| units.iter().map(|u| u.eval(x)).sum::<f64>()).sum()
}

/// Frank-Wolfe ascent of `sum_j q(x_j)` over composite quotients of `p` (divisor 0).
pub fn composite_quotient_fw(
    p: &CompositePolynomial,
    samples: &[Vec<f64>],
    config: &FwConfig,
    init: Option<Vec<ReluUnit>>,
) -> Result<FwOutcome> {
    unit_inverse(p)?;
    for x in samples {
        check_dim(p.dim, x.len())?;
    }
    if !(0.0..=1.0).contains(&config.rho) {
        return Err(Error::InvalidInput("step size must lie in [0, 1]".into()));
    }
    let mut units = match init {
        Some(u) => {
            if !weights_below_dividend(p, &u)? {
                return Err(Error::InvalidInput("initial quotient violates q <= p".into()));
            }
            u
        }
        None => feasible_start(p, config.terms, config.seed),
    };
    let mut trace = vec![composite_objective(&units, samples)];
    for _ in 0..config.iterations {
        let mut c1 = vec![vec![0.0; p.dim]; units.len()];
        let mut c2 = vec![0.0; units.len()];
        for x in samples {
            for (i, u) in units.iter().enumerate() {
                if dot(&u.a, x) + u.b >= 0.0 {
                    for (c, xv) in c1[i].iter_mut().zip(x) {
                        *c += xv;
                    }
                    c2[i] += 1.0;
                }
            }
        }
        let target = analytic_phase2(&c1, &c2, p)?;
        for (u, t) in units.iter_mut().zip(&target) {
            for (a, ta) in u.a.iter_mut().zip(&t.a) {
                *a = (1.0 - config.rho) * *a + config.rho * ta;
            }
            u.b = (1.0 - config.rho) * u.b + config.rho * t.b;
        }
        trace.push(composite_objective(&units, samples));
    }
    Ok(FwOutcome { quotient: CompositePolynomial::new(p.dim, units)?, objective_trace: trace })
}

#[derive(Clone, Debug, Serialize)]
pub struct VectorDivisionConfig {
    pub terms: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for VectorDivisionConfig {
    fn default() -> Self {
        Self { terms: 5, iterations: 20, seed: 0 }
    }
}

/// Maximizer of `direction . a` over the box `0 <= a <= upper`; zero where `direction` is not positive.
pub fn box_maximizer(upper: &[f64], direction: &[f64]) -> Vec<f64> {
    upper.iter().zip(direction).map(|(&w, &s)| if s > 0.0 { w } else { 0.0 }).collect()
}

/// Division of `sum_i w_ki max(z_i, 0)` for every row `k` of the nonnegative `weights`.
///
/// Quotient terms have zero bias and slopes in the box `[0, w_k]`; the cluster step keeps
/// `w_ki` exactly where the summed cluster coordinate is positive.
/// Returns, per row, `terms` slope vectors.
pub fn vector_divide_simplified(
    weights: &[Vec<f64>],
    samples: &[Vec<f64>],
    config: &VectorDivisionConfig,
) -> Result<Vec<Vec<Vec<f64>>>> {
    let dim = weights.first().map(Vec::len).ok_or_else(|| Error::InvalidInput("no weight rows".into()))?;
    if config.terms == 0 || samples.len() < config.terms {
        return Err(Error::InvalidInput("need at least one term and as many samples as terms".into()));
    }
    for w in weights {
        check_dim(dim, w.len())?;
        if w.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
    }
    for z in samples {
        check_dim(dim, z.len())?;
    }
    let k_terms = config.terms;
    let divide_row = |(row, w): (usize, &Vec<f64>)| {
        let mut rng = crate::rng::substream(config.seed, row as u64);
        let mut assign: Vec<usize> = (0..samples.len()).map(|_| rng.random_range(0..k_terms)).collect();
        fill_empty(&mut assign, k_terms, &mut rng);
        let mut slopes = vec![vec![0.0; dim]; k_terms];
        for _ in 0..config.iterations {
            let mut sums = vec![vec![0.0; dim]; k_terms];
            for (z, &c) in samples.iter().zip(&assign) {
                for (s, v) in sums[c].iter_mut().zip(z) {
                    *s += v;
                }
            }
            for (slope, s) in slopes.iter_mut().zip(&sums) {
                *slope = box_maximizer(w, s);
            }
            let mut next: Vec<usize> = samples
                .iter()
                .map(|z| {
                    let mut best = 0;
                    let mut best_val = f64::NEG_INFINITY;
                    for (l, s) in slopes.iter().enumerate() {
                        let v = dot(s, z);
                        if v > best_val {
                            best = l;
                            best_val = v;
                        }
                    }
                    best
                })
                .collect();
            fill_empty(&mut next, k_terms, &mut rng);
            if next == assign {
                break;
            }
            assign = next;
        }
        slopes
    };
    Ok(weights.par_iter().enumerate().map(divide_row).collect())
}

fn fill_empty(assign: &mut [usize], k: usize, rng: &mut crate::rng::Rng) {
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

/// Operands for the quotient inequalities under sums and maxima.
#[derive(Clone, Debug)]
pub struct InequalityInstance {
    pub p1: TropicalPolynomial<Rational>,
    pub p2: TropicalPolynomial<Rational>,
    pub d: TropicalPolynomial<Rational>,
    pub p: TropicalPolynomial<Rational>,
    pub d1: TropicalPolynomial<Rational>,
    pub d2: TropicalPolynomial<Rational>,
    pub monomial: TropicalTerm<Rational>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    /// `lhs >= rhs` (or `lhs == rhs` for the shift identities) at every grid point.
    pub holds: bool,
    /// `lhs == rhs` at every grid point.
    pub equality: bool,
    /// Largest `rhs - lhs` over the grid (positive means violated).
    pub worst_violation: f64,
    pub witness: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InequalityReport {
    pub checks: Vec<InequalityCheck>,
    /// Both `p1 / d` and `p2 / d` leave no remainder.
    pub exact_dividends: bool,
    /// Both `p / d1` and `p / d2` leave no remainder.
    pub exact_divisors: bool,
}

impl InequalityReport {
    pub fn get(&self, name: &str) -> Option<&InequalityCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

type Ext = ExtReal<Rational>;

fn quotient(p: &TropicalPolynomial<Rational>, d: &TropicalPolynomial<Rational>) -> Result<(TropicalPolynomial<Rational>, bool)> {
    let r = exact_divide(&DivisionProblem::new(p.clone(), d.clone())?)?;
    Ok((r.quotient, r.remainder.is_neg_inf()))
}

fn compare(
    name: &'static str,
    grid: &[Vec<Rational>],
    identity: bool,
    mut sides: impl FnMut(&[Rational]) -> (Ext, Ext),
) -> InequalityCheck {
    let mut holds = true;
    let mut equality = true;
    let mut worst = f64::NEG_INFINITY;
    let mut witness = None;
    for x in grid {
        let (lhs, rhs) = sides(x);
        let gap = match (&lhs, &rhs) {
            (ExtReal::Finite(l), ExtReal::Finite(r)) => (r.clone() - l.clone()).to_f64(),
            (ExtReal::NegInf, ExtReal::NegInf) => 0.0,
            (ExtReal::NegInf, _) => f64::INFINITY,
            (_, ExtReal::NegInf) => f64::NEG_INFINITY,
        };
        if lhs != rhs {
            equality = false;
        }
        let ok = if identity { lhs == rhs } else { lhs >= rhs };
        if !ok && holds {
            holds = false;
            witness = Some(x.iter().map(Scalar::to_f64).collect());
        }
        worst = worst.max(gap);
    }
    InequalityCheck { name, holds, equality, worst_violation: worst, witness }
}

/// Evaluates the quotient inequalities on `grid` using exact division.
pub fn check_quotient_inequalities(inst: &InequalityInstance, grid: &[Vec<Rational>]) -> Result<InequalityReport> {
    let (q1, e1) = quotient(&inst.p1, &inst.d)?;
    let (q2, e2) = quotient(&inst.p2, &inst.d)?;
    let (q_sum_p, _) = quotient(&inst.p1.tropical_sum(&inst.p2)?, &inst.d)?;
    let (q_max_p, _) = quotient(&inst.p1.tropical_max(&inst.p2)?, &inst.d)?;
    let (qd1, f1) = quotient(&inst.p, &inst.d1)?;
    let (qd2, f2) = quotient(&inst.p, &inst.d2)?;
    let (q_sum_d, _) = quotient(&inst.p, &inst.d1.tropical_sum(&inst.d2)?)?;
    let (q_max_d, _) = quotient(&inst.p, &inst.d1.tropical_max(&inst.d2)?)?;

    let s = &inst.monomial;
    let zero = Rational::from_i64(0);
    let neg_a: Vec<Rational> = s.a.iter().map(|v| -v.clone()).collect();
    let (q_shift_p, _) = quotient(&inst.p.shift(&s.a, &s.b)?, &inst.d)?;
    let (q_base, _) = quotient(&inst.p, &inst.d)?;
    let (q_shift_d, _) = quotient(&inst.p, &inst.d.shift(&neg_a, &(zero - s.b.clone()))?)?;

    let checks = vec![
        compare("sum-dividend", grid, false, |x| (q_sum_p.eval(x), q1.eval(x).add(&q2.eval(x)).add(&inst.d.eval(x)))),
        compare("max-dividend", grid, false, |x| (q_max_p.eval(x), q1.eval(x).max(q2.eval(x)))),
        compare("sum-divisor", grid, false, |x| {
            let p = inst.p.eval(x);
            let rhs = match (qd1.eval(x).add(&qd2.eval(x)), p) {
                (ExtReal::Finite(v), ExtReal::Finite(pv)) => ExtReal::Finite(v - pv),
                _ => ExtReal::NegInf,
            };
            (q_sum_d.eval(x), rhs)
        }),
        compare("max-divisor", grid, false, |x| (q_max_d.eval(x), qd1.eval(x).min(qd2.eval(x)))),
        compare("shift-dividend", grid, true, |x| (q_shift_p.eval(x), q_base.eval(x).add(&ExtReal::Finite(s.eval(x))))),
        compare("shift-divisor", grid, true, |x| (q_shift_d.eval(x), q_base.eval(x).add(&ExtReal::Finite(s.eval(x))))),
    ];
    Ok(InequalityReport { checks, exact_dividends: e1 && e2, exact_divisors: f1 && f2 })
}
