//! Exact division by convexification of `f = p - d`.
//!
//! `p - d` is affine on every cell where one dividend term and one divisor term are maximal.
//! The quotient is read off the facets of the convex hull of the epigraphs of these affine
//! pieces, and the remainder keeps the dividend terms that stay strictly above `d + q`
//! somewhere.

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::poly::{DivisionProblem, DivisionResult, TropicalPolynomial, TropicalTerm};
use crate::polyhedral::{hrep_of, union_generators, vrep_of, HRep, VRep};
use crate::scalar::{dot, ExtReal, Rational};

/// Region where dividend term `dividend_term` and divisor term `divisor_term` attain both maxima.
#[derive(Clone, Debug)]
pub struct Cell {
    pub dividend_term: usize,
    pub divisor_term: usize,
    pub hrep: HRep,
    pub vrep: VRep,
    pub interior: Vec<Rational>,
    pub full_dimensional: bool,
}

/// Intermediate objects of an exact division, kept for inspection.
#[derive(Clone, Debug)]
pub struct ExactDivision {
    pub result: DivisionResult<Rational>,
    pub cells: Vec<Cell>,
    /// Generators of the convex hull of the cell epigraphs.
    pub hull: VRep,
    /// Facets of that hull.
    pub facets: HRep,
}

fn cell_hrep(problem: &DivisionProblem<Rational>, i: usize, j: usize) -> HRep {
    let n = problem.dim();
    let mut h = HRep::new(n);
    let mut add_rows = |terms: &[TropicalTerm<Rational>], k: usize| {
        for (o, other) in terms.iter().enumerate() {
            if o == k {
                continue;
            }
            let row: Vec<Rational> = terms[k].a.iter().zip(&other.a).map(|(x, y)| x - y).collect();
            let rhs = &other.b - &terms[k].b;
            h.rows.push(row);
            h.rhs.push(rhs);
        }
    };
    add_rows(problem.dividend.terms(), i);
    add_rows(problem.divisor.terms(), j);
    h
}

/// Nonempty cells, each with a relative-interior point.
pub fn partition_cells(problem: &DivisionProblem<Rational>) -> Result<Vec<Cell>> {
    let n = problem.dim();
    let pairs: Vec<(usize, usize)> =
        (0..problem.dividend.len()).flat_map(|i| (0..problem.divisor.len()).map(move |j| (i, j))).collect();
    let cells: Vec<Option<Cell>> = pairs
        .par_iter()
        .map(|&(i, j)| -> Result<Option<Cell>> {
            let hrep = cell_hrep(problem, i, j);
            let vrep = vrep_of(&hrep)?;
            if vrep.is_empty() {
                return Ok(None);
            }
            let interior = vrep.interior_point();
            let full_dimensional = vrep.affine_dimension() == Some(n);
            Ok(Some(Cell { dividend_term: i, divisor_term: j, hrep, vrep, interior, full_dimensional }))
        })
        .collect::<Result<_>>()?;
    Ok(cells.into_iter().flatten().collect())
}

/// Generators of `{ (x, z) : x in cell, z >= f(x) }`, obtained by lifting the cell generators.
pub fn epigraph_generators(problem: &DivisionProblem<Rational>, cell: &Cell) -> VRep {
    let p = &problem.dividend.terms()[cell.dividend_term];
    let d = &problem.divisor.terms()[cell.divisor_term];
    let slope: Vec<Rational> = p.a.iter().zip(&d.a).map(|(x, y)| x - y).collect();
    let offset = &p.b - &d.b;
    let n = problem.dim();
    let mut out = VRep::new(n + 1);
    for v in &cell.vrep.vertices {
        let mut g = v.clone();
        g.push(dot(&slope, v) + &offset);
        out.vertices.push(g);
    }
    for r in &cell.vrep.rays {
        let mut g = r.clone();
        g.push(dot(&slope, r));
        out.rays.push(g);
    }
    let mut up = vec![Rational::zero(); n + 1];
    up[n] = Rational::one();
    out.rays.push(up);
    out
}

/// Reads the quotient terms `z >= a . x + b` off the facets of the epigraph hull.
pub fn quotient_from_facets(facets: &HRep) -> Result<TropicalPolynomial<Rational>> {
    let n = facets.dim - 1;
    let mut terms = Vec::with_capacity(facets.rows.len());
    for (row, rhs) in facets.rows.iter().zip(&facets.rhs) {
        let az = &row[n];
        if !az.is_positive() {
            return Err(Error::Invariant(format!("epigraph hull has a facet without an upward normal: {row:?}")));
        }
        let a = row[..n].iter().map(|x| -x / az).collect();
        terms.push(TropicalTerm::new(a, rhs / az));
    }
    Ok(TropicalPolynomial::new(n, terms)?.canonical())
}

pub fn exact_divide(problem: &DivisionProblem<Rational>) -> Result<DivisionResult<Rational>> {
    Ok(exact_divide_detailed(problem)?.result)
}

pub fn exact_divide_detailed(problem: &DivisionProblem<Rational>) -> Result<ExactDivision> {
    let n = problem.dim();
    if problem.dividend.is_neg_inf() {
        let empty = TropicalPolynomial::neg_inf(n);
        return Ok(ExactDivision {
            result: DivisionResult {
                quotient: empty.clone(),
                remainder: empty,
                nontrivial: false,
                effective: false,
                exact: true,
                error_trace: Vec::new(),
            },
            cells: Vec::new(),
            hull: VRep::new(n + 1),
            facets: HRep::new(n + 1),
        });
    }

    let cells = partition_cells(problem)?;
    let epigraphs: Vec<VRep> = cells.iter().map(|c| epigraph_generators(problem, c)).collect();
    let union = union_generators(&epigraphs)?;
    let facets = hrep_of(&union)?;
    let hull = vrep_of(&facets)?;
    let quotient = quotient_from_facets(&facets)?;

    let dq = problem.divisor.tropical_sum(&quotient)?;
    let mut keep = vec![false; problem.dividend.len()];
    let probes: Vec<&Vec<Rational>> = cells.iter().filter(|c| c.full_dimensional).map(|c| &c.interior).collect();
    for cell in cells.iter().filter(|c| c.full_dimensional) {
        if keep[cell.dividend_term] {
            continue;
        }
        if problem.dividend.eval(&cell.interior) > dq.eval(&cell.interior) {
            keep[cell.dividend_term] = true;
        }
    }
    let remainder_terms: Vec<TropicalTerm<Rational>> =
        problem.dividend.terms().iter().zip(&keep).filter(|(_, &k)| k).map(|(t, _)| t.clone()).collect();
    let remainder = TropicalPolynomial::new(n, remainder_terms)?.canonical();

    let effective = probes.iter().any(|x| remainder.eval(x) < problem.dividend.eval(x));
    let result = DivisionResult {
        nontrivial: !quotient.is_neg_inf(),
        quotient,
        remainder,
        effective,
        exact: true,
        error_trace: Vec::new(),
    };
    Ok(ExactDivision { result, cells, hull, facets })
}

pub fn is_nontrivial<S: crate::scalar::Scalar>(result: &DivisionResult<S>) -> bool {
    !result.quotient.terms().is_empty()
}

/// Whether the remainder differs from the dividend at one of the probe points.
pub fn is_effective(result: &DivisionResult<Rational>, problem: &DivisionProblem<Rational>, probes: &[Vec<Rational>]) -> bool {
    probes.iter().any(|x| {
        let r = result.remainder.eval(x);
        let p = problem.dividend.eval(x);
        match (&r, &p) {
            (ExtReal::NegInf, ExtReal::NegInf) => false,
            _ => r < p,
        }
    })
}
