//! Tropical polynomials `p(x) = max_i (a_i . x + b_i)` and the division problem.

use std::cmp::Ordering;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::scalar::{dot, ExtReal, Rational, Scalar};
use crate::wire::{vec_from_wire, vec_to_wire, NumWire, WireScalar};

#[derive(Clone, Debug, PartialEq)]
pub struct TropicalTerm<S> {
    pub a: Vec<S>,
    pub b: S,
}

impl<S: Scalar> TropicalTerm<S> {
    pub fn new(a: Vec<S>, b: S) -> Self {
        Self { a, b }
    }

    pub fn eval(&self, x: &[S]) -> S {
        dot(&self.a, x) + self.b.clone()
    }

    /// Coefficients followed by the bias.
    pub fn lifted(&self) -> Vec<S> {
        let mut v = self.a.clone();
        v.push(self.b.clone());
        v
    }

    fn same_exponent(&self, other: &Self) -> bool {
        self.a.iter().zip(&other.a).all(|(x, y)| x.approx_eq(y))
    }

    pub fn to_f64(&self) -> TropicalTerm<f64> {
        TropicalTerm { a: self.a.iter().map(Scalar::to_f64).collect(), b: self.b.to_f64() }
    }
}

fn cmp_terms<S: Scalar>(x: &TropicalTerm<S>, y: &TropicalTerm<S>) -> Ordering {
    for (u, v) in x.a.iter().zip(&y.a) {
        match u.partial_cmp(v).unwrap_or(Ordering::Equal) {
            Ordering::Equal => {}
            o => return o,
        }
    }
    x.b.partial_cmp(&y.b).unwrap_or(Ordering::Equal)
}

/// A tropical polynomial. The empty term list is the tropical zero `NEG_INF`.
#[derive(Clone, Debug, PartialEq)]
pub struct TropicalPolynomial<S> {
    dim: usize,
    terms: Vec<TropicalTerm<S>>,
}

impl<S: Scalar> TropicalPolynomial<S> {
    /// Builds a polynomial, merging terms with equal coefficient vectors (keeping the larger bias).
    pub fn new(dim: usize, terms: Vec<TropicalTerm<S>>) -> Result<Self> {
        let mut kept: Vec<TropicalTerm<S>> = Vec::with_capacity(terms.len());
        for t in terms {
            check_dim(dim, t.a.len())?;
            match kept.iter_mut().find(|k| k.same_exponent(&t)) {
                Some(k) => {
                    if t.b > k.b {
                        k.b = t.b;
                    }
                }
                None => kept.push(t),
            }
        }
        Ok(Self { dim, terms: kept })
    }

    pub fn neg_inf(dim: usize) -> Self {
        Self { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        Self { dim, terms: vec![TropicalTerm::new(vec![S::zero(); dim], c)] }
    }

    pub fn monomial(a: Vec<S>, b: S) -> Self {
        Self { dim: a.len(), terms: vec![TropicalTerm::new(a, b)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[TropicalTerm<S>] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_neg_inf(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, x: &[S]) -> ExtReal<S> {
        self.terms.iter().map(|t| t.eval(x)).fold(ExtReal::NegInf, |acc, v| acc.max(ExtReal::Finite(v)))
    }

    /// Index of the first term attaining the maximum at `x`.
    pub fn argmax(&self, x: &[S]) -> Option<usize> {
        let mut best: Option<(usize, S)> = None;
        for (i, t) in self.terms.iter().enumerate() {
            let v = t.eval(x);
            if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
                best = Some((i, v));
            }
        }
        best.map(|(i, _)| i)
    }

    /// Ordinary sum `self + other`, a tropical product.
    pub fn tropical_sum(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut terms = Vec::with_capacity(self.len() * other.len());
        for s in &self.terms {
            for t in &other.terms {
                let a = s.a.iter().zip(&t.a).map(|(x, y)| x.clone() + y.clone()).collect();
                terms.push(TropicalTerm::new(a, s.b.clone() + t.b.clone()));
            }
        }
        Self::new(self.dim, terms)
    }

    /// Pointwise maximum, a tropical sum.
    pub fn tropical_max(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim, other.dim)?;
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.dim, terms)
    }

    /// Adds an affine function `a . x + b` to every term.
    pub fn shift(&self, a: &[S], b: &S) -> Result<Self> {
        check_dim(self.dim, a.len())?;
        let terms = self
            .terms
            .iter()
            .map(|t| {
                let na = t.a.iter().zip(a).map(|(x, y)| x.clone() + y.clone()).collect();
                TropicalTerm::new(na, t.b.clone() + b.clone())
            })
            .collect();
        Self::new(self.dim, terms)
    }

    pub fn newton_points(&self) -> Vec<Vec<S>> {
        self.terms.iter().map(|t| t.a.clone()).collect()
    }

    pub fn enewt_points(&self) -> Vec<Vec<S>> {
        self.terms.iter().map(TropicalTerm::lifted).collect()
    }

    /// Terms sorted lexicographically; equal functions built from the same terms compare equal.
    pub fn canonical(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(cmp_terms);
        Self { dim: self.dim, terms }
    }

    /// `sup { b : (a, b) in ENewt(p) }`, `NEG_INF` when `a` lies outside `Newt(p)`.
    pub fn enf_value(&self, a: &[S]) -> Result<ExtReal<S>> {
        check_dim(self.dim, a.len())?;
        if self.is_neg_inf() {
            return Ok(ExtReal::NegInf);
        }
        let m = self.len();
        let mut lp = LinearProgram::new(m);
        lp.maximize(self.terms.iter().map(|t| t.b.clone()).collect());
        for k in 0..self.dim {
            lp.eq(self.terms.iter().map(|t| t.a[k].clone()).collect(), a[k].clone());
        }
        lp.eq(vec![S::one(); m], S::one());
        for i in 0..m {
            lp.nonneg(i);
        }
        let out = solve_lp(&lp)?;
        match out.status {
            LpStatus::Optimal => Ok(ExtReal::Finite(out.objective)),
            LpStatus::Infeasible => Ok(ExtReal::NegInf),
            LpStatus::Unbounded => Err(Error::Invariant("ENF program unbounded".into())),
        }
    }

    /// Whether `point` lies in the Newton polytope.
    pub fn newton_contains(&self, point: &[S]) -> Result<bool> {
        Ok(!self.enf_value(point)?.is_neg_inf())
    }

    /// Removes terms that never strictly exceed the maximum of the others.
    ///
    /// A term is dropped when a convex combination of the remaining terms has the same
    /// coefficient vector and at least the same bias.
    pub fn prune_dominated(&self) -> Result<Self> {
        let mut terms = self.terms.clone();
        let mut i = 0;
        while i < terms.len() {
            if terms.len() == 1 {
                break;
            }
            let others: Vec<TropicalTerm<S>> =
                terms.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, t)| t.clone()).collect();
            let rest = Self { dim: self.dim, terms: others };
            let dominated = match rest.enf_value(&terms[i].a)? {
                ExtReal::Finite(v) => v >= terms[i].b.clone() - S::eq_tol(),
                ExtReal::NegInf => false,
            };
            if dominated {
                terms.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(Self { dim: self.dim, terms })
    }

    pub fn to_f64(&self) -> TropicalPolynomial<f64> {
        TropicalPolynomial { dim: self.dim, terms: self.terms.iter().map(TropicalTerm::to_f64).collect() }
    }

    /// Compares values on a probe set.
    pub fn agrees_on(&self, other: &Self, probes: &[Vec<S>]) -> bool {
        probes.iter().all(|x| match (self.eval(x), other.eval(x)) {
            (ExtReal::NegInf, ExtReal::NegInf) => true,
            (ExtReal::Finite(u), ExtReal::Finite(v)) => u.approx_eq(&v),
            _ => false,
        })
    }
}

impl TropicalPolynomial<f64> {
    pub fn to_rational(&self) -> TropicalPolynomial<Rational> {
        TropicalPolynomial {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|t| TropicalTerm::new(t.a.iter().map(|v| Rational::from_f64(*v)).collect(), Rational::from_f64(t.b)))
                .collect(),
        }
    }
}

impl<S: Scalar> std::fmt::Display for TropicalPolynomial<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_neg_inf() {
            return write!(f, "-inf");
        }
        write!(f, "max(")?;
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (k, c) in t.a.iter().enumerate() {
                if k > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, "]x + {}", t.b)?;
        }
        write!(f, ")")
    }
}

#[derive(Serialize, Deserialize)]
struct TermWire {
    a: Vec<NumWire>,
    b: Option<NumWire>,
}

#[derive(Serialize, Deserialize)]
struct PolyWire {
    dim: usize,
    terms: Vec<TermWire>,
}

impl<S: WireScalar> Serialize for TropicalPolynomial<S> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        PolyWire {
            dim: self.dim,
            terms: self.terms.iter().map(|t| TermWire { a: vec_to_wire(&t.a), b: Some(t.b.to_wire()) }).collect(),
        }
        .serialize(ser)
    }
}

impl<'de, S: WireScalar> Deserialize<'de> for TropicalPolynomial<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = PolyWire::deserialize(de)?;
        let mut terms = Vec::with_capacity(w.terms.len());
        for t in w.terms {
            let a = vec_from_wire(&t.a).map_err(serde::de::Error::custom)?;
            match t.b {
                None => continue,
                Some(b) if b.is_neg_inf() => continue,
                Some(b) => terms.push(TropicalTerm::new(a, S::from_wire(&b).map_err(serde::de::Error::custom)?)),
            }
        }
        TropicalPolynomial::new(w.dim, terms).map_err(serde::de::Error::custom)
    }
}

/// Dividend `p` and divisor `d` of a division `p / d`.
#[derive(Clone, Debug)]
pub struct DivisionProblem<S> {
    pub dividend: TropicalPolynomial<S>,
    pub divisor: TropicalPolynomial<S>,
}

impl<S: Scalar> DivisionProblem<S> {
    pub fn new(dividend: TropicalPolynomial<S>, divisor: TropicalPolynomial<S>) -> Result<Self> {
        check_dim(dividend.dim(), divisor.dim())?;
        if divisor.is_neg_inf() {
            return Err(Error::EmptyDivisor);
        }
        Ok(Self { dividend, divisor })
    }

    pub fn dim(&self) -> usize {
        self.dividend.dim()
    }

    /// `f(x) = p(x) - d(x)`.
    pub fn difference(&self, x: &[S]) -> ExtReal<S> {
        match (self.dividend.eval(x), self.divisor.eval(x)) {
            (ExtReal::Finite(p), ExtReal::Finite(d)) => ExtReal::Finite(p - d),
            _ => ExtReal::NegInf,
        }
    }

    /// Whether `c + Newt(d)` fits inside `Newt(p)`, i.e. whether `c` belongs to the set `C`.
    pub fn admits_slope(&self, c: &[S]) -> Result<bool> {
        check_dim(self.dim(), c.len())?;
        for t in self.divisor.terms() {
            let shifted: Vec<S> = c.iter().zip(&t.a).map(|(x, y)| x.clone() + y.clone()).collect();
            if !self.dividend.newton_contains(&shifted)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `l(a) = inf_x f(x) - a . x`, estimated on `probes`; exactly `NEG_INF` when `a` is outside `C`.
    pub fn lower_bound_l(&self, a: &[S], probes: &[Vec<S>]) -> Result<ExtReal<S>> {
        if self.dividend.is_neg_inf() || !self.admits_slope(a)? {
            return Ok(ExtReal::NegInf);
        }
        let mut best: Option<S> = None;
        for x in probes {
            check_dim(self.dim(), x.len())?;
            if let ExtReal::Finite(v) = self.difference(x) {
                let v = v - dot(a, x);
                if best.as_ref().is_none_or(|b| v < *b) {
                    best = Some(v);
                }
            }
        }
        best.map(ExtReal::Finite).ok_or_else(|| Error::InvalidInput("empty probe grid".into()))
    }
}

/// Quotient and remainder with `p = (d + q) max r`.
#[derive(Clone, Debug)]
pub struct DivisionResult<S> {
    pub quotient: TropicalPolynomial<S>,
    pub remainder: TropicalPolynomial<S>,
    pub nontrivial: bool,
    pub effective: bool,
    /// `false` for sample-based results.
    pub exact: bool,
    /// Residual `e(t)` after each iteration of a sample-based run.
    pub error_trace: Vec<f64>,
}

#[derive(Serialize)]
#[serde(bound = "")]
struct ResultWire<'a, S: WireScalar> {
    quotient: &'a TropicalPolynomial<S>,
    remainder: &'a TropicalPolynomial<S>,
    nontrivial: bool,
    effective: bool,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    approximate: bool,
    #[serde(skip_serializing_if = "<[f64]>::is_empty")]
    error_trace: &'a [f64],
}

#[derive(Deserialize)]
#[serde(bound = "")]
struct ResultWireOwned<S: WireScalar> {
    quotient: TropicalPolynomial<S>,
    remainder: TropicalPolynomial<S>,
    nontrivial: bool,
    effective: bool,
    #[serde(default)]
    approximate: bool,
    #[serde(default)]
    error_trace: Vec<f64>,
}

impl<S: WireScalar> Serialize for DivisionResult<S> {
    fn serialize<Z: Serializer>(&self, ser: Z) -> std::result::Result<Z::Ok, Z::Error> {
        ResultWire {
            quotient: &self.quotient,
            remainder: &self.remainder,
            nontrivial: self.nontrivial,
            effective: self.effective,
            approximate: !self.exact,
            error_trace: &self.error_trace,
        }
        .serialize(ser)
    }
}

impl<'de, S: WireScalar> Deserialize<'de> for DivisionResult<S> {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = ResultWireOwned::<S>::deserialize(de)?;
        Ok(Self {
            quotient: w.quotient,
            remainder: w.remainder,
            nontrivial: w.nontrivial,
            effective: w.effective,
            exact: !w.approximate,
            error_trace: w.error_trace,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int};

    fn poly1(terms: &[(i64, i64)]) -> TropicalPolynomial<Rational> {
        TropicalPolynomial::new(1, terms.iter().map(|&(a, b)| TropicalTerm::new(vec![rat_int(a)], rat_int(b))).collect()).unwrap()
    }

    #[test]
    fn evaluates_example_dividend() {
        let p = poly1(&[(-2, -1), (0, 1), (1, 1), (3, -3)]);
        assert_eq!(p.eval(&[rat_int(2)]), ExtReal::Finite(rat_int(3)));
        assert_eq!(p.eval(&[rat_int(-3)]), ExtReal::Finite(rat_int(5)));
        assert!(TropicalPolynomial::<Rational>::neg_inf(1).eval(&[rat_int(0)]).is_neg_inf());
    }

    #[test]
    fn sum_of_relus_dedups() {
        let p = poly1(&[(1, 0), (0, 0)]);
        let s = p.tropical_sum(&p).unwrap().canonical();
        assert_eq!(s, poly1(&[(0, 0), (1, 0), (2, 0)]));
        let pruned = s.prune_dominated().unwrap().canonical();
        assert_eq!(pruned, poly1(&[(0, 0), (2, 0)]));
    }

    #[test]
    fn neg_inf_is_identity_and_absorbing() {
        let p = poly1(&[(1, 2), (-1, 0)]);
        let z = TropicalPolynomial::neg_inf(1);
        assert_eq!(p.tropical_max(&z).unwrap(), p);
        assert!(p.tropical_sum(&z).unwrap().is_neg_inf());
    }

    #[test]
    fn enf_of_segment() {
        let p = poly1(&[(0, 0), (2, 4)]);
        assert_eq!(p.enf_value(&[rat_int(1)]).unwrap(), ExtReal::Finite(rat_int(2)));
        assert_eq!(p.enf_value(&[rat(1, 2)]).unwrap(), ExtReal::Finite(rat_int(1)));
        assert!(p.enf_value(&[rat_int(3)]).unwrap().is_neg_inf());
    }

    #[test]
    fn lower_bound_example() {
        let p = poly1(&[(-2, -1), (0, 1), (1, 1), (3, -3)]);
        let d = poly1(&[(1, 0), (2, -1)]);
        let prob = DivisionProblem::new(p, d).unwrap();
        let probes: Vec<Vec<Rational>> = (-40..=40).map(|k| vec![rat(k, 4)]).collect();
        assert_eq!(prob.lower_bound_l(&[rat_int(-3)], &probes).unwrap(), ExtReal::Finite(rat_int(-1)));
        assert_eq!(prob.lower_bound_l(&[rat_int(1)], &probes).unwrap(), ExtReal::Finite(rat_int(-2)));
        assert!(prob.lower_bound_l(&[rat_int(2)], &probes).unwrap().is_neg_inf());
    }

    #[test]
    fn json_round_trip_and_neg_inf_terms() {
        let text = r#"{"dim":1,"terms":[{"a":[0.5],"b":"-1/3"},{"a":[2],"b":null},{"a":[1],"b":"-inf"}]}"#;
        let p: TropicalPolynomial<Rational> = serde_json::from_str(text).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p.terms()[0].a[0], rat(1, 2));
        let back: TropicalPolynomial<Rational> = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let empty: TropicalPolynomial<f64> = serde_json::from_str(r#"{"dim":3,"terms":[]}"#).unwrap();
        assert!(empty.is_neg_inf());
    }

    #[test]
    fn rejects_mismatched_dimensions() {
        let r = TropicalPolynomial::new(2, vec![TropicalTerm::new(vec![1.0], 0.0)]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
