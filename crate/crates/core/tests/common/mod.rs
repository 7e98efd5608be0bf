#![allow(dead_code)]

use rand::Rng as _;
use tropdiv::rng::Rng;
use tropdiv::scalar::{rat, rat_int};
use tropdiv::{DivisionProblem, Rational, TropicalPolynomial, TropicalTerm};

pub fn int_term(rng: &mut Rng, dim: usize, coef: i64, bias: i64) -> TropicalTerm<Rational> {
    TropicalTerm::new(
        (0..dim).map(|_| rat_int(rng.random_range(-coef..=coef))).collect(),
        rat_int(rng.random_range(-bias..=bias)),
    )
}

pub fn int_poly(rng: &mut Rng, dim: usize, terms: usize) -> TropicalPolynomial<Rational> {
    let terms = (0..terms).map(|_| int_term(rng, dim, 3, 3)).collect();
    TropicalPolynomial::new(dim, terms).unwrap()
}

/// A polynomial with between one and `max_terms` integer terms.
pub fn small_poly(rng: &mut Rng, dim: usize, max_terms: usize) -> TropicalPolynomial<Rational> {
    let terms = rng.random_range(1..=max_terms);
    int_poly(rng, dim, terms)
}

/// `p = max(d + q, r)` with at most `max_p` dividend terms, so the quotient is never `NEG_INF`.
pub fn nontrivial_problem(rng: &mut Rng, dim: usize, max_p: usize, max_d: usize) -> DivisionProblem<Rational> {
    let md = rng.random_range(1..=max_d);
    let d = int_poly(rng, dim, md);
    let mq = rng.random_range(1..=(max_p / d.len()).clamp(1, 2));
    let q = int_poly(rng, dim, mq);
    let mut p = d.tropical_sum(&q).unwrap();
    let room = max_p.saturating_sub(p.len());
    if room > 0 {
        let extra = small_poly(rng, dim, room);
        if p.len() + extra.len() <= max_p {
            p = p.tropical_max(&extra).unwrap();
        }
    }
    DivisionProblem::new(p, d).unwrap()
}

pub fn grid(dim: usize, per_axis: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let step = (hi - lo) / (per_axis - 1) as f64;
    let axis: Vec<f64> = (0..per_axis).map(|i| lo + step * i as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|x| axis.iter().map(move |&v| [x.clone(), vec![v]].concat())).collect();
    }
    out
}

pub fn rational_grid(dim: usize, lo: i64, hi: i64, denom: i64) -> Vec<Vec<Rational>> {
    let axis: Vec<Rational> = (lo * denom..=hi * denom).map(|k| rat(k, denom)).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out.into_iter().flat_map(|x| axis.iter().map(move |v| [x.clone(), vec![v.clone()]].concat())).collect();
    }
    out
}

fn value(terms: &[(Vec<f64>, f64)], x: &[f64]) -> f64 {
    terms.iter().map(|(a, b)| dot(a, x) + b).fold(f64::NEG_INFINITY, f64::max)
}

fn slope_max(terms: &[(Vec<f64>, f64)], r: &[f64]) -> f64 {
    terms.iter().map(|(a, _)| dot(a, r)).fold(f64::NEG_INFINITY, f64::max)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn plain(p: &TropicalPolynomial<Rational>) -> Vec<(Vec<f64>, f64)> {
    p.to_f64().terms().iter().map(|t| (t.a.clone(), t.b)).collect()
}

/// Largest convex minorant of `p - d`, found by brute force over affine minorants.
///
/// The epigraph of `p - d` is generated by its values at the vertices of the arrangement of
/// tie lines (plus feet of perpendiculars for cells without vertices) and by its asymptotic
/// slopes along enough directions. Every vertex of the set of minorants `(c, beta)` is cut out
/// by `dim + 1` of these constraints; all of them are enumerated.
pub struct Envelope {
    pub planes: Vec<(Vec<f64>, f64)>,
}

impl Envelope {
    pub fn new(p: &TropicalPolynomial<Rational>, d: &TropicalPolynomial<Rational>) -> Self {
        let n = p.dim();
        assert!(n == 1 || n == 2, "envelope oracle handles one or two dimensions");
        let (pt, dt) = (plain(p), plain(d));
        let f = |x: &[f64]| value(&pt, x) - value(&dt, x);
        let f_inf = |r: &[f64]| slope_max(&pt, r) - slope_max(&dt, r);

        let mut lines: Vec<(Vec<f64>, f64)> = Vec::new();
        for terms in [&pt, &dt] {
            for i in 0..terms.len() {
                for k in i + 1..terms.len() {
                    let g: Vec<f64> = terms[i].0.iter().zip(&terms[k].0).map(|(x, y)| x - y).collect();
                    if g.iter().any(|v| *v != 0.0) {
                        lines.push((g, terms[k].1 - terms[i].1));
                    }
                }
            }
        }
        let mut points = vec![vec![0.0; n]];
        for (g, h) in &lines {
            let norm = dot(g, g);
            points.push(g.iter().map(|v| v * h / norm).collect());
        }
        if n == 2 {
            for (i, (g1, h1)) in lines.iter().enumerate() {
                for (g2, h2) in &lines[i + 1..] {
                    let det = g1[0] * g2[1] - g1[1] * g2[0];
                    if det.abs() > 1e-12 {
                        points.push(vec![(h1 * g2[1] - h2 * g1[1]) / det, (g1[0] * h2 - g2[0] * h1) / det]);
                    }
                }
            }
        }
        let mut rays: Vec<Vec<f64>> = Vec::new();
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            rays.push(e.clone());
            rays.push(e.iter().map(|v| -v).collect());
        }
        if n == 2 {
            for (g, _) in &lines {
                for r in [vec![g[0], g[1]], vec![-g[0], -g[1]], vec![-g[1], g[0]], vec![g[1], -g[0]]] {
                    rays.push(r);
                }
            }
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        points.dedup_by(|a, b| a.iter().zip(b.iter()).all(|(x, y)| (x - y).abs() < 1e-12));

        // Constraint rows over (c, beta): row . (c, beta) <= rhs.
        let mut rows: Vec<(Vec<f64>, f64)> = points.iter().map(|v| ([v.clone(), vec![1.0]].concat(), f(v))).collect();
        rows.extend(rays.iter().map(|r| ([r.clone(), vec![0.0]].concat(), f_inf(r))));

        let m = rows.len();
        let feasible = |z: &[f64]| rows.iter().all(|(row, rhs)| dot(row, z) <= rhs + 1e-7 * (1.0 + rhs.abs()));
        let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
        let mut consider = |z: Vec<f64>| {
            if feasible(&z)
                && !planes.iter().any(|(c, b)| (b - z[n]).abs() < 1e-9 && c.iter().zip(&z).all(|(x, y)| (x - y).abs() < 1e-9))
            {
                planes.push((z[..n].to_vec(), z[n]));
            }
        };
        if n == 1 {
            for i in 0..m {
                for j in i + 1..m {
                    if let Some(z) = solve(&[&rows[i], &rows[j]]) {
                        consider(z);
                    }
                }
            }
        } else {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        if let Some(z) = solve(&[&rows[i], &rows[j], &rows[k]]) {
                            consider(z);
                        }
                    }
                }
            }
        }
        Self { planes }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.planes.iter().map(|(c, b)| dot(c, x) + b).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Gaussian elimination with partial pivoting on a square system given as rows.
fn solve(rows: &[&(Vec<f64>, f64)]) -> Option<Vec<f64>> {
    let k = rows.len();
    let mut m: Vec<Vec<f64>> = rows.iter().map(|(r, b)| [r.clone(), vec![*b]].concat()).collect();
    for col in 0..k {
        let piv = (col..k).max_by(|&a, &b| m[a][col].abs().partial_cmp(&m[b][col].abs()).unwrap())?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..k {
            if r != col {
                let factor = m[r][col] / m[col][col];
                for c in col..=k {
                    m[r][c] -= factor * m[col][c];
                }
            }
        }
    }
    Some((0..k).map(|r| m[r][k] / m[r][r]).collect())
}
