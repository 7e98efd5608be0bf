//! Exact polyhedral computations.
//!
//! An [`HRep`] is a system `A z >= b`; a [`VRep`] lists points and rays whose convex plus conic
//! hull is the polyhedron. Lines are stored as a pair of opposite rays.

pub mod dd;
pub mod linalg;

use num_traits::{One, Signed, Zero};

use crate::error::{check_dim, Error, Result};
use crate::lp::{solve_lp, LinearProgram, LpStatus};
use crate::scalar::{dot, primitive_direction, Rational, Scalar};

pub use dd::{cone_generators, ConeGenerators};

#[derive(Clone, Debug, PartialEq)]
pub struct HRep {
    pub dim: usize,
    /// Row `i` reads `rows[i] . z >= rhs[i]`.
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VRep {
    pub dim: usize,
    pub vertices: Vec<Vec<Rational>>,
    pub rays: Vec<Vec<Rational>>,
}

impl HRep {
    pub fn new(dim: usize) -> Self {
        Self { dim, rows: Vec::new(), rhs: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Rational>, rhs: Rational) -> Result<()> {
        check_dim(self.dim, row.len())?;
        self.rows.push(row);
        self.rhs.push(rhs);
        Ok(())
    }

    pub fn contains(&self, z: &[Rational]) -> bool {
        self.rows.iter().zip(&self.rhs).all(|(r, b)| dot(r, z) >= *b)
    }

    /// Every row holds on all of `v` (checks generators, hence the whole polyhedron).
    pub fn contains_vrep(&self, v: &VRep) -> bool {
        v.vertices.iter().all(|p| self.contains(p))
            && v.rays.iter().all(|r| self.rows.iter().all(|row| !dot(row, r).is_negative()))
    }

    /// Scales every row so its first nonzero coefficient is `+1` or `-1`, then sorts and dedups.
    pub fn normalized(&self) -> Self {
        let mut pairs: Vec<(Vec<Rational>, Rational)> = self
            .rows
            .iter()
            .zip(&self.rhs)
            .filter_map(|(row, b)| {
                let lead = row.iter().find(|x| !x.is_zero())?.abs();
                Some((row.iter().map(|x| x / &lead).collect(), b / &lead))
            })
            .collect();
        pairs.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pairs.dedup();
        let (rows, rhs) = pairs.into_iter().unzip();
        Self { dim: self.dim, rows, rhs }
    }
}

impl VRep {
    pub fn new(dim: usize) -> Self {
        Self { dim, vertices: Vec::new(), rays: Vec::new() }
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Sorted vertices and rays for comparisons.
    pub fn canonical(&self) -> Self {
        let mut v = self.clone();
        v.vertices.sort_by(|x, y| x.partial_cmp(y).unwrap());
        v.vertices.dedup();
        v.rays.sort_by(|x, y| x.partial_cmp(y).unwrap());
        v.rays.dedup();
        v
    }

    /// Dimension of the affine hull.
    pub fn affine_dimension(&self) -> Option<usize> {
        let base = self.vertices.first()?;
        let mut dirs: Vec<Vec<Rational>> =
            self.vertices[1..].iter().map(|v| v.iter().zip(base).map(|(x, y)| x - y).collect()).collect();
        dirs.extend(self.rays.iter().cloned());
        let refs: Vec<&[Rational]> = dirs.iter().map(|d| d.as_slice()).collect();
        Some(linalg::rank(&refs, self.dim))
    }

    /// Mean of the vertices plus the sum of the rays: a relative-interior point.
    ///
    /// Without vertices the ray sum is returned.
    pub fn interior_point(&self) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); self.dim];
        if !self.vertices.is_empty() {
            let k = Rational::from_i64(self.vertices.len() as i64);
            for v in &self.vertices {
                for (xi, vi) in x.iter_mut().zip(v) {
                    *xi += vi;
                }
            }
            for xi in x.iter_mut() {
                *xi /= &k;
            }
        }
        for r in &self.rays {
            for (xi, ri) in x.iter_mut().zip(r) {
                *xi += ri;
            }
        }
        x
    }

    /// Membership in `conv(vertices) + cone(rays)` by linear programming.
    pub fn contains(&self, z: &[Rational]) -> Result<bool> {
        check_dim(self.dim, z.len())?;
        if self.vertices.is_empty() {
            return Ok(false);
        }
        let nv = self.vertices.len();
        let nr = self.rays.len();
        let mut lp = LinearProgram::new(nv + nr);
        for k in 0..self.dim {
            let row: Vec<Rational> =
                self.vertices.iter().map(|v| v[k].clone()).chain(self.rays.iter().map(|r| r[k].clone())).collect();
            lp.eq(row, z[k].clone());
        }
        let mut simplex = vec![Rational::one(); nv];
        simplex.extend(vec![Rational::zero(); nr]);
        lp.eq(simplex, Rational::one());
        for j in 0..nv + nr {
            lp.nonneg(j);
        }
        Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
    }
}

/// Minimal generators of `{ z : A z >= b }`; an empty [`VRep`] when the system is infeasible.
pub fn vrep_of(h: &HRep) -> Result<VRep> {
    let n = h.dim;
    let mut rows = Vec::with_capacity(h.rows.len() + 1);
    for (row, b) in h.rows.iter().zip(&h.rhs) {
        check_dim(n, row.len())?;
        let mut r = Vec::with_capacity(n + 1);
        r.push(-b.clone());
        r.extend(row.iter().cloned());
        rows.push(r);
    }
    let mut t_row = vec![Rational::zero(); n + 1];
    t_row[0] = Rational::one();
    rows.push(t_row);

    let cone = cone_generators(&rows, n + 1);
    let mut out = VRep::new(n);
    for g in &cone.rays {
        if g[0].is_positive() {
            out.vertices.push(g[1..].iter().map(|x| x / &g[0]).collect());
        } else {
            out.rays.push(primitive_direction(&g[1..]));
        }
    }
    if out.vertices.is_empty() {
        return Ok(VRep::new(n));
    }
    for l in &cone.lineality {
        let d = primitive_direction(&l[1..]);
        out.rays.push(d.iter().map(|x| -x).collect());
        out.rays.push(d);
    }
    Ok(out.canonical())
}

/// Irredundant inequality description of `conv(vertices) + cone(rays)`.
pub fn hrep_of(v: &VRep) -> Result<HRep> {
    let n = v.dim;
    if v.vertices.is_empty() {
        return Err(Error::InvalidInput("a V-representation needs at least one vertex".into()));
    }
    let mut gens = Vec::with_capacity(v.vertices.len() + v.rays.len());
    for p in &v.vertices {
        check_dim(n, p.len())?;
        let mut g = vec![Rational::one()];
        g.extend(p.iter().cloned());
        gens.push(g);
    }
    for r in &v.rays {
        check_dim(n, r.len())?;
        let mut g = vec![Rational::zero()];
        g.extend(r.iter().cloned());
        gens.push(g);
    }
    let dual = cone_generators(&gens, n + 1);
    let mut h = HRep::new(n);
    for y in &dual.rays {
        if y[1..].iter().all(Zero::is_zero) {
            continue;
        }
        h.push(y[1..].to_vec(), -y[0].clone())?;
    }
    for l in &dual.lineality {
        if l[1..].iter().all(Zero::is_zero) {
            continue;
        }
        h.push(l[1..].to_vec(), -l[0].clone())?;
        h.push(l[1..].iter().map(|x| -x).collect(), l[0].clone())?;
    }
    Ok(h.normalized())
}

/// Minimal generators of the convex hull of a union of polyhedra.
pub fn hull_of_union(parts: &[VRep]) -> Result<VRep> {
    let union = union_generators(parts)?;
    if union.is_empty() {
        return Ok(union);
    }
    vrep_of(&hrep_of(&union)?)
}

/// All generators of the parts, unreduced.
pub fn union_generators(parts: &[VRep]) -> Result<VRep> {
    let dim = parts.first().map(|p| p.dim).unwrap_or(0);
    let mut union = VRep::new(dim);
    for p in parts {
        check_dim(dim, p.dim)?;
        if p.is_empty() {
            continue;
        }
        union.vertices.extend(p.vertices.iter().cloned());
        union.rays.extend(p.rays.iter().cloned());
    }
    if union.vertices.is_empty() {
        return Ok(VRep::new(dim));
    }
    Ok(union.canonical())
}

/// Indices `j` whose lifted point `(x_j, f_j)` is on the lower convex hull of all lifted points.
///
/// A point is dropped only when a convex combination of the other points reaches the same `x`
/// with a strictly smaller value, so constraints on the kept points imply them for all points.
pub fn lower_hull_indices<S: Scalar>(points: &[Vec<S>], values: &[S]) -> Result<Vec<usize>> {
    check_dim(points.len(), values.len())?;
    let mut keep = Vec::new();
    for j in 0..points.len() {
        if !dominated_from_below(points, values, j)? {
            keep.push(j);
        }
    }
    Ok(keep)
}

fn dominated_from_below<S: Scalar>(points: &[Vec<S>], values: &[S], j: usize) -> Result<bool> {
    let others: Vec<usize> = (0..points.len()).filter(|&k| k != j).collect();
    if others.is_empty() {
        return Ok(false);
    }
    let dim = points[j].len();
    let mut lp = LinearProgram::new(others.len());
    lp.minimize(others.iter().map(|&k| values[k].clone()).collect());
    for c in 0..dim {
        lp.eq(others.iter().map(|&k| points[k][c].clone()).collect(), points[j][c].clone());
    }
    lp.eq(vec![S::one(); others.len()], S::one());
    for v in 0..others.len() {
        lp.nonneg(v);
    }
    let out = solve_lp(&lp)?;
    if !out.is_optimal() {
        return Ok(false);
    }
    let fj = values[j].clone();
    let margin = S::feas_tol() * (S::one() + fj.abs_val());
    Ok(fj - out.objective > margin)
}

/// Indices of the vertices of `conv(points)`; among duplicates the first copy is kept.
pub fn extreme_point_indices<S: Scalar>(points: &[Vec<S>]) -> Result<Vec<usize>> {
    let mut unique: Vec<usize> = Vec::new();
    for (j, p) in points.iter().enumerate() {
        if !unique.iter().any(|&u| points[u].iter().zip(p).all(|(x, y)| x.approx_eq(y))) {
            unique.push(j);
        }
    }
    let mut keep = Vec::new();
    for &j in &unique {
        let others: Vec<usize> = unique.iter().copied().filter(|&k| k != j).collect();
        if others.is_empty() {
            keep.push(j);
            continue;
        }
        let mut lp = LinearProgram::new(others.len());
        for c in 0..points[j].len() {
            lp.eq(others.iter().map(|&k| points[k][c].clone()).collect(), points[j][c].clone());
        }
        lp.eq(vec![S::one(); others.len()], S::one());
        for v in 0..others.len() {
            lp.nonneg(v);
        }
        if solve_lp(&lp)?.status != LpStatus::Optimal {
            keep.push(j);
        }
    }
    Ok(keep)
}
