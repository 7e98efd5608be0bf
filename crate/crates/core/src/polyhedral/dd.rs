//! Double description method for cones `{ y : R y >= 0 }` over exact rationals.
//!
//! Rows are inserted one at a time; a pair of rays straddling the new hyperplane is combined
//! only when the two rays are adjacent, decided by the rank of their common active rows.

use num_traits::{Signed, Zero};

use super::linalg::{inverse, nullspace, rank, rref};
use crate::scalar::{dot, primitive_direction, Rational};

/// Generators of a polyhedral cone: extreme rays of its pointed part plus a lineality basis.
#[derive(Clone, Debug, Default)]
pub struct ConeGenerators {
    pub rays: Vec<Vec<Rational>>,
    pub lineality: Vec<Vec<Rational>>,
}

struct Ray {
    v: Vec<Rational>,
    zeros: Vec<u64>,
}

fn bit_set(bits: &mut [u64], i: usize) {
    bits[i / 64] |= 1 << (i % 64);
}

fn bits_and(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn bits_count(a: &[u64]) -> usize {
    a.iter().map(|w| w.count_ones() as usize).sum()
}

fn bits_iter(a: &[u64]) -> impl Iterator<Item = usize> + '_ {
    a.iter().enumerate().flat_map(|(w, &word)| (0..64).filter(move |b| word & (1 << b) != 0).map(move |b| w * 64 + b))
}

pub fn cone_generators(rows: &[Vec<Rational>], dim: usize) -> ConeGenerators {
    let lineality: Vec<Vec<Rational>> = nullspace(rows, dim).into_iter().map(|v| primitive_direction(&v)).collect();
    if lineality.len() == dim {
        return ConeGenerators { rays: Vec::new(), lineality };
    }

    let mut all: Vec<Vec<Rational>> = rows.iter().filter(|r| r.iter().any(|x| !x.is_zero())).cloned().collect();
    for l in &lineality {
        all.push(l.clone());
        all.push(l.iter().map(|x| -x).collect());
    }
    let words = all.len().div_ceil(64).max(1);

    // Greedy choice of `dim` independent rows for the initial simplicial cone.
    let mut basis: Vec<usize> = Vec::with_capacity(dim);
    let mut echelon: Vec<Vec<Rational>> = Vec::new();
    for (i, row) in all.iter().enumerate() {
        let mut trial = echelon.clone();
        trial.push(row.clone());
        if rref(&mut trial, dim).len() > echelon.len() {
            trial.retain(|r| r.iter().any(|x| !x.is_zero()));
            echelon = trial;
            basis.push(i);
            if basis.len() == dim {
                break;
            }
        }
    }
    debug_assert_eq!(basis.len(), dim);

    let mb: Vec<Vec<Rational>> = basis.iter().map(|&i| all[i].clone()).collect();
    let inv = inverse(&mb).expect("independent rows");
    let mut rays: Vec<Ray> = (0..dim)
        .map(|k| {
            let v: Vec<Rational> = (0..dim).map(|r| inv[r][k].clone()).collect();
            let mut zeros = vec![0u64; words];
            for (pos, &row_idx) in basis.iter().enumerate() {
                if pos != k {
                    bit_set(&mut zeros, row_idx);
                }
            }
            Ray { v: primitive_direction(&v), zeros }
        })
        .collect();

    let in_basis = |i: usize| basis.contains(&i);
    for (h_idx, h) in all.iter().enumerate() {
        if in_basis(h_idx) {
            continue;
        }
        let vals: Vec<Rational> = rays.iter().map(|r| dot(h, &r.v)).collect();
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len());
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_positive()).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| vals[i].is_negative()).collect();

        for &p in &pos {
            for &n in &neg {
                let common = bits_and(&rays[p].zeros, &rays[n].zeros);
                if dim >= 2 && bits_count(&common) < dim - 2 {
                    continue;
                }
                let active: Vec<&[Rational]> = bits_iter(&common).map(|i| all[i].as_slice()).collect();
                if rank(&active, dim) != dim.saturating_sub(2) {
                    continue;
                }
                let v: Vec<Rational> = rays[n].v.iter().zip(&rays[p].v).map(|(xn, xp)| &vals[p] * xn - &vals[n] * xp).collect();
                let mut zeros = common;
                bit_set(&mut zeros, h_idx);
                next.push(Ray { v: primitive_direction(&v), zeros });
            }
        }
        for (i, mut r) in rays.into_iter().enumerate() {
            if vals[i].is_negative() {
                continue;
            }
            if vals[i].is_zero() {
                bit_set(&mut r.zeros, h_idx);
            }
            next.push(r);
        }
        rays = next;
    }

    ConeGenerators { rays: rays.into_iter().map(|r| r.v).collect(), lineality }
}
