//! One-hidden-layer networks as differences and vectors of composite polynomials.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::composite::{CompositePolynomial, ReluUnit};
use crate::error::{check_dim, Error, Result};
use crate::nn::network::{DenseLayer, NetworkSpec};

/// Scalar network output written as `positive(x) - negative(x) + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TropicalPair {
    pub positive: CompositePolynomial,
    pub negative: CompositePolynomial,
    pub offset: f64,
    pub class_labels: Vec<i64>,
}

impl TropicalPair {
    pub fn dim(&self) -> usize {
        self.positive.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.positive.eval(x) - self.negative.eval(x) + self.offset
    }
}

/// Splits the hidden units by the sign of their output weight and folds its magnitude in.
pub fn to_tropical_pair(net: &NetworkSpec) -> Result<TropicalPair> {
    let (hidden, out) = net.single_hidden()?;
    if out.outputs() != 1 {
        return Err(Error::InvalidInput(format!("expected a scalar output, found {} outputs", out.outputs())));
    }
    let n = net.input_dim;
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    for ((w, beta), &v) in hidden.weights.iter().zip(&hidden.b).zip(&out.weights[0]) {
        let unit = ReluUnit::new(w.iter().map(|x| v.abs() * x).collect(), v.abs() * beta);
        if v > 0.0 {
            positive.push(unit);
        } else if v < 0.0 {
            negative.push(unit);
        }
    }
    Ok(TropicalPair {
        positive: CompositePolynomial::new(n, positive)?,
        negative: CompositePolynomial::new(n, negative)?,
        offset: out.b[0],
        class_labels: net.labels(),
    })
}

/// Replaces the output layer by the single logit difference of classes `first` and `second`.
pub fn binary_reduce(net: &NetworkSpec, first: i64, second: i64) -> Result<NetworkSpec> {
    if net.output_dim() < 2 {
        return Err(Error::InvalidInput("binary reduction needs at least two outputs".into()));
    }
    if first == second {
        return Err(Error::InvalidInput("the two classes must differ".into()));
    }
    let i = net.output_index(first)?;
    let j = net.output_index(second)?;
    let out = net.layers.last().unwrap();
    let row = out.weights[i].iter().zip(&out.weights[j]).map(|(a, b)| a - b).collect();
    let mut layers = net.layers.clone();
    *layers.last_mut().unwrap() = DenseLayer::new(vec![row], vec![out.b[i] - out.b[j]], out.activation)?;
    NetworkSpec::new(net.input_dim, layers, Some(vec![first, second]))
}

/// Logits rewritten with every class sharing the sum of all negative parts:
/// `logit_k(x) = sum_i weights[k][i] * max(hidden_i(x), 0) + biases[k]` with nonnegative weights.
#[derive(Clone, Debug)]
pub struct CommonDenominator {
    pub hidden: DenseLayer,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub labels: Vec<i64>,
}

impl CommonDenominator {
    pub fn input_dim(&self) -> usize {
        self.hidden.inputs()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        let z = self.hidden.apply(x);
        self.weights.iter().zip(&self.biases).map(|(w, b)| crate::scalar::dot(w, &z) + b).collect()
    }

    /// Class `k` as a composite polynomial of the network input, without its bias.
    pub fn composite(&self, k: usize) -> Result<CompositePolynomial> {
        let units = self.weights[k]
            .iter()
            .zip(self.hidden.weights.iter().zip(&self.hidden.b))
            .filter(|(w, _)| **w > 0.0)
            .map(|(w, (row, beta))| ReluUnit::new(row.iter().map(|x| w * x).collect(), w * beta))
            .collect();
        CompositePolynomial::new(self.input_dim(), units)
    }
}

pub fn multiclass_common_denominator(net: &NetworkSpec) -> Result<CommonDenominator> {
    let (hidden, out) = net.single_hidden()?;
    let m = hidden.outputs();
    let k = out.outputs();
    let neg_total: Vec<f64> = (0..m).map(|i| (0..k).map(|c| (-out.weights[c][i]).max(0.0)).sum()).collect();
    let weights = (0..k)
        .map(|c| {
            (0..m)
                .map(|i| {
                    let w = out.weights[c][i];
                    w.max(0.0) + neg_total[i] - (-w).max(0.0)
                })
                .collect()
        })
        .collect();
    Ok(CommonDenominator { hidden: hidden.clone(), weights, biases: out.b.clone(), labels: net.labels() })
}

/// `p(x) = reduced(basis^T x)` where `basis` has orthonormal columns spanning the unit coefficients.
#[derive(Clone, Debug)]
pub struct QrReduction {
    pub basis: DMatrix<f64>,
    pub reduced: CompositePolynomial,
}

impl QrReduction {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        (self.basis.transpose() * DVector::from_column_slice(x)).iter().copied().collect()
    }

    /// Coefficients in the original coordinates of a reduced slope.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        (&self.basis * DVector::from_column_slice(v)).iter().copied().collect()
    }
}

/// Reduced QR factorization with column pivoting; the rank cut is relative to the largest pivot.
pub fn qr_reduce(p: &CompositePolynomial) -> Result<QrReduction> {
    let n = p.dim;
    let a = p.coefficient_matrix();
    let cols = a.ncols();
    let basis = if cols == 0 || n == 0 {
        DMatrix::zeros(n, 0)
    } else {
        let qr = a.clone().col_piv_qr();
        let r = qr.r();
        let top = r[(0, 0)].abs();
        let rank = (0..n.min(cols)).take_while(|&i| top > 0.0 && r[(i, i)].abs() > 1e-8 * top).count();
        qr.q().columns(0, rank).into_owned()
    };
    let coeffs = basis.transpose() * &a;
    let rebuilt = &basis * &coeffs;
    let err = (&rebuilt - &a).abs().max();
    if err > 1e-6 * (1.0 + a.abs().max()) {
        return Err(Error::Invariant(format!("QR reconstruction error {err}")));
    }
    let units = p.units.iter().enumerate().map(|(c, u)| ReluUnit::new(coeffs.column(c).iter().copied().collect(), u.b)).collect();
    let reduced = CompositePolynomial::new(basis.ncols(), units)?;
    Ok(QrReduction { basis, reduced })
}

/// Reduces `p`, checking the dimension of the sample points against it.
pub fn reduce_with_samples(p: &CompositePolynomial, samples: &[Vec<f64>]) -> Result<(QrReduction, Vec<Vec<f64>>)> {
    for x in samples {
        check_dim(p.dim, x.len())?;
    }
    let red = qr_reduce(p)?;
    let pts = samples.iter().map(|x| red.project(x)).collect();
    Ok((red, pts))
}
