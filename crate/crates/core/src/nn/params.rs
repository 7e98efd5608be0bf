//! Parameter counts of the network and model layouts.

use serde::{Deserialize, Serialize};

/// A layout described by its sizes alone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum ParamShape {
    /// Dense layers with the given widths, input first.
    Dense { sizes: Vec<usize> },
    /// One hidden layer folded into the pair form: `units` ReLU units and one offset.
    TropicalPair { input_dim: usize, units: usize },
    /// Two maxout units with `terms` affine maps each, and one offset.
    MaxoutBinary { input_dim: usize, terms: usize },
    /// Two sums of `units` ReLU units each, and one offset.
    ReluBinary { input_dim: usize, units: usize },
    /// `classes` maxout units with `terms` maps each, plus an optional head with one hidden layer.
    MulticlassSimplified { input_dim: usize, classes: usize, terms: usize, head_hidden: Option<usize> },
    /// `polynomials` maxout units with `terms` maps each, plus an optional head.
    MulticlassMultibinary { input_dim: usize, classes: usize, polynomials: usize, terms: usize, head_hidden: Option<usize> },
}

fn dense(sizes: &[usize]) -> u64 {
    sizes.windows(2).map(|w| (w[1] * (w[0] + 1)) as u64).sum()
}

fn head(inputs: usize, hidden: Option<usize>, classes: usize) -> u64 {
    hidden.map_or(0, |h| dense(&[inputs, h, classes]))
}

pub fn count_params(shape: &ParamShape) -> u64 {
    match *shape {
        ParamShape::Dense { ref sizes } => dense(sizes),
        ParamShape::TropicalPair { input_dim, units } => (units * (input_dim + 1) + 1) as u64,
        ParamShape::MaxoutBinary { input_dim, terms } => (2 * terms * (input_dim + 1) + 1) as u64,
        ParamShape::ReluBinary { input_dim, units } => (2 * units * (input_dim + 1) + 1) as u64,
        ParamShape::MulticlassSimplified { input_dim, classes, terms, head_hidden } => {
            (classes * terms * (input_dim + 1)) as u64 + head(classes * terms, head_hidden, classes)
        }
        ParamShape::MulticlassMultibinary { input_dim, classes, polynomials, terms, head_hidden } => {
            (polynomials * terms * (input_dim + 1)) as u64 + head(polynomials, head_hidden, classes)
        }
    }
}
