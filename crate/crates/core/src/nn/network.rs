//! Dense feed-forward networks read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::scalar::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

/// `activation(W x + b)` with `W` stored row-major, one row per output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    #[serde(rename = "W")]
    pub weights: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: Vec<Vec<f64>>, b: Vec<f64>, activation: Activation) -> Result<Self> {
        check_dim(weights.len(), b.len())?;
        if let Some(first) = weights.first() {
            for row in &weights {
                check_dim(first.len(), row.len())?;
            }
        }
        Ok(Self { weights, b, activation })
    }

    pub fn inputs(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn outputs(&self) -> usize {
        self.weights.len()
    }

    pub fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().zip(&self.b).map(|(w, b)| dot(w, x) + b).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut z = self.pre_activation(x);
        if self.activation == Activation::Relu {
            for v in &mut z {
                *v = v.max(0.0);
            }
        }
        z
    }

    pub fn param_count(&self) -> u64 {
        (self.outputs() * (self.inputs() + 1)) as u64
    }
}

/// A dense network. The last layer is linear; sigmoid or softmax is only applied when classifying.
///
/// A scalar output `s` is read as the first class label when `s >= 0` and the second otherwise.
/// Without `class_labels` a scalar network uses `[1, 0]` and a `K`-output network uses `0..K`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub layers: Vec<DenseLayer>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub class_labels: Option<Vec<i64>>,
}

#[derive(Deserialize)]
struct NetworkWire {
    input_dim: usize,
    layers: Vec<DenseLayer>,
    #[serde(default)]
    class_labels: Option<Vec<i64>>,
}

impl<'de> Deserialize<'de> for NetworkSpec {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let w = NetworkWire::deserialize(de)?;
        NetworkSpec::new(w.input_dim, w.layers, w.class_labels).map_err(serde::de::Error::custom)
    }
}

impl NetworkSpec {
    pub fn new(input_dim: usize, layers: Vec<DenseLayer>, class_labels: Option<Vec<i64>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidInput("a network needs at least one layer".into()));
        }
        let mut width = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.outputs() == 0 {
                return Err(Error::InvalidInput(format!("layer {i} has no units")));
            }
            check_dim(layer.outputs(), layer.b.len())?;
            for row in &layer.weights {
                check_dim(width, row.len())?;
            }
            width = layer.outputs();
        }
        if layers.last().map(|l| l.activation) != Some(Activation::Linear) {
            return Err(Error::InvalidInput("the last layer must be linear".into()));
        }
        if let Some(labels) = &class_labels {
            let expected = if width == 1 { 2 } else { width };
            check_dim(expected, labels.len())?;
        }
        Ok(Self { input_dim, layers, class_labels })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::outputs)
    }

    /// Output of the last layer before any sigmoid or softmax.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim, x.len())?;
        let mut h = x.to_vec();
        for layer in &self.layers {
            h = layer.apply(&h);
        }
        Ok(h)
    }

    pub fn labels(&self) -> Vec<i64> {
        match &self.class_labels {
            Some(l) => l.clone(),
            None if self.output_dim() == 1 => vec![1, 0],
            None => (0..self.output_dim() as i64).collect(),
        }
    }

    /// Output index of a class label.
    pub fn output_index(&self, label: i64) -> Result<usize> {
        self.labels().iter().position(|&l| l == label).ok_or_else(|| Error::InvalidInput(format!("unknown class label {label}")))
    }

    /// The hidden ReLU layer and the linear output layer of a one-hidden-layer network.
    pub fn single_hidden(&self) -> Result<(&DenseLayer, &DenseLayer)> {
        match self.layers.as_slice() {
            [hidden, out] if hidden.activation == Activation::Relu => Ok((hidden, out)),
            _ => Err(Error::InvalidInput("expected one hidden ReLU layer and a linear output layer".into())),
        }
    }

    pub fn param_count(&self) -> u64 {
        self.layers.iter().map(DenseLayer::param_count).sum()
    }
}

/// Label read off a scalar score: the first label when `score >= 0`.
pub fn binary_decision(score: f64, labels: &[i64]) -> i64 {
    if score >= 0.0 {
        labels[0]
    } else {
        labels[1]
    }
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_broken_chains() {
        let bad = r#"{"input_dim": 2, "layers": [{"W": [[1, 2, 3]], "b": [0], "activation": "linear"}]}"#;
        assert!(serde_json::from_str::<NetworkSpec>(bad).is_err());
        let relu_last = r#"{"input_dim": 1, "layers": [{"W": [[1]], "b": [0], "activation": "relu"}]}"#;
        assert!(serde_json::from_str::<NetworkSpec>(relu_last).is_err());
    }

    #[test]
    fn forward_pass() {
        let json = r#"{"input_dim": 2, "layers": [
            {"W": [[1, -1], [0, 2]], "b": [0, -1], "activation": "relu"},
            {"W": [[1, 1]], "b": [0.5], "activation": "linear"}]}"#;
        let net: NetworkSpec = serde_json::from_str(json).unwrap();
        assert_eq!(net.forward(&[1.0, 3.0]).unwrap(), vec![5.5]);
        assert_eq!(net.forward(&[3.0, 0.0]).unwrap(), vec![3.5]);
        assert_eq!(net.param_count(), 9);
        assert_eq!(net.labels(), vec![1, 0]);
    }
}
