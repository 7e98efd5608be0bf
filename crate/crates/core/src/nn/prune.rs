//! Structured L1 pruning of the hidden layer, without retraining.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::network::{DenseLayer, NetworkSpec};

/// Which weights enter a hidden unit's L1 score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum L1Scope {
    /// Incoming weights, bias and outgoing weights.
    #[default]
    Full,
    Incoming,
}

pub fn l1_scores(net: &NetworkSpec, scope: L1Scope) -> Result<Vec<f64>> {
    let (hidden, out) = net.single_hidden()?;
    Ok((0..hidden.outputs())
        .map(|i| {
            let incoming: f64 = hidden.weights[i].iter().map(|w| w.abs()).sum();
            match scope {
                L1Scope::Incoming => incoming,
                L1Scope::Full => incoming + hidden.b[i].abs() + out.weights.iter().map(|row| row[i].abs()).sum::<f64>(),
            }
        })
        .collect())
}

/// Keeps the `keep` hidden units with the largest scores (lower index on ties), in their original order.
pub fn l1_structured_prune(net: &NetworkSpec, keep: usize, scope: L1Scope) -> Result<NetworkSpec> {
    let scores = l1_scores(net, scope)?;
    if keep == 0 || keep > scores.len() {
        return Err(Error::InvalidInput(format!("keep must lie in 1..={}, got {keep}", scores.len())));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut kept = order[..keep].to_vec();
    kept.sort_unstable();

    let (hidden, out) = net.single_hidden()?;
    let new_hidden = DenseLayer::new(
        kept.iter().map(|&i| hidden.weights[i].clone()).collect(),
        kept.iter().map(|&i| hidden.b[i]).collect(),
        hidden.activation,
    )?;
    let new_out = DenseLayer::new(
        out.weights.iter().map(|row| kept.iter().map(|&i| row[i]).collect()).collect(),
        out.b.clone(),
        out.activation,
    )?;
    NetworkSpec::new(net.input_dim, vec![new_hidden, new_out], net.class_labels.clone())
}

/// Largest number of hidden units whose pruned network has at most `budget` parameters.
pub fn keep_within_budget(net: &NetworkSpec, budget: u64) -> Result<usize> {
    let (hidden, out) = net.single_hidden()?;
    let k = out.outputs() as u64;
    let per_unit = net.input_dim as u64 + 1 + k;
    if budget < k + per_unit {
        return Err(Error::InvalidInput(format!("a budget of {budget} parameters cannot keep a single unit")));
    }
    Ok((((budget - k) / per_unit) as usize).min(hidden.outputs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::network::Activation;

    fn net() -> NetworkSpec {
        let hidden =
            DenseLayer::new(vec![vec![1.0, 1.0], vec![0.1, 0.0], vec![-3.0, 0.0]], vec![0.0, 0.0, 1.0], Activation::Relu)
                .unwrap();
        let out = DenseLayer::new(vec![vec![1.0, 5.0, 0.5]], vec![0.2], Activation::Linear).unwrap();
        NetworkSpec::new(2, vec![hidden, out], None).unwrap()
    }

    #[test]
    fn keep_all_is_identity_and_zero_is_rejected() {
        let n = net();
        assert_eq!(l1_structured_prune(&n, 3, L1Scope::Full).unwrap(), n);
        assert!(l1_structured_prune(&n, 0, L1Scope::Full).is_err());
        assert!(l1_structured_prune(&n, 4, L1Scope::Full).is_err());
    }

    #[test]
    fn scope_changes_the_choice() {
        let n = net();
        let full = l1_structured_prune(&n, 1, L1Scope::Full).unwrap();
        assert_eq!(full.layers[0].weights, vec![vec![0.1, 0.0]]);
        let incoming = l1_structured_prune(&n, 1, L1Scope::Incoming).unwrap();
        assert_eq!(incoming.layers[0].weights, vec![vec![-3.0, 0.0]]);
    }

    #[test]
    fn budget() {
        let n = net();
        assert_eq!(keep_within_budget(&n, 9).unwrap(), 2);
        assert_eq!(keep_within_budget(&n, 100).unwrap(), 3);
        assert!(keep_within_budget(&n, 4).is_err());
    }
}
