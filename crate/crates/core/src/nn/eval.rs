use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::nn::compress::CompressedModel;
use crate::nn::network::{argmax, binary_decision, NetworkSpec};

pub trait Classifier: Sync {
    fn input_dim(&self) -> usize;
    fn predict(&self, x: &[f64]) -> Result<i64>;
}

impl Classifier for NetworkSpec {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict(&self, x: &[f64]) -> Result<i64> {
        let out = self.forward(x)?;
        let labels = self.labels();
        Ok(if out.len() == 1 { binary_decision(out[0], &labels) } else { labels[argmax(&out)] })
    }
}

impl Classifier for CompressedModel {
    fn input_dim(&self) -> usize {
        CompressedModel::input_dim(self)
    }

    fn predict(&self, x: &[f64]) -> Result<i64> {
        CompressedModel::predict(self, x)
    }
}

/// Fraction of rows whose prediction differs from the label.
pub fn evaluate_error<C: Classifier + ?Sized>(model: &C, data: &[Vec<f64>], labels: &[i64]) -> Result<f64> {
    check_dim(data.len(), labels.len())?;
    if data.is_empty() {
        return Err(Error::InvalidInput("no evaluation rows".into()));
    }
    let wrong = data
        .par_iter()
        .zip(labels)
        .map(|(x, &y)| {
            check_dim(model.input_dim(), x.len())?;
            Ok(usize::from(model.predict(x)? != y))
        })
        .collect::<Result<Vec<usize>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(wrong as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant(i64);

    impl Classifier for Constant {
        fn input_dim(&self) -> usize {
            1
        }
        fn predict(&self, _: &[f64]) -> Result<i64> {
            Ok(self.0)
        }
    }

    struct Lookup(Vec<(f64, i64)>);

    impl Classifier for Lookup {
        fn input_dim(&self) -> usize {
            1
        }
        fn predict(&self, x: &[f64]) -> Result<i64> {
            Ok(self.0.iter().find(|(k, _)| *k == x[0]).map(|(_, y)| *y).unwrap_or(-1))
        }
    }

    #[test]
    fn constant_and_lookup() {
        let data: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels: Vec<i64> = (0..10).map(|i| i % 2).collect();
        assert_eq!(evaluate_error(&Constant(1), &data, &labels).unwrap(), 0.5);
        let table = Lookup(data.iter().zip(&labels).map(|(x, &y)| (x[0], y)).collect());
        assert_eq!(evaluate_error(&table, &data, &labels).unwrap(), 0.0);
        assert!(evaluate_error(&Constant(1), &data, &labels[..3]).is_err());
    }
}
