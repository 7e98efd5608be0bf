//! Compressed models built from quotients of the network polynomials by the zero polynomial.

use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::approx::{approx_quotient, ApproxConfig};
use crate::composite::{
    composite_quotient_fw, vector_divide_simplified, CompositePolynomial, FwConfig, ReluUnit, VectorDivisionConfig,
};
use crate::error::{check_dim, Error, Result};
use crate::nn::network::{argmax, binary_decision, NetworkSpec};
use crate::nn::represent::{binary_reduce, multiclass_common_denominator, reduce_with_samples, to_tropical_pair, TropicalPair};
use crate::poly::TropicalPolynomial;
use crate::rng::{derive_seed, substream};
use crate::scalar::dot;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: Vec<f64>,
    pub b: f64,
}

impl AffineMap {
    pub fn eval(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) + self.b
    }
}

/// Maximum of affine maps. Repeated maps are kept so that feature layouts have a fixed width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxoutUnit {
    pub terms: Vec<AffineMap>,
}

impl MaxoutUnit {
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        self.terms.iter().map(move |t| t.eval(x))
    }

    fn constant(dim: usize, b: f64, count: usize) -> Self {
        Self { terms: vec![AffineMap { a: vec![0.0; dim], b }; count.max(1)] }
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidInput("a maxout unit needs at least one term".into()));
        }
        self.terms.iter().try_for_each(|t| check_dim(dim, t.a.len()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Positive,
    Negative,
}

/// One quotient of a binary comparison, used as a feature of the head network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFeature {
    pub classes: [i64; 2],
    pub side: Side,
    pub unit: MaxoutUnit,
}

/// Coefficients are stored in the original input coordinates, so no projection is kept.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CompressedModel {
    /// `positive(x) - negative(x) + offset` with two maxout units.
    MaxoutBinary { input_dim: usize, class_labels: Vec<i64>, positive: MaxoutUnit, negative: MaxoutUnit, offset: f64 },
    /// The same with two small sums of ReLU units.
    ReluBinary {
        input_dim: usize,
        class_labels: Vec<i64>,
        positive: CompositePolynomial,
        negative: CompositePolynomial,
        offset: f64,
    },
    /// One maxout unit per class; the head, when present, reads every term value.
    MulticlassSimplified {
        input_dim: usize,
        class_labels: Vec<i64>,
        classes: Vec<MaxoutUnit>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        head: Option<NetworkSpec>,
    },
    /// A subset of binary-comparison quotients feeding a head network.
    MulticlassMultibinary {
        input_dim: usize,
        class_labels: Vec<i64>,
        features: Vec<PairFeature>,
        random_control: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        head: Option<NetworkSpec>,
    },
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    #[serde(flatten)]
    model: CompressedModel,
    param_count: u64,
}

impl CompressedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            CompressedModel::MaxoutBinary { .. } => "maxout-binary",
            CompressedModel::ReluBinary { .. } => "relu-binary",
            CompressedModel::MulticlassSimplified { .. } => "multiclass-simplified",
            CompressedModel::MulticlassMultibinary { .. } => "multiclass-multibinary",
        }
    }

    pub fn input_dim(&self) -> usize {
        match self {
            CompressedModel::MaxoutBinary { input_dim, .. }
            | CompressedModel::ReluBinary { input_dim, .. }
            | CompressedModel::MulticlassSimplified { input_dim, .. }
            | CompressedModel::MulticlassMultibinary { input_dim, .. } => *input_dim,
        }
    }

    pub fn class_labels(&self) -> &[i64] {
        match self {
            CompressedModel::MaxoutBinary { class_labels, .. }
            | CompressedModel::ReluBinary { class_labels, .. }
            | CompressedModel::MulticlassSimplified { class_labels, .. }
            | CompressedModel::MulticlassMultibinary { class_labels, .. } => class_labels,
        }
    }

    pub fn head(&self) -> Option<&NetworkSpec> {
        match self {
            CompressedModel::MulticlassSimplified { head, .. } | CompressedModel::MulticlassMultibinary { head, .. } => {
                head.as_ref()
            }
            _ => None,
        }
    }

    /// Number of feature values handed to a head network.
    pub fn feature_dim(&self) -> usize {
        match self {
            CompressedModel::MaxoutBinary { .. } | CompressedModel::ReluBinary { .. } => 2,
            CompressedModel::MulticlassSimplified { classes, .. } => classes.iter().map(|c| c.terms.len()).sum(),
            CompressedModel::MulticlassMultibinary { features, .. } => features.len(),
        }
    }

    /// Term values for the multiclass kinds, the two polynomial values for the binary kinds.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.input_dim(), x.len())?;
        Ok(match self {
            CompressedModel::MaxoutBinary { positive, negative, .. } => vec![positive.eval(x), negative.eval(x)],
            CompressedModel::ReluBinary { positive, negative, .. } => vec![positive.eval(x), negative.eval(x)],
            CompressedModel::MulticlassSimplified { classes, .. } => classes.iter().flat_map(|c| c.values(x)).collect(),
            CompressedModel::MulticlassMultibinary { features, .. } => features.iter().map(|f| f.unit.eval(x)).collect(),
        })
    }

    /// Pre-sigmoid score of the binary kinds.
    pub fn score(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.input_dim(), x.len())?;
        match self {
            CompressedModel::MaxoutBinary { positive, negative, offset, .. } => Ok(positive.eval(x) - negative.eval(x) + offset),
            CompressedModel::ReluBinary { positive, negative, offset, .. } => Ok(positive.eval(x) - negative.eval(x) + offset),
            _ => Err(Error::InvalidInput(format!("{} models have no scalar score", self.kind()))),
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<i64> {
        let labels = self.class_labels();
        match self {
            CompressedModel::MaxoutBinary { .. } | CompressedModel::ReluBinary { .. } => {
                Ok(binary_decision(self.score(x)?, labels))
            }
            CompressedModel::MulticlassSimplified { classes, head: None, .. } => {
                check_dim(self.input_dim(), x.len())?;
                let scores: Vec<f64> = classes.iter().map(|c| c.eval(x)).collect();
                Ok(labels[argmax(&scores)])
            }
            CompressedModel::MulticlassSimplified { head: Some(head), .. }
            | CompressedModel::MulticlassMultibinary { head: Some(head), .. } => {
                let out = head.forward(&self.features(x)?)?;
                Ok(labels[argmax(&out)])
            }
            CompressedModel::MulticlassMultibinary { head: None, .. } => {
                Err(Error::InvalidInput("a multibinary model needs a head network to classify".into()))
            }
        }
    }

    /// Stored coefficients: `input_dim + 1` per affine map or ReLU unit, the offset, and the head.
    pub fn param_count(&self) -> u64 {
        let per = (self.input_dim() + 1) as u64;
        let head = self.head().map_or(0, NetworkSpec::param_count);
        match self {
            CompressedModel::MaxoutBinary { positive, negative, .. } => {
                (positive.terms.len() + negative.terms.len()) as u64 * per + 1
            }
            CompressedModel::ReluBinary { positive, negative, .. } => {
                (positive.units.len() + negative.units.len()) as u64 * per + 1
            }
            CompressedModel::MulticlassSimplified { classes, .. } => {
                classes.iter().map(|c| c.terms.len() as u64).sum::<u64>() * per + head
            }
            CompressedModel::MulticlassMultibinary { features, .. } => {
                features.iter().map(|f| f.unit.terms.len() as u64).sum::<u64>() * per + head
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.input_dim();
        let labels = self.class_labels().len();
        match self {
            CompressedModel::MaxoutBinary { positive, negative, .. } => {
                check_dim(2, labels)?;
                positive.check(n)?;
                negative.check(n)?;
            }
            CompressedModel::ReluBinary { positive, negative, .. } => {
                check_dim(2, labels)?;
                check_dim(n, positive.dim)?;
                check_dim(n, negative.dim)?;
            }
            CompressedModel::MulticlassSimplified { classes, .. } => {
                check_dim(labels, classes.len())?;
                classes.iter().try_for_each(|c| c.check(n))?;
            }
            CompressedModel::MulticlassMultibinary { features, .. } => {
                features.iter().try_for_each(|f| f.unit.check(n))?;
            }
        }
        if let Some(head) = self.head() {
            check_dim(self.feature_dim(), head.input_dim)?;
            check_dim(labels, head.output_dim())?;
        }
        Ok(())
    }

    /// Attaches a head network trained on the exported features.
    pub fn with_head(mut self, net: NetworkSpec) -> Result<Self> {
        match &mut self {
            CompressedModel::MulticlassSimplified { head, .. } | CompressedModel::MulticlassMultibinary { head, .. } => {
                *head = Some(net)
            }
            _ => return Err(Error::InvalidInput(format!("{} models take no head", self.kind()))),
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ModelFile { model: self.clone(), param_count: self.param_count() })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        file.model.validate()?;
        if file.model.param_count() != file.param_count {
            return Err(Error::InvalidInput(format!(
                "stored parameter count {} does not match the model ({})",
                file.param_count,
                file.model.param_count()
            )));
        }
        Ok(file.model)
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Diagnostics of one quotient by the zero polynomial.
#[derive(Clone, Debug, Serialize)]
pub struct QuotientReport {
    pub units: usize,
    /// Dimension after the QR reduction.
    pub rank: usize,
    /// Largest `q(x) - p(x)` over the division samples.
    pub max_violation: f64,
    /// Residual trace for maxout quotients, objective trace for ReLU quotients.
    pub trace: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SideReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub classes: Option<[i64; 2]>,
    pub side: Side,
    #[serde(flatten)]
    pub quotient: QuotientReport,
}

#[derive(Clone, Debug)]
pub struct Compression {
    pub model: CompressedModel,
    pub reports: Vec<SideReport>,
}

/// The first `count` rows, which serve as division samples.
pub fn division_rows(data: &[Vec<f64>], count: usize) -> Result<Vec<Vec<f64>>> {
    if count == 0 || data.is_empty() {
        return Err(Error::InvalidInput("no division samples".into()));
    }
    Ok(data[..count.min(data.len())].to_vec())
}

fn violation(samples: &[Vec<f64>], q: impl Fn(&[f64]) -> f64, p: &CompositePolynomial) -> f64 {
    samples.iter().map(|x| q(x) - p.eval(x)).fold(f64::NEG_INFINITY, f64::max)
}

/// Maxout quotient of `p` by zero, fitted in the span of the unit coefficients.
pub fn maxout_quotient(
    p: &CompositePolynomial,
    samples: &[Vec<f64>],
    config: &ApproxConfig,
) -> Result<(MaxoutUnit, QuotientReport)> {
    let (red, pts) = reduce_with_samples(p, samples)?;
    let mut report = QuotientReport { units: p.units.len(), rank: red.rank(), max_violation: 0.0, trace: Vec::new() };
    if red.rank() == 0 {
        let unit = MaxoutUnit::constant(p.dim, p.eval(&vec![0.0; p.dim]), config.terms);
        report.max_violation = violation(samples, |x| unit.eval(x), p);
        return Ok((unit, report));
    }
    let zero = TropicalPolynomial::constant(red.rank(), 0.0);
    let (fit, _) = approx_quotient(&red.reduced, &zero, pts, config)?;
    let terms = fit.terms.clone().ok_or_else(|| Error::Invariant("a zonotope always admits slopes".into()))?;
    let unit = MaxoutUnit { terms: terms.iter().map(|t| AffineMap { a: red.lift(&t.a), b: t.b }).collect() };
    report.max_violation = violation(samples, |x| unit.eval(x), p);
    report.trace = fit.best_trace().to_vec();
    Ok((unit, report))
}

/// Maxout approximation of both polynomials of the pair, each divided by zero after QR reduction.
pub fn compress_binary_maxout(pair: &TropicalPair, samples: &[Vec<f64>], config: &ApproxConfig) -> Result<Compression> {
    let pos_cfg = ApproxConfig { seed: derive_seed(config.seed, 0), ..config.clone() };
    let neg_cfg = ApproxConfig { seed: derive_seed(config.seed, 1), ..config.clone() };
    let (pos, neg) =
        rayon::join(|| maxout_quotient(&pair.positive, samples, &pos_cfg), || maxout_quotient(&pair.negative, samples, &neg_cfg));
    let ((positive, pr), (negative, nr)) = (pos?, neg?);
    let model = CompressedModel::MaxoutBinary {
        input_dim: pair.dim(),
        class_labels: binary_labels(&pair.class_labels)?,
        positive,
        negative,
        offset: pair.offset,
    };
    Ok(Compression { model, reports: side_reports(pr, nr) })
}

fn side_reports(positive: QuotientReport, negative: QuotientReport) -> Vec<SideReport> {
    vec![
        SideReport { classes: None, side: Side::Positive, quotient: positive },
        SideReport { classes: None, side: Side::Negative, quotient: negative },
    ]
}

fn binary_labels(labels: &[i64]) -> Result<Vec<i64>> {
    check_dim(2, labels.len())?;
    Ok(labels.to_vec())
}

/// Composite quotient of `p` by zero; the units of `p` must be linearly independent.
pub fn relu_quotient(
    p: &CompositePolynomial,
    samples: &[Vec<f64>],
    config: &FwConfig,
) -> Result<(CompositePolynomial, QuotientReport)> {
    let (red, pts) = reduce_with_samples(p, samples)?;
    let mut report = QuotientReport { units: p.units.len(), rank: red.rank(), max_violation: 0.0, trace: Vec::new() };
    if p.units.is_empty() {
        return Ok((CompositePolynomial::new(p.dim, Vec::new())?, report));
    }
    if red.rank() < p.units.len() {
        return Err(Error::InvalidInput(format!(
            "{} units span only {} dimensions; the ReLU quotient needs independent units",
            p.units.len(),
            red.rank()
        )));
    }
    let out = composite_quotient_fw(&red.reduced, &pts, config, None)?;
    let units = out.quotient.units.iter().map(|u| ReluUnit::new(red.lift(&u.a), u.b)).collect();
    let q = CompositePolynomial::new(p.dim, units)?;
    report.max_violation = violation(samples, |x| q.eval(x), p);
    report.trace = out.objective_trace;
    Ok((q, report))
}

/// Smaller ReLU network obtained from Frank-Wolfe composite quotients of both polynomials.
pub fn compress_binary_relu(pair: &TropicalPair, samples: &[Vec<f64>], config: &FwConfig) -> Result<Compression> {
    let pos_cfg = FwConfig { seed: derive_seed(config.seed, 0), ..config.clone() };
    let neg_cfg = FwConfig { seed: derive_seed(config.seed, 1), ..config.clone() };
    let (pos, neg) =
        rayon::join(|| relu_quotient(&pair.positive, samples, &pos_cfg), || relu_quotient(&pair.negative, samples, &neg_cfg));
    let ((positive, pr), (negative, nr)) = (pos?, neg?);
    let model = CompressedModel::ReluBinary {
        input_dim: pair.dim(),
        class_labels: binary_labels(&pair.class_labels)?,
        positive,
        negative,
        offset: pair.offset,
    };
    Ok(Compression { model, reports: side_reports(pr, nr) })
}

/// One maxout unit per class from the common-denominator logits; quotient slopes live on the
/// hidden pre-activations and are folded back through the hidden layer together with the class bias.
pub fn compress_multiclass(net: &NetworkSpec, samples: &[Vec<f64>], config: &VectorDivisionConfig) -> Result<CompressedModel> {
    let cd = multiclass_common_denominator(net)?;
    let hidden: Vec<Vec<f64>> = samples
        .iter()
        .map(|x| {
            check_dim(net.input_dim, x.len())?;
            Ok(cd.hidden.pre_activation(x))
        })
        .collect::<Result<_>>()?;
    let slopes = vector_divide_simplified(&cd.weights, &hidden, config)?;
    let n = net.input_dim;
    let classes = slopes
        .iter()
        .zip(&cd.biases)
        .map(|(per_class, bias)| MaxoutUnit {
            terms: per_class
                .iter()
                .map(|s| {
                    let mut a = vec![0.0; n];
                    for (si, row) in s.iter().zip(&cd.hidden.weights) {
                        if *si != 0.0 {
                            for (aj, w) in a.iter_mut().zip(row) {
                                *aj += si * w;
                            }
                        }
                    }
                    AffineMap { a, b: dot(s, &cd.hidden.b) + bias }
                })
                .collect(),
        })
        .collect();
    let model = CompressedModel::MulticlassSimplified { input_dim: n, class_labels: cd.labels, classes, head: None };
    model.validate()?;
    Ok(model)
}

/// All unordered pairs of the network's class labels.
pub fn all_pairs(net: &NetworkSpec) -> Vec<(i64, i64)> {
    let labels = net.labels();
    let mut out = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            out.push((labels[i], labels[j]));
        }
    }
    out
}

/// Binary maxout compressions for every pair, of which `subset` quotients are kept at random.
///
/// With `random_control` the kept quotients get random directions of the same lengths.
pub fn compress_multibinary(
    net: &NetworkSpec,
    pairs: &[(i64, i64)],
    subset: usize,
    samples: &[Vec<f64>],
    config: &ApproxConfig,
    random_control: bool,
) -> Result<Compression> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no class pairs".into()));
    }
    let total = 2 * pairs.len();
    if subset == 0 || subset > total {
        return Err(Error::InvalidInput(format!("subset size must lie in 1..={total}, got {subset}")));
    }
    let runs: Vec<Compression> = pairs
        .par_iter()
        .enumerate()
        .map(|(i, &(a, b))| {
            let pair = to_tropical_pair(&binary_reduce(net, a, b)?)?;
            let cfg = ApproxConfig { seed: derive_seed(config.seed, 2 + i as u64), ..config.clone() };
            compress_binary_maxout(&pair, samples, &cfg)
        })
        .collect::<Result<_>>()?;

    let mut all = Vec::with_capacity(total);
    let mut reports = Vec::with_capacity(total);
    for (run, &(a, b)) in runs.into_iter().zip(pairs) {
        let CompressedModel::MaxoutBinary { positive, negative, .. } = run.model else {
            return Err(Error::Invariant("binary compression returned another kind".into()));
        };
        all.push(PairFeature { classes: [a, b], side: Side::Positive, unit: positive });
        all.push(PairFeature { classes: [a, b], side: Side::Negative, unit: negative });
        reports.extend(run.reports.into_iter().map(|r| SideReport { classes: Some([a, b]), ..r }));
    }

    let mut rng = substream(config.seed, 1);
    let mut chosen = index::sample(&mut rng, total, subset).into_vec();
    chosen.sort_unstable();
    let mut features: Vec<PairFeature> = chosen.iter().map(|&i| all[i].clone()).collect();
    if random_control {
        for f in &mut features {
            for t in &mut f.unit.terms {
                let g: Vec<f64> = (0..t.a.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                let scale = dot(&t.a, &t.a).sqrt() / dot(&g, &g).sqrt().max(f64::MIN_POSITIVE);
                t.a = g.iter().map(|v| v * scale).collect();
            }
        }
    }
    let model = CompressedModel::MulticlassMultibinary {
        input_dim: net.input_dim,
        class_labels: net.labels(),
        features,
        random_control,
        head: None,
    };
    model.validate()?;
    Ok(Compression { model, reports })
}
