use std::path::Path;

use serde::de::DeserializeOwned;
use serde_json::json;
use tropdiv::approx::{approx_divide, approx_divide_on, approx_quotient, draw_samples, trace_csv, ApproxConfig};
use tropdiv::composite::{CompositePolynomial, FwConfig, VectorDivisionConfig};
use tropdiv::exact::exact_divide;
use tropdiv::nn::{
    all_pairs, binary_reduce, compress_binary_maxout, compress_binary_relu, compress_multibinary, compress_multiclass,
    count_params as shape_params, division_rows, evaluate_error, keep_within_budget, l1_structured_prune, load_labels,
    load_samples, maxout_quotient, relu_quotient, to_tropical_pair, write_rows, CompressedModel, L1Scope, NetworkSpec,
    ParamShape,
};
use tropdiv::{DivisionProblem, Rational, TropicalPolynomial};

use crate::{
    read_text, write_text, ApproxArgs, CliError, CliResult, CompositeArgs, CompressArgs, CountArgs, EvaluateArgs, ModelKind,
    ProblemArgs, PruneArgs, QuotientForm, ScopeArg, ShapeArg,
};

/// Main JSON output and the other files written.
pub struct Outcome {
    pub main: String,
    pub side_outputs: Vec<String>,
}

impl Outcome {
    fn new(main: String) -> Self {
        Self { main, side_outputs: Vec::new() }
    }

    fn write(&mut self, path: &Path, text: &str) -> CliResult<()> {
        write_text(path, text)?;
        self.side_outputs.push(path.display().to_string());
        Ok(())
    }
}

fn load_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read_text(path)?).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })
}

fn pretty<T: serde::Serialize>(v: &T) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v)?)
}

fn problem<S: tropdiv::wire::WireScalar>(args: &ProblemArgs) -> CliResult<DivisionProblem<S>> {
    let p: TropicalPolynomial<S> = load_json(&args.dividend)?;
    let d: TropicalPolynomial<S> = load_json(&args.divisor)?;
    Ok(DivisionProblem::new(p, d)?)
}

pub fn divide_exact(args: &ProblemArgs) -> CliResult<Outcome> {
    let result = exact_divide(&problem::<Rational>(args)?)?;
    Ok(Outcome::new(pretty(&result)?))
}

pub fn divide_approx(args: &ApproxArgs, seed: u64) -> CliResult<Outcome> {
    let problem = problem::<f64>(&args.problem)?;
    let config = ApproxConfig {
        terms: args.fit.terms,
        samples: args.samples,
        max_iters: args.fit.iters,
        restarts: args.fit.restarts,
        seed,
        tol: args.fit.tol,
    };
    let out = match &args.sample_file {
        Some(path) => approx_divide_on(&problem, load_samples(path)?, &config)?,
        None => approx_divide(&problem, &config)?,
    };
    let mut outcome = Outcome::new(pretty(&out.result)?);
    if let Some(path) = &args.trace {
        outcome.write(path, &trace_csv(&out.result.error_trace))?;
    }
    if let Some(path) = &args.log {
        outcome.write(path, &pretty(&out.run_log(&config))?)?;
    }
    Ok(outcome)
}

fn is_zero(p: &TropicalPolynomial<f64>) -> bool {
    matches!(p.terms(), [t] if t.b == 0.0 && t.a.iter().all(|&v| v == 0.0))
}

pub fn divide_composite(args: &CompositeArgs, seed: u64) -> CliResult<Outcome> {
    let p: CompositePolynomial = load_json(&args.dividend)?;
    let divisor: Option<TropicalPolynomial<f64>> = args.divisor.as_deref().map(load_json).transpose()?;
    let divisor = divisor.filter(|d| !is_zero(d));
    let points = match &args.sample_file {
        Some(path) => load_samples(path)?,
        None => draw_samples(p.dim, args.samples, seed),
    };
    let approx = ApproxConfig {
        terms: args.fit.terms,
        samples: points.len(),
        max_iters: args.fit.iters,
        restarts: args.fit.restarts,
        seed,
        tol: args.fit.tol,
    };
    let (body, trace_text) = match (args.quotient, divisor) {
        (QuotientForm::Maxout, None) => {
            let (unit, report) = maxout_quotient(&p, &points, &approx)?;
            let terms = unit.terms.into_iter().map(|t| tropdiv::TropicalTerm::new(t.a, t.b)).collect();
            let quotient = TropicalPolynomial::new(p.dim, terms)?;
            let trace = trace_csv(&report.trace);
            (json!({ "form": "maxout", "quotient": quotient, "report": report }), trace)
        }
        (QuotientForm::Maxout, Some(d)) => {
            let (fit, _) = approx_quotient(&p, &d, points, &approx)?;
            let quotient = match &fit.terms {
                Some(t) => TropicalPolynomial::new(p.dim, t.clone())?,
                None => TropicalPolynomial::neg_inf(p.dim),
            };
            let trace = fit.best_trace().to_vec();
            let text = trace_csv(&trace);
            (json!({ "form": "maxout", "quotient": quotient, "max_violation": fit.max_violation, "trace": trace }), text)
        }
        (QuotientForm::Relu, None) => {
            let config = FwConfig { terms: args.fit.terms, rho: args.fw.rho, iterations: args.fw.fw_iterations, seed };
            let (quotient, report) = relu_quotient(&p, &points, &config)?;
            let mut text = String::from("iteration,objective\n");
            for (t, v) in report.trace.iter().enumerate() {
                text.push_str(&format!("{t},{v}\n"));
            }
            (json!({ "form": "relu", "quotient": quotient, "report": report }), text)
        }
        (QuotientForm::Relu, Some(_)) => {
            return Err(CliError::Usage("ReLU quotients are only computed for the zero divisor".into()));
        }
    };
    let mut outcome = Outcome::new(pretty(&body)?);
    if let Some(path) = &args.trace {
        outcome.write(path, &trace_text)?;
    }
    Ok(outcome)
}

/// A scalar-output network for the requested pair of classes.
fn binary_network(net: NetworkSpec, classes: Option<&[i64]>) -> CliResult<NetworkSpec> {
    match classes {
        None if net.output_dim() == 1 => Ok(net),
        None => Err(CliError::Usage("a multiclass network needs --classes A,B".into())),
        Some([a, b]) if net.output_dim() == 1 => Ok(NetworkSpec::new(net.input_dim, net.layers, Some(vec![*a, *b]))?),
        Some([a, b]) => Ok(binary_reduce(&net, *a, *b)?),
        Some(other) => Err(CliError::Usage(format!("expected two classes, got {}", other.len()))),
    }
}

pub fn compress(args: &CompressArgs, seed: u64) -> CliResult<Outcome> {
    let net: NetworkSpec = load_json(&args.net)?;
    let data = load_samples(&args.data)?;
    let samples = division_rows(&data, args.division_samples)?;
    let approx = ApproxConfig {
        terms: args.terms,
        samples: samples.len(),
        max_iters: args.iters,
        restarts: args.restarts,
        seed,
        tol: args.tol,
    };
    let classes = args.classes.as_deref();
    let (mut model, reports) = match args.kind {
        ModelKind::MaxoutBinary | ModelKind::ReluBinary => {
            let pair = to_tropical_pair(&binary_network(net, classes)?)?;
            let out = if matches!(args.kind, ModelKind::MaxoutBinary) {
                compress_binary_maxout(&pair, &samples, &approx)?
            } else {
                let fw = FwConfig { terms: args.terms, rho: args.fw.rho, iterations: args.fw.fw_iterations, seed };
                compress_binary_relu(&pair, &samples, &fw)?
            };
            (out.model, out.reports)
        }
        ModelKind::MulticlassSimplified => {
            if classes.is_some() {
                return Err(CliError::Usage("--classes does not apply to multiclass-simplified".into()));
            }
            let config = VectorDivisionConfig { terms: args.terms, iterations: args.iters, seed };
            (compress_multiclass(&net, &samples, &config)?, Vec::new())
        }
        ModelKind::MulticlassMultibinary => {
            let pairs = match classes {
                Some(c) => {
                    let mut pairs = Vec::new();
                    for i in 0..c.len() {
                        for j in i + 1..c.len() {
                            pairs.push((c[i], c[j]));
                        }
                    }
                    pairs
                }
                None => all_pairs(&net),
            };
            let subset = args.subset.unwrap_or(2 * pairs.len());
            let out = compress_multibinary(&net, &pairs, subset, &samples, &approx, args.random_control)?;
            (out.model, out.reports)
        }
    };
    if let Some(path) = &args.head {
        model = model.with_head(load_json(path)?)?;
    }

    let mut outcome = Outcome::new(model.to_json()?);
    if let Some(path) = &args.features_out {
        let rows = match &args.export_data {
            Some(p) => load_samples(p)?,
            None => data,
        };
        let features = rows.iter().map(|x| model.features(x)).collect::<Result<Vec<_>, _>>()?;
        write_rows(path, &features)?;
        outcome.side_outputs.push(path.display().to_string());
    }
    if let Some(path) = &args.report {
        outcome.write(path, &pretty(&reports)?)?;
    }
    Ok(outcome)
}

pub fn prune(args: &PruneArgs) -> CliResult<Outcome> {
    let mut net: NetworkSpec = load_json(&args.net)?;
    if let Some(c) = args.classes.as_deref() {
        net = binary_network(net, Some(c))?;
    }
    let keep = match (args.keep, args.budget) {
        (Some(k), _) => k,
        (None, Some(b)) => keep_within_budget(&net, b)?,
        (None, None) => return Err(CliError::Usage("give --keep or --budget".into())),
    };
    let scope = match args.scope {
        ScopeArg::Full => L1Scope::Full,
        ScopeArg::Incoming => L1Scope::Incoming,
    };
    Ok(Outcome::new(pretty(&l1_structured_prune(&net, keep, scope)?)?))
}

enum Loaded {
    Network(NetworkSpec),
    Model(CompressedModel),
}

fn load_model(path: &Path) -> CliResult<Loaded> {
    let text = read_text(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?;
    if value.get("kind").is_some() {
        Ok(Loaded::Model(CompressedModel::from_json(&text)?))
    } else {
        Ok(Loaded::Network(serde_json::from_value(value).map_err(|source| CliError::Parse { path: path.to_path_buf(), source })?))
    }
}

pub fn evaluate(args: &EvaluateArgs) -> CliResult<Outcome> {
    let mut rows = load_samples(&args.data)?;
    let mut labels = load_labels(&args.labels)?;
    if rows.len() != labels.len() {
        return Err(CliError::Usage(format!("{} data rows but {} labels", rows.len(), labels.len())));
    }
    if let Some(keep) = &args.classes {
        let (r, l): (Vec<_>, Vec<_>) = rows.into_iter().zip(labels).filter(|(_, y)| keep.contains(y)).unzip();
        rows = r;
        labels = l;
    }
    let (error, kind, params) = match load_model(&args.model)? {
        Loaded::Model(m) => (evaluate_error(&m, &rows, &labels)?, m.kind().to_string(), m.param_count()),
        Loaded::Network(net) => {
            let net = match args.classes.as_deref() {
                Some(c @ [_, _]) if net.output_dim() > 1 => binary_network(net, Some(c))?,
                _ => net,
            };
            (evaluate_error(&net, &rows, &labels)?, "network".to_string(), net.param_count())
        }
    };
    Ok(Outcome::new(pretty(&json!({ "kind": kind, "error_rate": error, "rows": rows.len(), "params": params }))?))
}

fn need(v: Option<usize>, flag: &str) -> CliResult<usize> {
    v.ok_or_else(|| CliError::Usage(format!("this shape needs {flag}")))
}

pub fn count_params(args: &CountArgs) -> CliResult<Outcome> {
    let (params, described) = match (&args.model, args.shape) {
        (Some(path), _) => match load_model(path)? {
            Loaded::Model(m) => (m.param_count(), json!(m.kind())),
            Loaded::Network(n) => (n.param_count(), json!("network")),
        },
        (None, Some(shape)) => {
            let n = || need(args.input_dim, "--input-dim");
            let shape = match shape {
                ShapeArg::Dense => ParamShape::Dense {
                    sizes: args.sizes.clone().ok_or_else(|| CliError::Usage("this shape needs --sizes".into()))?,
                },
                ShapeArg::TropicalPair => ParamShape::TropicalPair { input_dim: n()?, units: need(args.units, "--units")? },
                ShapeArg::MaxoutBinary => ParamShape::MaxoutBinary { input_dim: n()?, terms: need(args.terms, "--terms")? },
                ShapeArg::ReluBinary => ParamShape::ReluBinary { input_dim: n()?, units: need(args.units, "--units")? },
                ShapeArg::MulticlassSimplified => ParamShape::MulticlassSimplified {
                    input_dim: n()?,
                    classes: need(args.classes, "--classes")?,
                    terms: need(args.terms, "--terms")?,
                    head_hidden: args.head_hidden,
                },
                ShapeArg::MulticlassMultibinary => ParamShape::MulticlassMultibinary {
                    input_dim: n()?,
                    classes: need(args.classes, "--classes")?,
                    polynomials: need(args.polynomials, "--polynomials")?,
                    terms: need(args.terms, "--terms")?,
                    head_hidden: args.head_hidden,
                },
            };
            (shape_params(&shape), serde_json::to_value(&shape)?)
        }
        (None, None) => return Err(CliError::Usage("give --model or --shape".into())),
    };
    Ok(Outcome::new(pretty(&json!({ "params": params, "of": described }))?))
}
