use std::io::Write;
use std::path::Path;

use minmax_core::cws::{read_sketches, sketch_all, write_sketches};
use minmax_core::data::{load, normalize};
use minmax_core::encode::{encode, read_libsvm, write_libsvm};
use minmax_core::estimate::{simulate, write_csv};
use minmax_core::kernels::gram;
use minmax_core::learn::{
    self, evaluate, evaluate_raw, lambda_sweep, read_model, train, train_raw, write_model, FeatureLayout,
    DEFAULT_LAMBDA_GRID,
};
use minmax_core::{BitBudget, Dataset, EncodedVector, Error, LoadOptions, Result, Scheme, SparseVector, TrainConfig};
use rayon::prelude::*;

use crate::args::{EncodeArgs, EvalArgs, GramArgs, SimulateArgs, SketchArgs, TrainArgs};
use crate::io::{open, write_output};

fn load_file(path: &Path, dimension: Option<usize>) -> Result<Dataset> {
    load(open(path)?, LoadOptions { dimension, ..Default::default() })
}

pub fn gram_cmd(args: &GramArgs) -> Result<()> {
    let train_set = load_file(&args.train, None)?;
    let (rows_set, cols_set) = match &args.test {
        Some(test) => {
            let test_set = load_file(test, None)?;
            let dim = train_set.dimension().max(test_set.dimension());
            (test_set.with_dimension(dim)?, train_set.with_dimension(dim)?)
        }
        None => (train_set.clone(), train_set),
    };
    let rows = normalize(&rows_set, args.normalize)?.vectors();
    let cols = normalize(&cols_set, args.normalize)?.vectors();
    let matrix = gram(&rows, &cols, args.kernel)?;
    write_output(&args.out, |out| matrix.write_precomputed(&rows_set.labels(), out))
}

pub fn sketch_cmd(args: &SketchArgs) -> Result<()> {
    if args.k == 0 {
        return Err(Error::InvalidArgument("--k must be at least 1".into()));
    }
    let dataset = normalize(&load_file(&args.input, Some(args.dimension))?, args.normalize)?;
    let sketches = sketch_all(&dataset.vectors(), args.k, args.seed)?;
    write_output(&args.out, |out| write_sketches(&sketches, args.seed, args.k, args.dimension, out))
}

/// Labels are the first token of each data line of `path`.
fn read_labels(path: &Path) -> Result<Vec<i64>> {
    Ok(load_file(path, None)?.labels())
}

pub fn encode_cmd(args: &EncodeArgs) -> Result<()> {
    let budget = BitBudget::new(args.bi, args.bt)?;
    let (_, sketches) = read_sketches(open(&args.input)?)?;
    let labels = read_labels(&args.labels)?;
    if labels.len() != sketches.len() {
        return Err(Error::InvalidArgument(format!(
            "{} labels for {} sketches",
            labels.len(),
            sketches.len()
        )));
    }
    let encoded: Vec<EncodedVector> = sketches.par_iter().map(|s| encode(s, budget)).collect::<Result<_>>()?;
    let rows: Vec<(i64, EncodedVector)> = labels.into_iter().zip(encoded).collect();
    write_output(&args.out, |out| write_libsvm(&rows, out))
}

/// Parses `1..1000`, `1,4,16` or a mix such as `1..10,100`.
pub fn parse_k_grid(text: &str) -> Result<Vec<usize>> {
    let bad = |part: &str| Error::InvalidArgument(format!("bad k-grid entry '{part}'"));
    let mut grid = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let lo: usize = a.trim().parse().map_err(|_| bad(part))?;
                let hi: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad(part))?;
                if lo == 0 || hi < lo {
                    return Err(bad(part));
                }
                grid.extend(lo..=hi);
            }
            None => {
                let k: usize = part.parse().map_err(|_| bad(part))?;
                if k == 0 {
                    return Err(bad(part));
                }
                grid.push(k);
            }
        }
    }
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty k-grid".into()));
    }
    grid.sort_unstable();
    grid.dedup();
    Ok(grid)
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<()> {
    let k_grid = parse_k_grid(&args.k_grid)?;
    let dataset = load_file(&args.pairs, args.dimension)?;
    if dataset.is_empty() || dataset.len() % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "pairs file needs an even, nonzero number of rows (found {})",
            dataset.len()
        )));
    }
    let dim = dataset.dimension();
    let schemes: Vec<Scheme> = args
        .schemes
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| Scheme::parse(s, dim))
        .collect::<Result<_>>()?;
    let vectors = dataset.vectors();
    let mut reports = Vec::with_capacity(vectors.len() / 2);
    for (p, pair) in vectors.chunks(2).enumerate() {
        let report = simulate(&pair[0], &pair[1], &k_grid, &schemes, args.reps, args.seed)
            .map_err(|e| match e {
                Error::InvalidArgument(m) => Error::InvalidArgument(format!("pair {}: {m}", p + 1)),
                other => other,
            })?;
        reports.push(report.with_pair((p + 1).to_string()));
    }
    write_output(&args.out, |out| write_csv(&reports, out))
}

fn parse_lambdas(text: Option<&str>) -> Result<Vec<f64>> {
    let Some(text) = text else {
        return Ok(DEFAULT_LAMBDA_GRID.to_vec());
    };
    let lambdas: Vec<f64> = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .ok()
                .filter(|l| l.is_finite() && *l > 0.0)
                .ok_or_else(|| Error::InvalidArgument(format!("bad lambda '{s}'")))
        })
        .collect::<Result<_>>()?;
    if lambdas.is_empty() {
        return Err(Error::InvalidArgument("empty lambda list".into()));
    }
    Ok(lambdas)
}

fn raw_rows(dataset: &Dataset) -> Vec<(i64, SparseVector)> {
    dataset.rows().iter().map(|e| (e.label, e.vector.clone())).collect()
}

/// Picks the first lambda with the highest accuracy.
fn best(sweep: &[(f64, f64)]) -> f64 {
    sweep
        .iter()
        .fold((sweep[0].0, f64::NEG_INFINITY), |acc, &(l, a)| if a > acc.1 { (l, a) } else { acc })
        .0
}

fn report_sweep(sweep: &[(f64, f64)]) -> Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    for (lambda, acc) in sweep {
        writeln!(out, "lambda={lambda:e} accuracy={acc:.6}")?;
    }
    Ok(())
}

pub fn train_cmd(args: &TrainArgs) -> Result<()> {
    let lambdas = parse_lambdas(args.lambdas.as_deref())?;
    if lambdas.len() > 1 && args.test.is_none() {
        return Err(Error::InvalidArgument(
            "several lambdas need --test to choose among them; pass a single --lambdas value".into(),
        ));
    }
    if args.epochs == 0 {
        return Err(Error::InvalidArgument("--epochs must be at least 1".into()));
    }
    let base = TrainConfig { epochs: args.epochs, lambda: lambdas[0], seed: args.seed, loss: args.loss };

    let model = if args.raw {
        let train_set = load_file(&args.train, None)?;
        let (train_set, test_set) = match &args.test {
            Some(test) => {
                let test_set = load_file(test, None)?;
                let dim = train_set.dimension().max(test_set.dimension());
                (train_set.with_dimension(dim)?, Some(test_set.with_dimension(dim)?))
            }
            None => (train_set, None),
        };
        let rows = raw_rows(&train_set);
        let lambda = match &test_set {
            Some(test_set) => {
                let test_rows = raw_rows(test_set);
                let sweep = lambdas
                    .iter()
                    .map(|&lambda| {
                        let m = train_raw(&rows, &TrainConfig { lambda, ..base })?;
                        Ok((lambda, evaluate_raw(&m, &test_rows)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                report_sweep(&sweep)?;
                best(&sweep)
            }
            None => lambdas[0],
        };
        train_raw(&rows, &TrainConfig { lambda, ..base })?
    } else {
        let budget = BitBudget::new(args.bi.expect("clap"), args.bt.expect("clap"))?;
        let rows = read_libsvm(open(&args.train)?, budget)?;
        let lambda = match &args.test {
            Some(test) => {
                let test_rows = read_libsvm(open(test)?, budget)?;
                let sweep = lambda_sweep(&rows, &test_rows, &lambdas, &base)?;
                report_sweep(&sweep)?;
                best(&sweep)
            }
            None => lambdas[0],
        };
        train(&rows, &TrainConfig { lambda, ..base })?
    };
    write_output(&args.out, |out| write_model(&model, out))
}

pub fn eval_cmd(args: &EvalArgs) -> Result<()> {
    let model: learn::LinearModel = read_model(open(&args.model)?)?;
    let accuracy = match model.layout() {
        FeatureLayout::Encoded { budget, .. } => evaluate(&model, &read_libsvm(open(&args.test)?, budget)?)?,
        FeatureLayout::Raw { dimension } => {
            let test_set = load_file(&args.test, Some(dimension))?;
            evaluate_raw(&model, &raw_rows(&test_set))?
        }
    };
    println!("accuracy={accuracy:.6}");
    Ok(())
}
