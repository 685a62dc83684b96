//! Minimal linear classifier for encoded CWS features.
//!
//! Trains one-vs-rest binary models by averaged stochastic subgradient
//! descent on
//!
//! ```text
//! lambda / 2 * |w|^2 + 1/n * sum_i loss(y_i * (w . x_i + b))
//! ```
//!
//! with Pegasos step sizes `1 / (lambda * (t + 1))`. The bias is an extra
//! always-on feature and is regularized with the rest. Because the loss is
//! averaged over examples, duplicating every row leaves the objective (and
//! so the decision function) unchanged at the same `lambda`; in the summed
//! form `C * sum_i loss` that is the same as halving the regularization.
//!
//! Weights are stored as `scale * raw` so the shrinkage step is O(1) and each
//! update touches only the example's nonzeros. The running average uses the
//! same trick: `avg = (acc + beta * raw) / gamma`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::encode::{BitBudget, EncodedVector};
use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// `1e-6, 1e-5, ..., 1e2`.
pub const DEFAULT_LAMBDA_GRID: [f64; 9] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0, 1e1, 1e2];

/// Upper bound on the dense weight length of one class.
const MAX_DENSE_DIMENSION: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Loss {
    Hinge,
    Logistic,
}

impl fmt::Display for Loss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Loss::Hinge => "hinge",
            Loss::Logistic => "logistic",
        })
    }
}

impl FromStr for Loss {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hinge" => Ok(Loss::Hinge),
            "logistic" => Ok(Loss::Logistic),
            _ => Err(Error::InvalidArgument(format!("unknown loss '{s}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lambda: f64,
    pub seed: u64,
    pub loss: Loss,
}

impl TrainConfig {
    pub fn new(lambda: f64, seed: u64) -> Self {
        Self {
            epochs: 10,
            lambda,
            seed,
            loss: Loss::Hinge,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::OutOfRange(format!("lambda must be > 0, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Something a linear model can score: a sparse list of `(index, value)`.
pub trait Features: Sync {
    fn for_each_feature(&self, f: impl FnMut(usize, f64));
}

impl Features for EncodedVector {
    #[inline]
    fn for_each_feature(&self, mut f: impl FnMut(usize, f64)) {
        for &idx in self.indices() {
            f(idx as usize, 1.0);
        }
    }
}

impl Features for SparseVector {
    #[inline]
    fn for_each_feature(&self, mut f: impl FnMut(usize, f64)) {
        for (i, w) in self.iter() {
            f(i, w);
        }
    }
}

/// The input space a model was trained on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureLayout {
    Encoded { k: usize, budget: BitBudget },
    Raw { dimension: usize },
}

impl FeatureLayout {
    pub fn dimension(&self) -> usize {
        match *self {
            FeatureLayout::Encoded { k, budget } => k * budget.block_size() as usize,
            FeatureLayout::Raw { dimension } => dimension,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    layout: FeatureLayout,
    classes: Vec<i64>,
    weights: Vec<Vec<f64>>,
    biases: Vec<f64>,
    lambda: f64,
    loss: Loss,
}

impl LinearModel {
    /// A model with all weights and biases zero.
    pub fn zero(layout: FeatureLayout, mut classes: Vec<i64>, lambda: f64, loss: Loss) -> Self {
        classes.sort_unstable();
        classes.dedup();
        let dim = layout.dimension();
        Self {
            weights: vec![vec![0.0; dim]; classes.len()],
            biases: vec![0.0; classes.len()],
            layout,
            classes,
            lambda,
            loss,
        }
    }

    pub fn layout(&self) -> FeatureLayout {
        self.layout
    }

    pub fn classes(&self) -> &[i64] {
        &self.classes
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn loss(&self) -> Loss {
        self.loss
    }

    pub fn weights(&self, class_index: usize) -> &[f64] {
        &self.weights[class_index]
    }

    pub fn weights_mut(&mut self, class_index: usize) -> &mut [f64] {
        &mut self.weights[class_index]
    }

    pub fn bias(&self, class_index: usize) -> f64 {
        self.biases[class_index]
    }

    pub fn set_bias(&mut self, class_index: usize, bias: f64) {
        self.biases[class_index] = bias;
    }

    /// Squared l2 norm of all weights and biases.
    pub fn squared_norm(&self) -> f64 {
        self.weights
            .iter()
            .flatten()
            .chain(&self.biases)
            .map(|w| w * w)
            .sum()
    }

    fn check_encoded(&self, x: &EncodedVector) -> Result<()> {
        match self.layout {
            FeatureLayout::Encoded { k, budget } if k == x.k() && budget == x.budget() => Ok(()),
            FeatureLayout::Encoded { k, budget } => Err(Error::IncompatibleEncodings(format!(
                "model expects k={k} {budget}, got k={} {}",
                x.k(),
                x.budget()
            ))),
            FeatureLayout::Raw { .. } => Err(Error::IncompatibleEncodings(
                "model was trained on raw features".into(),
            )),
        }
    }

    fn check_raw(&self, x: &SparseVector) -> Result<()> {
        match self.layout {
            FeatureLayout::Raw { dimension } if dimension == x.dimension() => Ok(()),
            FeatureLayout::Raw { dimension } => Err(Error::DimensionMismatch {
                left: dimension,
                right: x.dimension(),
            }),
            FeatureLayout::Encoded { .. } => Err(Error::IncompatibleEncodings(
                "model was trained on encoded features".into(),
            )),
        }
    }

    /// `w_c . x + b_c` for every class, reporting each weight coordinate read
    /// to `visit`.
    fn scores_traced<F: Features>(&self, x: &F, mut visit: impl FnMut(usize)) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| {
                let mut s = *b;
                x.for_each_feature(|i, v| {
                    visit(i);
                    s += w[i] * v;
                });
                s
            })
            .collect()
    }

    fn argmax(&self, scores: &[f64]) -> i64 {
        // Classes are sorted, and a strict comparison keeps the smallest label on ties.
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate().skip(1) {
            if s > scores[best] {
                best = c;
            }
        }
        self.classes[best]
    }

    pub fn scores(&self, x: &EncodedVector) -> Result<Vec<f64>> {
        self.check_encoded(x)?;
        Ok(self.scores_traced(x, |_| {}))
    }

    /// Weight coordinates read when scoring `x` against one class.
    pub fn touched_coordinates(&self, x: &EncodedVector) -> Result<Vec<usize>> {
        self.check_encoded(x)?;
        let mut touched = Vec::new();
        if let (Some(w), Some(b)) = (self.weights.first(), self.biases.first()) {
            let single = LinearModel {
                layout: self.layout,
                classes: vec![self.classes[0]],
                weights: vec![w.clone()],
                biases: vec![*b],
                lambda: self.lambda,
                loss: self.loss,
            };
            single.scores_traced(x, |i| touched.push(i));
        }
        Ok(touched)
    }

    pub fn predict(&self, x: &EncodedVector) -> Result<i64> {
        self.check_encoded(x)?;
        Ok(self.argmax(&self.scores_traced(x, |_| {})))
    }

    pub fn predict_raw(&self, x: &SparseVector) -> Result<i64> {
        self.check_raw(x)?;
        Ok(self.argmax(&self.scores_traced(x, |_| {})))
    }
}

/// Fraction of correct predictions.
pub fn evaluate(model: &LinearModel, test: &[(i64, EncodedVector)]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let correct: Result<Vec<bool>> = test
        .par_iter()
        .map(|(label, x)| Ok(model.predict(x)? == *label))
        .collect();
    Ok(correct?.into_iter().filter(|&c| c).count() as f64 / test.len() as f64)
}

/// [`evaluate`] for models trained with [`train_raw`].
pub fn evaluate_raw(model: &LinearModel, test: &[(i64, SparseVector)]) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyInput("test set"));
    }
    let correct: Result<Vec<bool>> = test
        .par_iter()
        .map(|(label, x)| Ok(model.predict_raw(x)? == *label))
        .collect();
    Ok(correct?.into_iter().filter(|&c| c).count() as f64 / test.len() as f64)
}

fn distinct_classes<F>(rows: &[(i64, F)]) -> Result<Vec<i64>> {
    let mut classes: Vec<i64> = rows.iter().map(|(l, _)| *l).collect();
    classes.sort_unstable();
    classes.dedup();
    match classes.len() {
        0 => Err(Error::EmptyInput("training set")),
        1 => Err(Error::SingleClass(classes[0])),
        _ => Ok(classes),
    }
}

/// Trains on encoded CWS features. All rows must share `k` and the budget.
pub fn train(rows: &[(i64, EncodedVector)], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let classes = distinct_classes(rows)?;
    let first = &rows[0].1;
    let (k, budget) = (first.k(), first.budget());
    if let Some((n, (_, x))) = rows
        .iter()
        .enumerate()
        .find(|(_, (_, x))| x.k() != k || x.budget() != budget)
    {
        return Err(Error::IncompatibleEncodings(format!(
            "row {} has k={} {} but row 1 has k={k} {budget}",
            n + 1,
            x.k(),
            x.budget()
        )));
    }
    let dim = k as u64 * budget.block_size();
    if dim > MAX_DENSE_DIMENSION {
        return Err(Error::EncodingTooLarge {
            k,
            bits: budget.total_bits(),
        });
    }
    fit(rows, classes, FeatureLayout::Encoded { k, budget }, cfg)
}

/// Trains on raw sparse vectors (e.g. a linear baseline).
pub fn train_raw(rows: &[(i64, SparseVector)], cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let classes = distinct_classes(rows)?;
    let dimension = rows[0].1.dimension();
    if let Some((_, x)) = rows.iter().find(|(_, x)| x.dimension() != dimension) {
        return Err(Error::DimensionMismatch {
            left: dimension,
            right: x.dimension(),
        });
    }
    fit(rows, classes, FeatureLayout::Raw { dimension }, cfg)
}

fn fit<F: Features>(
    rows: &[(i64, F)],
    classes: Vec<i64>,
    layout: FeatureLayout,
    cfg: &TrainConfig,
) -> Result<LinearModel> {
    let dim = layout.dimension();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let schedule: Vec<Vec<usize>> = (0..cfg.epochs)
        .map(|_| {
            order.shuffle(&mut rng);
            order.clone()
        })
        .collect();

    let fitted: Vec<(Vec<f64>, f64)> = classes
        .par_iter()
        .map(|&class| {
            let targets: Vec<f64> = rows
                .iter()
                .map(|(l, _)| if *l == class { 1.0 } else { -1.0 })
                .collect();
            fit_binary(rows, &targets, dim, &schedule, cfg)
        })
        .collect();

    let (weights, biases) = fitted.into_iter().unzip();
    Ok(LinearModel {
        layout,
        classes,
        weights,
        biases,
        lambda: cfg.lambda,
        loss: cfg.loss,
    })
}

/// Averaged SGD for one binary problem. The bias lives at index `dim`.
fn fit_binary<F: Features>(
    rows: &[(i64, F)],
    targets: &[f64],
    dim: usize,
    schedule: &[Vec<usize>],
    cfg: &TrainConfig,
) -> (Vec<f64>, f64) {
    let lambda = cfg.lambda;
    let bias = dim;
    let mut raw = vec![0.0; dim + 1];
    let mut scale = 1.0f64;
    // Average starts after the first epoch (or immediately for one epoch).
    let average_from = if schedule.len() > 1 { rows.len() } else { 0 };
    let mut acc = vec![0.0; dim + 1];
    let (mut beta, mut gamma) = (0.0f64, 1.0f64);
    let mut averaged = 0usize;

    let mut t = 0usize;
    for epoch in schedule {
        for &n in epoch {
            t += 1;
            let (_, x) = &rows[n];
            let y = targets[n];
            let mut dot = raw[bias];
            x.for_each_feature(|i, v| dot += raw[i] * v);
            let margin = y * scale * dot;
            let step = 1.0 / (lambda * (t as f64 + 1.0));
            let d = match cfg.loss {
                Loss::Hinge if margin < 1.0 => y,
                Loss::Hinge => 0.0,
                Loss::Logistic => y / (1.0 + margin.exp()),
            };
            scale *= 1.0 - lambda * step;
            let coeff = step * d / scale;
            if coeff != 0.0 {
                x.for_each_feature(|i, v| raw[i] += coeff * v);
                raw[bias] += coeff;
                if averaged > 0 {
                    // acc absorbs the part of the old raw vector that beta still refers to.
                    let c = beta * coeff;
                    x.for_each_feature(|i, v| acc[i] -= c * v);
                    acc[bias] -= c;
                }
            }
            if t > average_from {
                averaged += 1;
                if averaged == 1 {
                    acc.iter_mut().for_each(|a| *a = 0.0);
                    gamma = 1.0;
                    beta = scale;
                } else {
                    let mu = 1.0 / averaged as f64;
                    gamma /= 1.0 - mu;
                    beta += mu * scale * gamma;
                }
            }
            if scale < 1e-9 {
                raw.iter_mut().for_each(|r| *r *= scale);
                beta /= scale;
                scale = 1.0;
            }
            if gamma > 1e100 {
                acc.iter_mut().for_each(|a| *a /= gamma);
                beta /= gamma;
                gamma = 1.0;
            }
        }
    }

    let mut w: Vec<f64> = if averaged > 0 {
        acc.iter().zip(&raw).map(|(a, r)| (a + beta * r) / gamma).collect()
    } else {
        raw.iter().map(|r| r * scale).collect()
    };
    let b = w.pop().expect("bias slot");
    (w, b)
}

/// Accuracy on `test` of a model trained on `train` for each lambda.
pub fn lambda_sweep(
    train_rows: &[(i64, EncodedVector)],
    test_rows: &[(i64, EncodedVector)],
    lambdas: &[f64],
    base: &TrainConfig,
) -> Result<Vec<(f64, f64)>> {
    lambdas
        .iter()
        .map(|&lambda| {
            let model = train(train_rows, &TrainConfig { lambda, ..*base })?;
            Ok((lambda, evaluate(&model, test_rows)?))
        })
        .collect()
}

const MODEL_MAGIC: &str = "#cws-linear-model v1";

/// Writes the text model format:
///
/// ```text
/// #cws-linear-model v1
/// layout encoded k=<k> bi=<bi> bt=<bt>      (or: layout raw dimension=<D>)
/// loss hinge
/// lambda <lambda>
/// classes <c1> <c2> ...
/// class <c1> bias <b1>
/// <w_0> <w_1> ... <w_{dim-1}>
/// ...
/// ```
pub fn write_model<W: Write>(model: &LinearModel, mut out: W) -> Result<()> {
    writeln!(out, "{MODEL_MAGIC}")?;
    match model.layout {
        FeatureLayout::Encoded { k, budget } => writeln!(
            out,
            "layout encoded k={k} bi={} bt={}",
            budget.bi(),
            budget.bt()
        )?,
        FeatureLayout::Raw { dimension } => writeln!(out, "layout raw dimension={dimension}")?,
    }
    writeln!(out, "loss {}", model.loss)?;
    writeln!(out, "lambda {}", model.lambda)?;
    let classes: Vec<String> = model.classes.iter().map(|c| c.to_string()).collect();
    writeln!(out, "classes {}", classes.join(" "))?;
    let mut line = String::new();
    for ((class, w), b) in model.classes.iter().zip(&model.weights).zip(&model.biases) {
        writeln!(out, "class {class} bias {b}")?;
        line.clear();
        for (i, x) in w.iter().enumerate() {
            use std::fmt::Write as _;
            if i > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{x}");
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn read_model<R: BufRead>(input: R) -> Result<LinearModel> {
    let mut lines = input.lines().enumerate().map(|(n, l)| (n + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, line)) => Ok((n, line?)),
            None => Err(Error::parse(0, format!("model file ends before {what}"))),
        }
    };
    let (n, magic) = next("header")?;
    if magic.trim() != MODEL_MAGIC {
        return Err(Error::parse(n, "not a cws linear model file"));
    }

    let kv = |field: &str, key: &str, n: usize| -> Result<u64> {
        field
            .strip_prefix(key)
            .and_then(|v| v.strip_prefix('='))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::parse(n, format!("expected {key}=<integer>, got '{field}'")))
    };
    let (n, layout_line) = next("layout")?;
    let fields: Vec<&str> = layout_line.split_whitespace().collect();
    let layout = match fields.as_slice() {
        ["layout", "encoded", k, bi, bt] => FeatureLayout::Encoded {
            k: kv(k, "k", n)? as usize,
            budget: BitBudget::new(kv(bi, "bi", n)? as u32, kv(bt, "bt", n)? as u32)?,
        },
        ["layout", "raw", d] => FeatureLayout::Raw {
            dimension: kv(d, "dimension", n)? as usize,
        },
        _ => return Err(Error::parse(n, "malformed layout line")),
    };
    if layout.dimension() as u64 > MAX_DENSE_DIMENSION {
        return Err(Error::parse(n, "model dimension too large"));
    }

    let (n, loss_line) = next("loss")?;
    let loss = loss_line
        .strip_prefix("loss ")
        .ok_or_else(|| Error::parse(n, "expected 'loss <name>'"))?
        .trim()
        .parse::<Loss>()?;
    let (n, lambda_line) = next("lambda")?;
    let lambda = lambda_line
        .strip_prefix("lambda ")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| Error::parse(n, "expected 'lambda <value>'"))?;
    let (n, classes_line) = next("classes")?;
    let classes = classes_line
        .strip_prefix("classes ")
        .ok_or_else(|| Error::parse(n, "expected 'classes ...'"))?
        .split_whitespace()
        .map(|c| c.parse::<i64>().map_err(|_| Error::parse(n, format!("bad class '{c}'"))))
        .collect::<Result<Vec<_>>>()?;

    let dim = layout.dimension();
    let mut weights = Vec::with_capacity(classes.len());
    let mut biases = Vec::with_capacity(classes.len());
    for &class in &classes {
        let (n, head) = next("class header")?;
        let fields: Vec<&str> = head.split_whitespace().collect();
        let bias = match fields.as_slice() {
            ["class", c, "bias", b] if c.parse::<i64>().ok() == Some(class) => b
                .parse::<f64>()
                .map_err(|_| Error::parse(n, format!("bad bias '{b}'")))?,
            _ => return Err(Error::parse(n, format!("expected 'class {class} bias <b>'"))),
        };
        let (n, row) = next("weights")?;
        let w = row
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|_| Error::parse(n, format!("bad weight '{x}'"))))
            .collect::<Result<Vec<_>>>()?;
        if w.len() != dim {
            return Err(Error::parse(n, format!("expected {dim} weights, found {}", w.len())));
        }
        weights.push(w);
        biases.push(bias);
    }
    Ok(LinearModel {
        layout,
        classes,
        weights,
        biases,
        lambda,
        loss,
    })
}
