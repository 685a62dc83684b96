//! LIBSVM sparse datasets and the normalization transforms the kernels
//! expect.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::sparse::SparseVector;

/// A labelled row.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub label: i64,
    pub vector: SparseVector,
}

/// Labelled nonnegative vectors sharing one dimension.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Dataset {
    dimension: usize,
    rows: Vec<Example>,
}

impl Dataset {
    pub fn new(dimension: usize, rows: Vec<Example>) -> Result<Self> {
        for (n, row) in rows.iter().enumerate() {
            if row.vector.dimension() != dimension {
                return Err(Error::InvalidArgument(format!(
                    "row {} has dimension {}, dataset has {dimension}",
                    n + 1,
                    row.vector.dimension()
                )));
            }
        }
        Ok(Self { dimension, rows })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rows(&self) -> &[Example] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<Example> {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn labels(&self) -> Vec<i64> {
        self.rows.iter().map(|r| r.label).collect()
    }

    pub fn vectors(&self) -> Vec<SparseVector> {
        self.rows.iter().map(|r| r.vector.clone()).collect()
    }

    /// Re-declares the dimension of every row; fails if any stored index
    /// would fall outside it.
    pub fn with_dimension(self, dimension: usize) -> Result<Self> {
        let rows = self
            .rows
            .into_iter()
            .map(|r| {
                Ok(Example {
                    label: r.label,
                    vector: r.vector.with_dimension(dimension)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dimension, rows })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadOptions {
    /// Declared dimension; inferred as the largest index when absent.
    pub dimension: Option<usize>,
    /// Map listed values `z` in `[-1, 1]` to `(z + 1) / 2` while loading.
    /// Absent entries stay zero.
    pub shift_half: bool,
}

pub(crate) fn parse_label(token: &str, line: usize) -> Result<i64> {
    if let Ok(l) = token.parse::<i64>() {
        return Ok(l);
    }
    match token.parse::<f64>() {
        Ok(x) if x.is_finite() && x.fract() == 0.0 && x.abs() < 9e15 => Ok(x as i64),
        _ => Err(Error::parse(line, format!("label '{token}' is not an integer"))),
    }
}

/// Reads LIBSVM sparse text: `<label> <idx>:<val> ...` with 1-based,
/// strictly increasing indices. Lines starting with `#` and blank lines are
/// skipped, as are trailing `# comments`. Zero values are dropped and
/// negative values rejected.
pub fn load<R: BufRead>(input: R, options: LoadOptions) -> Result<Dataset> {
    let mut parsed: Vec<(i64, Vec<(usize, f64)>)> = Vec::new();
    let mut max_index = 0usize;
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_label(tokens.next().unwrap_or_default(), line_no)?;
        let mut entries = Vec::new();
        let mut previous = 0usize;
        for token in tokens {
            let (i, v) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected idx:value, got '{token}'")))?;
            let index: usize = i
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad feature index '{i}'")))?;
            if index == 0 {
                return Err(Error::parse(line_no, "feature indices are 1-based"));
            }
            if index <= previous {
                return Err(Error::parse(
                    line_no,
                    format!("feature index {index} does not increase (previous {previous})"),
                ));
            }
            previous = index;
            let mut value: f64 = v
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad feature value '{v}'")))?;
            if !value.is_finite() {
                return Err(Error::parse(line_no, format!("non-finite value at index {index}")));
            }
            if options.shift_half {
                if !(-1.0..=1.0).contains(&value) {
                    return Err(Error::parse(
                        line_no,
                        format!("value {value} at index {index} is outside [-1, 1]"),
                    ));
                }
                value = (value + 1.0) / 2.0;
            }
            if value < 0.0 {
                return Err(Error::NegativeWeight {
                    line: line_no,
                    index,
                    value,
                });
            }
            if value > 0.0 {
                entries.push((index - 1, value));
            }
            max_index = max_index.max(index);
        }
        parsed.push((label, entries));
    }
    let dimension = match options.dimension {
        Some(d) if d < max_index => {
            return Err(Error::InvalidArgument(format!(
                "declared dimension {d} is smaller than the largest feature index {max_index}"
            )))
        }
        Some(d) => d,
        None => max_index,
    };
    let rows = parsed
        .into_iter()
        .map(|(label, entries)| {
            Ok(Example {
                label,
                vector: SparseVector::new(dimension, entries)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { dimension, rows })
}

/// Writes LIBSVM sparse text. Values use the shortest representation that
/// parses back to the same `f64`, so [`load`] restores the dataset exactly.
pub fn emit<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let mut line = String::new();
    for row in &dataset.rows {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{}", row.label);
        for (i, w) in row.vector.iter() {
            let _ = write!(line, " {}:{}", i + 1, w);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NormalizeMode {
    None,
    SumToOne,
    UnitL2,
    Binarize,
    ShiftHalf,
}

impl NormalizeMode {
    pub fn name(self) -> &'static str {
        match self {
            NormalizeMode::None => "none",
            NormalizeMode::SumToOne => "sum-to-one",
            NormalizeMode::UnitL2 => "unit-l2",
            NormalizeMode::Binarize => "binarize",
            NormalizeMode::ShiftHalf => "shift-half",
        }
    }

    /// Applies the transform to a single vector.
    pub fn apply(self, v: &SparseVector) -> Result<SparseVector> {
        match self {
            NormalizeMode::None => Ok(v.clone()),
            NormalizeMode::SumToOne => {
                if v.is_empty() {
                    return Err(Error::EmptyVector);
                }
                let s = v.sum();
                v.map_weights(|w| w / s)
            }
            NormalizeMode::UnitL2 => {
                if v.is_empty() {
                    return Err(Error::EmptyVector);
                }
                let n = v.l2_norm();
                v.map_weights(|w| w / n)
            }
            NormalizeMode::Binarize => v.map_weights(|_| 1.0),
            NormalizeMode::ShiftHalf => v.map_weights(|z| (z + 1.0) / 2.0),
        }
    }
}

impl fmt::Display for NormalizeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NormalizeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            NormalizeMode::None,
            NormalizeMode::SumToOne,
            NormalizeMode::UnitL2,
            NormalizeMode::Binarize,
            NormalizeMode::ShiftHalf,
        ]
        .into_iter()
        .find(|m| m.name() == s)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown normalization '{s}'")))
    }
}

/// Per-row transform; row order and labels are preserved.
pub fn normalize(dataset: &Dataset, mode: NormalizeMode) -> Result<Dataset> {
    let rows: Vec<Result<Example>> = dataset
        .rows
        .par_iter()
        .enumerate()
        .map(|(n, row)| {
            let vector = mode.apply(&row.vector).map_err(|e| match e {
                Error::EmptyVector => Error::InvalidArgument(format!(
                    "row {} is a zero vector and cannot be {mode}-normalized",
                    n + 1
                )),
                e => e,
            })?;
            Ok(Example {
                label: row.label,
                vector,
            })
        })
        .collect();
    Ok(Dataset {
        dimension: dataset.dimension,
        rows: rows.into_iter().collect::<Result<_>>()?,
    })
}
