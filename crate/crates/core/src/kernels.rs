//! Exact min-max family kernels and Gram matrices for precomputed-kernel
//! solvers.
//!
//! All kernels walk the two supports with a sorted merge, so absent
//! coordinates contribute weight zero and the cost is `O(nnz(u) + nnz(v))`.
//! Sums are compensated so that large Gram matrices stay symmetric to the
//! last bit.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::sparse::SparseVector;

/// Tolerance used when checking the normalization preconditions.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelKind {
    MinMax,
    NMinMax,
    Intersection,
    Resemblance,
    Linear,
}

impl KernelKind {
    pub const ALL: [KernelKind; 5] = [
        KernelKind::MinMax,
        KernelKind::NMinMax,
        KernelKind::Intersection,
        KernelKind::Resemblance,
        KernelKind::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::MinMax => "minmax",
            KernelKind::NMinMax => "nminmax",
            KernelKind::Intersection => "intersection",
            KernelKind::Resemblance => "resemblance",
            KernelKind::Linear => "linear",
        }
    }

    pub fn evaluate(self, u: &SparseVector, v: &SparseVector) -> Result<f64> {
        match self {
            KernelKind::MinMax => min_max(u, v),
            KernelKind::NMinMax => n_min_max(u, v),
            KernelKind::Intersection => intersection(u, v),
            KernelKind::Resemblance => resemblance(u, v),
            KernelKind::Linear => linear(u, v),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KernelKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown kernel '{s}'")))
    }
}

/// Calls `f(u_i, v_i)` for every coordinate in the union of the supports,
/// in increasing index order.
#[inline]
fn for_each_union(u: &SparseVector, v: &SparseVector, mut f: impl FnMut(f64, f64)) {
    let (ui, uw) = (u.indices(), u.values());
    let (vi, vw) = (v.indices(), v.values());
    let (mut a, mut b) = (0, 0);
    while a < ui.len() && b < vi.len() {
        match ui[a].cmp(&vi[b]) {
            std::cmp::Ordering::Less => {
                f(uw[a], 0.0);
                a += 1;
            }
            std::cmp::Ordering::Greater => {
                f(0.0, vw[b]);
                b += 1;
            }
            std::cmp::Ordering::Equal => {
                f(uw[a], vw[b]);
                a += 1;
                b += 1;
            }
        }
    }
    for &w in &uw[a..] {
        f(w, 0.0);
    }
    for &w in &vw[b..] {
        f(0.0, w);
    }
}

fn check_dimensions(u: &SparseVector, v: &SparseVector) -> Result<()> {
    if u.dimension() != v.dimension() {
        return Err(Error::DimensionMismatch {
            left: u.dimension(),
            right: v.dimension(),
        });
    }
    Ok(())
}

fn check_pair(u: &SparseVector, v: &SparseVector) -> Result<()> {
    check_dimensions(u, v)?;
    if u.is_empty() && v.is_empty() {
        return Err(Error::BothEmpty);
    }
    Ok(())
}

fn check_sum_to_one(which: &'static str, u: &SparseVector) -> Result<()> {
    let sum = u.sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            which,
            norm: "sum",
            value: sum,
        });
    }
    Ok(())
}

fn check_unit_l2(which: &'static str, u: &SparseVector) -> Result<()> {
    let sq = crate::numeric::compensated_sum(u.values().iter().map(|w| w * w));
    if (sq - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::NotNormalized {
            which,
            norm: "squared-l2",
            value: sq,
        });
    }
    Ok(())
}

fn min_max_unchecked(u: &SparseVector, v: &SparseVector) -> f64 {
    let mut num = CompensatedSum::new();
    let mut den = CompensatedSum::new();
    for_each_union(u, v, |a, b| {
        num.add(a.min(b));
        den.add(a.max(b));
    });
    num.value() / den.value()
}

/// Min-max kernel: `sum_i min(u_i, v_i) / sum_i max(u_i, v_i)`.
pub fn min_max(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    check_pair(u, v)?;
    Ok(min_max_unchecked(u, v))
}

/// Resemblance (Jaccard similarity of the supports).
pub fn resemblance(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    check_pair(u, v)?;
    let (mut both, mut either) = (0u64, 0u64);
    for_each_union(u, v, |a, b| {
        either += 1;
        if a > 0.0 && b > 0.0 {
            both += 1;
        }
    });
    Ok(both as f64 / either as f64)
}

/// Intersection kernel `sum_i min(u_i, v_i)`; both inputs must sum to one.
pub fn intersection(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    check_dimensions(u, v)?;
    check_sum_to_one("left", u)?;
    check_sum_to_one("right", v)?;
    let mut num = CompensatedSum::new();
    for_each_union(u, v, |a, b| num.add(a.min(b)));
    Ok(num.value())
}

/// Min-max kernel on sum-to-one normalized inputs.
pub fn n_min_max(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    check_dimensions(u, v)?;
    check_sum_to_one("left", u)?;
    check_sum_to_one("right", v)?;
    Ok(min_max_unchecked(u, v))
}

/// Inner product of two unit-l2 vectors.
pub fn linear(u: &SparseVector, v: &SparseVector) -> Result<f64> {
    check_dimensions(u, v)?;
    check_unit_l2("left", u)?;
    check_unit_l2("right", v)?;
    let mut dot = CompensatedSum::new();
    for_each_union(u, v, |a, b| dot.add(a * b));
    Ok(dot.value())
}

/// Dense row-major kernel matrix between a left and a right vector set.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    kind: KernelKind,
}

impl GramMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    /// Writes the matrix in the LIBSVM precomputed-kernel layout, one line per
    /// left vector: `<label> 0:<serial> 1:<K(x,x1)> 2:<K(x,x2)> ...`.
    /// Serial numbers start at 1.
    pub fn write_precomputed<W: Write>(&self, labels: &[i64], mut out: W) -> Result<()> {
        if labels.len() != self.rows {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} kernel rows",
                labels.len(),
                self.rows
            )));
        }
        let mut line = String::new();
        for (r, label) in labels.iter().enumerate() {
            use std::fmt::Write as _;
            line.clear();
            let _ = write!(line, "{label} 0:{}", r + 1);
            for (c, value) in self.row(r).iter().enumerate() {
                let _ = write!(line, " {}:{}", c + 1, value);
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

/// Computes `kernel(left[a], right[b])` for every pair. Rows are evaluated in
/// parallel; the result does not depend on the thread count.
pub fn gram(left: &[SparseVector], right: &[SparseVector], kind: KernelKind) -> Result<GramMatrix> {
    let rows: Vec<Result<Vec<f64>>> = left
        .par_iter()
        .enumerate()
        .map(|(r, u)| {
            right
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    kind.evaluate(u, v).map_err(|e| Error::Gram {
                        row: r,
                        col: c,
                        source: Box::new(e),
                    })
                })
                .collect()
        })
        .collect();
    let mut values = Vec::with_capacity(left.len() * right.len());
    for row in rows {
        values.extend(row?);
    }
    Ok(GramMatrix {
        rows: left.len(),
        cols: right.len(),
        values,
        kind,
    })
}
