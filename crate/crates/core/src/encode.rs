//! Bit truncation of CWS samples and their expansion into sparse binary
//! features for linear learners.
//!
//! A sample `(i*, t*)` keeps the lowest `bi` bits of `i*` and the lowest `bt`
//! bits of `t*` (Euclidean remainder, so negative `t*` keeps its true
//! parity). The code is laid out as `(i* mod 2^bi) * 2^bt + (t* mod 2^bt)`.
//! `bt = 0` discards `t*` entirely.
//!
//! Repetition `j` owns the block `[j * 2^(bi+bt), (j+1) * 2^(bi+bt))` of the
//! expanded vector, which holds exactly one 1. The inner product of two
//! expansions therefore counts the repetitions whose codes collide.

use std::fmt;
use std::io::Write;

use crate::cws::{CwsSample, Sketch};
use crate::error::{Error, Result};

pub const MAX_BITS: u32 = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct BitBudget {
    bi: u32,
    bt: u32,
}

impl BitBudget {
    pub fn new(bi: u32, bt: u32) -> Result<Self> {
        if bi > MAX_BITS || bt > MAX_BITS {
            return Err(Error::BitBudgetRange { bi, bt });
        }
        Ok(Self { bi, bt })
    }

    /// Enough `i*` bits to be injective on `[0, dimension)`, no `t*` bits.
    pub fn zero_bit(dimension: usize) -> Self {
        Self {
            bi: bits_for(dimension).max(1),
            bt: 0,
        }
    }

    pub fn bi(self) -> u32 {
        self.bi
    }

    pub fn bt(self) -> u32 {
        self.bt
    }

    pub fn total_bits(self) -> u32 {
        self.bi + self.bt
    }

    /// Size of one repetition block, `2^(bi+bt)`.
    pub fn block_size(self) -> u64 {
        1u64 << self.total_bits().min(63)
    }
}

impl fmt::Display for BitBudget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bi={},bt={}", self.bi, self.bt)
    }
}

/// `ceil(log2(n))`, with `bits_for(0) == bits_for(1) == 0`.
pub fn bits_for(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

/// Truncated code of one sample, in `[0, 2^(bi+bt))`.
#[inline]
pub fn truncate(sample: CwsSample, budget: BitBudget) -> u64 {
    let i_low = if budget.bi >= 32 {
        sample.istar as u64
    } else {
        (sample.istar as u64) & ((1u64 << budget.bi) - 1)
    };
    let t_low = sample.tstar.rem_euclid(1i64 << budget.bt) as u64;
    (i_low << budget.bt) | t_low
}

/// Sparse binary expansion of a sketch: one active index per repetition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EncodedVector {
    budget: BitBudget,
    indices: Vec<u64>,
}

impl EncodedVector {
    /// Rebuilds an encoding from its active indices, checking the block
    /// structure.
    pub fn from_indices(budget: BitBudget, indices: Vec<u64>) -> Result<Self> {
        check_encodable(indices.len(), budget)?;
        let block = budget.block_size();
        for (j, &idx) in indices.iter().enumerate() {
            if idx / block != j as u64 {
                return Err(Error::OutOfRange(format!(
                    "index {idx} is outside repetition block {j} of size {block}"
                )));
            }
        }
        Ok(Self { budget, indices })
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }

    pub fn budget(&self) -> BitBudget {
        self.budget
    }

    /// Active indices, ascending, one per block.
    pub fn indices(&self) -> &[u64] {
        &self.indices
    }

    /// Total dimension `k * 2^(bi+bt)`.
    pub fn dimension(&self) -> u64 {
        self.k() as u64 * self.budget.block_size()
    }

    /// Truncated code of repetition `j`.
    pub fn code(&self, j: usize) -> u64 {
        self.indices[j] - j as u64 * self.budget.block_size()
    }
}

fn check_encodable(k: usize, budget: BitBudget) -> Result<()> {
    if budget.total_bits() == 0 {
        return Err(Error::ZeroBits);
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let fits = budget.total_bits() < 64
        && (k as u64)
            .checked_mul(1u64 << budget.total_bits())
            .is_some();
    if !fits {
        return Err(Error::EncodingTooLarge {
            k,
            bits: budget.total_bits(),
        });
    }
    Ok(())
}

pub fn encode(sketch: &Sketch, budget: BitBudget) -> Result<EncodedVector> {
    check_encodable(sketch.k(), budget)?;
    let block = budget.block_size();
    let indices = sketch
        .samples()
        .iter()
        .enumerate()
        .map(|(j, &s)| j as u64 * block + truncate(s, budget))
        .collect();
    Ok(EncodedVector { budget, indices })
}

/// Number of repetitions whose codes agree, i.e. the inner product of the
/// two binary expansions.
pub fn inner(eu: &EncodedVector, ev: &EncodedVector) -> Result<usize> {
    if eu.budget != ev.budget {
        return Err(Error::IncompatibleEncodings(format!(
            "budgets {} and {}",
            eu.budget, ev.budget
        )));
    }
    if eu.k() != ev.k() {
        return Err(Error::IncompatibleEncodings(format!("k = {} and {}", eu.k(), ev.k())));
    }
    Ok(eu
        .indices
        .iter()
        .zip(&ev.indices)
        .filter(|(a, b)| a == b)
        .count())
}

/// Writes one LIBSVM sparse line per encoding: `<label> <idx>:1 ...` with
/// 1-based ascending feature indices.
pub fn write_libsvm<W: Write>(rows: &[(i64, EncodedVector)], mut out: W) -> Result<()> {
    let mut line = String::new();
    for (label, ev) in rows {
        use std::fmt::Write as _;
        line.clear();
        let _ = write!(line, "{label}");
        for idx in &ev.indices {
            let _ = write!(line, " {}:1", idx + 1);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Parses LIBSVM lines produced by [`write_libsvm`] back into encodings.
/// `k` is taken from the first row; every row must match it.
pub fn read_libsvm<R: std::io::BufRead>(input: R, budget: BitBudget) -> Result<Vec<(i64, EncodedVector)>> {
    let mut rows = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line_no = n + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let label = crate::data::parse_label(tokens.next().unwrap_or_default(), line_no)?;
        let mut indices = Vec::new();
        for token in tokens {
            let (i, v) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected idx:value, got '{token}'")))?;
            let idx = i
                .parse::<u64>()
                .ok()
                .filter(|&i| i >= 1)
                .ok_or_else(|| Error::parse(line_no, format!("bad feature index '{i}'")))?;
            if v.parse::<f64>().ok() != Some(1.0) {
                return Err(Error::parse(line_no, format!("encoded features must be 1, got '{v}'")));
            }
            indices.push(idx - 1);
        }
        let ev = EncodedVector::from_indices(budget, indices)
            .map_err(|e| Error::parse(line_no, e.to_string()))?;
        if let Some((_, first)) = rows.first() {
            let first: &EncodedVector = first;
            if first.k() != ev.k() {
                return Err(Error::parse(
                    line_no,
                    format!("row has k = {} but earlier rows have k = {}", ev.k(), first.k()),
                ));
            }
        }
        rows.push((label, ev));
    }
    Ok(rows)
}
