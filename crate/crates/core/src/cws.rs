//! Consistent weighted sampling.
//!
//! For every nonzero coordinate `i` of `u` and repetition `j`:
//!
//! ```text
//! t_i   = floor(ln(u_i) / r_i + beta_i)
//! ln a_i = ln(c_i) - r_i * t_i + r_i * beta_i - r_i
//! ```
//!
//! and the sample is `(i*, t_{i*})` with `i* = argmin_i a_i`. Zero
//! coordinates have `a_i = +inf` in the limit and are skipped. The argmin is
//! taken in log space so heavy-tailed weights cannot overflow `exp`.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{draw, CwsDraw, RandomStream};
use crate::sparse::SparseVector;

/// One consistent weighted sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CwsSample {
    pub istar: u32,
    pub tstar: i64,
}

/// Per-coordinate quantities of the sampler.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CwsWorking {
    pub t: i64,
    pub log_a: f64,
}

impl CwsWorking {
    #[inline]
    pub fn compute(d: &CwsDraw, ln_weight: f64) -> Self {
        // `as` saturates, which keeps t finite even for absurd ratios.
        let t = (ln_weight / d.r + d.beta).floor() as i64;
        let tf = t as f64;
        let log_a = d.c.ln() - d.r * tf + d.r * d.beta - d.r;
        Self { t, log_a }
    }
}

/// Argmin over a support given as `(index, ln weight)` pairs.
#[inline]
fn sample_support(support: &[(u64, f64)], j: u64, seed: u64) -> CwsSample {
    let mut best_log_a = f64::INFINITY;
    let mut best = CwsSample { istar: 0, tstar: 0 };
    for (n, &(i, ln_w)) in support.iter().enumerate() {
        let cw = CwsWorking::compute(&draw(RandomStream::new(seed, j, i)), ln_w);
        // Strict comparison keeps the smallest index on ties.
        if n == 0 || cw.log_a < best_log_a {
            best_log_a = cw.log_a;
            best = CwsSample {
                istar: i as u32,
                tstar: cw.t,
            };
        }
    }
    best
}

fn log_support(u: &SparseVector) -> Vec<(u64, f64)> {
    u.iter().map(|(i, w)| (i as u64, w.ln())).collect()
}

/// The sample of `u` for repetition `j` under `seed`.
pub fn cws_sample(u: &SparseVector, j: u64, seed: u64) -> Result<CwsSample> {
    if u.is_empty() {
        return Err(Error::EmptyVector);
    }
    Ok(sample_support(&log_support(u), j, seed))
}

/// `k` consistent weighted samples of one vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Sketch {
    seed: u64,
    dimension: usize,
    samples: Vec<CwsSample>,
}

impl Sketch {
    /// Assembles a sketch from stored samples, validating that every `istar`
    /// is below `dimension`.
    pub fn from_samples(seed: u64, dimension: usize, samples: Vec<CwsSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("a sketch needs k >= 1 samples".into()));
        }
        if let Some(s) = samples.iter().find(|s| s.istar as usize >= dimension) {
            return Err(Error::OutOfRange(format!(
                "istar {} not below dimension {dimension}",
                s.istar
            )));
        }
        Ok(Self {
            seed,
            dimension,
            samples,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k(&self) -> usize {
        self.samples.len()
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn samples(&self) -> &[CwsSample] {
        &self.samples
    }

    /// The sketch made of the first `k` repetitions.
    pub fn prefix(&self, k: usize) -> Result<Sketch> {
        if k == 0 || k > self.k() {
            return Err(Error::InvalidArgument(format!(
                "prefix length {k} outside 1..={}",
                self.k()
            )));
        }
        Ok(Sketch {
            seed: self.seed,
            dimension: self.dimension,
            samples: self.samples[..k].to_vec(),
        })
    }

    /// Errors unless both sketches share seed, `k` and dimension.
    pub fn check_comparable(&self, other: &Sketch) -> Result<()> {
        if self.seed != other.seed {
            return Err(Error::IncompatibleSketches(format!(
                "seeds {} and {}",
                self.seed, other.seed
            )));
        }
        if self.k() != other.k() {
            return Err(Error::IncompatibleSketches(format!(
                "k = {} and {}",
                self.k(),
                other.k()
            )));
        }
        if self.dimension != other.dimension {
            return Err(Error::IncompatibleSketches(format!(
                "dimensions {} and {}",
                self.dimension, other.dimension
            )));
        }
        Ok(())
    }
}

/// Samples `u` for repetitions `0..k`.
pub fn sketch(u: &SparseVector, k: usize, seed: u64) -> Result<Sketch> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if u.is_empty() {
        return Err(Error::EmptyVector);
    }
    let support = log_support(u);
    let samples = (0..k as u64).map(|j| sample_support(&support, j, seed)).collect();
    Ok(Sketch {
        seed,
        dimension: u.dimension(),
        samples,
    })
}

/// Sketches many vectors in parallel; output order follows input order.
pub fn sketch_all(vectors: &[SparseVector], k: usize, seed: u64) -> Result<Vec<Sketch>> {
    let sketches: Vec<Result<Sketch>> = vectors.par_iter().map(|u| sketch(u, k, seed)).collect();
    sketches
        .into_iter()
        .enumerate()
        .map(|(row, s)| {
            s.map_err(|e| match e {
                Error::EmptyVector => Error::InvalidArgument(format!(
                    "row {} has no nonzero entries and cannot be sketched",
                    row + 1
                )),
                e => e,
            })
        })
        .collect()
}

const SKETCH_MAGIC: &str = "#cws-sketch";
const SKETCH_VERSION: u32 = 1;

/// Writes sketches in the text container: one header line, then one line
/// per vector with `k` space-separated `istar:tstar` pairs.
///
/// ```text
/// #cws-sketch v1 seed=42 k=3 dimension=100 count=2
/// 4:0 17:-2 4:1
/// 9:3 17:-2 2:0
/// ```
pub fn write_sketches<W: Write>(sketches: &[Sketch], seed: u64, k: usize, dimension: usize, mut out: W) -> Result<()> {
    writeln!(
        out,
        "{SKETCH_MAGIC} v{SKETCH_VERSION} seed={seed} k={k} dimension={dimension} count={}",
        sketches.len()
    )?;
    let mut line = String::new();
    for s in sketches {
        if s.seed != seed || s.k() != k || s.dimension != dimension {
            return Err(Error::IncompatibleSketches(
                "all sketches in a file must share seed, k and dimension".into(),
            ));
        }
        line.clear();
        for (j, sample) in s.samples.iter().enumerate() {
            use std::fmt::Write as _;
            if j > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{}:{}", sample.istar, sample.tstar);
        }
        line.push('\n');
        out.write_all(line.as_bytes())?;
    }
    Ok(())
}

/// Header of a sketch file.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SketchHeader {
    pub seed: u64,
    pub k: usize,
    pub dimension: usize,
    pub count: usize,
}

fn parse_header(line: &str) -> Result<SketchHeader> {
    let mut fields = line.split_whitespace();
    if fields.next() != Some(SKETCH_MAGIC) {
        return Err(Error::parse(1, "missing #cws-sketch header"));
    }
    let version = fields.next().unwrap_or_default();
    if version != format!("v{SKETCH_VERSION}") {
        return Err(Error::parse(1, format!("unsupported sketch format version '{version}'")));
    }
    let (mut seed, mut k, mut dimension, mut count) = (None, None, None, None);
    for field in fields {
        let (key, value) = field
            .split_once('=')
            .ok_or_else(|| Error::parse(1, format!("malformed header field '{field}'")))?;
        let bad = |_| Error::parse(1, format!("bad value in header field '{field}'"));
        match key {
            "seed" => seed = Some(value.parse::<u64>().map_err(bad)?),
            "k" => k = Some(value.parse::<usize>().map_err(bad)?),
            "dimension" => dimension = Some(value.parse::<usize>().map_err(bad)?),
            "count" => count = Some(value.parse::<usize>().map_err(bad)?),
            _ => return Err(Error::parse(1, format!("unknown header field '{key}'"))),
        }
    }
    let missing = |name: &str| Error::parse(1, format!("header lacks '{name}'"));
    Ok(SketchHeader {
        seed: seed.ok_or_else(|| missing("seed"))?,
        k: k.ok_or_else(|| missing("k"))?,
        dimension: dimension.ok_or_else(|| missing("dimension"))?,
        count: count.ok_or_else(|| missing("count"))?,
    })
}

/// Reads a sketch file written by [`write_sketches`].
pub fn read_sketches<R: BufRead>(input: R) -> Result<(SketchHeader, Vec<Sketch>)> {
    let mut lines = input.lines();
    let header = match lines.next() {
        Some(line) => parse_header(&line?)?,
        None => return Err(Error::parse(1, "empty sketch file")),
    };
    let mut sketches = Vec::with_capacity(header.count);
    for (n, line) in lines.enumerate() {
        let line_no = n + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut samples = Vec::with_capacity(header.k);
        for token in line.split_whitespace() {
            let (i, t) = token
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, format!("expected istar:tstar, got '{token}'")))?;
            let istar = i
                .parse::<u32>()
                .map_err(|_| Error::parse(line_no, format!("bad istar '{i}'")))?;
            let tstar = t
                .parse::<i64>()
                .map_err(|_| Error::parse(line_no, format!("bad tstar '{t}'")))?;
            if istar as usize >= header.dimension {
                return Err(Error::parse(
                    line_no,
                    format!("istar {istar} not below dimension {}", header.dimension),
                ));
            }
            samples.push(CwsSample { istar, tstar });
        }
        if samples.len() != header.k {
            return Err(Error::parse(
                line_no,
                format!("expected {} samples, found {}", header.k, samples.len()),
            ));
        }
        sketches.push(Sketch {
            seed: header.seed,
            dimension: header.dimension,
            samples,
        });
    }
    if sketches.len() != header.count {
        return Err(Error::parse(
            sketches.len() + 2,
            format!("header declares {} sketches, found {}", header.count, sketches.len()),
        ));
    }
    Ok((header, sketches))
}
