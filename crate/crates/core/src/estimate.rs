//! Kernel estimation from sketch collisions and the Monte-Carlo bias/MSE
//! harness.

use std::io::Write;

use rayon::prelude::*;

use crate::cws::{sketch, Sketch};
use crate::encode::{bits_for, truncate, BitBudget};
use crate::error::{Error, Result};
use crate::kernels::min_max;
use crate::numeric::CompensatedSum;
use crate::rng::derive_seed;
use crate::sparse::SparseVector;

/// How two samples are compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Both `i*` and `t*` must agree.
    Full,
    /// The truncated codes must agree.
    Truncated(BitBudget),
}

impl Scheme {
    /// `i*` kept whole, `t*` discarded.
    pub fn zero_bit(dimension: usize) -> Self {
        Self::with_t_bits(dimension, 0)
    }

    /// `i*` kept whole plus the lowest `bt` bits of `t*`.
    pub fn with_t_bits(dimension: usize, bt: u32) -> Self {
        let bi = BitBudget::zero_bit(dimension).bi();
        Scheme::Truncated(BitBudget::new(bi, bt).expect("bi <= 32 and bt <= 32"))
    }

    /// Parses `full`, `0bit`, `1bit`, `2bit` (any `<n>bit` with `n <= 32`)
    /// or an explicit budget `i<bi>t<bt>` such as `i1t0`.
    pub fn parse(name: &str, dimension: usize) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("unknown scheme '{name}'"));
        let name = name.trim();
        if name == "full" {
            return Ok(Scheme::Full);
        }
        if let Some(n) = name.strip_suffix("bit") {
            let bt: u32 = n.parse().map_err(|_| bad())?;
            if bt > crate::encode::MAX_BITS {
                return Err(bad());
            }
            return Ok(Self::with_t_bits(dimension, bt));
        }
        if let Some(rest) = name.strip_prefix('i') {
            let (bi, bt) = rest.split_once('t').ok_or_else(bad)?;
            let bi: u32 = bi.parse().map_err(|_| bad())?;
            let bt: u32 = bt.parse().map_err(|_| bad())?;
            if bi + bt == 0 {
                return Err(Error::ZeroBits);
            }
            return Ok(Scheme::Truncated(BitBudget::new(bi, bt)?));
        }
        Err(bad())
    }

    /// Display name relative to `dimension`; the inverse of [`Scheme::parse`].
    pub fn name(&self, dimension: usize) -> String {
        match self {
            Scheme::Full => "full".into(),
            Scheme::Truncated(b) if b.bi() == bits_for(dimension).max(1) => format!("{}bit", b.bt()),
            Scheme::Truncated(b) => format!("i{}t{}", b.bi(), b.bt()),
        }
    }

    #[inline]
    fn matches(&self, a: crate::cws::CwsSample, b: crate::cws::CwsSample) -> bool {
        match self {
            Scheme::Full => a == b,
            Scheme::Truncated(budget) => truncate(a, *budget) == truncate(b, *budget),
        }
    }
}

/// Fraction of repetitions whose samples agree under `scheme`.
pub fn collision_rate(su: &Sketch, sv: &Sketch, scheme: Scheme) -> Result<f64> {
    su.check_comparable(sv)?;
    let hits = su
        .samples()
        .iter()
        .zip(sv.samples())
        .filter(|(a, b)| scheme.matches(**a, **b))
        .count();
    Ok(hits as f64 / su.k() as f64)
}

/// Binomial variance `K (1 - K) / k` of the collision-rate estimator.
pub fn theoretical_variance(kernel: f64, k: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&kernel) {
        return Err(Error::OutOfRange(format!("kernel value {kernel} outside [0, 1]")));
    }
    if k == 0 {
        return Err(Error::OutOfRange("k must be at least 1".into()));
    }
    Ok(kernel * (1.0 - kernel) / k as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub scheme: Scheme,
    pub bias: f64,
    pub mse: f64,
    pub theoretical_variance: f64,
    pub n_reps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub pair: String,
    pub dimension: usize,
    /// Exact min-max kernel of the pair.
    pub kernel: f64,
    pub rows: Vec<ReportRow>,
}

impl SimulationReport {
    pub fn with_pair(mut self, pair: impl Into<String>) -> Self {
        self.pair = pair.into();
        self
    }

    pub fn row(&self, k: usize, scheme: Scheme) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.k == k && r.scheme == scheme)
    }
}

pub const CSV_HEADER: &str = "pair,k,scheme,bias,mse,theoretical_var,n_reps";

/// Writes reports as CSV with header
/// `pair,k,scheme,bias,mse,theoretical_var,n_reps`.
pub fn write_csv<W: Write>(reports: &[SimulationReport], mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for report in reports {
        for row in &report.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                report.pair,
                row.k,
                row.scheme.name(report.dimension),
                row.bias,
                row.mse,
                row.theoretical_variance,
                row.n_reps
            )?;
        }
    }
    Ok(())
}

/// Replicates per work unit. Fixed so the reduction order, and hence the
/// floating-point result, does not depend on the thread count.
const CHUNK: usize = 64;

/// Estimates bias and MSE of the collision-rate estimator of `min_max(u, v)`
/// for every `(k, scheme)` cell.
///
/// Replicate `r` sketches both vectors with `derive_seed(seed, r)` and
/// `max(k_grid)` repetitions; the estimate for a given `k` uses the first `k`
/// of them. Cells of one replicate share draws, replicates are independent.
pub fn simulate(
    u: &SparseVector,
    v: &SparseVector,
    k_grid: &[usize],
    schemes: &[Scheme],
    n_reps: usize,
    seed: u64,
) -> Result<SimulationReport> {
    let kernel = min_max(u, v)?;
    if u.is_empty() || v.is_empty() {
        return Err(Error::EmptyVector);
    }
    if k_grid.is_empty() || k_grid.contains(&0) {
        return Err(Error::InvalidArgument("k grid must be nonempty and positive".into()));
    }
    if schemes.is_empty() {
        return Err(Error::InvalidArgument("at least one scheme is required".into()));
    }
    if n_reps == 0 {
        return Err(Error::InvalidArgument("n_reps must be at least 1".into()));
    }
    let k_max = *k_grid.iter().max().expect("nonempty");
    let cells = schemes.len() * k_grid.len();

    let chunk_count = n_reps.div_ceil(CHUNK);
    let partials: Vec<Result<Vec<(CompensatedSum, CompensatedSum)>>> = (0..chunk_count)
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![(CompensatedSum::new(), CompensatedSum::new()); cells];
            let mut prefix = vec![0u32; k_max + 1];
            let start = chunk * CHUNK;
            for rep in start..(start + CHUNK).min(n_reps) {
                let rep_seed = derive_seed(seed, rep as u64);
                let su = sketch(u, k_max, rep_seed)?;
                let sv = sketch(v, k_max, rep_seed)?;
                for (si, scheme) in schemes.iter().enumerate() {
                    for (j, (a, b)) in su.samples().iter().zip(sv.samples()).enumerate() {
                        prefix[j + 1] = prefix[j] + scheme.matches(*a, *b) as u32;
                    }
                    for (ki, &k) in k_grid.iter().enumerate() {
                        let err = prefix[k] as f64 / k as f64 - kernel;
                        let cell = &mut acc[si * k_grid.len() + ki];
                        cell.0.add(err);
                        cell.1.add(err * err);
                    }
                }
            }
            Ok(acc)
        })
        .collect();

    let mut totals = vec![(CompensatedSum::new(), CompensatedSum::new()); cells];
    for partial in partials {
        for (total, part) in totals.iter_mut().zip(partial?) {
            total.0.merge(&part.0);
            total.1.merge(&part.1);
        }
    }

    let n = n_reps as f64;
    let mut rows = Vec::with_capacity(cells);
    for (ki, &k) in k_grid.iter().enumerate() {
        for (si, &scheme) in schemes.iter().enumerate() {
            let (sum, sq) = &totals[si * k_grid.len() + ki];
            rows.push(ReportRow {
                k,
                scheme,
                bias: sum.value() / n,
                mse: sq.value() / n,
                theoretical_variance: theoretical_variance(kernel, k)?,
                n_reps,
            });
        }
    }
    Ok(SimulationReport {
        pair: String::new(),
        dimension: u.dimension(),
        kernel,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cws::CwsSample;

    fn dense(v: &[f64]) -> SparseVector {
        SparseVector::from_dense(v).unwrap()
    }

    #[test]
    fn variance_examples() {
        assert!((theoretical_variance(0.5, 100).unwrap() - 0.0025).abs() < 1e-15);
        assert_eq!(theoretical_variance(0.0, 7).unwrap(), 0.0);
        assert_eq!(theoretical_variance(1.0, 7).unwrap(), 0.0);
        assert!((theoretical_variance(0.8985, 1).unwrap() - 0.09120).abs() < 5e-6);
        assert!(theoretical_variance(1.5, 1).is_err());
        assert!(theoretical_variance(-0.1, 1).is_err());
        assert!(theoretical_variance(0.5, 0).is_err());
    }

    #[test]
    fn scheme_names_round_trip() {
        for name in ["full", "0bit", "1bit", "2bit", "i1t0", "i0t2"] {
            assert_eq!(Scheme::parse(name, 100).unwrap().name(100), name);
        }
        assert_eq!(Scheme::parse("0bit", 100).unwrap(), Scheme::Truncated(BitBudget::new(7, 0).unwrap()));
        assert!(Scheme::parse("i0t0", 100).is_err());
        assert!(Scheme::parse("half", 100).is_err());
        assert!(Scheme::parse("40bit", 100).is_err());
    }

    #[test]
    fn identical_sketches_rate_one() {
        let u = dense(&[1.0, 2.0, 3.0]);
        let s = sketch(&u, 50, 5).unwrap();
        for scheme in [Scheme::Full, Scheme::zero_bit(3), Scheme::parse("i0t1", 3).unwrap()] {
            assert_eq!(collision_rate(&s, &s, scheme).unwrap(), 1.0);
        }
    }

    #[test]
    fn disjoint_supports_never_collide_fully() {
        let u = dense(&[1.0, 2.0, 0.0, 0.0]);
        let v = dense(&[0.0, 0.0, 3.0, 0.5]);
        let (su, sv) = (sketch(&u, 2000, 8).unwrap(), sketch(&v, 2000, 8).unwrap());
        assert_eq!(collision_rate(&su, &sv, Scheme::Full).unwrap(), 0.0);
        assert_eq!(collision_rate(&su, &sv, Scheme::zero_bit(4)).unwrap(), 0.0);
    }

    #[test]
    fn incomparable_sketches_error() {
        let u = dense(&[1.0, 2.0]);
        let a = sketch(&u, 10, 1).unwrap();
        assert!(collision_rate(&a, &sketch(&u, 10, 2).unwrap(), Scheme::Full).is_err());
        assert!(collision_rate(&a, &sketch(&u, 11, 1).unwrap(), Scheme::Full).is_err());
    }

    #[test]
    fn collision_rate_counts_truncated_matches() {
        let a = Sketch::from_samples(0, 8, vec![CwsSample { istar: 1, tstar: 0 }, CwsSample { istar: 2, tstar: 1 }]).unwrap();
        let b = Sketch::from_samples(0, 8, vec![CwsSample { istar: 3, tstar: 0 }, CwsSample { istar: 2, tstar: 3 }]).unwrap();
        assert_eq!(collision_rate(&a, &b, Scheme::Full).unwrap(), 0.0);
        assert_eq!(collision_rate(&a, &b, Scheme::zero_bit(8)).unwrap(), 0.5);
        assert_eq!(collision_rate(&a, &b, Scheme::Truncated(BitBudget::new(1, 1).unwrap())).unwrap(), 1.0);
    }

    #[test]
    fn simulate_is_deterministic_and_consistent() {
        let u = dense(&[1.0, 2.0, 0.5, 0.0]);
        let v = dense(&[2.0, 1.0, 0.0, 4.0]);
        let grid = [1, 5, 20];
        let schemes = [Scheme::Full, Scheme::zero_bit(4)];
        let a = simulate(&u, &v, &grid, &schemes, 300, 77).unwrap();
        let b = simulate(&u, &v, &grid, &schemes, 300, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 6);
        for row in &a.rows {
            assert_eq!(row.theoretical_variance, theoretical_variance(a.kernel, row.k).unwrap());
            assert!(row.mse >= row.bias * row.bias - 1e-15);
        }
        let c = simulate(&u, &v, &grid, &schemes, 300, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn simulate_matches_serial_oracle() {
        // Direct serial loop over replicates, no chunking or compensation.
        let u = dense(&[1.0, 2.0, 0.5]);
        let v = dense(&[2.0, 1.0, 3.0]);
        let kernel = min_max(&u, &v).unwrap();
        let report = simulate(&u, &v, &[3, 7], &[Scheme::Full], 150, 4).unwrap();
        for (idx, &k) in [3usize, 7].iter().enumerate() {
            let (mut s, mut s2) = (0.0, 0.0);
            for rep in 0..150u64 {
                let seed = derive_seed(4, rep);
                let su = sketch(&u, k, seed).unwrap();
                let sv = sketch(&v, k, seed).unwrap();
                let e = collision_rate(&su, &sv, Scheme::Full).unwrap() - kernel;
                s += e;
                s2 += e * e;
            }
            let row = &report.rows[idx];
            assert!((row.bias - s / 150.0).abs() < 1e-12);
            assert!((row.mse - s2 / 150.0).abs() < 1e-12);
        }
    }

    #[test]
    fn simulate_validates_inputs() {
        let u = dense(&[1.0, 2.0]);
        let z = SparseVector::zeros(2);
        assert!(simulate(&u, &z, &[1], &[Scheme::Full], 10, 0).is_err());
        assert!(simulate(&u, &u, &[], &[Scheme::Full], 10, 0).is_err());
        assert!(simulate(&u, &u, &[0], &[Scheme::Full], 10, 0).is_err());
        assert!(simulate(&u, &u, &[1], &[], 10, 0).is_err());
        assert!(simulate(&u, &u, &[1], &[Scheme::Full], 0, 0).is_err());
    }

    #[test]
    fn csv_layout() {
        let u = dense(&[1.0, 1.0]);
        let r = simulate(&u, &u, &[2], &[Scheme::Full], 4, 0).unwrap().with_pair("1");
        let mut buf = Vec::new();
        write_csv(&[r], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pair,k,scheme,bias,mse,theoretical_var,n_reps\n1,2,full,0,0,0,4\n"
        );
    }
}
