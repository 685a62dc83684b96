//! Inputs shared by the benchmarks in `benches/`.

use minmax_core::rng::SplitMix64;
use minmax_core::SparseVector;

/// Vector with `nnz` log-normal weights spread over `dimension` coordinates.
pub fn random_vector(seed: u64, dimension: usize, nnz: usize) -> SparseVector {
    let mut g = SplitMix64::new(seed);
    let mut x = vec![0.0; dimension];
    let mut placed = 0;
    while placed < nnz.min(dimension) {
        let i = (g.next_u64() % dimension as u64) as usize;
        if x[i] == 0.0 {
            let (u1, u2) = (g.next_open01(), g.next_closed_open01());
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            x[i] = z.exp();
            placed += 1;
        }
    }
    SparseVector::from_dense(&x).expect("weights are positive and finite")
}

/// `n` independent vectors.
pub fn random_rows(seed: u64, n: usize, dimension: usize, nnz: usize) -> Vec<SparseVector> {
    (0..n).map(|r| random_vector(seed.wrapping_add(r as u64), dimension, nnz)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape() {
        let v = random_vector(1, 100, 10);
        assert_eq!((v.dimension(), v.nnz()), (100, 10));
        assert_eq!(random_vector(1, 100, 10), v);
    }
}
