//! Nonnegative sparse vectors, the common input of every kernel and sketch.

use crate::error::{Error, Result};

/// A nonnegative vector in `R^D` stored by its support.
///
/// Stored weights are finite and strictly positive; a coordinate that is zero
/// is simply absent. Indices are strictly increasing and below `dimension`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector {
    dimension: usize,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from `(index, weight)` pairs, which must already be
    /// sorted by strictly increasing index.
    pub fn new(dimension: usize, entries: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        if dimension > u32::MAX as usize + 1 {
            return Err(Error::OutOfRange(format!(
                "dimension {dimension} exceeds 2^32"
            )));
        }
        let entries = entries.into_iter();
        let (lower, _) = entries.size_hint();
        let mut indices = Vec::with_capacity(lower);
        let mut values = Vec::with_capacity(lower);
        let mut previous: Option<usize> = None;
        for (index, weight) in entries {
            if index >= dimension {
                return Err(Error::InvalidEntry {
                    index,
                    reason: format!("index not below dimension {dimension}"),
                });
            }
            if previous.is_some_and(|p| p >= index) {
                return Err(Error::InvalidEntry {
                    index,
                    reason: "indices must be strictly increasing".into(),
                });
            }
            if !weight.is_finite() || weight <= 0.0 {
                return Err(Error::InvalidEntry {
                    index,
                    reason: format!("stored weight must be finite and > 0, got {weight}"),
                });
            }
            previous = Some(index);
            indices.push(index as u32);
            values.push(weight);
        }
        Ok(Self {
            dimension,
            indices,
            values,
        })
    }

    /// Builds a vector from a dense slice, dropping zeros. Negative or
    /// non-finite entries are rejected.
    pub fn from_dense(dense: &[f64]) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, &w) in dense.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            entries.push((i, w));
        }
        Self::new(dense.len(), entries)
    }

    /// The all-zero vector of the given dimension.
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Number of stored (nonzero) entries.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .zip(&self.values)
            .map(|(&i, &w)| (i as usize, w))
    }

    /// Weight at coordinate `index` (zero when absent).
    pub fn get(&self, index: usize) -> f64 {
        match u32::try_from(index) {
            Ok(i) => self
                .indices
                .binary_search(&i)
                .map_or(0.0, |pos| self.values[pos]),
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dimension];
        for (i, w) in self.iter() {
            dense[i] = w;
        }
        dense
    }

    pub fn sum(&self) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().copied())
    }

    pub fn l2_norm(&self) -> f64 {
        crate::numeric::compensated_sum(self.values.iter().map(|w| w * w)).sqrt()
    }

    /// Applies `f` to every stored weight, dropping entries that map to zero.
    /// Fails if `f` produces a negative or non-finite weight.
    pub fn map_weights(&self, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        let entries: Vec<(usize, f64)> = self
            .iter()
            .map(|(i, w)| (i, f(w)))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        Self::new(self.dimension, entries)
    }

    /// Multiplies every weight by `factor`, which must be finite and positive.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::OutOfRange(format!(
                "scale factor must be finite and > 0, got {factor}"
            )));
        }
        self.map_weights(|w| w * factor)
    }

    /// Re-declares the dimension. The new dimension must still cover every
    /// stored index.
    pub fn with_dimension(mut self, dimension: usize) -> Result<Self> {
        if let Some(&last) = self.indices.last() {
            if last as usize >= dimension {
                return Err(Error::InvalidEntry {
                    index: last as usize,
                    reason: format!("index not below dimension {dimension}"),
                });
            }
        }
        self.dimension = dimension;
        Ok(self)
    }
}
