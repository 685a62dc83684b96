//! Min-max kernels and their linearization by consistent weighted sampling.
//!
//! * [`kernels`]: exact min-max, n-min-max, intersection, resemblance and
//!   linear kernels, plus Gram matrices in the LIBSVM precomputed layout.
//! * [`cws`]: consistent weighted samples `(i*, t*)` driven by keyed,
//!   counter-based randomness ([`rng`]).
//! * [`encode`]: `b_i`/`b_t`-bit truncation and the one-hot-per-block feature
//!   expansion whose inner product counts collisions.
//! * [`estimate`]: collision-rate estimators and the bias/MSE simulator.
//! * [`data`]: LIBSVM sparse I/O and normalization.
//! * [`learn`]: a small averaged-SGD linear classifier for encoded features.
//!
//! ```
//! use minmax_core::{cws, encode, estimate, kernels, SparseVector};
//!
//! let u = SparseVector::from_dense(&[1.0, 2.0, 0.0]).unwrap();
//! let v = SparseVector::from_dense(&[2.0, 1.0, 1.0]).unwrap();
//! assert!((kernels::min_max(&u, &v).unwrap() - 0.4).abs() < 1e-12);
//!
//! let su = cws::sketch(&u, 256, 7).unwrap();
//! let sv = cws::sketch(&v, 256, 7).unwrap();
//! let zero_bit = estimate::Scheme::zero_bit(3);
//! let k_hat = estimate::collision_rate(&su, &sv, zero_bit).unwrap();
//! assert!((0.0..=1.0).contains(&k_hat));
//!
//! let features = encode::encode(&su, encode::BitBudget::new(2, 0).unwrap()).unwrap();
//! assert_eq!(features.indices().len(), 256);
//! ```

pub mod cws;
pub mod data;
pub mod encode;
pub mod error;
pub mod estimate;
pub mod kernels;
pub mod learn;
mod numeric;
pub mod rng;
mod sparse;

pub use cws::{CwsSample, Sketch};
pub use data::{Dataset, Example, LoadOptions, NormalizeMode};
pub use encode::{BitBudget, EncodedVector};
pub use error::{Error, Result};
pub use estimate::{Scheme, SimulationReport};
pub use kernels::{GramMatrix, KernelKind};
pub use learn::{LinearModel, Loss, TrainConfig};
pub use numeric::{compensated_sum, mix64, CompensatedSum};
pub use sparse::SparseVector;
