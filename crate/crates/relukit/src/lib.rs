//! Kernel-based learning of ReLU-like concepts on the unit sphere, with an
//! emphasis on *reliable* regression: hypotheses that almost never fire on
//! zero-labeled inputs while staying competitive on the positive part.
//!
//! The toolkit is built from small, independently testable pieces:
//!
//! * [`data`] / [`loss`] / [`metrics`]: labeled samples on `S^{n-1}`, loss
//!   registry, and the split error measures (false-positive rate on `y = 0`,
//!   loss restricted to `y > 0`).
//! * [`poly`] / [`approx`]: univariate polynomials in the monomial basis and
//!   certified uniform approximations of ReLU and sigmoid on `[-1, 1]`, with
//!   coefficient-weight accounting.
//! * [`kernel`]: the multinomial kernel `sum_j (x . x')^j`, its explicit
//!   feature map, ridge-function embeddings, and depth-composed variants.
//! * [`solver`]: deterministic projected subgradient descent over the
//!   kernel-norm ball, optionally intersected with per-sample zero-label
//!   constraints (Dykstra alternating projections in the Gram metric).
//! * [`learners`]: end-to-end pipelines (reliable ReLU, bounded-norm
//!   polynomial regression, correlation maximization, shallow networks) plus
//!   proper coefficient extraction and the sample-size calculator.
//! * [`network`]: exact ReLU gadget constructions (pairwise max, max-affine
//!   trees, PReLU, clipped ramps) and polynomial-activation substitution with
//!   a sampled error certificate.
//! * [`harness`]: seeded generators, grid oracles, and a reproducible
//!   experiment runner whose reports are byte-stable per seed.
//!
//! Everything is deterministic: fixed seeds give bit-identical models and
//! reports. See the `relukit` binary for the command-line surface.

pub mod approx;
pub mod data;
pub mod harness;
pub mod hypothesis;
pub mod kernel;
pub mod learners;
pub mod loss;
pub mod metrics;
pub mod model_io;
pub mod network;
pub mod poly;
pub mod solver;
pub mod util;

mod error;

pub use data::{Dataset, LabelRange, LabeledSample};
pub use error::{Error, Result};
pub use hypothesis::Hypothesis;
pub use loss::LossSpec;
