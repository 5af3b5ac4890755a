//! Low-rank matrix completion with dictionaries.
//!
//! Two convex programs are solved by proximal gradient:
//!
//! * nuclear-norm completion, `min ‖L‖_* + (λ/2)‖P_Ω(X − L)‖_F²`;
//! * low-rank factor decomposition (LRFD), `min ‖Z‖_* + (λ/2)‖P_Ω(X − AZ)‖_F²`
//!   for a dictionary `A`, whose reconstruction is `AZ`.
//!
//! [`pipeline::run_algorithm1`] chains them: complete with the identity
//! dictionary, truncate the estimate to its numerical rank, normalize its
//! columns into a dictionary, then complete again with LRFD.
//!
//! Around the solvers sit coherence diagnostics ([`coherence`]), observation
//! models and projectors ([`observation`]), planted-instance generators
//! ([`synth`]), numerical checks of the recovery guarantees
//! ([`pipeline`]) and the experiment runners behind the `lrfd` binary
//! ([`bench`]).

pub mod bench;
pub mod coherence;
pub mod error;
pub mod linalg;
pub mod observation;
pub mod pipeline;
pub mod rng;
pub mod solvers;
pub mod synth;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, NormKind, ThinSvd};
pub use observation::{ObservationSet, SamplingModel, SubspaceBasis};
pub use solvers::{SolverConfig, SolverReport};
