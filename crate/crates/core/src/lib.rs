//! Lossless speculative decoding laboratory.
//!
//! * [`token`], [`prob`], [`rng`]: vocabulary, probability vectors and
//!   seeded splittable random streams.
//! * [`models`]: n-gram, synthetic fixed-acceptance and scripted models.
//! * [`sampling`]: the speculative accept/reject kernel.
//! * [`engines`]: autoregressive, draft-then-verify and the parallel
//!   pre-verify/post-verify engine, serial or concurrent.
//! * [`simulator`]: assigns simulated wall time to traces.
//! * [`theory`]: closed-form expectations to check the simulator against.

pub mod engines;
pub mod error;
pub mod models;
pub mod prob;
pub mod rng;
pub mod sampling;
pub mod simulator;
pub mod theory;
pub mod token;

pub use error::{Error, Result};
pub use prob::{residual_dist, ProbDist};
pub use rng::{RandomStream, UniformSource};
pub use token::{TokenId, TokenSeq, Vocab};
