//! Compound Poisson processes time-changed by an independent Poisson process.
//!
//! `Z(t) = Y(N(t))` where `N` is a Poisson process with rate `lambda` and
//! `Y(t) = X_1 + ... + X_{M(t)}` is a compound Poisson process whose counting
//! process `M` has rate `mu`. With unit jumps `Z` is the iterated Poisson
//! process `M(N(t))`.
//!
//! The crate evaluates the law of `Z(t)` for unit, exponential and normal
//! jumps, first-crossing times through constant, linear and general
//! nonincreasing boundaries, first-hitting times of a fixed state, and ships a
//! reproducible Monte Carlo simulator used as an independent oracle.
//!
//! ```
//! use poisub::{IteratedLaw, ModelParams, SeriesControl};
//!
//! let law = IteratedLaw::new(ModelParams::new(1.0, 1.0).unwrap(), SeriesControl::default());
//! let p0 = law.pmf(0, 1.0).unwrap();
//! assert!((p0 - (-(1.0 - (-1.0f64).exp())).exp()).abs() < 1e-15);
//! ```

pub mod cpp;
pub mod crossing;
pub mod error;
pub mod exec;
pub mod iterated;
pub mod mc;
pub mod quad;
pub mod special;
pub mod stats;
pub mod verify;

/// Library version, recorded in CLI output metadata.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use cpp::{JumpSpec, Marginal, ModelParams, MomentSummary, SubordinatedCpp};
pub use crossing::{AvoidingTable, Boundary, CrossingResult};
pub use error::{Error, Result};
pub use exec::Exec;
pub use iterated::{IteratedLaw, Weights};
pub use mc::{HitOutcome, PathSample, SimConfig, Simulator};
pub use special::SeriesControl;
pub use verify::{CheckResult, Suite};
