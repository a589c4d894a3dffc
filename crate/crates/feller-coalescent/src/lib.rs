//! Coalescent and sampling distributions of the Feller diffusion.
//!
//! The crate covers three layers:
//!
//! - **Closed forms** — the transition density and Laplace transform of the
//!   diffusion ([`model`]), the Pólya-Aeppli law of the number of ancestors
//!   of the population and of a finite sample, and the quasi-stationary
//!   subcritical coalescent ([`coalescent`]); for the supercritical case,
//!   the reversed-reconstructed-process time change, the coalescence-time
//!   point process, and the Kummer-function sample formulas ([`rrp`]).
//! - **Exact simulators** — event-driven birth-death, branching-process
//!   generations, the Feller transition, two-step ancestor counts,
//!   composition subsampling, and NHPP coalescence times ([`sim`]), plus a
//!   chi-square/Kolmogorov-Smirnov comparison harness ([`gof`]).
//! - **Cross-validation** — every law checked against an independent oracle
//!   or simulation at a pinned tolerance ([`verify`]).
//!
//! Shared numerics (log-Gamma combinatorics, Kummer's M, adaptive
//! Gauss-Kronrod quadrature) live in [`special`] and [`quad`].

pub mod coalescent;
pub mod error;
pub mod gof;
pub mod model;
pub mod quad;
pub mod rrp;
pub mod sim;
pub mod special;
pub mod verify;

pub use error::{Error, Result};
pub use model::{BgwScale, Criticality, ModelParams, TimeWindow};
