//! Exact and closed-form machinery for the quantum weak law of large numbers.
//!
//! * [`hilbert`]: states, projectors and tensor powers in `C^d`.
//! * [`freqop`]: the relative-frequency operator on `N` copies, its
//!   eigen-projectors and the variance identities, as dense matrices.
//! * [`binom`]: the binomial law of its eigenvalues, for any `N`.
//! * [`convergence`]: the ensemble size `N_εω` and the outside-ε bounds.
//! * [`mcsim`]: simulated repeated measurements with reproducible streams.
//! * [`suite`]: batch checks of the dense identities over random instances.

pub mod binom;
pub mod convergence;
pub mod error;
pub mod freqop;
pub mod hilbert;
pub mod mcsim;
pub mod random;
pub mod suite;

pub use error::{Error, Result};
