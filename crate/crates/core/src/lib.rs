//! Batches of synchronized discrete-time queues and the random walk hiding
//! inside them.
//!
//! A batch of `d` queues served jointly splits into a diagonal level that the
//! server controls and an excess vector that only the arrivals move. The
//! excess is a walk on `Z^d / <1>`; it returns to its start with probability
//! `R_d(n) = sum_k [C(n,k) p^k (1-p)^(n-k)]^d` after `n` slots, and it is
//! null-recurrent for `d` in `{2, 3}` and transient for `d >= 4`.
//!
//! Modules:
//! - [`queue`]: the queue recursion, policies and the diagonal/excess split
//! - [`quotient`]: the excess walk on the quotient lattice
//! - [`series`]: exact and log-domain `R_d(n)`, partial sums, slope fits, bounds
//! - [`drift`]: the three-queue Lyapunov drift and its exhaustive scan
//! - [`montecarlo`]: seeded simulation and return-probability estimates
//! - [`output`]: CSV/JSON writers with a provenance header
//! - [`cli`]: the `syncq` command-line front end

pub mod cli;
pub mod drift;
pub mod error;
pub mod montecarlo;
pub mod output;
pub mod prob;
pub mod queue;
pub mod quotient;
pub mod rng;
pub mod series;

pub use error::{Error, Result};
pub use prob::Prob;
