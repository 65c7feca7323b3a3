//! Feature-based dynamic pricing against agnostic demand.
//!
//! Two learners are provided, both running EXP-4 over a discretized policy class:
//!
//! - **Linear-EXP4** competes with the best fixed linear pricing policy
//!   `v = x . beta` and makes no assumption on how valuations depend on features.
//! - **D2-EXP4** targets valuations `y = x . theta + N` with bounded noise of
//!   unknown distribution; its policies pair a parameter guess with a discrete
//!   CDF guess and post a marked-down greedy price.
//!
//! The [`environments`] module supplies the sale sessions the learners face,
//! including the nested bump-function hard instances, and [`harness`] wires it
//! all together into runs, sweeps and regret accounting.

pub mod environments;
pub mod error;
pub mod exp4;
pub mod grid;
pub mod harness;
pub mod policy_space;

pub use error::{PricingError, Result};
pub use grid::GridSpec;
