//! Valuation of stock loans with a forced-liquidation clause when the
//! collateral follows a hyper-exponential jump-diffusion.
//!
//! The client value is the best of a family of two-barrier exit problems
//! (liquidation below, redemption above), each solved in closed form
//! through the roots of the drifted Lévy exponent. A Monte Carlo simulator
//! of the same exit problem is included as an independent check.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod mc;
pub mod model;
pub mod passage;
pub mod payoff;
pub mod pricing;
pub mod roots;

pub use error::{Error, Result};
pub use model::{Exponent, JumpParams, LevyModel, MarketParams};
pub use passage::{BarrierProblem, PayoffVector};
pub use pricing::{SearchOptions, ValuationResult};
pub use roots::{solve_roots, RootSet};
