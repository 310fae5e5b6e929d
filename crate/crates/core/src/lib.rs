//! Receding-horizon trajectory planning for an autonomous car using zonotope
//! reachable sets and an exact ReLU encoding of the zonotope signed distance.

// `!(x > 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod zonotope;
pub mod distance;
pub mod relu;
pub mod frs;
pub mod planner;
pub mod sim;
pub mod bench;
pub mod config;
pub mod cli;

pub use error::{Error, Result};
pub use zonotope::{Mat2, Vec2, Zonotope};
