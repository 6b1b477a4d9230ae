//! Multi-zone building thermal simulation with centralized, decentralized and
//! priority-based distributed MPC under a shared energy cap.

pub mod allocation;
pub mod error;
pub mod mpc;
pub mod qp;
pub mod sim;
pub mod thermal;

pub use error::{Error, Result};
