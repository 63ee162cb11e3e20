//! Temporally layered control for continuous-action reinforcement learning.
//!
//! A slow controller acting every `n` base steps and a fast controller acting
//! every base step are layered into one policy. Two training schemes are
//! provided:
//!
//! - closed loop ([`tla::closed_loop`]): a fast residual policy is trained on
//!   top of a frozen, pre-trained slow policy, and at evaluation time its
//!   output is suppressed when its influence is below a threshold;
//! - partially open loop ([`tla::open_loop`]): a slow policy with a binary gate
//!   is trained on top of a frozen fast policy, holding its own action for `n`
//!   steps when the gate is open and deferring to the fast policy otherwise.
//!
//! Everything here is pure computation: numerics ([`tensor`], [`nn`],
//! [`adam`]), environments ([`envs`]), the TD3 learner ([`td3`]), the layered
//! controllers ([`tla`]), the delayed real-time wrapper ([`realtime`]) and the
//! evaluation metrics ([`metrics`]). File formats, configuration and the CLI
//! live in the `tla-harness` crate.
//!
//! The crate is `no_std` (it needs `alloc`). The `std` feature only enables
//! runtime CPU feature detection in the matrix kernels.

#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod adam;
pub mod envs;
mod error;
pub mod metrics;
pub mod nn;
pub mod realtime;
pub mod rng;
pub mod td3;
pub mod tensor;
pub mod tla;

pub use error::{Error, Result};
