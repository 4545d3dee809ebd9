// SPDX-License-Identifier: Apache-2.0

//! BTI aging assessment for memory address pre-decoders and synthesis of
//! rejuvenation workloads that balance the aging of their paths.
//!
//! The flow mirrors a transistor-level assessment with an analytical delay
//! model: build the decoder netlist, enumerate its sensitized paths, turn
//! a memory trace into per-transistor stress duty, map duty to threshold
//! shift, and evaluate nominal and aged path delays.

// `!(x >= 0.0)` style checks are used on purpose so NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments, clippy::needless_range_loop)]

pub mod bti;
pub mod decoder;
pub mod error;
pub mod exec;
mod kv;
pub mod pipeline;
pub mod rejuvenation;
pub mod timing;
pub mod trace;

pub use error::{Error, Result};
