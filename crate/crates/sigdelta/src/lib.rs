//! One-bit sigma-delta quantization with FIR feedback filters, together with the
//! stability analysis of the minimal second-order family
//! `h = ((k+1)/k, 0, ..., 0, −1/k)`.
//!
//! ```
//! use sigdelta::filters::make_minimal_filter;
//! use sigdelta::quantizer::{run, Rule};
//!
//! let m = make_minimal_filter(3).unwrap();
//! let trace = run(m.filter(), &[0.0; 4], &[0.5; 100], Rule::Greedy).unwrap();
//! assert!(trace.max_abs_state() <= sigdelta::stability::constant_input_bound(3, 0.5).unwrap());
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod error;
pub mod export;
pub mod filters;
pub mod quantizer;
pub mod signals;
pub mod stability;
pub mod trajectory;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
