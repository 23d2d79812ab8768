//! Scan-order diagnostics for laser directed energy deposition track
//! layouts: deterministic strategy generation, path-based proxy
//! descriptors, reduction of simulated node fields to scalar labels,
//! weighted ranking with robustness sweeps, and proxy-label alignment.

pub mod alignment;
pub mod config;
pub mod error;
pub mod field_reduce;
pub mod pipeline;
pub mod proxy_eval;
pub mod ranking;
pub mod report;
pub mod svg;
pub mod track_bench;

pub use error::{Error, Result};
