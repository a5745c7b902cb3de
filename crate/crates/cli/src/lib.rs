//! Command-line front end: TOML configuration, subcommands and SVG plots.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod app;
pub mod config;
pub mod svg;

pub use app::{run, OUT_ENV};
