//! Mixed-frequency nowcasting of annual indicators: time series and release
//! schedules, growth and standardization transforms, a small LSTM regressor,
//! random-search model selection, vintage backtests and a feasibility rule
//! cascade for indicator catalogs.
//!
//! The crate is `no_std` with `alloc`. File formats and the command line live
//! in the `nowkit` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod evaluation;
pub mod feasibility;
pub mod lstm;
pub mod pipeline;
pub mod seed;
pub mod selection;
pub mod series;
pub mod transform;
pub mod vintage;
