//! Std companion to `hamswitch-core`: the parallel Monte Carlo driver,
//! the statistical validation battery, configuration loading, report
//! formats, and the command-line interface.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN
#![allow(clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod montecarlo;
pub mod report;
pub mod validation;
