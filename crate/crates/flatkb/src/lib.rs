// NaN must fail range checks, hence `!(x > lo)` throughout
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod cli;
pub mod cw_complex;
pub mod frames;
pub mod interval;
pub mod io;
pub mod tables;
pub mod tube_joint;
pub mod zee_bridge;
