pub mod error;
pub mod exp_space;
pub mod gb_spline;
pub mod banded;
pub mod diagnostics;
pub mod interpolate;
pub mod nodes;
pub mod greedy;
pub mod kernel_baseline;
pub mod cli;
