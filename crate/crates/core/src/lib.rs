//! Kernel machines trained under hard constraints compiled from the convex
//! fragment of Łukasiewicz logic, and the algebra that decides which of those
//! constraints can be dropped without changing the optimum.

pub mod logic;
pub mod config;
pub mod grounding;
pub mod compile;
pub mod kernels;
pub mod solver;
pub mod problem;
pub mod train;
pub mod analyze;
pub mod random;
pub mod cli;
