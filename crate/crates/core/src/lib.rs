//! Synthesis of modular serial-chain robots for drilling-style tasks.

pub mod catalog;
pub mod error;
pub mod geometry;
pub mod kinematics;
pub mod world;
pub mod planner;
pub mod evaluation;
pub mod optimizer;
pub mod io;
pub mod cli;
