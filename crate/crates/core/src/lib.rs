//! Dynamically corrected CNOT gates from composite pulse sequences.

pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod noise;
pub mod optimizer;
pub mod params;
pub mod sequence;
pub mod solvers;
pub mod su4;
