//! Workbench for the adjacent fragment of first-order logic.

pub mod bisim;
pub mod formulas;
pub mod ga_encoder;
pub mod reduction;
pub mod solver;
pub mod structures;
pub mod translations;
pub mod types;
pub mod words;
