//! Relativistic bit commitment: spacetime model, commitment primitives,
//! session simulation, adversaries, bounds and cost accounting.

pub mod adversary;
pub mod bounds;
pub mod cli;
pub mod costmodel;
pub mod elementary;
pub mod protocol;
pub mod rudich;
pub mod spacetime;
