//! Quaternionic toolkit for Willmore surfaces in the conformal 4-sphere
//! `S⁴ = HP¹`: mean curvature sphere congruences, Hopf fields, the associated
//! flat family, Darboux transforms and Bäcklund sequences.

pub mod calc;
pub mod cli;
pub mod darboux;
pub mod error;
pub mod flat;
pub mod immersion;
pub mod meancurv;
pub mod quat;
pub mod sequence;
pub mod tolerances;

pub use error::{Result, WforgeError};
