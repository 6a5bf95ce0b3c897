//! Exact verification of affine Yangian homomorphisms on vacuum modules of
//! affine gl(N) and on rectangular W-algebras realized in their tensor square.

pub mod checks;
pub mod coeffs;
pub mod error;
pub mod loopalg;
pub mod modules;
pub mod morphisms;
pub mod ops;
pub mod rational;
pub mod report;
pub mod runner;
pub mod vertexmodes;

pub use error::{Error, Result};
pub use rational::Rational;
