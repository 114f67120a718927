pub mod analysis;
pub mod calculus;
pub mod cli;
pub mod cq;
pub mod error;
pub mod expr;
pub mod file;
pub mod geometry;
pub mod lp;
pub mod optimality;
pub mod problem;
pub mod rational;
pub mod sampling;

pub use error::{Error, Result};
