pub mod assembly;
pub mod basis;
pub mod error;
pub mod experiment;
pub mod formulation;
pub mod linalg;
pub mod operators;
pub mod oracles;
pub mod problems;
pub mod solver;

pub use error::{Error, Result};
