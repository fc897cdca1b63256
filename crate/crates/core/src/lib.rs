pub mod asymptotics;
pub mod cli;
pub mod constants;
pub mod domain;
pub mod error;
pub mod quadrature;
pub mod seminorms;

pub use error::{Error, Result};
