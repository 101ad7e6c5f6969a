pub mod config;
pub mod dynamics;
pub mod error;
pub mod fano;
pub mod linalg;
pub mod model;
pub mod output;
pub mod poly;
pub mod profile;
pub mod pseudo;
pub mod quadrature;

pub use error::{Error, Result};
