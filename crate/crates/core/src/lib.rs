pub mod error;
pub mod exact;
pub mod geometry;
pub mod io;
pub mod measurement;
pub mod relation;
pub mod reconstruct;
pub mod variety;

pub use error::{Error, Result};
