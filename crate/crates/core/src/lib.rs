pub mod data;
pub mod eval;
pub mod error;
pub mod nn;
pub mod parallel;
pub mod prognet;
pub mod seed;
pub mod transfer;

pub use error::{Error, Result};
