pub mod chain;
pub mod checks;
pub mod config;
pub mod error;
pub mod greens;
pub mod output;
pub mod scanner;
pub mod special;
pub mod twostate;
pub mod units;

pub use error::{Error, Result};
