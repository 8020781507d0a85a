pub mod actuarial;
pub mod cli;
pub mod error;
pub mod hedging;
pub mod io;
pub mod mc;
pub mod measures;
pub mod msvar;
pub mod numerics;
pub mod pricing;
#[cfg(test)]
mod testkit;

pub use error::{Error, Result};
