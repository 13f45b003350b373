pub mod clv;
pub mod dist;
mod error;
pub mod mcmc;
pub mod mobile;
pub mod semimarkov;
pub mod survey;

pub use error::{Error, Result};
