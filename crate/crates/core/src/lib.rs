pub mod error;
pub mod circle;
pub mod cli;
pub mod escape;
pub mod exact;
pub mod matops;
pub mod positivity;
pub mod random;
pub mod seqcore;

pub use error::{Error, Result};
