//! Zero- and few-shot hate speech classification framed as natural language
//! inference, plus the data preparation and evaluation harness around it.

pub mod corpus;
pub mod engine;
mod error;
pub mod eval;
pub mod io;
mod label;
pub mod normalize;
pub mod strategy;

pub use error::{Error, Result};
pub use label::Label;
