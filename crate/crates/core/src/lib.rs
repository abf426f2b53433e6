pub mod annotators;
pub mod bio;
pub mod classifier;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod lexicon;
pub mod noisemodel;
pub mod seeds;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
