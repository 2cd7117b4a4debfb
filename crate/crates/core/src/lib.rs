//! Clause-level discourse annotation with least-squares policy iteration.
//!
//! Documents are annotated left to right as an episodic MDP whose state holds
//! clause features plus the labels already assigned nearby (annotation
//! history). A linear Q-function trained with LSPI picks each label, and test
//! time repeats whole-document passes until the labels stop changing.

pub mod error;
pub mod rng;
pub mod corpus;
pub mod features;
pub mod mdp;
pub mod lspi;
pub mod model_file;
pub mod inference;
pub mod baseline;
pub mod eval;
pub mod cli;

pub use error::{Error, Result};
