//! Staged search for constants y such that ⌊y·p#⌋ is prime at every stage,
//! with the density heuristics, extinction-probability recursions and
//! genealogy analytics that go with it.

pub mod decimal;
pub mod density;
pub mod engine;
pub mod error;
pub mod genealogy;
pub mod heuristics;
pub mod ntcore;
pub mod seedvariants;

pub use error::{Error, Result};
