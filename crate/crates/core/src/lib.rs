//! Numerical lab for the Rabinowitz gradient flow on the symplectization of
//! the circle, the Kazdan–Warner reduction between its two formulations, and
//! the loop-space operations used to compose solutions.

pub mod acceptance;
pub mod banded;
pub mod correspondence;
pub mod error;
pub mod flows;
pub mod grid;
pub mod io;
pub mod kazdan_warner;
pub mod loopspace;
pub mod samples;
pub mod symplectization;

pub use error::{Error, Result};
