pub mod census;
pub mod check;
pub mod cli;
pub mod eigen;
pub mod error;
pub mod grid;
pub mod heat;
pub mod mc;
pub mod sparse;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
