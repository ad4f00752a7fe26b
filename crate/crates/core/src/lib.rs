pub mod beams;
pub mod clutter;
pub mod crb;
pub mod detector;
pub mod experiments;
pub mod echo;
pub mod error;
pub mod linalg;
pub mod music;
pub mod scene;

pub use error::{Error, Result};
