pub mod cli;
pub mod error;
pub mod ext_real;
pub mod geometry;
pub mod instances;
pub mod linalg;
pub mod multimap;
pub mod oracle;
pub mod regularity;
pub mod sampling;
pub mod slopes;
pub mod tolerances;

pub use error::{Error, Result};
pub use ext_real::ExtReal;
