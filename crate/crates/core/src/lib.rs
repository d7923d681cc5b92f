pub mod competitors;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod metrics;
pub mod optimize;
pub mod quad;
pub mod riesz;

pub use error::{Error, Result};
pub use grid::{GridSet, PerimeterMethod};
pub use riesz::{Kernel, NonlocalMethod};
