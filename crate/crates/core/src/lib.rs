pub mod bounds;
pub mod degeneration;
pub mod error;
pub mod families;
pub mod io;
pub mod optimizer;
pub mod partition;
pub mod rank;
pub mod tables;
pub mod tensor;

pub use error::{Error, Result};
