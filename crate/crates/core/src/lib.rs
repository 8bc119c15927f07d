pub mod cylinder;
pub mod error;
pub mod essential;
pub mod linalg;
pub mod profiles;
pub mod quad;
pub mod spatial;
pub mod sturm;

pub use error::{Error, Result};
