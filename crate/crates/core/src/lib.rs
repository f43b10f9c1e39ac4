pub mod catalog;
pub mod conformal;
pub mod cylinder;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod jet;
pub mod random_cases;
pub mod surfaces;
pub mod weierstrass;

pub use error::{Error, Result};
