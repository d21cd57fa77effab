//! Bell inequalities without quantum violation built from orthogonal
//! product-vector sets, and the reverse construction of unextendible
//! product bases from such inequalities.

pub mod error;
pub mod linalg;
pub mod pipeline;
pub mod product_set;
pub mod ratio;
pub mod bell;
pub mod bounds;
pub mod families;
pub mod tightness;
pub mod tol;
pub mod upb;

pub use error::{Error, Result};
