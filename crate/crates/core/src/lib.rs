pub mod data;
pub mod distance;
pub mod error;
pub mod models;
pub mod multivariate;
pub mod privacy;
pub mod report;
pub mod seed;
pub mod sim;
pub mod univariate;

pub use error::{AuditError, Result};
