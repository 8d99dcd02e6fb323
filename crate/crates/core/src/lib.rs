//! Numerical checks for KMS states, modular theory and beta-boundedness of
//! finite-dimensional quantum systems.

pub mod boundedness;
pub mod dynamics;
pub mod error;
pub mod gns;
pub mod holomorphy;
pub mod operator;
pub mod passivity;
pub mod realform;
pub mod report;
pub mod sampling;

pub use error::{Error, Result};
pub use operator::{ComplexMatrix, ComplexVector, HermitianOperator, C64};
pub use report::{ConditionReport, Status};
