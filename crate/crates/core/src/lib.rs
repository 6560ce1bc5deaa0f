//! Certified bounds on the critical radius of two-qubit states.

pub mod error;
pub mod canonical;
pub mod extreal;
pub mod lp;
pub mod polytope;
pub mod qstate;
pub mod quadrature;
pub mod radius;
pub mod boundary;
pub mod povm;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use qstate::{BlochTensor, DensityMatrix, StateFamily};
