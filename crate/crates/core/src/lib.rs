//! Sigmoid belief networks that approximate binary Markov kernels.
//!
//! The crate builds explicit weights for shallow and deep universal
//! approximators, evaluates their input-output kernels exactly by
//! enumeration, and checks the resulting errors against closed-form bounds.
//!
//! ```
//! use sbnet::construct::{build_deep, Schedule};
//! use sbnet::netcore::{network_kernel, Kernel};
//! use sbnet::verify::max_abs_error;
//!
//! let target = Kernel::uniform(1, 2);
//! let net = build_deep(&target, 0, 1e-3, Schedule::Simplified).unwrap();
//! let err = max_abs_error(&network_kernel(&net).unwrap(), &target).unwrap();
//! assert!(err < 0.02);
//! ```

pub mod bitspace;
pub mod cli;
pub mod construct;
pub mod error;
pub mod netcore;
pub mod verify;

pub use error::{Error, Result};
