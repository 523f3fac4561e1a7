//! Numerical laboratory for the lower-tail large deviations of the KPZ
//! equation, worked entirely on the spectral side: the explicit rate
//! function, the constant-drift variational problem, stochastic Airy and
//! Hill operator spectra (matrix and Riccati routes), the Airy-kernel
//! Fredholm determinant, the localization sandwich and the periodic
//! eigenvalue-sum inequality.

#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod criteria;
pub mod error;
pub mod fredholm;
pub mod hill;
pub mod linalg;
pub mod noise;
pub mod quadrature;
pub mod rate_function;
pub mod riccati;
pub mod special_fn;
pub mod spectrum;
pub mod stochastic_airy;
pub mod variational;
pub mod wkb;

pub use error::{LabError, Result};
