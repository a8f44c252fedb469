//! Poincaré series of integrable discrete-series matrix coefficients on
//! SL₂(ℝ), evaluated over principal congruence subgroups with certified
//! truncation bounds.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arithmetic;
pub mod certify;
pub mod cli;
pub mod discrete_series;
pub mod error;
pub mod group;
pub mod jet;
pub mod poincare;
pub mod quadrature;
pub mod roots;
pub mod sum;

pub use error::{LabError, Result};
pub use group::GroupElement;
