//! Exact front tracking for one-dimensional scalar conservation laws with
//! uniformly convex flux, and a relative-entropy toolkit for the stability
//! of entropic shocks among weak solutions whose entropy production may have
//! a positive part.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod entropy;
pub mod exec;
pub mod flux;
pub mod fronttrack;
pub mod measure;
pub mod profile;
pub mod quadrature;
pub mod shift;
pub mod stability;
pub mod verify;
