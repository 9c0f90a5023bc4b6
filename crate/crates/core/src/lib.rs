//! Contour dynamics for α-SQG patches.
//!
//! The boundary of a patch is a closed curve sampled at uniformly spaced
//! Lagrangian labels. The crate evaluates the boundary velocity and its
//! arc-length derivative with corrected singular quadrature, evolves the
//! curve together with its metric and unit tangent, and ships numerical
//! checks for the kernel, regularity and stability estimates that govern
//! uniqueness of patch solutions.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod curve;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod lemma_lab;
pub mod parametric;
pub mod quadrature;
pub mod spectral;
pub mod stability;
pub mod vec2;
pub mod velocity;

pub use curve::{ClosedCurve, DiffScheme, GeometryFields};
pub use error::{Error, Result};
pub use vec2::Vec2;
pub use velocity::KernelParams;
