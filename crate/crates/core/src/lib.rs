//! Discontinuity set characterisation for enclosed rock-face point clouds.
//!
//! The stages run in this order:
//!
//! 1. [`cloud`]: load points, estimate point spacing, derive the support radius.
//! 2. [`filter`]: keep points whose neighbourhood looks like a single plane.
//! 3. [`orientation`]: PCA normals, dip / dip direction, cyclic 2D poles.
//! 4. [`hdbscan`]: cluster poles into orientation sets.
//! 5. [`planes`]: split sets into planes and summarise each set.
//!
//! [`pipeline`] strings them together and writes reports, labelled clouds
//! and stereonets. [`synthetic`] builds seeded test fixtures.

pub mod cloud;
pub mod error;
pub mod filter;
pub mod hdbscan;
pub mod orientation;
pub mod pipeline;
pub mod planes;
pub mod spatial;
pub mod synthetic;

pub use error::{Error, Result};
