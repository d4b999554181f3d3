//! Two-layer signed distance scenes rendered with a hybrid surface/volume
//! model.
//!
//! A scene carries an opaque *hard* surface nested inside a translucent
//! *soft* surface. Rays are sphere traced against both layers; the hard
//! layer is shaded directly and the shell between the two layers is volume
//! rendered with an SDF-to-density mapping. Densities may be evaluated on
//! expected SDF moments over the conical frustum each sample covers.
//!
//! Module map:
//!
//! - [`geometry`]: vectors, rays, analytic SDF trees and the two-layer scene.
//! - [`frustum`]: conical frustums and integrated SDF moments with a Monte
//!   Carlo oracle.
//! - [`density`]: SDF-to-density models and a small fitting harness.
//! - [`tracing`]: bounds clipping, sphere tracing, exit search and Newton
//!   refinement.
//! - [`sampling`]: adaptive ragged sampling and segmented transmittance.
//! - [`rendering`]: cameras, shaders and the hybrid compositor.
//! - [`meshing`] and [`metrics`]: marching cubes, Chamfer, PSNR, Eikonal,
//!   specularity and mask losses.
//! - [`io`]: scene schema, PPM/PFM images and OBJ meshes.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is enabled (the default) and plain iterators otherwise.
//! Every parallel reduction combines partial results in a fixed order, so
//! outputs do not depend on the number of worker threads.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod frustum;
pub mod geometry;
pub mod io;
pub mod meshing;
pub mod metrics;
pub mod par;
pub mod rendering;
pub mod sampling;
pub mod tracing;

pub use error::{Error, Result};
pub use geometry::{Aabb, DistanceField, Ray, SdfNode, TwoLayerScene, Vec3};
