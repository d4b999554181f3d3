//! Vectors, rays, analytic SDF trees and the two-layer scene.

mod scene;
mod sdf;
mod vec3;

pub use scene::{ContainmentReport, TwoLayerScene};
pub use sdf::{gradient, DistanceField, SdfNode, DEFAULT_GRADIENT_EPS};
pub use vec3::{Aabb, Ray, Vec3};
