use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::error::{Error, Result};

/// Anything that can be queried for a signed distance.
///
/// Implemented for [`SdfNode`] and for closures `Fn(Vec3) -> f64`, so oracles
/// and synthetic fields (scaled SDFs, linear fields) go through the same
/// tracing and metric code as analytic scenes.
pub trait DistanceField: Sync {
    fn distance(&self, x: Vec3) -> f64;
}

impl<F> DistanceField for F
where
    F: Fn(Vec3) -> f64 + Sync,
{
    fn distance(&self, x: Vec3) -> f64 {
        self(x)
    }
}

/// Default finite-difference step for unit-scale scenes.
pub const DEFAULT_GRADIENT_EPS: f64 = 1e-4;

/// Central-difference gradient with step `eps` on every axis.
pub fn gradient<F: DistanceField + ?Sized>(field: &F, x: Vec3, eps: f64) -> Vec3 {
    let dx = Vec3::new(eps, 0.0, 0.0);
    let dy = Vec3::new(0.0, eps, 0.0);
    let dz = Vec3::new(0.0, 0.0, eps);
    let inv = 0.5 / eps;
    Vec3::new(
        (field.distance(x + dx) - field.distance(x - dx)) * inv,
        (field.distance(x + dy) - field.distance(x - dy)) * inv,
        (field.distance(x + dz) - field.distance(x - dz)) * inv,
    )
}

/// Analytic SDF tree.
///
/// Primitives return exact Euclidean signed distances (negative inside).
/// `Union`, `Intersection` and `Subtraction` use min/max and therefore only
/// bound the true distance from below outside the shape. All nodes are
/// 1-Lipschitz, which is what sphere tracing relies on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SdfNode {
    Sphere {
        center: Vec3,
        radius: f64,
    },
    /// Box with optional edge rounding; `rounding` is carved out of the
    /// half extents, so the outer size stays `half_extents`.
    Box {
        center: Vec3,
        half_extents: Vec3,
        #[serde(default)]
        rounding: f64,
    },
    Capsule {
        a: Vec3,
        b: Vec3,
        radius: f64,
    },
    /// Torus in the xz-plane around `center`.
    Torus {
        center: Vec3,
        major: f64,
        minor: f64,
    },
    /// Half-space `normal · x - offset <= 0`.
    Plane {
        normal: Vec3,
        offset: f64,
    },
    Union(Vec<SdfNode>),
    Intersection(Vec<SdfNode>),
    /// `a` minus `b`.
    Subtraction {
        a: Box<SdfNode>,
        b: Box<SdfNode>,
    },
    /// Hollow layer of half-width `thickness` around the child's surface.
    Shell {
        child: Box<SdfNode>,
        thickness: f64,
    },
    Translate {
        child: Box<SdfNode>,
        offset: Vec3,
    },
    /// Uniform scale about the origin.
    Scale {
        child: Box<SdfNode>,
        factor: f64,
    },
}

impl SdfNode {
    pub fn sphere(center: Vec3, radius: f64) -> SdfNode {
        SdfNode::Sphere { center, radius }
    }

    pub fn cuboid(center: Vec3, half_extents: Vec3) -> SdfNode {
        SdfNode::Box {
            center,
            half_extents,
            rounding: 0.0,
        }
    }

    pub fn plane(normal: Vec3, offset: f64) -> SdfNode {
        SdfNode::Plane { normal, offset }
    }

    pub fn shell(self, thickness: f64) -> SdfNode {
        SdfNode::Shell {
            child: Box::new(self),
            thickness,
        }
    }

    pub fn translate(self, offset: Vec3) -> SdfNode {
        SdfNode::Translate {
            child: Box::new(self),
            offset,
        }
    }

    pub fn scale(self, factor: f64) -> SdfNode {
        SdfNode::Scale {
            child: Box::new(self),
            factor,
        }
    }

    pub fn subtract(self, other: SdfNode) -> SdfNode {
        SdfNode::Subtraction {
            a: Box::new(self),
            b: Box::new(other),
        }
    }

    /// Signed distance at `x`.
    pub fn eval(&self, x: Vec3) -> f64 {
        match self {
            SdfNode::Sphere { center, radius } => (x - *center).norm() - radius,
            SdfNode::Box {
                center,
                half_extents,
                rounding,
            } => {
                let q = (x - *center).abs() - (*half_extents - Vec3::splat(*rounding));
                q.max(Vec3::ZERO).norm() + q.max_element().min(0.0) - rounding
            }
            SdfNode::Capsule { a, b, radius } => {
                let pa = x - *a;
                let ba = *b - *a;
                let h = (pa.dot(ba) / ba.norm_squared()).clamp(0.0, 1.0);
                (pa - ba * h).norm() - radius
            }
            SdfNode::Torus {
                center,
                major,
                minor,
            } => {
                let p = x - *center;
                let ring = (p.x * p.x + p.z * p.z).sqrt() - major;
                (ring * ring + p.y * p.y).sqrt() - minor
            }
            SdfNode::Plane { normal, offset } => normal.dot(x) - offset,
            SdfNode::Union(children) => children
                .iter()
                .map(|c| c.eval(x))
                .fold(f64::INFINITY, f64::min),
            SdfNode::Intersection(children) => children
                .iter()
                .map(|c| c.eval(x))
                .fold(f64::NEG_INFINITY, f64::max),
            SdfNode::Subtraction { a, b } => a.eval(x).max(-b.eval(x)),
            SdfNode::Shell { child, thickness } => child.eval(x).abs() - thickness,
            SdfNode::Translate { child, offset } => child.eval(x - *offset),
            SdfNode::Scale { child, factor } => child.eval(x / *factor) * factor,
        }
    }

    /// Finite-difference gradient, see [`gradient`].
    pub fn gradient(&self, x: Vec3, eps: f64) -> Vec3 {
        gradient(self, x, eps)
    }

    /// True for leaf primitives (no CSG or transform).
    pub fn is_primitive(&self) -> bool {
        matches!(
            self,
            SdfNode::Sphere { .. }
                | SdfNode::Box { .. }
                | SdfNode::Capsule { .. }
                | SdfNode::Torus { .. }
                | SdfNode::Plane { .. }
        )
    }

    /// Checks parameter invariants, reporting the path of the first
    /// offending field relative to `path`.
    pub fn validate_at(&self, path: &str) -> Result<()> {
        fn finite(v: Vec3, path: String) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(path, "finite components"))
            }
        }
        fn positive(v: f64, path: String, what: &str) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::validation(path, format!("{what} > 0")))
            }
        }
        match self {
            SdfNode::Sphere { center, radius } => {
                finite(*center, format!("{path}.sphere.center"))?;
                positive(*radius, format!("{path}.sphere.radius"), "radius")
            }
            SdfNode::Box {
                center,
                half_extents,
                rounding,
            } => {
                finite(*center, format!("{path}.box.center"))?;
                finite(*half_extents, format!("{path}.box.half_extents"))?;
                if half_extents.min_element() <= 0.0 {
                    return Err(Error::validation(
                        format!("{path}.box.half_extents"),
                        "half_extents > 0",
                    ));
                }
                if !(*rounding >= 0.0 && *rounding < half_extents.min_element()) {
                    return Err(Error::validation(
                        format!("{path}.box.rounding"),
                        "0 <= rounding < min(half_extents)",
                    ));
                }
                Ok(())
            }
            SdfNode::Capsule { a, b, radius } => {
                finite(*a, format!("{path}.capsule.a"))?;
                finite(*b, format!("{path}.capsule.b"))?;
                if (*a - *b).norm() == 0.0 {
                    return Err(Error::validation(format!("{path}.capsule.b"), "a != b"));
                }
                positive(*radius, format!("{path}.capsule.radius"), "radius")
            }
            SdfNode::Torus {
                center,
                major,
                minor,
            } => {
                finite(*center, format!("{path}.torus.center"))?;
                positive(*major, format!("{path}.torus.major"), "major")?;
                positive(*minor, format!("{path}.torus.minor"), "minor")
            }
            SdfNode::Plane { normal, offset } => {
                finite(*normal, format!("{path}.plane.normal"))?;
                if (normal.norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::validation(
                        format!("{path}.plane.normal"),
                        "|normal| = 1",
                    ));
                }
                if !offset.is_finite() {
                    return Err(Error::validation(format!("{path}.plane.offset"), "finite"));
                }
                Ok(())
            }
            SdfNode::Union(children) | SdfNode::Intersection(children) => {
                let tag = if matches!(self, SdfNode::Union(_)) {
                    "union"
                } else {
                    "intersection"
                };
                if children.is_empty() {
                    return Err(Error::validation(format!("{path}.{tag}"), "non-empty"));
                }
                for (i, c) in children.iter().enumerate() {
                    c.validate_at(&format!("{path}.{tag}[{i}]"))?;
                }
                Ok(())
            }
            SdfNode::Subtraction { a, b } => {
                a.validate_at(&format!("{path}.subtraction.a"))?;
                b.validate_at(&format!("{path}.subtraction.b"))
            }
            SdfNode::Shell { child, thickness } => {
                positive(*thickness, format!("{path}.shell.thickness"), "thickness")?;
                child.validate_at(&format!("{path}.shell.child"))
            }
            SdfNode::Translate { child, offset } => {
                finite(*offset, format!("{path}.translate.offset"))?;
                child.validate_at(&format!("{path}.translate.child"))
            }
            SdfNode::Scale { child, factor } => {
                positive(*factor, format!("{path}.scale.factor"), "factor")?;
                child.validate_at(&format!("{path}.scale.child"))
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_at("$")
    }
}

impl DistanceField for SdfNode {
    fn distance(&self, x: Vec3) -> f64 {
        self.eval(x)
    }
}
