use serde::{Deserialize, Serialize};

use super::{Aabb, SdfNode, Vec3};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::par;
use crate::rendering::{Rgb, Shader};

/// Two nested SDF layers: an opaque hard surface and the translucent soft
/// surface enclosing it.
///
/// `soft` may be absent, in which case the scene has no translucent region
/// and every ray is either a background ray or a hard-surface ray.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoLayerScene {
    pub hard: SdfNode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soft: Option<SdfNode>,
    #[serde(default)]
    pub shader_hard: Shader,
    #[serde(default)]
    pub shader_soft: Shader,
    #[serde(default)]
    pub density: DensityModel,
    #[serde(default)]
    pub bounds: Aabb,
    #[serde(default)]
    pub background: Rgb,
}

/// Outcome of a successful containment scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContainmentReport {
    pub points_checked: usize,
    pub hard_points: usize,
}

impl TwoLayerScene {
    /// Validates parameters of both trees, the density model, shaders and
    /// bounds. Does not scan for containment; see [`Self::validate_containment`].
    pub fn validate(&self) -> Result<()> {
        self.validate_at("$")
    }

    pub fn validate_at(&self, path: &str) -> Result<()> {
        self.hard.validate_at(&format!("{path}.hard"))?;
        if let Some(soft) = &self.soft {
            soft.validate_at(&format!("{path}.soft"))?;
        }
        self.shader_hard
            .validate_at(&format!("{path}.shader_hard"))?;
        self.shader_soft
            .validate_at(&format!("{path}.shader_soft"))?;
        self.density.validate_at(&format!("{path}.density"))?;
        if !self.bounds.is_valid() {
            return Err(Error::validation(
                format!("{path}.bounds"),
                "min < max on every axis",
            ));
        }
        if !self.background.is_finite() {
            return Err(Error::validation(format!("{path}.background"), "finite"));
        }
        Ok(())
    }

    /// Scans a `grid_res³` lattice spanning the bounds (endpoints
    /// included) and fails if any point lies in the hard region but outside
    /// the soft region. Up to 16 offending points are returned.
    pub fn validate_containment(&self, grid_res: usize) -> Result<ContainmentReport> {
        if grid_res < 8 {
            return Err(Error::InvalidArgument(format!(
                "grid_res must be >= 8, got {grid_res}"
            )));
        }
        let n = grid_res;
        let step = 1.0 / (n - 1) as f64;
        // One slab per z index; results come back in slab order.
        let slabs = par::map_range(n, |k| {
            let mut hard = 0usize;
            let mut bad = Vec::new();
            let mut bad_count = 0usize;
            for j in 0..n {
                for i in 0..n {
                    let x = self.bounds.lerp(Vec3::new(
                        i as f64 * step,
                        j as f64 * step,
                        k as f64 * step,
                    ));
                    if self.hard.eval(x) <= 0.0 {
                        hard += 1;
                        let outside_soft = match &self.soft {
                            Some(soft) => soft.eval(x) > 0.0,
                            None => false,
                        };
                        if outside_soft {
                            bad_count += 1;
                            if bad.len() < 16 {
                                bad.push(x);
                            }
                        }
                    }
                }
            }
            (hard, bad_count, bad)
        });
        let mut hard_points = 0;
        let mut count = 0;
        let mut points = Vec::new();
        for (h, c, b) in slabs {
            hard_points += h;
            count += c;
            let room = 16 - points.len();
            points.extend(b.into_iter().take(room));
        }
        if count > 0 {
            return Err(Error::ContainmentViolation { count, points });
        }
        Ok(ContainmentReport {
            points_checked: n * n * n,
            hard_points,
        })
    }

    /// Characteristic length of the scene: the largest bounds extent.
    pub fn scale(&self) -> f64 {
        self.bounds.extent().max_element()
    }
}
