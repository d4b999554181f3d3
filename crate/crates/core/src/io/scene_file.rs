use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{TwoLayerScene, Vec3};
use crate::rendering::{Camera, RenderConfig, SampleBudget};
use crate::tracing::TraceConfig;

pub const SCENE_VERSION: u32 = 1;

fn default_up() -> Vec3 {
    Vec3::Y
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub position: Vec3,
    pub look_at: Vec3,
    #[serde(default = "default_up")]
    pub up: Vec3,
    /// Vertical field of view in radians.
    pub fov_y: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraSpec {
    pub fn to_camera(&self) -> Result<Camera> {
        Camera::look_at(
            self.position,
            self.look_at,
            self.up,
            self.fov_y,
            self.width,
            self.height,
        )
    }
}

/// Render options as stored in a scene file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSettings {
    pub budget: SampleBudget,
    pub tile_size: usize,
    pub trace_eps: f64,
    pub max_steps: usize,
    pub relax_omega: f64,
    pub fallback_samples: usize,
    pub step_scale: f64,
    pub gradient_eps: f64,
    pub integrated_sdf: bool,
    /// Seed for sample jitter; samples sit at interval midpoints when unset.
    pub jitter_seed: Option<u64>,
    /// Lattice resolution of the containment check run on load.
    pub containment_grid: usize,
}

impl Default for RenderSettings {
    fn default() -> Self {
        let r = RenderConfig::default();
        RenderSettings {
            budget: r.budget,
            tile_size: r.tile_size,
            trace_eps: r.trace.convergence_eps,
            max_steps: r.trace.max_steps,
            relax_omega: r.trace.relax_omega,
            fallback_samples: r.trace.fallback_samples,
            step_scale: r.trace.step_scale,
            gradient_eps: r.trace.gradient_eps,
            integrated_sdf: r.integrated_sdf,
            jitter_seed: None,
            containment_grid: 32,
        }
    }
}

impl RenderSettings {
    pub fn to_config(&self) -> RenderConfig {
        RenderConfig {
            trace: TraceConfig {
                max_steps: self.max_steps,
                convergence_eps: self.trace_eps,
                relax_omega: self.relax_omega,
                fallback_samples: self.fallback_samples,
                step_scale: self.step_scale,
                gradient_eps: self.gradient_eps,
            },
            budget: self.budget,
            tile_size: self.tile_size,
            integrated_sdf: self.integrated_sdf,
            frustum_half_height: None,
            cone_radius_unit: None,
            jitter_seed: self.jitter_seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    pub scene: TwoLayerScene,
    #[serde(default)]
    pub cameras: Vec<CameraSpec>,
    #[serde(default)]
    pub render: RenderSettings,
}

impl SceneFile {
    /// Checks every invariant except containment.
    pub fn validate(&self) -> Result<()> {
        if self.version != SCENE_VERSION {
            return Err(Error::validation(
                "$.version",
                format!("version == {SCENE_VERSION}"),
            ));
        }
        self.scene.validate_at("$.scene")?;
        for (i, c) in self.cameras.iter().enumerate() {
            c.to_camera().map_err(|e| match e {
                Error::Validation { path, invariant } => Error::Validation {
                    path: path.replacen("camera", &format!("$.cameras[{i}]"), 1),
                    invariant,
                },
                other => other,
            })?;
        }
        let cfg = self.render.to_config();
        cfg.validate().map_err(|e| match e {
            Error::Validation { path, invariant } => Error::Validation {
                path: format!(
                    "$.render.{}",
                    path.trim_start_matches("render.")
                        .trim_start_matches("trace.")
                ),
                invariant,
            },
            other => other,
        })?;
        if self.render.containment_grid < 8 {
            return Err(Error::validation(
                "$.render.containment_grid",
                "containment_grid >= 8",
            ));
        }
        Ok(())
    }

    pub fn camera(&self, i: usize) -> Result<Camera> {
        self.cameras
            .get(i)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "camera index {i} out of range ({} cameras)",
                    self.cameras.len()
                ))
            })?
            .to_camera()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// Parses and validates a scene file. Syntax and schema errors report a
/// line and column; invariant violations report the JSON path of the
/// offending field. Containment is checked separately with
/// [`TwoLayerScene::validate_containment`].
pub fn parse_scene(text: &str) -> Result<SceneFile> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    file.validate()?;
    Ok(file)
}
