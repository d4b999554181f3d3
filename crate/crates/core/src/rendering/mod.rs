//! Cameras, analytic shaders and the two-layer compositor.

mod camera;
mod color;
mod render;
mod shader;

pub use camera::Camera;
pub use color::{Image, Rgb};
pub use render::{
    classify_ray, render_image, render_ray, RayCase, RayGeometry, RenderConfig, RenderOutcome,
    RenderedImage, SampleBudget,
};
pub use shader::{Albedo, Shader};
