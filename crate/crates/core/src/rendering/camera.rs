use crate::error::{Error, Result};
use crate::geometry::{Ray, Vec3};

/// Pinhole camera. Pixel `(i, j)` covers `[i, i+1) × [j, j+1)` in pixel
/// coordinates, with `j` growing downwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    position: Vec3,
    forward: Vec3,
    right: Vec3,
    up: Vec3,
    fov_y: f64,
    width: usize,
    height: usize,
}

impl Camera {
    pub fn look_at(
        position: Vec3,
        target: Vec3,
        up: Vec3,
        fov_y: f64,
        width: usize,
        height: usize,
    ) -> Result<Camera> {
        if !(fov_y > 0.0 && fov_y < std::f64::consts::PI) {
            return Err(Error::validation("camera.fov_y", "fov_y in (0, pi)"));
        }
        if width == 0 || height == 0 {
            return Err(Error::validation("camera.width", "width, height >= 1"));
        }
        let forward = (target - position)
            .try_normalize()
            .ok_or_else(|| Error::validation("camera.look_at", "look_at != position"))?;
        let right = forward
            .cross(up)
            .try_normalize()
            .ok_or_else(|| Error::validation("camera.up", "up not parallel to view direction"))?;
        let up = right.cross(forward);
        Ok(Camera {
            position,
            forward,
            right,
            up,
            fov_y,
            width,
            height,
        })
    }

    pub fn position(&self) -> Vec3 {
        self.position
    }

    pub fn forward(&self) -> Vec3 {
        self.forward
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn fov_y(&self) -> f64 {
        self.fov_y
    }

    /// Same view at a different resolution.
    pub fn with_resolution(&self, width: usize, height: usize) -> Camera {
        Camera {
            width,
            height,
            ..*self
        }
    }

    /// Cone radius per unit distance: one pixel's vertical world extent,
    /// `tan(fov_y/2) / (height/2)`.
    pub fn cone_radius_unit(&self) -> f64 {
        (self.fov_y * 0.5).tan() / (self.height as f64 * 0.5)
    }

    /// Ray through continuous pixel coordinates `(px, py)` and the cone
    /// radius per unit distance.
    pub fn pixel_ray(&self, px: f64, py: f64) -> (Ray, f64) {
        let tan = (self.fov_y * 0.5).tan();
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * px / self.width as f64 - 1.0) * tan * aspect;
        let sy = (1.0 - 2.0 * py / self.height as f64) * tan;
        let dir = self.forward + self.right * sx + self.up * sy;
        (Ray::new(self.position, dir), self.cone_radius_unit())
    }

    pub fn pixel_center_ray(&self, i: usize, j: usize) -> (Ray, f64) {
        self.pixel_ray(i as f64 + 0.5, j as f64 + 0.5)
    }
}
