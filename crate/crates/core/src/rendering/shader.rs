use serde::{Deserialize, Serialize};

use super::Rgb;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// Surface color as a function of position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Albedo {
    Constant(Rgb),
    /// 3D checkerboard with cells of edge `scale`.
    Checker {
        a: Rgb,
        b: Rgb,
        scale: f64,
    },
}

impl Albedo {
    pub fn at(&self, x: Vec3) -> Rgb {
        match self {
            Albedo::Constant(c) => *c,
            Albedo::Checker { a, b, scale } => {
                let k = (x.x / scale).floor() + (x.y / scale).floor() + (x.z / scale).floor();
                if k.rem_euclid(2.0) == 0.0 {
                    *a
                } else {
                    *b
                }
            }
        }
    }

    fn validate_at(&self, path: &str) -> Result<()> {
        match self {
            Albedo::Constant(c) => check_unit_color(c, path),
            Albedo::Checker { a, b, scale } => {
                check_unit_color(a, &format!("{path}.a"))?;
                check_unit_color(b, &format!("{path}.b"))?;
                if !(*scale > 0.0 && scale.is_finite()) {
                    return Err(Error::validation(format!("{path}.scale"), "scale > 0"));
                }
                Ok(())
            }
        }
    }
}

fn check_unit_color(c: &Rgb, path: &str) -> Result<()> {
    let ok = |v: f64| (0.0..=1.0).contains(&v);
    if ok(c.r) && ok(c.g) && ok(c.b) {
        Ok(())
    } else {
        Err(Error::validation(path, "color channels in [0, 1]"))
    }
}

/// Analytic stand-in for a learned appearance network: color from the
/// surface point `x`, unit normal `n` and unit view direction `d` (camera
/// towards the point).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Shader {
    /// `(n + 1) / 2`.
    #[default]
    NormalColor,
    FlatAlbedo {
        albedo: Albedo,
    },
    Lambertian {
        albedo: Albedo,
        /// Direction towards the light.
        light_dir: Vec3,
        #[serde(default)]
        ambient: f64,
    },
    BlinnSpec {
        albedo: Albedo,
        light_dir: Vec3,
        #[serde(default)]
        ambient: f64,
        specular: f64,
        exponent: f64,
    },
}

impl Shader {
    pub fn lambertian(albedo: Rgb, light_dir: Vec3, ambient: f64) -> Shader {
        Shader::Lambertian {
            albedo: Albedo::Constant(albedo),
            light_dir,
            ambient,
        }
    }

    pub fn flat(albedo: Rgb) -> Shader {
        Shader::FlatAlbedo {
            albedo: Albedo::Constant(albedo),
        }
    }

    pub fn validate_at(&self, path: &str) -> Result<()> {
        let diffuse = |albedo: &Albedo, light_dir: &Vec3, ambient: f64, kind: &str| {
            albedo.validate_at(&format!("{path}.{kind}.albedo"))?;
            if light_dir.try_normalize().is_none() {
                return Err(Error::validation(
                    format!("{path}.{kind}.light_dir"),
                    "light_dir non-zero",
                ));
            }
            if !(0.0..=1.0).contains(&ambient) {
                return Err(Error::validation(
                    format!("{path}.{kind}.ambient"),
                    "ambient in [0, 1]",
                ));
            }
            Ok(())
        };
        match self {
            Shader::NormalColor => Ok(()),
            Shader::FlatAlbedo { albedo } => {
                albedo.validate_at(&format!("{path}.flat_albedo.albedo"))
            }
            Shader::Lambertian {
                albedo,
                light_dir,
                ambient,
            } => diffuse(albedo, light_dir, *ambient, "lambertian"),
            Shader::BlinnSpec {
                albedo,
                light_dir,
                ambient,
                specular,
                exponent,
            } => {
                diffuse(albedo, light_dir, *ambient, "blinn_spec")?;
                if !(*specular >= 0.0 && specular.is_finite()) {
                    return Err(Error::validation(
                        format!("{path}.blinn_spec.specular"),
                        "specular >= 0",
                    ));
                }
                if !(*exponent >= 1.0 && exponent.is_finite()) {
                    return Err(Error::validation(
                        format!("{path}.blinn_spec.exponent"),
                        "exponent >= 1",
                    ));
                }
                Ok(())
            }
        }
    }

    /// Shaded color, clamped to `[0, 1]` per channel.
    pub fn shade(&self, x: Vec3, n: Vec3, d: Vec3) -> Rgb {
        let lambert = |albedo: &Albedo, light_dir: &Vec3, ambient: f64| {
            let l = light_dir.normalize();
            albedo.at(x) * (ambient + (1.0 - ambient) * n.dot(l).max(0.0))
        };
        let c = match self {
            Shader::NormalColor => Rgb::new(n.x + 1.0, n.y + 1.0, n.z + 1.0) * 0.5,
            Shader::FlatAlbedo { albedo } => albedo.at(x),
            Shader::Lambertian {
                albedo,
                light_dir,
                ambient,
            } => lambert(albedo, light_dir, *ambient),
            Shader::BlinnSpec {
                albedo,
                light_dir,
                ambient,
                specular,
                exponent,
            } => {
                let l = light_dir.normalize();
                let spec = match (l - d).try_normalize() {
                    Some(h) if n.dot(l) > 0.0 => specular * n.dot(h).max(0.0).powf(*exponent),
                    _ => 0.0,
                };
                lambert(albedo, light_dir, *ambient) + Rgb::gray(spec)
            }
        };
        c.clamp01()
    }
}
