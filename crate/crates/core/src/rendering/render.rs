use serde::{Deserialize, Serialize};

use super::{Camera, Image, Rgb};
use crate::error::{Error, Result};
use crate::frustum::{moments_closed_form, ConicalFrustum, UniformField};
use crate::geometry::{gradient, Ray, SdfNode, TwoLayerScene};
use crate::par;
use crate::sampling::{composite_segment, sample_with_spacing, RayInterval, SegmentComposite};
use crate::tracing::{
    clip_to_bounds, newton_refine, sphere_trace, trace_second_crossing, TraceConfig, TraceResult,
};

/// How volume samples are allotted to rays.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SampleBudget {
    /// Each tile gets `samples_per_ray` times its number of volume rays,
    /// spread at one spacing across the tile.
    PerTile { samples_per_ray: usize },
    /// As `PerTile`, with one spacing for the whole image.
    Global { samples_per_ray: usize },
    /// Fixed spacing for every ray, independent of its neighbours.
    FixedSpacing { spacing: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderConfig {
    pub trace: TraceConfig,
    pub budget: SampleBudget,
    /// Edge length of the square pixel tiles.
    pub tile_size: usize,
    /// Evaluate density from frustum moments instead of the point SDF.
    pub integrated_sdf: bool,
    /// Overrides the per-sample frustum half-height (default: half the
    /// sample spacing).
    pub frustum_half_height: Option<f64>,
    /// Overrides the camera's cone radius per unit distance.
    pub cone_radius_unit: Option<f64>,
    pub jitter_seed: Option<u64>,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            trace: TraceConfig::default(),
            budget: SampleBudget::PerTile {
                samples_per_ray: 64,
            },
            tile_size: 16,
            integrated_sdf: true,
            frustum_half_height: None,
            cone_radius_unit: None,
            jitter_seed: None,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        self.trace.validate()?;
        match self.budget {
            SampleBudget::PerTile { samples_per_ray }
            | SampleBudget::Global { samples_per_ray } => {
                if samples_per_ray < 1 {
                    return Err(Error::validation(
                        "render.budget.samples_per_ray",
                        "samples_per_ray >= 1",
                    ));
                }
            }
            SampleBudget::FixedSpacing { spacing } => {
                if !(spacing > 0.0 && spacing.is_finite()) {
                    return Err(Error::validation("render.budget.spacing", "spacing > 0"));
                }
            }
        }
        if self.tile_size < 1 {
            return Err(Error::validation("render.tile_size", "tile_size >= 1"));
        }
        if let Some(h) = self.frustum_half_height {
            if !(h > 0.0) {
                return Err(Error::validation(
                    "render.frustum_half_height",
                    "frustum_half_height > 0",
                ));
            }
        }
        if let Some(r) = self.cone_radius_unit {
            if !(r > 0.0) {
                return Err(Error::validation(
                    "render.cone_radius_unit",
                    "cone_radius_unit > 0",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RayCase {
    /// Misses both surfaces.
    Background = 1,
    /// Hits the hard surface with no soft layer in front.
    HardOnly = 2,
    /// Passes through the soft layer without reaching the hard surface.
    SoftOnly = 3,
    /// Enters the soft layer, then hits the hard surface.
    Both = 4,
}

impl RayCase {
    pub fn id(self) -> u8 {
        self as u8
    }
}

/// Surface crossings of one ray, before any volume integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayGeometry {
    pub case: RayCase,
    pub t_hat_s: Option<f64>,
    pub t_hat_h: Option<f64>,
    pub t_ddot_s: Option<f64>,
    /// Shaded hard-surface color at the refined hit point.
    pub hard_color: Option<Rgb>,
    pub soft_trace: Option<TraceResult>,
    pub hard_trace: Option<TraceResult>,
    /// Whether the Newton refinement of the hard hit saw a grazing ray.
    pub grazing: bool,
}

impl RayGeometry {
    /// Depth interval integrated by the volume renderer, if any.
    pub fn volume_interval(&self) -> Option<(f64, f64)> {
        match self.case {
            RayCase::SoftOnly => Some((self.t_hat_s?, self.t_ddot_s?)),
            RayCase::Both => Some((self.t_hat_s?, self.t_hat_h?)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOutcome {
    pub case: RayCase,
    pub color: Rgb,
    pub t_hat_s: Option<f64>,
    pub t_hat_h: Option<f64>,
    pub t_ddot_s: Option<f64>,
    /// Transmittance at the end of the volume interval (1 without one).
    pub t_end: f64,
    /// Sum of the volume sample weights; `weight_sum + t_end = 1`.
    pub weight_sum: f64,
    pub samples: usize,
    pub soft_trace: Option<TraceResult>,
    pub hard_trace: Option<TraceResult>,
}

pub fn classify_ray(scene: &TwoLayerScene, ray: &Ray, cfg: &TraceConfig) -> RayGeometry {
    let mut g = RayGeometry {
        case: RayCase::Background,
        t_hat_s: None,
        t_hat_h: None,
        t_ddot_s: None,
        hard_color: None,
        soft_trace: None,
        hard_trace: None,
        grazing: false,
    };
    let Some((t0, t1)) = clip_to_bounds(ray, &scene.bounds) else {
        return g;
    };
    let hard = sphere_trace(&scene.hard, ray, (t0, t1), cfg);
    g.hard_trace = Some(hard);
    let soft = scene
        .soft
        .as_ref()
        .map(|s| (s, sphere_trace(s, ray, (t0, t1), cfg)));
    g.soft_trace = soft.map(|(_, r)| r);
    if hard.hit {
        let refined = newton_refine(&scene.hard, ray, hard.t, cfg.gradient_eps);
        let x = refined.point;
        let n = gradient(&scene.hard, x, cfg.gradient_eps)
            .try_normalize()
            .unwrap_or(-ray.direction);
        g.hard_color = Some(scene.shader_hard.shade(x, n, ray.direction));
        g.grazing = refined.grazing;
        g.t_hat_h = Some(hard.t);
    }
    match soft {
        Some((node, s)) if s.hit => {
            g.t_hat_s = Some(s.t);
            if hard.hit {
                g.case = RayCase::Both;
            } else {
                g.case = RayCase::SoftOnly;
                let exit = match trace_second_crossing(node, ray, cfg, s.t, t1) {
                    Ok(r) => r.t,
                    Err(_) => t1,
                };
                g.t_ddot_s = Some(exit);
            }
        }
        _ => {
            if hard.hit {
                g.case = RayCase::HardOnly;
            }
        }
    }
    g
}

fn volume_sample(
    scene: &TwoLayerScene,
    soft: &SdfNode,
    ray: &Ray,
    cone_unit: f64,
    t: f64,
    delta: f64,
    cfg: &RenderConfig,
) -> (f64, Rgb) {
    let x = ray.at(t);
    let s = soft.eval(x);
    let normal = gradient(soft, x, cfg.trace.gradient_eps).try_normalize();
    let mut sigma = scene.density.point(s);
    if cfg.integrated_sdf {
        if let Some(n_c) = normal {
            // Keep the near cap in front of the apex for samples close to it.
            let h = cfg.frustum_half_height.unwrap_or(0.5 * delta).min(0.5 * t);
            if let Ok(f) = ConicalFrustum::new(ray.origin, ray.direction, cone_unit * t, t, h) {
                let m = moments_closed_form(&f, &UniformField { s_c: s, n_c });
                sigma = scene.density.integrated(&m);
            }
        }
    }
    let n = normal.unwrap_or(-ray.direction);
    (sigma, scene.shader_soft.shade(x, n, ray.direction))
}

const EMPTY_SEGMENT: SegmentComposite = SegmentComposite {
    color: Rgb::BLACK,
    t_end: 1.0,
    weight_sum: 0.0,
};

/// Volume-renders the given rays at a shared spacing. Returns one composite
/// and sample count per ray, in input order.
fn integrate_rays(
    scene: &TwoLayerScene,
    rays: &[(Ray, f64, (f64, f64))],
    spacing: f64,
    jitter_seed: Option<u64>,
    cfg: &RenderConfig,
) -> Result<Vec<(SegmentComposite, usize)>> {
    let Some(soft) = scene.soft.as_ref() else {
        return Ok(vec![(EMPTY_SEGMENT, 0); rays.len()]);
    };
    let intervals: Vec<RayInterval> = rays
        .iter()
        .enumerate()
        .filter(|(_, (_, _, (a, b)))| b > a)
        .map(|(i, (_, _, (a, b)))| RayInterval::new(i, *a, *b))
        .collect();
    let mut out = vec![(EMPTY_SEGMENT, 0); rays.len()];
    if intervals.is_empty() {
        return Ok(out);
    }
    let batch = sample_with_spacing(&intervals, spacing, jitter_seed)?;
    for seg in 0..batch.num_segments() {
        let i = batch.ray_indices[seg];
        let (ray, cone_unit, _) = &rays[i];
        let range = batch.segment(seg);
        let mut sigma = Vec::with_capacity(range.len());
        let mut colors = Vec::with_capacity(range.len());
        for k in range.clone() {
            let (s, c) = volume_sample(
                scene,
                soft,
                ray,
                *cone_unit,
                batch.t_values[k],
                batch.deltas[k],
                cfg,
            );
            sigma.push(s);
            colors.push(c);
        }
        out[i] = (
            composite_segment(&sigma, &batch.deltas[range], &colors),
            sigma.len(),
        );
    }
    Ok(out)
}

fn spacing_for(budget: &SampleBudget, lengths: impl Iterator<Item = f64>) -> Option<f64> {
    match *budget {
        SampleBudget::FixedSpacing { spacing } => Some(spacing),
        SampleBudget::PerTile { samples_per_ray } | SampleBudget::Global { samples_per_ray } => {
            let (count, total) = lengths
                .filter(|r| *r > 0.0)
                .fold((0usize, 0.0), |(c, t), r| (c + 1, t + r));
            (count > 0).then(|| total / (count * samples_per_ray) as f64)
        }
    }
}

fn outcome(
    g: &RayGeometry,
    seg: SegmentComposite,
    samples: usize,
    background: Rgb,
) -> RenderOutcome {
    let color = match g.case {
        RayCase::Background => background,
        RayCase::HardOnly => g.hard_color.unwrap_or(background),
        RayCase::SoftOnly => seg.color + background * seg.t_end,
        RayCase::Both => seg.color + g.hard_color.unwrap_or(background) * seg.t_end,
    };
    RenderOutcome {
        case: g.case,
        color,
        t_hat_s: g.t_hat_s,
        t_hat_h: g.t_hat_h,
        t_ddot_s: g.t_ddot_s,
        t_end: seg.t_end,
        weight_sum: seg.weight_sum,
        samples,
        soft_trace: g.soft_trace,
        hard_trace: g.hard_trace,
    }
}

/// Renders a single ray. The sample budget is applied as if the ray formed
/// a tile on its own.
pub fn render_ray(
    scene: &TwoLayerScene,
    ray: &Ray,
    cone_radius_unit: f64,
    cfg: &RenderConfig,
) -> Result<RenderOutcome> {
    cfg.validate()?;
    let g = classify_ray(scene, ray, &cfg.trace);
    let cone = cfg.cone_radius_unit.unwrap_or(cone_radius_unit);
    let (seg, n) = match g.volume_interval() {
        Some(iv) => {
            let spacing = spacing_for(&cfg.budget, std::iter::once(iv.1 - iv.0));
            match spacing {
                Some(dz) => {
                    integrate_rays(scene, &[(*ray, cone, iv)], dz, cfg.jitter_seed, cfg)?[0]
                }
                None => (EMPTY_SEGMENT, 0),
            }
        }
        None => (EMPTY_SEGMENT, 0),
    };
    Ok(outcome(&g, seg, n, scene.background))
}

#[derive(Debug, Clone)]
pub struct RenderedImage {
    pub image: Image,
    /// Per-pixel [`RayCase`] ids, row-major.
    pub cases: Vec<u8>,
    pub outcomes: Vec<RenderOutcome>,
}

impl RenderedImage {
    /// Case map as a color image: black, red, green, blue for cases 1 to 4.
    pub fn case_image(&self) -> Image {
        let palette = |c: u8| match c {
            2 => Rgb::new(1.0, 0.0, 0.0),
            3 => Rgb::new(0.0, 1.0, 0.0),
            4 => Rgb::new(0.0, 0.0, 1.0),
            _ => Rgb::BLACK,
        };
        let px = self.cases.iter().map(|&c| palette(c)).collect();
        Image::from_pixels(self.image.width(), self.image.height(), px).expect("same shape")
    }
}

fn tile_seed(seed: u64, tile: usize) -> u64 {
    seed ^ (tile as u64)
        .wrapping_add(1)
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Renders every pixel center of `cam`. Tiles are independent, so the
/// image does not depend on how they are scheduled.
pub fn render_image(
    scene: &TwoLayerScene,
    cam: &Camera,
    cfg: &RenderConfig,
) -> Result<RenderedImage> {
    cfg.validate()?;
    scene.validate()?;
    let (w, h) = (cam.width(), cam.height());
    let geom = par::map_range(w * h, |p| {
        let (ray, cone) = cam.pixel_center_ray(p % w, p / w);
        let cone = cfg.cone_radius_unit.unwrap_or(cone);
        (ray, cone, classify_ray(scene, &ray, &cfg.trace))
    });
    let interval_len = |p: usize| geom[p].2.volume_interval().map(|(a, b)| b - a);
    let global = match cfg.budget {
        SampleBudget::Global { .. } => {
            spacing_for(&cfg.budget, (0..w * h).filter_map(interval_len))
        }
        _ => None,
    };
    let ts = cfg.tile_size;
    let (tx, ty) = (w.div_ceil(ts), h.div_ceil(ts));
    let tiles = par::map_range(
        tx * ty,
        |tile| -> Result<Vec<(usize, SegmentComposite, usize)>> {
            let (x0, y0) = ((tile % tx) * ts, (tile / tx) * ts);
            let pixels: Vec<usize> = (y0..(y0 + ts).min(h))
                .flat_map(|y| (x0..(x0 + ts).min(w)).map(move |x| y * w + x))
                .filter(|&p| geom[p].2.volume_interval().is_some())
                .collect();
            let spacing = match cfg.budget {
                SampleBudget::Global { .. } => global,
                _ => spacing_for(&cfg.budget, pixels.iter().filter_map(|&p| interval_len(p))),
            };
            let Some(dz) = spacing else {
                return Ok(Vec::new());
            };
            let rays: Vec<_> = pixels
                .iter()
                .map(|&p| {
                    let (ray, cone, g) = &geom[p];
                    (*ray, *cone, g.volume_interval().expect("filtered"))
                })
                .collect();
            let seed = cfg.jitter_seed.map(|s| tile_seed(s, tile));
            let res = integrate_rays(scene, &rays, dz, seed, cfg)?;
            Ok(pixels
                .into_iter()
                .zip(res)
                .map(|(p, (s, n))| (p, s, n))
                .collect())
        },
    );
    let mut segs = vec![(EMPTY_SEGMENT, 0usize); w * h];
    for tile in tiles {
        for (p, s, n) in tile? {
            segs[p] = (s, n);
        }
    }
    let outcomes: Vec<RenderOutcome> = geom
        .iter()
        .zip(&segs)
        .map(|((_, _, g), (s, n))| outcome(g, *s, *n, scene.background))
        .collect();
    let image = Image::from_pixels(w, h, outcomes.iter().map(|o| o.color).collect())?;
    let cases = outcomes.iter().map(|o| o.case.id()).collect();
    Ok(RenderedImage {
        image,
        cases,
        outcomes,
    })
}
