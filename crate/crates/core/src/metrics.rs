//! Evaluation metrics and regularizers: single-direction Chamfer distance,
//! PSNR, Eikonal residual, specularity penalty, mask BCE and photometric L1.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{gradient, Aabb, DistanceField, Vec3};
use crate::par;
use crate::rendering::{Image, RayCase, RenderOutcome, Shader};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointMetric {
    #[default]
    Euclidean,
    /// Sum of absolute per-axis differences.
    Manhattan,
}

impl PointMetric {
    fn distance(self, a: Vec3, b: Vec3) -> f64 {
        let d = a - b;
        match self {
            PointMetric::Euclidean => d.norm(),
            PointMetric::Manhattan => d.x.abs() + d.y.abs() + d.z.abs(),
        }
    }
}

/// Static kd-tree over a point set, stored as a median-ordered array.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut points = points.to_vec();
        Self::build(&mut points, 0);
        KdTree { points }
    }

    fn build(pts: &mut [Vec3], depth: usize) {
        if pts.len() <= 1 {
            return;
        }
        let axis = depth % 3;
        let mid = pts.len() / 2;
        pts.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
        let (left, right) = pts.split_at_mut(mid);
        Self::build(left, depth + 1);
        Self::build(&mut right[1..], depth + 1);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest point to `q` under `metric` and its distance.
    pub fn nearest(&self, q: Vec3, metric: PointMetric) -> Option<(Vec3, f64)> {
        let mut best = (Vec3::ZERO, f64::INFINITY);
        Self::search(&self.points, q, 0, metric, &mut best);
        best.1.is_finite().then_some(best)
    }

    fn search(pts: &[Vec3], q: Vec3, depth: usize, metric: PointMetric, best: &mut (Vec3, f64)) {
        if pts.is_empty() {
            return;
        }
        let mid = pts.len() / 2;
        let p = pts[mid];
        let d = metric.distance(p, q);
        if d < best.1 {
            *best = (p, d);
        }
        let axis = depth % 3;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            (&pts[..mid], &pts[mid + 1..])
        } else {
            (&pts[mid + 1..], &pts[..mid])
        };
        Self::search(near, q, depth + 1, metric, best);
        // The axis gap bounds both metrics from below.
        if diff.abs() < best.1 {
            Self::search(far, q, depth + 1, metric, best);
        }
    }
}

/// Mean distance from each reference point to its nearest candidate point.
/// Not symmetric in its arguments.
pub fn chamfer_single(reference: &[Vec3], candidate: &[Vec3], metric: PointMetric) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyInput("reference point set".into()));
    }
    if candidate.is_empty() {
        return Err(Error::EmptyInput("candidate point set".into()));
    }
    let tree = KdTree::new(candidate);
    let d = par::map_slice(reference, |&p| {
        tree.nearest(p, metric).expect("non-empty").1
    });
    Ok(d.iter().sum::<f64>() / d.len() as f64)
}

/// Peak signal-to-noise ratio in dB over all channels. Identical images give
/// `f64::INFINITY`.
pub fn psnr(a: &Image, b: &Image, peak: f64) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| {
            let d = *x - *y;
            d.r * d.r + d.g * d.g + d.b * d.b
        })
        .sum();
    let mse = sum / (3 * a.pixels().len()) as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EikonalReport {
    /// Mean of `(‖∇Φ‖ − 1)²`.
    pub mean: f64,
    pub max: f64,
    pub points: usize,
}

pub const EIKONAL_MIN_POINTS: usize = 100;

/// Eikonal residual at `n_points` seeded uniform points in `bounds`.
pub fn eikonal_residual<F: DistanceField + ?Sized>(
    field: &F,
    bounds: &Aabb,
    n_points: usize,
    seed: u64,
    grad_eps: f64,
) -> Result<EikonalReport> {
    eikonal_residual_where(field, bounds, n_points, seed, grad_eps, |_| true)
}

/// As [`eikonal_residual`], skipping points rejected by `keep` (for example
/// near a medial axis). Rejected points still consume their draw, so the
/// kept set is a subset of the unfiltered one.
pub fn eikonal_residual_where<F, P>(
    field: &F,
    bounds: &Aabb,
    n_points: usize,
    seed: u64,
    grad_eps: f64,
    keep: P,
) -> Result<EikonalReport>
where
    F: DistanceField + ?Sized,
    P: Fn(Vec3) -> bool + Sync,
{
    if n_points < EIKONAL_MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "need at least {EIKONAL_MIN_POINTS} points, got {n_points}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec3> = (0..n_points)
        .map(|_| bounds.lerp(Vec3::new(rng.gen(), rng.gen(), rng.gen())))
        .filter(|&p| keep(p))
        .collect();
    if pts.is_empty() {
        return Err(Error::EmptyInput(
            "no sample point passed the filter".into(),
        ));
    }
    let r = par::map_slice(&pts, |&p| {
        let g = gradient(field, p, grad_eps).norm() - 1.0;
        g * g
    });
    Ok(EikonalReport {
        mean: r.iter().sum::<f64>() / r.len() as f64,
        max: r.iter().cloned().fold(0.0, f64::max),
        points: r.len(),
    })
}

/// Frobenius norm of the derivative of the shaded color with respect to the
/// view direction, taken by central differences along two tangent
/// directions of the unit sphere at `d`.
pub fn specularity_penalty(shader: &Shader, x: Vec3, n: Vec3, d: Vec3, fd_step: f64) -> f64 {
    let d = d.normalize();
    let (t1, t2) = d.orthonormal_basis();
    let mut sum = 0.0;
    for t in [t1, t2] {
        let plus = shader.shade(x, n, (d + t * fd_step).normalize());
        let minus = shader.shade(x, n, (d - t * fd_step).normalize());
        let col = (plus - minus) * (0.5 / fd_step);
        sum += col.r * col.r + col.g * col.g + col.b * col.b;
    }
    sum.sqrt()
}

pub const SOFT_MASK_THRESHOLD: f64 = 0.002;
pub const HARD_MASK_THRESHOLD: f64 = 0.9;
pub const DEFAULT_BCE_EPS: f64 = 1e-6;

/// Ground-truth masks `(hard, soft)` from a saliency map.
pub fn saliency_masks(saliency: &[f64]) -> (Vec<bool>, Vec<bool>) {
    let hard = saliency.iter().map(|&s| s > HARD_MASK_THRESHOLD).collect();
    let soft = saliency.iter().map(|&s| s > SOFT_MASK_THRESHOLD).collect();
    (hard, soft)
}

/// Mean binary cross-entropy of `pred` against `target`, with predictions
/// clamped to `[eps, 1 − eps]`.
pub fn bce(target: &[bool], pred: &[f64], eps: f64) -> Result<f64> {
    if target.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} targets vs {} predictions",
            target.len(),
            pred.len()
        )));
    }
    if target.is_empty() {
        return Err(Error::EmptyInput("mask".into()));
    }
    let sum: f64 = target
        .iter()
        .zip(pred)
        .map(|(&y, &p)| {
            let p = p.clamp(eps, 1.0 - eps);
            if y {
                -p.ln()
            } else {
                -(1.0 - p).ln()
            }
        })
        .sum();
    Ok(sum / target.len() as f64)
}

/// Mask losses `(L_h, L_s)` of rendered occupancies against thresholded
/// saliency.
pub fn mask_bce(
    saliency: &[f64],
    occupancy_hard: &[f64],
    occupancy_soft: &[f64],
    eps: f64,
) -> Result<(f64, f64)> {
    if saliency.len() != occupancy_hard.len() || saliency.len() != occupancy_soft.len() {
        return Err(Error::ShapeMismatch(format!(
            "saliency {} vs occupancies {} / {}",
            saliency.len(),
            occupancy_hard.len(),
            occupancy_soft.len()
        )));
    }
    let (o_h, o_s) = saliency_masks(saliency);
    Ok((
        bce(&o_h, occupancy_hard, eps)?,
        bce(&o_s, occupancy_soft, eps)?,
    ))
}

/// Hard occupancy of a rendered ray: 1 on a hard hit, else 0. Smoothing is
/// left to the clamp in [`bce`].
pub fn hard_occupancy(o: &RenderOutcome) -> f64 {
    match o.case {
        RayCase::HardOnly | RayCase::Both => 1.0,
        _ => 0.0,
    }
}

/// Soft occupancy of a rendered ray: `1 − T_end` across the soft layer, 1
/// for a bare hard hit.
pub fn soft_occupancy(o: &RenderOutcome) -> f64 {
    match o.case {
        RayCase::Background => 0.0,
        RayCase::HardOnly => 1.0,
        RayCase::SoftOnly | RayCase::Both => 1.0 - o.t_end,
    }
}

/// Sum over masked pixels of the L1 color difference.
pub fn photometric_l1(a: &Image, b: &Image, mask: &[bool]) -> Result<f64> {
    if !a.same_shape(b) || mask.len() != a.pixels().len() {
        return Err(Error::ShapeMismatch(format!(
            "{}x{} vs {}x{} with mask of {}",
            a.width(),
            a.height(),
            b.width(),
            b.height(),
            mask.len()
        )));
    }
    Ok(a.pixels()
        .iter()
        .zip(b.pixels())
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|((x, y), _)| (*x - *y).l1())
        .sum())
}
