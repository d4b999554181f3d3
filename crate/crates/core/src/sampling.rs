//! Adaptive per-ray sampling and segmented transmittance reduction.
//!
//! A batch of ray intervals shares one global spacing `δz = R / N`, where
//! `R` is the summed interval length and `N` the sample budget. Each ray gets
//! `max(1, ⌊r_i / δz⌋)` samples placed at the midpoints of equal
//! sub-intervals, so every ray keeps a spacing in `[δz, 2δz)` unless the
//! one-sample clamp fired.

use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::rendering::Rgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayInterval {
    pub ray_index: usize,
    pub t_start: f64,
    pub t_end: f64,
}

impl RayInterval {
    pub fn new(ray_index: usize, t_start: f64, t_end: f64) -> Self {
        RayInterval {
            ray_index,
            t_start,
            t_end,
        }
    }

    pub fn length(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Variable-length sample lists for a set of rays, stored flat.
///
/// Segment `i` occupies `offsets[i]..offsets[i + 1]` of `t_values` and
/// `deltas`; `ray_indices[i]` is the ray it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RaggedSampleBatch {
    pub offsets: Vec<usize>,
    pub ray_indices: Vec<usize>,
    pub t_values: Vec<f64>,
    pub deltas: Vec<f64>,
    /// Whether the one-sample minimum was applied to any segment.
    pub clamped: bool,
}

impl RaggedSampleBatch {
    pub fn num_segments(&self) -> usize {
        self.ray_indices.len()
    }

    pub fn total_samples(&self) -> usize {
        self.t_values.len()
    }

    pub fn segment(&self, i: usize) -> Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn counts(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Uniform spacing used in segment `i`.
    pub fn spacing(&self, i: usize) -> f64 {
        self.deltas[self.offsets[i]]
    }
}

fn check_intervals(intervals: &[RayInterval]) -> Result<()> {
    if intervals.is_empty() {
        return Err(Error::EmptyBatch);
    }
    for (i, iv) in intervals.iter().enumerate() {
        if !(iv.t_start.is_finite() && iv.t_end.is_finite() && iv.length() > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "interval {i} must have finite t_end > t_start, got [{}, {}]",
                iv.t_start, iv.t_end
            )));
        }
    }
    Ok(())
}

/// Spacing `δz = R / N` for a budget of `n` samples.
pub fn global_spacing(intervals: &[RayInterval], n: usize) -> Result<f64> {
    check_intervals(intervals)?;
    if n < intervals.len() {
        return Err(Error::InvalidArgument(format!(
            "budget {n} is smaller than the ray count {}",
            intervals.len()
        )));
    }
    let total: f64 = intervals.iter().map(RayInterval::length).sum();
    Ok(total / n as f64)
}

/// Distributes a budget of `n` samples over `intervals` at a common spacing.
pub fn adaptive_sample(intervals: &[RayInterval], n: usize) -> Result<RaggedSampleBatch> {
    let dz = global_spacing(intervals, n)?;
    sample_with_spacing(intervals, dz, None)
}

/// Samples every interval at spacing close to `dz`. With `jitter_seed` set,
/// each sample moves to a seeded uniform position inside its sub-interval
/// instead of the midpoint.
pub fn sample_with_spacing(
    intervals: &[RayInterval],
    dz: f64,
    jitter_seed: Option<u64>,
) -> Result<RaggedSampleBatch> {
    check_intervals(intervals)?;
    if !(dz > 0.0 && dz.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "spacing must be positive, got {dz}"
        )));
    }
    let mut rng = jitter_seed.map(ChaCha8Rng::seed_from_u64);
    let mut offsets = Vec::with_capacity(intervals.len() + 1);
    offsets.push(0);
    let mut ray_indices = Vec::with_capacity(intervals.len());
    let mut t_values = Vec::new();
    let mut deltas = Vec::new();
    let mut clamped = false;
    for iv in intervals {
        let r = iv.length();
        // Relative slack keeps exact multiples of dz from flooring down.
        let floor = (r / dz * (1.0 + 1e-12)).floor();
        let n_i = if floor < 1.0 {
            clamped = true;
            1
        } else {
            floor as usize
        };
        let step = r / n_i as f64;
        for j in 0..n_i {
            let u = match rng.as_mut() {
                Some(rng) => rng.gen::<f64>(),
                None => 0.5,
            };
            t_values.push(iv.t_start + (j as f64 + u) * step);
            deltas.push(step);
        }
        ray_indices.push(iv.ray_index);
        offsets.push(t_values.len());
    }
    Ok(RaggedSampleBatch {
        offsets,
        ray_indices,
        t_values,
        deltas,
        clamped,
    })
}

/// Volume-rendering result for one segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentComposite {
    pub color: Rgb,
    /// Transmittance past the last sample.
    pub t_end: f64,
    /// Sum of per-sample weights; `weight_sum + t_end = 1` up to rounding.
    pub weight_sum: f64,
}

/// Emission-absorption quadrature for one segment.
pub fn composite_segment(sigma: &[f64], deltas: &[f64], colors: &[Rgb]) -> SegmentComposite {
    let mut depth = 0.0_f64;
    let mut color = Rgb::BLACK;
    let mut weight_sum = 0.0;
    for k in 0..sigma.len() {
        let tau = sigma[k] * deltas[k];
        let w = (-depth).exp() * -(-tau).exp_m1();
        color += colors[k] * w;
        weight_sum += w;
        depth += tau;
    }
    SegmentComposite {
        color,
        t_end: (-depth).exp(),
        weight_sum,
    }
}

/// Per-segment composites over a whole batch. Segments are reduced
/// independently, each in sample order.
pub fn segmented_transmittance(
    batch: &RaggedSampleBatch,
    sigma: &[f64],
    colors: &[Rgb],
) -> Result<Vec<SegmentComposite>> {
    let n = batch.total_samples();
    if sigma.len() != n || colors.len() != n || batch.deltas.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "batch has {n} samples, got {} densities and {} colors",
            sigma.len(),
            colors.len()
        )));
    }
    if batch.offsets.len() != batch.num_segments() + 1 || batch.offsets.last() != Some(&n) {
        return Err(Error::ShapeMismatch(
            "offsets do not cover the batch".into(),
        ));
    }
    if let Some(k) = sigma.iter().position(|s| !(*s >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "density must be non-negative, got {} at sample {k}",
            sigma[k]
        )));
    }
    Ok(par::map_range(batch.num_segments(), |i| {
        let r = batch.segment(i);
        composite_segment(&sigma[r.clone()], &batch.deltas[r.clone()], &colors[r])
    }))
}
