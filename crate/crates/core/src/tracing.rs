//! Ray-surface intersection for distance fields.
//!
//! [`sphere_trace`] marches from the bounds entry with steps equal to the
//! field value. A crossing is only reported once a non-positive field value
//! has been observed just ahead of the converged point, so rays that graze a
//! surface without entering it are not reported as hits. Overshoots (a sign
//! flip between two steps, possible with `step_scale > 1`) are resolved by a
//! relaxed binary search, and rays that exhaust `max_steps` fall back to a
//! uniform scan of the remaining interval.

use crate::error::{Error, Result};
use crate::geometry::{gradient, Aabb, DistanceField, Ray, Vec3, DEFAULT_GRADIENT_EPS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceConfig {
    pub max_steps: usize,
    /// Convergence threshold on `|Φ|`, in distance units.
    pub convergence_eps: f64,
    /// Position of each binary-search probe as a fraction of the bracket,
    /// measured from the outside end; 0.5 is plain bisection. A value of 1
    /// would never leave the inside end and also bisects.
    pub relax_omega: f64,
    pub fallback_samples: usize,
    /// Multiplier on the sphere-tracing step. Values above 1 over-relax and
    /// rely on the binary search to recover from overshoots.
    pub step_scale: f64,
    /// Finite-difference step for normals and Newton refinement.
    pub gradient_eps: f64,
}

impl Default for TraceConfig {
    fn default() -> Self {
        TraceConfig {
            max_steps: 256,
            convergence_eps: 1e-6,
            relax_omega: 0.5,
            fallback_samples: 128,
            step_scale: 1.0,
            gradient_eps: DEFAULT_GRADIENT_EPS,
        }
    }
}

impl TraceConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_steps < 1 {
            return Err(Error::validation("trace.max_steps", "max_steps >= 1"));
        }
        if !(self.convergence_eps > 0.0) {
            return Err(Error::validation(
                "trace.convergence_eps",
                "convergence_eps > 0",
            ));
        }
        if !(self.relax_omega > 0.0 && self.relax_omega <= 1.0) {
            return Err(Error::validation(
                "trace.relax_omega",
                "relax_omega in (0, 1]",
            ));
        }
        if self.fallback_samples < 2 {
            return Err(Error::validation(
                "trace.fallback_samples",
                "fallback_samples >= 2",
            ));
        }
        if !(self.step_scale > 0.0 && self.step_scale < 2.0) {
            return Err(Error::validation(
                "trace.step_scale",
                "step_scale in (0, 2)",
            ));
        }
        if !(self.gradient_eps > 0.0) {
            return Err(Error::validation("trace.gradient_eps", "gradient_eps > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceMethod {
    SphereTrace,
    BinarySearch,
    FallbackScan,
    /// The field was already negative at the start of the interval.
    StartedInside,
    Miss,
}

impl TraceMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceMethod::SphereTrace => "sphere_trace",
            TraceMethod::BinarySearch => "binary_search",
            TraceMethod::FallbackScan => "fallback_scan",
            TraceMethod::StartedInside => "started_inside",
            TraceMethod::Miss => "miss",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceResult {
    pub hit: bool,
    /// Hit depth. On a fallback miss this is the depth of the smallest field
    /// value seen; on a plain miss it is the end of the interval.
    pub t: f64,
    pub point: Vec3,
    /// Unit normal at the hit, zero on a miss.
    pub normal: Vec3,
    pub steps_used: usize,
    pub method: TraceMethod,
    /// Smallest field value evaluated along the ray.
    pub min_sdf: f64,
}

/// Slab test against an axis-aligned box. Returns `(t_enter, t_exit)` with
/// `0 <= t_enter <= t_exit`, or `None` on a miss.
pub fn clip_to_bounds(ray: &Ray, bounds: &Aabb) -> Option<(f64, f64)> {
    let mut t0 = 0.0_f64;
    let mut t1 = f64::INFINITY;
    for axis in 0..3 {
        let o = ray.origin[axis];
        let d = ray.direction[axis];
        let (lo, hi) = (bounds.min[axis], bounds.max[axis]);
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut a, mut b) = ((lo - o) * inv, (hi - o) * inv);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t0 = t0.max(a);
        t1 = t1.min(b);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

const RELAXED_STEPS: usize = 64;

struct Marcher<'a, F: ?Sized> {
    field: &'a F,
    ray: &'a Ray,
    cfg: &'a TraceConfig,
    steps: usize,
    min_sdf: f64,
}

impl<'a, F: DistanceField + ?Sized> Marcher<'a, F> {
    fn new(field: &'a F, ray: &'a Ray, cfg: &'a TraceConfig) -> Self {
        Marcher {
            field,
            ray,
            cfg,
            steps: 0,
            min_sdf: f64::INFINITY,
        }
    }

    fn eval(&mut self, t: f64) -> f64 {
        let d = self.field.distance(self.ray.at(t));
        self.min_sdf = self.min_sdf.min(d);
        d
    }

    /// Relaxed bisection on a bracket whose ends have opposite signs,
    /// `t_out` on the non-negative side. Runs until the bracket is at most
    /// `eps` wide and returns the end with the smaller `|Φ|`. A small `|Φ|`
    /// alone is not enough: on grazing rays the field can stay below `eps`
    /// far from the crossing.
    fn bisect(&mut self, mut t_out: f64, mut t_in: f64) -> f64 {
        let eps = self.cfg.convergence_eps;
        let mut d_out = self.field.distance(self.ray.at(t_out));
        let mut d_in = self.field.distance(self.ray.at(t_in));
        // Relaxed steps first, then plain bisection so that any omega in
        // (0, 1] terminates.
        for iter in 0..RELAXED_STEPS + 200 {
            let omega = if iter < RELAXED_STEPS {
                self.cfg.relax_omega
            } else {
                0.5
            };
            let mut mid = t_out + omega * (t_in - t_out);
            if mid == t_in {
                mid = 0.5 * (t_out + t_in);
            }
            if (t_in - t_out).abs() <= eps || mid == t_out || mid == t_in {
                break;
            }
            let d = self.eval(mid);
            self.steps += 1;
            if d == 0.0 {
                return mid;
            }
            if d > 0.0 {
                t_out = mid;
                d_out = d;
            } else {
                t_in = mid;
                d_in = d;
            }
        }
        if d_out.abs() <= d_in.abs() {
            t_out
        } else {
            t_in
        }
    }

    fn finish(&self, hit: bool, t: f64, method: TraceMethod) -> TraceResult {
        let point = self.ray.at(t);
        let normal = if hit {
            gradient(self.field, point, self.cfg.gradient_eps).normalize()
        } else {
            Vec3::ZERO
        };
        TraceResult {
            hit,
            t,
            point,
            normal,
            steps_used: self.steps,
            method,
            min_sdf: self.min_sdf,
        }
    }

    /// Uniform scan of `[t_from, t_max]` for the first negative sample.
    fn fallback(&mut self, t_from: f64, t_max: f64) -> TraceResult {
        let n = self.cfg.fallback_samples.max(2);
        let dt = (t_max - t_from) / (n - 1) as f64;
        let mut prev_t = t_from;
        let mut best = (f64::INFINITY, t_from);
        for j in 0..n {
            let t = if j + 1 == n {
                t_max
            } else {
                t_from + j as f64 * dt
            };
            let d = self.eval(t);
            self.steps += 1;
            if d < best.0 {
                best = (d, t);
            }
            if d < 0.0 {
                if j == 0 {
                    return self.finish(true, t, TraceMethod::FallbackScan);
                }
                let t_hit = self.bisect(prev_t, t);
                return self.finish(true, t_hit, TraceMethod::FallbackScan);
            }
            prev_t = t;
        }
        let mut r = self.finish(false, best.1, TraceMethod::FallbackScan);
        r.hit = false;
        r
    }
}

/// First zero crossing of `field` along `ray` within `[t_min, t_max]`.
pub fn sphere_trace<F: DistanceField + ?Sized>(
    field: &F,
    ray: &Ray,
    span: (f64, f64),
    cfg: &TraceConfig,
) -> TraceResult {
    let (t_min, t_max) = span;
    let eps = cfg.convergence_eps;
    let mut m = Marcher::new(field, ray, cfg);
    let mut t = t_min;
    let mut d = m.eval(t);
    if d < 0.0 {
        return m.finish(true, t, TraceMethod::StartedInside);
    }
    let mut prev_t = t;
    loop {
        if d < 0.0 {
            let t_hit = m.bisect(prev_t, t);
            return m.finish(true, t_hit, TraceMethod::BinarySearch);
        }
        if d <= eps {
            // Confirm the surface is entered just ahead before accepting.
            let probe_t = t + 2.0 * eps;
            let probe = m.eval(probe_t);
            m.steps += 1;
            if probe <= 0.0 {
                return m.finish(true, t, TraceMethod::SphereTrace);
            }
        }
        if m.steps >= cfg.max_steps {
            return m.fallback(t, t_max);
        }
        prev_t = t;
        t += (d * cfg.step_scale).max(eps);
        m.steps += 1;
        if t >= t_max {
            t = t_max;
            d = m.eval(t);
            if d < 0.0 {
                let t_hit = m.bisect(prev_t, t);
                return m.finish(true, t_hit, TraceMethod::BinarySearch);
            }
            if d <= eps {
                return m.finish(true, t, TraceMethod::SphereTrace);
            }
            let mut r = m.finish(false, t_max, TraceMethod::Miss);
            r.t = t_max;
            return r;
        }
        d = m.eval(t);
    }
}

/// Exit point of the region entered at `after_t`: the first `t > after_t`
/// where the field returns to zero from inside.
///
/// Fails with [`Error::NoExit`] when the ray is still inside at `t_max`.
pub fn trace_second_crossing<F: DistanceField + ?Sized>(
    field: &F,
    ray: &Ray,
    cfg: &TraceConfig,
    after_t: f64,
    t_max: f64,
) -> Result<TraceResult> {
    let eps = cfg.convergence_eps;
    let mut m = Marcher::new(field, ray, cfg);
    let mut t = after_t;
    let mut d = m.eval(t);
    let mut inside = d < 0.0;
    loop {
        if m.steps >= cfg.max_steps * 4 {
            // Scan the rest for the first non-negative sample.
            let n = cfg.fallback_samples.max(2);
            let dt = (t_max - t) / (n - 1) as f64;
            let mut prev = t;
            for j in 1..n {
                let tj = t + j as f64 * dt;
                let dj = m.eval(tj);
                m.steps += 1;
                if dj >= 0.0 {
                    let t_hit = m.bisect(tj, prev);
                    return Ok(m.finish(true, t_hit, TraceMethod::FallbackScan));
                }
                prev = tj;
            }
            return Err(Error::NoExit { t_max });
        }
        let prev_t = t;
        t += (-d * cfg.step_scale).max(eps);
        m.steps += 1;
        if t >= t_max {
            t = t_max;
        }
        d = m.eval(t);
        if d < 0.0 {
            inside = true;
            if t >= t_max {
                return Err(Error::NoExit { t_max });
            }
            continue;
        }
        if inside {
            let t_hit = if d <= eps { t } else { m.bisect(t, prev_t) };
            return Ok(m.finish(true, t_hit, TraceMethod::BinarySearch));
        }
        if d > eps || t >= t_max {
            // Touched the surface without entering it.
            return Ok(m.finish(true, after_t, TraceMethod::SphereTrace));
        }
    }
}

/// One Newton step along the ray towards the zero level set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonRefinement {
    pub point: Vec3,
    /// Set when `|∇Φ·d| <= 1e-8`; the point is then left unrefined.
    pub grazing: bool,
}

pub fn newton_refine<F: DistanceField + ?Sized>(
    field: &F,
    ray: &Ray,
    t: f64,
    gradient_eps: f64,
) -> NewtonRefinement {
    let x = ray.at(t);
    let phi = field.distance(x);
    if phi == 0.0 {
        return NewtonRefinement {
            point: x,
            grazing: false,
        };
    }
    let slope = gradient(field, x, gradient_eps).dot(ray.direction);
    if slope.abs() <= 1e-8 {
        return NewtonRefinement {
            point: x,
            grazing: true,
        };
    }
    NewtonRefinement {
        point: x - ray.direction * (phi / slope),
        grazing: false,
    }
}
