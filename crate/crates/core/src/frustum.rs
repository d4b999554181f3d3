//! Conical frustums and expected SDF moments over them.
//!
//! A pixel cone has its apex at the ray origin and radius `r` at axial
//! distance `t`, growing linearly with depth. A sample at depth `t` covers the
//! slice `t - h < d·(x - o) < t + h` of that cone. Under a locally linear
//! ("uniform") field `s(x) = s_c + n_c·(x - x_c)` the first two moments of `s`
//! over the slice, with uniform volume weighting, are:
//!
//! ```text
//! D      = 3t² + h²
//! E[a]   = 2 t h² / D                          axial offset from the centre
//! E[a²]  = h² (5t² + 3h²) / (5 D)
//! E[ρ²]  = 3 r² (5t⁴ + 10t²h² + h⁴) / (10 t² D)   squared radial offset
//!
//! E[s]   = s_c + n_z E[a]
//! E[s²]  = s_c² + 2 s_c n_z E[a] + n_z² E[a²] + (1 - n_z²) E[ρ²] / 2
//! ```
//!
//! with `n_z = d·n_c`. These are checked against the Monte Carlo estimator
//! [`moments_monte_carlo`] in the test suite.
//!
//! The older published closed forms, kept here as [`moments_printed`] and
//! [`moments_printed_simplified`] for comparison, differ in three places:
//!
//! | term              | published                 | derived                          |
//! |-------------------|---------------------------|----------------------------------|
//! | `E[s] - s_c`      | `2ht/D · n_z`             | `2th²/D · n_z`                   |
//! | `n_z²` coefficient| `t²h²/D`                  | `h²(5t² + 3h²)/(5D)`             |
//! | radial term       | absent                    | `(1 - n_z²) E[ρ²]/2`             |
//! | `t ≫ h`, `E[s]`   | `s_c + 2h/(3t) · n_z`     | `s_c + 2h²/(3t) · n_z`           |
//!
//! The published first moment is dimensionless where a length is required;
//! the other two differences are O(h⁴/t²) and O(r²) respectively.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::par;

/// Slice `[t - h, t + h]` of the cone with apex `origin`, axis `direction`
/// and radius `radius` at depth `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicalFrustum {
    origin: Vec3,
    direction: Vec3,
    radius: f64,
    t: f64,
    half_height: f64,
}

impl ConicalFrustum {
    /// Requires `t > half_height > 0`, `radius > 0` and a non-zero
    /// direction (normalized here).
    pub fn new(
        origin: Vec3,
        direction: Vec3,
        radius: f64,
        t: f64,
        half_height: f64,
    ) -> Result<Self> {
        let direction = direction
            .try_normalize()
            .ok_or_else(|| Error::InvalidFrustum("direction must be non-zero".into()))?;
        if !origin.is_finite() || !radius.is_finite() || !t.is_finite() {
            return Err(Error::InvalidFrustum("non-finite parameter".into()));
        }
        if !(half_height > 0.0) {
            return Err(Error::InvalidFrustum(format!(
                "half-height must be positive, got {half_height}"
            )));
        }
        if !(t > half_height) {
            return Err(Error::InvalidFrustum(format!(
                "need t > h, got t = {t}, h = {half_height}"
            )));
        }
        if !(radius > 0.0) {
            return Err(Error::InvalidFrustum(format!(
                "radius must be positive, got {radius}"
            )));
        }
        Ok(ConicalFrustum {
            origin,
            direction,
            radius,
            t,
            half_height,
        })
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn direction(&self) -> Vec3 {
        self.direction
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn half_height(&self) -> f64 {
        self.half_height
    }

    /// Frustum centre `o + t·d`.
    pub fn center(&self) -> Vec3 {
        self.origin + self.direction * self.t
    }

    /// Indicator of the open frustum.
    pub fn contains(&self, x: Vec3) -> bool {
        let rel = x - self.origin;
        let axial = self.direction.dot(rel);
        if !(self.t - self.half_height < axial && axial < self.t + self.half_height) {
            return false;
        }
        let len = rel.norm();
        let cos_limit = self.t / (self.t * self.t + self.radius * self.radius).sqrt();
        axial / len > cos_limit
    }

    pub fn volume(&self) -> f64 {
        let (t, h) = (self.t, self.half_height);
        let k = self.radius / t;
        std::f64::consts::PI * k * k * ((t + h).powi(3) - (t - h).powi(3)) / 3.0
    }

    /// Maps three uniforms in `[0, 1)` to a point distributed uniformly by
    /// volume: depth with density ∝ z², then a uniform disk at that depth.
    pub fn sample(&self, u_depth: f64, u_radius: f64, u_angle: f64) -> Vec3 {
        let z0 = self.t - self.half_height;
        let z1 = self.t + self.half_height;
        let (c0, c1) = (z0 * z0 * z0, z1 * z1 * z1);
        let z = (c0 + u_depth * (c1 - c0)).cbrt().clamp(z0, z1);
        let rho = self.radius * z / self.t * u_radius.sqrt();
        let theta = std::f64::consts::TAU * u_angle;
        let (u, v) = self.direction.orthonormal_basis();
        self.origin + self.direction * z + (u * theta.cos() + v * theta.sin()) * rho
    }
}

/// Linear SDF `s_c + n_c·(x - x_c)`: the field grows along its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformField {
    pub s_c: f64,
    pub n_c: Vec3,
}

impl UniformField {
    /// `n_c` is normalized; zero gradients are rejected.
    pub fn new(s_c: f64, n_c: Vec3) -> Result<Self> {
        let n_c = n_c.try_normalize().ok_or_else(|| {
            Error::InvalidArgument("uniform field gradient must be non-zero".into())
        })?;
        Ok(UniformField { s_c, n_c })
    }

    /// Field value at `x` given the reference location `x_c`.
    pub fn value(&self, x_c: Vec3, x: Vec3) -> f64 {
        self.s_c + self.n_c.dot(x - x_c)
    }
}

/// First and second moments of the SDF over a frustum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdfMoments {
    pub e_s: f64,
    pub e_s2: f64,
}

impl SdfMoments {
    /// Moments of a field that is constant at `s`.
    pub fn point(s: f64) -> Self {
        SdfMoments {
            e_s: s,
            e_s2: s * s,
        }
    }

    pub fn variance(&self) -> f64 {
        self.e_s2 - self.e_s * self.e_s
    }

    /// `E[(s - μ)²] = E[s²] - 2μE[s] + μ²`.
    pub fn expected_quadratic(&self, mu: f64) -> f64 {
        self.e_s2 - 2.0 * mu * self.e_s + mu * mu
    }
}

/// Free-function form of [`SdfMoments::expected_quadratic`].
pub fn expected_quadratic(moments: &SdfMoments, mu: f64) -> f64 {
    moments.expected_quadratic(mu)
}

/// Axial and radial shape moments of a frustum: `(E[a], E[a²], E[ρ²])`,
/// where `a` is the axial offset from the centre and `ρ` the distance from
/// the axis.
pub fn shape_moments(f: &ConicalFrustum) -> (f64, f64, f64) {
    let (t, h, r) = (f.t, f.half_height, f.radius);
    let (t2, h2) = (t * t, h * h);
    let d = 3.0 * t2 + h2;
    let e_a = 2.0 * t * h2 / d;
    let e_a2 = h2 * (5.0 * t2 + 3.0 * h2) / (5.0 * d);
    let e_rho2 = 3.0 * r * r * (5.0 * t2 * t2 + 10.0 * t2 * h2 + h2 * h2) / (10.0 * t2 * d);
    (e_a, e_a2, e_rho2)
}

/// Closed-form moments of a uniform field centred on the frustum centre.
pub fn moments_closed_form(f: &ConicalFrustum, u: &UniformField) -> SdfMoments {
    let (e_a, e_a2, e_rho2) = shape_moments(f);
    let nz = f.direction.dot(u.n_c);
    let radial = (1.0 - nz * nz).max(0.0);
    let e_s = u.s_c + nz * e_a;
    let e_s2 = u.s_c * u.s_c + 2.0 * u.s_c * nz * e_a + nz * nz * e_a2 + radial * e_rho2 * 0.5;
    SdfMoments { e_s, e_s2 }
}

/// The published closed forms, reproduced verbatim for comparison only.
pub fn moments_printed(f: &ConicalFrustum, u: &UniformField) -> SdfMoments {
    let (t, h) = (f.t, f.half_height);
    let nz = f.direction.dot(u.n_c);
    let d = 3.0 * t * t + h * h;
    SdfMoments {
        e_s: u.s_c + 2.0 * h * t / d * nz,
        e_s2: u.s_c * u.s_c + (t * t * h * h * nz * nz + 4.0 * t * h * h * u.s_c * nz) / d,
    }
}

/// The published `t ≫ h` simplification, reproduced for comparison only.
pub fn moments_printed_simplified(f: &ConicalFrustum, u: &UniformField) -> SdfMoments {
    let (t, h) = (f.t, f.half_height);
    let nz = f.direction.dot(u.n_c);
    SdfMoments {
        e_s: u.s_c + 2.0 * h / (3.0 * t) * nz,
        e_s2: u.s_c * u.s_c + h * h * nz * nz / 3.0 + 4.0 * h * h * u.s_c * nz / (3.0 * t),
    }
}

/// Monte Carlo estimate of the moments with standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloMoments {
    pub moments: SdfMoments,
    pub stderr_s: f64,
    pub stderr_s2: f64,
    pub samples: usize,
}

impl MonteCarloMoments {
    /// Deviation of `expected` from the estimate, in standard errors, for
    /// each moment.
    pub fn z_scores(&self, expected: &SdfMoments) -> (f64, f64) {
        let z = |got: f64, want: f64, se: f64| {
            let diff = (got - want).abs();
            if se > 0.0 {
                diff / se
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        };
        (
            z(self.moments.e_s, expected.e_s, self.stderr_s),
            z(self.moments.e_s2, expected.e_s2, self.stderr_s2),
        )
    }
}

/// Running mean/variance (Welford) that merges exactly in a fixed order.
#[derive(Debug, Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Welford) -> Welford {
        if o.n == 0.0 {
            return self;
        }
        if self.n == 0.0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

const MC_CHUNK: usize = 1 << 16;

/// Minimum sample count accepted by [`moments_monte_carlo`].
pub const MC_MIN_SAMPLES: usize = 1000;

/// Estimates `E[s]` and `E[s²]` of `field` over the frustum by direct
/// volume sampling.
///
/// Work is split into fixed chunks, each with its own ChaCha stream derived
/// from `seed`, and merged in chunk order, so the result is reproducible and
/// independent of the thread count. Samples that fall outside the open
/// frustum through rounding are rejected; if fewer than one in a million
/// survive the frustum is reported degenerate.
pub fn moments_monte_carlo<F>(
    f: &ConicalFrustum,
    field: F,
    n_samples: usize,
    seed: u64,
) -> Result<MonteCarloMoments>
where
    F: Fn(Vec3) -> f64 + Sync + Send,
{
    if n_samples < MC_MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MC_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let chunks = n_samples.div_ceil(MC_CHUNK);
    let partial = par::map_range(chunks, |c| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(c as u64);
        let count = MC_CHUNK.min(n_samples - c * MC_CHUNK);
        let mut acc_s = Welford::default();
        let mut acc_s2 = Welford::default();
        for _ in 0..count {
            let x = f.sample(rng.gen(), rng.gen(), rng.gen());
            if !f.contains(x) {
                continue;
            }
            let s = field(x);
            acc_s.push(s);
            acc_s2.push(s * s);
        }
        (acc_s, acc_s2)
    });
    let (acc_s, acc_s2) = partial.into_iter().fold(
        (Welford::default(), Welford::default()),
        |(a, b), (c, d)| (a.merge(c), b.merge(d)),
    );
    let rate = acc_s.n / n_samples as f64;
    if rate < 1e-6 || acc_s.n < 2.0 {
        return Err(Error::DegenerateFrustum { rate });
    }
    Ok(MonteCarloMoments {
        moments: SdfMoments {
            e_s: acc_s.mean,
            e_s2: acc_s2.mean,
        },
        stderr_s: acc_s.stderr(),
        stderr_s2: acc_s2.stderr(),
        samples: acc_s.n as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn frustum(t: f64, h: f64, r: f64) -> ConicalFrustum {
        ConicalFrustum::new(Vec3::ZERO, Vec3::Z, r, t, h).unwrap()
    }

    #[test]
    fn constructor_rejects_bad_shapes() {
        assert!(matches!(
            ConicalFrustum::new(Vec3::ZERO, Vec3::Z, 0.1, 1.0, 1.0),
            Err(Error::InvalidFrustum(_))
        ));
        assert!(ConicalFrustum::new(Vec3::ZERO, Vec3::Z, 0.1, 1.0, 0.0).is_err());
        assert!(ConicalFrustum::new(Vec3::ZERO, Vec3::ZERO, 0.1, 1.0, 0.1).is_err());
        assert!(ConicalFrustum::new(Vec3::ZERO, Vec3::Z, 0.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn containment_examples() {
        let o = Vec3::new(0.3, -0.2, 1.0);
        let d = Vec3::new(1.0, 2.0, -0.5).normalize();
        let (t, h, r) = (2.0, 0.2, 0.1);
        let f = ConicalFrustum::new(o, d, r, t, h).unwrap();
        assert!(f.contains(o + d * t));
        assert!(!f.contains(o + d * (t + 2.0 * h)));
        let (u, _) = d.orthonormal_basis();
        assert!(!f.contains(o + d * t + u * (1.01 * r)));
        assert!(f.contains(o + d * t + u * (0.99 * r)));
    }

    #[test]
    fn sampled_points_lie_inside() {
        let f = frustum(1.5, 0.4, 0.3);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            assert!(f.contains(f.sample(rng.gen(), rng.gen(), rng.gen())));
        }
    }

    #[test]
    fn uniform_field_examples() {
        let xc = Vec3::new(1.0, 2.0, 3.0);
        let u = UniformField::new(0.7, Vec3::Z).unwrap();
        assert_eq!(u.value(xc, xc), 0.7);
        let u0 = UniformField::new(0.0, Vec3::Z).unwrap();
        assert_eq!(u0.value(xc, xc + Vec3::new(0.0, 0.0, 2.0)), 2.0);
        let u1 = UniformField::new(1.0, Vec3::Z).unwrap();
        assert_eq!(u1.value(xc, xc + Vec3::new(3.0, 4.0, 0.0)), 1.0);
    }

    #[test]
    fn reference_configuration() {
        // t = 2, h = 0.1, n_z = 1: E[a] = 2·2·0.01 / 12.01; values from
        // independent triple quadrature of the frustum integrals.
        let f = frustum(2.0, 0.1, 0.05);
        let u = UniformField::new(0.5, Vec3::Z).unwrap();
        let m = moments_closed_form(&f, &u);
        assert!((m.e_s - 0.503_330_557_868_443).abs() < 1e-15);
        assert!((m.e_s2 - 0.256_666_111_573_689).abs() < 1e-14);
        // Oblique gradients with a radial term.
        let f = frustum(1.3, 0.4, 0.3);
        let u = UniformField::new(-0.2, Vec3::new(0.6, 0.0, 0.8)).unwrap();
        let m = moments_closed_form(&f, &u);
        assert!((m.e_s + 0.136_367_112_810_707_4).abs() < 1e-14);
        assert!((m.e_s2 - 0.058_868_646_067_860_64).abs() < 1e-14);
        let f = frustum(3.0, 1.2, 0.9);
        let u = UniformField::new(0.1, Vec3::new(0.48, 0.6, 0.64)).unwrap();
        let m = moments_closed_form(&f, &u);
        assert!((m.e_s - 0.294_430_379_746_835_4).abs() < 1e-14);
        assert!((m.e_s2 - 0.403_862_419_037_974_7).abs() < 1e-14);
    }

    #[test]
    fn degenerate_slab_limit() {
        let f = frustum(2.0, 1e-9, 1e-9);
        let u = UniformField::new(0.3, Vec3::new(0.6, 0.0, 0.8)).unwrap();
        let m = moments_closed_form(&f, &u);
        assert!((m.e_s - 0.3).abs() < 1e-15);
        assert!((m.e_s2 - 0.09).abs() < 1e-15);
    }

    #[test]
    fn perpendicular_gradient_leaves_mean() {
        let f = frustum(2.0, 0.3, 0.2);
        let u = UniformField::new(0.4, Vec3::X).unwrap();
        let m = moments_closed_form(&f, &u);
        assert_eq!(m.e_s, 0.4);
        assert!(m.variance() > 0.0);
    }

    #[test]
    fn quadratic_expansion() {
        let m = SdfMoments::point(0.4);
        assert!(m.expected_quadratic(0.4).abs() < 1e-16);
        let f = frustum(2.0, 0.1, 0.05);
        let u = UniformField::new(0.5, Vec3::Z).unwrap();
        let m = moments_closed_form(&f, &u);
        assert_eq!(expected_quadratic(&m, 0.0), m.e_s2);
        let q = expected_quadratic(&m, 0.25);
        assert!((q - (m.e_s2 - 0.5 * m.e_s + 0.0625)).abs() < 1e-15);
        // = Var + (E[s] - μ)².
        assert!((q - (m.variance() + (m.e_s - 0.25).powi(2))).abs() < 1e-14);
    }

    #[test]
    fn printed_forms_differ_from_derived() {
        let f = frustum(2.0, 0.1, 0.05);
        let u = UniformField::new(0.5, Vec3::Z).unwrap();
        let p = moments_printed(&f, &u);
        let d = moments_closed_form(&f, &u);
        // Published correction 2ht/D is 1/h times the derived one.
        assert!(((p.e_s - 0.5) * 0.1 - (d.e_s - 0.5)).abs() < 1e-15);
        let ps = moments_printed_simplified(&f, &u);
        assert!((ps.e_s - (0.5 + 0.2 / 6.0)).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_constant_field() {
        let f = frustum(1.0, 0.2, 0.1);
        let mc = moments_monte_carlo(&f, |_| 0.75, 5000, 3).unwrap();
        assert_eq!(mc.moments.e_s, 0.75);
        assert_eq!(mc.moments.e_s2, 0.5625);
        assert_eq!(mc.stderr_s, 0.0);
    }

    #[test]
    fn monte_carlo_is_seeded() {
        let f = frustum(1.0, 0.2, 0.1);
        let field = |x: Vec3| x.norm();
        let a = moments_monte_carlo(&f, field, 200_000, 11).unwrap();
        let b = moments_monte_carlo(&f, field, 200_000, 11).unwrap();
        let c = moments_monte_carlo(&f, field, 200_000, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.moments.e_s, c.moments.e_s);
        assert!(matches!(
            moments_monte_carlo(&f, field, 999, 1),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let f = ConicalFrustum::new(
            Vec3::new(0.1, 0.2, -0.3),
            Vec3::new(0.3, -1.0, 0.2),
            0.4,
            1.2,
            0.35,
        )
        .unwrap();
        let u = UniformField::new(0.2, Vec3::new(0.5, 0.5, -0.7)).unwrap();
        let xc = f.center();
        let mc = moments_monte_carlo(&f, |x| u.value(xc, x), 1_000_000, 5).unwrap();
        let (zs, zs2) = mc.z_scores(&moments_closed_form(&f, &u));
        assert!(zs < 4.0 && zs2 < 4.0, "z = {zs}, {zs2}");
    }

    /// Moments of |x| over a frustum far from the origin, by nested
    /// Gauss-Legendre quadrature in (depth, radius, angle).
    fn norm_moments_quadrature(f: &ConicalFrustum, p: Vec3) -> (f64, f64) {
        // 32-point rule via Newton iteration on Legendre polynomials.
        fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
                for _ in 0..100 {
                    let (mut p0, mut p1) = (1.0, x);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                    let dx = p1 / dp;
                    x -= dx;
                    if dx.abs() < 1e-16 {
                        break;
                    }
                }
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
            }
            out
        }
        let gl = gauss_legendre(32);
        let (t, h, r) = (f.t(), f.half_height(), f.radius());
        let (u, v) = f.direction().orthonormal_basis();
        let (mut w_sum, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &(xa, wa) in &gl {
            let z = t + h * xa;
            let rmax = r * z / t;
            for &(xr, wr) in &gl {
                let rho = 0.5 * rmax * (xr + 1.0);
                for &(xt, wt) in &gl {
                    let th = std::f64::consts::PI * (xt + 1.0);
                    let x = f.origin() + f.direction() * z + (u * th.cos() + v * th.sin()) * rho;
                    let w = wa * h * wr * 0.5 * rmax * wt * std::f64::consts::PI * rho;
                    let s = (x - p).norm();
                    w_sum += w;
                    s1 += w * s;
                    s2 += w * s * s;
                }
            }
        }
        (s1 / w_sum, s2 / w_sum)
    }

    #[test]
    fn monte_carlo_matches_quadrature_for_nonlinear_field() {
        let f = ConicalFrustum::new(Vec3::new(3.0, 1.0, 0.0), Vec3::Y, 0.3, 1.0, 0.25).unwrap();
        let p = Vec3::ZERO;
        let (q1, q2) = norm_moments_quadrature(&f, p);
        assert!((f.volume() > 0.0));
        let mc = moments_monte_carlo(&f, |x| (x - p).norm(), 1_000_000, 9).unwrap();
        let (z1, z2) = mc.z_scores(&SdfMoments { e_s: q1, e_s2: q2 });
        assert!(z1 < 4.0 && z2 < 4.0, "z = {z1}, {z2}");
    }

    proptest! {
        #[test]
        fn variance_is_non_negative(
            t in 0.1..10.0f64, hf in 0.001..0.999f64, rf in 0.001..2.0f64,
            s_c in -3.0..3.0f64, nx in -1.0..1.0f64, ny in -1.0..1.0f64, nz in -1.0..1.0f64,
        ) {
            prop_assume!(nx * nx + ny * ny + nz * nz > 1e-3);
            let f = frustum(t, hf * t, rf * t);
            let u = UniformField::new(s_c, Vec3::new(nx, ny, nz)).unwrap();
            let m = moments_closed_form(&f, &u);
            prop_assert!(m.variance() >= -1e-9 * t * t);
        }

        #[test]
        fn mean_is_linear_in_center_value(
            t in 0.5..5.0f64, hf in 0.01..0.5f64, s_c in -2.0..2.0f64, delta in -2.0..2.0f64,
            nx in -1.0..1.0f64, nz in -1.0..1.0f64,
        ) {
            prop_assume!(nx * nx + nz * nz > 1e-3);
            let f = frustum(t, hf * t, 0.1 * t);
            let n = Vec3::new(nx, 0.3, nz);
            let a = moments_closed_form(&f, &UniformField::new(s_c, n).unwrap());
            let b = moments_closed_form(&f, &UniformField::new(s_c + delta, n).unwrap());
            prop_assert!((b.e_s - (a.e_s + delta)).abs() < 1e-12);
            let flipped = moments_closed_form(&f, &UniformField::new(s_c, -n).unwrap());
            prop_assert!(((flipped.e_s - s_c) + (a.e_s - s_c)).abs() < 1e-14);
        }
    }
}
