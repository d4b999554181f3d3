//! SDF-to-density mappings.
//!
//! The main model is a Gaussian mixture over the signed distance,
//! `σ(s) = Σ α_k exp(-(s - μ_k)² / β_k²)`, which can also be evaluated on
//! frustum moments by replacing the squared residual with its expectation.
//! Laplace and Gaussian kernels, `σ = A·Ψ_β(-s)` with `Ψ_β` the density
//! (derivative of the CDF) of the respective distribution, are provided as
//! references.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frustum::SdfMoments;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianComponent {
    /// Peak density.
    pub alpha: f64,
    /// Centre, in distance units.
    pub mu: f64,
    /// Width, in distance units.
    pub beta: f64,
}

impl GaussianComponent {
    fn eval_residual(&self, sq: f64) -> f64 {
        self.alpha * (-sq.max(0.0) / (self.beta * self.beta)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMixture {
    pub components: Vec<GaussianComponent>,
}

impl GaussianMixture {
    pub fn new(components: Vec<GaussianComponent>) -> Result<Self> {
        let m = GaussianMixture { components };
        m.validate_at("$")?;
        Ok(m)
    }

    /// One component; panics on invalid parameters.
    pub fn single(alpha: f64, mu: f64, beta: f64) -> Self {
        GaussianMixture::new(vec![GaussianComponent { alpha, mu, beta }])
            .expect("invalid Gaussian component")
    }

    pub fn validate_at(&self, path: &str) -> Result<()> {
        if self.components.is_empty() {
            return Err(Error::validation(
                format!("{path}.components"),
                "at least one component",
            ));
        }
        for (i, c) in self.components.iter().enumerate() {
            if !(c.alpha > 0.0 && c.alpha.is_finite()) {
                return Err(Error::validation(
                    format!("{path}.components[{i}].alpha"),
                    "alpha > 0",
                ));
            }
            if !c.mu.is_finite() {
                return Err(Error::validation(
                    format!("{path}.components[{i}].mu"),
                    "finite",
                ));
            }
            if !(c.beta > 0.0 && c.beta.is_finite()) {
                return Err(Error::validation(
                    format!("{path}.components[{i}].beta"),
                    "beta > 0",
                ));
            }
        }
        Ok(())
    }

    pub fn point(&self, s: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.eval_residual((s - c.mu) * (s - c.mu)))
            .sum()
    }

    /// Density with each squared residual replaced by `E[(s - μ_k)²]`.
    pub fn integrated(&self, m: &SdfMoments) -> f64 {
        self.components
            .iter()
            .map(|c| c.eval_residual(m.expected_quadratic(c.mu)))
            .sum()
    }
}

/// `σ(s) = A / (2β) · exp(-|s| / β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaplaceDensity {
    pub amplitude: f64,
    pub beta: f64,
}

impl LaplaceDensity {
    pub fn point(&self, s: f64) -> f64 {
        let u = -s;
        self.amplitude / (2.0 * self.beta) * (-u.abs() / self.beta).exp()
    }
}

/// `σ(s) = A / (β√(2π)) · exp(-s² / (2β²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianCdfDensity {
    pub amplitude: f64,
    pub beta: f64,
}

impl GaussianCdfDensity {
    pub fn point(&self, s: f64) -> f64 {
        let u = -s;
        let norm = self.beta * (2.0 * std::f64::consts::PI).sqrt();
        self.amplitude / norm * (-(u * u) / (2.0 * self.beta * self.beta)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityModel {
    GaussianMixture(GaussianMixture),
    Laplace(LaplaceDensity),
    GaussianCdf(GaussianCdfDensity),
}

/// Three components centred just inside, on and just outside the surface.
impl Default for DensityModel {
    fn default() -> Self {
        DensityModel::GaussianMixture(GaussianMixture {
            components: vec![
                GaussianComponent {
                    alpha: 20.0,
                    mu: -0.05,
                    beta: 0.05,
                },
                GaussianComponent {
                    alpha: 10.0,
                    mu: 0.0,
                    beta: 0.1,
                },
                GaussianComponent {
                    alpha: 5.0,
                    mu: 0.05,
                    beta: 0.2,
                },
            ],
        })
    }
}

impl DensityModel {
    /// Point density at signed distance `s`.
    pub fn point(&self, s: f64) -> f64 {
        match self {
            DensityModel::GaussianMixture(g) => g.point(s),
            DensityModel::Laplace(l) => l.point(s),
            DensityModel::GaussianCdf(g) => g.point(s),
        }
    }

    /// Density from frustum moments. The mixture uses both moments; the
    /// single-kernel models are applied to `E[s]`.
    pub fn integrated(&self, m: &SdfMoments) -> f64 {
        match self {
            DensityModel::GaussianMixture(g) => g.integrated(m),
            _ => density_integrated_generic(self, m.e_s),
        }
    }

    pub fn validate_at(&self, path: &str) -> Result<()> {
        let check = |a: f64, b: f64, tag: &str| {
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::validation(
                    format!("{path}.{tag}.amplitude"),
                    "amplitude > 0",
                ));
            }
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::validation(format!("{path}.{tag}.beta"), "beta > 0"));
            }
            Ok(())
        };
        match self {
            DensityModel::GaussianMixture(g) => g.validate_at(&format!("{path}.gaussian_mixture")),
            DensityModel::Laplace(l) => check(l.amplitude, l.beta, "laplace"),
            DensityModel::GaussianCdf(g) => check(g.amplitude, g.beta, "gaussian_cdf"),
        }
    }
}

/// Applies a single-kernel model to an expected SDF value.
pub fn density_integrated_generic(model: &DensityModel, e_s: f64) -> f64 {
    model.point(e_s)
}

/// Result of [`fit_density_1d`].
#[derive(Debug, Clone)]
pub struct DensityFit {
    pub model: GaussianMixture,
    /// Mean squared error after every accepted or rejected step.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

fn inv_softplus(y: f64) -> f64 {
    if y > 30.0 {
        y
    } else {
        y + (-(-y).exp_m1()).ln()
    }
}

/// Maps between mixture parameters and the optimizer's unconstrained
/// coordinates `[softplus⁻¹(α/a), (μ − s₀)/l, softplus⁻¹(β/l)]`, which are
/// all of order one for targets of amplitude `a` spread over `[s₀, s₀ + l]`.
#[derive(Debug, Clone, Copy)]
struct Coords {
    amp: f64,
    s0: f64,
    len: f64,
}

impl Coords {
    fn encode(&self, c: &GaussianComponent) -> [f64; 3] {
        [
            inv_softplus(c.alpha / self.amp),
            (c.mu - self.s0) / self.len,
            inv_softplus(c.beta / self.len),
        ]
    }

    fn decode(&self, theta: &[f64]) -> GaussianMixture {
        GaussianMixture {
            components: theta
                .chunks_exact(3)
                .map(|p| GaussianComponent {
                    alpha: self.amp * softplus(p[0]),
                    mu: self.s0 + self.len * p[1],
                    beta: (self.len * softplus(p[2])).max(1e-12),
                })
                .collect(),
        }
    }

    fn mse(&self, theta: &[f64], samples: &[(f64, f64)]) -> f64 {
        let m = self.decode(theta);
        samples
            .iter()
            .map(|&(s, y)| (m.point(s) - y).powi(2))
            .sum::<f64>()
            / samples.len() as f64
    }
}

/// Fits a `k`-component mixture to `(s, σ)` samples.
///
/// Plain gradient descent on the mean squared error with central
/// finite-difference gradients. Positive parameters are optimized through a
/// softplus. A step that increases the loss is rejected and the step size
/// halved; accepted steps grow it by 10%.
pub fn fit_density_1d(
    samples: &[(f64, f64)],
    k: usize,
    iters: usize,
    seed: u64,
) -> Result<DensityFit> {
    if samples.len() < 8 {
        return Err(Error::InvalidArgument(format!(
            "need at least 8 samples, got {}",
            samples.len()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("k must be >= 1".into()));
    }
    if samples
        .iter()
        .any(|(s, y)| !s.is_finite() || !y.is_finite())
    {
        return Err(Error::InvalidArgument("samples must be finite".into()));
    }
    let (s_min, s_max) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(s, _)| {
            (lo.min(s), hi.max(s))
        });
    let span = (s_max - s_min).max(1e-6);
    let peak = samples.iter().map(|&(_, y)| y.abs()).fold(0.0, f64::max);
    let coords = Coords {
        amp: peak.max(1e-3),
        s0: s_min,
        len: span,
    };
    // Loss is reported raw but optimized relative to the peak so step sizes
    // do not depend on the density scale.
    let norm = 1.0 / (coords.amp * coords.amp);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centres: Vec<f64> = (0..k).map(|_| s_min + span * rng.gen::<f64>()).collect();
    centres.sort_by(|a, b| a.total_cmp(b));
    let mut theta = Vec::with_capacity(3 * k);
    for mu in centres {
        let c = GaussianComponent {
            alpha: coords.amp * rng.gen_range(0.5..1.0),
            mu,
            beta: span / (2.0 * k as f64) * rng.gen_range(0.5..1.5),
        };
        theta.extend(coords.encode(&c));
    }

    let mut loss = coords.mse(&theta, samples);
    let mut curve = vec![loss];
    let mut lr = 0.05;
    let mut grad = vec![0.0; theta.len()];
    let mut probe = theta.clone();
    for it in 0..iters {
        for i in 0..theta.len() {
            let h = 1e-4 * theta[i].abs().max(1.0);
            probe[i] = theta[i] + h;
            let up = coords.mse(&probe, samples);
            probe[i] = theta[i] - h;
            let down = coords.mse(&probe, samples);
            probe[i] = theta[i];
            grad[i] = (up - down) / (2.0 * h) * norm;
        }
        for i in 0..theta.len() {
            probe[i] = theta[i] - lr * grad[i];
        }
        let next = coords.mse(&probe, samples);
        if !next.is_finite() {
            return Err(Error::NonFinite { iteration: it });
        }
        if next <= loss {
            theta.copy_from_slice(&probe);
            loss = next;
            lr *= 1.1;
        } else {
            probe.copy_from_slice(&theta);
            lr *= 0.5;
        }
        curve.push(loss);
        if lr < 1e-300 {
            break;
        }
    }
    Ok(DensityFit {
        model: coords.decode(&theta),
        loss_curve: curve,
        final_loss: loss,
    })
}
