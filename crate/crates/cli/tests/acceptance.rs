//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Run with `cargo test -p layered-sdf-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use layered_sdf::density::{fit_density_1d, DensityModel, GaussianMixture};
use layered_sdf::io::parse_scene;
use layered_sdf::meshing::marching_cubes;
use layered_sdf::metrics::{
    chamfer_single, eikonal_residual, psnr, specularity_penalty, PointMetric,
};
use layered_sdf::rendering::{
    render_image, Camera, Image, RenderConfig, RenderOutcome, Rgb, Shader,
};
use layered_sdf::sampling::{
    adaptive_sample, composite_segment, segmented_transmittance, RayInterval,
};
use layered_sdf::tracing::{clip_to_bounds, sphere_trace, TraceConfig};
use layered_sdf::{Aabb, Ray, SdfNode, TwoLayerScene, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn lsdf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lsdf"))
}

fn reference_scene() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenes/reference.json")
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

// Largest |weight_sum + t_end - 1| over every ray rendered by this suite.
struct Partition {
    worst: f64,
    rays: usize,
}

impl Partition {
    fn record(&mut self, outcomes: &[RenderOutcome]) {
        for o in outcomes {
            self.worst = self.worst.max((o.weight_sum + o.t_end - 1.0).abs());
        }
        self.rays += outcomes.len();
    }
}

fn frustum_moments() -> Verdict {
    let start = Instant::now();
    let out = lsdf()
        .args([
            "mc-check",
            "--trials",
            "100",
            "--samples",
            "1e6",
            "--seed",
            "2024",
        ])
        .output()
        .expect("run lsdf");
    let elapsed = start.elapsed();
    let stdout = String::from_utf8_lossy(&out.stdout);
    let Some(summary) = stdout
        .lines()
        .filter_map(|l| serde_json::from_str::<serde_json::Value>(l).ok())
        .find_map(|v| v.get("summary").cloned())
    else {
        return verdict(
            false,
            format!(
                "no summary line; stderr: {}",
                String::from_utf8_lossy(&out.stderr)
            ),
        );
    };
    let pass = out.status.success()
        && summary["derived_failures"] == 0
        && summary["trials"] == 100
        && elapsed < Duration::from_secs(120);
    verdict(
        pass,
        format!(
            "derived max|z| = {:.3}, printed max|z| = {:.1} ({} of 100 printed trials beyond 4 sigma), {:.1}s",
            summary["derived_max_abs_z"].as_f64().unwrap_or(f64::NAN),
            summary["printed_max_abs_z"].as_f64().unwrap_or(f64::NAN),
            summary["printed_failures"],
            elapsed.as_secs_f64()
        ),
    )
}

/// Marches `[t0, t1]` at spacing `dt`, skipping ahead by the field value
/// where it is larger. Skipped stretches cannot contain a sign change for a
/// 1-Lipschitz field, so the first negative sample matches a plain dense
/// march at `dt`. Returns the first sample depth with a negative value.
fn certified_march(field: &SdfNode, ray: &Ray, t0: f64, t1: f64, dt: f64) -> Option<f64> {
    let mut t = t0;
    while t <= t1 {
        let d = field.eval(ray.at(t));
        if d < 0.0 {
            return Some(t);
        }
        t += d.max(dt);
    }
    None
}

fn tracing_oracle() -> Verdict {
    let start = Instant::now();
    let v = Vec3::new;
    let scenes = [
        ("sphere", SdfNode::sphere(v(0.1, -0.1, 0.0), 0.6)),
        (
            "rounded box",
            SdfNode::Box {
                center: v(0.0, 0.0, 0.0),
                half_extents: v(0.6, 0.3, 0.45),
                rounding: 0.05,
            },
        ),
        (
            "torus",
            SdfNode::Torus {
                center: v(0.0, 0.0, 0.0),
                major: 0.55,
                minor: 0.15,
            },
        ),
        (
            "sphere minus box",
            SdfNode::sphere(v(0.0, 0.0, 0.0), 0.7)
                .subtract(SdfNode::cuboid(v(0.4, 0.4, -0.4), v(0.4, 0.4, 0.4))),
        ),
        (
            "capsules and floor",
            SdfNode::Union(vec![
                SdfNode::Capsule {
                    a: v(-0.5, -0.2, 0.0),
                    b: v(0.5, 0.3, 0.1),
                    radius: 0.12,
                },
                SdfNode::Capsule {
                    a: v(0.0, -0.5, -0.4),
                    b: v(0.1, 0.5, 0.3),
                    radius: 0.08,
                },
                SdfNode::plane(v(0.0, 1.0, 0.0), -0.6),
            ]),
        ),
    ];
    let cfg = TraceConfig::default();
    let eps = cfg.convergence_eps;
    let bounds = Aabb::cube(Vec3::ZERO, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut hits, mut bad) = (0, Vec::new());
    for (name, node) in &scenes {
        for _ in 0..1000 {
            let origin = unit_vector(&mut rng) * 3.0;
            let target = Vec3::new(
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-0.9..0.9),
                rng.gen_range(-0.9..0.9),
            );
            let ray = Ray::new(origin, target - origin);
            let Some((t0, t1)) = clip_to_bounds(&ray, &bounds) else {
                continue;
            };
            let r = sphere_trace(node, &ray, (t0, t1), &cfg);
            if !r.hit {
                continue;
            }
            hits += 1;
            match certified_march(node, &ray, t0, t1, eps / 10.0) {
                Some(t) if (t - r.t).abs() <= 10.0 * eps => {}
                other => bad.push(format!(
                    "{name}: traced {} ({:?}, {} steps) vs march {other:?}; ray {:?}",
                    r.t, r.method, r.steps_used, ray
                )),
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = bad.is_empty() && elapsed < Duration::from_secs(60);
    let mut detail = format!(
        "{hits} hits over 5 scenes x 1000 rays, {} disagreements, {:.1}s",
        bad.len(),
        elapsed.as_secs_f64()
    );
    for b in &bad {
        detail += &format!("; {b}");
    }
    verdict(pass, detail)
}

fn quadrature(partition: &Partition) -> Verdict {
    let iv = [RayInterval::new(0, 0.0, 1.0)];
    let batch = adaptive_sample(&iv, 256).expect("sample");
    let c = Rgb::new(0.8, 0.5, 0.2);
    let n = batch.total_samples();
    let seg = &segmented_transmittance(&batch, &vec![2.0; n], &vec![c; n]).expect("composite")[0];
    let t_expect = (-2.0_f64).exp();
    let c_err = (seg.color - c * (1.0 - t_expect)).max_abs();
    let t_err = (seg.t_end - t_expect).abs();
    // Direct per-segment call as a second path through the same identity.
    let direct = composite_segment(&vec![2.0; n], &batch.deltas, &vec![c; n]);
    let unity = (seg.weight_sum + seg.t_end - 1.0)
        .abs()
        .max((direct.weight_sum + direct.t_end - 1.0).abs());
    let worst = unity.max(partition.worst);
    let pass = n == 256 && c_err <= 1e-4 && t_err <= 1e-6 && worst <= 1e-12 && partition.rays > 0;
    verdict(
        pass,
        format!(
            "n = {n}, |C - (1-e^-2)c| = {c_err:.2e}, |T - e^-2| = {t_err:.2e}, partition of unity {worst:.2e} over {} rendered rays",
            partition.rays
        ),
    )
}

fn case_scene(hard: SdfNode, soft: Option<SdfNode>) -> TwoLayerScene {
    TwoLayerScene {
        hard,
        soft,
        shader_hard: Shader::lambertian(Rgb::new(0.9, 0.6, 0.3), Vec3::new(0.3, 0.6, -1.0), 0.1),
        shader_soft: Shader::flat(Rgb::new(0.2, 0.4, 0.9)),
        density: DensityModel::GaussianMixture(GaussianMixture::single(20.0, -0.1, 0.15)),
        bounds: Aabb::cube(Vec3::ZERO, 1.0),
        background: Rgb::new(0.05, 0.05, 0.1),
    }
}

fn test_camera(w: usize, h: usize) -> Camera {
    Camera::look_at(Vec3::new(0.0, 0.0, -3.0), Vec3::ZERO, Vec3::Y, 0.7, w, h).expect("camera")
}

fn distance_to_origin(ray: &Ray) -> f64 {
    ray.at(-ray.origin.dot(ray.direction)).norm()
}

/// Name, scene, analytic case for a ray at distance `d` from the origin,
/// and the silhouette radii.
type CaseScene = (&'static str, TwoLayerScene, fn(f64) -> u8, &'static [f64]);

fn case_table(partition: &mut Partition) -> Verdict {
    let far = SdfNode::sphere(Vec3::new(5.0, 5.0, 5.0), 0.1);
    let hard = SdfNode::sphere(Vec3::ZERO, 0.5);
    let cases: [CaseScene; 4] = [
        ("empty", case_scene(far.clone(), None), |_| 1, &[]),
        (
            "hard-only",
            case_scene(hard.clone(), None),
            |d| if d < 0.5 { 2 } else { 1 },
            &[0.5],
        ),
        (
            "soft-shell-only",
            case_scene(far, Some(SdfNode::sphere(Vec3::ZERO, 0.6).shell(0.1))),
            |d| if d < 0.7 { 3 } else { 1 },
            &[0.7],
        ),
        (
            "nested",
            case_scene(hard, Some(SdfNode::sphere(Vec3::ZERO, 0.8))),
            |d| {
                if d < 0.5 {
                    4
                } else if d < 0.8 {
                    3
                } else {
                    1
                }
            },
            &[0.5, 0.8],
        ),
    ];
    let (w, h) = (64, 48);
    let cam = test_camera(w, h);
    let mut diffs = Vec::new();
    let mut margin = f64::INFINITY;
    for (name, scene, oracle, edges) in &cases {
        let out = render_image(scene, &cam, &RenderConfig::default()).expect("render");
        partition.record(&out.outcomes);
        let mut diff = 0;
        for j in 0..h {
            for i in 0..w {
                let d = distance_to_origin(&cam.pixel_center_ray(i, j).0);
                for e in *edges {
                    margin = margin.min((d - e).abs());
                }
                diff += usize::from(out.cases[j * w + i] != oracle(d));
            }
        }
        diffs.push(format!("{name} {diff}"));
    }
    let pass = diffs.iter().all(|s| s.ends_with(" 0"));
    verdict(
        pass,
        format!(
            "differing pixels: {}; closest pixel ray to a silhouette {margin:.1e}",
            diffs.join(", ")
        ),
    )
}

fn sampler() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut over, mut ratio_bad, mut unclamped, mut worst_ratio) = (0, 0, 0, 1.0_f64);
    for _ in 0..1000 {
        let m = rng.gen_range(1..64);
        let intervals: Vec<_> = (0..m)
            .map(|i| {
                let a = rng.gen_range(0.0..5.0);
                let len = 10f64.powf(rng.gen_range(-2.0..0.5));
                RayInterval::new(i, a, a + len)
            })
            .collect();
        let n = rng.gen_range(m..m * 2000);
        let b = adaptive_sample(&intervals, n).expect("sample");
        over += usize::from(b.total_samples() > n + m);
        if !b.clamped {
            unclamped += 1;
            let counts = b.counts();
            let spacing: Vec<f64> = intervals
                .iter()
                .zip(&counts)
                .map(|(iv, &c)| iv.length() / c as f64)
                .collect();
            let hi = spacing.iter().cloned().fold(0.0, f64::max);
            let lo = spacing.iter().cloned().fold(f64::INFINITY, f64::min);
            worst_ratio = worst_ratio.max(hi / lo);
            ratio_bad += usize::from(hi / lo > 2.0 + 1e-9);
        }
    }
    verdict(
        over == 0 && ratio_bad == 0 && unclamped > 0,
        format!("budget exceeded {over} times; {unclamped} unclamped trials, worst spacing ratio {worst_ratio:.4}"),
    )
}

fn integrated_consistency(partition: &mut Partition) -> Verdict {
    let scene = case_scene(
        SdfNode::sphere(Vec3::ZERO, 0.5),
        Some(SdfNode::sphere(Vec3::ZERO, 0.8)),
    );
    let cam = test_camera(48, 48);
    let collapsed = RenderConfig {
        frustum_half_height: Some(1e-9),
        cone_radius_unit: Some(1e-9),
        ..RenderConfig::default()
    };
    let point = RenderConfig {
        integrated_sdf: false,
        ..collapsed.clone()
    };
    let a = render_image(&scene, &cam, &collapsed).expect("render");
    let b = render_image(&scene, &cam, &point).expect("render");
    partition.record(&a.outcomes);
    partition.record(&b.outcomes);
    let worst = max_diff(&a.image, &b.image);
    // Half-height alone, pixel-sized cone radius kept.
    let h_only = RenderConfig {
        cone_radius_unit: None,
        ..collapsed
    };
    let c = render_image(&scene, &cam, &h_only).expect("render");
    let h_only_diff = max_diff(&c.image, &b.image);
    verdict(
        worst <= 1e-9,
        format!("max channel diff {worst:.2e} with h = r = 1e-9 (h alone, pixel cone kept: {h_only_diff:.2e})"),
    )
}

fn max_diff(a: &Image, b: &Image) -> f64 {
    a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (*x - *y).max_abs())
        .fold(0.0, f64::max)
}

fn meshing_metrics() -> Verdict {
    let sphere = SdfNode::sphere(Vec3::ZERO, 1.0);
    let bounds = Aabb::cube(Vec3::ZERO, 1.25);
    let res = 64;
    let spacing = 2.5 / (res - 1) as f64;
    let mesh = marching_cubes(&sphere, &bounds, res, 0.0).expect("mesh");
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let reference: Vec<Vec3> = (0..10_000).map(|_| unit_vector(&mut rng)).collect();
    let cd = chamfer_single(&reference, &mesh.vertices, PointMetric::Euclidean).expect("chamfer");

    let img = |v: f64| Image::new(8, 6, Rgb::gray(v)).expect("image");
    let p20 = psnr(&img(0.5), &img(0.6), 1.0).expect("psnr");
    let p40 = psnr(&img(0.5), &img(0.51), 1.0).expect("psnr");
    let psnr_err = (p20 - 20.0).abs().max((p40 - 40.0).abs());

    let eik = eikonal_residual(&sphere, &bounds, 10_000, 9, 1e-4).expect("eikonal");
    let pass = cd < 2.0 * spacing && psnr_err <= 1e-9 && eik.mean < 1e-6;
    verdict(
        pass,
        format!(
            "CD* {cd:.2e} vs 2h = {:.2e}; PSNR error {psnr_err:.1e}; eikonal mean {:.1e} (max {:.1e})",
            2.0 * spacing,
            eik.mean,
            eik.max
        ),
    )
}

fn density_fit() -> Verdict {
    let truth = GaussianMixture::single(8.0, 0.1, 0.12);
    let samples: Vec<_> = (0..64)
        .map(|i| {
            let s = -0.5 + i as f64 / 63.0;
            (s, truth.point(s))
        })
        .collect();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    let best = (0..3)
        .map(|seed| {
            let c = fit_density_1d(&samples, 1, 3000, seed)
                .expect("fit")
                .model
                .components[0];
            rel(c.alpha, 8.0).max(rel(c.mu, 0.1)).max(rel(c.beta, 0.12))
        })
        .fold(f64::INFINITY, f64::min);

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let shader = Shader::lambertian(Rgb::new(0.7, 0.5, 0.3), Vec3::new(0.2, 1.0, -0.3), 0.1);
    let spec = (0..200)
        .map(|_| {
            let n = unit_vector(&mut rng);
            let d = unit_vector(&mut rng);
            specularity_penalty(&shader, unit_vector(&mut rng), n, d, 1e-4)
        })
        .fold(0.0, f64::max);
    verdict(
        best < 0.05 && spec <= 1e-8,
        format!(
            "K=1 best relative parameter error {best:.2e}; Lambertian specularity max {spec:.1e}"
        ),
    )
}

fn render_bytes(dir: &Path, name: &str, threads: usize) -> Result<Vec<u8>, String> {
    let out = dir.join(name);
    let status = lsdf()
        .arg("--threads")
        .arg(threads.to_string())
        .arg("render")
        .arg(reference_scene())
        .arg("--out")
        .arg(&out)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(String::from_utf8_lossy(&status.stderr).into_owned());
    }
    std::fs::read(&out).map_err(|e| e.to_string())
}

fn determinism(partition: &mut Partition) -> Verdict {
    let dir = tempfile::tempdir().expect("tempdir");
    let runs: Result<Vec<_>, _> = [("a.pfm", 1), ("b.pfm", 1), ("c.pfm", 8), ("d.pfm", 8)]
        .iter()
        .map(|(n, t)| render_bytes(dir.path(), n, *t))
        .collect();
    let runs = match runs {
        Ok(r) => r,
        Err(e) => return verdict(false, format!("render failed: {e}")),
    };
    let file = parse_scene(&std::fs::read_to_string(reference_scene()).unwrap()).unwrap();
    let out = render_image(
        &file.scene,
        &file.camera(0).unwrap(),
        &file.render.to_config(),
    )
    .unwrap();
    partition.record(&out.outcomes);
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    verdict(
        same && !runs[0].is_empty(),
        format!(
            "4 renders ({} bytes each), threads 1 and 8: {}",
            runs[0].len(),
            if same { "identical" } else { "differ" }
        ),
    )
}

fn main() {
    let mut partition = Partition {
        worst: 0.0,
        rays: 0,
    };
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    results.push((1, "frustum moments", frustum_moments()));
    results.push((2, "tracing oracle", tracing_oracle()));
    // Criterion 3 reads the partition-of-unity record of every rendering criterion.
    let c4 = case_table(&mut partition);
    results.push((4, "case table", c4));
    results.push((5, "adaptive sampler", sampler()));
    results.push((6, "integrated SDF", integrated_consistency(&mut partition)));
    results.push((7, "meshing and metrics", meshing_metrics()));
    results.push((8, "density fit", density_fit()));
    results.push((9, "determinism", determinism(&mut partition)));
    results.push((3, "quadrature", quadrature(&partition)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (id, name, v) in &results {
        println!(
            "{} criterion {id} ({name}): {}",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
        failed += usize::from(!v.pass);
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
