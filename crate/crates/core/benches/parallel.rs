//! Sequential versus data-parallel throughput of the hot loops.
//!
//! With the `parallel` feature each workload runs inside a one-thread rayon
//! pool and inside a pool with every core; without it only the sequential
//! path is measured.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use layered_sdf::density::{DensityModel, GaussianMixture};
use layered_sdf::frustum::{moments_monte_carlo, ConicalFrustum, UniformField};
use layered_sdf::meshing::marching_cubes;
use layered_sdf::metrics::{chamfer_single, PointMetric};
use layered_sdf::rendering::{render_image, Camera, RenderConfig, Rgb, Shader};
use layered_sdf::{Aabb, SdfNode, TwoLayerScene, Vec3};
use std::hint::black_box;

fn scene() -> TwoLayerScene {
    TwoLayerScene {
        hard: SdfNode::Union(vec![
            SdfNode::sphere(Vec3::ZERO, 0.45),
            SdfNode::Torus {
                center: Vec3::new(0.0, -0.1, 0.0),
                major: 0.55,
                minor: 0.08,
            },
        ]),
        soft: Some(SdfNode::sphere(Vec3::ZERO, 0.75)),
        shader_hard: Shader::lambertian(Rgb::new(0.8, 0.7, 0.6), Vec3::new(0.3, 1.0, -0.5), 0.1),
        shader_soft: Shader::flat(Rgb::new(0.3, 0.6, 0.9)),
        density: DensityModel::GaussianMixture(GaussianMixture::single(6.0, -0.05, 0.1)),
        bounds: Aabb::cube(Vec3::ZERO, 1.0),
        background: Rgb::gray(0.05),
    }
}

/// Thread counts to compare: 1 and the machine's default.
fn pools() -> Vec<usize> {
    #[cfg(feature = "parallel")]
    {
        let all = rayon::current_num_threads();
        if all > 1 {
            return vec![1, all];
        }
    }
    vec![1]
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        f()
    }
}

fn label(threads: usize) -> String {
    if cfg!(feature = "parallel") {
        format!("rayon-{threads}")
    } else {
        "sequential".into()
    }
}

fn bench_render(c: &mut Criterion) {
    let s = scene();
    let cam =
        Camera::look_at(Vec3::new(1.0, 0.8, -2.5), Vec3::ZERO, Vec3::Y, 0.75, 96, 72).unwrap();
    let cfg = RenderConfig::default();
    let mut g = c.benchmark_group("render_96x72");
    g.sample_size(10);
    for t in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label(t)), &t, |b, &t| {
            b.iter(|| in_pool(t, || black_box(render_image(&s, &cam, &cfg).unwrap())))
        });
    }
    g.finish();
}

fn bench_monte_carlo(c: &mut Criterion) {
    let f = ConicalFrustum::new(Vec3::ZERO, Vec3::new(0.2, 0.1, 1.0), 0.05, 2.0, 0.3).unwrap();
    let u = UniformField::new(0.1, Vec3::new(0.0, 0.6, 0.8)).unwrap();
    let x_c = f.center();
    let mut g = c.benchmark_group("mc_moments_1e6");
    g.sample_size(10);
    for t in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label(t)), &t, |b, &t| {
            b.iter(|| {
                in_pool(t, || {
                    black_box(moments_monte_carlo(&f, |x| u.value(x_c, x), 1_000_000, 1).unwrap())
                })
            })
        });
    }
    g.finish();
}

fn bench_marching_cubes(c: &mut Criterion) {
    let s = scene();
    let mut g = c.benchmark_group("marching_cubes_64");
    g.sample_size(10);
    for t in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label(t)), &t, |b, &t| {
            b.iter(|| {
                in_pool(t, || {
                    black_box(marching_cubes(&s.hard, &s.bounds, 64, 0.0).unwrap())
                })
            })
        });
    }
    g.finish();
}

fn bench_chamfer(c: &mut Criterion) {
    let s = scene();
    let a = marching_cubes(&s.hard, &s.bounds, 64, 0.0)
        .unwrap()
        .vertices;
    let b_pts = marching_cubes(&s.soft.clone().unwrap(), &s.bounds, 64, 0.0)
        .unwrap()
        .vertices;
    let mut g = c.benchmark_group("chamfer_single");
    for t in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(label(t)), &t, |b, &t| {
            b.iter(|| {
                in_pool(t, || {
                    black_box(chamfer_single(&a, &b_pts, PointMetric::Euclidean).unwrap())
                })
            })
        });
    }
    g.finish();
}

criterion_group!(
    benches,
    bench_render,
    bench_monte_carlo,
    bench_marching_cubes,
    bench_chamfer
);
criterion_main!(benches);
