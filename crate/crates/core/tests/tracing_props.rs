use layered_sdf::tracing::{sphere_trace, trace_second_crossing, TraceConfig};
use layered_sdf::{Ray, SdfNode, Vec3};
use proptest::prelude::*;

fn vec3(r: f64) -> impl Strategy<Value = Vec3> {
    (-r..r, -r..r, -r..r).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

/// Analytic entry and exit depths of a ray through a sphere.
fn ray_sphere(ray: &Ray, c: Vec3, r: f64) -> Option<(f64, f64)> {
    let oc = ray.origin - c;
    let b = oc.dot(ray.direction);
    let disc = b * b - (oc.norm_squared() - r * r);
    (disc > 0.0).then(|| (-b - disc.sqrt(), -b + disc.sqrt()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sphere_hits_match_the_quadratic(
        c in vec3(0.5),
        r in 0.05f64..0.6,
        origin in vec3(1.0).prop_map(|v| v + Vec3::new(0.0, 0.0, -4.0)),
        target in vec3(0.8),
    ) {
        let ray = Ray::new(origin, target - origin);
        let node = SdfNode::sphere(c, r);
        let cfg = TraceConfig::default();
        let hit = sphere_trace(&node, &ray, (0.0, 10.0), &cfg);
        match ray_sphere(&ray, c, r) {
            Some((t0, t1)) if t1 - t0 > 1e-3 => {
                prop_assert!(hit.hit);
                prop_assert!((hit.t - t0).abs() < 10.0 * cfg.convergence_eps, "{} vs {}", hit.t, t0);
                let exit = trace_second_crossing(&node, &ray, &cfg, hit.t, 10.0).unwrap();
                prop_assert!((exit.t - t1).abs() < 10.0 * cfg.convergence_eps);
                prop_assert!((hit.normal - (ray.at(t0) - c) / r).norm() < 1e-4);
            }
            None => prop_assert!(!hit.hit),
            // Near-tangent rays may go either way.
            _ => {}
        }
    }

    #[test]
    fn reported_hits_lie_on_the_surface(
        a in vec3(0.6),
        b in vec3(0.6),
        radius in 0.05f64..0.3,
        origin in vec3(1.0).prop_map(|v| v + Vec3::new(0.0, 0.0, -4.0)),
        target in vec3(0.6),
    ) {
        let node = SdfNode::Union(vec![
            SdfNode::Capsule { a, b, radius },
            SdfNode::Torus { center: Vec3::ZERO, major: 0.5, minor: 0.1 },
        ]);
        let ray = Ray::new(origin, target - origin);
        let hit = sphere_trace(&node, &ray, (0.0, 10.0), &TraceConfig::default());
        if hit.hit {
            prop_assert!(node.eval(hit.point).abs() < 1e-5);
        } else {
            prop_assert!(hit.min_sdf > -1e-9);
        }
    }
}
