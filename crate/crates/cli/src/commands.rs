use std::fmt::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use layered_sdf::density::fit_density_1d;
use layered_sdf::frustum::{
    moments_closed_form, moments_monte_carlo, moments_printed, moments_printed_simplified,
    ConicalFrustum, SdfMoments, UniformField,
};
use layered_sdf::io::{self, SceneFile};
use layered_sdf::meshing::marching_cubes;
use layered_sdf::metrics::{chamfer_single, eikonal_residual, psnr, PointMetric};
use layered_sdf::rendering::render_image;
use layered_sdf::{par, SdfNode, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::{Cli, Command, EvalCommand, FitArgs, Layer, McCheckArgs, MeshArgs, RenderArgs};

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.threads {
        Some(0) => bail!(layered_sdf::Error::InvalidArgument(
            "--threads must be >= 1".into()
        )),
        Some(n) => with_threads(n, move || dispatch(cli.command)),
        None => dispatch(cli.command),
    }
}

#[cfg(feature = "parallel")]
fn with_threads<T: Send>(n: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn with_threads<T: Send>(_n: usize, f: impl FnOnce() -> T + Send) -> T {
    f()
}

fn dispatch(cmd: Command) -> Result<ExitCode> {
    match cmd {
        Command::Render(a) => render(a),
        Command::ExtractMesh(a) => extract_mesh(a),
        Command::Eval(e) => eval(e),
        Command::McCheck(a) => mc_check(a),
        Command::FitDensity(a) => fit_density(a),
    }
}

fn load_scene(path: &Path) -> Result<SceneFile> {
    let text = std::fs::read_to_string(path)
        .map_err(layered_sdf::Error::from)
        .with_context(|| format!("reading {}", path.display()))?;
    let file = io::parse_scene(&text)?;
    file.scene
        .validate_containment(file.render.containment_grid)?;
    Ok(file)
}

fn layer_node(file: &SceneFile, layer: Layer) -> Result<&SdfNode> {
    match layer {
        Layer::Hard => Ok(&file.scene.hard),
        Layer::Soft => file.scene.soft.as_ref().ok_or_else(|| {
            anyhow!(layered_sdf::Error::InvalidArgument(
                "scene has no soft layer".into()
            ))
        }),
    }
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn render(a: RenderArgs) -> Result<ExitCode> {
    let file = load_scene(&a.scene)?;
    let cam = file.camera(a.camera)?;
    let mut cfg = file.render.to_config();
    if a.no_integrated_sdf {
        cfg.integrated_sdf = false;
    }
    let ext = extension(&a.out);
    if ext != "ppm" && ext != "pfm" {
        bail!(layered_sdf::Error::InvalidArgument(format!(
            "output must end in .ppm or .pfm, got {}",
            a.out.display()
        )));
    }
    let out = render_image(&file.scene, &cam, &cfg)?;
    if ext == "pfm" {
        io::write_pfm(&a.out, &out.image)?;
    } else {
        io::write_ppm(&a.out, &out.image)?;
    }
    if let Some(p) = &a.case_map {
        io::write_ppm(p, &out.case_image())?;
    }
    if let Some(p) = &a.trace_csv {
        let mut s = String::from(
            "x,y,case,t_hat_s,t_hat_h,t_ddot_s,t_end,samples,soft_method,soft_steps,hard_method,hard_steps\n",
        );
        let w = cam.width();
        for (i, o) in out.outcomes.iter().enumerate() {
            let tr = |t: &Option<layered_sdf::tracing::TraceResult>| match t {
                Some(r) => (r.method.as_str(), r.steps_used.to_string()),
                None => ("", String::new()),
            };
            let (sm, ss) = tr(&o.soft_trace);
            let (hm, hs) = tr(&o.hard_trace);
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                i % w,
                i / w,
                o.case.id(),
                opt(o.t_hat_s),
                opt(o.t_hat_h),
                opt(o.t_ddot_s),
                o.t_end,
                o.samples,
                sm,
                ss,
                hm,
                hs
            );
        }
        io::write_atomic(p, s.as_bytes())?;
    }
    let mut counts = [0usize; 4];
    for &c in &out.cases {
        counts[c as usize - 1] += 1;
    }
    println!(
        "{}",
        json!({
            "command": "render",
            "out": a.out.display().to_string(),
            "width": cam.width(),
            "height": cam.height(),
            "integrated_sdf": cfg.integrated_sdf,
            "cases": { "1": counts[0], "2": counts[1], "3": counts[2], "4": counts[3] },
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn extract_mesh(a: MeshArgs) -> Result<ExitCode> {
    let file = load_scene(&a.scene)?;
    let node = layer_node(&file, a.layer)?;
    let mesh = marching_cubes(node, &file.scene.bounds, a.res, a.iso)?;
    io::write_obj(&a.out, &mesh)?;
    println!(
        "{}",
        json!({
            "command": "extract-mesh",
            "out": a.out.display().to_string(),
            "vertices": mesh.vertices.len(),
            "triangles": mesh.triangles.len(),
            "closed": mesh.is_closed(),
        })
    );
    Ok(ExitCode::SUCCESS)
}

fn eval(e: EvalCommand) -> Result<ExitCode> {
    let line = match e {
        EvalCommand::Psnr { a, b, peak } => {
            let (x, y) = (io::read_pfm(&a)?, io::read_pfm(&b)?);
            let p = psnr(&x, &y, peak)?;
            // JSON has no infinity; identical images report the string "inf".
            let v = if p.is_infinite() {
                json!("inf")
            } else {
                json!(p)
            };
            json!({ "metric": "psnr", "value": v, "peak": peak })
        }
        EvalCommand::Chamfer {
            reference,
            candidate,
            manhattan,
        } => {
            let r = io::read_obj(&reference)?;
            let c = io::read_obj(&candidate)?;
            let metric = if manhattan {
                PointMetric::Manhattan
            } else {
                PointMetric::Euclidean
            };
            let d = chamfer_single(&r.vertices, &c.vertices, metric)?;
            json!({ "metric": "chamfer_single", "value": d, "point_metric": metric })
        }
        EvalCommand::Eikonal {
            scene,
            layer,
            n,
            seed,
            grad_eps,
        } => {
            let file = load_scene(&scene)?;
            let node = layer_node(&file, layer)?;
            let r = eikonal_residual(node, &file.scene.bounds, n, seed, grad_eps)?;
            json!({ "metric": "eikonal", "mean": r.mean, "max": r.max, "points": r.points })
        }
    };
    println!("{line}");
    Ok(ExitCode::SUCCESS)
}

/// One random frustum and field for `mc-check`, with `0 < h < t/2`.
pub fn random_trial(rng: &mut ChaCha8Rng) -> (ConicalFrustum, UniformField) {
    let t = rng.gen_range(0.5..4.0);
    let h = t * rng.gen_range(0.01..0.5);
    let r = t * rng.gen_range(0.005..0.3);
    let s_c = rng.gen_range(-1.0..1.0);
    let n = loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if (0.01..=1.0).contains(&v.norm_squared()) {
            break v.normalize();
        }
    };
    let dir = loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if (0.01..=1.0).contains(&v.norm_squared()) {
            break v;
        }
    };
    let origin = Vec3::new(
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
        rng.gen_range(-1.0..1.0),
    );
    let f = ConicalFrustum::new(origin, dir, r, t, h).expect("valid by construction");
    (f, UniformField { s_c, n_c: n })
}

fn mc_check(a: McCheckArgs) -> Result<ExitCode> {
    if a.trials == 0 {
        bail!(layered_sdf::Error::InvalidArgument(
            "--trials must be >= 1".into()
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let trials: Vec<_> = (0..a.trials).map(|_| random_trial(&mut rng)).collect();
    let mut worst_derived: f64 = 0.0;
    let mut worst_printed: f64 = 0.0;
    let mut printed_fail = 0;
    let mut derived_fail = 0;
    for (i, (f, u)) in trials.iter().enumerate() {
        let x_c = f.center();
        let field = |x: Vec3| u.value(x_c, x);
        let mc = moments_monte_carlo(f, field, a.samples, a.seed.wrapping_add(1 + i as u64))?;
        let derived = moments_closed_form(f, u);
        let printed = moments_printed(f, u);
        let simplified = moments_printed_simplified(f, u);
        let (zd_s, zd_s2) = mc.z_scores(&derived);
        let (zp_s, zp_s2) = mc.z_scores(&printed);
        let zd = zd_s.abs().max(zd_s2.abs());
        let zp = zp_s.abs().max(zp_s2.abs());
        worst_derived = worst_derived.max(zd);
        worst_printed = worst_printed.max(zp);
        derived_fail += usize::from(zd.is_nan() || zd > a.sigmas);
        printed_fail += usize::from(zp.is_nan() || zp > a.sigmas);
        let m = |m: &SdfMoments| json!({ "e_s": m.e_s, "e_s2": m.e_s2 });
        println!(
            "{}",
            json!({
                "trial": i,
                "t": f.t(), "h": f.half_height(), "r": f.radius(),
                "s_c": u.s_c, "n_z": f.direction().dot(u.n_c),
                "mc": m(&mc.moments),
                "stderr": { "e_s": mc.stderr_s, "e_s2": mc.stderr_s2 },
                "derived": m(&derived),
                "printed": m(&printed),
                "printed_simplified": m(&simplified),
                "z_derived": [zd_s, zd_s2],
                "z_printed": [zp_s, zp_s2],
            })
        );
    }
    let pass = derived_fail == 0;
    println!(
        "{}",
        json!({
            "summary": {
                "trials": a.trials,
                "samples": a.samples,
                "sigmas": a.sigmas,
                "threads": par::current_threads(),
                "derived_max_abs_z": worst_derived,
                "derived_failures": derived_fail,
                "printed_max_abs_z": worst_printed,
                "printed_failures": printed_fail,
                "pass": pass,
            }
        })
    );
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn read_profile(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| layered_sdf::Error::Io(e.to_string()))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| layered_sdf::Error::Parse {
            location: format!("record {}", i + 1),
            message: e.to_string(),
        })?;
        let parse = |k: usize| rec.get(k).and_then(|v| v.parse::<f64>().ok());
        match (parse(0), parse(1), rec.len()) {
            (Some(s), Some(y), 2) => out.push((s, y)),
            // A non-numeric first row is a header.
            _ if i == 0 => {}
            _ => bail!(layered_sdf::Error::Parse {
                location: format!("record {}", i + 1),
                message: "expected two numeric columns s,sigma".into(),
            }),
        }
    }
    Ok(out)
}

fn fit_density(a: FitArgs) -> Result<ExitCode> {
    let samples = read_profile(&a.profile)?;
    let fit = fit_density_1d(&samples, a.k, a.iters, a.seed)?;
    println!(
        "{}",
        json!({
            "command": "fit-density",
            "k": a.k,
            "iters": a.iters,
            "seed": a.seed,
            "components": fit.model.components,
            "final_loss": fit.final_loss,
            "initial_loss": fit.loss_curve.first(),
        })
    );
    Ok(ExitCode::SUCCESS)
}
