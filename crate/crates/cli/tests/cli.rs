use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn lsdf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lsdf"))
        .args(args)
        .output()
        .expect("run lsdf")
}

fn reference() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("scenes/reference.json")
        .display()
        .to_string()
}

fn json_lines(bytes: &[u8]) -> Vec<Value> {
    String::from_utf8_lossy(bytes)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("not JSON: {l}: {e}")))
        .collect()
}

fn error_of(out: &Output) -> (String, String) {
    let lines = json_lines(&out.stderr);
    assert_eq!(lines.len(), 1, "single-line error expected");
    let v = &lines[0];
    (
        v["error"].as_str().unwrap().to_string(),
        v["message"].as_str().unwrap().to_string(),
    )
}

fn path_in(dir: &tempfile::TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn usage_errors_are_single_line_json() {
    let out = lsdf(&["render"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_of(&out).0, "UsageError");
    let out = lsdf(&["no-such-command"]);
    assert_eq!(out.status.code(), Some(2));
    // Seeds are mandatory.
    let out = lsdf(&["mc-check", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scene_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsdf(&[
        "render",
        "/nonexistent/scene.json",
        "--out",
        s(&path_in(&dir, "a.ppm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out).0, "IoError");
}

#[test]
fn invalid_scene_reports_the_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let scene = path_in(&dir, "bad.json");
    std::fs::write(
        &scene,
        r#"{"version": 1, "scene": {"hard": {"sphere": {"center": [0,0,0], "radius": -1}}}}"#,
    )
    .unwrap();
    let out = lsdf(&["render", s(&scene), "--out", s(&path_in(&dir, "a.ppm"))]);
    let (kind, msg) = error_of(&out);
    assert_eq!(kind, "ValidationError");
    assert!(msg.contains("$.scene.hard.sphere.radius"), "{msg}");

    std::fs::write(&scene, "{\"version\": 1,\n \"scene\": }").unwrap();
    let (kind, msg) = error_of(&lsdf(&[
        "render",
        s(&scene),
        "--out",
        s(&path_in(&dir, "a.ppm")),
    ]));
    assert_eq!(kind, "ParseError");
    assert!(msg.contains("line 2"), "{msg}");
}

#[test]
fn render_is_deterministic_and_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path_in(&dir, "a.pfm"), path_in(&dir, "b.pfm"));
    let cases = path_in(&dir, "cases.ppm");
    let csv = path_in(&dir, "trace.csv");
    let out = lsdf(&[
        "render",
        &reference(),
        "--out",
        s(&a),
        "--case-map",
        s(&cases),
        "--trace-csv",
        s(&csv),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary = &json_lines(&out.stdout)[0];
    assert_eq!(summary["width"], 96);
    let total: u64 = ["1", "2", "3", "4"]
        .iter()
        .map(|k| summary["cases"][k].as_u64().unwrap())
        .sum();
    assert_eq!(total, 96 * 72);

    assert!(
        lsdf(&["--threads", "1", "render", &reference(), "--out", s(&b)])
            .status
            .success()
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let img = layered_sdf::io::read_pfm(&a).unwrap();
    assert_eq!((img.width(), img.height()), (96, 72));
    assert!(std::fs::read(&cases)
        .unwrap()
        .starts_with(b"P6\n96 72\n255\n"));
    let trace = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(trace.lines().count(), 1 + 96 * 72);

    let p = path_in(&dir, "a.ppm");
    assert!(
        lsdf(&["render", &reference(), "--camera", "1", "--out", s(&p)])
            .status
            .success()
    );
    assert!(std::fs::read(&p).unwrap().starts_with(b"P6\n64 64\n255\n"));
}

#[test]
fn render_rejects_bad_camera_and_extension() {
    let dir = tempfile::tempdir().unwrap();
    let out = lsdf(&[
        "render",
        &reference(),
        "--camera",
        "9",
        "--out",
        s(&path_in(&dir, "a.ppm")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = lsdf(&["render", &reference(), "--out", s(&path_in(&dir, "a.png"))]);
    assert_eq!(error_of(&out).0, "InvalidArgument");
    assert!(!path_in(&dir, "a.png").exists());
}

#[test]
fn integrated_flag_changes_the_image() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (path_in(&dir, "a.pfm"), path_in(&dir, "b.pfm"));
    assert!(lsdf(&["render", &reference(), "--out", s(&a)])
        .status
        .success());
    assert!(lsdf(&[
        "render",
        &reference(),
        "--no-integrated-sdf",
        "--out",
        s(&b)
    ])
    .status
    .success());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = lsdf(&["eval", "psnr", s(&a), s(&b)]);
    let v = &json_lines(&out.stdout)[0];
    assert!(v["value"].as_f64().unwrap() > 20.0);
    let out = lsdf(&["eval", "psnr", s(&a), s(&a)]);
    assert_eq!(json_lines(&out.stdout)[0]["value"], "inf");
}

#[test]
fn mesh_and_chamfer() {
    let dir = tempfile::tempdir().unwrap();
    let (hard, soft) = (path_in(&dir, "hard.obj"), path_in(&dir, "soft.obj"));
    let out = lsdf(&[
        "extract-mesh",
        &reference(),
        "--layer",
        "hard",
        "--res",
        "48",
        "--out",
        s(&hard),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = &json_lines(&out.stdout)[0];
    assert!(v["triangles"].as_u64().unwrap() > 100);
    assert_eq!(v["closed"], true);
    assert!(lsdf(&[
        "extract-mesh",
        &reference(),
        "--layer",
        "soft",
        "--res",
        "48",
        "--out",
        s(&soft)
    ])
    .status
    .success());
    let mesh = layered_sdf::io::read_obj(&hard).unwrap();
    assert_eq!(mesh.vertices.len() as u64, v["vertices"].as_u64().unwrap());

    let cd = |a: &Path, b: &Path| {
        let out = lsdf(&["eval", "chamfer", s(a), s(b)]);
        json_lines(&out.stdout)[0]["value"].as_f64().unwrap()
    };
    assert_eq!(cd(&hard, &hard), 0.0);
    // The soft layer encloses the hard one with clearance 0.08 or more.
    let outward = cd(&hard, &soft);
    assert!((0.07..0.3).contains(&outward), "{outward}");
    assert!((outward - cd(&soft, &hard)).abs() > 1e-3);
    let out = lsdf(&["eval", "chamfer", s(&hard), s(&soft), "--manhattan"]);
    assert!(json_lines(&out.stdout)[0]["value"].as_f64().unwrap() >= outward);
}

#[test]
fn eikonal_is_seeded() {
    let run = |seed: &str| {
        let out = lsdf(&[
            "eval",
            "eikonal",
            &reference(),
            "--layer",
            "hard",
            "--n",
            "2000",
            "--seed",
            seed,
        ]);
        assert!(out.status.success());
        json_lines(&out.stdout)[0].clone()
    };
    let a = run("4");
    assert_eq!(a, run("4"));
    assert_eq!(a["points"], 2000);
    assert!(a["mean"].as_f64().unwrap() < 1e-2);
    let out = lsdf(&[
        "eval",
        "eikonal",
        &reference(),
        "--layer",
        "hard",
        "--n",
        "10",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn mc_check_reports_printed_and_derived() {
    let out = lsdf(&[
        "mc-check",
        "--trials",
        "3",
        "--samples",
        "2e4",
        "--seed",
        "9",
    ]);
    assert!(out.status.success());
    let lines = json_lines(&out.stdout);
    assert_eq!(lines.len(), 4);
    assert!(lines[0]["printed"]["e_s2"].is_f64());
    assert_eq!(lines[3]["summary"]["pass"], true);
    // An impossible threshold must fail.
    let out = lsdf(&[
        "mc-check",
        "--trials",
        "3",
        "--samples",
        "2e4",
        "--seed",
        "9",
        "--sigmas",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let out = lsdf(&[
        "mc-check",
        "--trials",
        "1",
        "--samples",
        "1.5e3",
        "--seed",
        "1",
        "--samples",
        "x",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fit_density_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = path_in(&dir, "profile.csv");
    let mut text = String::from("s,sigma\n");
    for i in 0..41 {
        let s = -0.4 + 0.02 * i as f64;
        let y = 6.0 * (-((s - 0.05) / 0.1_f64).powi(2)).exp();
        text += &format!("{s},{y}\n");
    }
    std::fs::write(&csv, &text).unwrap();
    let out = lsdf(&[
        "fit-density",
        s(&csv),
        "--k",
        "1",
        "--iters",
        "3000",
        "--seed",
        "0",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = &json_lines(&out.stdout)[0];
    let c = &v["components"][0];
    assert!((c["alpha"].as_f64().unwrap() - 6.0).abs() < 0.3, "{v}");
    assert!(v["final_loss"].as_f64().unwrap() < 1e-3);

    std::fs::write(&csv, "s,sigma\n0,1\nfoo,2\n").unwrap();
    let out = lsdf(&["fit-density", s(&csv), "--seed", "0"]);
    assert_eq!(error_of(&out).0, "ParseError");
}

#[test]
fn zero_threads_is_rejected() {
    let out = lsdf(&["--threads", "0", "mc-check", "--trials", "1", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_of(&out).0, "InvalidArgument");
}
