mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use avdcert::certify::{Certificate, Verdict};
use avdcert::cli::{run, EXIT_ERROR, EXIT_NEGATIVE, EXIT_OK};
use serde_json::Value;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name).display().to_string()
}

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("avdcert").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn certify(mesh: &str, sites: &str, kind: &str) -> (i32, String, String) {
    invoke(&["certify", "--mesh", &fixture(mesh), "--sites", &fixture(sites), "--kind", kind])
}

#[test]
fn certify_exit_codes_follow_verdict() {
    for kind in ["dw", "ls"] {
        let (code, out, _) = certify("aniso.avdmesh", "net12.avdsites", kind);
        assert_eq!(code, EXIT_OK, "{out}");
        let (code, out, _) = certify("aniso.avdmesh", "net3.avdsites", kind);
        assert_eq!(code, EXIT_NEGATIVE, "{out}");
    }
    let (code, out, _) = certify("ramp.avdmesh", "pair.avdsites", "ls");
    assert_eq!(code, EXIT_ERROR);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"], "Inapplicable");
    assert!(v["condition_value"].is_null());
}

#[test]
fn certificate_json_round_trips_strictly() {
    let (_, out, _) = certify("aniso.avdmesh", "net12.avdsites", "dw");
    let cert: Certificate<f64> = serde_json::from_str(&out).unwrap();
    assert_eq!(cert.verdict, Verdict::Certified);
    assert_eq!(cert.cover_resolution, 128);
    assert_eq!(serde_json::to_string(&cert).unwrap() + "\n", out);

    let mut v: Value = serde_json::from_str(&out).unwrap();
    v["unexpected"] = Value::Bool(true);
    assert!(serde_json::from_value::<Certificate<f64>>(v).is_err());
}

#[test]
fn malformed_input_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.avdsites");
    std::fs::write(&path, "avdsites 2 2\n0.25 0.5\n\n0.75 oops\n").unwrap();
    let (code, out, err) = invoke(&["certify", "--mesh", &fixture("identity.avdmesh"), "--sites", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(out.is_empty());
    assert!(err.contains("line 4"), "{err}");
    assert!(err.contains("oops"), "{err}");
}

#[test]
fn sites_outside_mesh_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.avdsites");
    std::fs::write(&path, "avdsites 2 2\n0.5 0.5\n1.5 0.5\n").unwrap();
    let (code, _, err) = invoke(&["certify", "--mesh", &fixture("identity.avdmesh"), "--sites", path.to_str().unwrap()]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("error:"), "{err}");
}

#[test]
fn sigma_reports_mesh_bound() {
    let dir = tempfile::tempdir().unwrap();
    let (mesh, _) = common::write_fixture(dir.path(), "tri", &common::ramp_triangle(), None);
    let (code, out, _) = invoke(&["sigma", "--mesh", mesh.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert!((v["sigma1_bound"].as_f64().unwrap() - 1.0).abs() < 1e-12, "{out}");

    let (_, text, _) = invoke(&["sigma", "--mesh", mesh.to_str().unwrap(), "--text", "--cover", "0.1"]);
    assert!(text.starts_with("sigma1 bound"), "{text}");
    assert!(text.contains("sigma0(C) bound"), "{text}");
}

#[test]
fn verify_passes_on_mesh_bound_and_fails_when_understated() {
    let mesh = fixture("ramp.avdmesh");
    let (code, out, _) = invoke(&["verify", "--mesh", &mesh]);
    assert_eq!(code, EXIT_OK, "{out}");
    let (code, out, _) = invoke(&["verify", "--mesh", &mesh, "--sigma-override", "0.2", "--text"]);
    assert_eq!(code, EXIT_NEGATIVE, "{out}");
    assert!(out.contains("FAIL sandwich"), "{out}");
}

#[test]
fn diagram_images_need_planar_input_and_out() {
    let dir = tempfile::tempdir().unwrap();
    let ppm = dir.path().join("d.ppm");
    let (code, out, _) = invoke(&[
        "diagram", "--mesh", &fixture("aniso.avdmesh"), "--sites", &fixture("net5.avdsites"),
        "--resolution", "40", "--format", "ppm", "--out", ppm.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["orphan_free"], true);
    let img = std::fs::read(&ppm).unwrap();
    assert!(img.starts_with(b"P6\n40 40\n255\n"));
    assert_eq!(img.len(), b"P6\n40 40\n255\n".len() + 40 * 40 * 3);

    let (code, _, err) = invoke(&[
        "diagram", "--mesh", &fixture("aniso.avdmesh"), "--sites", &fixture("net5.avdsites"), "--format", "svg",
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(err.contains("--out"), "{err}");

    let mesh3 = avdcert::metric::SimplicialMetricMesh::<f64, 3>::lattice(
        avdcert::metric::Aabb::unit(),
        [2, 2, 2],
        |_| avdcert::linalg::SymMat::identity(),
    )
    .unwrap();
    let m3 = dir.path().join("cube.avdmesh");
    std::fs::write(&m3, avdcert::metric::io::write_mesh(&mesh3)).unwrap();
    let s3 = dir.path().join("cube.avdsites");
    std::fs::write(&s3, "avdsites 3 2\n0.25 0.5 0.5\n0.75 0.5 0.5\n").unwrap();
    let out_path = dir.path().join("cube.ppm");
    let (code, _, err) = invoke(&[
        "diagram", "--mesh", m3.to_str().unwrap(), "--sites", s3.to_str().unwrap(),
        "--format", "ppm", "--out", out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_ERROR);
    assert!(!err.is_empty());
    assert!(!out_path.exists());

    let (code, out, _) = invoke(&["diagram", "--mesh", m3.to_str().unwrap(), "--sites", s3.to_str().unwrap(), "--resolution", "16"]);
    assert_eq!(code, EXIT_OK, "{out}");
}

#[test]
fn binary_matches_library_entry_point() {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_avdcert"));
    let args = ["certify", "--mesh", &fixture("aniso.avdmesh"), "--sites", &fixture("net3.avdsites"), "--text"];
    let out = Command::new(&bin).args(args).env("AVD_THREADS", "2").output().unwrap();
    let (code, lib_out, _) = invoke(&args);
    assert_eq!(out.status.code(), Some(code));
    assert_eq!(String::from_utf8(out.stdout).unwrap(), lib_out);
    assert!(lib_out.contains("NotCertified"), "{lib_out}");

    let help = Command::new(&bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(EXIT_OK));
    let bad = Command::new(&bin).arg("frobnicate").output().unwrap();
    assert_eq!(bad.status.code(), Some(EXIT_ERROR));
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let bin = PathBuf::from(env!("CARGO_BIN_EXE_avdcert"));
    let runs: [&[&str]; 3] = [
        &["sigma", "--mesh", &fixture("stretch.avdmesh"), "--sampled", "--cover", "0.1"],
        &["certify", "--mesh", &fixture("aniso.avdmesh"), "--sites", &fixture("net12.avdsites"), "--kind", "ls"],
        &["verify", "--mesh", &fixture("stretch.avdmesh"), "--seed", "3"],
    ];
    for args in runs {
        let outputs: Vec<Vec<u8>> = ["1", "3", "8"]
            .iter()
            .map(|n| Command::new(&bin).args(args).env("AVD_THREADS", n).output().unwrap().stdout)
            .collect();
        assert!(!outputs[0].is_empty());
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{}", args[0]);
    }
}
