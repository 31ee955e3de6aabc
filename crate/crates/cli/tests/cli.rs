use std::path::Path;
use std::process::{Command, Output};

fn radviz3d(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radviz3d"))
        .args(args)
        .current_dir(dir)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap()
}

fn wine() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/data/wine.csv").to_str().unwrap().to_string()
}

#[test]
fn anchors_csv_lists_tetrahedron() {
    let dir = tempfile::tempdir().unwrap();
    let out = radviz3d(dir.path(), &["anchors", "-p", "4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,x,y,z");
    assert_eq!(lines.len(), 5);
    let first: Vec<f64> = lines[1].split(',').skip(1).map(|v| v.parse().unwrap()).collect();
    for v in first {
        assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-15);
    }
}

#[test]
fn circle_anchors_for_planar_method() {
    let dir = tempfile::tempdir().unwrap();
    let out = radviz3d(dir.path(), &["--method", "radviz2d", "anchors", "-p", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0")));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // 3D anchors need p >= 4
    assert_eq!(radviz3d(dir.path(), &["anchors", "-p", "3"]).status.code(), Some(2));
    assert_eq!(radviz3d(dir.path(), &["project", "missing.csv"]).status.code(), Some(2));
    assert_eq!(radviz3d(dir.path(), &["--normalize", "bogus", "anchors", "-p", "5"]).status.code(), Some(2));
    std::fs::write(dir.path().join("bad.csv"), "a,b,c\n1,2,3\n4,,6\n").unwrap();
    let out = radviz3d(dir.path(), &["project", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("row 3") && err.contains("'b'"), "{err}");
    // overlap with a single class
    let out = radviz3d(dir.path(), &["overlap", &wine(), "--draws", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn negative_raw_input_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("neg.csv"), "a,b,c,d\n1,-2,3,0\n4,5,6,1\n").unwrap();
    let out = radviz3d(dir.path(), &["--normalize", "none", "project", "neg.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(radviz3d(dir.path(), &["project", "neg.csv"]).status.success());
}

#[test]
fn unreachable_calibration_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // With unequal covariances the overlap saturates below 0.6 as the scale
    // grows; this seed draws such a pair.
    let out = radviz3d(
        dir.path(),
        &[
            "--seed",
            "3",
            "simulate",
            "--classes",
            "2",
            "--dims",
            "6",
            "--rows",
            "40",
            "--omega",
            "0.6",
            "--draws",
            "5000",
            "--out",
            "s.csv",
        ],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unreachable"));
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn overlap_writes_matrix_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = radviz3d(
        dir.path(),
        &["overlap", &wine(), "--label", "cultivar", "--draws", "50000", "--out", "o.csv", "--heatmap", "h.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("o.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "class,1,2,3");
    assert_eq!(csv.lines().count(), 4);
    let heat: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("h.json")).unwrap()).unwrap();
    assert_eq!(heat["cells"].as_array().unwrap().len(), 3);
}

#[test]
fn simulate_writes_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = radviz3d(
        dir.path(),
        &[
            "--seed",
            "4",
            "simulate",
            "--classes",
            "3",
            "--dims",
            "4",
            "--rows",
            "90",
            "--omega",
            "0.05",
            "--spherical",
            "--out",
            "m.csv",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "class,x1,x2,x3,x4");
    assert_eq!(csv.lines().count(), 91);
    let side: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(side["components"].as_array().unwrap().len(), 3);
    assert_eq!(side["spec"]["spherical"], true);
    let achieved = side["achieved_omega"].as_f64().unwrap();
    assert!((achieved - 0.05).abs() <= 0.001);
    // spherical covariances are multiples of the identity
    let cov = &side["components"][0]["covariance"];
    assert_eq!(cov[0][1].as_f64().unwrap(), 0.0);
}

#[test]
fn scene_and_html_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let wine = wine();
    let out = radviz3d(
        dir.path(),
        &[
            "--drop-columns",
            "proline,magnesium",
            "--method",
            "radviz2d",
            "scene",
            &wine,
            "--label",
            "cultivar",
            "--out",
            "s.json",
        ],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("s.json")).unwrap();
    let scene = radviz3d::io::Scene::from_json(&text).unwrap();
    assert_eq!(scene.feature_names.len(), 11);
    assert!(scene.points.iter().all(|p| p[2] == 0.0));
    assert_eq!(scene.provenance.timestamp, "2023-11-14T22:13:20Z");
    assert!(scene.provenance.command.starts_with("radviz3d --drop-columns"));

    let out = radviz3d(dir.path(), &["export-html", "s.json", "--out", "s.html"]);
    assert!(out.status.success());
    let html = std::fs::read_to_string(dir.path().join("s.html")).unwrap();
    assert!(html.contains(text.trim_end()));

    let out = radviz3d(dir.path(), &["export-html", "s.json", "--template", "nope.html"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn overlap_ignores_minmax_rescaling() {
    // Minmax is a per-column affine map and the Bayes comparison is
    // affine-invariant, so both inputs classify the same draws.
    let dir = tempfile::tempdir().unwrap();
    let wine = wine();
    let read = |name: &str| -> Vec<f64> {
        std::fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .flat_map(|l| l.split(',').skip(1).map(|v| v.parse::<f64>().unwrap()).collect::<Vec<_>>())
            .collect()
    };
    let base = ["overlap", wine.as_str(), "--label", "cultivar", "--draws", "50000"];
    assert!(radviz3d(dir.path(), &[&base[..], &["--out", "raw.csv"]].concat()).status.success());
    assert!(radviz3d(dir.path(), &[&base[..], &["--normalized", "--out", "mm.csv"]].concat()).status.success());
    for (a, b) in read("raw.csv").iter().zip(read("mm.csv")) {
        assert!((a - b).abs() <= 1e-4, "{a} vs {b}");
    }
}
