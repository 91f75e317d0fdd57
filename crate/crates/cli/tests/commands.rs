use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cbflcp_cli::trajectory::read_file;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cbflcp"))
}

fn shipped_scene() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenes/planar_arm.toml")
}

fn simulate(scene: &Path, out: &Path) -> Output {
    bin()
        .arg("simulate")
        .arg(scene)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_scene(dir: &Path, edit: impl Fn(String) -> String) -> PathBuf {
    let text = std::fs::read_to_string(shipped_scene()).unwrap();
    let path = dir.join("edited.toml");
    std::fs::write(&path, edit(text)).unwrap();
    path
}

#[test]
fn shipped_scene_succeeds_and_plots() {
    let dir = tempfile::tempdir().unwrap();
    let out = simulate(&shipped_scene(), dir.path());
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert!(metrics["hprime_min"].as_f64().unwrap() > 0.0);
    assert_eq!(metrics["termination"]["kind"], "GoalReached");

    let table = read_file(&dir.path().join("trajectory.csv")).unwrap();
    assert!(table.hprime.iter().all(|h| *h > 0.0));
    assert_eq!(table.q[0], vec![0.0, 1.6, -2.7]);

    let plots = dir.path().join("plots");
    let out = bin()
        .arg("plot")
        .arg(dir.path().join("trajectory.csv"))
        .arg("--out")
        .arg(&plots)
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["scene.svg", "curves.svg"] {
        let svg = std::fs::read_to_string(plots.join(name)).unwrap();
        assert!(
            svg.starts_with("<?xml") && svg.trim_end().ends_with("</svg>"),
            "{name}"
        );
    }
}

#[test]
fn zero_length_link_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), |t| {
        t.replace(
            "link_lengths = [0.1, 0.05, 0.05]",
            "link_lengths = [0.1, 0.0, 0.05]",
        )
    });
    let out = simulate(&scene, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("robot.link_lengths[1]"));
}

#[test]
fn syntax_error_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), |t| t.replace("tau = 0.005", "tau = = 0.005"));
    let out = simulate(&scene, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line"));
}

#[test]
fn obstacle_covering_the_arm_is_a_safety_violation() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), |t| {
        t.replace("center = [0.03, 0.17]", "center = [0.3, 0.3]")
            .replace("radius = 0.05", "radius = 1.0")
    });
    let out = simulate(&scene, &dir.path().join("out"));
    assert_eq!(
        out.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn step_budget_exhaustion_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let scene = write_scene(dir.path(), |t| {
        t.replace("max_steps = 20000", "max_steps = 10")
    });
    let out = simulate(&scene, &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(1));
    let table = read_file(&dir.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(table.t.len(), 10);
}

#[test]
fn trajectory_bytes_are_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let scene = write_scene(a.path(), |t| {
        t.replace("max_steps = 20000", "max_steps = 200")
    });
    simulate(&scene, a.path());
    simulate(&scene, b.path());
    assert_eq!(
        std::fs::read(a.path().join("trajectory.csv")).unwrap(),
        std::fs::read(b.path().join("trajectory.csv")).unwrap()
    );
}

#[test]
fn plot_names_the_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trajectory.csv");
    std::fs::write(&csv, "k,t,q_0,q_1,q_2,e\n0,0,0,0,0,0\n").unwrap();
    std::fs::copy(shipped_scene(), dir.path().join("scene.toml")).unwrap();
    let out = bin()
        .arg("plot")
        .arg(&csv)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hprime"));
}

#[test]
fn plot_without_a_scene_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("trajectory.csv");
    std::fs::write(&csv, "k,t,q_0,q_1,q_2,hprime,e\n0,0,0,0,0,0.1,nan\n").unwrap();
    let out = bin()
        .arg("plot")
        .arg(&csv)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("scene.toml"));
}

#[test]
fn empty_fuzz_run_is_clean() {
    let out = bin()
        .args(["fuzz", "--seed", "1", "--count", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn fuzz_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "fuzz", "--seed", "42", "--count", "200", "--m-max", "6", "--n-max", "6",
        ])
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stdout)
    );
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("fuzz_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["instances"], 200);
    assert_eq!(report["success"], true);
}

#[test]
fn fuzz_rejects_bad_bounds_and_zero_rows() {
    let out = bin().args(["fuzz", "--m-max", "13"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["fuzz", "--n-max", "0"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin()
        .args(["fuzz", "--count", "50", "--zero-row-probability", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}
