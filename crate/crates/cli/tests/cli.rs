use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use varicurv::io::read_ply;
use varifold_curvature::estimator::convergence::median;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_varicurv"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("varicurv-cli-{}-{name}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn sample(dir: &Path, file: &str, args: &[&str]) -> PathBuf {
    let path = dir.join(file);
    run(exe().arg("sample").args(args).arg("--output").arg(&path));
    path
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn plane_with_exact_normals_is_flat() {
    let dir = scratch("plane");
    let input = sample(&dir, "plane.ply", &["--shape", "plane", "--n", "2500"]);
    let out = run(exe().arg("run").arg(&input));
    let csv = String::from_utf8(out.stdout).unwrap();
    let gauss = column(&csv, "gauss");
    assert_eq!(gauss.len(), 2500);
    assert!(gauss.iter().all(|g| g.abs() <= 1e-8));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn sphere_medians_match_the_oracle() {
    let dir = scratch("sphere");
    let input = sample(&dir, "sphere.xyz", &["--shape", "sphere", "--n", "8000", "--seed", "3"]);
    let csv_path = dir.join("out.csv");
    let ply_path = dir.join("out.ply");
    run(exe().arg("run").arg(&input).arg("--csv").arg(&csv_path).arg("--ply").arg(&ply_path));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    let gauss: Vec<f64> = column(&csv, "gauss").iter().map(|g| (g - 1.0).abs()).collect();
    let mean: Vec<f64> = column(&csv, "mean_norm").iter().map(|h| (h - 2.0).abs() / 2.0).collect();
    assert!(median(&gauss) < 0.1, "gauss median error {}", median(&gauss));
    assert!(median(&mean) < 0.05, "mean median error {}", median(&mean));
    let ply = read_ply(std::io::BufReader::new(std::fs::File::open(&ply_path).unwrap())).unwrap();
    assert_eq!(ply.positions.len(), 3 * 8000);
    let text = std::fs::read_to_string(&ply_path).unwrap();
    assert!(text.contains("property uchar red") && text.contains("property float quality"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn malformed_input_reports_its_line() {
    let dir = scratch("malformed");
    let path = dir.join("bad.xyz");
    std::fs::write(&path, "0 0 0\n1 0 0\n# note\n0 1 zero\n").unwrap();
    let out = exe().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 4"), "{err}");
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn exit_codes() {
    let dir = scratch("codes");
    let missing = exe().args(["run", "/nonexistent/cloud.xyz"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(1));
    let usage = exe().args(["run"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(1));
    let help = exe().arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
    let dims = exe().args(["run", "x.xyz", "-d", "3", "-n", "2"]).output().unwrap();
    assert_eq!(dims.status.code(), Some(1));

    // Every point repeated: the k-th neighbor sits at distance zero.
    let path = dir.join("dup.xyz");
    std::fs::write(&path, "0.5 0.5 0.5\n".repeat(60)).unwrap();
    let degenerate = exe().arg("run").arg(&path).output().unwrap();
    assert_eq!(degenerate.status.code(), Some(2), "{}", String::from_utf8_lossy(&degenerate.stderr));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn data_with_wrong_dimension_is_rejected() {
    let dir = scratch("dims");
    let path = dir.join("pts.xyz");
    std::fs::write(&path, "0 0 0\n1 1 1\n").unwrap();
    let out = exe().arg("run").arg(&path).args(["-d", "1", "-n", "2"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 1"));
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn convergence_prints_a_table() {
    let out = run(exe().args(["convergence", "--shape", "circle", "--counts", "200,800", "-k", "10"]));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("points\tepsilon"));
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("slope_wsff\t"));
}
