use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tresca(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tresca"))
        .args(args)
        .current_dir(dir)
        .env("TRESCA_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tresca-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn uniform_table_dof_counts() {
    let dir = scratch("uniform");
    let o = tresca(&dir, &["uniform", "--out", "u", "--levels", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("u/uniform.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "h,N,norm,eta");
    let n: Vec<&str> = lines[1..].iter().map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(n, ["162", "578", "2178"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), csv);
}

#[test]
fn no_contact_gives_zero_norms() {
    let dir = scratch("zero");
    std::fs::write(dir.join("run.cfg"), "friction_bound = 0\ngap = 10\nlevels = 2\n").unwrap();
    let o = tresca(&dir, &["uniform", "--config", "run.cfg", "--out", "z"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("z/uniform.csv")).unwrap();
    for line in csv.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        assert_eq!(cols[2], "0");
        assert_eq!(cols[3], "0");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let dir = scratch("config");
    let o = tresca(&dir, &["solve", "--poisson-ratio", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("poisson_ratio"));
    let o = tresca(&dir, &["solve", "--no-such-key", "1"]);
    assert_eq!(o.status.code(), Some(1));
    std::fs::write(dir.join("both.cfg"), "cells_per_side = 2\nmesh_file = m.txt\n").unwrap();
    assert_eq!(tresca(&dir, &["solve", "--config", "both.cfg"]).status.code(), Some(1));
    assert_eq!(
        tresca(&dir, &["solve", "--config", "missing.cfg"]).status.code(),
        Some(3)
    );
}

#[test]
fn corrupted_mesh_file_names_the_line() {
    let dir = scratch("mesh");
    std::fs::write(dir.join("bad.txt"), "tresca-mesh v1\nvertices 3\n0 0\n1 zero\n").unwrap();
    let o = tresca(&dir, &["solve", "--mesh-file", "bad.txt"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn solve_on_a_mesh_file_and_export() {
    let dir = scratch("solve");
    let mesh = tresca_core::mesh::build_unit_square_mesh(2, &tresca_core::mesh::benchmark_tagging()).unwrap();
    let mut buf = Vec::new();
    tresca_core::mesh::write_mesh(&mesh, &mut buf).unwrap();
    std::fs::write(dir.join("m.txt"), buf).unwrap();
    let o = tresca(&dir, &["solve", "--mesh-file", "m.txt", "--out", "s"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["summary.csv", "multipliers.csv", "indicators.csv", "solution.vtk", "deformed.vtk"] {
        assert!(dir.join("s").join(f).exists(), "{f}");
    }
    let trace = std::fs::read_to_string(dir.join("s/multipliers.csv")).unwrap();
    let ys: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ys.len(), 2 * 3);
    assert!(ys.windows(2).all(|w| w[0] <= w[1]));
    let o = tresca(&dir, &["export", "--cells-per-side", "2", "--out", "e"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let vtk = std::fs::read_to_string(dir.join("e/solution.vtk")).unwrap();
    assert!(vtk.contains("POINTS 9 double"));
    assert!(vtk.contains("CELLS 10 38"));
    assert!(vtk.contains("SCALARS lambda_t double 1"));
}

#[test]
fn adaptive_run_reaches_threshold() {
    let dir = scratch("adapt");
    let o = tresca(&dir, &["adapt", "--n-threshold", "400", "--out", "a"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("a/adaptive.csv")).unwrap();
    assert!(csv.starts_with("level,N,norm,eta,S,iterations\n"));
    let last: usize = csv.lines().last().unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(last >= 400);
    assert!(dir.join("a/final_mesh.txt").exists());
    let o = tresca(&dir, &["adapt", "--n-threshold", "10", "--out", "a"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_passes() {
    let dir = scratch("verify");
    let o = tresca(&dir, &["verify"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().count() >= 10);
    assert!(out.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = scratch("det");
    for out in ["r1", "r2"] {
        assert!(tresca(&dir, &["uniform", "--levels", "2", "--out", out]).status.success());
    }
    let a = std::fs::read(dir.join("r1/uniform.csv")).unwrap();
    let b = std::fs::read(dir.join("r2/uniform.csv")).unwrap();
    assert_eq!(a, b);
}
