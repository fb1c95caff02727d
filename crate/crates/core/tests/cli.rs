use std::path::Path;
use std::process::{Command, Output};

use accelerant::io::{read_accelerant, read_potential, write_accelerant, write_potential, write_triple};
use accelerant::numerics::{scalar, Grid};
use accelerant::pseudo_exp::validate_triple;
use accelerant::{Accelerant, Potential, C64};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_accelerant"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn constant_accelerant(dir: &Path, n: usize, c: f64) -> std::path::PathBuf {
    let path = dir.join("k.json");
    let k = Accelerant::constant(&Grid::new(1.0, n).unwrap(), &scalar(C64::new(c, 0.0))).unwrap();
    write_accelerant(&path, &k).unwrap();
    path
}

fn potential_file(dir: &Path, n: usize, f: impl Fn(f64) -> C64) -> std::path::PathBuf {
    let path = dir.join("v.json");
    let v = Potential::from_fn(&Grid::new(1.0, n).unwrap(), |t| scalar(f(t))).unwrap();
    write_potential(&path, &v).unwrap();
    path
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn direct_zero_accelerant_gives_zero_potential() {
    let dir = tempfile::tempdir().unwrap();
    let input = constant_accelerant(dir.path(), 50, 0.0);
    let out = dir.path().join("out");
    let o = run(&["direct", "--input", p(&input), "--out-dir", p(&out), "--lambda", "0,1,i"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = read_potential(&out.join("potential.json")).unwrap();
    assert!(v.samples().iter().all(|m| m[(0, 0)].norm() == 0.0));
    for tag in ["0.000000_0.000000", "1.000000_0.000000", "0.000000_1.000000"] {
        assert!(out.join(format!("u_{tag}.csv")).exists(), "{tag}");
    }
    let d = json(&out.join("diagnostics.json"));
    assert!(d["fundamental_solution"]["1.000000_0.000000"]["j_unitarity"].as_f64().unwrap() < 1e-12);
}

#[test]
fn direct_constant_accelerant_potential_csv() {
    let dir = tempfile::tempdir().unwrap();
    let input = constant_accelerant(dir.path(), 200, -2.0);
    let out = dir.path().join("out");
    let o = run(&["direct", "--input", p(&input), "--out-dir", p(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("potential.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "tau,v00_re,v00_im");
    let mut count = 0;
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert!(f[1].abs() < 1e-12 && (f[2] - 2.0 / (1.0 + 2.0 * f[0])).abs() < 1e-4, "{line}");
        count += 1;
    }
    assert_eq!(count, 201);
}

#[test]
fn direct_rejects_non_accelerant_with_failing_tau() {
    let dir = tempfile::tempdir().unwrap();
    let input = constant_accelerant(dir.path(), 100, 2.0);
    let o = run(&["direct", "--input", p(&input), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    let tau: f64 = err.split("tau = ").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
    assert!((tau - 0.5).abs() <= 0.02, "{err}");
}

#[test]
fn inverse_zero_and_constant_potentials() {
    let dir = tempfile::tempdir().unwrap();
    let input = potential_file(dir.path(), 60, |_| C64::new(0.0, 0.0));
    let out = dir.path().join("zero");
    assert_eq!(run(&["inverse", "--input", p(&input), "--out-dir", p(&out)]).status.code(), Some(0));
    let k = read_accelerant(&out.join("accelerant.json")).unwrap();
    assert!(k.samples().iter().all(|m| m[(0, 0)].norm() < 1e-14));

    let input = potential_file(dir.path(), 200, |t| C64::new(0.0, 2.0 / (1.0 + 2.0 * t)));
    let out = dir.path().join("const");
    let o = run(&["inverse", "--input", p(&input), "--out-dir", p(&out), "--cross-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let k = read_accelerant(&out.join("accelerant.json")).unwrap();
    let n = k.grid().n();
    for i in 1..n {
        assert!((k.samples()[i][(0, 0)] + 2.0).norm() < 1e-2);
    }
    let d = json(&out.join("diagnostics.json"));
    for key in ["lambda_normalization", "similarity", "st_displacement", "roundtrip"] {
        assert!(d["residuals"][key].as_f64().unwrap() < 1e-2, "{key}");
    }
    assert!(d["neumann_terms"].as_u64().unwrap() >= 1);
    assert!(d["cross_check"].as_f64().unwrap() < 1e-10);
}

#[test]
fn inverse_counterexample_has_jump_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    // v = -i a with a = 2i / (1 + e^{-2 i tau})
    let input = potential_file(dir.path(), 200, |t| {
        let a = C64::new(0.0, 2.0) / (C64::new(1.0, 0.0) + C64::new(0.0, -2.0 * t).exp());
        -C64::i() * a
    });
    let o = run(&["inverse", "--input", p(&input), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&dir.path().join("diagnostics.json"));
    assert!(d["jump_at_zero"].as_f64().unwrap() > 0.1);
}

#[test]
fn inverse_validation_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let input = potential_file(dir.path(), 8, |t| C64::new(40.0 * (9.0 * t).cos(), 25.0));
    let o = run(&["inverse", "--input", p(&input), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn pe_constant_triple_potential() {
    let dir = tempfile::tempdir().unwrap();
    let one = scalar(C64::new(1.0, 0.0));
    let zero = scalar(C64::new(0.0, 0.0));
    let triple = validate_triple(zero.clone(), one, zero).unwrap();
    let input = dir.path().join("triple.json");
    write_triple(&input, &triple).unwrap();
    let out = dir.path().join("out");
    let o = run(&["pe", "--input", p(&input), "--out-dir", p(&out), "--grid-n", "40", "--lambda", "1,1+i"]);
    assert_eq!(o.status.code(), Some(0));
    let v = read_potential(&out.join("potential.json")).unwrap();
    for (i, m) in v.samples().iter().enumerate() {
        let t = v.grid().node(i);
        assert!((m[(0, 0)] - C64::new(0.0, 2.0 / (1.0 + 2.0 * t))).norm() < 1e-12);
    }
    assert!(out.join("u_1.000000_1.000000.csv").exists());
}

#[test]
fn roundtrip_zero_accelerant_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let input = constant_accelerant(dir.path(), 40, 0.0);
    let o = run(&["roundtrip", "--input", p(&input), "--out-dir", p(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let d = json(&dir.path().join("roundtrip.json"));
    assert_eq!(d["direction"], "k->v->k");
    assert!(d["max_error"].as_f64().unwrap() < 1e-14);
}

#[test]
fn verify_random_triple_all_pass() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["verify", "--seed", "7", "--grid-n", "100", "--out-dir", p(dir.path())]);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(o.status.code(), Some(0), "{stdout}");
    assert!(stdout.contains("0 failed"));
    let report = json(&dir.path().join("verify.json"));
    assert!(report["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
}

#[test]
fn pe_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = run(&["pe", "--seed", "3", "--grid-n", "30", "--out-dir", p(out), "--lambda", "0,1,i"]);
        assert_eq!(o.status.code(), Some(0));
    }
    let mut names: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() >= 8);
    for name in names {
        assert_eq!(std::fs::read(a.join(&name)).unwrap(), std::fs::read(b.join(&name)).unwrap(), "{name:?}");
    }
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(&["direct", "--out-dir", p(dir.path())]).status.code(), Some(1));
    assert_eq!(run(&["pe", "--seed", "1", "--grid-n", "4"]).status.code(), Some(1));
    assert_eq!(run(&["pe", "--seed", "1", "--lambda", "1+"]).status.code(), Some(1));
    assert_eq!(run(&["nonsense"]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(run(&["inverse", "--input", p(&missing)]).status.code(), Some(1));
}
