use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_isomon"))
}

fn sample() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../samples/garnier_state.json")
}

fn run(args: &[&str], files: &[&Path]) -> Output {
    let mut cmd = bin();
    let mut fi = files.iter();
    for a in args {
        if *a == "@" {
            cmd.arg(fi.next().expect("file for placeholder"));
        } else {
            cmd.arg(a);
        }
    }
    cmd.output().expect("run isomon")
}

fn sample_json() -> Value {
    serde_json::from_str(&std::fs::read_to_string(sample()).unwrap()).unwrap()
}

fn write_state(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p
}

fn complex(v: &Value) -> (f64, f64) {
    (v[0].as_f64().unwrap(), v[1].as_f64().unwrap())
}

#[test]
fn zero_steps_echo_the_state() {
    let out = run(&["evolve", "@", "--steps", "0"], &[&sample()]);
    assert_eq!(out.status.code(), Some(0));
    let echoed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(echoed, sample_json());
}

#[test]
fn s1_orbit_advances_the_first_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("orbit.csv");
    let out = run(&["evolve", "@", "--dir", "s1", "--steps", "5", "--out", "@"], &[&sample(), &csv]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(2).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap() - 2;
    let (re, im) = (col("rho_t1_re"), col("rho_t1_im"));
    let s = sample_json();
    let (t_re, t_im) = complex(&s["t1"]);
    let (e_re, e_im) = complex(&s["eps"]);
    // ρ_{t₁} = t₁/ε from the input state, then +1 per row
    let d = e_re * e_re + e_im * e_im;
    let rho0 = ((t_re * e_re + t_im * e_im) / d, (t_im * e_re - t_re * e_im) / d);
    for (k, row) in rows.iter().enumerate() {
        assert!((row[re] - (rho0.0 + (k + 1) as f64)).abs() < 1e-9, "row {k}");
        assert!((row[im] - rho0.1).abs() < 1e-9);
    }
}

#[test]
fn alternate_orbit_with_monodromy_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("orbit.csv");
    let out = run(
        &["evolve", "@", "--dir", "alternate", "--steps", "4", "--verify-monodromy", "2", "--out", "@"],
        &[&sample(), &csv],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let checkpoints: Vec<&str> = text.lines().filter(|l| l.starts_with("# checkpoint")).collect();
    assert_eq!(checkpoints.len(), 2);
    assert!(checkpoints.iter().all(|l| l.contains("verdict=CONJUGATE-COMPATIBLE")));
    let directions: Vec<&str> = text.lines().skip(1).take(4).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(directions, ["s1", "s2", "s1", "s2"]);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let ra = run(&["evolve", "@", "--dir", "alternate", "--steps", "3", "--out", "@"], &[&sample(), &a]);
    let rb = run(&["evolve", "@", "--dir", "alternate", "--steps", "3", "--out", "@"], &[&sample(), &b]);
    assert_eq!(ra.stdout, rb.stdout);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn broken_fuchs_relation_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = sample_json();
    let v = s["theta_inf1"][0].as_f64().unwrap();
    s["theta_inf1"][0] = Value::from(v + 1e-3);
    let p = write_state(dir.path(), "bad.json", &s);
    let out = run(&["verify", "@", "--suite", "exponents"], &[&p]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Fuchs relation"));
}

#[test]
fn collision_exits_as_non_generic() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = sample_json();
    // ρ_{t₁} + 1 = 0 lands on the zero exponent
    let (e_re, e_im) = complex(&s["eps"]);
    s["t1"] = serde_json::json!([-e_re, -e_im]);
    let p = write_state(dir.path(), "collide.json", &s);
    let out = run(&["evolve", "@", "--steps", "1"], &[&p]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("SpectralCollision") && err.contains("step 1"), "{err}");
}

#[test]
fn verify_suites() {
    let out = run(&["verify", "@", "--suite", "exponents"], &[&sample()]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(&["verify", "@", "--suite", "all"], &[&sample()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8_lossy(&out.stdout);
    let named = table.lines().filter(|l| l.ends_with("PASS") || l.ends_with("FAIL")).count();
    assert!(named >= 5);
}

#[test]
fn missing_state_file() {
    let out = run(&["verify", "/nonexistent/state.json"], &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn empty_seed_list_gives_empty_graph() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "").unwrap();
    let json = dir.path().join("g.json");
    let out = run(&["degenerations", "--seeds", "@", "--out", "@"], &[&seeds, &json]);
    assert_eq!(out.status.code(), Some(0));
    let g: Value = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(g["nodes"].as_array().unwrap().len(), 0);
    assert_eq!(g["edges"].as_array().unwrap().len(), 0);
}

#[test]
fn bad_seed_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.json");
    std::fs::write(&seeds, r#"["22,1111,111"]"#).unwrap();
    let out = run(&["degenerations", "--seeds", "@"], &[&seeds]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn chain_seed_and_expected_file() {
    let dir = tempfile::tempdir().unwrap();
    let seeds = dir.path().join("seeds.txt");
    std::fs::write(&seeds, "33,222,111111\n").unwrap();
    let expected = dir.path().join("expected.txt");
    std::fs::write(&expected, "33,222,111111 -> 22,1111,1111\n22,1111,1111 -> 111,111,111\n11,11,11,11 -> 111,111,111\n").unwrap();
    let dot = dir.path().join("g.dot");
    let out = run(&["degenerations", "--seeds", "@", "--expected", "@", "--dot", "@"], &[&seeds, &expected, &dot]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("MATCHED 33,222,111111 -> 22,1111,1111"), "{stdout}");
    assert!(stdout.contains("MATCHED 22,1111,1111 -> 111,111,111"));
    assert!(stdout.contains("UNMATCHED 11,11,11,11 -> 111,111,111"));
    assert_eq!(out.status.code(), Some(1));
    assert!(std::fs::read_to_string(&dot).unwrap().starts_with("digraph"));
}
