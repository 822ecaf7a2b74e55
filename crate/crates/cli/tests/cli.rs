use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bgm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bgm")).args(args).output().expect("run bgm")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_is_semantic() {
    let o = bgm(&["--version"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let v = text.split_whitespace().nth(1).unwrap();
    assert_eq!(v.split('.').filter(|p| p.parse::<u32>().is_ok()).count(), 3, "{text}");
}

#[test]
fn fbm_covariance_entry() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cov.csv");
    let o = bgm(&["cov", "--family", "stable:alpha=0.5", "--flavor", "derivative", "--grid", "0:4:0.5", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stderr).unwrap().lines().count(), 1);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("t,s,cov,route\n"));
    assert_eq!(text.lines().count(), 1 + 81);
    let row = text.lines().find(|l| l.starts_with("2,1,")).unwrap();
    let v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((v - 0.70711).abs() < 1e-4);
}

#[test]
fn simulation_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = bgm(&[
            "simulate", "--family", "exponential", "--flavor", "derivative", "--grid", "0:10:0.1", "--n-paths", "1000",
            "--seed", "42", "--method", "cholesky", "--out", s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        (fs::read(&out).unwrap(), fs::read_to_string(dir.path().join(format!("{name}.meta"))).unwrap())
    };
    let (a, meta) = run("a.csv");
    let (b, _) = run("b.csv");
    assert_eq!(a, b);
    assert_eq!(a.iter().filter(|c| **c == b'\n').count(), 1 + 1000 * 101);
    assert!(meta.contains("process=bgm\n") && meta.contains("seed=42\n") && meta.contains("grid=0:10:0.1\n"));
}

#[test]
fn argument_errors_exit_2() {
    for args in [
        vec!["cov", "--family", "bogus", "--grid", "0:1:0.5"],
        vec!["cov", "--family", "exponential", "--grid", "0:1:0.3"],
        vec!["cov", "--family", "exponential", "--grid", "1:0:0.5"],
        vec!["cov", "--family", "exponential", "--flavor", "integral", "--grid", "0:1:0.5"],
        vec!["simulate", "--family", "exponential", "--grid", "1:2:0.5"],
        vec!["simulate", "--family", "exponential", "--grid", "0:2:0.5", "--method", "qr"],
        vec!["ou", "--family", "exponential", "--grid", "0:2:0.5", "--theta", "0"],
        vec!["regularity", "--family", "stable:alpha=0.5", "--a-min", "1e-3"],
        vec!["frobnicate"],
        vec!["cov", "-f", "exponential"],
    ] {
        let o = bgm(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn catalog_lists_every_entry() {
    let o = bgm(&["catalog"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("family,flavor,cond_c,cond_k,a1,a2,b1,b2,admitted\n"));
    assert_eq!(text.lines().count(), 12);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn kernel_memory_and_regularity_tables() {
    let o = bgm(&["kernel", "--family", "exponential", "--t", "1", "--grid", "-1:1:0.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("t,u,k\n"));
    let k: f64 = text.lines().nth(1).unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert!((k + 0.29248626441).abs() < 1e-9);

    let o = bgm(&["memory", "--family", "stable:alpha=0.5", "--n", "20"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stderr).unwrap().contains("short-range"));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 21);

    let o = bgm(&["regularity", "--family", "stable:alpha=0.5", "--points", "9"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("a,g,fit_exponent\n"));
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("run.conf");
    fs::write(&conf, "family=exponential\ngrid=0:2:1\nn_paths=5\nseed=3\n").unwrap();
    let o = bgm(&["--config", s(&conf), "simulate", "--n-paths", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 1 + 2 * 3);

    fs::write(&conf, "family=exponential\ngrid=0:2:1\ncolour=blue\n").unwrap();
    let o = bgm(&["--config", s(&conf), "cov"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stderr).unwrap().contains("unknown key `colour`"));

    fs::write(&conf, "not a pair\n").unwrap();
    assert_eq!(code(&bgm(&["--config", s(&conf), "catalog"])), 2);
    assert_eq!(code(&bgm(&["--config", "/nonexistent/bgm.conf", "catalog"])), 2);
}

#[test]
fn shipped_configs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in ["fbm_h025", "exponential", "ml_integral"] {
        let conf = configs().join(format!("{name}.conf"));
        let cov = dir.path().join(format!("{name}.cov.csv"));
        let paths = dir.path().join(format!("{name}.paths.csv"));
        assert_eq!(code(&bgm(&["--config", s(&conf), "cov", "--out", s(&cov)])), 0);
        assert_eq!(code(&bgm(&["--config", s(&conf), "simulate", "--out", s(&paths)])), 0);
        let o = bgm(&["validate", "--against", s(&cov), "--paths", s(&paths)]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let table = String::from_utf8(o.stdout).unwrap();
        assert!(table.starts_with("t,s,empirical,analytic,std_error,z,pass\n"));
    }
    let conf = configs().join("ou_exponential.conf");
    let cov = dir.path().join("ou.cov.csv");
    let paths = dir.path().join("ou.paths.csv");
    assert_eq!(code(&bgm(&["--config", s(&conf), "ou", "--analytic", "--grid", "0:2:0.5", "--out", s(&cov)])), 0);
    assert_eq!(code(&bgm(&["--config", s(&conf), "ou", "--out", s(&paths)])), 0);
    let meta = fs::read_to_string(dir.path().join("ou.paths.csv.meta")).unwrap();
    assert!(meta.starts_with("process=ou\n"));
    let o = bgm(&["validate", "--against", s(&cov), "--paths", s(&paths)]);
    assert_eq!(code(&o), 0, "ou: {}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn mismatched_validation_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cov = dir.path().join("cov.csv");
    let paths = dir.path().join("paths.csv");
    assert_eq!(code(&bgm(&["cov", "--family", "stable:alpha=0.5", "--grid", "0:2:1", "--out", s(&cov)])), 0);
    assert_eq!(
        code(&bgm(&["simulate", "--family", "exponential", "--grid", "0:2:1", "--n-paths", "20000", "--out", s(&paths)])),
        0
    );
    let o = bgm(&["validate", "--against", s(&cov), "--paths", s(&paths)]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&bgm(&["validate", "--against", s(&cov)])), 2);
}

#[test]
fn validate_suite_for_one_spec() {
    let o = bgm(&["validate", "--family", "exponential", "--flavor", "derivative"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("check,subject,value,threshold,pass,detail\n"));
    for name in ["ibp,", "route,", "sign,"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "no {name} rows");
    }
    assert!(text.lines().skip(1).all(|l| l.contains(",true,")));
}
