use std::path::Path;
use std::process::{Command, Output};

use grushin::io::read_csv;

fn grushin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_grushin")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

#[test]
fn no_arguments_prints_usage_and_exits_2() {
    let o = grushin(&[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
}

#[test]
fn kernel_at_the_reference_point_is_positive() {
    let o = grushin(&["kernel", "--N", "1", "--k", "1", "--t", "1", "--x", "0", "--x0", "0", "--y", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let k: f64 = stdout(&o).trim().parse().unwrap();
    assert!(k > 0.0 && k.is_finite());
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["bogus"],
        vec!["kernel", "--t", "1", "--x", "0", "--x0", "0"],
        vec!["kernel", "--t", "1", "--x", "0,1", "--x0", "0", "--y", "0"],
        vec!["kernel", "--rho", "1", "--t", "1", "--x", "0", "--x0", "0", "--y", "0"],
        vec!["evolve", "--datum", "nope", "--t", "1"],
        vec!["mc", "--t", "1", "--paths", "10"],
        vec!["verify", "--suite", "/nonexistent/suite.toml"],
    ] {
        assert_eq!(grushin(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn config_file_rejects_unknown_keys_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[model]\nrho = 3.0\nsigma = 1.0\n").unwrap();
    let o = grushin(&["kernel", "--config", path(&bad), "--t", "1", "--x", "0", "--x0", "0", "--y", "0"]);
    assert_eq!(o.status.code(), Some(2));

    let good = dir.path().join("good.toml");
    std::fs::write(&good, "[model]\nk = 2\n").unwrap();
    let two = grushin(&["kernel", "--config", path(&good), "--t", "1", "--x", "0", "--x0", "0", "--y", "0,0"]);
    assert_eq!(two.status.code(), Some(0));
    let one = grushin(&["kernel", "--config", path(&good), "--k", "1", "--t", "1", "--x", "0", "--x0", "0", "--y", "0"]);
    assert_eq!(one.status.code(), Some(0));
}

#[test]
fn evolve_then_lorentz_on_the_written_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("u.csv");
    let diag = dir.path().join("d.jsonl");
    let o = grushin(&[
        "evolve", "--datum", "gaussian", "--t", "0.5", "--grid", "6:32", "--out", path(&out), "--diagnostics", path(&diag),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# config: {"));
    let u = read_csv(text.as_bytes()).unwrap();
    let record: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&diag).unwrap().trim()).unwrap();
    assert_eq!(record["max"].as_f64().unwrap(), u.max());
    assert_eq!(record["config"]["grid"]["count"], 32);

    let profile = dir.path().join("p.csv");
    let o = grushin(&["lorentz", "--input", path(&out), "--p", "3", "--q", "inf", "--profile", path(&profile)]);
    assert_eq!(o.status.code(), Some(0));
    let norm: f64 = stdout(&o).trim().parse().unwrap();
    assert!((norm - record["norms"]["weak_p"].as_f64().unwrap()).abs() < 1e-12);
    let lines: Vec<String> = std::fs::read_to_string(&profile).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[1], "t,f_star,f_star_star");
    assert!(lines.len() > 2 && lines.len() <= 2 + u.grid().len());
}

#[test]
fn solve_writes_norms_report_and_plot() {
    let dir = tempfile::tempdir().unwrap();
    let (norms, report, svg) = (dir.path().join("n.csv"), dir.path().join("r.json"), dir.path().join("d.svg"));
    let args = [
        "solve", "--datum", "homogeneous", "--epsilon", "0.1", "--grid", "8:32", "--T", "4", "--norms", path(&norms),
        "--report", path(&report), "--plot", path(&svg),
    ];
    let o = grushin(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&norms).unwrap();
    assert!(text.lines().any(|l| l == "t,norm_p_weak,norm_r_weak,linf,mass,energy"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 41);
    let r: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r["convergence"]["status"], "converged");
    assert!(r["fixed_point_residual"].as_f64().unwrap() < 1e-8);
    assert!(std::fs::read_to_string(&svg).unwrap().contains("<desc>"));

    let first = std::fs::read(&norms).unwrap();
    assert_eq!(grushin(&args).status.code(), Some(0));
    assert_eq!(std::fs::read(&norms).unwrap(), first);
}

#[test]
fn mc_is_reproducible_and_respects_thread_cap() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, h) = (dir.path().join("a.csv"), dir.path().join("b.csv"), dir.path().join("h.csv"));
    let run = |out: &Path, threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_grushin"))
            .args(["mc", "--t", "0.5", "--paths", "4096", "--dt", "0.02", "--seed", "11", "--start", "0.5,-0.5"])
            .args(["--out", path(out), "--histogram", path(&h), "--grid", "4:16"])
            .env("GRUSHIN_THREADS", threads)
            .output()
            .unwrap()
    };
    assert_eq!(run(&a, "1").status.code(), Some(0));
    assert_eq!(run(&b, "3").status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let hist = read_csv(std::fs::read_to_string(&h).unwrap().as_bytes()).unwrap();
    assert!((hist.integral() - 1.0).abs() < 0.05);
    assert_eq!(run(&a, "zero").status.code(), Some(2));
}

const SMALL_SUITE: &str = "[reference]\ncount = 32\n\n[[check]]\nname = \"kernel_scaling\"\ntag = \"kernel\"\ntolerance = 1e-6\nparams = { points = 10, abs_tol = 1e-12 }\n";

#[test]
fn verify_exit_code_and_report_identity() {
    let dir = tempfile::tempdir().unwrap();
    let suite = dir.path().join("s.toml");
    std::fs::write(&suite, SMALL_SUITE).unwrap();
    let (r1, r2) = (dir.path().join("r1.json"), dir.path().join("r2.json"));
    assert_eq!(grushin(&["verify", "--suite", path(&suite), "--report", path(&r1)]).status.code(), Some(0));
    assert_eq!(grushin(&["verify", "--suite", path(&suite), "--report", path(&r2)]).status.code(), Some(0));
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r2).unwrap());

    std::fs::write(&suite, SMALL_SUITE.replace("1e-6", "1e-30")).unwrap();
    assert_eq!(grushin(&["verify", "--suite", path(&suite)]).status.code(), Some(1));
}
