use super::*;

fn small_reference() -> ReferenceConfig {
    ReferenceConfig { half_width: 6.0, count: 32, horizon: 1.0, ..ReferenceConfig::default() }
}

#[test]
fn empty_suite_passes() {
    let rep = run_suite(&Suite::default()).unwrap();
    assert!(rep.checks.is_empty());
    assert!(rep.summary.ok);
}

#[test]
fn default_suite_names_every_property() {
    let s = Suite::default_suite();
    assert_eq!(s.checks.len(), 18);
    assert_eq!(s.reference, ReferenceConfig::default());
    assert!(s.checks.iter().all(|c| !c.informational));
}

#[test]
fn suite_validation() {
    let dup = "[[check]]\nname = \"a\"\ntag = \"kernel\"\ntolerance = 1\n".repeat(2);
    assert!(Suite::from_toml(&dup).is_err());
    assert!(Suite::from_toml("[[check]]\nname = \"a\"\ntag = \"kernel\"\ntolerance = 0\n").is_err());
    assert!(Suite::from_toml("[[check]]\nname = \"a\"\ntag = \"nope\"\ntolerance = 1\n").is_err());
    assert!(Suite::from_toml("[reference]\ncolour = 1\n").is_err());
    assert!(Suite::load("/nonexistent/suite.toml").is_err());
}

#[test]
fn misconfigured_checks_are_errored_not_fatal() {
    let suite = Suite {
        reference: small_reference(),
        checks: vec![
            CheckSpec::new("no_such_check", Tag::Kernel, 1.0),
            CheckSpec::new("kernel_scaling", Tag::Kernel, 1e-6).with("colour", Param::Number(1.0)),
            CheckSpec::new("norm_scaling", Tag::Lorentz, 1e-2).with("indices", Param::Numbers(vec![3.0])),
        ],
    };
    let rep = run_suite(&suite).unwrap();
    assert_eq!(rep.summary.errored, 3);
    assert!(!rep.summary.ok);
    assert!(rep.checks.iter().all(|c| c.error.is_some() && c.measured.is_none()));
}

#[test]
fn dependency_order_and_informational_failures() {
    let mut loose = CheckSpec::new("norm_scaling", Tag::Lorentz, 1e-9);
    loose.informational = true;
    let suite = Suite {
        reference: small_reference(),
        checks: vec![loose, CheckSpec::new("kernel_scaling", Tag::Kernel, 1e-6).with("points", Param::Number(10.0))],
    };
    let rep = run_suite(&suite).unwrap();
    assert_eq!(rep.checks[0].name, "kernel_scaling");
    assert_eq!(rep.checks[0].status, Status::Passed);
    assert_eq!(rep.checks[1].status, Status::Failed);
    assert!(rep.summary.ok);
}

#[test]
fn reports_round_trip_and_repeat() {
    let suite = Suite {
        reference: small_reference(),
        checks: vec![
            CheckSpec::new("lorentz_closed_forms", Tag::Lorentz, 1e-12)
                .with("functions", Param::Number(20.0))
                .with("flatness_times", Param::Numbers(vec![0.5, 1.0, 2.0]))
                .with("flatness_tol", Param::Number(0.5)),
            CheckSpec::new("picard_convergence", Tag::Solver, 1e-8).with("amplitude", Param::Number(0.3)),
            CheckSpec::new("determinism", Tag::Oracle, 1.0)
                .with("probe", Param::Texts(vec!["picard_convergence".into()])),
        ],
    };
    let a = run_suite(&suite).unwrap();
    assert!(a.checks.iter().all(|c| c.runtime_seconds.is_some()));
    let text = a.canonical().to_json().unwrap();
    assert!(!text.contains("runtime_seconds"));
    assert_eq!(InvariantReport::from_json(&text).unwrap(), a.canonical());
    let b = run_suite(&suite).unwrap();
    assert_eq!(text, b.canonical().to_json().unwrap());
    assert_eq!(a.outcome("determinism").unwrap().measured, Some(0.0));
    assert!(a.summary.ok, "{text}");
}
