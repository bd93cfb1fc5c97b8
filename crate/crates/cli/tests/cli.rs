use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use impactlab_cli::parse_config;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impactlab"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .env_remove("IMPACTLAB_OUT")
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn theory_output_is_deterministic_and_ignores_the_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    let args = ["theory", "--curve", "sril", "--grid", "1:1000:log"];
    for dir in [&a, &b] {
        assert_eq!(run(dir, &args).status.code(), Some(0));
    }
    let mut seeded = args.to_vec();
    seeded.extend(["--seed", "999"]);
    assert_eq!(run(&c, &seeded).status.code(), Some(0));

    let first = fs::read(a.join("theory.csv")).unwrap();
    assert_eq!(first, fs::read(b.join("theory.csv")).unwrap());
    assert_eq!(first, fs::read(c.join("theory.csv")).unwrap());
    let text = String::from_utf8(first).unwrap();
    assert!(text.starts_with("t,q,mean_dp,var_dp,stderr,n_paths,source\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0,theory")));
}

#[test]
fn resolved_config_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    fs::write(
        &cfg,
        "# cutoff run\nnu = 0.02\nprior = cutoff\nnu_bar = 0.3\ngrid = 1:50:lin\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    let o = run(
        &out,
        &[
            "theory",
            "--config",
            cfg.to_str().unwrap(),
            "--curve",
            "crossover",
            "--set",
            "theta=2",
        ],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let resolved = fs::read_to_string(out.join("config.resolved")).unwrap();
    let parsed = parse_config(&resolved).unwrap();
    assert_eq!(parsed.nu, 0.02);
    assert_eq!(parsed.theta, 2.0);
    assert_eq!(parsed.prior, "cutoff");
    assert_eq!(parsed.serialize(), resolved);
    let summary = fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("status=pass"));
    assert!(summary.ends_with(&resolved));
}

#[test]
fn seed_flag_overrides_set() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["theory", "--set", "seed=5", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0));
    let resolved = fs::read_to_string(tmp.path().join("config.resolved")).unwrap();
    assert!(resolved.lines().any(|l| l == "seed=7"));
}

#[test]
fn monte_carlo_csv_is_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let common = ["impact", "--set", "n_paths=3000", "--set", "t_max=200", "--seed", "3"];
    let mut bodies = Vec::new();
    for w in ["1", "4"] {
        let dir = tmp.path().join(w);
        let mut args = common.to_vec();
        args.extend(["--workers", w]);
        let o = run(&dir, &args);
        assert!(matches!(o.status.code(), Some(0 | 1)), "{}", stderr(&o));
        bodies.push(fs::read(dir.join("impact_mc.csv")).unwrap());
    }
    assert_eq!(bodies[0], bodies[1]);
}

#[test]
fn validate_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert_eq!(summary.matches(" PASS").count(), 3);
}

#[test]
fn failed_tolerance_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(
        tmp.path(),
        &[
            "impact",
            "--set",
            "n_paths=2000",
            "--set",
            "t_max=200",
            "--set",
            "expect_exponent=2",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(tmp.path().join("summary.txt")).unwrap();
    assert!(summary.contains("status=fail"));
}

#[test]
fn config_errors_name_key_and_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bad.cfg");
    fs::write(&cfg, "nu = 0.1\n\nn_paths = lots\n").unwrap();
    let o = run(&tmp.path().join("o"), &["impact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let line = stderr(&o);
    assert!(line.starts_with("error kind=type_mismatch key=n_paths "), "{line}");
    assert!(line.contains("line 3"), "{line}");

    let o = run(&tmp.path().join("o"), &["impact", "--set", "nu=1.2"]);
    assert_eq!(o.status.code(), Some(2));
    let line = stderr(&o);
    assert!(line.starts_with("error kind=constraint key=nu "), "{line}");

    let o = run(&tmp.path().join("o"), &["impact", "--set", "speed=3"]);
    assert!(stderr(&o).starts_with("error kind=unknown_key key=speed "));
}

#[test]
fn model_preconditions_surface_as_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(tmp.path(), &["kyle", "--set", "flow=unit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("error kind=usage"));
}
