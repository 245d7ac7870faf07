use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use transjump::oracle::tv_distance;
use transjump::sinusoid::truncated_poisson_pmf;

fn transjump(args: &[&str], seed: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_transjump"));
    cmd.args(args).env_remove("TRANSJUMP_SEED");
    if let Some(s) = seed {
        cmd.env("TRANSJUMP_SEED", s);
    }
    cmd.output().expect("binary runs")
}

fn write_signal(dir: &Path) -> String {
    let path = dir.join("y.txt");
    let y: String = (0..48)
        .map(|t| {
            format!(
                "{}\n",
                2.0 * (0.8 * t as f64).cos() + 0.3 * ((t * 7919) % 13) as f64 / 13.0
            )
        })
        .collect();
    fs::write(&path, format!("# test signal\n{y}")).unwrap();
    path.display().to_string()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.display().to_string()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let signal = write_signal(dir.path());
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "run.cfg",
        &format!("paths.signal = {signal}\npaths.output = {}\nsampler.n_iter = 10\nsampler.burn_in = 2\n", out.display()),
    );
    let res = transjump(&["run", "--config", &cfg], None);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next(),
        Some("iter,k,logtarget,move,accepted,lambda,delta2")
    );
    assert_eq!(lines.count(), 10);
    let comps = fs::read_to_string(out.join("components.csv")).unwrap();
    assert_eq!(comps.lines().count(), 11);
    assert!(comps.starts_with("iter,omega_1,"));

    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with("k,count,frequency\n"));
    assert_eq!(column(&summary, 1).iter().sum::<f64>(), 8.0);
    assert!((column(&summary, 2).iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn outputs_are_byte_stable_and_seed_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let signal = write_signal(dir.path());
    let run = |name: &str, seed: Option<&str>| {
        let out = dir.path().join(name);
        let cfg = write_config(
            dir.path(),
            &format!("{name}.cfg"),
            &format!("paths.signal = {signal}\npaths.output = {}\nsampler.n_iter = 400\nsampler.burn_in = 100\n", out.display()),
        );
        assert!(transjump(&["run", "--config", &cfg], seed).status.success());
        ["trace.csv", "components.csv", "summary.csv"].map(|f| fs::read(out.join(f)).unwrap())
    };
    let a = run("a", None);
    let b = run("b", None);
    assert_eq!(a, b);
    let c = run("c", Some("12345"));
    assert_ne!(a[0], c[0]);
    assert_eq!(run("d", Some("12345")), c);
}

#[test]
fn empty_run_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "empty.cfg", "");
    let res = transjump(&["run", "--config", &cfg], None);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("paths.signal"));
}

#[test]
fn prior_only_run_matches_truncated_poisson() {
    let dir = tempfile::tempdir().unwrap();
    let signal = write_signal(dir.path());
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "prior.cfg",
        &format!(
            "paths.signal = {signal}\npaths.output = {}\nsampler.n_iter = 220000\nsampler.burn_in = 20000\n\
             model.lambda = 5\nmodel.delta2 = 100\nmodel.flat_likelihood = true\n",
            out.display()
        ),
    );
    assert!(transjump(&["run", "--config", &cfg], None).status.success());
    let freq = column(&fs::read_to_string(out.join("summary.csv")).unwrap(), 2);
    let tv = tv_distance(&freq, &truncated_poisson_pmf(5.0, 32)).unwrap();
    assert!(tv < 0.02, "tv = {tv}");
}

#[test]
fn single_replication_aggregate_equals_its_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rep");
    let cfg = write_config(
        dir.path(),
        "rep.cfg",
        &format!(
            "paths.output = {}\nsampler.n_iter = 100\nsampler.burn_in = 10\nexperiment.replications = 1\n",
            out.display()
        ),
    );
    let res = transjump(&["replicate", "--config", &cfg], None);
    assert!(
        res.status.success(),
        "{}",
        String::from_utf8_lossy(&res.stderr)
    );
    let agg = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(agg.starts_with("k,freq_corrected,freq_legacy\n"));
    assert_eq!(agg.lines().count(), 33 + 1);
    let corrected = column(
        &fs::read_to_string(out.join("rep_000/summary_corrected.csv")).unwrap(),
        2,
    );
    let legacy = column(
        &fs::read_to_string(out.join("rep_000/summary_legacy.csv")).unwrap(),
        2,
    );
    assert_eq!(column(&agg, 1), corrected);
    assert_eq!(column(&agg, 2), legacy);
    assert!(fs::read_to_string(out.join("aggregate.svg"))
        .unwrap()
        .contains("<svg"));

    let again = dir.path().join("rep2");
    let cfg2 = write_config(
        dir.path(),
        "rep2.cfg",
        &fs::read_to_string(&cfg)
            .unwrap()
            .replace(&out.display().to_string(), &again.display().to_string()),
    );
    assert!(transjump(&["replicate", "--config", &cfg2], None)
        .status
        .success());
    assert_eq!(
        fs::read(out.join("aggregate.csv")).unwrap(),
        fs::read(again.join("aggregate.csv")).unwrap()
    );
}

#[test]
fn priors_plot_emits_both_pmfs() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("priors");
    let res = transjump(
        &[
            "priors-plot",
            "--lambda",
            "5",
            "--kmax",
            "32",
            "--out",
            &out.display().to_string(),
        ],
        None,
    );
    assert!(res.status.success());
    let csv = fs::read_to_string(out.join("priors.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("k,poisson,accelerated"));
    assert_eq!(csv.lines().count(), 34);
    for col in [1, 2] {
        assert!((column(&csv, col).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let acc = column(&csv, 2);
    assert_eq!(transjump::experiment::argmax(&acc), 2);
    assert!(fs::read_to_string(out.join("priors.svg"))
        .unwrap()
        .contains(r#"version="1.1""#));
}

#[test]
fn validate_reports_and_rejects_unknown_suites() {
    let ok = transjump(&["validate", "--suite", "toy-stationarity"], None);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("PASS"));
    let bad = transjump(&["validate", "--suite", "bogus"], None);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("usage"));
}
