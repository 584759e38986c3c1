use std::fs;
use std::path::Path;
use std::process::Command;

use proptest::prelude::*;
use serde_json::Value;
use stable_lab::cli::{self, apply_override, ExperimentConfig, ExperimentKind, ExperimentReport, Outcome};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stable-lab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn without_clock(path: &Path) -> Value {
    let mut v: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    v
}

const SMALL_SWEEP: &str = "experiment = \"matrix-sweep\"\nseed = 42\n[matrix]\ntrials = 2000\ndims = [2, 3]\n";

#[test]
fn unknown_key_exits_2_with_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "experiment = \"holder\"\nspacnig = 0.1\n");
    let out = bin().arg("run").arg(&cfg).env("STABLE_LAB_OUT", tmp.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("spacnig"), "{err}");
}

#[test]
fn unknown_nested_key_and_bad_values_are_rejected() {
    for text in [
        "experiment = \"holder\"\n[domain]\nn = 2\nradius = 1.0\nspacing = 0.1\nradus = 2\n",
        "experiment = \"nonsense\"\n",
        "experiment = \"holder\"\n[problem]\nsolution = \"oracle\"\n",
        "experiment = \"verify-estimates\"\n[estimates]\nchecks = [\"geometrc\"]\n",
        "experiment = \"catalog-check\"\n",
    ] {
        assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
    }
}

#[test]
fn exit_codes_pass_fail_error() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = write(tmp.path(), "pass.toml", SMALL_SWEEP);
    let fail = write(
        tmp.path(),
        "fail.toml",
        "experiment = \"stability\"\n[domain]\nn = 3\nradius = 1.0\nspacing = 0.125\n\
         [problem]\nsolution = \"catalog:gelfand:n=3\"\nexpect = \"stable\"\n",
    );
    // catalog entry in the wrong dimension: a numerical-setup error after parsing
    let error = write(
        tmp.path(),
        "error.toml",
        "experiment = \"stability\"\n[domain]\nn = 2\nradius = 1.0\nspacing = 0.125\n\
         [problem]\nsolution = \"catalog:gelfand:n=3\"\n",
    );
    for (cfg, code) in [(&pass, 0), (&fail, 1), (&error, 2)] {
        let st = bin().arg("run").arg(cfg).env("STABLE_LAB_OUT", tmp.path()).status().unwrap();
        assert_eq!(st.code(), Some(code), "{}", cfg.display());
    }
    let r = ExperimentReport::from_json(&fs::read_to_string(tmp.path().join("error/report.json")).unwrap()).unwrap();
    assert_eq!(r.summary, Outcome::Error);
    assert_eq!(r.error.unwrap().code, "invalid_parameter");
    let r = ExperimentReport::from_json(&fs::read_to_string(tmp.path().join("fail/report.json")).unwrap()).unwrap();
    assert_eq!(r.summary, Outcome::Fail);
    assert!(r.checks.iter().any(|c| c.mandatory && !c.passed));
}

#[test]
fn numerical_failure_is_recorded_with_code() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Approximate);
    cfg.domain.radius = 0.9;
    cfg.domain.spacing = 0.1;
    cfg.problem.nonlinearity = Some("exp".into());
    let r = cli::run(&cfg);
    assert_eq!(r.exit_code(), 2);
    assert_eq!(r.error.unwrap().code, "invalid_parameter");
}

#[test]
fn summary_fails_iff_a_mandatory_check_fails() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Stability);
    cfg.domain = stable_lab::cli::config::DomainSpec { n: 3, radius: 1.0, spacing: 0.125, center: None };
    cfg.problem.solution = "catalog:gelfand:n=3".into();
    let r = cli::run(&cfg);
    // no expectation: the verdict is informational
    assert_eq!(r.summary, Outcome::Pass);
    assert!(r.checks.iter().all(|c| !c.mandatory));
    cfg.problem.expect = Some("unstable".into());
    let r = cli::run(&cfg);
    assert_eq!(r.summary, Outcome::Pass);
    assert!(r.checks[0].mandatory && r.checks[0].passed);
}

#[test]
fn matrix_sweep_seed_42_reports_min_margin() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::MatrixSweep);
    cfg.seed = 42;
    cfg.matrix.trials = 1_000_000;
    cfg.matrix.dims = vec![3];
    let r = cli::run(&cfg);
    assert_eq!(r.summary, Outcome::Pass);
    let s = &r.data["sweeps"][0];
    assert_eq!(s["trials"], 1_000_000);
    assert!(s["min_margin"].as_f64().unwrap() >= -1e-12);
    assert_eq!(s["violations"], 0);
}

#[test]
fn catalog_check_gelfand_9_is_unstable() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::CatalogCheck);
    cfg.catalog.targets = vec!["gelfand:n=9".into()];
    let r = cli::run(&cfg);
    assert_eq!(r.summary, Outcome::Pass);
    let e = &r.data["entries"][0];
    assert!(e["radial_lambda1"].as_f64().unwrap() < 0.0);
    assert_eq!(e["verdict"], "unstable");
}

#[test]
fn reports_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = \"verify-estimates\"\nseed = 7\n[domain]\nn = 2\nradius = 1.0\nspacing = 0.0625\n\
                [problem]\nnonlinearity = \"exp\"\nboundary = 0.0\n\
                [estimates]\nspacings = [0.125, 0.0625]\ntest_function = \"cone:0.5\"\n";
    let cfg = ExperimentConfig::from_toml_str(text).unwrap();
    cli::run_to_dir(&cfg, &tmp.path().join("a")).unwrap();
    cli::run_to_dir(&cfg, &tmp.path().join("b")).unwrap();
    assert_eq!(without_clock(&tmp.path().join("a/report.json")), without_clock(&tmp.path().join("b/report.json")));
    let a = fs::read_to_string(tmp.path().join("a/report.json")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/report.json")).unwrap();
    let strip = |s: &str| s.lines().filter(|l| !l.contains("wall_clock_seconds")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(
        fs::read(tmp.path().join("a/estimates.csv")).unwrap(),
        fs::read(tmp.path().join("b/estimates.csv")).unwrap()
    );
}

#[test]
fn parallel_jobs_use_separate_directories() {
    let tmp = tempfile::tempdir().unwrap();
    let a = write(tmp.path(), "one.toml", SMALL_SWEEP);
    let b = write(tmp.path(), "two.toml", &SMALL_SWEEP.replace("seed = 42", "seed = 43"));
    let st = bin()
        .args(["run", "--jobs", "2"])
        .arg(&a)
        .arg(&b)
        .env("STABLE_LAB_OUT", tmp.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(0));
    let one = ExperimentReport::from_json(&fs::read_to_string(tmp.path().join("out/one/report.json")).unwrap()).unwrap();
    let two = ExperimentReport::from_json(&fs::read_to_string(tmp.path().join("out/two/report.json")).unwrap()).unwrap();
    assert_eq!((one.config.seed, two.config.seed), (42, 43));
}

#[test]
fn overrides_reach_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "c.toml", SMALL_SWEEP);
    let cfg = ExperimentConfig::load(
        &p,
        &["seed=9".into(), "matrix.dims=[4]".into(), "problem.solution=catalog:gelfand:n=3".into()],
    )
    .unwrap();
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.matrix.dims, vec![4]);
    assert_eq!(cfg.problem.solution, "catalog:gelfand:n=3");
    assert!(ExperimentConfig::load(&p, &["matrix.bogus=1".into()]).is_err());
    assert!(ExperimentConfig::load(&p, &["no-equals-sign".into()]).is_err());

    let mut t = toml::Table::new();
    apply_override(&mut t, "a.b.c = 1.5").unwrap();
    assert_eq!(t["a"]["b"]["c"].as_float(), Some(1.5));
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut seen = 0;
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        let cfg = ExperimentConfig::load(&p, &[]).unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back, "{}", p.display());
        seen += 1;
    }
    assert!(seen >= 6);
}

#[test]
fn plot_series_columns() {
    let tmp = tempfile::tempdir().unwrap();

    let mut holder = ExperimentConfig::new(ExperimentKind::Holder);
    holder.domain.spacing = 1.0 / 64.0;
    holder.problem.solution = "catalog:manufactured:power:0.5,n=2".into();
    holder.emit_plot_data = true;
    let r = cli::run_to_dir(&holder, &tmp.path().join("h")).unwrap();
    assert_eq!(r.summary, Outcome::Pass);
    assert_eq!(r.series["holder"].columns, ["k", "log2_osc"]);
    let dat = fs::read_to_string(tmp.path().join("h/plot/holder.dat")).unwrap();
    assert!(dat.starts_with("# series: holder\n"));
    assert!(dat.contains("# units:"));
    let rows: Vec<Vec<f64>> = dat
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    assert!(rows.iter().all(|r| r.len() == 2));

    let mut approx = ExperimentConfig::new(ExperimentKind::Approximate);
    approx.domain.radius = 0.4;
    approx.domain.spacing = 0.05;
    approx.problem.nonlinearity = Some("exp".into());
    approx.approximation.epsilon_schedule = Some(vec![0.5, 0.25]);
    let r = cli::run_to_dir(&approx, &tmp.path().join("a")).unwrap();
    assert_eq!(r.series["distance"].columns, ["epsilon", "w12_distance"]);
    assert_eq!(r.series["distance"].rows.len(), 2);
    assert!(tmp.path().join("a/trace/trace.json").exists());

    let mut est = ExperimentConfig::new(ExperimentKind::VerifyEstimates);
    est.problem.solution = "catalog:manufactured:quadratic,n=2".into();
    est.estimates.checks = vec!["identity-chain".into()];
    est.estimates.spacings = vec![0.125, 0.0625];
    est.estimates.test_function = "cone:0.5".into();
    let r = cli::run_to_dir(&est, &tmp.path().join("e")).unwrap();
    assert_eq!(r.series["refinement_d1_xx"].columns, ["h", "residual"]);

    let out = bin().arg("plot").arg(tmp.path().join("e/report.json")).arg("refinement_d1_xx").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(tmp.path().join("e/plot/refinement_d1_xx.dat").exists());
    let out = bin().arg("plot").arg(tmp.path().join("e/report.json")).arg("missing").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown series"));
    let err = cli::plot_data(&r, "missing").unwrap_err();
    assert_eq!(err.code(), "unknown_series");
}

#[test]
fn catalog_list_and_sweep_commands() {
    let out = bin().args(["catalog", "list"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("gelfand:n="));
    let out = bin().args(["sweep-matrix", "--trials", "1000", "--seed", "3", "--dims", "2..4"]).output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 4);
    let out = bin().args(["sweep-matrix", "--dims", "two"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["sweep-matrix", "--trials", "10", "--seed", &u64::MAX.to_string()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_directory_precedence() {
    let cfg = ExperimentConfig::new(ExperimentKind::Holder);
    let p = Path::new("x/my-run.toml");
    assert_eq!(cli::resolve_output(&cfg, Some(p), Some(Path::new("flag"))), Path::new("flag"));
    let mut with = cfg.clone();
    with.output = Some("cfgdir".into());
    assert_eq!(cli::resolve_output(&with, Some(p), None), Path::new("cfgdir"));
    assert!(cli::resolve_output(&cfg, Some(p), None).ends_with("my-run"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_round_trip(
        n in 2usize..=5,
        radius in 0.1f64..4.0,
        frac in 0.01f64..0.5,
        seed in 0..=i64::MAX as u64,
        plot in any::<bool>(),
        levels in 3usize..8,
        alpha in proptest::option::of(0.05f64..1.0),
    ) {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Holder);
        cfg.domain.n = n;
        cfg.domain.radius = radius;
        cfg.domain.spacing = radius * frac;
        cfg.seed = seed;
        cfg.emit_plot_data = plot;
        cfg.holder.levels = levels;
        cfg.holder.expected_alpha = alpha;
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
