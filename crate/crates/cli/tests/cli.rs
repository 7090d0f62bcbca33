use std::path::Path;
use std::process::{Command, Output};

fn noisecalc(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_noisecalc")).args(args).current_dir(cwd).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn list_models_names_every_family() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisecalc(&["list-models"], dir.path());
    assert!(o.status.success());
    for name in ["constant", "isotropic", "cross_coupled", "separable", "het_diffusion", "scaled_bm"] {
        assert!(stdout(&o).lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn list_configs_shows_experiments() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisecalc(&["list-configs"], dir.path());
    assert!(o.status.success());
    assert!(stdout(&o).contains("density_negative"));
    assert!(stdout(&o).contains("hetdiff"));
}

#[test]
fn passing_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisecalc(&["scaledbm", "--out", "sbm"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS scaled_bm"));
    for f in ["report.json", "scaled_bm.csv"] {
        assert!(dir.path().join("sbm").join(f).is_file(), "{f} missing");
    }
}

#[test]
fn default_output_dir_is_named_after_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisecalc(&["integrals", "--subtype", "deterministic", "--format", "json"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("out/deterministic/report.json").is_file());
    assert!(!dir.path().join("out/deterministic/deterministic.csv").exists());
}

#[test]
fn failing_threshold_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = noisecalc(&["scaledbm", "--out", "o", "--set", "thresholds.max_deviation=0.0"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("FAIL scaled_bm"));
}

#[test]
fn errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad_key = noisecalc(&["scaledbm", "--out", "o", "--set", "scaledbm.bogus=1"], dir.path());
    assert_eq!(bad_key.status.code(), Some(2));
    let bad_preset = noisecalc(&["audit", "--preset", "scaled_bm"], dir.path());
    assert_eq!(bad_preset.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_preset.stderr).contains("not 'audit'"));
}

#[test]
fn config_file_seed_and_threads_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("mine.toml");
    std::fs::write(
        &cfg,
        r#"
experiment = "scaledbm"
master_seed = 5
[scaledbm]
level = 10
interpretations = [0.0, 1.0]
[scaledbm.model]
name = "scaled_bm"
params = { family = "linear", c0 = 1.0, c1 = 0.0 }
[thresholds]
max_deviation = 1e-12
by_parts = 1e-12
"#,
    )
    .unwrap();
    let run = |seed: &str, threads: &str, out: &str| {
        let o = noisecalc(
            &["scaledbm", "--config", cfg.to_str().unwrap(), "--seed", seed, "--threads", threads, "--out", out],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        std::fs::read_to_string(dir.path().join(out).join("report.json")).unwrap()
    };
    let a = run("9", "1", "a");
    let b = run("9", "2", "b");
    let c = run("10", "1", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(a.contains("\"master_seed\": 9"));
}
