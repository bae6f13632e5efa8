use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_classe-forge"));
    c.env_remove("CLASSE_FORGE_OUT");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("--version").output().unwrap().status.code(), Some(0));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_config_exits_one_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[design]\nq_factor = 1.5\n").unwrap();
    let o = run(&["synth", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("design.q_factor"));
}

#[test]
fn unknown_config_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth", "--set", "design.qq=3"], dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn synth_prints_components_without_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["synth"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for key in ["r_load_ohm", "c3_F", "l7_H", "cs_F", "l6_H", "duty"] {
        assert!(text.contains(&format!("{key} = ")), "{key} missing in {text}");
    }
    assert!(!dir.path().join("run_manifest.json").exists());
}

#[test]
fn set_override_changes_synthesis() {
    let dir = tempfile::tempdir().unwrap();
    let a = stdout(&run(&["synth"], dir.path()));
    let b = stdout(&run(&["synth", "--set", "design.q_factor=8"], dir.path()));
    let l7 = |t: &str| t.lines().find(|l| l.starts_with("l7_H")).unwrap().to_owned();
    assert_ne!(l7(&a), l7(&b));
}

#[test]
fn sim_writes_outputs_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["sim", "--jobs", "2"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let wave = std::fs::read_to_string(dir.path().join("waveform.csv")).unwrap();
    assert!(wave.lines().count() > 1000);
    assert!(dir.path().join("metrics.csv").exists());
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run_manifest.json")).unwrap())
            .unwrap();
    assert_eq!(m["subcommand"], "sim");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["jobs"], 2);
    let files: Vec<_> = m["files"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(files.contains(&"waveform.csv") && files.contains(&"metrics.csv"));
}

#[test]
fn output_dir_falls_back_to_env() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["power-table", "--set", "sweep.n_steps=3"])
        .env("CLASSE_FORGE_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let table = std::fs::read_to_string(dir.path().join("power_table.csv")).unwrap();
    assert!(table.starts_with("level,vramp_V,vcon_V,pout_W,pout_dBm"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn strict_ruggedness_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["vswr-sweep", "--set", "sweep.phases=4", "--set", "sweep.protection=\"off\""];
    let lenient = run(&args, dir.path());
    assert_eq!(lenient.status.code(), Some(0));
    assert!(stdout(&lenient).contains("FAIL"));
    let mut strict = args.to_vec();
    strict.push("--strict");
    let o = run(&strict, dir.path());
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn strict_passes_on_matched_nominal_supply() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "vswr-sweep",
            "--strict",
            "--set",
            "sweep.vswr=1",
            "--set",
            "sweep.phases=2",
            "--set",
            "sweep.supplies=[1.8]",
            "--set",
            "sweep.protection=\"off\"",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).starts_with("PASS"));
    let csv = std::fs::read_to_string(dir.path().join("vswr_sweep.csv")).unwrap();
    assert!(csv.starts_with("vswr,phase_deg,supply_V,protection,v_drain_peak_V,pass\n"));
}
