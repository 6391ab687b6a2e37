mod common;

use std::fs;

use biphoton::config::{parse_config, RunConfig};
use biphoton::dispersion::SellmeierSet;
use common::{read_json, run_cli, schema_errors};

fn stderr(out: &std::process::Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// A small grid keeps these runs fast.
const SMALL: &str = r#"{"grid": {"points_per_axis": 256}, "hom": {"points": 801}}"#;

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["spectrum"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"));
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run_cli(&[], dir.path()).status.code(), Some(1));
}

#[test]
fn seedless_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["report", "--seedless"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("--seedless"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["jsa", "marginals", "hom", "shg-curve", "pm-temp", "report"] {
        assert!(text.contains(name), "{name} missing from help");
    }
}

#[test]
fn print_defaults_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_cli(&["--print-defaults"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(parse_config(&text).unwrap(), RunConfig::default());
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(schema_errors("config", &value), Vec::<String>::new());
}

#[test]
fn config_errors_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    for (doc, needle) in [
        (
            r#"{"grid": {"points_per_axis": 63}}"#,
            "grid.points_per_axis",
        ),
        (r#"{"crystal": {"lenght_mm": 10}}"#, "lenght_mm"),
        ("{\"grid\": ", "byte"),
    ] {
        fs::write(dir.path().join("c.json"), doc).unwrap();
        let out = run_cli(&["report", "--config", "c.json"], dir.path());
        assert_eq!(out.status.code(), Some(1), "{doc}");
        assert!(stderr(&out).contains(needle), "{doc}: {}", stderr(&out));
    }
    let out = run_cli(&["report", "--config", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_two() {
    // A grating period with no degenerate point in the search bracket.
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"crystal": {"poling_period_um": 40.0, "qpm_sign": "+1"}}"#,
    )
    .unwrap();
    let out = run_cli(&["pm-temp", "--config", "c.json"], dir.path());
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn outputs_have_headers_and_match_schemas() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL).unwrap();
    for cmd in ["jsa", "marginals", "hom", "shg-curve", "pm-temp", "report"] {
        let out = run_cli(&[cmd, "--config", "c.json", "--out", "out"], dir.path());
        assert!(out.status.success(), "{cmd}: {}", stderr(&out));
    }
    let out = dir.path().join("out");
    for (csv, header) in [
        ("jsa.csv", "signal_nm\\idler_nm,"),
        (
            "marginals.csv",
            "wavelength_nm,omega_rad_per_ps,signal,idler,coincidence\n",
        ),
        ("hom.csv", "delay_ps,coincidence\n"),
        ("shg_curve.csv", "p1_W,pc_W,p2_W,rm,residual\n"),
    ] {
        let text = fs::read_to_string(out.join(csv)).unwrap();
        assert!(text.starts_with(header), "{csv}");
        assert!(!text.contains('\r'));
        let width = text.lines().next().unwrap().split(',').count();
        assert!(text.lines().all(|l| l.split(',').count() == width), "{csv}");
    }
    let jsa_rows = fs::read_to_string(out.join("jsa.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(jsa_rows, 257);
    for name in ["jsa", "marginals", "hom", "shg_curve", "pm_temp", "report"] {
        let doc = read_json(&out.join(format!("{name}.json")));
        assert_eq!(schema_errors(name, &doc), Vec::<String>::new(), "{name}");
    }
}

#[test]
fn sellmeier_file_is_resolved_next_to_config() {
    let dir = tempfile::tempdir().unwrap();
    let sub = dir.path().join("cfg");
    fs::create_dir(&sub).unwrap();
    let set = serde_json::to_value(SellmeierSet::ktp()).unwrap();
    assert_eq!(schema_errors("sellmeier", &set), Vec::<String>::new());
    fs::write(sub.join("ktp.json"), set.to_string()).unwrap();
    fs::write(
        sub.join("c.json"),
        r#"{"sellmeier_file": "ktp.json", "grid": {"points_per_axis": 128}}"#,
    )
    .unwrap();
    let out = run_cli(
        &["pm-temp", "--config", "cfg/c.json", "--out", "out"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("degenerate temperature"));
}

#[test]
fn fixed_temperature_is_used() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("c.json"),
        r#"{"crystal": {"temperature_c": 64}, "grid": {"points_per_axis": 128}}"#,
    )
    .unwrap();
    let out = run_cli(
        &["pm-temp", "--config", "c.json", "--out", "out"],
        dir.path(),
    );
    assert!(out.status.success());
    let pm = read_json(&dir.path().join("out/pm_temp.json"));
    assert_eq!(pm["operating_temperature_c"].as_f64(), Some(64.0));
    assert_eq!(pm["temperature_source"], "config");
    assert!(pm["dk0_at_operating_rad_per_um"].as_f64().unwrap().abs() > 1e-6);
}

#[test]
fn identical_configs_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), SMALL).unwrap();
    for out in ["a", "b"] {
        for cmd in ["jsa", "report"] {
            let o = run_cli(&[cmd, "--config", "c.json", "--out", out], dir.path());
            assert!(o.status.success());
        }
    }
    for name in ["jsa.csv", "jsa.json", "report.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}
