use std::path::{Path, PathBuf};
use std::process::Command;

use effint::catalog::GALLERY;
use effint_cli::config::{builtin_config, parse, schema_json, to_config, to_json};
use effint_cli::{run, RunOutput};

fn effint(args: &[&str]) -> RunOutput {
    run(std::iter::once("effint").chain(args.iter().copied()))
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

/// Compares with a checked-in file, or rewrites it when `UPDATE_GOLDEN` is set.
fn golden(name: &str, actual: &str) {
    let path = crate_dir().join("tests/golden").join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1", path.display()));
    assert!(expected == actual, "{name} differs from its golden file");
}

fn verdict(out: &RunOutput) -> String {
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    v["verdict"].as_str().unwrap().to_string()
}

#[test]
fn gallery_matches_golden_files() {
    for id in GALLERY {
        let out = effint(&["gallery", id]);
        assert_eq!(out.code, 0, "{id}: {}", out.stdout);
        golden(&format!("gallery-{id}.json"), &out.stdout);
    }
}

#[test]
fn example_commands_match_golden_files() {
    let dir = crate_dir();
    let bm = dir.join("configs/bm.json");
    let trap = dir.join("configs/cantor_trap.json");
    std::env::set_current_dir(&dir).unwrap();
    let out = effint(&["check-subspace", "configs/bm.json", "configs/cantor_trap.json"]);
    assert_eq!((verdict(&out).as_str(), out.code), ("true", 0));
    golden("check-subspace-bm-trap.json", &out.stdout);
    let out = effint(&["energy", "--system", "configs/bm.json", "--tent", "-1", "0", "1"]);
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert!((v["results"]["value"].as_f64().unwrap() - 1.0).abs() <= 1e-9);
    golden("energy-bm-tent.json", &out.stdout);
    assert!(bm.exists() && trap.exists());
}

#[test]
fn exit_codes_follow_the_verdict() {
    assert_eq!(effint(&["check-subspace", "builtin:brownian", "builtin:cantor-trap"]).code, 0);
    let out = effint(&["check-subspace", "builtin:cantor-trap", "builtin:brownian"]);
    assert_eq!((verdict(&out).as_str(), out.code), ("false", 1));
    let out = effint(&["core-check", "builtin:fat-cantor", "--generator", "cantor-shift"]);
    assert_eq!((verdict(&out).as_str(), out.code), ("undecidable", 2));
    let out = effint(&["validate", "no/such/file.json"]);
    assert_eq!((verdict(&out).as_str(), out.code), ("error", 3));
    assert!(!out.stderr.is_empty());
    let out = effint(&["merge-plan", "builtin:cantor-trap", "--plan", "gap-end-to-ray"]);
    assert_eq!(out.code, 1);
    assert!(out.stdout.contains("invalid pre-merging point"));
    assert_eq!(effint(&["validate", "builtin:split-at-zero"]).code, 1);
    assert_eq!(effint(&["frobnicate"]).code, 3);
    assert_eq!(effint(&["--help"]).code, 0);
}

#[test]
fn parse_errors_name_line_and_field() {
    let dir = std::env::temp_dir().join(format!("effint-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&to_json(&builtin_config("cantor-trap").unwrap())).unwrap();
    v["entries"][1]["spec"]["fractions"]["value"] = "one third".into();
    let path = dir.join("bad.json");
    std::fs::write(&path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    let out = effint(&["validate", path.to_str().unwrap()]);
    assert_eq!(out.code, 3);
    assert!(out.stderr.contains("at `entries[1]`") && out.stderr.contains("\"one third\""), "{}", out.stderr);
    assert!(out.stderr.contains("line "), "{}", out.stderr);
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn shipped_configs_are_current_and_round_trip() {
    for (name, file) in [
        ("brownian", "bm"),
        ("cantor-trap", "cantor_trap"),
        ("unit-mass-gaps", "unit_mass_gaps"),
        ("fat-cantor", "fat_cantor"),
        ("split-at-zero", "split_at_zero"),
        ("harmonic-chain", "harmonic_chain"),
        ("double-chain", "double_chain"),
        ("bessel", "bessel"),
    ] {
        let text = std::fs::read_to_string(crate_dir().join(format!("configs/{file}.json"))).unwrap();
        assert_eq!(text, effint(&["export", name]).stdout, "{file}.json is stale");
        let loaded = parse(file, &text).unwrap();
        assert_eq!(to_json(&loaded.config), text);
        let again = parse(file, &to_json(&to_config(&loaded.system))).unwrap();
        assert_eq!(again.system, loaded.system);
    }
}

#[test]
fn schema_file_is_current() {
    let text = std::fs::read_to_string(crate_dir().join("schema/config.schema.json")).unwrap();
    assert_eq!(text, schema_json());
}

#[test]
fn reports_are_deterministic_across_runs_and_threads() {
    let one = effint(&["gallery", "--all", "--threads", "1"]);
    let four = effint(&["gallery", "--all", "--threads", "4"]);
    assert_eq!(one.code, 0, "{}", one.stdout);
    assert_eq!(one, four);
    assert_eq!(one, effint(&["gallery", "--all", "--threads", "1"]));
}

#[test]
fn config_directory_variable_resolves_relative_paths() {
    let out = Command::new(env!("CARGO_BIN_EXE_effint"))
        .args(["check-subspace", "bm.json", "cantor_trap.json"])
        .env("EFFINT_CONFIG_DIR", crate_dir().join("configs"))
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn timing_is_reported_only_on_request() {
    assert!(!effint(&["validate", "builtin:brownian"]).stdout.contains("timing_ms"));
    assert!(effint(&["validate", "builtin:brownian", "--timing"]).stdout.contains("timing_ms"));
}

#[test]
fn every_command_runs_on_shipped_configs() {
    let dir = crate_dir().join("configs");
    let c = |f: &str| dir.join(f).to_str().unwrap().to_string();
    let (bm, trap, bessel) = (c("bm.json"), c("cantor_trap.json"), c("bessel.json"));
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["validate", &trap], 0),
        (vec!["check-equal", &bm, &trap], 1),
        (vec!["shrink", &bm, "--shrink", "off-cantor"], 0),
        (vec!["merge-minimal", &trap], 0),
        (vec!["merge-maximal", &trap], 0),
        (vec!["merge-plan", &trap, "--plan", "ray-to-first-gap"], 0),
        (vec!["pipeline", &bessel, "--shrink", "thinned"], 0),
        (vec!["pipeline", &bm, "--shrink", "half-window"], 0),
        (vec!["f-subspace", &trap, "--generator", "cantor-shift"], 0),
        (vec!["core-check", &trap, "--generator", "lebesgue"], 1),
        (vec!["core-check", &trap, "--generator", "cantor-shift"], 0),
        (vec!["construct-core", &trap], 0),
        (vec!["same-subspace", &trap, "--first", "lebesgue", "--second", "cantor-shift"], 1),
        (vec!["energy", "--system", &trap, "--function", "tent"], 0),
        (vec!["merge-plan", &trap, "--plan", "missing"], 3),
    ];
    for (args, code) in cases {
        let out = effint(&args);
        assert_eq!(out.code, code, "{args:?}: {}", out.stdout);
        assert_eq!(effint(&args), out, "{args:?} is not deterministic");
    }
    assert!(Path::new(&bm).exists());
}
