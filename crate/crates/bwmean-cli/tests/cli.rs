//! End-to-end tests against the built binary: exit codes, header discipline,
//! reproducibility from the embedded config, and the documented verdicts.

use std::path::Path;
use std::process::{Command, Output};

fn bwm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bwm"))
}

fn run(args: &[&str]) -> Output {
    bwm().args(args).output().expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

/// All lines except the single timestamp line (CSV `# timestamp=` comment or
/// JSON `"timestamp":` member).
fn without_timestamp(text: &str) -> Vec<String> {
    let lines: Vec<String> = text
        .lines()
        .filter(|l| !l.starts_with("# timestamp=") && !l.trim_start().starts_with("\"timestamp\""))
        .map(str::to_string)
        .collect();
    assert_eq!(
        text.lines().count(),
        lines.len() + 1,
        "expected exactly one timestamp line"
    );
    lines
}

const EXPO: &str = "family=exponential rate=1";

#[test]
fn expand_emits_versioned_header_and_rows() {
    let out = run(&["expand", "--dist", EXPO, "--n", "50", "--p", "0.3", "--grid", "-2:2:1"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.starts_with("# schema_version=1\n# command=expand\n"));
    assert!(text.contains("# cfg dist=family=exponential rate=1\n"));
    assert!(text.contains("# cfg q=4\n"));
    assert!(text.contains("\nx,cdf\n"));
    // schema + command + 6 cfg + timestamp, then the column header and 5 grid rows
    assert_eq!(text.lines().count(), 9 + 1 + 5);
}

#[test]
fn rerun_from_embedded_config_is_byte_identical_modulo_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let out = run(&[
        "convergence",
        "--dist",
        EXPO,
        "--p",
        "0.3",
        "--q",
        "4",
        "--sizes",
        "50,100,200",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text1 = std::fs::read_to_string(&first).unwrap();

    // reconstruct a config file from the embedded block
    let mut cfg = String::from("[convergence]\n");
    for line in text1.lines() {
        if let Some(kv) = line.strip_prefix("# cfg ") {
            cfg.push_str(kv);
            cfg.push('\n');
        }
    }
    let cfg_path = dir.path().join("rerun.cfg");
    std::fs::write(&cfg_path, &cfg).unwrap();

    let second = dir.path().join("second.csv");
    let out = run(&[
        "convergence",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text2 = std::fs::read_to_string(&second).unwrap();
    assert_eq!(without_timestamp(&text1), without_timestamp(&text2));
}

#[test]
fn convergence_fitted_slope_sits_in_the_documented_band() {
    let out = run(&["convergence", "--dist", EXPO, "--p", "0.3", "--q", "4"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    let header = "n,p,q,family,supError,scaledError,fittedSlope";
    let mut saw_rows = false;
    let mut in_table = false;
    for line in text.lines() {
        if line == header {
            in_table = true;
            continue;
        }
        if !in_table || line.is_empty() {
            continue;
        }
        let slope: f64 = line.split(',').nth(6).unwrap().parse().unwrap();
        assert!(
            (-1.7..=-1.3).contains(&slope),
            "fitted slope {slope} outside [-1.7, -1.3]"
        );
        saw_rows = true;
    }
    assert!(saw_rows);
}

#[test]
fn unknown_config_key_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[expand]\ndist = family=exponential rate=1\nn = 10\np = 0.3\nturbo = yes\n").unwrap();
    let out = run(&["expand", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("turbo"));
}

#[test]
fn missing_required_key_is_exit_2() {
    let out = run(&["expand", "--n", "10", "--p", "0.3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr_of(&out).contains("dist"));
}

#[test]
fn bad_family_is_exit_2_and_unsupported_order_is_exit_4() {
    let out = run(&["expand", "--dist", "family=planck h=6.6", "--n", "10", "--p", "0.3"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["expand", "--dist", EXPO, "--n", "10", "--p", "0.3", "--q", "7"]);
    assert_eq!(out.status.code(), Some(4));
    assert!(stderr_of(&out).contains("domain error"));
}

#[test]
fn unwritable_out_path_is_exit_3() {
    let out = run(&[
        "expand",
        "--dist",
        EXPO,
        "--n",
        "10",
        "--p",
        "0.3",
        "--grid",
        "0:1:1",
        "--out",
        "/proc/nonexistent/x.csv",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn out_dir_env_prefixes_relative_paths() {
    let dir = tempfile::tempdir().unwrap();
    let out = bwm()
        .args(["expand", "--dist", EXPO, "--n", "10", "--p", "0.3", "--grid", "0:1:1", "--out", "sub/e.csv"])
        .env("BWM_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(dir.path().join("sub/e.csv").is_file());
}

#[test]
fn lattice_check_presets_match_documented_verdicts() {
    for (preset, verdict) in [
        ("bernoulli", "Lattice"),
        ("irrational", "NonLattice"),
        ("hypercube", "SemiLattice"),
        ("linear-image", "SemiLattice"),
        ("gated", "SemiLattice"),
    ] {
        let out = run(&["lattice-check", "--preset", preset]);
        assert!(out.status.success(), "{preset} stderr: {}", stderr_of(&out));
        let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
        assert_eq!(parsed["schema_version"], 1);
        assert_eq!(
            parsed["report"]["verdict"]["verdict"], verdict,
            "preset {preset}"
        );
        // the human-readable certificate rides on stderr when stdout is data
        assert!(stderr_of(&out).contains(&format!("verdict: {verdict}")));
    }
}

#[test]
fn lattice_check_rational_atoms_and_csv_rejection() {
    let out = run(&["lattice-check", "--atoms", "0,1/3,2/3"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    assert_eq!(parsed["report"]["verdict"]["verdict"], "Lattice");
    let delta = parsed["report"]["verdict"]["delta"].as_f64().unwrap();
    assert!((delta - 1.0 / 3.0).abs() < 1e-15);

    let out = run(&["lattice-check", "--preset", "bernoulli", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn mc_json_summary_is_inside_band_for_modest_reps() {
    let out = run(&[
        "mc", "--dist", EXPO, "--n", "50", "--p", "0.3", "--reps", "20000", "--seed", "7",
        "--streams", "4", "--grid", "-4:4:0.25", "--format", "json",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let parsed: serde_json::Value = serde_json::from_str(&stdout_of(&out)).unwrap();
    let summary = &parsed["report"]["summary"];
    assert_eq!(summary["inside_band"], true);
    assert_eq!(summary["seed"], 7);
    assert_eq!(parsed["config"]["streams"], "4");
}

#[test]
fn mc_streams_do_not_change_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("s1.csv");
    let b = dir.path().join("s8.csv");
    for (streams, path) in [("1", &a), ("8", &b)] {
        let out = run(&[
            "mc", "--dist", EXPO, "--n", "20", "--p", "0.5", "--reps", "4000", "--seed", "11",
            "--streams", streams, "--grid", "-3:3:0.5", "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    }
    let ta = std::fs::read_to_string(&a).unwrap();
    let tb = std::fs::read_to_string(&b).unwrap();
    // identical up to the timestamp and the streams entry itself
    let strip = |t: &str| {
        without_timestamp(t)
            .into_iter()
            .filter(|l| !l.starts_with("# cfg streams="))
            .collect::<Vec<_>>()
    };
    assert_eq!(strip(&ta), strip(&tb));
}

#[test]
fn identities_grid_holds_and_exits_zero() {
    let out = run(&["identities", "--ns", "1,5,50", "--ps", "0.3,0.9"]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("check,n,p,param,lhs,rhs,margin"));
    assert!(text.contains("sumIdentity,"));
    assert!(text.contains("klTail,"));
}

#[test]
fn mixture_modes_select_columns() {
    let base = ["mixture", "--dist", EXPO, "--n", "20", "--p", "0.5", "--grid", "0:1:0.5"];
    let both = stdout_of(&run(&base));
    assert!(both.contains("\nx,oracle,edgeworth\n"));
    let mut with_mode = base.to_vec();
    with_mode.extend(["--mode", "edgeworth"]);
    let edge = stdout_of(&run(&with_mode));
    assert!(edge.contains("\nx,edgeworth\n"));
    assert!(!edge.contains("oracle,"));
}

#[test]
fn flags_override_config_entries() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("base.cfg");
    std::fs::write(
        &cfg,
        "[inverse-moment]\nalpha = 1\nk = 2\np = 0.5\nsizes = 1024\n",
    )
    .unwrap();
    let out = run(&[
        "inverse-moment",
        "--config",
        cfg.to_str().unwrap(),
        "--k",
        "3",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let text = stdout_of(&out);
    assert!(text.contains("# cfg k=3\n"), "flag should beat the file entry");
    assert!(text.contains("# coefficients=1,0.5,0.75\n"));
}

#[test]
fn help_documents_exit_codes() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = stdout_of(&out);
    for needle in ["Exit codes", "configuration error", "invariant failure", "BWM_OUT_DIR"] {
        assert!(text.contains(needle), "--help missing: {needle}");
    }
}

#[test]
fn concurrent_disjoint_outputs_do_not_interfere() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<std::path::PathBuf> =
        (0..4).map(|i| dir.path().join(format!("t{i}.csv"))).collect();
    let children: Vec<std::process::Child> = paths
        .iter()
        .map(|p| {
            bwm()
                .args([
                    "expand", "--dist", EXPO, "--n", "100", "--p", "0.3", "--grid", "-4:4:0.01",
                    "--out", p.to_str().unwrap(),
                ])
                .spawn()
                .unwrap()
        })
        .collect();
    for mut c in children {
        assert!(c.wait().unwrap().success());
    }
    let texts: Vec<Vec<String>> = paths
        .iter()
        .map(|p| without_timestamp(&std::fs::read_to_string(p).unwrap()))
        .collect();
    for t in &texts[1..] {
        assert_eq!(&texts[0], t);
    }
}

fn assert_file_exists(p: &Path) {
    assert!(p.is_file(), "missing {}", p.display());
}

#[test]
fn json_and_csv_share_the_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    for (fmt, path) in [("csv", &csv), ("json", &json)] {
        let out = run(&[
            "expand", "--dist", EXPO, "--n", "25", "--p", "0.5", "--grid", "0:2:1",
            "--format", fmt, "--out", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr_of(&out));
        assert_file_exists(path);
    }
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let csv_text = std::fs::read_to_string(&csv).unwrap();
    for (key, value) in parsed["config"].as_object().unwrap() {
        if key == "format" {
            continue; // the one key that legitimately differs between the two
        }
        let line = format!("# cfg {key}={}\n", value.as_str().unwrap());
        assert!(csv_text.contains(&line), "csv missing {line:?}");
    }
}
