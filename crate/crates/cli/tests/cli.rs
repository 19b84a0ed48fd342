mod common;

use common::*;
use serde_json::Value;
use weakfriend::config::{parse_str, ConfigFile, Format};

fn out_dir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

fn s(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn golden_cases() {
    for case in CASES {
        let dir = out_dir();
        if let Err(e) = run_case(case, dir.path()) {
            panic!("{e}");
        }
    }
}

#[test]
fn unitary_run_has_four_rows_summing_to_one() {
    let dir = out_dir();
    cli_ok(&["run", "--config", s(&config("ewfs_unitary_pi.toml")), "--out", s(dir.path())]).unwrap();
    let r = read_json(&dir.path().join("result.json"));
    let rows = r["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let total: f64 = rows.iter().map(|r| r["probability"].as_f64().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r["friend_outcomes"].is_null()));
    // one density file per row and probe
    let n = std::fs::read_dir(dir.path().join("probes")).unwrap().count();
    assert_eq!(n, 8);
}

#[test]
fn collapse_report_fails_ii_and_iii() {
    let dir = out_dir();
    cli_ok(&[
        "report",
        "--config",
        s(&config("ewfs_collapse_pi.toml")),
        "--out",
        s(dir.path()),
    ])
    .unwrap();
    let r = read_json(&dir.path().join("report.json"));
    let holds = |k: &str| {
        r["statements"].as_array().unwrap().iter().find(|s| s["key"] == k).unwrap()["holds"]
            .as_bool()
            .unwrap()
    };
    assert!(!holds("ii") && !holds("iii") && holds("v"));
    assert_eq!(r["verdict"], "consistent");
}

#[test]
fn run_is_byte_deterministic() {
    let (a, b) = (out_dir(), out_dir());
    for d in [&a, &b] {
        cli_ok(&[
            "run",
            "--config",
            s(&config("ewfs_unitary_sigmaz.toml")),
            "--out",
            s(d.path()),
        ])
        .unwrap();
    }
    for f in ["result.json", "report.json", "probes/W1-up_W2-minus_p2.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn mc_is_seed_deterministic_and_estimates_validate() {
    let (a, b, c) = (out_dir(), out_dir(), out_dir());
    let cfg = config("wfs_collapse_pi.toml");
    for (d, seed) in [(&a, "3"), (&b, "3"), (&c, "4")] {
        cli_ok(&[
            "mc",
            "--config",
            s(&cfg),
            "--out",
            s(d.path()),
            "--samples",
            "20000",
            "--seed",
            seed,
        ])
        .unwrap();
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("samples.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let text = String::from_utf8(read(&a)).unwrap();
    assert_eq!(text.lines().next().unwrap(), "run_index,F1,W1,p1");
    assert_eq!(text.lines().count(), 20001);
    assert!(!text.contains('\r'));
    let e = read_json(&a.path().join("estimates.json"));
    assert!(schema_errors("estimates.schema.json", &e).is_empty());
    let plus = e["estimates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["conditioning"] == serde_json::json!({ "F1": "+" }))
        .unwrap();
    assert!(plus["implied_wv_stderr"].as_f64().unwrap() > 0.0);
    assert!(plus["z_score"].as_f64().unwrap().abs() < 5.0);
    let m = read_json(&a.path().join("manifest.json"));
    assert!(schema_errors("manifest.schema.json", &m).is_empty());
    assert_eq!(m["arguments"]["seed"], 3);
}

#[test]
fn mc_rejects_zero_samples() {
    let dir = out_dir();
    let o = cli(&[
        "mc",
        "--config",
        s(&config("wfs_collapse_pi.toml")),
        "--out",
        s(dir.path()),
        "--samples",
        "0",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--samples"));
    assert!(o.stdout.is_empty());
}

#[test]
fn scan_summary_and_errors() {
    let dir = out_dir();
    let cfg = config("wfs_unitary_pi.toml");
    cli_ok(&["scan", "--config", s(&cfg), "--out", s(dir.path())]).unwrap();
    let j = read_json(&dir.path().join("scan.json"));
    assert!((j["slope"].as_f64().unwrap() - 2.0).abs() < 0.1);
    let csv = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
    assert!(csv.starts_with("gamma,max_prob_deviation\n"));

    let o = cli(&["scan", "--config", s(&cfg), "--out", s(dir.path()), "--gamma-list", "0.01"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("three"));

    let id = dir.path().join("identity.toml");
    std::fs::write(
        &id,
        "variant = \"wfs\"\nmode = \"unitary\"\n[lab1]\nprobe = \"spin\"\nobservable = \"identity\"\n",
    )
    .unwrap();
    let out2 = dir.path().join("id");
    cli_ok(&[
        "scan",
        "--config",
        s(&id),
        "--out",
        s(&out2),
        "--gamma-list",
        "0.01,0.02,0.04",
    ])
    .unwrap();
    assert_eq!(read_json(&out2.join("scan.json"))["summary"], "exactly non-invasive");
}

#[test]
fn config_errors_name_the_field() {
    let dir = out_dir();
    let cases = [
        (
            "variant = \"wfs\"\nmode = \"unitary\"\n[lab1]\nprobe = \"spin\"\nobservable = { re = [[1, 2], [0, 1]] }\n",
            "lab1.observable",
        ),
        ("variant = \"wfs\"\nmode = \"unitary\"\ngamma = -0.5\n", "gamma"),
        ("variant = \"wfs\"\nmode = \"unitary\"\nsigma = 0.0\n", "sigma"),
        ("variant = \"wfs\"\nmode = \"unitary\"\ngama = 0.1\n", "gama"),
        ("variant = \"wfs\"\n", "mode"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&p, text).unwrap();
        let o = cli(&["run", "--config", s(&p), "--out", s(&dir.path().join("o"))]);
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(err.contains(needle), "{err}");
        assert!(err.contains(&format!("bad{i}.toml")), "{err}");
    }
    let o = cli(&["run", "--config", "/nonexistent/x.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/x.toml"));
}

#[test]
fn report_needs_ewfs() {
    let dir = out_dir();
    let o = cli(&[
        "report",
        "--config",
        s(&config("wfs_unitary_pi.toml")),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn manifest_round_trips_config() {
    let dir = out_dir();
    let path = config("ewfs_collapse_pointer.toml");
    cli_ok(&["run", "--config", s(&path), "--out", s(dir.path())]).unwrap();
    let m = read_json(&dir.path().join("manifest.json"));
    let (original, _) = parse_str(&std::fs::read_to_string(&path).unwrap(), Format::Toml, "x").unwrap();
    let back: ConfigFile = serde_json::from_value(m["config"].clone()).unwrap();
    assert_eq!(back.canonical_json(), original.canonical_json());
    // the manifest's config is itself a valid JSON config
    let j = dir.path().join("again.json");
    std::fs::write(&j, serde_json::to_string(&m["config"]).unwrap()).unwrap();
    let out2 = dir.path().join("again");
    cli_ok(&["run", "--config", s(&j), "--out", s(&out2)]).unwrap();
    assert_eq!(
        std::fs::read(dir.path().join("result.json")).unwrap(),
        std::fs::read(out2.join("result.json")).unwrap()
    );
    let outputs: Vec<&str> = m["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    for f in &outputs {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn out_dir_from_environment_and_grid_flag() {
    let dir = out_dir();
    let target = dir.path().join("from_env");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_weakfriend"))
        .args(["run", "--config", s(&config("wfs_collapse_pi.toml")), "--grid", "-2:2:11"])
        .env("WEAKFRIEND_OUT", &target)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(target.join("probes/F1-plus_W1-up_p1.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 12);
    assert_eq!(lines[0], "x,density");
    assert!(lines[1].starts_with("-2,"));
    let m: Value = read_json(&target.join("manifest.json"));
    assert_eq!(m["arguments"]["grid"], "-2:2:11");
}
