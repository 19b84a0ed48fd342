//! Helpers shared by the CLI tests and the acceptance runner.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn config(name: &str) -> PathBuf {
    root().join("configs").join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

pub fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_weakfriend"))
        .args(args)
        .env_remove("WEAKFRIEND_OUT")
        .output()
        .expect("binary runs")
}

/// Runs the binary and fails with its stderr on a non-zero exit.
pub fn cli_ok(args: &[&str]) -> Result<(), String> {
    let o = cli(args);
    if o.status.success() {
        Ok(())
    } else {
        Err(format!(
            "weakfriend {} failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&o.stderr)
        ))
    }
}

pub fn read_json(path: &Path) -> Value {
    let s = std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    serde_json::from_str(&s).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn validator(schema: &str) -> jsonschema::Validator {
    let dir = root().join("schemas");
    let mut opts = jsonschema::options();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        let v = read_json(&p);
        let id = v["$id"].as_str().unwrap().to_string();
        opts = opts.with_resource(id, jsonschema::Resource::from_contents(v).unwrap());
    }
    opts.build(&read_json(&dir.join(schema))).unwrap()
}

pub fn schema_errors(schema: &str, instance: &Value) -> Vec<String> {
    validator(schema)
        .iter_errors(instance)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 + 1e-9 * a.abs().max(b.abs())
}

/// Structural comparison with a numeric tolerance; `engine_version` is
/// ignored so goldens survive version bumps.
pub fn json_diff(want: &Value, got: &Value, path: &str) -> Option<String> {
    match (want, got) {
        (Value::Number(a), Value::Number(b)) => {
            let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
            (!close(a, b)).then(|| format!("{path}: {a} != {b}"))
        }
        (Value::Array(a), Value::Array(b)) => {
            if a.len() != b.len() {
                return Some(format!("{path}: length {} != {}", a.len(), b.len()));
            }
            a.iter()
                .zip(b)
                .enumerate()
                .find_map(|(i, (x, y))| json_diff(x, y, &format!("{path}[{i}]")))
        }
        (Value::Object(a), Value::Object(b)) => {
            let keys =
                |m: &serde_json::Map<String, Value>| m.keys().filter(|k| *k != "engine_version").cloned().collect::<Vec<_>>();
            if keys(a) != keys(b) {
                return Some(format!("{path}: keys {:?} != {:?}", keys(a), keys(b)));
            }
            keys(a).iter().find_map(|k| json_diff(&a[k], &b[k], &format!("{path}.{k}")))
        }
        _ => (want != got).then(|| format!("{path}: {want} != {got}")),
    }
}

fn csv_diff(want: &str, got: &str) -> Option<String> {
    let (w, g): (Vec<&str>, Vec<&str>) = (want.lines().collect(), got.lines().collect());
    if w.len() != g.len() {
        return Some(format!("{} lines != {}", w.len(), g.len()));
    }
    for (i, (a, b)) in w.iter().zip(&g).enumerate() {
        let (fa, fb): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
        let same = fa.len() == fb.len()
            && fa.iter().zip(&fb).all(|(x, y)| match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => close(x, y),
                _ => x == y,
            });
        if !same {
            return Some(format!("line {}: `{a}` != `{b}`", i + 1));
        }
    }
    None
}

/// Compare `produced/file` against `golden/case/file`. With
/// `WEAKFRIEND_BLESS=1` the golden file is rewritten instead.
pub fn check_golden(case: &str, file: &str, produced: &Path) -> Result<(), String> {
    let golden = golden_dir().join(case).join(file);
    let got = std::fs::read_to_string(produced.join(file)).map_err(|e| format!("{file}: {e}"))?;
    if std::env::var_os("WEAKFRIEND_BLESS").is_some() {
        std::fs::create_dir_all(golden.parent().unwrap()).unwrap();
        std::fs::write(&golden, &got).unwrap();
        return Ok(());
    }
    let want = std::fs::read_to_string(&golden).map_err(|e| format!("{}: {e}", golden.display()))?;
    let diff = if file.ends_with(".json") {
        let (w, g): (Value, Value) = (serde_json::from_str(&want).unwrap(), serde_json::from_str(&got).unwrap());
        json_diff(&w, &g, "$")
    } else {
        csv_diff(&want, &got)
    };
    match diff {
        None => Ok(()),
        Some(d) => Err(format!("{case}/{file}: {d}")),
    }
}

/// A golden case: subcommand, config, and the files compared.
pub struct Case {
    pub name: &'static str,
    pub command: &'static str,
    pub config: &'static str,
    pub files: &'static [&'static str],
}

pub const CASES: &[Case] = &[
    Case {
        name: "ewfs_unitary_pi",
        command: "run",
        config: "ewfs_unitary_pi.toml",
        files: &["result.json", "report.json"],
    },
    Case {
        name: "ewfs_collapse_pi",
        command: "run",
        config: "ewfs_collapse_pi.toml",
        files: &["result.json", "report.json"],
    },
    Case {
        name: "ewfs_unitary_sigmaz",
        command: "report",
        config: "ewfs_unitary_sigmaz.toml",
        files: &["report.json"],
    },
    Case {
        name: "ewfs_gamma0",
        command: "run",
        config: "ewfs_gamma0.toml",
        files: &["result.json"],
    },
    Case {
        name: "ewfs_collapse_pointer",
        command: "run",
        config: "ewfs_collapse_pointer.toml",
        files: &["result.json", "report.json"],
    },
    Case {
        name: "wfs_unitary_pi_scan",
        command: "scan",
        config: "wfs_unitary_pi.toml",
        files: &["scan.csv", "scan.json"],
    },
];

/// Run a case into `out` and compare every golden file; also validates
/// every emitted JSON file against its schema.
pub fn run_case(case: &Case, out: &Path) -> Result<(), String> {
    let cfg = config(case.config);
    cli_ok(&[
        case.command,
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ])?;
    for file in case.files {
        check_golden(case.name, file, out)?;
    }
    for (file, schema) in [
        ("result.json", "result.schema.json"),
        ("report.json", "report.schema.json"),
        ("scan.json", "scan.schema.json"),
        ("estimates.json", "estimates.schema.json"),
        ("manifest.json", "manifest.schema.json"),
    ] {
        let p = out.join(file);
        if p.exists() {
            let errs = schema_errors(schema, &read_json(&p));
            if !errs.is_empty() {
                return Err(format!("{}/{file}: {}", case.name, errs.join("; ")));
            }
        }
    }
    Ok(())
}
