//! JSON and CSV renderings of results. JSON objects use sorted keys
//! (serde_json's default map), numbers are rounded to 15 significant
//! digits, and CSV files are comma separated with LF line endings.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde_json::{json, Value};
use weakfriend_core::analysis::{
    detect_joint_superposition, leading_order, witness_of, ContradictionReport, Evidence, Superposition, WITNESS_TOL,
};
use weakfriend_core::gaussian::{Grid, JointWave};
use weakfriend_core::montecarlo::{SampleRecord, Scan};
use weakfriend_core::scenario::{Coupling, Mode, ProbeTarget, ScenarioResult, Variant};
use weakfriend_core::Complex64;

pub const SCHEMA_VERSION: &str = "1";

/// `x` rounded to 15 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let r: f64 = format!("{x:.14e}").parse().expect("formatted float parses");
    json!(if r == 0.0 { 0.0 } else { r })
}

pub fn complex(z: Complex64) -> Value {
    json!([num(z.re), num(z.im)])
}

pub fn variant_name(v: Variant) -> &'static str {
    match v {
        Variant::Wfs => "wfs",
        Variant::Ewfs => "ewfs",
    }
}

pub fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Unitary => "unitary",
        Mode::Collapse => "collapse",
    }
}

pub fn coupling_name(c: Coupling) -> &'static str {
    match c {
        Coupling::FirstOrder => "first_order",
        Coupling::Exact => "exact",
    }
}

pub fn target_name(t: ProbeTarget) -> &'static str {
    match t {
        ProbeTarget::None => "none",
        ProbeTarget::Spin => "spin",
        ProbeTarget::Pointer => "pointer",
        ProbeTarget::Environment => "environment",
    }
}

fn is_friend_tag(tag: &str) -> bool {
    tag.starts_with('F')
}

fn tag_map<'a>(pairs: impl Iterator<Item = &'a (String, String)>) -> Value {
    let m: serde_json::Map<String, Value> = pairs.map(|(t, l)| (t.clone(), json!(l))).collect();
    Value::Object(m)
}

pub fn classification(wave: &JointWave, gamma: f64) -> Value {
    match detect_joint_superposition(wave, gamma, None) {
        Superposition::SingleShifted { centers } => json!({
            "kind": "single_shifted",
            "components": [{ "centers": centers.iter().map(|z| complex(*z)).collect::<Vec<_>>(), "weight": num(1.0) }],
        }),
        Superposition::Coherent { components } => json!({
            "kind": "coherent_superposition",
            "components": components
                .iter()
                .map(|c| json!({ "centers": c.centers.iter().map(|z| complex(*z)).collect::<Vec<_>>(), "weight": num(c.weight) }))
                .collect::<Vec<_>>(),
        }),
    }
}

fn row_json(result: &ScenarioResult, k: usize) -> Result<Value> {
    let row = &result.rows[k];
    let friend = if result.mode == Mode::Collapse {
        tag_map(row.outcomes.iter().filter(|(t, _)| is_friend_tag(t)))
    } else {
        Value::Null
    };
    let wigner = tag_map(row.outcomes.iter().filter(|(t, _)| !is_friend_tag(t)));
    let mut v = json!({
        "index": k,
        "friend_outcomes": friend,
        "wigner_outcomes": wigner,
        "probability": num(row.probability),
    });
    if row.probability > 0.0 && !result.probes.is_empty() {
        let wave = row.wave.normalized()?;
        let lead = leading_order(&wave)?.normalized()?;
        let terms: Vec<Value> = wave
            .terms()
            .iter()
            .map(|t| json!({ "amplitude": complex(t.amplitude), "centers": t.centers.iter().map(|z| complex(*z)).collect::<Vec<_>>() }))
            .collect();
        let means: Result<Vec<Value>> = (0..result.probes.len()).map(|q| Ok(num(wave.marginal_mean(q)?))).collect();
        let mut probe = json!({
            "terms": terms,
            "mean_positions": means?,
            "classification": classification(&lead, result.gamma),
        });
        if result.probes.len() == 2 {
            let w = witness_of(&wave, WITNESS_TOL)?;
            probe["schmidt_rank"] = json!(w.schmidt_rank);
            probe["entangled"] = json!(w.entangled);
        }
        v["conditional_probe"] = probe;
    } else {
        v["conditional_probe"] = Value::Null;
    }
    Ok(v)
}

pub fn result_json(result: &ScenarioResult) -> Result<Value> {
    let rows: Result<Vec<Value>> = (0..result.rows.len()).map(|k| row_json(result, k)).collect();
    Ok(json!({
        "schema_version": SCHEMA_VERSION,
        "engine_version": weakfriend_core::ENGINE_VERSION,
        "variant": variant_name(result.variant),
        "mode": mode_name(result.mode),
        "coupling": coupling_name(result.coupling),
        "gamma": num(result.gamma),
        "sigma": num(result.sigma),
        "probes": result.probes,
        "rows": rows?,
        "total_probability": num(result.total_probability()),
        "norm_defect": num(result.norm_defect),
        "neglected_weight": num(result.neglected_weight),
    }))
}

pub fn report_json(report: &ContradictionReport) -> Value {
    let statements: Vec<Value> = report
        .statements
        .iter()
        .map(|s| {
            let evidence = match &s.evidence {
                Evidence::Probability(p) => json!({ "probability": num(*p) }),
                Evidence::Branches(b) => json!({ "surviving_branches": b }),
                Evidence::Premises(k) => json!({ "premises_holding": k }),
            };
            json!({
                "key": s.key,
                "claim": s.claim,
                "holds": s.holds,
                "evidence": evidence,
                "probe_annotation": s.probe_annotation,
            })
        })
        .collect();
    json!({
        "schema_version": SCHEMA_VERSION,
        "engine_version": weakfriend_core::ENGINE_VERSION,
        "mode": mode_name(report.mode),
        "probe_targets": report
            .probe_targets
            .iter()
            .map(|(lab, t)| json!({ "lab": lab, "target": target_name(*t) }))
            .collect::<Vec<_>>(),
        "statements": statements,
        "consistent": report.consistent,
        "verdict": report.verdict(),
    })
}

pub fn scan_json(scan: &Scan) -> Value {
    let summary = match (scan.exactly_non_invasive, scan.slope) {
        (true, _) => "exactly non-invasive".to_string(),
        (false, Some(s)) => format!("log-log slope {s:.3}"),
        (false, None) => "too few non-zero deviations to fit a slope".to_string(),
    };
    json!({
        "schema_version": SCHEMA_VERSION,
        "engine_version": weakfriend_core::ENGINE_VERSION,
        "points": scan
            .points
            .iter()
            .map(|p| json!({ "gamma": num(p.gamma), "max_prob_deviation": num(p.max_deviation) }))
            .collect::<Vec<_>>(),
        "slope": scan.slope.map(num),
        "exactly_non_invasive": scan.exactly_non_invasive,
        "summary": summary,
    })
}

/// Pretty JSON with a trailing newline.
pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .with_context(|| format!("creating {}", path.display()))
}

pub fn write_scan_csv(path: &Path, scan: &Scan) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["gamma", "max_prob_deviation"])?;
    for p in &scan.points {
        w.write_record([p.gamma.to_string(), p.max_deviation.to_string()])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

pub fn write_density_csv(path: &Path, grid: &Grid, density: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["x", "density"])?;
    for (x, d) in grid.points().zip(density) {
        w.write_record([x.to_string(), d.to_string()])?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// `run_index`, one column per outcome tag, one per probe.
pub fn write_samples_csv(path: &Path, result: &ScenarioResult, records: &[SampleRecord]) -> Result<()> {
    let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = std::io::BufWriter::with_capacity(1 << 20, file);
    let tags: Vec<&str> = result
        .rows
        .first()
        .map(|r| r.outcomes.iter().map(|(t, _)| t.as_str()).collect())
        .unwrap_or_default();
    let mut header = vec!["run_index"];
    header.extend(&tags);
    header.extend(result.probes.iter().map(String::as_str));
    writeln!(w, "{}", header.join(","))?;
    let labels: Vec<String> = result
        .rows
        .iter()
        .map(|r| r.outcomes.iter().map(|(_, l)| l.as_str()).collect::<Vec<_>>().join(","))
        .collect();
    for s in records {
        write!(w, "{},{}", s.run_index, labels[s.row])?;
        for x in &s.positions {
            write!(w, ",{x}")?;
        }
        writeln!(w)?;
    }
    w.flush().with_context(|| format!("writing {}", path.display()))
}

/// File-name friendly form of an outcome label.
pub fn slug(label: &str) -> String {
    match label {
        "+" => "plus".into(),
        "-" => "minus".into(),
        l => l.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect(),
    }
}

pub fn row_slug(outcomes: &[(String, String)]) -> String {
    let parts: Vec<String> = outcomes.iter().map(|(t, l)| format!("{t}-{}", slug(l))).collect();
    parts.join("_")
}
