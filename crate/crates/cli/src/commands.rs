//! The four subcommands. Each writes its data files and a `manifest.json`
//! into the output directory and returns the manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use weakfriend_core::analysis::contradiction_report;
use weakfriend_core::gaussian::Grid;
use weakfriend_core::montecarlo::{disturbance_scan, estimate_weak_value, SampleRecord, Sampler, Samples};
use weakfriend_core::scenario::{self, ScenarioConfig, ScenarioResult, Variant};
use weakfriend_core::Error as CoreError;

use crate::config::ConfigFile;
use crate::output::{self, num};

pub const DEFAULT_GAMMAS: [f64; 5] = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
pub const DEFAULT_GRID_POINTS: usize = 241;

/// Parse `min:max:n`.
pub fn parse_grid(s: &str) -> Result<Grid> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        bail!("--grid expects min:max:n, got `{s}`");
    }
    let lo: f64 = parts[0]
        .trim()
        .parse()
        .with_context(|| format!("--grid min `{}`", parts[0]))?;
    let hi: f64 = parts[1]
        .trim()
        .parse()
        .with_context(|| format!("--grid max `{}`", parts[1]))?;
    let n: usize = parts[2].trim().parse().with_context(|| format!("--grid n `{}`", parts[2]))?;
    Grid::new(lo, hi, n).map_err(|e| anyhow::anyhow!("--grid: {e}"))
}

pub fn parse_gamma_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|g| g.trim().parse::<f64>().with_context(|| format!("--gamma-list entry `{g}`")))
        .collect()
}

/// ±6σ around the range of packet centres.
pub fn default_grid(result: &ScenarioResult) -> Result<Grid> {
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for r in &result.rows {
        for t in r.wave.terms() {
            for z in &t.centers {
                lo = lo.min(z.re);
                hi = hi.max(z.re);
            }
        }
    }
    let s = 6.0 * result.sigma;
    Ok(Grid::new(lo - s, hi + s, DEFAULT_GRID_POINTS)?)
}

/// Block-parallel sampling; identical to `montecarlo::sample_result`.
pub fn parallel_sample(result: &ScenarioResult, n: u64, seed: u64) -> Result<Vec<SampleRecord>> {
    let s = Sampler::new(result)?;
    let blocks: Vec<Vec<SampleRecord>> = (0..Sampler::n_blocks(n))
        .into_par_iter()
        .map(|b| s.block(seed, b, n))
        .collect::<Result<_, CoreError>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

struct Run {
    out: PathBuf,
    outputs: Vec<String>,
    timing: BTreeMap<String, f64>,
    clock: Instant,
}

impl Run {
    fn start(out: &Path) -> Result<Run> {
        std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
        Ok(Run {
            out: out.to_path_buf(),
            outputs: Vec::new(),
            timing: BTreeMap::new(),
            clock: Instant::now(),
        })
    }

    fn lap(&mut self, phase: &str) {
        self.timing.insert(phase.into(), self.clock.elapsed().as_secs_f64());
        self.clock = Instant::now();
    }

    fn path(&mut self, rel: &str) -> PathBuf {
        self.outputs.push(rel.into());
        self.out.join(rel)
    }

    fn finish(mut self, command: &str, file: &ConfigFile, arguments: Value) -> Result<Value> {
        let config: Value = serde_json::from_str(&file.canonical_json())?;
        let timing: serde_json::Map<String, Value> = self.timing.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        self.outputs.push("manifest.json".into());
        let m = json!({
            "command": command,
            "config": config,
            "arguments": arguments,
            "outputs": self.outputs,
            "versions": { "engine": weakfriend_core::ENGINE_VERSION, "schema": output::SCHEMA_VERSION },
            "timing": timing,
        });
        output::write_json(&self.out.join("manifest.json"), &m)?;
        Ok(m)
    }
}

/// Outcome table, conditional probe densities, and (EWFS) the report.
pub fn cmd_run(file: &ConfigFile, cfg: &ScenarioConfig, out: &Path, grid: Option<Grid>) -> Result<Value> {
    let mut run = Run::start(out)?;
    let result = scenario::run(cfg)?;
    run.lap("evolve");
    output::write_json(&run.path("result.json"), &output::result_json(&result)?)?;
    run.lap("result");
    if !result.probes.is_empty() {
        let grid = match grid {
            Some(g) => g,
            None => default_grid(&result)?,
        };
        std::fs::create_dir_all(out.join("probes")).with_context(|| format!("creating {}/probes", out.display()))?;
        for row in result.rows.iter().filter(|r| r.probability > 0.0) {
            let wave = row.wave.normalized()?;
            for (q, probe) in result.probes.iter().enumerate() {
                let rel = format!("probes/{}_{probe}.csv", output::row_slug(&row.outcomes));
                output::write_density_csv(&run.path(&rel), &grid, &wave.render_marginal(q, &grid))?;
            }
        }
        run.lap("densities");
    }
    if cfg.variant == Variant::Ewfs {
        let report = contradiction_report(cfg)?;
        output::write_json(&run.path("report.json"), &output::report_json(&report))?;
        run.lap("report");
    }
    let args = match grid_arg(&grid) {
        Some(g) => json!({ "grid": g }),
        None => json!({}),
    };
    run.finish("run", file, args)
}

fn grid_arg(grid: &Option<Grid>) -> Option<String> {
    grid.as_ref().map(|g| format!("{}:{}:{}", g.x_min, g.x_max, g.n_points))
}

pub fn cmd_report(file: &ConfigFile, cfg: &ScenarioConfig, out: &Path) -> Result<Value> {
    if cfg.variant != Variant::Ewfs {
        bail!("the contradiction report needs variant = \"ewfs\"");
    }
    let mut run = Run::start(out)?;
    let report = contradiction_report(cfg)?;
    run.lap("report");
    output::write_json(&run.path("report.json"), &output::report_json(&report))?;
    run.finish("report", file, json!({}))
}

pub fn cmd_scan(file: &ConfigFile, cfg: &ScenarioConfig, out: &Path, gammas: &[f64]) -> Result<Value> {
    let mut run = Run::start(out)?;
    let scan = disturbance_scan(cfg, gammas)?;
    run.lap("scan");
    output::write_scan_csv(&run.path("scan.csv"), &scan)?;
    output::write_json(&run.path("scan.json"), &output::scan_json(&scan))?;
    let g: Vec<Value> = gammas.iter().map(|g| num(*g)).collect();
    run.finish("scan", file, json!({ "gamma_list": g }))
}

/// Every single-tag conditioning and every possible full outcome row.
fn conditionings(result: &ScenarioResult) -> Vec<Vec<(String, String)>> {
    let mut out: Vec<Vec<(String, String)>> = Vec::new();
    let mut push = |f: Vec<(String, String)>| {
        if !out.contains(&f) {
            out.push(f);
        }
    };
    for row in &result.rows {
        for o in &row.outcomes {
            push(vec![o.clone()]);
        }
    }
    for row in result.rows.iter().filter(|r| r.probability > 0.0) {
        push(row.outcomes.clone());
    }
    out.retain(|f| {
        let fr: Vec<(&str, &str)> = f.iter().map(|(t, l)| (t.as_str(), l.as_str())).collect();
        result.probability(&fr) > 0.0
    });
    out
}

/// Exact mean of a probe over the rows matching `filter`.
pub fn analytic_mean(result: &ScenarioResult, filter: &[(&str, &str)], q: usize) -> Result<f64> {
    let mut acc = 0.0;
    let mut p = 0.0;
    for r in result.matching(filter).into_iter().filter(|r| r.probability > 0.0) {
        acc += r.probability * r.wave.marginal_mean(q)?;
        p += r.probability;
    }
    if p.is_nan() || p <= 0.0 {
        return Err(CoreError::ZeroProbability.into());
    }
    Ok(acc / p)
}

pub fn estimates_json(samples: &Samples) -> Result<Value> {
    let result = &samples.result;
    let g = result.gamma;
    let mut entries = Vec::new();
    for f in conditionings(result) {
        let fr: Vec<(&str, &str)> = f.iter().map(|(t, l)| (t.as_str(), l.as_str())).collect();
        let filter: serde_json::Map<String, Value> = f.iter().map(|(t, l)| (t.clone(), json!(l))).collect();
        for (q, probe) in result.probes.iter().enumerate() {
            let exact = analytic_mean(result, &fr, q)?;
            let mut e = json!({
                "conditioning": filter,
                "probe": probe,
                "analytic_mean": num(exact),
                "analytic_implied_wv": if g > 0.0 { num(exact / g) } else { Value::Null },
            });
            match estimate_weak_value(samples, &fr, probe) {
                Ok(w) => {
                    e["n"] = json!(w.n);
                    e["mean"] = num(w.mean);
                    e["stderr"] = num(w.stderr);
                    e["implied_wv"] = num(w.implied);
                    e["implied_wv_stderr"] = num(w.implied_stderr);
                    e["z_score"] = if w.stderr > 0.0 {
                        num((w.mean - exact) / w.stderr)
                    } else {
                        Value::Null
                    };
                }
                Err(err @ (CoreError::EmptyConditioning | CoreError::InsufficientSamples { .. })) => {
                    e["note"] = json!(err.to_string());
                }
                Err(err) => return Err(err.into()),
            }
            entries.push(e);
        }
    }
    Ok(json!({
        "schema_version": output::SCHEMA_VERSION,
        "engine_version": weakfriend_core::ENGINE_VERSION,
        "samples": samples.records.len(),
        "gamma": num(g),
        "sigma": num(result.sigma),
        "estimates": entries,
    }))
}

pub fn cmd_mc(file: &ConfigFile, cfg: &ScenarioConfig, out: &Path, n: u64, seed: u64) -> Result<Value> {
    if n == 0 {
        return Err(CoreError::InsufficientSamples { found: 0, required: 1 }).context("--samples");
    }
    let mut run = Run::start(out)?;
    let result = scenario::run(cfg)?;
    run.lap("evolve");
    let records = parallel_sample(&result, n, seed)?;
    run.lap("sample");
    let samples = Samples { result, records };
    output::write_samples_csv(&run.path("samples.csv"), &samples.result, &samples.records)?;
    output::write_json(&run.path("estimates.json"), &estimates_json(&samples)?)?;
    run.lap("estimate");
    run.finish("mc", file, json!({ "samples": n, "seed": seed }))
}
