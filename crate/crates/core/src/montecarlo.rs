//! Finite-statistics readouts of the probes and exact disturbance scans.
//!
//! Runs are grouped in blocks of [`BLOCK`]; block `b` draws from
//! `ChaCha8Rng::seed_from_u64(seed)` on stream `b`, so blocks can be
//! sampled in any order or in parallel with identical results.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{unit_eval, unit_overlap};
use crate::linalg::{self, CMatrix, ZERO};
use crate::scenario::{self, Coupling, ScenarioConfig, ScenarioResult};
use crate::{Error, Result};

pub const BLOCK: u64 = 4096;
/// Minimum number of conditioned samples for [`estimate_weak_value`].
pub const MIN_SAMPLES: usize = 100;
const MAX_PROPOSALS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub run_index: u64,
    /// Index into the result's rows (Friend and Wigner outcomes).
    pub row: usize,
    /// One position per probe, in the result's probe order.
    pub positions: Vec<f64>,
}

/// Per-row data for sequential rejection sampling of the probe positions.
struct RowSampler {
    amplitudes: Vec<Complex64>,
    centers: Vec<Vec<Complex64>>,
    /// `overlaps[q][(j, k)] = Π_{p > q} ⟨φ_jp|φ_kp⟩`.
    overlaps: Vec<CMatrix>,
    /// Largest eigenvalue of the first-probe kernel.
    lambda0: f64,
}

pub struct Sampler {
    sigma: f64,
    n_probes: usize,
    rows: Vec<RowSampler>,
    outcome: WeightedIndex<f64>,
}

impl Sampler {
    pub fn new(result: &ScenarioResult) -> Result<Self> {
        let sigma = result.sigma;
        let n_probes = result.probes.len();
        let mut rows = Vec::with_capacity(result.rows.len());
        for r in &result.rows {
            if !(r.probability > 0.0) {
                rows.push(RowSampler {
                    amplitudes: Vec::new(),
                    centers: Vec::new(),
                    overlaps: Vec::new(),
                    lambda0: 0.0,
                });
                continue;
            }
            let w = r.wave.normalized()?;
            let amplitudes: Vec<Complex64> = w.terms().iter().map(|t| t.amplitude).collect();
            let centers: Vec<Vec<Complex64>> = w.terms().iter().map(|t| t.centers.clone()).collect();
            let k = amplitudes.len();
            let overlaps: Vec<CMatrix> = (0..n_probes)
                .map(|q| {
                    CMatrix::from_fn(k, k, |i, j| {
                        (q + 1..n_probes).fold(linalg::ONE, |acc, p| acc * unit_overlap(centers[i][p], centers[j][p], sigma))
                    })
                })
                .collect();
            let lambda0 = if n_probes == 0 {
                0.0
            } else {
                let m = CMatrix::from_fn(k, k, |i, j| amplitudes[i].conj() * amplitudes[j] * overlaps[0][(i, j)]);
                let m = (&m + m.adjoint()) * linalg::c(0.5, 0.0);
                let (ev, _) = linalg::hermitian_eigen(&m);
                ev.last().copied().unwrap_or(0.0).max(0.0)
            };
            rows.push(RowSampler {
                amplitudes,
                centers,
                overlaps,
                lambda0,
            });
        }
        let probs: Vec<f64> = result.rows.iter().map(|r| r.probability.max(0.0)).collect();
        let outcome = WeightedIndex::new(&probs).map_err(|_| Error::ZeroNorm)?;
        Ok(Sampler {
            sigma,
            n_probes,
            rows,
            outcome,
        })
    }

    fn draw_position<R: Rng>(&self, row: &RowSampler, q: usize, b: &[Complex64], rng: &mut R) -> Result<f64> {
        let sigma = self.sigma;
        let k = b.len();
        let o = &row.overlaps[q];
        let lambda = if q == 0 {
            row.lambda0
        } else {
            (0..k).map(|i| b[i].norm_sqr() * o[(i, i)].re).sum()
        };
        // |φ_k(x)|² is a Gaussian of width σ at Re c_k with mass exp(Im² c_k / 2σ²)
        let mass: Vec<f64> = (0..k)
            .map(|i| {
                let s = row.centers[i][q].im;
                libm::exp(s * s / (2.0 * sigma * sigma))
            })
            .collect();
        let pick = WeightedIndex::new(&mass).map_err(|_| Error::ZeroNorm)?;
        for _ in 0..MAX_PROPOSALS {
            let i = pick.sample(rng);
            let z: f64 = rng.sample(StandardNormal);
            let x = row.centers[i][q].re + sigma * z;
            let g: Vec<Complex64> = (0..k).map(|j| unit_eval(row.centers[j][q], sigma, x)).collect();
            let envelope = lambda * g.iter().map(|v| v.norm_sqr()).sum::<f64>();
            let mut f = ZERO;
            for j in 0..k {
                let bj = (b[j] * g[j]).conj();
                for l in 0..k {
                    f += bj * b[l] * g[l] * o[(j, l)];
                }
            }
            let u: f64 = rng.random();
            if u * envelope <= f.re {
                return Ok(x);
            }
        }
        Err(Error::SamplerStalled(MAX_PROPOSALS))
    }

    fn draw<R: Rng>(&self, run_index: u64, rng: &mut R) -> Result<SampleRecord> {
        let r = self.outcome.sample(rng);
        let row = &self.rows[r];
        let mut b = row.amplitudes.clone();
        let mut positions = Vec::with_capacity(self.n_probes);
        for q in 0..self.n_probes {
            let x = self.draw_position(row, q, &b, rng)?;
            for (j, bj) in b.iter_mut().enumerate() {
                *bj *= unit_eval(row.centers[j][q], self.sigma, x);
            }
            positions.push(x);
        }
        Ok(SampleRecord {
            run_index,
            row: r,
            positions,
        })
    }

    /// Runs `b·BLOCK .. min((b+1)·BLOCK, n)`.
    pub fn block(&self, seed: u64, block: u64, n: u64) -> Result<Vec<SampleRecord>> {
        let start = block * BLOCK;
        let end = (start + BLOCK).min(n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(block);
        (start..end).map(|i| self.draw(i, &mut rng)).collect()
    }

    pub fn n_blocks(n: u64) -> u64 {
        n.div_ceil(BLOCK)
    }
}

#[derive(Debug, Clone)]
pub struct Samples {
    pub result: ScenarioResult,
    pub records: Vec<SampleRecord>,
}

/// Sample `n` runs of the protocol.
pub fn sample(config: &ScenarioConfig, n: u64, seed: u64) -> Result<Samples> {
    if n == 0 {
        return Err(Error::InsufficientSamples { found: 0, required: 1 });
    }
    let result = scenario::run(config)?;
    let records = sample_result(&result, n, seed)?;
    Ok(Samples { result, records })
}

pub fn sample_result(result: &ScenarioResult, n: u64, seed: u64) -> Result<Vec<SampleRecord>> {
    let s = Sampler::new(result)?;
    let mut out = Vec::with_capacity(n as usize);
    for b in 0..Sampler::n_blocks(n) {
        out.extend(s.block(seed, b, n)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeakEstimate {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub implied: f64,
    pub implied_stderr: f64,
}

/// Mean probe position over samples whose row matches `filter`, and the
/// implied weak value `mean / γ`.
pub fn estimate_weak_value(samples: &Samples, filter: &[(&str, &str)], probe: &str) -> Result<WeakEstimate> {
    let result = &samples.result;
    let q = result
        .probes
        .iter()
        .position(|p| p == probe)
        .ok_or_else(|| Error::UnknownRegister(probe.into()))?;
    let rows: Vec<bool> = result.rows.iter().map(|r| r.matches(filter)).collect();
    let xs: Vec<f64> = samples
        .records
        .iter()
        .filter(|s| rows[s.row])
        .map(|s| s.positions[q])
        .collect();
    let n = xs.len();
    if n == 0 {
        return Err(Error::EmptyConditioning);
    }
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            found: n,
            required: MIN_SAMPLES,
        });
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let stderr = libm::sqrt(var / n as f64);
    let g = result.gamma;
    let (implied, implied_stderr) = if g > 0.0 {
        (mean / g, stderr / g)
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(WeakEstimate {
        n,
        mean,
        stderr,
        implied,
        implied_stderr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint {
    pub gamma: f64,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    pub points: Vec<ScanPoint>,
    /// Least-squares slope of `ln dev` against `ln γ`; `None` when the
    /// deviations vanish.
    pub slope: Option<f64>,
    pub exactly_non_invasive: bool,
}

/// Deviations below this are treated as exact zeros.
pub const ZERO_DEVIATION: f64 = 1e-14;

fn outcome_table(config: &ScenarioConfig) -> Result<BTreeMap<Vec<(String, String)>, f64>> {
    let r = scenario::run(config)?;
    let mut t = BTreeMap::new();
    for row in r.rows {
        *t.entry(row.outcomes).or_insert(0.0) += row.probability;
    }
    Ok(t)
}

/// Exact change of every outcome probability relative to γ = 0, using the
/// exact coupling.
pub fn disturbance_scan(config: &ScenarioConfig, gammas: &[f64]) -> Result<Scan> {
    if gammas.len() < 3 {
        return Err(Error::InvalidScan("at least three γ values are needed"));
    }
    if gammas.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::InvalidScan("γ values must be positive and finite"));
    }
    let mut base = config.clone().with_coupling(Coupling::Exact);
    base.gamma = 0.0;
    let p0 = outcome_table(&base)?;
    let mut points = Vec::with_capacity(gammas.len());
    for &g in gammas {
        let pg = outcome_table(&base.clone().with_gamma(g))?;
        let dev = p0
            .keys()
            .chain(pg.keys())
            .map(|k| (p0.get(k).unwrap_or(&0.0) - pg.get(k).unwrap_or(&0.0)).abs())
            .fold(0.0, f64::max);
        points.push(ScanPoint {
            gamma: g,
            max_deviation: dev,
        });
    }
    let fit: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.max_deviation > ZERO_DEVIATION)
        .map(|p| (libm::log(p.gamma), libm::log(p.max_deviation)))
        .collect();
    let exactly = fit.is_empty();
    let slope = if fit.len() >= 2 { Some(ls_slope(&fit)) } else { None };
    Ok(Scan {
        points,
        slope,
        exactly_non_invasive: exactly,
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Empirical CDF distance `sup |F_n − F|` against a CDF tabulated by `cdf`.
pub fn ks_statistic(xs: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs());
    }
    d
}
