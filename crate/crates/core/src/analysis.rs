//! Conditional probe states, superposition and entanglement witnesses, and
//! the five-statement contradiction report for EWFS.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::gaussian::{JointWave, ProbeWave, ProductTerm};
use crate::linalg::{c, ZERO};
use crate::observable::{SpinBasis, MINUS, PLUS, UP};
use crate::scenario::{self, describe_filter, Ensemble, Lab, Mode, ProbeTarget, ScenarioConfig, ScenarioResult, Tags, Variant};
use crate::state::{BranchState, Projection};
use crate::weak::{self, Order};
use crate::{Error, Result};

/// Default relative tolerance on normalized Schmidt coefficients.
pub const WITNESS_TOL: f64 = 1e-10;

/// Normalized joint probe wave of the unique row matching `filter`.
pub fn conditional_probe(result: &ScenarioResult, filter: &[(&str, &str)]) -> Result<JointWave> {
    let row = result.row(filter)?;
    if !(row.probability > 0.0) {
        return Err(Error::ZeroProbability);
    }
    row.wave.normalized()
}

/// The conditional wave of a single probe; errors when the joint wave does
/// not factor.
pub fn conditional_probe_single(result: &ScenarioResult, filter: &[(&str, &str)], probe: &str) -> Result<ProbeWave> {
    let w = conditional_probe(result, filter)?;
    let k = w.probe_index(probe)?;
    w.factor(k).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "probe {probe} is entangled with the other probes for {}",
            describe_filter(filter)
        ))
    })
}

/// The wave with O(γ) differences of packets dropped.
pub fn leading_order(wave: &JointWave) -> Result<JointWave> {
    let st = BranchState::from_joint_wave(wave)?;
    weak::truncate_order(&st, Order::Leading).state.to_joint_wave()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    pub centers: Vec<Complex64>,
    /// `|a|²` of the cluster amplitude relative to all clusters.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Superposition {
    SingleShifted { centers: Vec<Complex64> },
    Coherent { components: Vec<Component> },
}

impl Superposition {
    pub fn is_single(&self) -> bool {
        matches!(self, Superposition::SingleShifted { .. })
    }
}

fn cluster_tol(gamma: f64, tolerance: Option<f64>) -> f64 {
    let rel = tolerance.unwrap_or(1e-6);
    if gamma > 0.0 {
        rel * gamma
    } else {
        1e-12
    }
}

fn classify(terms: &[(Vec<Complex64>, Complex64)], tol: f64) -> Superposition {
    let mut clusters: Vec<(Vec<Complex64>, Complex64)> = Vec::new();
    for (centers, a) in terms {
        let found = clusters
            .iter_mut()
            .find(|(c0, _)| c0.iter().zip(centers).all(|(x, y)| (x - y).norm() <= tol));
        match found {
            Some(cl) => cl.1 += a,
            None => clusters.push((centers.clone(), *a)),
        }
    }
    if clusters.len() <= 1 {
        let centers = clusters.pop().map(|c| c.0).unwrap_or_default();
        return Superposition::SingleShifted { centers };
    }
    let total: f64 = clusters.iter().map(|(_, a)| a.norm_sqr()).sum();
    Superposition::Coherent {
        components: clusters
            .into_iter()
            .map(|(centers, a)| Component {
                centers,
                weight: if total > 0.0 { a.norm_sqr() / total } else { 0.0 },
            })
            .collect(),
    }
}

/// Cluster packet centres of a single-probe wave; `tolerance` is relative
/// to γ (default 1e-6), absolute 1e-12 at γ = 0.
pub fn detect_superposition(wave: &ProbeWave, gamma: f64, tolerance: Option<f64>) -> Superposition {
    let terms: Vec<(Vec<Complex64>, Complex64)> = wave
        .packets()
        .iter()
        .map(|p| {
            (
                vec![p.center],
                p.weight * c(libm::sqrt(p.norm_sq()) / p.weight.norm().max(f64::MIN_POSITIVE), 0.0),
            )
        })
        .collect();
    classify(&terms, cluster_tol(gamma, tolerance))
}

/// Same clustering over the product terms of a joint wave.
pub fn detect_joint_superposition(wave: &JointWave, gamma: f64, tolerance: Option<f64>) -> Superposition {
    let terms: Vec<(Vec<Complex64>, Complex64)> = wave.terms().iter().map(|t| (t.centers.clone(), t.amplitude)).collect();
    classify(&terms, cluster_tol(gamma, tolerance))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub schmidt_values: Vec<f64>,
    pub schmidt_rank: usize,
    pub entangled: bool,
}

/// Schmidt rank of the conditional two-probe wave across `p1 | p2`.
pub fn probe_entanglement_witness(result: &ScenarioResult, filter: &[(&str, &str)], tolerance: f64) -> Result<Witness> {
    if result.probes.len() != 2 {
        return Err(Error::NeedsTwoProbes(result.probes.len()));
    }
    let w = conditional_probe(result, filter)?;
    witness_of(&w, tolerance)
}

pub fn witness_of(wave: &JointWave, tolerance: f64) -> Result<Witness> {
    if !(tolerance > 0.0) {
        return Err(Error::NonPositiveTolerance(tolerance));
    }
    let sv = wave.schmidt_values(&[0]);
    let rank = sv.iter().filter(|&&s| s > tolerance).count();
    Ok(Witness {
        schmidt_values: sv,
        schmidt_rank: rank,
        entangled: rank >= 2,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evidence {
    Probability(f64),
    Branches(Vec<String>),
    /// Keys of the premises that hold.
    Premises(Vec<String>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Statement {
    pub key: &'static str,
    pub claim: &'static str,
    pub holds: bool,
    pub evidence: Evidence,
    pub probe_annotation: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContradictionReport {
    pub mode: Mode,
    /// `(lab, target)` for every lab.
    pub probe_targets: Vec<(usize, ProbeTarget)>,
    pub statements: Vec<Statement>,
    pub consistent: bool,
}

impl ContradictionReport {
    pub fn statement(&self, key: &str) -> Option<&Statement> {
        self.statements.iter().find(|s| s.key == key)
    }

    pub fn verdict(&self) -> &'static str {
        if self.consistent {
            "consistent"
        } else {
            "inconsistent set"
        }
    }
}

/// `(F-chain, probe shifts)` for every branch reaching the Wigners.
struct Hypotheses {
    probes: Vec<String>,
    table: Vec<(Tags, Vec<Complex64>)>,
    tol: f64,
}

impl Hypotheses {
    fn new(config: &ScenarioConfig, ensemble: &Ensemble) -> Result<Self> {
        let probes = config.probe_ids();
        let mut table: Vec<(Tags, Vec<Complex64>)> = Vec::new();
        for e in &ensemble.elements {
            for b in e.state.branches() {
                let mut chain = Vec::new();
                for lab in config.lab_list() {
                    chain.push((lab.friend_tag(), e.state.label_of(b, &lab.pointer())?.to_string()));
                }
                let shifts = probes.iter().map(|p| e.state.shift_of(b, p)).collect::<Result<Vec<_>>>()?;
                if !table.iter().any(|(c0, s0)| *c0 == chain && *s0 == shifts) {
                    table.push((chain, shifts));
                }
            }
        }
        Ok(Hypotheses {
            probes,
            table,
            tol: cluster_tol(config.gamma, None),
        })
    }

    /// Friend outcomes shared by every hypothesis matching `shifts`.
    fn decode(&self, shifts: &[Complex64]) -> Option<String> {
        let matches: Vec<&Vec<(String, String)>> = self
            .table
            .iter()
            .filter(|(_, s)| s.iter().zip(shifts).all(|(a, b)| (a - b).norm() <= self.tol))
            .map(|(chain, _)| chain)
            .collect();
        let first = matches.first()?;
        let agreed: Vec<String> = first
            .iter()
            .filter(|pair| matches.iter().all(|m| m.contains(pair)))
            .map(|(t, l)| format!("{t}={l}"))
            .collect();
        Some(agreed.join(", "))
    }

    fn describe_term(&self, shifts: &[Complex64]) -> String {
        match self.decode(shifts) {
            None => "unrecognized probe shifts".into(),
            Some(s) if s.is_empty() => "probes do not distinguish the Friends' outcomes".into(),
            Some(s) => s,
        }
    }

    /// Annotation for the surviving terms of one coherent state.
    fn annotate_state(&self, st: &BranchState) -> Result<String> {
        if self.probes.is_empty() {
            return Ok("no probes attached".into());
        }
        let mut tuples: Vec<Vec<Complex64>> = Vec::new();
        for b in st.branches() {
            let s = self.probes.iter().map(|p| st.shift_of(b, p)).collect::<Result<Vec<_>>>()?;
            if !tuples
                .iter()
                .any(|t| t.iter().zip(&s).all(|(a, b)| (a - b).norm() <= self.tol))
            {
                tuples.push(s);
            }
        }
        Ok(match tuples.len() {
            0 => "no surviving terms".into(),
            1 => {
                let d = self.describe_term(&tuples[0]);
                if d.contains('=') {
                    format!("probes indicate {d}")
                } else {
                    d
                }
            }
            _ => {
                let parts: Vec<String> = tuples.iter().map(|t| self.describe_term(t)).collect();
                format!("superposition of ({}); no specific outcome indicated", parts.join(") and ("))
            }
        })
    }
}

/// Leading-order survivors of an ensemble conditioned on Wigner outcomes.
struct Conditioned {
    state: BranchState,
}

fn condition(config: &ScenarioConfig, ensemble: &Ensemble, on: &[(Lab, SpinBasis, &str)]) -> Result<Vec<Conditioned>> {
    let mut out = Vec::new();
    'elements: for e in &ensemble.elements {
        let mut st = e.state.clone();
        for &(lab, basis, label) in on {
            let outcome = scenario::wigner_measure(&st, config, lab, basis)?
                .into_iter()
                .find(|o| o.label == label)
                .ok_or_else(|| Error::NoSuchOutcome(label.to_string()))?;
            if !(outcome.probability > 0.0) {
                continue 'elements;
            }
            st = outcome.state;
        }
        out.push(Conditioned { state: st });
    }
    Ok(out)
}

/// Friend outcomes of `reveal` that survive leading-order truncation,
/// with the annotation of each survivor.
fn survivors(
    config: &ScenarioConfig,
    conditioned: &[Conditioned],
    reveal: Lab,
    hyp: &Hypotheses,
) -> Result<Vec<(String, Vec<String>)>> {
    let basis = reveal.friend_basis();
    let mut out: Vec<(String, Vec<String>)> = Vec::new();
    for cnd in conditioned {
        for o in scenario::wigner_measure(&cnd.state, config, reveal, basis)? {
            if !(o.probability > 0.0) {
                continue;
            }
            let t = weak::truncate_order(&o.state, Order::Leading).state;
            if t.is_empty() {
                continue;
            }
            let note = hyp.annotate_state(&t)?;
            match out.iter_mut().find(|(l, _)| *l == o.label) {
                Some(s) => s.1.push(note),
                None => out.push((o.label, vec![note])),
            }
        }
    }
    Ok(out)
}

fn join_notes(notes: &[String]) -> String {
    let distinct: BTreeSet<&String> = notes.iter().collect();
    let v: Vec<&str> = distinct.into_iter().map(String::as_str).collect();
    if v.len() == 1 {
        v[0].to_string()
    } else {
        format!("mixture: {}", v.join(" | "))
    }
}

fn survivor_statement(
    key: &'static str,
    claim: &'static str,
    lab: Lab,
    expected: &str,
    surv: &[(String, Vec<String>)],
) -> Statement {
    let holds = surv.len() == 1 && surv[0].0 == expected;
    let branches = surv.iter().map(|(l, _)| format!("{}={l}", lab.friend_tag())).collect();
    let notes: Vec<String> = surv
        .iter()
        .map(|(l, n)| format!("{}={l}: {}", lab.friend_tag(), join_notes(n)))
        .collect();
    Statement {
        key,
        claim,
        holds,
        evidence: Evidence::Branches(branches),
        probe_annotation: notes.join("; "),
    }
}

/// Evaluate statements (i)-(v) for an EWFS configuration.
pub fn contradiction_report(config: &ScenarioConfig) -> Result<ContradictionReport> {
    if config.variant != Variant::Ewfs {
        return Err(Error::InvalidConfig("the contradiction report needs the EWFS variant".into()));
    }
    let ensemble = scenario::evolve(config)?;
    let hyp = Hypotheses::new(config, &ensemble)?;
    let (l1, l2) = (Lab::One, Lab::Two);

    // (i): exact zero of F1=+ and F2=up
    let mut p_i = 0.0;
    for e in &ensemble.elements {
        let a = e.state.project(&l1.pointer(), &Projection::Label(PLUS.into()))?;
        if a.probability > 0.0 {
            let b = a.state.project(&l2.pointer(), &Projection::Label(UP.into()))?;
            p_i += e.weight * b.probability;
        }
    }
    let s_i = Statement {
        key: "i",
        claim: "F2=up implies F1=-",
        holds: p_i == 0.0,
        evidence: Evidence::Probability(p_i),
        probe_annotation: "holds by construction of the preparation gate".into(),
    };

    let c_ii = condition(config, &ensemble, &[(l2, l2.wigner_basis(), MINUS)])?;
    let s_ii = survivor_statement("ii", "W2=- implies F1=+", l1, PLUS, &survivors(config, &c_ii, l1, &hyp)?);

    let c_iii = condition(config, &ensemble, &[(l1, l1.wigner_basis(), UP)])?;
    let s_iii = survivor_statement("iii", "W1=up implies F2=up", l2, UP, &survivors(config, &c_iii, l2, &hyp)?);

    let premises: Vec<String> = [&s_i, &s_ii, &s_iii]
        .iter()
        .filter(|s| s.holds)
        .map(|s| s.key.to_string())
        .collect();
    let iv_holds = s_i.holds && s_ii.holds && s_iii.holds;
    let definite = |s: &Statement| s.probe_annotation.contains("probes indicate") && !s.probe_annotation.contains("mixture");
    let s_iv = Statement {
        key: "iv",
        claim: "W1=up and W2=- cannot occur jointly",
        holds: iv_holds,
        evidence: Evidence::Premises(premises),
        probe_annotation: if iv_holds && definite(&s_ii) && definite(&s_iii) {
            "probe information in (ii) and (iii) strengthens the apparent contradiction (iv)".into()
        } else if iv_holds {
            "derived from (i)-(iii)".into()
        } else {
            "not derivable: a premise fails".into()
        },
    };

    let c_v = condition(
        config,
        &ensemble,
        &[(l1, l1.wigner_basis(), UP), (l2, l2.wigner_basis(), MINUS)],
    )?;
    let result = scenario::run(config)?;
    let p_v = result.probability(&[("W1", UP), ("W2", MINUS)]);
    let mut notes = Vec::new();
    for cnd in &c_v {
        let t = weak::truncate_order(&cnd.state, Order::Leading).state;
        if !t.is_empty() {
            notes.push(hyp.annotate_state(&t)?);
        }
    }
    let s_v = Statement {
        key: "v",
        claim: "W1=up and W2=- occur with nonzero probability",
        holds: p_v > 0.0,
        evidence: Evidence::Probability(p_v),
        probe_annotation: if notes.is_empty() {
            "no surviving terms".into()
        } else {
            join_notes(&notes)
        },
    };
    let consistent = !(s_iv.holds && s_v.holds);
    Ok(ContradictionReport {
        mode: config.mode,
        probe_targets: config
            .lab_list()
            .into_iter()
            .map(|l| (l.number(), config.lab(l).probe))
            .collect(),
        statements: vec![s_i, s_ii, s_iii, s_iv, s_v],
        consistent,
    })
}

/// Fidelity of `wave` with its best single product packet, maximized over
/// the product terms' centre tuples. Used as a brute-force check of the
/// classifiers.
pub fn best_product_fidelity(wave: &JointWave) -> Result<f64> {
    let w = wave.normalized()?;
    let mut best: f64 = 0.0;
    for t in w.terms() {
        let probe = JointWave::new(
            w.sigma(),
            w.probes().to_vec(),
            vec![ProductTerm {
                amplitude: c(1.0, 0.0),
                centers: t.centers.clone(),
            }],
        )?
        .normalized()?;
        let ov = joint_inner(&probe, &w);
        best = best.max(ov.norm_sqr());
    }
    Ok(best)
}

fn joint_inner(a: &JointWave, b: &JointWave) -> Complex64 {
    let sigma = a.sigma();
    let mut acc = ZERO;
    for ta in a.terms() {
        for tb in b.terms() {
            let mut o = ta.amplitude.conj() * tb.amplitude;
            for (x, y) in ta.centers.iter().zip(&tb.centers) {
                o *= crate::gaussian::unit_overlap(*x, *y, sigma);
            }
            acc += o;
        }
    }
    acc
}
