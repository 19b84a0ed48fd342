//! Wigner-Friend (WFS) and extended (EWFS) protocols with weak probes.
//!
//! Registers: spin `s1`, Friend pointer `m1` and environment `e1` for lab 1
//! (plus `s2`, `m2`, `e2` for lab 2 in EWFS), and one probe `p1`/`p2` per
//! lab that has a probe attached. The event order of [`evolve`] is
//!
//! 1. prepare `s1` in `(|+⟩ + √2|−⟩)/√3`, everything else ready;
//! 2. lab-1 spin probe;
//! 3. F1 premeasures `s1` in the x basis (pointer and environment copy it);
//! 4. collapse of F1's pointer (collapse mode);
//! 5. EWFS only: a gate prepares `s2` in `|↓⟩` if `s1 = +` and `|+⟩` if
//!    `s1 = −`, then lab-2 spin probe, F2 premeasurement in the z basis and
//!    collapse of F2's pointer (collapse mode);
//! 6. optional environment unitaries;
//! 7. pointer and environment probes.
//!
//! The Wigners then measure each lab in the basis `|L w⟩ = Σ_f ⟨f|w⟩ |L f⟩`
//! with `|L f⟩ = |f⟩_s |m f⟩ |e f⟩` (the environment vector evolved by the
//! environment unitary): z for lab 1, x for lab 2.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::gaussian::JointWave;
use crate::linalg::{self, c, CMatrix, CVector};
use crate::observable::{initial_spin, spin_down, spin_plus, Basis, Observable, SpinBasis, READY};
use crate::state::{BranchState, Projection, RegisterSpec, TargetAction};
use crate::weak;
use crate::{Error, Result};

/// Probability leaking outside a lab's record span beyond this (relative)
/// is reported as an error by [`wigner_measure`].
pub const LEAK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variant {
    Wfs,
    Ewfs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Unitary,
    Collapse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coupling {
    /// Weak-value displacements relative to the lab's record structure.
    FirstOrder,
    /// Eigen-decomposition of `exp(−iγÂP̂)`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProbeTarget {
    None,
    Spin,
    Pointer,
    Environment,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lab {
    One,
    Two,
}

impl Lab {
    pub fn number(self) -> usize {
        match self {
            Lab::One => 1,
            Lab::Two => 2,
        }
    }

    pub fn from_number(n: usize) -> Option<Lab> {
        match n {
            1 => Some(Lab::One),
            2 => Some(Lab::Two),
            _ => None,
        }
    }

    pub fn spin(self) -> String {
        format!("s{}", self.number())
    }

    pub fn pointer(self) -> String {
        format!("m{}", self.number())
    }

    pub fn environment(self) -> String {
        format!("e{}", self.number())
    }

    pub fn probe(self) -> String {
        format!("p{}", self.number())
    }

    pub fn friend_tag(self) -> String {
        format!("F{}", self.number())
    }

    pub fn wigner_tag(self) -> String {
        format!("W{}", self.number())
    }

    /// Basis in which the Friend measures the spin.
    pub fn friend_basis(self) -> SpinBasis {
        match self {
            Lab::One => SpinBasis::X,
            Lab::Two => SpinBasis::Z,
        }
    }

    /// Basis in which the Wigner measures the lab.
    pub fn wigner_basis(self) -> SpinBasis {
        self.friend_basis().other()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabConfig {
    pub probe: ProbeTarget,
    /// 2×2 for spin targets, 3×3 over `(ready, out0, out1)` otherwise.
    pub observable: Option<Observable>,
    /// 3×3 unitary applied to the environment after the Friends' events.
    pub env_unitary: Option<CMatrix>,
}

impl Default for LabConfig {
    fn default() -> Self {
        LabConfig {
            probe: ProbeTarget::None,
            observable: None,
            env_unitary: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub variant: Variant,
    pub mode: Mode,
    pub coupling: Coupling,
    pub gamma: f64,
    pub sigma: f64,
    pub environment: bool,
    pub seed: u64,
    /// One entry per lab (one for WFS, two for EWFS).
    pub labs: Vec<LabConfig>,
}

impl ScenarioConfig {
    /// Defaults: first-order coupling, γ = 1e-2, σ = 1, environments on,
    /// no probes.
    pub fn new(variant: Variant, mode: Mode) -> Self {
        let n = match variant {
            Variant::Wfs => 1,
            Variant::Ewfs => 2,
        };
        ScenarioConfig {
            variant,
            mode,
            coupling: Coupling::FirstOrder,
            gamma: 1e-2,
            sigma: 1.0,
            environment: true,
            seed: 0,
            labs: vec![LabConfig::default(); n],
        }
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_coupling(mut self, coupling: Coupling) -> Self {
        self.coupling = coupling;
        self
    }

    pub fn with_probe(mut self, lab: Lab, target: ProbeTarget, observable: Observable) -> Self {
        if let Some(l) = self.labs.get_mut(lab.number() - 1) {
            l.probe = target;
            l.observable = Some(observable);
        }
        self
    }

    pub fn lab_list(&self) -> Vec<Lab> {
        match self.variant {
            Variant::Wfs => vec![Lab::One],
            Variant::Ewfs => vec![Lab::One, Lab::Two],
        }
    }

    pub fn lab(&self, lab: Lab) -> &LabConfig {
        &self.labs[lab.number() - 1]
    }

    pub fn probe_ids(&self) -> Vec<String> {
        self.lab_list()
            .into_iter()
            .filter(|&l| self.lab(l).probe != ProbeTarget::None)
            .map(Lab::probe)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidCoupling(self.gamma));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidWidth(self.sigma));
        }
        let expected = self.lab_list().len();
        if self.labs.len() != expected {
            return bad(format!(
                "{:?} takes {expected} lab section(s), found {}",
                self.variant,
                self.labs.len()
            ));
        }
        for lab in self.lab_list() {
            let cfg = self.lab(lab);
            let name = format!("lab{}", lab.number());
            let dim = match cfg.probe {
                ProbeTarget::None => None,
                ProbeTarget::Spin => Some(2),
                ProbeTarget::Pointer | ProbeTarget::Environment => Some(3),
            };
            match (dim, &cfg.observable) {
                (None, Some(_)) => return bad(format!("{name}: observable given but no probe is attached")),
                (Some(_), None) => return bad(format!("{name}: probe needs an observable")),
                (Some(d), Some(o)) if o.dim() != d => {
                    return bad(format!(
                        "{name}: observable must be {d}x{d} for this probe target, found {}x{}",
                        o.dim(),
                        o.dim()
                    ))
                }
                _ => {}
            }
            if cfg.probe == ProbeTarget::Environment && !self.environment {
                return bad(format!("{name}: environment probe requires environment registers"));
            }
            if let Some(u) = &cfg.env_unitary {
                if !self.environment {
                    return bad(format!("{name}: env_unitary requires environment registers"));
                }
                if u.nrows() != 3 || u.ncols() != 3 {
                    return bad(format!("{name}: env_unitary must be 3x3"));
                }
                linalg::check_unitary(u)?;
            }
        }
        Ok(())
    }
}

fn record_labels(lab: Lab) -> [&'static str; 3] {
    let [a, b] = lab.friend_basis().labels();
    [READY, a, b]
}

/// Initial product state with every probe centred at zero.
pub fn build_initial(config: &ScenarioConfig) -> Result<BranchState> {
    config.validate()?;
    let mut parts: Vec<(RegisterSpec, Option<CVector>)> = Vec::new();
    for lab in config.lab_list() {
        let spin = match lab {
            Lab::One => initial_spin(),
            Lab::Two => spin_down(),
        };
        parts.push((RegisterSpec::spin(&lab.spin()), Some(spin)));
        parts.push((RegisterSpec::label(&lab.pointer(), &record_labels(lab)), None));
        if config.environment {
            parts.push((RegisterSpec::label(&lab.environment(), &record_labels(lab)), None));
        }
    }
    for id in config.probe_ids() {
        parts.push((RegisterSpec::probe(&id), None));
    }
    BranchState::product(config.sigma, parts)
}

fn swap_ready(k: usize) -> CMatrix {
    let mut u = CMatrix::identity(3, 3);
    u.swap_columns(0, k + 1);
    u
}

/// The Friend's premeasurement: pointer and environment copy the spin's
/// label in `basis`. The spin register is re-expressed in `basis` so that
/// each branch carries matching labels.
pub fn friend_premeasure(state: &BranchState, lab: Lab, basis: SpinBasis) -> Result<BranchState> {
    let m = lab.pointer();
    if !state.all_labelled(&m, READY)? {
        return Err(Error::ProtocolOrder(format!(
            "pointer {m} is not ready for the premeasurement"
        )));
    }
    let b = basis.basis();
    let s = lab.spin();
    let mut st = state.rebase(&s, &b)?;
    let actions: BTreeMap<String, TargetAction> = b
        .labels()
        .iter()
        .enumerate()
        .map(|(k, l)| (l.clone(), TargetAction::Unitary(swap_ready(k))))
        .collect();
    st = st.controlled_map(&s, &b, &m, &actions)?;
    let e = lab.environment();
    if st.has_register(&e) {
        st = st.controlled_map(&s, &b, &e, &actions)?;
    }
    Ok(st)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub label: String,
    pub probability: f64,
    /// Normalized for Friend collapses; unnormalized (norm² = probability ×
    /// input norm²) for Wigner measurements.
    pub state: BranchState,
}

/// Projective readout of the Friend's pointer; every outcome with nonzero
/// probability, renormalized.
pub fn friend_collapse(state: &BranchState, lab: Lab) -> Result<Vec<Outcome>> {
    let m = lab.pointer();
    let total = state.norm_sq();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let labels: Vec<String> = state.register(&m)?.basis_labels().to_vec();
    let mut out = Vec::new();
    for l in labels {
        let p = state.project(&m, &Projection::Label(l.clone()))?;
        if p.probability > 0.0 {
            out.push(Outcome {
                label: l,
                probability: p.probability / total,
                state: p.state.normalized()?,
            });
        }
    }
    Ok(out)
}

/// The EWFS gate: `s2 ← |↓⟩` if `s1 = +`, `s2 ← |+⟩` if `s1 = −`.
pub fn prepare_second_spin(state: &BranchState) -> Result<BranchState> {
    let b = SpinBasis::X.basis();
    let mut actions = BTreeMap::new();
    actions.insert(b.labels()[0].clone(), TargetAction::Prepare(spin_down()));
    actions.insert(b.labels()[1].clone(), TargetAction::Prepare(spin_plus()));
    state.controlled_map(&Lab::One.spin(), &b, &Lab::Two.spin(), &actions)
}

fn env_basis(config: &ScenarioConfig, lab: Lab) -> Result<Basis> {
    let labels: Vec<String> = record_labels(lab).iter().map(|s| s.to_string()).collect();
    match &config.lab(lab).env_unitary {
        Some(u) => Basis::new(labels, u.clone()),
        None => Ok(Basis::new(labels, CMatrix::identity(3, 3))?),
    }
}

/// Couple the lab's probe to its target register.
///
/// Returns the coupled state and the weight neglected by the first-order
/// coupling (zero for the exact one).
pub fn attach_probe(state: &BranchState, config: &ScenarioConfig, lab: Lab) -> Result<(BranchState, f64)> {
    let cfg = config.lab(lab);
    let Some(obs) = &cfg.observable else {
        return Ok((state.clone(), 0.0));
    };
    let m = lab.pointer();
    let (register, reference) = match cfg.probe {
        ProbeTarget::None => return Ok((state.clone(), 0.0)),
        ProbeTarget::Spin => {
            if !state.all_labelled(&m, READY)? {
                return Err(Error::ProtocolOrder(format!(
                    "spin probe of lab {} must couple before the Friend's premeasurement",
                    lab.number()
                )));
            }
            (lab.spin(), lab.friend_basis().basis())
        }
        ProbeTarget::Pointer | ProbeTarget::Environment => {
            if state.any_labelled(&m, READY)? {
                return Err(Error::ProtocolOrder(format!(
                    "{:?} probe of lab {} must couple after the Friend's premeasurement",
                    cfg.probe,
                    lab.number()
                )));
            }
            if cfg.probe == ProbeTarget::Pointer {
                (m, Basis::standard(&record_labels(lab)))
            } else {
                (lab.environment(), env_basis(config, lab)?)
            }
        }
    };
    let probe = lab.probe();
    match config.coupling {
        Coupling::Exact => Ok((weak::couple_exact(state, &register, obs, &probe, config.gamma)?, 0.0)),
        Coupling::FirstOrder => {
            let r = weak::couple_first_order(state, &register, obs, &probe, config.gamma, &reference)?;
            Ok((r.state, r.neglected_weight))
        }
    }
}

/// Ket `|L f⟩` of a lab as one canonical vector per lab register.
pub fn record_vectors(config: &ScenarioConfig, lab: Lab, f: usize) -> Result<Vec<CVector>> {
    let mut e = CVector::zeros(3);
    e[f + 1] = linalg::ONE;
    let mut out = vec![lab.friend_basis().vector(f), e.clone()];
    if config.environment {
        let u = config.lab(lab).env_unitary.clone().unwrap_or_else(|| CMatrix::identity(3, 3));
        out.push(u * e);
    }
    Ok(out)
}

fn lab_register_ids(config: &ScenarioConfig, lab: Lab) -> Vec<String> {
    let mut ids = vec![lab.spin(), lab.pointer()];
    if config.environment {
        ids.push(lab.environment());
    }
    ids
}

/// The Wigner's measurement of a whole lab in `|L w⟩`, `w ∈ basis`.
///
/// Every basis outcome is returned (possibly with probability 0); each
/// outcome state has the lab's registers removed.
pub fn wigner_measure(state: &BranchState, config: &ScenarioConfig, lab: Lab, basis: SpinBasis) -> Result<Vec<Outcome>> {
    let m = lab.pointer();
    // partial ready amplitude (from exact record couplings) counts as leakage
    if state.all_labelled(&m, READY)? {
        return Err(Error::ProtocolOrder(format!("pointer {m} has not been premeasured")));
    }
    let total = state.norm_sq();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let ids = lab_register_ids(config, lab);
    let id_refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    let fb = lab.friend_basis();
    let records = [record_vectors(config, lab, 0)?, record_vectors(config, lab, 1)?];
    let mut out = Vec::with_capacity(2);
    let mut captured = 0.0;
    for (k, label) in basis.labels().iter().enumerate() {
        let w = basis.vector(k);
        let bra: Vec<(num_complex::Complex64, Vec<CVector>)> = (0..2)
            .map(|f| (fb.vector(f).dotc(&w), records[f].clone()))
            .filter(|(a, _)| *a != linalg::ZERO)
            .collect();
        let st = state.contract(&id_refs, &bra)?;
        let n = st.norm_sq();
        captured += n;
        out.push(Outcome {
            label: label.to_string(),
            probability: n / total,
            state: st,
        });
    }
    let leak = (total - captured) / total;
    if leak > LEAK_TOL {
        return Err(Error::OutsideRecordSpan(leak));
    }
    Ok(out)
}

/// One member of the ensemble reaching the Wigners.
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    /// `(F1, label)`, `(F2, label)` in collapse mode; empty in unitary mode.
    pub friend: Vec<(String, String)>,
    pub weight: f64,
    /// Normalized state.
    pub state: BranchState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub elements: Vec<Element>,
    /// `1 − ‖ψ‖²` before the final renormalization, weighted over elements.
    pub norm_defect: f64,
    /// Weight dropped by first-order couplings.
    pub neglected_weight: f64,
}

fn collapse_all(elements: Vec<Element>, lab: Lab) -> Result<Vec<Element>> {
    let mut out = Vec::new();
    for e in elements {
        for o in friend_collapse(&e.state, lab)? {
            let mut friend = e.friend.clone();
            friend.push((lab.friend_tag(), o.label));
            out.push(Element {
                friend,
                weight: e.weight * o.probability,
                state: o.state,
            });
        }
    }
    Ok(out)
}

fn map_states(elements: &mut [Element], mut f: impl FnMut(&BranchState) -> Result<BranchState>) -> Result<()> {
    for e in elements.iter_mut() {
        e.state = f(&e.state)?;
    }
    Ok(())
}

/// Run the protocol up to (not including) the Wigner measurements.
pub fn evolve(config: &ScenarioConfig) -> Result<Ensemble> {
    let init = build_initial(config)?;
    let mut elements = vec![Element {
        friend: Vec::new(),
        weight: 1.0,
        state: init,
    }];
    let mut neglected = 0.0;
    let mut probe = |elements: &mut Vec<Element>, lab: Lab, spin_stage: bool| -> Result<()> {
        let target = config.lab(lab).probe;
        if (target == ProbeTarget::Spin) != spin_stage || target == ProbeTarget::None {
            return Ok(());
        }
        for e in elements.iter_mut() {
            let (st, n) = attach_probe(&e.state, config, lab)?;
            e.state = st;
            neglected += e.weight * n;
        }
        Ok(())
    };
    probe(&mut elements, Lab::One, true)?;
    map_states(&mut elements, |s| friend_premeasure(s, Lab::One, Lab::One.friend_basis()))?;
    if config.mode == Mode::Collapse {
        elements = collapse_all(elements, Lab::One)?;
    }
    if config.variant == Variant::Ewfs {
        map_states(&mut elements, prepare_second_spin)?;
        probe(&mut elements, Lab::Two, true)?;
        map_states(&mut elements, |s| friend_premeasure(s, Lab::Two, Lab::Two.friend_basis()))?;
        if config.mode == Mode::Collapse {
            elements = collapse_all(elements, Lab::Two)?;
        }
    }
    for lab in config.lab_list() {
        if let Some(u) = &config.lab(lab).env_unitary {
            map_states(&mut elements, |s| s.apply_unitary(&lab.environment(), u))?;
        }
    }
    for lab in config.lab_list() {
        probe(&mut elements, lab, false)?;
    }
    let mut defect = 0.0;
    for e in elements.iter_mut() {
        let n = e.state.norm_sq();
        defect += e.weight * (1.0 - n);
        e.state = e.state.normalized()?;
    }
    Ok(Ensemble {
        elements,
        norm_defect: defect,
        neglected_weight: neglected,
    })
}

/// `(tag, label)` pairs such as `("F1", "+")`, `("W2", "-")`.
pub type Tags = Vec<(String, String)>;

/// One row of the outcome table.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeRow {
    /// `(tag, label)` pairs: Friend tags first (collapse mode), then Wigner tags.
    pub outcomes: Vec<(String, String)>,
    pub probability: f64,
    /// Conditional probe wavefunction scaled so that its squared norm is
    /// `probability`.
    pub wave: JointWave,
}

impl OutcomeRow {
    pub fn get(&self, tag: &str) -> Option<&str> {
        self.outcomes.iter().find(|(t, _)| t == tag).map(|(_, l)| l.as_str())
    }

    pub fn matches(&self, filter: &[(&str, &str)]) -> bool {
        filter.iter().all(|(t, l)| self.get(t) == Some(*l))
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.outcomes.iter().map(|(t, l)| format!("{t}={l}")).collect();
        parts.join(",")
    }
}

pub(crate) fn describe_filter(filter: &[(&str, &str)]) -> String {
    let parts: Vec<String> = filter.iter().map(|(t, l)| format!("{t}={l}")).collect();
    format!("{{{}}}", parts.join(","))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioResult {
    pub variant: Variant,
    pub mode: Mode,
    pub coupling: Coupling,
    pub gamma: f64,
    pub sigma: f64,
    pub probes: Vec<String>,
    pub rows: Vec<OutcomeRow>,
    pub norm_defect: f64,
    pub neglected_weight: f64,
}

impl ScenarioResult {
    pub fn matching(&self, filter: &[(&str, &str)]) -> Vec<&OutcomeRow> {
        self.rows.iter().filter(|r| r.matches(filter)).collect()
    }

    /// The unique row matching every `(tag, label)` of `filter`.
    pub fn row(&self, filter: &[(&str, &str)]) -> Result<&OutcomeRow> {
        let m = self.matching(filter);
        match m.len() {
            0 => Err(Error::NoSuchOutcome(describe_filter(filter))),
            1 => Ok(m[0]),
            n => Err(Error::AmbiguousOutcome(n, describe_filter(filter))),
        }
    }

    pub fn probability(&self, filter: &[(&str, &str)]) -> f64 {
        self.matching(filter).iter().map(|r| r.probability).sum()
    }

    pub fn total_probability(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }
}

/// Measure every element lab by lab in the given bases; rows carry tags
/// `W1`, `W2` with the basis labels.
pub fn measure_table(config: &ScenarioConfig, ensemble: &Ensemble, bases: &[(Lab, SpinBasis)]) -> Result<Vec<OutcomeRow>> {
    let mut rows = Vec::new();
    for e in &ensemble.elements {
        let mut partial: Vec<(Tags, f64, BranchState)> = vec![(e.friend.clone(), 1.0, e.state.clone())];
        for &(lab, basis) in bases {
            let mut next = Vec::new();
            for (tags, p, st) in partial {
                if p == 0.0 {
                    for l in basis.labels() {
                        let mut t = tags.clone();
                        t.push((lab.wigner_tag(), l.to_string()));
                        next.push((t, 0.0, st.clone()));
                    }
                    continue;
                }
                for o in wigner_measure(&st, config, lab, basis)? {
                    let mut t = tags.clone();
                    t.push((lab.wigner_tag(), o.label));
                    next.push((t, p * o.probability, o.state));
                }
            }
            partial = next;
        }
        for (outcomes, _, st) in partial {
            let w = if st.is_empty() || st.registers().iter().any(|r| !r.is_probe()) {
                // impossible outcome, or registers left unmeasured
                if st.registers().iter().any(|r| !r.is_probe()) && !st.is_empty() {
                    return Err(Error::InvalidConfig("every lab must be measured".into()));
                }
                JointWave::new(st.sigma(), config.probe_ids(), Vec::new())?
            } else {
                st.to_joint_wave()?
            };
            let w = w.scaled(c(libm::sqrt(e.weight), 0.0));
            let probability = w.norm_sq();
            rows.push(OutcomeRow {
                outcomes,
                probability,
                wave: w,
            });
        }
    }
    Ok(rows)
}

/// Execute the protocol and tabulate the Wigners' outcomes.
pub fn run(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let ensemble = evolve(config)?;
    let bases: Vec<(Lab, SpinBasis)> = config.lab_list().into_iter().map(|l| (l, l.wigner_basis())).collect();
    let rows = measure_table(config, &ensemble, &bases)?;
    Ok(ScenarioResult {
        variant: config.variant,
        mode: config.mode,
        coupling: config.coupling,
        gamma: config.gamma,
        sigma: config.sigma,
        probes: config.probe_ids(),
        rows,
        norm_defect: ensemble.norm_defect,
        neglected_weight: ensemble.neglected_weight,
    })
}
