//! Composite states as explicit branch lists over labelled registers.
//!
//! A [`BranchState`] is `Σ_b a_b |labels_b⟩ ⊗ Π_p φ(x_p − s_{b,p})` where
//! every finite register carries one basis label per branch and every probe
//! carries a complex displacement `s` of a normalized Gaussian of common
//! width σ. Finite registers store their labels in a *storage basis* that
//! may differ from the register's canonical coordinates; all matrices and
//! vectors passed in are canonical and converted internally.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::gaussian::{self, JointWave, ProductTerm, CENTER_TOL};
use crate::linalg::{self, c, CMatrix, CVector, ONE, ZERO};
use crate::observable::{Basis, SpinBasis};
use crate::{Error, Result};

/// Branches whose amplitude falls below this after merging are dropped.
pub const DROP_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegisterKind {
    Spin,
    Label(usize),
    Probe,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterSpec {
    id: String,
    kind: RegisterKind,
    basis: Option<Basis>,
}

impl RegisterSpec {
    /// Two-level register stored in the σ_z basis (`down`, `up`).
    pub fn spin(id: &str) -> Self {
        RegisterSpec {
            id: id.to_string(),
            kind: RegisterKind::Spin,
            basis: Some(SpinBasis::Z.basis()),
        }
    }

    /// N-level register with orthonormal named labels.
    pub fn label(id: &str, labels: &[&str]) -> Self {
        RegisterSpec {
            id: id.to_string(),
            kind: RegisterKind::Label(labels.len()),
            basis: Some(Basis::standard(labels)),
        }
    }

    pub fn probe(id: &str) -> Self {
        RegisterSpec {
            id: id.to_string(),
            kind: RegisterKind::Probe,
            basis: None,
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> RegisterKind {
        self.kind
    }

    pub fn is_probe(&self) -> bool {
        self.kind == RegisterKind::Probe
    }

    /// Current storage basis; `None` for probes.
    pub fn basis(&self) -> Option<&Basis> {
        self.basis.as_ref()
    }

    pub fn basis_labels(&self) -> &[String] {
        self.basis.as_ref().map_or(&[], |b| b.labels())
    }

    pub fn dim(&self) -> usize {
        self.basis.as_ref().map_or(0, |b| b.dim())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub amplitude: Complex64,
    pub(crate) labels: Vec<usize>,
    pub(crate) shifts: Vec<Complex64>,
}

impl Branch {
    /// Storage-basis label indices, in finite-register order.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Probe displacements, in probe-register order.
    pub fn shifts(&self) -> &[Complex64] {
        &self.shifts
    }

    fn same_key(&self, other: &Branch) -> bool {
        self.labels == other.labels
            && self
                .shifts
                .iter()
                .zip(&other.shifts)
                .all(|(a, b)| linalg::close(*a, *b, CENTER_TOL))
    }
}

/// Target of a projection: a storage label or a canonical vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Label(String),
    Vector(CVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projected {
    /// Unnormalized projected state (no branches if the outcome is impossible).
    pub state: BranchState,
    /// Squared norm of `state`.
    pub probability: f64,
}

/// What a controlled map does to its target for one control basis vector.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetAction {
    Unitary(CMatrix),
    /// Unitary completion sending the fiducial canonical vector `e_0` to the
    /// given vector; on a target holding `e_0` this prepares the vector.
    Prepare(CVector),
}

/// One term of a product bra used by [`BranchState::contract`]: a
/// coefficient and one canonical vector per contracted register.
pub type BraTerm = (Complex64, Vec<CVector>);

#[derive(Debug, Clone, PartialEq)]
pub struct BranchState {
    registers: Vec<RegisterSpec>,
    slots: Vec<usize>,
    finite: Vec<usize>,
    probes: Vec<usize>,
    branches: Vec<Branch>,
    sigma: f64,
}

impl BranchState {
    /// Tensor product of per-register states. Finite registers take a
    /// canonical vector (`None` means the first label); probes must be
    /// `None` and start centred at zero.
    pub fn product(sigma: f64, parts: Vec<(RegisterSpec, Option<CVector>)>) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidWidth(sigma));
        }
        let registers: Vec<RegisterSpec> = parts.iter().map(|(r, _)| r.clone()).collect();
        let mut st = Self::skeleton(registers, sigma)?;
        let mut branches = vec![Branch {
            amplitude: ONE,
            labels: Vec::new(),
            shifts: vec![ZERO; st.probes.len()],
        }];
        for (r, (spec, v)) in parts.iter().enumerate() {
            if spec.is_probe() {
                if v.is_some() {
                    return Err(Error::RegisterKind {
                        register: spec.id.clone(),
                        expected: "finite register for an explicit vector",
                    });
                }
                continue;
            }
            let amps: Vec<Complex64> = match v {
                None => {
                    let mut e = vec![ZERO; spec.dim()];
                    e[0] = ONE;
                    e
                }
                Some(v) => st.storage_vector(r, v)?.iter().copied().collect(),
            };
            let mut next = Vec::new();
            for b in &branches {
                for (k, a) in amps.iter().enumerate() {
                    if *a != ZERO {
                        let mut labels = b.labels.clone();
                        labels.push(k);
                        next.push(Branch {
                            amplitude: b.amplitude * a,
                            labels,
                            shifts: b.shifts.clone(),
                        });
                    }
                }
            }
            branches = next;
        }
        st.branches = branches;
        st.canonicalize();
        Ok(st)
    }

    fn skeleton(registers: Vec<RegisterSpec>, sigma: f64) -> Result<Self> {
        let mut slots = Vec::with_capacity(registers.len());
        let mut finite = Vec::new();
        let mut probes = Vec::new();
        for (i, r) in registers.iter().enumerate() {
            if registers[..i].iter().any(|q| q.id == r.id) {
                return Err(Error::DuplicateRegister(r.id.clone()));
            }
            if r.is_probe() {
                slots.push(probes.len());
                probes.push(i);
            } else {
                slots.push(finite.len());
                finite.push(i);
            }
        }
        Ok(BranchState {
            registers,
            slots,
            finite,
            probes,
            branches: Vec::new(),
            sigma,
        })
    }

    pub(crate) fn with_branches(&self, branches: Vec<Branch>) -> Self {
        let mut st = BranchState {
            branches,
            ..self.skeleton_clone()
        };
        st.canonicalize();
        st
    }

    fn skeleton_clone(&self) -> Self {
        BranchState {
            registers: self.registers.clone(),
            slots: self.slots.clone(),
            finite: self.finite.clone(),
            probes: self.probes.clone(),
            branches: Vec::new(),
            sigma: self.sigma,
        }
    }

    pub fn registers(&self) -> &[RegisterSpec] {
        &self.registers
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    pub fn register(&self, id: &str) -> Result<&RegisterSpec> {
        Ok(&self.registers[self.index(id)?])
    }

    pub fn has_register(&self, id: &str) -> bool {
        self.registers.iter().any(|r| r.id == id)
    }

    fn index(&self, id: &str) -> Result<usize> {
        self.registers
            .iter()
            .position(|r| r.id == id)
            .ok_or_else(|| Error::UnknownRegister(id.to_string()))
    }

    /// Register index and label slot of a finite register.
    pub(crate) fn finite_slot(&self, id: &str) -> Result<(usize, usize)> {
        let r = self.index(id)?;
        if self.registers[r].is_probe() {
            return Err(Error::RegisterKind {
                register: id.to_string(),
                expected: "finite register",
            });
        }
        Ok((r, self.slots[r]))
    }

    pub(crate) fn probe_slot(&self, id: &str) -> Result<usize> {
        let r = self.index(id)?;
        if !self.registers[r].is_probe() {
            return Err(Error::RegisterKind {
                register: id.to_string(),
                expected: "probe",
            });
        }
        Ok(self.slots[r])
    }

    /// Ids of the probe registers, in slot order.
    pub fn probe_ids(&self) -> Vec<String> {
        self.probes.iter().map(|&r| self.registers[r].id.clone()).collect()
    }

    /// Ids of the finite registers, in slot order.
    pub fn finite_ids(&self) -> Vec<String> {
        self.finite.iter().map(|&r| self.registers[r].id.clone()).collect()
    }

    fn basis_of(&self, r: usize) -> &Basis {
        self.registers[r].basis.as_ref().expect("finite register has a basis")
    }

    /// Canonical vector expressed in the storage basis of register `r`.
    pub(crate) fn storage_vector(&self, r: usize, v: &CVector) -> Result<CVector> {
        let b = self.basis_of(r);
        if v.len() != b.dim() {
            return Err(Error::Dimension {
                expected: b.dim(),
                found: v.len(),
            });
        }
        if b.is_standard() {
            return Ok(v.clone());
        }
        Ok(b.vectors().adjoint() * v)
    }

    /// Columns of canonical vectors expressed in the storage basis.
    pub(crate) fn storage_columns(&self, r: usize, m: &CMatrix) -> Result<CMatrix> {
        let b = self.basis_of(r);
        if m.nrows() != b.dim() {
            return Err(Error::Dimension {
                expected: b.dim(),
                found: m.nrows(),
            });
        }
        Ok(b.vectors().adjoint() * m)
    }

    /// Canonical operator expressed in the storage basis of register `r`.
    pub(crate) fn storage_matrix(&self, r: usize, m: &CMatrix) -> Result<CMatrix> {
        let b = self.basis_of(r);
        if m.nrows() != b.dim() || m.ncols() != b.dim() {
            return Err(Error::Dimension {
                expected: b.dim(),
                found: m.nrows().max(m.ncols()),
            });
        }
        if b.is_standard() {
            return Ok(m.clone());
        }
        Ok(b.vectors().adjoint() * m * b.vectors())
    }

    /// Label name of a branch on a finite register.
    pub fn label_of(&self, branch: &Branch, id: &str) -> Result<&str> {
        let (r, s) = self.finite_slot(id)?;
        Ok(&self.basis_of(r).labels()[branch.labels[s]])
    }

    pub fn shift_of(&self, branch: &Branch, id: &str) -> Result<Complex64> {
        Ok(branch.shifts[self.probe_slot(id)?])
    }

    /// True when every branch holds `label` on register `id`.
    pub fn all_labelled(&self, id: &str, label: &str) -> Result<bool> {
        let (r, s) = self.finite_slot(id)?;
        let k = self.basis_of(r).index_of(label);
        Ok(k.is_some_and(|k| self.branches.iter().all(|b| b.labels[s] == k)))
    }

    /// True when some branch holds `label` on register `id`.
    pub fn any_labelled(&self, id: &str, label: &str) -> Result<bool> {
        let (r, s) = self.finite_slot(id)?;
        let k = self.basis_of(r).index_of(label);
        Ok(k.is_some_and(|k| self.branches.iter().any(|b| b.labels[s] == k)))
    }

    /// Merges duplicate branches, drops negligible ones and sorts.
    pub(crate) fn canonicalize(&mut self) {
        let mut out: Vec<Branch> = Vec::with_capacity(self.branches.len());
        for b in self.branches.drain(..) {
            if let Some(o) = out.iter_mut().find(|o| o.same_key(&b)) {
                o.amplitude += b.amplitude;
            } else {
                out.push(b);
            }
        }
        out.retain(|b| b.amplitude.norm() >= DROP_TOL);
        out.sort_by(|a, b| {
            a.labels.cmp(&b.labels).then_with(|| {
                for (x, y) in a.shifts.iter().zip(&b.shifts) {
                    let o = linalg::cmp_complex(x, y);
                    if o.is_ne() {
                        return o;
                    }
                }
                core::cmp::Ordering::Equal
            })
        });
        self.branches = out;
    }

    /// Canonical merged form (idempotent).
    pub fn canonical(&self) -> Self {
        let mut s = self.clone();
        s.canonicalize();
        s
    }

    fn pair_overlap(&self, a: &Branch, b: &Branch) -> Complex64 {
        if a.labels != b.labels {
            return ZERO;
        }
        let mut v = a.amplitude.conj() * b.amplitude;
        for (x, y) in a.shifts.iter().zip(&b.shifts) {
            v *= gaussian::unit_overlap(*x, *y, self.sigma);
        }
        v
    }

    /// `⟨self|other⟩`; both states must share the register layout.
    pub fn inner(&self, other: &BranchState) -> Result<Complex64> {
        if self.registers.len() != other.registers.len()
            || self
                .registers
                .iter()
                .zip(&other.registers)
                .any(|(a, b)| a.id != b.id || a.kind != b.kind)
        {
            return Err(Error::InvalidConfig(
                "inner product of states with different registers".into(),
            ));
        }
        let mut acc = ZERO;
        for a in &self.branches {
            for b in &other.branches {
                acc += self.pair_overlap(a, b);
            }
        }
        Ok(acc)
    }

    /// Squared norm including Gaussian overlaps between branches.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.branches.iter().enumerate() {
            // complex displacements carry a self-overlap above one
            acc += self.pair_overlap(a, a).re;
            for b in &self.branches[i + 1..] {
                acc += 2.0 * self.pair_overlap(a, b).re;
            }
        }
        acc
    }

    pub fn scaled(&self, f: Complex64) -> Self {
        let mut s = self.clone();
        for b in &mut s.branches {
            b.amplitude *= f;
        }
        s.canonicalize();
        s
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(c(1.0 / libm::sqrt(n), 0.0)))
    }

    /// Replace every branch by a linear combination over one finite slot.
    fn map_slot(&self, slot: usize, m: &CMatrix) -> Self {
        let mut out = Vec::with_capacity(self.branches.len() * m.nrows());
        for b in &self.branches {
            let l = b.labels[slot];
            for k in 0..m.nrows() {
                let u = m[(k, l)];
                if u != ZERO {
                    let mut nb = b.clone();
                    nb.labels[slot] = k;
                    nb.amplitude *= u;
                    out.push(nb);
                }
            }
        }
        self.with_branches(out)
    }

    pub fn apply_unitary(&self, id: &str, u: &CMatrix) -> Result<Self> {
        let (r, s) = self.finite_slot(id)?;
        let us = self.storage_matrix(r, u)?;
        linalg::check_unitary(u)?;
        Ok(self.map_slot(s, &us))
    }

    /// Apply a different action to `target` for each vector of
    /// `control_basis` (canonical coordinates of the control register).
    pub fn controlled_map(
        &self,
        control: &str,
        control_basis: &Basis,
        target: &str,
        actions: &BTreeMap<String, TargetAction>,
    ) -> Result<Self> {
        let (rc, sc) = self.finite_slot(control)?;
        let (rt, st) = self.finite_slot(target)?;
        if rc == rt {
            return Err(Error::InvalidConfig("control and target must differ".into()));
        }
        let dim_c = self.registers[rc].dim();
        if control_basis.dim() != dim_c || control_basis.vectors().nrows() != dim_c {
            return Err(Error::Dimension {
                expected: dim_c,
                found: control_basis.dim(),
            });
        }
        let mut ops = Vec::with_capacity(dim_c);
        for label in control_basis.labels() {
            let act = actions.get(label).ok_or_else(|| Error::MissingControlEntry(label.clone()))?;
            let u = match act {
                TargetAction::Unitary(u) => {
                    linalg::check_unitary(u)?;
                    u.clone()
                }
                TargetAction::Prepare(v) => linalg::unitary_completion(v)?,
            };
            ops.push(self.storage_matrix(rt, &u)?);
        }
        let vs = self.basis_of(rc).vectors().adjoint() * control_basis.vectors();
        let mut out = Vec::new();
        for b in &self.branches {
            let (cl, tl) = (b.labels[sc], b.labels[st]);
            for (k, op) in ops.iter().enumerate() {
                let proj = vs[(cl, k)].conj();
                if proj == ZERO {
                    continue;
                }
                for j in 0..dim_c {
                    let vj = vs[(j, k)];
                    if vj == ZERO {
                        continue;
                    }
                    for i in 0..op.nrows() {
                        let u = op[(i, tl)];
                        if u == ZERO {
                            continue;
                        }
                        let mut nb = b.clone();
                        nb.labels[sc] = j;
                        nb.labels[st] = i;
                        nb.amplitude *= proj * vj * u;
                        out.push(nb);
                    }
                }
            }
        }
        Ok(self.with_branches(out))
    }

    /// Rank-1 projection of one finite register.
    pub fn project(&self, id: &str, target: &Projection) -> Result<Projected> {
        let (r, s) = self.finite_slot(id)?;
        let w = match target {
            Projection::Label(l) => {
                let k = self.basis_of(r).index_of(l).ok_or_else(|| Error::UnknownLabel {
                    register: id.to_string(),
                    label: l.clone(),
                })?;
                let mut e = CVector::zeros(self.registers[r].dim());
                e[k] = ONE;
                e
            }
            Projection::Vector(v) => {
                let n = v.norm();
                if !(n > 0.0) {
                    return Err(Error::ZeroNorm);
                }
                self.storage_vector(r, &(v / c(n, 0.0)))?
            }
        };
        let p = &w * w.adjoint();
        let state = self.map_slot(s, &p);
        let probability = state.norm_sq();
        Ok(Projected { state, probability })
    }

    /// Projection followed by renormalization.
    pub fn project_normalized(&self, id: &str, target: &Projection) -> Result<(Self, f64)> {
        let p = self.project(id, target)?;
        if !(p.probability > 0.0) {
            return Err(Error::ZeroProbability);
        }
        Ok((p.state.normalized()?, p.probability))
    }

    /// Apply the bra `Σ_t conj(coef_t) ⊗_r ⟨v_{t,r}|` to the listed finite
    /// registers and remove them from the state.
    pub fn contract(&self, ids: &[&str], bra: &[BraTerm]) -> Result<Self> {
        let mut slots = Vec::with_capacity(ids.len());
        let mut regs = Vec::with_capacity(ids.len());
        for id in ids {
            let (r, s) = self.finite_slot(id)?;
            if regs.contains(&r) {
                return Err(Error::DuplicateRegister(id.to_string()));
            }
            regs.push(r);
            slots.push(s);
        }
        let mut terms: Vec<(Complex64, Vec<CVector>)> = Vec::with_capacity(bra.len());
        for (coef, vs) in bra {
            if vs.len() != ids.len() {
                return Err(Error::Dimension {
                    expected: ids.len(),
                    found: vs.len(),
                });
            }
            let mut st = Vec::with_capacity(vs.len());
            for (k, v) in vs.iter().enumerate() {
                st.push(self.storage_vector(regs[k], v)?);
            }
            terms.push((coef.conj(), st));
        }
        let keep: Vec<usize> = (0..self.registers.len()).filter(|r| !regs.contains(r)).collect();
        let new_regs: Vec<RegisterSpec> = keep.iter().map(|&r| self.registers[r].clone()).collect();
        let mut out = Self::skeleton(new_regs, self.sigma)?;
        let kept_slots: Vec<usize> = (0..self.finite.len()).filter(|s| !slots.contains(s)).collect();
        let mut branches = Vec::new();
        for b in &self.branches {
            let mut v = ZERO;
            for (coef, st) in &terms {
                let mut t = *coef;
                for (k, s) in slots.iter().enumerate() {
                    t *= st[k][b.labels[*s]].conj();
                }
                v += t;
            }
            if v != ZERO {
                branches.push(Branch {
                    amplitude: b.amplitude * v,
                    labels: kept_slots.iter().map(|&s| b.labels[s]).collect(),
                    shifts: b.shifts.clone(),
                });
            }
        }
        out.branches = branches;
        out.canonicalize();
        Ok(out)
    }

    /// Re-express one finite register in a new storage basis (no dynamics).
    pub fn rebase(&self, id: &str, basis: &Basis) -> Result<Self> {
        let (r, s) = self.finite_slot(id)?;
        let old = self.basis_of(r);
        if basis.dim() != old.dim() || basis.vectors().nrows() != old.dim() {
            return Err(Error::Dimension {
                expected: old.dim(),
                found: basis.dim(),
            });
        }
        let t = basis.vectors().adjoint() * old.vectors();
        let mut st = self.map_slot(s, &t);
        st.registers[r].basis = Some(basis.clone());
        Ok(st)
    }

    /// Add a shift to one probe on every branch.
    pub fn shift_probe(&self, probe: &str, s: Complex64) -> Result<Self> {
        let p = self.probe_slot(probe)?;
        let mut out = self.clone();
        for b in &mut out.branches {
            b.shifts[p] += s;
        }
        out.canonicalize();
        Ok(out)
    }

    /// Normalized Schmidt coefficients across `partition | rest`.
    pub fn schmidt_values(&self, partition: &[&str]) -> Result<Vec<f64>> {
        let mut left = vec![false; self.registers.len()];
        for id in partition {
            left[self.index(id)?] = true;
        }
        type Key = (Vec<usize>, Vec<Complex64>);
        let split = |b: &Branch, side: bool| -> Key {
            let labels = self
                .finite
                .iter()
                .enumerate()
                .filter(|(_, &r)| left[r] == side)
                .map(|(s, _)| b.labels[s])
                .collect();
            let shifts = self
                .probes
                .iter()
                .enumerate()
                .filter(|(_, &r)| left[r] == side)
                .map(|(s, _)| b.shifts[s])
                .collect();
            (labels, shifts)
        };
        let same = |a: &Key, b: &Key| a.0 == b.0 && a.1.iter().zip(&b.1).all(|(x, y)| linalg::close(*x, *y, CENTER_TOL));
        let mut lk: Vec<Key> = Vec::new();
        let mut rk: Vec<Key> = Vec::new();
        let mut entries = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            let (l, r) = (split(b, true), split(b, false));
            let li = lk.iter().position(|k| same(k, &l)).unwrap_or_else(|| {
                lk.push(l);
                lk.len() - 1
            });
            let ri = rk.iter().position(|k| same(k, &r)).unwrap_or_else(|| {
                rk.push(r);
                rk.len() - 1
            });
            entries.push((li, ri, b.amplitude));
        }
        let mut m = CMatrix::zeros(lk.len(), rk.len());
        for (i, j, a) in entries {
            m[(i, j)] += a;
        }
        let sigma = self.sigma;
        let gram = |keys: &[Key]| {
            CMatrix::from_fn(keys.len(), keys.len(), |i, j| {
                if keys[i].0 != keys[j].0 {
                    return ZERO;
                }
                keys[i]
                    .1
                    .iter()
                    .zip(&keys[j].1)
                    .fold(ONE, |acc, (x, y)| acc * gaussian::unit_overlap(*x, *y, sigma))
            })
        };
        Ok(linalg::schmidt_values(&m, &gram(&lk), &gram(&rk)))
    }

    /// Number of normalized Schmidt coefficients above `tol`.
    pub fn schmidt_rank(&self, partition: &[&str], tol: f64) -> Result<usize> {
        if !(tol > 0.0) {
            return Err(Error::NonPositiveTolerance(tol));
        }
        Ok(self.schmidt_values(partition)?.iter().filter(|&&s| s > tol).count())
    }

    /// The probe wavefunction of a state without finite registers.
    pub fn to_joint_wave(&self) -> Result<JointWave> {
        if let Some(&r) = self.finite.first() {
            return Err(Error::RegisterKind {
                register: self.registers[r].id.clone(),
                expected: "probe (finite registers must be contracted first)",
            });
        }
        let terms = self
            .branches
            .iter()
            .map(|b| ProductTerm {
                amplitude: b.amplitude,
                centers: b.shifts.clone(),
            })
            .collect();
        JointWave::new(self.sigma, self.probe_ids(), terms)
    }

    /// Probe-only state from a joint wavefunction.
    pub fn from_joint_wave(w: &JointWave) -> Result<Self> {
        let regs = w.probes().iter().map(|p| RegisterSpec::probe(p)).collect();
        let mut st = Self::skeleton(regs, w.sigma())?;
        st.branches = w
            .terms()
            .iter()
            .map(|t| Branch {
                amplitude: t.amplitude,
                labels: Vec::new(),
                shifts: t.centers.clone(),
            })
            .collect();
        st.canonicalize();
        Ok(st)
    }

    /// Joint vector of the finite registers listed, in canonical
    /// coordinates, for a state without probe displacement structure
    /// (all branches must share their shifts). Used by tests and oracles.
    pub fn finite_vector(&self, ids: &[&str]) -> Result<CVector> {
        if ids.len() != self.finite.len() {
            return Err(Error::Dimension {
                expected: self.finite.len(),
                found: ids.len(),
            });
        }
        let mut regs = Vec::new();
        for id in ids {
            regs.push(self.finite_slot(id)?);
        }
        let dims: Vec<usize> = regs.iter().map(|&(r, _)| self.registers[r].dim()).collect();
        let total: usize = dims.iter().product();
        let mut v = CVector::zeros(total);
        let reference = self.branches.first().map(|b| b.shifts.clone());
        for b in &self.branches {
            if let Some(s0) = &reference {
                if !b.shifts.iter().zip(s0).all(|(x, y)| linalg::close(*x, *y, CENTER_TOL)) {
                    return Err(Error::InvalidConfig("branches differ in probe shifts".into()));
                }
            }
            // expand the storage labels back to canonical coordinates
            let mut partial: Vec<(usize, Complex64)> = vec![(0, b.amplitude)];
            for (k, &(r, s)) in regs.iter().enumerate() {
                let col = self.basis_of(r).vector(b.labels[s]);
                let mut next = Vec::new();
                for (idx, a) in &partial {
                    for j in 0..dims[k] {
                        if col[j] != ZERO {
                            next.push((idx * dims[k] + j, a * col[j]));
                        }
                    }
                }
                partial = next;
            }
            for (idx, a) in partial {
                v[idx] += a;
            }
        }
        Ok(v)
    }

    fn fmt_branch(&self, b: &Branch, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:+.6}{:+.6}i) |", b.amplitude.re, b.amplitude.im)?;
        for (s, &r) in self.finite.iter().enumerate() {
            if s > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}:{}", self.registers[r].id, self.basis_of(r).labels()[b.labels[s]])?;
        }
        f.write_str(">")?;
        for (s, &r) in self.probes.iter().enumerate() {
            let z = b.shifts[s];
            write!(f, " {}@({:.6}{:+.6}i)", self.registers[r].id, z.re, z.im)?;
        }
        Ok(())
    }
}

impl fmt::Display for BranchState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.branches.is_empty() {
            return f.write_str("0");
        }
        for (i, b) in self.branches.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            self.fmt_branch(b, f)?;
        }
        Ok(())
    }
}

/// Readable description of a branch for ledgers and reports.
pub fn describe_labels(state: &BranchState, labels: &[usize]) -> String {
    let mut s = String::new();
    for (k, &r) in state.finite.iter().enumerate() {
        if k > 0 {
            s.push(',');
        }
        s.push_str(&format!(
            "{}={}",
            state.registers[r].id,
            state.basis_of(r).labels()[labels[k]]
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observable::{initial_spin, spin_down, spin_minus, spin_plus, spin_up, DOWN, MINUS, PLUS};
    use core::f64::consts::FRAC_1_SQRT_2;

    fn h() -> CMatrix {
        SpinBasis::X.basis().vectors().clone()
    }

    #[test]
    fn norm_examples() {
        let st = BranchState::product(1.0, vec![(RegisterSpec::spin("s"), None)]).unwrap();
        assert_eq!(st.norm_sq(), 1.0);
        let st = BranchState::product(1.0, vec![(RegisterSpec::spin("s"), Some(spin_plus()))]).unwrap();
        assert!((st.norm_sq() - 1.0).abs() < 1e-15);
        let d: f64 = 0.9;
        let st = BranchState::product(1.0, vec![(RegisterSpec::probe("p"), None)]).unwrap();
        let b = st.branches()[0].clone();
        let mut moved = b.clone();
        moved.shifts[0] = c(d, 0.0);
        let mut a1 = b;
        a1.amplitude = c(FRAC_1_SQRT_2, 0.0);
        moved.amplitude = c(FRAC_1_SQRT_2, 0.0);
        let two = st.with_branches(vec![a1, moved]);
        assert!((two.norm_sq() - (1.0 + libm::exp(-d * d / 8.0))).abs() < 1e-14);
    }

    #[test]
    fn unitary_examples() {
        let st = BranchState::product(1.0, vec![(RegisterSpec::spin("s"), None)]).unwrap();
        assert_eq!(st.apply_unitary("s", &CMatrix::identity(2, 2)).unwrap(), st);
        let x = st.apply_unitary("s", &h()).unwrap();
        assert_eq!(x.branches().len(), 2);
        for b in x.branches() {
            assert!((b.amplitude.re - FRAC_1_SQRT_2).abs() < 1e-15);
        }
        let back = x.apply_unitary("s", &h()).unwrap();
        assert_eq!(back.branches().len(), 1);
        assert!((back.branches()[0].amplitude - ONE).norm() < 1e-12);
        let bad = linalg::cmat(&[&[1.0, 0.0], &[0.0, 1.1]], None);
        assert!(matches!(st.apply_unitary("s", &bad), Err(Error::NotUnitary { .. })));
    }

    fn two_spins() -> BranchState {
        BranchState::product(
            1.0,
            vec![
                (RegisterSpec::spin("s1"), Some(initial_spin())),
                (RegisterSpec::spin("s2"), None),
            ],
        )
        .unwrap()
    }

    fn gate() -> BTreeMap<String, TargetAction> {
        let mut m = BTreeMap::new();
        m.insert(PLUS.to_string(), TargetAction::Prepare(spin_down()));
        m.insert(MINUS.to_string(), TargetAction::Prepare(spin_plus()));
        m
    }

    #[test]
    fn preparation_gate_reaches_entangled_pair() {
        let st = two_spins()
            .controlled_map("s1", &SpinBasis::X.basis(), "s2", &gate())
            .unwrap();
        let v = st.finite_vector(&["s1", "s2"]).unwrap();
        let a = 1.0 / libm::sqrt(3.0);
        let b = libm::sqrt(2.0) / libm::sqrt(3.0);
        let kron = |x: CVector, y: CVector| x.kronecker(&y);
        let expect = kron(spin_plus(), spin_down()) * c(a, 0.0) + kron(spin_minus(), spin_plus()) * c(b, 0.0);
        let fid = expect.dotc(&v).norm_sqr();
        assert!((fid - 1.0).abs() < 1e-12);
        assert!((st.norm_sq() - 1.0).abs() < 1e-12);
        assert_eq!(st.schmidt_rank(&["s1"], 1e-9).unwrap(), 2);
        let sv = st.schmidt_values(&["s1"]).unwrap();
        // 2×2 oracle: coefficients (1/√3)|+↓⟩ + √(2/3)|−+⟩ in orthonormal x/z frames
        let m = CMatrix::from_row_slice(2, 2, &[c(a, 0.0), ZERO, c(b * FRAC_1_SQRT_2, 0.0), c(b * FRAC_1_SQRT_2, 0.0)]);
        let oracle = linalg::singular_values(&m);
        for (x, y) in sv.iter().zip(&oracle) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_control_entry_is_named() {
        let mut g = gate();
        g.remove(MINUS);
        let err = two_spins().controlled_map("s1", &SpinBasis::X.basis(), "s2", &g).unwrap_err();
        assert_eq!(err, Error::MissingControlEntry(MINUS.into()));
    }

    #[test]
    fn single_branch_control_acts_like_unitary() {
        let st = BranchState::product(
            1.0,
            vec![(RegisterSpec::spin("a"), Some(spin_plus())), (RegisterSpec::spin("b"), None)],
        )
        .unwrap();
        let a = st.controlled_map("a", &SpinBasis::X.basis(), "b", &gate()).unwrap();
        let d = a.finite_vector(&["a", "b"]).unwrap() - st.finite_vector(&["a", "b"]).unwrap();
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn projection_examples() {
        let st = BranchState::product(1.0, vec![(RegisterSpec::spin("s"), Some(initial_spin()))]).unwrap();
        let p = st.project("s", &Projection::Vector(spin_plus())).unwrap();
        assert!((p.probability - 1.0 / 3.0).abs() < 1e-15);
        let r = BranchState::product(1.0, vec![(RegisterSpec::label("m", &["ready", "+", "-"]), None)]).unwrap();
        let p = r.project("m", &Projection::Label("+".into())).unwrap();
        assert_eq!(p.probability, 0.0);
        assert!(p.state.is_empty());
        assert!(matches!(
            r.project_normalized("m", &Projection::Label("+".into())),
            Err(Error::ZeroProbability)
        ));
        let tot: f64 = [spin_down(), spin_up()]
            .into_iter()
            .map(|v| st.project("s", &Projection::Vector(v)).unwrap().probability)
            .sum();
        assert!((tot - 1.0).abs() < 1e-15);
        assert!(st.project("s", &Projection::Label(DOWN.into())).is_ok());
    }

    #[test]
    fn rebase_changes_labels_not_state() {
        let st = BranchState::product(1.0, vec![(RegisterSpec::spin("s"), Some(initial_spin()))]).unwrap();
        let x = st.rebase("s", &SpinBasis::X.basis()).unwrap();
        assert_eq!(
            x.register("s").unwrap().basis_labels(),
            &[PLUS.to_string(), MINUS.to_string()]
        );
        let v0 = st.finite_vector(&["s"]).unwrap();
        let v1 = x.finite_vector(&["s"]).unwrap();
        assert!((v0 - v1).norm() < 1e-15);
        let p0 = st.project("s", &Projection::Vector(spin_up())).unwrap().probability;
        let p1 = x.project("s", &Projection::Vector(spin_up())).unwrap().probability;
        assert!((p0 - p1).abs() < 1e-15);
    }

    #[test]
    fn contract_removes_registers() {
        let st = two_spins();
        let out = st.contract(&["s1"], &[(ONE, vec![spin_plus()])]).unwrap();
        assert_eq!(out.finite_ids(), vec!["s2".to_string()]);
        assert!((out.norm_sq() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn probe_only_round_trip() {
        let st = BranchState::product(
            0.7,
            vec![(RegisterSpec::probe("p1"), None), (RegisterSpec::probe("p2"), None)],
        )
        .unwrap()
        .shift_probe("p2", c(0.3, 0.1))
        .unwrap();
        let w = st.to_joint_wave().unwrap();
        assert_eq!(BranchState::from_joint_wave(&w).unwrap(), st);
        assert!(two_spins().to_joint_wave().is_err());
    }
}
