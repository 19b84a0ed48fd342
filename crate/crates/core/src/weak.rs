//! Weak values and weak von Neumann couplings `exp(−iγ Â P̂)` to a probe.
//!
//! Two couplings are provided. [`couple_exact`] diagonalizes `Â` and
//! displaces the probe by `γ·a` on each eigencomponent, which is the exact
//! action of the unitary. [`couple_first_order`] instead expands the state
//! of the coupled register in a reference basis `{|b_k⟩}` and displaces the
//! probe on each component by `γ` times the weak value
//! `⟨b_k|Â|ψ⟩/⟨b_k|ψ⟩`. Both agree to first order in γ; the second form is
//! what makes the probe of a branch a single shifted packet labelled by a
//! weak value, and it is exact when the reference basis diagonalizes `Â`.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::gaussian::CENTER_TOL;
use crate::linalg::{self, CMatrix, CVector, ZERO};
use crate::observable::{Basis, Observable};
use crate::state::{describe_labels, Branch, BranchState};
use crate::{Error, Result};

/// Post-selections with `|⟨post|U|pre⟩| / (‖pre‖‖post‖)` below this are
/// rejected as orthogonal.
pub const ORTHOGONAL_TOL: f64 = 1e-12;

/// Relative size below which a sum of amplitudes counts as cancelled at
/// leading order.
pub const CANCEL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValue {
    pub value: Complex64,
    pub numerator: Complex64,
    pub denominator: Complex64,
}

/// `⟨post|U·A|pre⟩ / ⟨post|U|pre⟩` with `U` defaulting to the identity.
pub fn weak_value(pre: &CVector, obs: &CMatrix, post: &CVector, u_mid: Option<&CMatrix>) -> Result<WeakValue> {
    let n = pre.len();
    if post.len() != n || obs.nrows() != n || obs.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            found: if post.len() != n { post.len() } else { obs.nrows() },
        });
    }
    let scale = pre.norm() * post.norm();
    if !(scale > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let a_pre = obs * pre;
    let (num, den) = match u_mid {
        Some(u) => {
            if u.nrows() != n || u.ncols() != n {
                return Err(Error::Dimension {
                    expected: n,
                    found: u.nrows(),
                });
            }
            linalg::check_unitary(u)?;
            (post.dotc(&(u * a_pre)), post.dotc(&(u * pre)))
        }
        None => (post.dotc(&a_pre), post.dotc(pre)),
    };
    if den.norm() < ORTHOGONAL_TOL * scale {
        return Err(Error::OrthogonalPostSelection(den.norm() / scale));
    }
    Ok(WeakValue {
        value: num / den,
        numerator: num,
        denominator: den,
    })
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidCoupling(gamma))
    }
}

fn check_dim(state: &BranchState, register: &str, n: usize) -> Result<()> {
    let d = state.register(register)?.dim();
    if d != n {
        return Err(Error::Dimension { expected: d, found: n });
    }
    Ok(())
}

/// Exact coupling: eigencomponent `a` of `obs` displaces `probe` by `γ·a`.
pub fn couple_exact(state: &BranchState, register: &str, obs: &Observable, probe: &str, gamma: f64) -> Result<BranchState> {
    check_gamma(gamma)?;
    let (r, slot) = state.finite_slot(register)?;
    let p = state.probe_slot(probe)?;
    check_dim(state, register, obs.dim())?;
    if gamma == 0.0 {
        return Ok(state.clone());
    }
    let v = state.storage_columns(r, obs.eigenvectors())?;
    let n = obs.dim();
    let mut out = Vec::with_capacity(state.branches().len() * n);
    for b in state.branches() {
        let l = b.labels[slot];
        for (k, &lambda) in obs.eigenvalues().iter().enumerate() {
            let proj = v[(l, k)].conj();
            if proj == ZERO {
                continue;
            }
            for j in 0..n {
                if v[(j, k)] == ZERO {
                    continue;
                }
                let mut nb = b.clone();
                nb.labels[slot] = j;
                nb.amplitude *= proj * v[(j, k)];
                nb.shifts[p] += Complex64::new(gamma * lambda, 0.0);
                out.push(nb);
            }
        }
    }
    Ok(state.with_branches(out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstOrderCoupling {
    pub state: BranchState,
    /// Squared norm of the dropped `−iγ⟨b_k|Â|ψ⟩ P̂ φ` terms for reference
    /// vectors orthogonal to the branch state; O(γ²).
    pub neglected_weight: f64,
}

/// Weak-value coupling relative to a reference basis of the register.
///
/// Branches are grouped by everything except the coupled register; each
/// group's register vector `ψ` is expanded as `Σ_k ⟨b_k|ψ⟩|b_k⟩` and the
/// `k` component is displaced by `γ·⟨b_k|Â|ψ⟩/⟨b_k|ψ⟩`. Components with
/// `⟨b_k|ψ⟩ = 0` would only carry an `O(γ)` term off the branch structure;
/// they are dropped and their weight reported.
pub fn couple_first_order(
    state: &BranchState,
    register: &str,
    obs: &Observable,
    probe: &str,
    gamma: f64,
    reference: &Basis,
) -> Result<FirstOrderCoupling> {
    check_gamma(gamma)?;
    let (r, slot) = state.finite_slot(register)?;
    let p = state.probe_slot(probe)?;
    check_dim(state, register, obs.dim())?;
    check_dim(state, register, reference.dim())?;
    if gamma == 0.0 {
        return Ok(FirstOrderCoupling {
            state: state.clone(),
            neglected_weight: 0.0,
        });
    }
    let n = obs.dim();
    let a = state.storage_matrix(r, obs.matrix())?;
    let refs = state.storage_columns(r, reference.vectors())?;
    let mut groups: Vec<(Branch, CVector)> = Vec::new();
    for b in state.branches() {
        let pos = groups.iter().position(|(g, _)| {
            g.labels.iter().enumerate().all(|(s, &l)| s == slot || l == b.labels[s])
                && g.shifts.iter().zip(&b.shifts).all(|(x, y)| linalg::close(*x, *y, CENTER_TOL))
        });
        let idx = match pos {
            Some(i) => i,
            None => {
                groups.push((b.clone(), CVector::zeros(n)));
                groups.len() - 1
            }
        };
        groups[idx].1[b.labels[slot]] += b.amplitude;
    }
    let inv4s2 = 1.0 / (4.0 * state.sigma() * state.sigma());
    let mut neglected = 0.0;
    let mut out = Vec::new();
    for (template, psi) in &groups {
        let norm = psi.norm();
        let a_psi = &a * psi;
        for k in 0..n {
            let bk = refs.column(k);
            let den = bk.dotc(psi);
            let num = bk.dotc(&a_psi);
            if den.norm() <= ORTHOGONAL_TOL * norm {
                neglected += gamma * gamma * num.norm_sqr() * inv4s2;
                continue;
            }
            let shift = num / den * gamma;
            for j in 0..n {
                let amp = bk[j] * den;
                if amp == ZERO {
                    continue;
                }
                let mut nb = template.clone();
                nb.labels[slot] = j;
                nb.amplitude = amp;
                nb.shifts[p] += shift;
                out.push(nb);
            }
        }
    }
    Ok(FirstOrderCoupling {
        state: state.with_branches(out),
        neglected_weight: neglected,
    })
}

/// Formal order in γ kept by [`truncate_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    Leading,
    First,
}

impl Order {
    pub fn from_int(k: u32) -> Option<Order> {
        match k {
            0 => Some(Order::Leading),
            1 => Some(Order::First),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruncationAction {
    /// All terms with these labels cancel at leading order.
    DroppedGroup,
    /// A cluster of terms whose displacements differ by O(γ) cancels.
    DroppedCluster,
    /// A cluster survives; its leading amplitude was redistributed over the
    /// terms pointing along it and the opposing terms were dropped.
    Reweighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub labels: String,
    pub action: TruncationAction,
    /// Original `(amplitude, shifts)` of every term involved.
    pub terms: Vec<(Complex64, Vec<Complex64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub state: BranchState,
    pub ledger: Vec<LedgerEntry>,
}

/// Keep the terms of `state` that survive at the requested order in γ.
///
/// Packets whose displacements differ by O(γ) are equal at leading order,
/// so a difference such as `φ(x − γa) − φ(x − γb)` is itself O(γ). Terms
/// with equal labels are linked when their displacements differ in exactly
/// one probe; a linked cluster whose amplitudes sum to zero is dropped at
/// leading order, and the whole label group is dropped if its amplitudes
/// sum to zero. A surviving cluster keeps its summed amplitude, shared
/// among the terms whose amplitude points along the sum.
pub fn truncate_order(state: &BranchState, order: Order) -> Truncation {
    if order == Order::First {
        return Truncation {
            state: state.clone(),
            ledger: Vec::new(),
        };
    }
    let mut groups: Vec<Vec<&Branch>> = Vec::new();
    for b in state.branches() {
        match groups.iter_mut().find(|g| g[0].labels == b.labels) {
            Some(g) => g.push(b),
            None => groups.push(alloc::vec![b]),
        }
    }
    let mut kept: Vec<Branch> = Vec::new();
    let mut ledger = Vec::new();
    let record = |terms: &[&Branch]| -> Vec<(Complex64, Vec<Complex64>)> {
        terms.iter().map(|b| (b.amplitude, b.shifts.clone())).collect()
    };
    for g in groups {
        let labels = describe_labels(state, &g[0].labels);
        let total: Complex64 = g.iter().map(|b| b.amplitude).sum();
        let scale: f64 = g.iter().map(|b| b.amplitude.norm()).sum();
        if total.norm() <= CANCEL_TOL * scale {
            ledger.push(LedgerEntry {
                labels,
                action: TruncationAction::DroppedGroup,
                terms: record(&g),
            });
            continue;
        }
        for cluster in clusters(&g) {
            let members: Vec<&Branch> = cluster.iter().map(|&i| g[i]).collect();
            let sum: Complex64 = members.iter().map(|b| b.amplitude).sum();
            let scale: f64 = members.iter().map(|b| b.amplitude.norm()).sum();
            if sum.norm() <= CANCEL_TOL * scale {
                ledger.push(LedgerEntry {
                    labels: labels.clone(),
                    action: TruncationAction::DroppedCluster,
                    terms: record(&members),
                });
                continue;
            }
            if members.len() == 1 {
                kept.push(members[0].clone());
                continue;
            }
            let along: Vec<f64> = members.iter().map(|b| (b.amplitude * sum.conj()).re.max(0.0)).collect();
            let total_along: f64 = along.iter().sum();
            let mut changed = false;
            for (b, w) in members.iter().zip(&along) {
                if *w == 0.0 {
                    changed = true;
                    continue;
                }
                let amp = sum * (*w / total_along);
                if (amp - b.amplitude).norm() > 1e-15 * scale {
                    changed = true;
                }
                let mut nb = (*b).clone();
                nb.amplitude = amp;
                kept.push(nb);
            }
            if changed {
                ledger.push(LedgerEntry {
                    labels: labels.clone(),
                    action: TruncationAction::Reweighted,
                    terms: record(&members),
                });
            }
        }
    }
    Truncation {
        state: state.with_branches(kept),
        ledger,
    }
}

/// Connected components of terms whose shift tuples differ in exactly one
/// probe.
fn clusters(terms: &[&Branch]) -> Vec<Vec<usize>> {
    let n = terms.len();
    let mut comp: Vec<usize> = (0..n).collect();
    fn find(c: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while c[r] != r {
            r = c[r];
        }
        c[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let differing = terms[i]
                .shifts
                .iter()
                .zip(&terms[j].shifts)
                .filter(|(a, b)| !linalg::close(**a, **b, CENTER_TOL))
                .count();
            if differing == 1 {
                let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                comp[a.max(b)] = a.min(b);
            }
        }
    }
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut comp, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => out[k].push(i),
            None => {
                roots.push(r);
                out.push(alloc::vec![i]);
            }
        }
    }
    out
}
