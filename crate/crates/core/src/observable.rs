//! Observables and measurement bases over finite registers.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::linalg::{self, c, CMatrix, CVector, ONE, ZERO};
use crate::{Error, Result};

/// An orthonormal basis given as labelled column vectors in a register's
/// canonical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    labels: Vec<String>,
    vectors: CMatrix,
}

impl Basis {
    pub fn new(labels: Vec<String>, vectors: CMatrix) -> Result<Self> {
        if vectors.ncols() != labels.len() {
            return Err(Error::Dimension {
                expected: labels.len(),
                found: vectors.ncols(),
            });
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(Error::InvalidConfig(alloc::format!("duplicate basis label `{l}`")));
            }
        }
        linalg::check_unitary(&vectors)?;
        Ok(Basis { labels, vectors })
    }

    pub fn standard(labels: &[&str]) -> Self {
        let n = labels.len();
        Basis {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            vectors: CMatrix::identity(n, n),
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &CMatrix {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn is_standard(&self) -> bool {
        self.vectors == CMatrix::identity(self.dim(), self.dim())
    }
}

/// The two spin bases used by the protocols.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SpinBasis {
    /// σ_x eigenbasis, labels `+`, `-`.
    X,
    /// σ_z eigenbasis, labels `down`, `up`.
    Z,
}

pub const DOWN: &str = "down";
pub const UP: &str = "up";
pub const PLUS: &str = "+";
pub const MINUS: &str = "-";
pub const READY: &str = "ready";

impl SpinBasis {
    pub fn labels(self) -> [&'static str; 2] {
        match self {
            SpinBasis::X => [PLUS, MINUS],
            SpinBasis::Z => [DOWN, UP],
        }
    }

    pub fn basis(self) -> Basis {
        match self {
            SpinBasis::Z => Basis::standard(&self.labels()),
            SpinBasis::X => {
                let h = c(FRAC_1_SQRT_2, 0.0);
                Basis {
                    labels: self.labels().iter().map(|s| s.to_string()).collect(),
                    vectors: CMatrix::from_row_slice(2, 2, &[h, h, h, -h]),
                }
            }
        }
    }

    pub fn vector(self, k: usize) -> CVector {
        self.basis().vector(k)
    }

    pub fn other(self) -> SpinBasis {
        match self {
            SpinBasis::X => SpinBasis::Z,
            SpinBasis::Z => SpinBasis::X,
        }
    }
}

pub fn spin_down() -> CVector {
    SpinBasis::Z.vector(0)
}

pub fn spin_up() -> CVector {
    SpinBasis::Z.vector(1)
}

pub fn spin_plus() -> CVector {
    SpinBasis::X.vector(0)
}

pub fn spin_minus() -> CVector {
    SpinBasis::X.vector(1)
}

/// Named 2×2 observables in (↓, ↑) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Preset {
    PiPlus,
    PiMinus,
    PiUp,
    PiDown,
    SigmaX,
    SigmaY,
    SigmaZ,
    Identity,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::PiPlus,
        Preset::PiMinus,
        Preset::PiUp,
        Preset::PiDown,
        Preset::SigmaX,
        Preset::SigmaY,
        Preset::SigmaZ,
        Preset::Identity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PiPlus => "pi_plus",
            Preset::PiMinus => "pi_minus",
            Preset::PiUp => "pi_up",
            Preset::PiDown => "pi_down",
            Preset::SigmaX => "sigma_x",
            Preset::SigmaY => "sigma_y",
            Preset::SigmaZ => "sigma_z",
            Preset::Identity => "identity",
        }
    }

    pub fn from_name(name: &str) -> Option<Preset> {
        Preset::ALL.iter().copied().find(|p| p.name() == name)
    }

    pub fn matrix(self) -> CMatrix {
        let proj = |v: CVector| &v * v.adjoint();
        let r = |a: f64, b: f64, d: f64, e: f64| CMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(d, 0.0), c(e, 0.0)]);
        match self {
            Preset::PiPlus => proj(spin_plus()),
            Preset::PiMinus => proj(spin_minus()),
            Preset::PiUp => proj(spin_up()),
            Preset::PiDown => proj(spin_down()),
            Preset::SigmaX => r(0.0, 1.0, 1.0, 0.0),
            Preset::SigmaY => CMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, 1.0), c(0.0, -1.0), ZERO]),
            Preset::SigmaZ => r(-1.0, 0.0, 0.0, 1.0),
            Preset::Identity => CMatrix::identity(2, 2),
        }
    }

    pub fn observable(self) -> Observable {
        Observable::new(self.matrix()).expect("preset matrices are Hermitian")
    }
}

/// A Hermitian matrix with its cached eigensystem.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    matrix: CMatrix,
    eigenvalues: Vec<f64>,
    eigenvectors: CMatrix,
}

impl Observable {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("observable matrix"));
        }
        if !matrix.is_square() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > linalg::MATRIX_TOL {
            return Err(Error::NotHermitian { defect });
        }
        let (eigenvalues, eigenvectors) = linalg::hermitian_eigen(&matrix);
        let n = matrix.nrows();
        let d = CMatrix::from_fn(n, n, |i, j| if i == j { c(eigenvalues[i], 0.0) } else { ZERO });
        let residual = linalg::max_abs(&(&eigenvectors * d * eigenvectors.adjoint() - &matrix));
        if residual > 1e-10 {
            return Err(Error::EigenReconstruction { residual });
        }
        Ok(Observable {
            matrix,
            eigenvalues,
            eigenvectors,
        })
    }

    pub fn identity(n: usize) -> Self {
        Observable::new(CMatrix::identity(n, n)).expect("identity is Hermitian")
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `⟨v|A|v⟩ / ⟨v|v⟩`.
    pub fn expectation(&self, v: &CVector) -> f64 {
        (v.dotc(&(&self.matrix * v)) / v.dotc(v)).re
    }

    /// Lift a spin observable onto a record register
    /// `(ready, out0, out1)`: the block over the two outcome labels is the
    /// matrix expressed in `basis`, and `ready` is left untouched (zero).
    pub fn lift_to_record(&self, basis: SpinBasis) -> Result<Observable> {
        if self.dim() != 2 {
            return Err(Error::Dimension {
                expected: 2,
                found: self.dim(),
            });
        }
        let b = basis.basis();
        let m = b.vectors().adjoint() * &self.matrix * b.vectors();
        let mut out = CMatrix::zeros(3, 3);
        for i in 0..2 {
            for j in 0..2 {
                out[(i + 1, j + 1)] = m[(i, j)];
            }
        }
        // enforce exact hermiticity lost to rounding in the change of basis
        let out = (&out + out.adjoint()) * c(0.5, 0.0);
        Observable::new(out)
    }
}

/// The initial state of the first spin, `(|+⟩ + √2|−⟩)/√3`.
pub fn initial_spin() -> CVector {
    let a = c(1.0 / libm::sqrt(3.0), 0.0);
    let b = c(libm::sqrt(2.0) / libm::sqrt(3.0), 0.0);
    spin_plus() * a + spin_minus() * b
}

pub fn as_unit(v: &CVector) -> Result<CVector> {
    let n = v.norm();
    if !(n > 0.0) {
        return Err(Error::ZeroNorm);
    }
    Ok(v / Complex64::new(n, 0.0))
}

#[allow(dead_code)]
pub(crate) fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(n);
    v[k] = ONE;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_z_convention() {
        let z = Preset::SigmaZ.matrix();
        let d = &z * spin_down();
        assert_eq!(d, -spin_down());
        assert_eq!(&z * spin_up(), spin_up());
        let x = Preset::SigmaX.matrix();
        assert!((&x * spin_plus() - spin_plus()).norm() < 1e-15);
    }

    #[test]
    fn presets_are_hermitian_with_expected_spectra() {
        for p in Preset::ALL {
            let o = p.observable();
            let ev = o.eigenvalues();
            let expect: [f64; 2] = match p {
                Preset::SigmaX | Preset::SigmaY | Preset::SigmaZ => [-1.0, 1.0],
                Preset::Identity => [1.0, 1.0],
                _ => [0.0, 1.0],
            };
            assert!(
                (ev[0] - expect[0]).abs() < 1e-12 && (ev[1] - expect[1]).abs() < 1e-12,
                "{p:?}"
            );
            assert_eq!(Preset::from_name(p.name()), Some(p));
        }
    }

    #[test]
    fn non_hermitian_rejected() {
        let m = linalg::cmat(&[&[0.0, 1.0], &[0.0, 0.0]], None);
        assert!(matches!(Observable::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn initial_spin_amplitudes() {
        let s = initial_spin();
        let a = spin_plus().dotc(&s);
        assert!((a.re - 1.0 / libm::sqrt(3.0)).abs() < 1e-15);
        assert!((s.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lift_keeps_spectrum_on_records() {
        let o = Preset::PiPlus.observable().lift_to_record(SpinBasis::X).unwrap();
        assert!((o.matrix()[(1, 1)].re - 1.0).abs() < 1e-15);
        assert!(o.matrix()[(2, 2)].norm() < 1e-15);
        assert!(o.matrix()[(0, 0)].norm() == 0.0);
    }
}
