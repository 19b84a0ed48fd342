//! Gaussian probe wavefunctions with complex centres.
//!
//! A packet is `ψ(x) = w · exp(−(x − c)² / 4σ²)`, so `|ψ|²` has spread σ and
//! the choice `w = (2πσ²)^(−1/4)` normalizes a packet with real centre.
//! A complex centre is the analytic continuation produced by `exp(−i s P)`
//! with complex `s`: the mean position moves by `Re(s)` and the mean
//! momentum by `Im(s)/(2σ²)`. Shifting never touches the weight, so the
//! extra factor `exp(Im(c)²/2σ²)` of a complex-centred packet appears in
//! its norm and in every overlap, never as a hidden phase.
//!
//! Closed forms used here:
//!
//! ```text
//! ⟨a|b⟩   = conj(w_a) w_b √(2πσ²) exp(−(conj(c_a) − c_b)² / 8σ²)
//! ∫ x conj(ψ_a) ψ_b dx = ⟨a|b⟩ · (conj(c_a) + c_b) / 2
//! ```

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::linalg::{self, c, cmp_complex, CMatrix, ONE, ZERO};
use crate::{Error, Result};

/// Centres closer than this are treated as the same packet.
pub const CENTER_TOL: f64 = 1e-12;

fn check_width(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidWidth(sigma))
    }
}

fn same_width(a: f64, b: f64) -> Result<()> {
    if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) {
        Ok(())
    } else {
        Err(Error::WidthMismatch(a, b))
    }
}

/// `(2πσ²)^(−1/4)`, the weight of a normalized packet with real centre.
pub fn unit_weight(sigma: f64) -> f64 {
    libm::pow(2.0 * PI * sigma * sigma, -0.25)
}

/// Overlap of two normalized-weight packets, `exp(−(conj(a) − b)² / 8σ²)`.
///
/// The pair is evaluated in a fixed order so that swapping the arguments
/// conjugates the result bit for bit.
pub fn unit_overlap(a: Complex64, b: Complex64, sigma: f64) -> Complex64 {
    if cmp_complex(&a, &b).is_gt() {
        return unit_overlap(b, a, sigma).conj();
    }
    let d = a.conj() - b;
    (-(d * d) / (8.0 * sigma * sigma)).exp()
}

/// Value of a normalized-weight packet at `x`.
pub fn unit_eval(center: Complex64, sigma: f64, x: f64) -> Complex64 {
    let d = c(x, 0.0) - center;
    (-(d * d) / (4.0 * sigma * sigma)).exp() * unit_weight(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianPacket {
    pub center: Complex64,
    pub width: f64,
    pub weight: Complex64,
}

impl GaussianPacket {
    pub fn new(center: Complex64, width: f64, weight: Complex64) -> Result<Self> {
        check_width(width)?;
        let finite = |z: Complex64| z.re.is_finite() && z.im.is_finite();
        if !finite(center) || !finite(weight) {
            return Err(Error::NonFinite("gaussian packet"));
        }
        Ok(GaussianPacket { center, width, weight })
    }

    /// Packet with weight `(2πσ²)^(−1/4)`.
    pub fn normalized(center: Complex64, width: f64) -> Result<Self> {
        Self::new(center, width, c(unit_weight(width), 0.0))
    }

    pub fn shift(&self, s: Complex64) -> Self {
        GaussianPacket {
            center: self.center + s,
            ..*self
        }
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        let d = c(x, 0.0) - self.center;
        self.weight * (-(d * d) / (4.0 * self.width * self.width)).exp()
    }

    pub fn overlap(&self, other: &GaussianPacket) -> Result<Complex64> {
        same_width(self.width, other.width)?;
        Ok(self.overlap_unchecked(other))
    }

    fn overlap_unchecked(&self, other: &GaussianPacket) -> Complex64 {
        let s = self.width;
        let scale = libm::sqrt(2.0 * PI * s * s);
        let w = if cmp_complex(&self.center, &other.center).is_gt() {
            (other.weight.conj() * self.weight).conj()
        } else {
            self.weight.conj() * other.weight
        };
        w * scale * unit_overlap(self.center, other.center, s)
    }

    pub fn norm_sq(&self) -> f64 {
        self.overlap_unchecked(self).re
    }
}

/// Uniform grid for density rendering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
}

impl Grid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if n_points < 2 {
            return Err(Error::DegenerateGrid("need at least two points"));
        }
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::DegenerateGrid("x_max must exceed x_min"));
        }
        Ok(Grid { x_min, x_max, n_points })
    }

    pub fn step(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        let h = self.step();
        (0..self.n_points).map(move |i| self.x_min + h * i as f64)
    }
}

/// Superposition of packets sharing one width.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeWave {
    sigma: f64,
    packets: Vec<GaussianPacket>,
}

impl ProbeWave {
    pub fn empty(sigma: f64) -> Result<Self> {
        check_width(sigma)?;
        Ok(ProbeWave {
            sigma,
            packets: Vec::new(),
        })
    }

    /// Sum of `amplitude · (normalized packet at centre)`.
    pub fn from_terms(sigma: f64, terms: &[(Complex64, Complex64)]) -> Result<Self> {
        let mut w = Self::empty(sigma)?;
        let u = unit_weight(sigma);
        for &(center, amp) in terms {
            w.push(GaussianPacket::new(center, sigma, amp * u)?)?;
        }
        Ok(w)
    }

    pub fn single(center: Complex64, sigma: f64) -> Result<Self> {
        Self::from_terms(sigma, &[(center, ONE)])
    }

    /// Adds a packet, merging with an existing one at the same centre.
    pub fn push(&mut self, p: GaussianPacket) -> Result<()> {
        same_width(self.sigma, p.width)?;
        if let Some(q) = self
            .packets
            .iter_mut()
            .find(|q| linalg::close(q.center, p.center, CENTER_TOL))
        {
            q.weight += p.weight;
        } else {
            self.packets.push(p);
        }
        self.packets.sort_by(|a, b| cmp_complex(&a.center, &b.center));
        Ok(())
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn packets(&self) -> &[GaussianPacket] {
        &self.packets
    }

    pub fn shift(&self, s: Complex64) -> Self {
        ProbeWave {
            sigma: self.sigma,
            packets: self.packets.iter().map(|p| p.shift(s)).collect(),
        }
    }

    pub fn scaled(&self, f: Complex64) -> Self {
        ProbeWave {
            sigma: self.sigma,
            packets: self
                .packets
                .iter()
                .map(|p| GaussianPacket {
                    weight: p.weight * f,
                    ..*p
                })
                .collect(),
        }
    }

    pub fn inner(&self, other: &ProbeWave) -> Result<Complex64> {
        same_width(self.sigma, other.sigma)?;
        let mut acc = ZERO;
        for a in &self.packets {
            for b in &other.packets {
                acc += a.overlap_unchecked(b);
            }
        }
        Ok(acc)
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.packets.iter().enumerate() {
            acc += a.norm_sq();
            for b in &self.packets[i + 1..] {
                acc += 2.0 * a.overlap_unchecked(b).re;
            }
        }
        acc
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(c(1.0 / libm::sqrt(n), 0.0)))
    }

    /// `⟨X⟩` of the normalized wave.
    pub fn mean_position(&self) -> Result<f64> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let mut acc = ZERO;
        for a in &self.packets {
            for b in &self.packets {
                acc += a.overlap_unchecked(b) * (a.center.conj() + b.center) * 0.5;
            }
        }
        Ok(acc.re / n)
    }

    pub fn eval(&self, x: f64) -> Complex64 {
        self.packets.iter().map(|p| p.eval(x)).sum()
    }

    pub fn density(&self, x: f64) -> f64 {
        self.eval(x).norm_sqr()
    }

    pub fn render_density(&self, grid: &Grid) -> Vec<f64> {
        grid.points().map(|x| self.density(x)).collect()
    }
}

/// Coefficients of each wave in an orthonormal basis of their span.
///
/// Row `a` holds `⟨e_k|w_a⟩`; the basis comes from a pivot-skipping
/// Cholesky factorization of the Gram matrix, so rank-deficient families
/// yield fewer columns than waves.
pub fn gram_orthonormalize(waves: &[ProbeWave]) -> Result<CMatrix> {
    let n = waves.len();
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = waves[i].inner(&waves[j])?;
            g[(i, j)] = v;
            g[(j, i)] = v.conj();
        }
        g[(i, i)] = c(g[(i, i)].re, 0.0);
    }
    Ok(linalg::psd_cholesky(&g, linalg::GRAM_RANK_TOL).map(|z| z.conj()))
}

/// One product term of a multi-probe wavefunction: the amplitude multiplies
/// a normalized-weight packet for each probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductTerm {
    pub amplitude: Complex64,
    pub centers: Vec<Complex64>,
}

/// Joint wavefunction of several probes, a sum of product packets.
#[derive(Debug, Clone, PartialEq)]
pub struct JointWave {
    sigma: f64,
    probes: Vec<String>,
    terms: Vec<ProductTerm>,
}

impl JointWave {
    pub fn new(sigma: f64, probes: Vec<String>, terms: Vec<ProductTerm>) -> Result<Self> {
        check_width(sigma)?;
        for t in &terms {
            if t.centers.len() != probes.len() {
                return Err(Error::Dimension {
                    expected: probes.len(),
                    found: t.centers.len(),
                });
            }
        }
        let mut w = JointWave { sigma, probes, terms };
        w.merge();
        Ok(w)
    }

    fn merge(&mut self) {
        let mut out: Vec<ProductTerm> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            if let Some(o) = out.iter_mut().find(|o| {
                o.centers
                    .iter()
                    .zip(&t.centers)
                    .all(|(a, b)| linalg::close(*a, *b, CENTER_TOL))
            }) {
                o.amplitude += t.amplitude;
            } else {
                out.push(t);
            }
        }
        out.retain(|t| t.amplitude.norm() > 0.0);
        out.sort_by(|a, b| {
            for (x, y) in a.centers.iter().zip(&b.centers) {
                let o = cmp_complex(x, y);
                if o.is_ne() {
                    return o;
                }
            }
            core::cmp::Ordering::Equal
        });
        self.terms = out;
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn probes(&self) -> &[String] {
        &self.probes
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn probe_index(&self, probe: &str) -> Result<usize> {
        self.probes
            .iter()
            .position(|p| p == probe)
            .ok_or_else(|| Error::UnknownRegister(probe.into()))
    }

    fn term_overlap(&self, a: &ProductTerm, b: &ProductTerm, skip: Option<usize>) -> Complex64 {
        let mut v = a.amplitude.conj() * b.amplitude;
        for (q, (x, y)) in a.centers.iter().zip(&b.centers).enumerate() {
            if Some(q) != skip {
                v *= unit_overlap(*x, *y, self.sigma);
            }
        }
        v
    }

    pub fn norm_sq(&self) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.terms.iter().enumerate() {
            acc += self.term_overlap(a, a, None).re;
            for b in &self.terms[i + 1..] {
                acc += 2.0 * self.term_overlap(a, b, None).re;
            }
        }
        acc
    }

    pub fn scaled(&self, f: Complex64) -> Self {
        let mut w = self.clone();
        for t in &mut w.terms {
            t.amplitude *= f;
        }
        w
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        Ok(self.scaled(c(1.0 / libm::sqrt(n), 0.0)))
    }

    /// Value of the joint wavefunction at a point of probe space.
    pub fn eval(&self, xs: &[f64]) -> Complex64 {
        self.terms
            .iter()
            .map(|t| {
                t.centers
                    .iter()
                    .zip(xs)
                    .fold(t.amplitude, |acc, (cn, &x)| acc * unit_eval(*cn, self.sigma, x))
            })
            .sum()
    }

    /// Reduced density of one probe at `x` (other probes traced out).
    pub fn marginal_density(&self, probe: usize, x: f64) -> f64 {
        let mut acc = ZERO;
        for a in &self.terms {
            let ga = unit_eval(a.centers[probe], self.sigma, x).conj();
            for b in &self.terms {
                let gb = unit_eval(b.centers[probe], self.sigma, x);
                acc += self.term_overlap(a, b, Some(probe)) * ga * gb;
            }
        }
        acc.re.max(0.0)
    }

    pub fn render_marginal(&self, probe: usize, grid: &Grid) -> Vec<f64> {
        grid.points().map(|x| self.marginal_density(probe, x)).collect()
    }

    /// Reduced mean position of one probe.
    pub fn marginal_mean(&self, probe: usize) -> Result<f64> {
        let n = self.norm_sq();
        if !(n > 0.0) {
            return Err(Error::ZeroNorm);
        }
        let mut acc = ZERO;
        for a in &self.terms {
            for b in &self.terms {
                let (ca, cb) = (a.centers[probe], b.centers[probe]);
                acc += self.term_overlap(a, b, Some(probe)) * unit_overlap(ca, cb, self.sigma) * (ca.conj() + cb) * 0.5;
            }
        }
        Ok(acc.re / n)
    }

    /// Distinct centres of one probe with the index of each term's centre.
    fn distinct_centers(&self, probe: usize) -> (Vec<Complex64>, Vec<usize>) {
        let mut centers: Vec<Complex64> = Vec::new();
        let mut idx = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let cn = t.centers[probe];
            match centers.iter().position(|&x| linalg::close(x, cn, CENTER_TOL)) {
                Some(i) => idx.push(i),
                None => {
                    centers.push(cn);
                    idx.push(centers.len() - 1);
                }
            }
        }
        (centers, idx)
    }

    /// Distinct centre tuples over a probe subset with each term's tuple index.
    fn distinct_tuples(&self, subset: &[usize]) -> (Vec<Vec<Complex64>>, Vec<usize>) {
        let mut tuples: Vec<Vec<Complex64>> = Vec::new();
        let mut idx = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let key: Vec<Complex64> = subset.iter().map(|&q| t.centers[q]).collect();
            match tuples
                .iter()
                .position(|k| k.iter().zip(&key).all(|(a, b)| linalg::close(*a, *b, CENTER_TOL)))
            {
                Some(i) => idx.push(i),
                None => {
                    tuples.push(key);
                    idx.push(tuples.len() - 1);
                }
            }
        }
        (tuples, idx)
    }

    fn tuple_gram(&self, tuples: &[Vec<Complex64>]) -> CMatrix {
        let n = tuples.len();
        CMatrix::from_fn(n, n, |i, j| {
            tuples[i]
                .iter()
                .zip(&tuples[j])
                .fold(ONE, |acc, (a, b)| acc * unit_overlap(*a, *b, self.sigma))
        })
    }

    /// Normalized Schmidt coefficients across the cut `left | rest`.
    pub fn schmidt_values(&self, left: &[usize]) -> Vec<f64> {
        let right: Vec<usize> = (0..self.probes.len()).filter(|q| !left.contains(q)).collect();
        let (lt, li) = self.distinct_tuples(left);
        let (rt, ri) = self.distinct_tuples(&right);
        let mut m = CMatrix::zeros(lt.len(), rt.len());
        for (k, t) in self.terms.iter().enumerate() {
            m[(li[k], ri[k])] += t.amplitude;
        }
        linalg::schmidt_values(&m, &self.tuple_gram(&lt), &self.tuple_gram(&rt))
    }

    /// Number of Schmidt coefficients above `tol` across `left | rest`.
    pub fn schmidt_rank(&self, left: &[usize], tol: f64) -> Result<usize> {
        if !(tol > 0.0) {
            return Err(Error::NonPositiveTolerance(tol));
        }
        Ok(self.schmidt_values(left).iter().filter(|&&s| s > tol).count())
    }

    /// The wave of one probe when the joint wave is an algebraic product
    /// `ψ_probe ⊗ ψ_rest`, scaled so that its norm is the joint norm.
    ///
    /// Returns `None` for non-product waves. Packets with distinct centres
    /// are treated as linearly independent symbols, which they are.
    pub fn factor(&self, probe: usize) -> Option<ProbeWave> {
        let sigma = self.sigma;
        if self.terms.is_empty() {
            return ProbeWave::empty(sigma).ok();
        }
        let (pc, pi) = self.distinct_centers(probe);
        let rest: Vec<usize> = (0..self.probes.len()).filter(|&q| q != probe).collect();
        let (rt, ri) = self.distinct_tuples(&rest);
        let mut m = CMatrix::zeros(pc.len(), rt.len());
        for (k, t) in self.terms.iter().enumerate() {
            m[(pi[k], ri[k])] += t.amplitude;
        }
        let (mut r0, mut c0, mut best) = (0, 0, 0.0);
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)].norm() > best {
                    best = m[(i, j)].norm();
                    r0 = i;
                    c0 = j;
                }
            }
        }
        let u: Vec<Complex64> = (0..m.nrows()).map(|i| m[(i, c0)]).collect();
        let v: Vec<Complex64> = (0..m.ncols()).map(|j| m[(r0, j)] / m[(r0, c0)]).collect();
        let scale = m.norm();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if (m[(i, j)] - u[i] * v[j]).norm() > 1e-12 * scale {
                    return None;
                }
            }
        }
        let g = self.tuple_gram(&rt);
        let mut rest_norm = ZERO;
        for i in 0..v.len() {
            for j in 0..v.len() {
                rest_norm += v[i].conj() * v[j] * g[(i, j)];
            }
        }
        let f = libm::sqrt(rest_norm.re.max(0.0));
        let terms: Vec<(Complex64, Complex64)> = pc.iter().zip(&u).map(|(&cn, &a)| (cn, a * f)).collect();
        ProbeWave::from_terms(sigma, &terms).ok()
    }
}
