//! Truncated Fock-space primitives.
//!
//! Pure cavity states are amplitude vectors over photon numbers `0..=n_max`,
//! mixed states are Hermitian matrices in the same basis, and superpositions
//! of coherent states are kept symbolically as `(weight, center)` pairs so
//! their overlaps can be evaluated exactly with the Gaussian formula
//! `<a|b> = exp(-|a|²/2 - |b|²/2 + a* b)`.
//!
//! Conventions: `D(β) = exp(β a† - β* a)` and `D(β)|0> = |β>`; times only
//! ever enter as the dimensionless product `g t`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Maximum tail mass a library-built state may leave above `n_max - 5`.
pub const TAIL_MASS_LIMIT: f64 = 1e-10;

/// Number of top Fock levels whose population counts as "tail".
const TAIL_WIDTH: usize = 5;

/// Default truncation for a field of amplitude `abs_alpha`:
/// `ceil(|α|² + 8|α| + 10)`, about eight Poisson standard deviations above the
/// mean photon number.
pub fn truncation_for(abs_alpha: f64) -> usize {
    let a = abs_alpha.abs();
    (a * a + 8.0 * a + 10.0).ceil() as usize
}

/// Coherent overlap `<a|b>` of two normalized coherent states.
pub fn coherent_overlap(a: C64, b: C64) -> C64 {
    (-0.5 * a.norm_sqr() - 0.5 * b.norm_sqr() + a.conj() * b).exp()
}

/// Fock amplitudes `<n|α>` for `n < dim`, without any truncation check.
pub fn coherent_amplitudes(alpha: C64, dim: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(dim);
    if dim == 0 {
        return amps;
    }
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    amps.push(c);
    for n in 1..dim {
        c = c * alpha / (n as f64).sqrt();
        amps.push(c);
    }
    amps
}

/// A pure cavity state in the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    amps: Vec<C64>,
}

impl FieldState {
    /// Wraps raw amplitudes; index `n` is the photon number.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("field state needs at least one amplitude".into()));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite amplitude".into()));
        }
        Ok(Self { amps })
    }

    pub fn vacuum(n_max: usize) -> Self {
        Self::fock(0, n_max)
    }

    /// Number state `|n>`.
    pub fn fock(n: usize, n_max: usize) -> Self {
        let mut amps = vec![C64::new(0.0, 0.0); n_max.max(n) + 1];
        amps[n] = C64::new(1.0, 0.0);
        Self { amps }
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn n_max(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn renormalized(mut self) -> Result<Self> {
        let norm = self.norm_sqr();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!("cannot renormalize state of norm {norm}")));
        }
        let scale = norm.sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= scale);
        Ok(self)
    }

    /// Population of the top five levels, relative to the total norm.
    pub fn tail_mass(&self) -> f64 {
        let start = self.dim().saturating_sub(TAIL_WIDTH);
        let tail: f64 = self.amps[start..].iter().map(|a| a.norm_sqr()).sum();
        tail / self.norm_sqr()
    }

    pub fn mean_photon_number(&self) -> f64 {
        let n: f64 = self
            .amps
            .iter()
            .enumerate()
            .map(|(k, a)| k as f64 * a.norm_sqr())
            .sum();
        n / self.norm_sqr()
    }

    /// `<a>` (unnormalized states are normalized first).
    pub fn annihilation_expectation(&self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for n in 1..self.dim() {
            acc += self.amps[n - 1].conj() * self.amps[n] * (n as f64).sqrt();
        }
        acc / self.norm_sqr()
    }

    /// Zero-pads the state up to `n_max`. Truncating is not allowed.
    pub fn padded(&self, n_max: usize) -> Self {
        let mut amps = self.amps.clone();
        if n_max + 1 > amps.len() {
            amps.resize(n_max + 1, C64::new(0.0, 0.0));
        }
        Self { amps }
    }
}

/// Coherent state `|α>` truncated at `n_max`.
///
/// Amplitudes come from the recurrence `c_n = c_{n-1} α / √n`, so no
/// factorial is ever formed. Fails if more than [`TAIL_MASS_LIMIT`] of the
/// population would sit in the top levels or beyond the cut.
pub fn coherent_state(alpha: C64, n_max: usize) -> Result<FieldState> {
    let amps = coherent_amplitudes(alpha, n_max + 1);
    let state = FieldState { amps };
    let kept = state.norm_sqr();
    let start = state.dim().saturating_sub(TAIL_WIDTH);
    let top: f64 = state.amps[start..].iter().map(|a| a.norm_sqr()).sum();
    // mass above n_max, clamped against rounding in 1 - kept
    let tail_mass = top + (1.0 - kept).max(0.0);
    if alpha.norm_sqr() > 0.0 && tail_mass >= TAIL_MASS_LIMIT {
        return Err(Error::TruncationTooSmall { n_max, tail_mass });
    }
    Ok(state)
}

/// Magnitudes `g_k(j) = |<j+k|D(β)|j>|`-style factors for one diagonal.
///
/// For `k ≥ 0` and `x = |β|²`,
/// `g_k(j) = √(j!/(j+k)!) |β|^k e^{-x/2} L_j^{(k)}(x)`,
/// advanced in `j` by the Laguerre three-term recurrence rescaled so the
/// factorial ratio never appears:
/// `g_{j+1} = [(2j+1+k-x) g_j - √(j(j+k)) g_{j-1}] / √((j+1)(j+k+1))`.
/// The values are real but carry the Laguerre sign.
pub(crate) fn diagonal_factors(abs_beta: f64, k: usize, ln_k_factorial: f64, out: &mut Vec<f64>, len: usize) {
    out.clear();
    if len == 0 {
        return;
    }
    let x = abs_beta * abs_beta;
    let kf = k as f64;
    let g0 = if k == 0 {
        (-0.5 * x).exp()
    } else if abs_beta == 0.0 {
        0.0
    } else {
        (kf * abs_beta.ln() - 0.5 * x - 0.5 * ln_k_factorial).exp()
    };
    out.push(g0);
    if len == 1 {
        return;
    }
    out.push((1.0 + kf - x) * g0 / (kf + 1.0).sqrt());
    for j in 1..len - 1 {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + kf - x) * out[j] - (jf * (jf + kf)).sqrt() * out[j - 1])
            / ((jf + 1.0) * (jf + kf + 1.0)).sqrt();
        out.push(next);
    }
}

/// `<m|D(β)|n>` from the associated-Laguerre closed form.
pub fn displacement_element(m: usize, n: usize, beta: C64) -> C64 {
    let (lo, k) = if m >= n { (n, m - n) } else { (m, n - m) };
    let ln_kf = ln_factorial(k);
    let mut buf = Vec::with_capacity(lo + 1);
    diagonal_factors(beta.norm(), k, ln_kf, &mut buf, lo + 1);
    let g = buf[lo];
    let phase = if beta.norm_sqr() == 0.0 { 0.0 } else { beta.arg() };
    if m >= n {
        C64::from_polar(g, k as f64 * phase)
    } else {
        // <m|D(β)|n> = conj(<n|D(-β)|m>)
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        C64::from_polar(sign * g, -(k as f64) * phase)
    }
}

/// Block `<m|D(β)|n>` for `m < rows`, `n < cols`.
pub fn displacement_matrix(beta: C64, rows: usize, cols: usize) -> DMatrix<C64> {
    let mut d = DMatrix::from_element(rows, cols, C64::new(0.0, 0.0));
    let abs_beta = beta.norm();
    let phase = if abs_beta == 0.0 { 0.0 } else { beta.arg() };
    let mut buf = Vec::new();
    let mut ln_kf = 0.0;
    for k in 0..rows.max(cols) {
        if k > 0 {
            ln_kf += (k as f64).ln();
        }
        let below = rows.saturating_sub(k).min(cols);
        let above = cols.saturating_sub(k).min(rows);
        let len = below.max(above);
        if len == 0 {
            continue;
        }
        diagonal_factors(abs_beta, k, ln_kf, &mut buf, len);
        let down = C64::from_polar(1.0, k as f64 * phase);
        let up = if k % 2 == 0 { down.conj() } else { -down.conj() };
        for (j, &g) in buf.iter().enumerate() {
            if j < below {
                d[(j + k, j)] = down * g;
            }
            if k > 0 && j < above {
                d[(j, j + k)] = up * g;
            }
        }
    }
    d
}

pub(crate) fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// One term `weight · |center>` of a coherent-state superposition.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentTerm {
    pub weight: C64,
    pub center: C64,
}

/// `Σ_k w_k |μ_k>`, with normalized coherent kets and unnormalized weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherentSuperposition {
    terms: Vec<CoherentTerm>,
}

impl CoherentSuperposition {
    pub fn new(terms: Vec<CoherentTerm>) -> Result<Self> {
        let s = Self { terms };
        let norm = s.norm_sqr();
        if s.terms.is_empty() || !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "superposition must have positive finite norm, got {norm}"
            )));
        }
        Ok(s)
    }

    pub fn from_pairs(pairs: &[(C64, C64)]) -> Result<Self> {
        Self::new(
            pairs
                .iter()
                .map(|&(weight, center)| CoherentTerm { weight, center })
                .collect(),
        )
    }

    /// The single coherent state `|μ>`.
    pub fn coherent(center: C64) -> Self {
        Self { terms: vec![CoherentTerm { weight: C64::new(1.0, 0.0), center }] }
    }

    pub fn terms(&self) -> &[CoherentTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `<ψ|ψ>` from the exact Gaussian overlaps.
    pub fn norm_sqr(&self) -> f64 {
        self.overlap_with(self).re
    }

    pub fn normalized(&self) -> Self {
        let scale = self.norm_sqr().sqrt().recip();
        Self {
            terms: self
                .terms
                .iter()
                .map(|t| CoherentTerm { weight: t.weight * scale, center: t.center })
                .collect(),
        }
    }

    /// `<γ|ψ>` for a normalized coherent bra `<γ|`.
    pub fn amplitude_at(&self, gamma: C64) -> C64 {
        self.terms
            .iter()
            .map(|t| t.weight * coherent_overlap(gamma, t.center))
            .sum()
    }

    fn overlap_with(&self, other: &Self) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.terms {
            for b in &other.terms {
                acc += a.weight.conj() * b.weight * coherent_overlap(a.center, b.center);
            }
        }
        acc
    }

    /// Largest `|μ_k|` among the centers.
    pub fn max_center_abs(&self) -> f64 {
        self.terms.iter().map(|t| t.center.norm()).fold(0.0, f64::max)
    }

    /// Fock rendering of the normalized superposition.
    ///
    /// Normalization uses the exact norm, so the result is short of unit norm
    /// by exactly the truncated tail.
    pub fn to_field_state(&self, n_max: usize) -> Result<FieldState> {
        let scale = self.norm_sqr().sqrt().recip();
        let mut amps = vec![C64::new(0.0, 0.0); n_max + 1];
        for t in &self.terms {
            let c = coherent_state(t.center, n_max)?;
            for (a, ci) in amps.iter_mut().zip(c.amps()) {
                *a += t.weight * scale * ci;
            }
        }
        FieldState::from_amplitudes(amps)
    }
}

/// Inner product `<self|other>`.
pub trait Overlap<Rhs: ?Sized = Self> {
    fn overlap(&self, other: &Rhs) -> C64;
}

impl Overlap for FieldState {
    /// States of different truncation are compared as if zero-padded.
    fn overlap(&self, other: &FieldState) -> C64 {
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }
}

impl Overlap for CoherentSuperposition {
    fn overlap(&self, other: &CoherentSuperposition) -> C64 {
        self.overlap_with(other)
    }
}

impl Overlap<CoherentSuperposition> for FieldState {
    fn overlap(&self, other: &CoherentSuperposition) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for t in other.terms() {
            let c = coherent_amplitudes(t.center, self.dim());
            let partial: C64 = self.amps.iter().zip(&c).map(|(a, b)| a.conj() * b).sum();
            acc += t.weight * partial;
        }
        acc
    }
}

impl Overlap<FieldState> for CoherentSuperposition {
    fn overlap(&self, other: &FieldState) -> C64 {
        other.overlap(self).conj()
    }
}

/// `<a|b>`.
pub fn overlap<A: Overlap<B>, B>(a: &A, b: &B) -> C64 {
    a.overlap(b)
}

/// Hermitian unit-trace matrix in the truncated Fock basis.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    elems: DMatrix<C64>,
}

/// Hermiticity tolerance on elementwise `ρ_mn - conj(ρ_nm)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Trace tolerance.
pub const TRACE_TOL: f64 = 1e-10;

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and real non-negative diagonal.
    pub fn try_new(elems: DMatrix<C64>) -> Result<Self> {
        let rho = Self { elems };
        rho.validate(HERMITIAN_TOL, TRACE_TOL)?;
        Ok(rho)
    }

    pub(crate) fn from_raw(elems: DMatrix<C64>) -> Self {
        Self { elems }
    }

    pub fn validate(&self, hermitian_tol: f64, trace_tol: f64) -> Result<()> {
        let d = &self.elems;
        if !d.is_square() || d.nrows() == 0 {
            return Err(Error::InvalidDensityMatrix("matrix must be square and non-empty".into()));
        }
        let dev = self.hermiticity_error();
        if !(dev <= hermitian_tol) {
            return Err(Error::InvalidDensityMatrix(format!("not Hermitian (deviation {dev:.3e})")));
        }
        let tr = self.trace();
        if !((tr.re - 1.0).abs() <= trace_tol) || tr.im.abs() > trace_tol {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr} differs from 1")));
        }
        for n in 0..d.nrows() {
            if d[(n, n)].re < -1e-12 {
                return Err(Error::InvalidDensityMatrix(format!("negative population at n = {n}")));
            }
        }
        Ok(())
    }

    pub fn elems(&self) -> &DMatrix<C64> {
        &self.elems
    }

    pub fn dim(&self) -> usize {
        self.elems.nrows()
    }

    pub fn n_max(&self) -> usize {
        self.dim() - 1
    }

    pub fn trace(&self) -> C64 {
        self.elems.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        // Tr(ρρ) = Σ_mn ρ_mn ρ_nm = Σ |ρ_mn|² for Hermitian ρ
        self.elems.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = &self.elems;
        let mut dev: f64 = 0.0;
        for m in 0..d.nrows() {
            for n in m..d.ncols() {
                dev = dev.max((d[(m, n)] - d[(n, m)].conj()).norm());
            }
        }
        dev
    }

    /// `<ψ|ρ|ψ>`, comparing over the common truncation.
    pub fn expectation_in(&self, psi: &FieldState) -> f64 {
        let dim = self.dim().min(psi.dim());
        let a = psi.amps();
        let mut acc = C64::new(0.0, 0.0);
        for m in 0..dim {
            for n in 0..dim {
                acc += a[m].conj() * self.elems[(m, n)] * a[n];
            }
        }
        acc.re
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.elems + self.elems.adjoint()) * C64::new(0.5, 0.0);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Zero-pads to a larger truncation.
    pub fn padded(&self, n_max: usize) -> Self {
        let dim = (n_max + 1).max(self.dim());
        let mut elems = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        elems.view_mut((0, 0), (self.dim(), self.dim())).copy_from(&self.elems);
        Self { elems }
    }

    /// Largest elementwise `|ρ_mn - σ_mn|` over the common block.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let dim = self.dim().max(other.dim());
        let get = |r: &DensityMatrix, m: usize, n: usize| {
            if m < r.dim() && n < r.dim() {
                r.elems[(m, n)]
            } else {
                C64::new(0.0, 0.0)
            }
        };
        let mut dev: f64 = 0.0;
        for m in 0..dim {
            for n in 0..dim {
                dev = dev.max((get(self, m, n) - get(other, m, n)).norm());
            }
        }
        dev
    }
}

/// `|ψ><ψ|` for a normalized pure state.
pub fn to_density(state: &FieldState) -> DensityMatrix {
    let a = state.amps();
    let dim = a.len();
    DensityMatrix::from_raw(DMatrix::from_fn(dim, dim, |m, n| a[m] * a[n].conj()))
}

/// `|ψ><ψ|` for the normalized superposition, expanded to `n_max`.
pub fn superposition_to_density(s: &CoherentSuperposition, n_max: usize) -> Result<DensityMatrix> {
    Ok(to_density(&s.to_field_state(n_max)?))
}
