//! Zero-temperature cavity damping of coherent-state superpositions.
//!
//! Under `dρ/dt = (κ/2)(2aρa† - a†aρ - ρa†a)` a coherent dyad stays a
//! coherent dyad:
//!
//! ```text
//! |μ><ν|  ->  <ν|μ>^{1-e^{-κt}} |μ e^{-κt/2}><ν e^{-κt/2}|
//! ```
//!
//! so a superposition of `K` coherent states is described exactly at every
//! time by `K²` dyads ([`DyadSum`]). The Fock-basis integrator
//! [`lindblad_evolve`] is a fully independent route to the same state.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_amplitudes, coherent_overlap, CoherentSuperposition, DensityMatrix};
use crate::jc::four_component_state;
use crate::phase_space::{dyad_q, dyad_wigner, evaluate_grid, Distribution, GridSpec, PhaseSpaceSource};
use crate::C64;

/// Bound on `κ Δt n_max` for the fixed-step integrator.
pub const MAX_STEP_STIFFNESS: f64 = 0.1;

/// Damping strength. Thermal occupation is always zero.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DampingParams {
    /// Dimensionless `κ t`.
    pub kappa_t: f64,
}

impl DampingParams {
    pub fn new(kappa_t: f64) -> Result<Self> {
        if !(kappa_t >= 0.0) || !kappa_t.is_finite() {
            return Err(Error::InvalidArgument(format!("kappa_t must be finite and >= 0, got {kappa_t}")));
        }
        Ok(Self { kappa_t })
    }

    /// Amplitude shrink factor `e^{-κt/2}`.
    pub fn amplitude_factor(&self) -> f64 {
        (-0.5 * self.kappa_t).exp()
    }

    /// Exponent weight `1 - e^{-κt}` applied to dyad overlaps.
    pub fn overlap_power(&self) -> f64 {
        -(-self.kappa_t).exp_m1()
    }
}

/// `coeff · |ket><bra|` with normalized coherent states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dyad {
    pub coeff: C64,
    pub ket: C64,
    pub bra: C64,
}

/// A density operator written as a finite sum of coherent dyads.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadSum {
    dyads: Vec<Dyad>,
}

impl DyadSum {
    pub fn new(dyads: Vec<Dyad>) -> Self {
        Self { dyads }
    }

    /// `|ψ><ψ|` for the normalized superposition.
    pub fn from_superposition(s: &CoherentSuperposition) -> Self {
        let n = s.norm_sqr();
        let mut dyads = Vec::with_capacity(s.len() * s.len());
        for a in s.terms() {
            for b in s.terms() {
                dyads.push(Dyad { coeff: a.weight * b.weight.conj() / n, ket: a.center, bra: b.center });
            }
        }
        Self { dyads }
    }

    pub fn dyads(&self) -> &[Dyad] {
        &self.dyads
    }

    pub fn trace(&self) -> C64 {
        self.dyads.iter().map(|d| d.coeff * coherent_overlap(d.bra, d.ket)).sum()
    }

    /// `Tr ρ² = Σ_ij c_i c_j <ν_i|μ_j><ν_j|μ_i>`.
    pub fn purity(&self) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for a in &self.dyads {
            for b in &self.dyads {
                acc += a.coeff * b.coeff * coherent_overlap(a.bra, b.ket) * coherent_overlap(b.bra, a.ket);
            }
        }
        acc.re
    }

    /// Scales the coefficients to unit trace.
    pub fn normalized(&self) -> Self {
        let t = self.trace();
        Self {
            dyads: self
                .dyads
                .iter()
                .map(|d| Dyad { coeff: d.coeff / t, ..*d })
                .collect(),
        }
    }

    /// Largest mismatch between a dyad and the adjoint of its partner; the
    /// set is Hermitian when every `(c, μ, ν)` has a `(c*, ν, μ)`.
    pub fn hermiticity_error(&self) -> f64 {
        self.dyads
            .iter()
            .map(|d| match self.coefficient(d.bra, d.ket) {
                Some(c) => (c - d.coeff.conj()).norm(),
                None => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Coefficient of `|ket><bra|` (centers matched to 1e-9).
    pub fn coefficient(&self, ket: C64, bra: C64) -> Option<C64> {
        self.dyads
            .iter()
            .find(|d| (d.ket - ket).norm() < 1e-9 && (d.bra - bra).norm() < 1e-9)
            .map(|d| d.coeff)
    }

    /// `<0|ρ|0>`.
    pub fn vacuum_population(&self) -> f64 {
        self.dyads
            .iter()
            .map(|d| d.coeff * (-0.5 * (d.ket.norm_sqr() + d.bra.norm_sqr())).exp())
            .sum::<C64>()
            .re
    }

    /// Fock-basis rendering truncated at `n_max` (no renormalization).
    pub fn to_density(&self, n_max: usize) -> Result<DensityMatrix> {
        let dim = n_max + 1;
        let mut m = DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
        for d in &self.dyads {
            let k = coherent_amplitudes(d.ket, dim);
            let b = coherent_amplitudes(d.bra, dim);
            for r in 0..dim {
                let kr = d.coeff * k[r];
                for c in 0..dim {
                    m[(r, c)] += kr * b[c].conj();
                }
            }
        }
        let rho = DensityMatrix::from_raw(m);
        let tail = 1.0 - rho.trace().re;
        if tail.abs() > crate::fock::TAIL_MASS_LIMIT {
            return Err(Error::TruncationTooSmall { n_max, tail_mass: tail.abs() });
        }
        Ok(rho)
    }

    /// Exact damping of every dyad by `κt`.
    pub fn damped(&self, damping: DampingParams) -> Self {
        let shrink = damping.amplitude_factor();
        let power = damping.overlap_power();
        Self {
            dyads: self
                .dyads
                .iter()
                .map(|d| {
                    let ln_overlap = -0.5 * d.ket.norm_sqr() - 0.5 * d.bra.norm_sqr() + d.bra.conj() * d.ket;
                    Dyad { coeff: d.coeff * (power * ln_overlap).exp(), ket: d.ket * shrink, bra: d.bra * shrink }
                })
                .collect(),
        }
    }
}

impl PhaseSpaceSource for DyadSum {
    fn wigner_at(&self, gamma: C64) -> Result<f64> {
        Ok(self
            .dyads
            .iter()
            .map(|d| d.coeff * dyad_wigner(d.ket, d.bra, gamma))
            .sum::<C64>()
            .re)
    }

    fn q_at(&self, gamma: C64) -> f64 {
        self.dyads
            .iter()
            .map(|d| d.coeff * dyad_q(d.ket, d.bra, gamma))
            .sum::<C64>()
            .re
    }
}

/// Density operator of a damped superposition, unit trace.
pub fn damp_superposition(s: &CoherentSuperposition, kappa_t: f64) -> Result<DyadSum> {
    let damping = DampingParams::new(kappa_t)?;
    Ok(DyadSum::from_superposition(s).damped(damping).normalized())
}

/// Damped state of the four-component superposition with components at
/// `±α'`, `±iα'`: sixteen dyads between `{±α_t, ±iα_t}`, `α_t = α' e^{-κt/2}`.
///
/// Diagonal dyads keep their weight; the four opposite-pair dyads carry
/// `e^{-2α'²(1-e^{-κt})}` and the eight adjacent-pair dyads carry
/// `e^{-α'²(1±i)(1-e^{-κt})}`. The coefficients are scaled to unit trace.
pub fn analytic_decohered_state(alpha_prime: f64, eta1: f64, eta2: f64, kappa_t: f64) -> Result<DyadSum> {
    if !(alpha_prime > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha_prime must be positive, got {alpha_prime}")));
    }
    damp_superposition(&four_component_state(alpha_prime, eta1, eta2)?, kappa_t)
}

/// `dρ/d(κt)` in the Fock basis:
/// `√((m+1)(n+1)) ρ_{m+1,n+1} - (m+n)/2 ρ_mn`.
fn damping_rhs(rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
    let dim = rho.nrows();
    for n in 0..dim {
        for m in 0..dim {
            let mut v = -0.5 * (m + n) as f64 * rho[(m, n)];
            if m + 1 < dim && n + 1 < dim {
                v += (((m + 1) * (n + 1)) as f64).sqrt() * rho[(m + 1, n + 1)];
            }
            out[(m, n)] = v;
        }
    }
}

/// Smallest step count keeping `κΔt · n_max` four times below the guard.
pub fn recommended_steps(kappa_t: f64, n_max: usize) -> usize {
    ((kappa_t * n_max as f64 / (0.25 * MAX_STEP_STIFFNESS)).ceil() as usize).max(1)
}

/// Integrates the damping master equation to `κt` with `steps` fixed RK4
/// steps. Refuses step sizes with `κΔt · n_max > 0.1`.
pub fn lindblad_evolve(rho0: &DensityMatrix, kappa_t: f64, steps: usize) -> Result<DensityMatrix> {
    DampingParams::new(kappa_t)?;
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    let h = kappa_t / steps as f64;
    let stiffness = h * rho0.n_max() as f64;
    if stiffness > MAX_STEP_STIFFNESS {
        return Err(Error::StepSizeGuard { value: stiffness, limit: MAX_STEP_STIFFNESS });
    }
    let dim = rho0.dim();
    let zero = || DMatrix::from_element(dim, dim, C64::new(0.0, 0.0));
    let mut rho = rho0.elems().clone();
    let (mut k1, mut k2, mut k3, mut k4) = (zero(), zero(), zero(), zero());
    let half = C64::new(0.5 * h, 0.0);
    let full = C64::new(h, 0.0);
    let sixth = C64::new(h / 6.0, 0.0);
    for _ in 0..steps {
        damping_rhs(&rho, &mut k1);
        damping_rhs(&(&rho + &k1 * half), &mut k2);
        damping_rhs(&(&rho + &k2 * half), &mut k3);
        damping_rhs(&(&rho + &k3 * full), &mut k4);
        rho += (&k1 + (&k2 + &k3) * C64::new(2.0, 0.0) + &k4) * sixth;
    }
    Ok(DensityMatrix::from_raw(rho))
}

/// Central interference term of the damped four-component state as a closed
/// form in `γ`:
///
/// ```text
/// e^{-2|γ|² - 2α'²(1-e^{-κt})} / (4π) · { cos[η1 + i(α'γ* - α'γ)] + cos[η1 + (α'γ* + α'γ)] }
/// ```
///
/// This is the expression quoted in the literature. Its envelope matches the
/// exact opposite-pair contribution, but its cosine arguments are half the
/// exact ones (`2η1 ± 4α'y`, `2η1 ± 4α'x`); use the full dyad Wigner function
/// when the fringe positions matter.
pub fn cross_term_wigner(eta1: f64, alpha_prime: f64, kappa_t: f64, gamma: C64) -> f64 {
    let a = alpha_prime;
    let power = -(-kappa_t).exp_m1();
    let envelope = (-2.0 * gamma.norm_sqr() - 2.0 * a * a * power).exp() / (4.0 * PI);
    let i = C64::new(0.0, 1.0);
    // both brackets are real for real α'
    let first = (i * (a * gamma.conj() - a * gamma)).re;
    let second = (a * gamma.conj() + a * gamma).re;
    envelope * ((eta1 + first).cos() + (eta1 + second).cos())
}

/// Fitted decay rates of the coherence between opposite components
/// (`central`) and between neighbouring components (`adjacent`), in units of
/// `1 - e^{-κt}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRates {
    pub central: f64,
    pub adjacent: f64,
}

impl DecayRates {
    pub fn ratio(&self) -> f64 {
        self.central / self.adjacent
    }
}

/// Least-squares slope of `ln y` against `x`, negated.
fn fitted_rate(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    -sxy / sxx
}

fn check_samples(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.len() < 3 {
        return Err(Error::InsufficientSamples { got: samples.len(), need: 3 });
    }
    for &k in samples {
        DampingParams::new(k)?;
    }
    let xs: Vec<f64> = samples.iter().map(|&k| -(-k).exp_m1()).collect();
    let spread = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - xs.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) {
        return Err(Error::InvalidArgument("decay samples must not all coincide".into()));
    }
    Ok(xs)
}

/// Decay rates read off the analytic dyad coefficients.
pub fn decay_rate_diagnostic(alpha_prime: f64, kappa_t_samples: &[f64]) -> Result<DecayRates> {
    let xs = check_samples(kappa_t_samples)?;
    let (e1, e2) = crate::jc::compass_etas(alpha_prime);
    let mut central = Vec::new();
    let mut adjacent = Vec::new();
    for &k in kappa_t_samples {
        let d = analytic_decohered_state(alpha_prime, e1, e2, k)?;
        let at = alpha_prime * (-0.5 * k).exp();
        let a = C64::new(at, 0.0);
        let missing = || Error::InvalidArgument("dyad not found".into());
        central.push(d.coefficient(a, -a).ok_or_else(missing)?.norm());
        adjacent.push(d.coefficient(a, C64::new(0.0, at)).ok_or_else(missing)?.norm());
    }
    Ok(DecayRates { central: fitted_rate(&xs, &central), adjacent: fitted_rate(&xs, &adjacent) })
}

/// Coefficients `C` of `ρ ≈ Σ_jk C_jk |μ_j><μ_k|` by projecting a Fock-basis
/// matrix on the span of the given coherent states.
pub fn project_on_coherent_basis(rho: &DensityMatrix, centers: &[C64]) -> Result<DMatrix<C64>> {
    let dim = rho.dim();
    let v = DMatrix::from_fn(dim, centers.len(), |r, c| coherent_amplitudes(centers[c], dim)[r]);
    let gram = v.adjoint() * &v;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("coherent basis is singular".into()))?;
    Ok(&inv * v.adjoint() * rho.elems() * &v * &inv)
}

/// The same diagnostic read from the numerical integrator: each sample is
/// evolved from the pure four-component state and projected back on the
/// damped components.
pub fn decay_rates_from_lindblad(alpha_prime: f64, kappa_t_samples: &[f64], n_max: usize) -> Result<DecayRates> {
    let xs = check_samples(kappa_t_samples)?;
    let (e1, e2) = crate::jc::compass_etas(alpha_prime);
    let rho0 = crate::fock::superposition_to_density(&four_component_state(alpha_prime, e1, e2)?, n_max)?;
    let mut central = Vec::new();
    let mut adjacent = Vec::new();
    for &k in kappa_t_samples {
        let rho = lindblad_evolve(&rho0, k, recommended_steps(k, n_max))?;
        let at = alpha_prime * (-0.5 * k).exp();
        let centers = [C64::new(at, 0.0), C64::new(-at, 0.0), C64::new(0.0, at), C64::new(0.0, -at)];
        let c = project_on_coherent_basis(&rho, &centers)?;
        central.push(c[(0, 1)].norm());
        adjacent.push(c[(0, 2)].norm());
    }
    Ok(DecayRates { central: fitted_rate(&xs, &central), adjacent: fitted_rate(&xs, &adjacent) })
}

/// Sampling radius for interference contrasts.
pub const CONTRAST_RADIUS: f64 = 0.7;
const CONTRAST_STEP: f64 = 0.05;

fn contrast_near<S: PhaseSpaceSource>(source: &S, center: C64) -> Result<f64> {
    let r = CONTRAST_RADIUS;
    let spec = GridSpec::new((center.re - r, center.re + r), (center.im - r, center.im + r), CONTRAST_STEP)?;
    let grid = evaluate_grid(Distribution::Wigner, source, &spec)?;
    let (lo, hi) = grid
        .values_within(center, r)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    Ok(hi - lo)
}

/// `(central, adjacent)` Wigner contrasts (max - min within a disk of radius
/// [`CONTRAST_RADIUS`]) at the origin and midway between neighbouring
/// components `a` and `i·a`.
pub fn interference_contrasts<S: PhaseSpaceSource>(source: &S, component: C64) -> Result<(f64, f64)> {
    let midpoint = 0.5 * (component + C64::new(0.0, 1.0) * component);
    Ok((contrast_near(source, C64::new(0.0, 0.0))?, contrast_near(source, midpoint)?))
}

/// Per-time record written by the `decohere` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceSummary {
    pub kappa_t: f64,
    pub trace: f64,
    pub purity: f64,
    pub central_contrast: f64,
    pub adjacent_contrast: f64,
}

/// Summary of the damped four-component state at one time.
pub fn summarize(alpha_prime: f64, eta1: f64, eta2: f64, kappa_t: f64) -> Result<DecoherenceSummary> {
    let d = analytic_decohered_state(alpha_prime, eta1, eta2, kappa_t)?;
    let at = alpha_prime * (-0.5 * kappa_t).exp();
    let (central, adjacent) = interference_contrasts(&d, C64::new(at, 0.0))?;
    Ok(DecoherenceSummary {
        kappa_t,
        trace: d.trace().re,
        purity: d.purity(),
        central_contrast: central,
        adjacent_contrast: adjacent,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, superposition_to_density, to_density, truncation_for, FieldState};
    use crate::jc::compass_etas;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn undamped_state_is_pure() {
        let (e1, e2) = compass_etas(4.0);
        let d = analytic_decohered_state(4.0, e1, e2, 0.0).unwrap();
        assert_eq!(d.dyads().len(), 16);
        assert!((d.trace().re - 1.0).abs() < 1e-10);
        assert!((d.purity() - 1.0).abs() < 1e-10);
        assert!(d.hermiticity_error() < 1e-14);
    }

    #[test]
    fn strong_damping_reaches_vacuum() {
        let (e1, e2) = compass_etas(2.0);
        let d = analytic_decohered_state(2.0, e1, e2, 50.0).unwrap();
        assert!(d.vacuum_population() > 1.0 - 1e-6);
    }

    #[test]
    fn dyad_table_groups() {
        // magnitudes relative to the diagonal weight, and the phase of the
        // adjacent-pair damping factor
        let (ap, kt) = (2.0, 0.1);
        let (e1, e2) = (0.3, 0.2);
        let d = analytic_decohered_state(ap, e1, e2, kt).unwrap();
        let at = ap * (-0.5 * kt).exp();
        let a = c(at, 0.0);
        let i = c(0.0, 1.0);
        let x = 1.0 - (-kt).exp();
        let diag = d.coefficient(a, a).unwrap();
        let opp = d.coefficient(a, -a).unwrap() / diag;
        let want_opp = C64::from_polar((-2.0 * ap * ap * x).exp(), -2.0 * e1);
        assert!((opp - want_opp).norm() < 1e-12);
        let adj = d.coefficient(a, i * a).unwrap() / diag;
        let want_adj = (-(ap * ap) * c(1.0, 1.0) * x).exp() * C64::from_polar(1.0, -2.0 * (e1 - e2));
        assert!((adj - want_adj).norm() < 1e-12);
        let adj2 = d.coefficient(i * a, a).unwrap() / diag;
        assert!((adj2 - want_adj.conj()).norm() < 1e-12);
    }

    #[test]
    fn vacuum_is_stationary() {
        let rho = to_density(&FieldState::vacuum(20));
        let out = lindblad_evolve(&rho, 1.0, 400).unwrap();
        assert!(out.max_abs_diff(&rho) < 1e-15);
    }

    #[test]
    fn coherent_state_stays_coherent() {
        let a0 = c(2.0, 1.0);
        let n = truncation_for(a0.norm());
        let rho = to_density(&coherent_state(a0, n).unwrap());
        let kt = 0.3;
        let out = lindblad_evolve(&rho, kt, recommended_steps(kt, n)).unwrap();
        let target = coherent_state(a0 * (-0.5 * kt).exp(), n).unwrap();
        assert!(out.expectation_in(&target) > 1.0 - 1e-6);
    }

    #[test]
    fn step_guard() {
        let rho = to_density(&FieldState::vacuum(50));
        let err = lindblad_evolve(&rho, 1.0, 10).unwrap_err();
        assert!(matches!(err, Error::StepSizeGuard { .. }));
        assert!(err.is_numerical_guard());
    }

    #[test]
    fn fock_rendering_matches_integrator_for_compass_state() {
        let ap = 2.0;
        let (e1, e2) = compass_etas(ap);
        let n = 40;
        let rho0 = superposition_to_density(&four_component_state(ap, e1, e2).unwrap(), n).unwrap();
        let kt = 1.0 / 8.0;
        let num = lindblad_evolve(&rho0, kt, recommended_steps(kt, n)).unwrap();
        let ana = analytic_decohered_state(ap, e1, e2, kt).unwrap().to_density(n).unwrap();
        assert!(num.max_abs_diff(&ana) < 1e-6);
    }

    #[test]
    fn cross_term_at_origin() {
        let v = cross_term_wigner(0.7, 3.0, 0.0, c(0.0, 0.0));
        assert!((v - 2.0 * 0.7f64.cos() / (4.0 * PI)).abs() < 1e-15);
        // on the π/4 ray both cosines see the same argument
        let g = C64::from_polar(0.4, PI / 4.0);
        let a: f64 = 3.0;
        let want = (-2.0 * g.norm_sqr()).exp() / (4.0 * PI) * 2.0 * (0.7 + 2.0 * a * g.norm() / 2f64.sqrt()).cos();
        assert!((cross_term_wigner(0.7, a, 0.0, g) - want).abs() < 1e-14);
    }

    #[test]
    fn cross_term_amplitude_ratio() {
        let r = cross_term_wigner(0.0, 4.0, 1.0 / 16.0, c(0.0, 0.0)) / cross_term_wigner(0.0, 4.0, 0.0, c(0.0, 0.0));
        // e^{-32(1 - e^{-1/16})}, evaluated at 30 digits
        assert!((r - 0.143_879_089_269_235_3).abs() < 1e-14);
    }

    #[test]
    fn analytic_rates() {
        let r = decay_rate_diagnostic(4.0, &[0.01, 1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0]).unwrap();
        assert!((r.central - 32.0).abs() < 1e-9);
        assert!((r.adjacent - 16.0).abs() < 1e-9);
        assert!((r.ratio() - 2.0).abs() < 1e-10);
        assert!(matches!(
            decay_rate_diagnostic(4.0, &[0.1, 0.2]),
            Err(Error::InsufficientSamples { got: 2, need: 3 })
        ));
    }
}
