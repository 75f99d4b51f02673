//! Resonant atom passages through the cavity.
//!
//! An atom enters in `|g>`, interacts resonantly for a dimensionless time
//! `gt`, and is detected. Detection in `|g>` multiplies the Fock amplitudes by
//! `cos(gt√n)`; detection in `|e>` removes one photon with amplitude
//! `-i sin(gt√n)`. A run of ground-state detections splits a coherent field
//! into `2^N` branches whose phases `±gt_1√n ± gt_2√n ...` sweep around the
//! circle `|z| = |α|`.

use std::f64::consts::PI;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_state, CoherentSuperposition, CoherentTerm, FieldState, Overlap};
use crate::C64;

/// Probabilities below this count as a failed (impossible) projection.
pub const MIN_PROJECTION_PROB: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Detection {
    Ground,
    Excited,
}

/// One atom crossing the cavity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomPassage {
    /// Coupling times interaction time.
    pub gt: f64,
    pub detected: Detection,
}

impl AtomPassage {
    pub fn ground(gt: f64) -> Self {
        Self { gt, detected: Detection::Ground }
    }

    pub fn excited(gt: f64) -> Self {
        Self { gt, detected: Detection::Excited }
    }

    fn check(&self) -> Result<()> {
        if !self.gt.is_finite() || self.gt < 0.0 {
            return Err(Error::InvalidArgument(format!("gt must be finite and non-negative, got {}", self.gt)));
        }
        Ok(())
    }
}

/// A real number written as a multiple of π, e.g. `3.7pi`, `0pi` or `-pi`.
///
/// Plain numbers without the suffix are taken literally.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiMultiple(pub f64);

impl PiMultiple {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl FromStr for PiMultiple {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = || Error::Parse { what: "multiple of pi", input: s.to_string() };
        let t = s.trim();
        let lower = t.to_ascii_lowercase();
        let (coef, scale) = if let Some(head) = lower.strip_suffix("pi").or_else(|| lower.strip_suffix('π')) {
            let head = head.trim().trim_end_matches('*').trim();
            let coef = match head {
                "" | "+" => 1.0,
                "-" => -1.0,
                h => h.parse::<f64>().map_err(|_| err())?,
            };
            (coef, PI)
        } else {
            (t.parse::<f64>().map_err(|_| err())?, 1.0)
        };
        let v = coef * scale;
        if !v.is_finite() {
            return Err(err());
        }
        Ok(PiMultiple(v))
    }
}

/// Parses a comma-separated list of π-multiples.
pub fn parse_pi_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.parse::<PiMultiple>().map(PiMultiple::value))
        .collect()
}

/// Conditions the field on one atom detection.
///
/// Returns the renormalized field and the probability of the recorded
/// outcome. Ground and excited probabilities are each computed from their own
/// branch, so their sum is a genuine check of completeness.
pub fn project_atom(state: &FieldState, passage: AtomPassage) -> Result<(FieldState, f64)> {
    passage.check()?;
    let norm = state.norm_sqr();
    let amps = state.amps();
    let mut out = vec![C64::new(0.0, 0.0); amps.len()];
    match passage.detected {
        Detection::Ground => {
            for (n, (o, a)) in out.iter_mut().zip(amps).enumerate() {
                *o = a * (passage.gt * (n as f64).sqrt()).cos();
            }
        }
        Detection::Excited => {
            for n in 1..amps.len() {
                let s = (passage.gt * (n as f64).sqrt()).sin();
                out[n - 1] = C64::new(0.0, -s) * amps[n];
            }
        }
    }
    let projected = FieldState::from_amplitudes(out)?;
    let prob = projected.norm_sqr() / norm;
    if !(prob >= MIN_PROJECTION_PROB) {
        return Err(Error::ZeroNormProjection { prob });
    }
    Ok((projected.renormalized()?, prob))
}

/// Prepares `|α>` and conditions it on a run of ground-state detections.
///
/// The result is proportional to `c_n Π_i cos(gt_i √n)`; the returned joint
/// probability is the product of the conditional ones.
pub fn multi_atom_sequence(alpha: C64, passages: &[AtomPassage], n_max: usize) -> Result<(FieldState, f64)> {
    let (state, probs) = multi_atom_sequence_detailed(alpha, passages, n_max)?;
    Ok((state, probs.iter().product()))
}

/// Like [`multi_atom_sequence`] but also reports each conditional probability.
pub fn multi_atom_sequence_detailed(
    alpha: C64,
    passages: &[AtomPassage],
    n_max: usize,
) -> Result<(FieldState, Vec<f64>)> {
    if passages.is_empty() {
        return Err(Error::InvalidArgument("need at least one atom passage".into()));
    }
    if let Some(p) = passages.iter().find(|p| p.detected != Detection::Ground) {
        return Err(Error::InvalidArgument(format!(
            "preparation protocol detects every atom in |g>, got {:?} at gt = {}",
            p.detected, p.gt
        )));
    }
    let mut state = coherent_state(alpha, n_max)?;
    let mut probs = Vec::with_capacity(passages.len());
    for &p in passages {
        let (next, prob) = project_atom(&state, p)?;
        state = next;
        probs.push(prob);
    }
    Ok((state, probs))
}

/// Ground-detection preparation from plain interaction times.
pub fn prepare(alpha: C64, gts: &[f64], n_max: usize) -> Result<(FieldState, f64)> {
    let passages: Vec<_> = gts.iter().map(|&gt| AtomPassage::ground(gt)).collect();
    multi_atom_sequence(alpha, &passages, n_max)
}

/// Second-order expansion of `√n` about `n̄`.
pub fn sqrt_expansion(n: u64, nbar: f64) -> f64 {
    let d = n as f64 - nbar;
    let s = nbar.sqrt();
    s + d / (2.0 * s) - d * d / (8.0 * nbar * s)
}

/// Phase parameters of one passage in the linearized picture.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApproxParams {
    /// Global phase `gt √n̄ / 2`.
    pub eta: f64,
    /// Rotation of the coherent center, `gt / (2√n̄)`.
    pub theta: f64,
    pub nbar: f64,
}

impl ApproxParams {
    pub fn new(gt: f64, nbar: f64) -> Self {
        let s = nbar.sqrt();
        Self { eta: gt * s / 2.0, theta: gt / (2.0 * s), nbar }
    }
}

/// Coherent-superposition form of the prepared state, keeping only the
/// linear term of the `√n` expansion.
///
/// Term order: the sign vector `s ∈ {±1}^N` is enumerated with bit `k` of the
/// term index set meaning `s_k = -1`. Weights are `2^{-N} e^{i Σ s_k η_k}` and
/// centers `α e^{i Σ s_k θ_k}`, so the result is not normalized.
pub fn approximate_superposition(alpha: C64, gts: &[f64]) -> Result<CoherentSuperposition> {
    let nbar = alpha.norm_sqr();
    if !(nbar > 0.0) {
        return Err(Error::InvalidArgument("approximation needs |alpha| > 0".into()));
    }
    if gts.is_empty() || gts.len() > 20 {
        return Err(Error::InvalidArgument(format!("need 1..=20 interaction times, got {}", gts.len())));
    }
    let params: Vec<_> = gts.iter().map(|&gt| ApproxParams::new(gt, nbar)).collect();
    let scale = 0.5f64.powi(gts.len() as i32);
    let terms = (0..1usize << gts.len())
        .map(|mask| {
            let (eta, theta) = params.iter().enumerate().fold((0.0, 0.0), |(e, t), (k, p)| {
                let s = if mask >> k & 1 == 1 { -1.0 } else { 1.0 };
                (e + s * p.eta, t + s * p.theta)
            });
            CoherentTerm {
                weight: C64::from_polar(scale, eta),
                center: alpha * C64::from_polar(1.0, theta),
            }
        })
        .collect();
    CoherentSuperposition::new(terms)
}

/// Four-component superposition with components at `±α'`, `±iα'` and weights
/// `e^{∓i(η1-η2)}`, `e^{±i(η1+η2)}` (quarter amplitudes).
///
/// This is [`approximate_superposition`] for `α = α' e^{iπ/4}` with rotations
/// `θ1 = π/2`, `θ2 = π/4`, but with free phases `η1`, `η2`.
pub fn four_component_state(alpha_prime: f64, eta1: f64, eta2: f64) -> Result<CoherentSuperposition> {
    let a = C64::new(alpha_prime, 0.0);
    let i = C64::new(0.0, 1.0);
    CoherentSuperposition::from_pairs(&[
        (C64::from_polar(0.25, -(eta1 - eta2)), a),
        (C64::from_polar(0.25, eta1 + eta2), -a),
        (C64::from_polar(0.25, eta1 - eta2), i * a),
        (C64::from_polar(0.25, -(eta1 + eta2)), -i * a),
    ])
}

/// Phases `(η1, η2) = (π α'²/2, π α'²/4)` that realize `θ1 = π/2`, `θ2 = π/4`.
pub fn compass_etas(alpha_prime: f64) -> (f64, f64) {
    let nbar = alpha_prime * alpha_prime;
    (PI * nbar / 2.0, PI * nbar / 4.0)
}

/// `|<ψ_exact|ψ_approx>|²` with both sides normalized.
pub fn fidelity_exact_vs_approx(alpha: C64, gts: &[f64], n_max: usize) -> Result<f64> {
    let (exact, _) = prepare(alpha, gts, n_max)?;
    if alpha.norm_sqr() == 0.0 {
        // Both sides are the vacuum.
        return Ok(exact.amps()[0].norm_sqr() / exact.norm_sqr());
    }
    let approx = approximate_superposition(alpha, gts)?.normalized();
    Ok(exact.overlap(&approx).norm_sqr() / exact.norm_sqr())
}
