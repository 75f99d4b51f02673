//! Homodyne read-out of the prepared field with a probe atom.
//!
//! A reference coherent field `β = |β| e^{iφ}` is injected (the cavity state
//! is displaced by `D(β)`), then a probe atom entering in `|g>` crosses the
//! cavity for `gt_p` and is found in `|g>` with probability
//! `P_g = Σ_m |F_m|² cos²(gt_p √m)`. When `φ + π` matches the angle of one of
//! the superposed components that component is pushed back to the vacuum and
//! `P_g` peaks.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{coherent_state, displacement_matrix, FieldState};
use crate::C64;

/// Probe time used for the four-peak scan, `gt_p = 1.5π`.
pub const DEFAULT_PROBE_GT: f64 = 1.5 * PI;

/// Default peak prominence, as a fraction of the scan's full range.
pub const DEFAULT_PROMINENCE: f64 = 0.25;

/// Tolerance on norm conservation under injection.
pub const INJECTION_NORM_TOL: f64 = 1e-8;

/// Truncation needed after displacing `state` by `beta`.
fn injected_n_max(state: &FieldState, beta: C64) -> usize {
    let reach = state.mean_photon_number().sqrt() + beta.norm();
    state.n_max().max(crate::fock::truncation_for(reach))
}

/// `D(β)|ψ>`, i.e. `F_m = Σ_n <m|D(β)|n> ψ_n`.
///
/// The output truncation grows to cover the displaced field; a norm change
/// above [`INJECTION_NORM_TOL`] means the input itself was truncated too
/// tightly and is reported as an error.
pub fn inject_field(state: &FieldState, beta: C64) -> Result<FieldState> {
    let n_out = injected_n_max(state, beta);
    inject_field_into(state, beta, n_out)
}

/// [`inject_field`] with an explicit output truncation.
pub fn inject_field_into(state: &FieldState, beta: C64, n_max_out: usize) -> Result<FieldState> {
    let d = displacement_matrix(beta, n_max_out + 1, state.dim());
    apply(&d, state)
}

fn apply(d: &nalgebra::DMatrix<C64>, state: &FieldState) -> Result<FieldState> {
    let psi = nalgebra::DVector::from_column_slice(state.amps());
    let out = d * psi;
    let out = FieldState::from_amplitudes(out.iter().cloned().collect())?;
    let (before, after) = (state.norm_sqr(), out.norm_sqr());
    if (after - before).abs() > INJECTION_NORM_TOL {
        let tail_mass = (before - after).abs();
        return Err(Error::TruncationTooSmall { n_max: out.n_max(), tail_mass });
    }
    Ok(out)
}

/// `Σ_m |F_m|² cos²(gt_p √m)` for a normalized state.
pub fn probe_probability(state: &FieldState, gt_p: f64) -> f64 {
    let p: f64 = state
        .amps()
        .iter()
        .enumerate()
        .map(|(m, a)| a.norm_sqr() * (gt_p * (m as f64).sqrt()).cos().powi(2))
        .sum();
    p / state.norm_sqr()
}

/// Ground-state probability of the probe versus reference phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeScan {
    pub phis: Vec<f64>,
    pub probs: Vec<f64>,
    pub beta_mag: f64,
    pub gt_p: f64,
}

/// `P_g(φ)` at `φ_j = 2πj / n_phi`, `j = 0..n_phi`.
pub fn phase_scan(prepared: &FieldState, beta_mag: f64, gt_p: f64, n_phi: usize) -> Result<ProbeScan> {
    if !(beta_mag > 0.0) || !beta_mag.is_finite() {
        return Err(Error::InvalidArgument(format!("beta_mag must be positive, got {beta_mag}")));
    }
    if n_phi == 0 {
        return Err(Error::InvalidArgument("n_phi must be positive".into()));
    }
    let n_out = injected_n_max(prepared, C64::new(beta_mag, 0.0));
    let phis: Vec<f64> = (0..n_phi).map(|j| TAU * j as f64 / n_phi as f64).collect();
    let probs = phis
        .par_iter()
        .map(|&phi| {
            let displaced = inject_field_into(prepared, C64::from_polar(beta_mag, phi), n_out)?;
            Ok(probe_probability(&displaced, gt_p))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(ProbeScan { phis, probs, beta_mag, gt_p })
}

/// Peak of a [`ProbeScan`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub phi: f64,
    /// Raw (unsmoothed) probability at the peak sample.
    pub prob: f64,
    pub prominence: f64,
}

/// Peaks of a periodic scan, sorted by height (descending).
///
/// The scan is smoothed with a centered 5-sample moving average (wrapping
/// around, since `P_g` is 2π-periodic), local maxima are taken by 3-point
/// comparison, and only those whose topographic prominence reaches
/// `prominence_frac · (max - min)` of the smoothed scan survive.
pub fn find_peaks(scan: &ProbeScan, prominence_frac: f64) -> Vec<Peak> {
    let n = scan.probs.len();
    if n < 3 {
        return Vec::new();
    }
    let p = &scan.probs;
    let smooth: Vec<f64> = (0..n)
        .map(|i| (0..5).map(|d| p[(i + n + d - 2) % n]).sum::<f64>() / 5.0)
        .collect();
    let hi = smooth.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = smooth.iter().cloned().fold(f64::INFINITY, f64::min);
    let range = hi - lo;
    if !(range > 0.0) {
        return Vec::new();
    }
    let threshold = prominence_frac * range;
    let at = |i: isize| smooth[i.rem_euclid(n as isize) as usize];
    let mut peaks = Vec::new();
    for i in 0..n as isize {
        let v = at(i);
        if !(v > at(i - 1) && v >= at(i + 1)) {
            continue;
        }
        let prominence = circular_prominence(&smooth, i as usize);
        if prominence >= threshold {
            peaks.push(Peak { phi: scan.phis[i as usize], prob: p[i as usize], prominence });
        }
    }
    peaks.sort_by(|a, b| b.prob.total_cmp(&a.prob));
    peaks
}

/// Height of sample `i` above the higher of the two lowest points separating
/// it from a strictly higher sample on either side (walking around the ring).
fn circular_prominence(s: &[f64], i: usize) -> f64 {
    let n = s.len();
    let v = s[i];
    let walk = |dir: isize| {
        let mut low = v;
        let mut j = i as isize;
        for _ in 1..n {
            j += dir;
            let w = s[j.rem_euclid(n as isize) as usize];
            if w > v {
                return low;
            }
            low = low.min(w);
        }
        low
    };
    v - walk(-1).max(walk(1))
}

/// Mean-field angles `arg<ψ_b|a|ψ_b>` of the `2^N` branches
/// `c_n e^{i Σ s_k gt_k √n}` into which ground-state detections split `|α>`.
///
/// Branch order follows [`crate::jc::approximate_superposition`].
pub fn branch_centroid_angles(alpha: C64, gts: &[f64], n_max: usize) -> Result<Vec<f64>> {
    if gts.is_empty() || gts.len() > 20 {
        return Err(Error::InvalidArgument(format!("need 1..=20 interaction times, got {}", gts.len())));
    }
    let base = coherent_state(alpha, n_max)?;
    (0..1usize << gts.len())
        .map(|mask| {
            let total: f64 = gts
                .iter()
                .enumerate()
                .map(|(k, gt)| if mask >> k & 1 == 1 { -gt } else { *gt })
                .sum();
            let amps = base
                .amps()
                .iter()
                .enumerate()
                .map(|(n, c)| c * C64::from_polar(1.0, total * (n as f64).sqrt()))
                .collect();
            let branch = FieldState::from_amplitudes(amps)?;
            Ok(branch.annihilation_expectation().arg())
        })
        .collect()
}

/// Signed distance between two angles, in `(-π, π]`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}
