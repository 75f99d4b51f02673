//! Wigner and Husimi-Q functions, grid rendering, and Q-function zeros.
//!
//! Normalization: `∫ W d²γ = ∫ Q d²γ = 1` with `d²γ = dx dy`, so the vacuum
//! has `W(0) = 2/π` and `Q(0) = 1/π`.
//!
//! The Fock-basis Wigner function uses the displaced parity,
//! `W(γ) = (2/π) Tr[ρ D(γ) P D(-γ)] = (2/π) Σ_mn ρ_mn (-1)^n <n|D(-2γ)|m>`,
//! with the matrix elements from the Laguerre closed form. Superpositions of
//! coherent states use the exact Gaussian Wigner function of each dyad
//! `|μ><ν|` instead; the two routes are independent.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{
    coherent_amplitudes, diagonal_factors, CoherentSuperposition, DensityMatrix, FieldState,
};
use crate::io::CsvNum;
use crate::C64;

/// Grid evaluations beyond this many points are refused.
pub const MAX_GRID_POINTS: usize = 4_000_000;

/// Mesh step of the Q-zero scan.
pub const ZERO_SCAN_STEP: f64 = 0.01;

/// A root is accepted only if `|<γ|ψ>|²` falls below this.
pub const ZERO_AMPLITUDE_SQR: f64 = 1e-20;

/// `W` of the dyad `|μ><ν|` at `γ`, i.e. `(2/π) <ν|μ> exp(-2(γ-μ)(γ*-ν*))`.
pub fn dyad_wigner(ket: C64, bra: C64, gamma: C64) -> C64 {
    let e = -0.5 * ket.norm_sqr() - 0.5 * bra.norm_sqr() - bra.conj() * ket - 2.0 * gamma.norm_sqr()
        + 2.0 * gamma * bra.conj()
        + 2.0 * ket * gamma.conj();
    FRAC_2_PI * e.exp()
}

/// `<γ|μ><ν|γ> / π`, the Q function of the dyad `|μ><ν|`.
pub fn dyad_q(ket: C64, bra: C64, gamma: C64) -> C64 {
    crate::fock::coherent_overlap(gamma, ket) * crate::fock::coherent_overlap(bra, gamma) / PI
}

fn check_radius(gamma: C64, n_max: usize) -> Result<()> {
    if gamma.norm_sqr() >= n_max as f64 {
        return Err(Error::PhasePointOutOfRange { gamma_abs: gamma.norm(), n_max });
    }
    Ok(())
}

/// `(2/π) Σ_mn ρ_mn (-1)^n <n|D(-2γ)|m>` for `ρ_mn = rho(m, n)`, `m, n < dim`.
fn displaced_parity_sum(dim: usize, gamma: C64, rho: impl Fn(usize, usize) -> C64) -> C64 {
    let beta = -2.0 * gamma;
    let abs_beta = beta.norm();
    let phase = if abs_beta == 0.0 { 0.0 } else { beta.arg() };
    let mut buf = Vec::with_capacity(dim);
    let mut ln_kf = 0.0;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..dim {
        if k > 0 {
            ln_kf += (k as f64).ln();
        }
        let len = dim - k;
        diagonal_factors(abs_beta, k, ln_kf, &mut buf, len);
        let e = C64::from_polar(1.0, k as f64 * phase);
        let mut diag = C64::new(0.0, 0.0);
        for (j, &g) in buf.iter().enumerate() {
            let sign = if (j + k) % 2 == 0 { g } else { -g };
            let term = if k == 0 {
                rho(j, j)
            } else {
                rho(j, j + k) * e + rho(j + k, j) * e.conj()
            };
            diag += term * sign;
        }
        acc += diag;
    }
    acc * FRAC_2_PI
}

/// Index one past the last nonzero amplitude.
fn support(amps: &[C64]) -> usize {
    amps.iter().rposition(|a| a.norm_sqr() != 0.0).map_or(0, |i| i + 1)
}

/// Wigner function of a density matrix at `γ`.
///
/// Requires `|γ|² < n_max`; zero-pad the matrix to go further out.
pub fn wigner(rho: &DensityMatrix, gamma: C64) -> Result<f64> {
    check_radius(gamma, rho.n_max())?;
    let e = rho.elems();
    let w = displaced_parity_sum(rho.dim(), gamma, |m, n| e[(m, n)]);
    debug_assert!(w.im.abs() < 1e-10, "Wigner residue {}", w.im);
    Ok(w.re)
}

/// Wigner function of a pure Fock-basis state (normalized on the fly).
pub fn wigner_pure(state: &FieldState, gamma: C64) -> Result<f64> {
    check_radius(gamma, state.n_max())?;
    let a = state.amps();
    let norm = state.norm_sqr();
    let w = displaced_parity_sum(support(a), gamma, |m, n| a[m] * a[n].conj());
    debug_assert!(w.im.abs() < 1e-10, "Wigner residue {}", w.im);
    Ok(w.re / norm)
}

/// Exact Wigner function of the normalized superposition.
pub fn wigner_superposition(s: &CoherentSuperposition, gamma: C64) -> f64 {
    let mut acc = C64::new(0.0, 0.0);
    for a in s.terms() {
        for b in s.terms() {
            acc += a.weight * b.weight.conj() * dyad_wigner(a.center, b.center, gamma);
        }
    }
    acc.re / s.norm_sqr()
}

/// Husimi function `Q(γ) = <γ|ρ|γ>/π` of a pure Fock-basis state.
pub fn q_pure(state: &FieldState, gamma: C64) -> f64 {
    let c = coherent_amplitudes(gamma, state.dim());
    let amp: C64 = c.iter().zip(state.amps()).map(|(g, a)| g.conj() * a).sum();
    amp.norm_sqr() / (PI * state.norm_sqr())
}

pub fn q_density(rho: &DensityMatrix, gamma: C64) -> f64 {
    let c = coherent_amplitudes(gamma, rho.dim());
    let e = rho.elems();
    let mut acc = C64::new(0.0, 0.0);
    for m in 0..rho.dim() {
        let mut row = C64::new(0.0, 0.0);
        for n in 0..rho.dim() {
            row += e[(m, n)] * c[n];
        }
        acc += c[m].conj() * row;
    }
    acc.re.max(0.0) / PI
}

pub fn q_superposition(s: &CoherentSuperposition, gamma: C64) -> f64 {
    s.amplitude_at(gamma).norm_sqr() / (PI * s.norm_sqr())
}

/// Anything with a Wigner and a Q function.
pub trait PhaseSpaceSource: Clone + Sync {
    fn wigner_at(&self, gamma: C64) -> Result<f64>;
    fn q_at(&self, gamma: C64) -> f64;

    /// A representation whose Wigner function can be evaluated out to
    /// `|γ| = radius`. Fock-basis inputs are zero-padded, which is exact.
    fn widened(&self, _radius: f64) -> Cow<'_, Self> {
        Cow::Borrowed(self)
    }
}

fn padded_n_max(radius: f64) -> usize {
    (radius * radius).ceil() as usize + 1
}

impl PhaseSpaceSource for FieldState {
    fn wigner_at(&self, gamma: C64) -> Result<f64> {
        wigner_pure(self, gamma)
    }

    fn q_at(&self, gamma: C64) -> f64 {
        q_pure(self, gamma)
    }

    fn widened(&self, radius: f64) -> Cow<'_, Self> {
        let need = padded_n_max(radius);
        if need > self.n_max() {
            Cow::Owned(self.padded(need))
        } else {
            Cow::Borrowed(self)
        }
    }
}

impl PhaseSpaceSource for DensityMatrix {
    fn wigner_at(&self, gamma: C64) -> Result<f64> {
        wigner(self, gamma)
    }

    fn q_at(&self, gamma: C64) -> f64 {
        q_density(self, gamma)
    }

    fn widened(&self, radius: f64) -> Cow<'_, Self> {
        let need = padded_n_max(radius);
        if need > self.n_max() {
            Cow::Owned(self.padded(need))
        } else {
            Cow::Borrowed(self)
        }
    }
}

impl PhaseSpaceSource for CoherentSuperposition {
    fn wigner_at(&self, gamma: C64) -> Result<f64> {
        Ok(wigner_superposition(self, gamma))
    }

    fn q_at(&self, gamma: C64) -> f64 {
        q_superposition(self, gamma)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distribution {
    Wigner,
    Q,
}

/// Axis-aligned rectangle of phase-space points `γ = x + iy` with a common
/// step on both axes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub re_range: (f64, f64),
    pub im_range: (f64, f64),
    pub step: f64,
}

fn axis_len(range: (f64, f64), step: f64) -> usize {
    ((range.1 - range.0) / step + 1e-9).floor() as usize + 1
}

impl GridSpec {
    pub fn new(re_range: (f64, f64), im_range: (f64, f64), step: f64) -> Result<Self> {
        let spec = Self { re_range, im_range, step };
        spec.check()?;
        Ok(spec)
    }

    /// Square `[-half, half]²`.
    pub fn square(half: f64, step: f64) -> Result<Self> {
        Self::new((-half, half), (-half, half), step)
    }

    fn check(&self) -> Result<()> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 >= r.0;
        if !(self.step > 0.0) || !self.step.is_finite() || !ok(self.re_range) || !ok(self.im_range) {
            return Err(Error::InvalidArgument(format!("bad grid {self:?}")));
        }
        Ok(())
    }

    pub fn nx(&self) -> usize {
        axis_len(self.re_range, self.step)
    }

    pub fn ny(&self) -> usize {
        axis_len(self.im_range, self.step)
    }

    pub fn len(&self) -> usize {
        self.nx().saturating_mul(self.ny())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, ix: usize) -> f64 {
        self.re_range.0 + ix as f64 * self.step
    }

    pub fn y(&self, iy: usize) -> f64 {
        self.im_range.0 + iy as f64 * self.step
    }

    /// Largest `|γ|` on the grid.
    pub fn max_radius(&self) -> f64 {
        let x = self.x(self.nx() - 1).abs().max(self.re_range.0.abs());
        let y = self.y(self.ny() - 1).abs().max(self.im_range.0.abs());
        x.hypot(y)
    }
}

/// Values of `W` or `Q` on a [`GridSpec`]; `values[iy][ix]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSpaceGrid {
    pub spec: GridSpec,
    pub values: Vec<Vec<f64>>,
}

impl PhaseSpaceGrid {
    pub fn max(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().flatten().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Riemann sum `Σ value · step²`.
    pub fn integral(&self) -> f64 {
        self.values.iter().flatten().sum::<f64>() * self.spec.step * self.spec.step
    }

    /// Values at points with `|γ - center| < radius`.
    pub fn values_within(&self, center: C64, radius: f64) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().enumerate().flat_map(move |(iy, row)| {
            row.iter().enumerate().filter_map(move |(ix, &v)| {
                let g = C64::new(self.spec.x(ix), self.spec.y(iy));
                ((g - center).norm() < radius).then_some(v)
            })
        })
    }

    /// Number of 4-connected regions with value strictly above `threshold`.
    pub fn count_components_above(&self, threshold: f64) -> usize {
        let ny = self.values.len();
        let nx = self.values.first().map_or(0, Vec::len);
        let mut seen = vec![false; nx * ny];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for y0 in 0..ny {
            for x0 in 0..nx {
                if seen[y0 * nx + x0] || !(self.values[y0][x0] > threshold) {
                    continue;
                }
                count += 1;
                seen[y0 * nx + x0] = true;
                queue.push_back((x0, y0));
                while let Some((x, y)) = queue.pop_front() {
                    let mut visit = |xx: usize, yy: usize| {
                        if !seen[yy * nx + xx] && self.values[yy][xx] > threshold {
                            seen[yy * nx + xx] = true;
                            queue.push_back((xx, yy));
                        }
                    };
                    if x > 0 {
                        visit(x - 1, y);
                    }
                    if x + 1 < nx {
                        visit(x + 1, y);
                    }
                    if y > 0 {
                        visit(x, y - 1);
                    }
                    if y + 1 < ny {
                        visit(x, y + 1);
                    }
                }
            }
        }
        count
    }

    /// Components above half the grid maximum.
    pub fn count_lobes(&self) -> usize {
        self.count_components_above(0.5 * self.max())
    }

    /// CSV with header `x,y,value`, `y` outer and `x` inner.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "x,y,value")?;
        for (iy, row) in self.values.iter().enumerate() {
            let y = self.spec.y(iy);
            for (ix, v) in row.iter().enumerate() {
                writeln!(w, "{},{},{}", CsvNum(self.spec.x(ix)), CsvNum(y), CsvNum(*v))?;
            }
        }
        Ok(())
    }
}

/// Evaluates `W` or `Q` on every grid point, one parallel task per row.
///
/// Each point is computed independently, so the output does not depend on
/// the number of worker threads.
pub fn evaluate_grid<S: PhaseSpaceSource>(kind: Distribution, source: &S, spec: &GridSpec) -> Result<PhaseSpaceGrid> {
    spec.check()?;
    let points = spec.len();
    if points > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge { points, limit: MAX_GRID_POINTS });
    }
    let source = match kind {
        Distribution::Wigner => source.widened(spec.max_radius()),
        Distribution::Q => Cow::Borrowed(source),
    };
    let nx = spec.nx();
    let values = (0..spec.ny())
        .into_par_iter()
        .map(|iy| {
            let y = spec.y(iy);
            (0..nx)
                .map(|ix| {
                    let g = C64::new(spec.x(ix), y);
                    match kind {
                        Distribution::Wigner => source.wigner_at(g),
                        Distribution::Q => Ok(source.q_at(g)),
                    }
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PhaseSpaceGrid { spec: *spec, values })
}

/// Predicted zero of the four-component Q function on the `π/4` ray.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QZero {
    pub n1: u32,
    pub n2: u32,
    /// Predicted `|γ|`.
    pub gamma_mag: f64,
    pub ray_angle: f64,
    /// Component amplitude `α' = √(2(n1 - n2))` the prediction presupposes.
    pub alpha_prime: f64,
}

/// Closed-form zero `|γ| = π(3n2 - n1 + 1) / (2√(n1 - n2))`, valid for the
/// four-component state with `α'² = 2(n1 - n2)` and phases
/// `η1 = πα'²/2`, `η2 = πα'²/4`.
pub fn q_zero_closed_form(n1: u32, n2: u32) -> Result<QZero> {
    if n2 < 1 {
        return Err(Error::QZeroConstraint { n1, n2, reason: "n2 must be at least 1" });
    }
    if n1 <= n2 {
        return Err(Error::QZeroConstraint { n1, n2, reason: "n1 must exceed n2" });
    }
    let numer = 3 * n2 as i64 - n1 as i64 + 1;
    if numer <= 0 {
        return Err(Error::QZeroConstraint { n1, n2, reason: "3 n2 - n1 + 1 must be positive" });
    }
    let diff = (n1 - n2) as f64;
    Ok(QZero {
        n1,
        n2,
        gamma_mag: PI * numer as f64 / (2.0 * diff.sqrt()),
        ray_angle: FRAC_PI_4,
        alpha_prime: (2.0 * diff).sqrt(),
    })
}

/// Radii `r ∈ (0, r_max]` where `<γ|ψ>` vanishes on `γ = r e^{i ray_angle}`.
///
/// Local minima of `|A|²` on a mesh of step [`ZERO_SCAN_STEP`] are bracketed,
/// the amplitude is projected on its phase at the left bracket end to get a
/// real function that changes sign through a zero, and bisection refines it.
/// Candidates whose `|A|²` does not drop below [`ZERO_AMPLITUDE_SQR`] are
/// near-misses, not zeros, and are dropped.
pub fn q_zero_scan(s: &CoherentSuperposition, ray_angle: f64, r_max: f64) -> Vec<f64> {
    let s = s.normalized();
    let dir = C64::from_polar(1.0, ray_angle);
    let amp = |r: f64| s.amplitude_at(dir * r);
    let n = (r_max / ZERO_SCAN_STEP).floor() as usize;
    if n < 3 {
        return Vec::new();
    }
    let mesh: Vec<f64> = (1..=n).map(|i| i as f64 * ZERO_SCAN_STEP).collect();
    let mag: Vec<f64> = mesh.iter().map(|&r| amp(r).norm_sqr()).collect();
    let mut roots: Vec<f64> = Vec::new();
    for i in 1..n - 1 {
        if !(mag[i] < mag[i - 1] && mag[i] <= mag[i + 1]) {
            continue;
        }
        let (mut lo, mut hi) = (mesh[i - 1], mesh[i + 1]);
        let a_lo = amp(lo);
        let u = a_lo / a_lo.norm();
        let h = |r: f64| (u.conj() * amp(r)).re;
        let (h_lo, h_hi) = (h(lo), h(hi));
        if !(h_lo > 0.0 && h_hi <= 0.0) {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if h(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let r = if amp(lo).norm_sqr() < amp(hi).norm_sqr() { lo } else { hi };
        if amp(r).norm_sqr() < ZERO_AMPLITUDE_SQR && roots.last().is_none_or(|&p| (r - p).abs() > 1e-9) {
            roots.push(r);
        }
    }
    roots
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, to_density, truncation_for};
    use crate::jc::{compass_etas, four_component_state};

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_wigner_peak() {
        let rho = to_density(&FieldState::vacuum(10));
        assert!((wigner(&rho, c(0.0, 0.0)).unwrap() - FRAC_2_PI).abs() < 1e-15);
    }

    #[test]
    fn coherent_wigner_is_gaussian() {
        let a0 = c(1.2, -0.7);
        let s = coherent_state(a0, truncation_for(a0.norm())).unwrap();
        let rho = to_density(&s);
        for g in [c(0.3, 0.1), c(1.0, -1.0), c(-0.5, 0.8), c(2.0, 0.2), c(1.2, -0.7)] {
            let want = FRAC_2_PI * (-2.0 * (g - a0).norm_sqr()).exp();
            assert!((wigner(&rho, g).unwrap() - want).abs() < 1e-8);
            assert!((wigner_pure(&s, g).unwrap() - want).abs() < 1e-8);
            let sup = CoherentSuperposition::coherent(a0);
            assert!((wigner_superposition(&sup, g) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn wigner_guard_rejects_far_points() {
        let rho = to_density(&FieldState::vacuum(9));
        let err = wigner(&rho, c(3.0, 0.1)).unwrap_err();
        assert!(matches!(err, Error::PhasePointOutOfRange { .. }));
        assert!(wigner(&rho.padded(20), c(3.0, 0.1)).is_ok());
    }

    #[test]
    fn even_cat_has_parity_one_at_origin() {
        let a = c(2.0, 0.0);
        let cat = CoherentSuperposition::from_pairs(&[(c(1.0, 0.0), a), (c(1.0, 0.0), -a)]).unwrap();
        let rho = crate::fock::superposition_to_density(&cat, truncation_for(2.0)).unwrap();
        let fock = wigner(&rho, c(0.0, 0.0)).unwrap();
        assert!((fock - wigner_superposition(&cat, c(0.0, 0.0))).abs() < 1e-8);
        assert!((fock - FRAC_2_PI).abs() < 1e-8);
    }

    #[test]
    fn coherent_q_maximum() {
        let a0 = c(0.5, 1.5);
        let s = coherent_state(a0, truncation_for(a0.norm())).unwrap();
        assert!((q_pure(&s, a0) - 1.0 / PI).abs() < 1e-10);
        let sup = CoherentSuperposition::coherent(a0);
        assert!((q_superposition(&sup, a0) - 1.0 / PI).abs() < 1e-15);
        assert!((q_density(&to_density(&s), a0) - 1.0 / PI).abs() < 1e-10);
    }

    #[test]
    fn vacuum_q_grid_matches_pointwise() {
        let v = FieldState::vacuum(5);
        let spec = GridSpec::square(1.0, 1.0).unwrap();
        let grid = evaluate_grid(Distribution::Q, &v, &spec).unwrap();
        assert_eq!(grid.values.len(), 3);
        for iy in 0..3 {
            for ix in 0..3 {
                let g = c(spec.x(ix), spec.y(iy));
                assert_eq!(grid.values[iy][ix], q_pure(&v, g));
            }
        }
    }

    #[test]
    fn grid_guard() {
        let spec = GridSpec::square(100.0, 0.05).unwrap();
        let err = evaluate_grid(Distribution::Q, &FieldState::vacuum(2), &spec).unwrap_err();
        assert!(matches!(err, Error::GridTooLarge { .. }));
        assert!(GridSpec::square(1.0, 0.0).is_err());
    }

    #[test]
    fn component_counting() {
        let spec = GridSpec::new((0.0, 4.0), (0.0, 1.0), 1.0).unwrap();
        let grid = PhaseSpaceGrid {
            spec,
            values: vec![vec![1.0, 0.0, 1.0, 1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0, 1.0]],
        };
        assert_eq!(grid.count_components_above(0.5), 2);
        assert_eq!(grid.count_components_above(1.5), 0);
    }

    #[test]
    fn closed_form_zero_values() {
        let z = q_zero_closed_form(2, 1).unwrap();
        assert!((z.gamma_mag - PI).abs() < 1e-15);
        assert!((z.alpha_prime - 2f64.sqrt()).abs() < 1e-15);
        let z = q_zero_closed_form(3, 1).unwrap();
        // 3·1 - 3 + 1 = 1
        assert!((z.gamma_mag - PI / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert!((z.alpha_prime - 2.0).abs() < 1e-15);
        assert!(matches!(q_zero_closed_form(4, 1), Err(Error::QZeroConstraint { .. })));
        assert!(q_zero_closed_form(1, 1).is_err());
        assert!(q_zero_closed_form(2, 0).is_err());
    }

    #[test]
    fn coherent_state_has_no_q_zeros() {
        let s = CoherentSuperposition::coherent(c(2.0, 0.0));
        assert!(q_zero_scan(&s, FRAC_PI_4, 8.0).is_empty());
    }

    #[test]
    fn scan_finds_closed_form_zero() {
        let z = q_zero_closed_form(2, 1).unwrap();
        let (e1, e2) = compass_etas(z.alpha_prime);
        let s = four_component_state(z.alpha_prime, e1, e2).unwrap();
        let roots = q_zero_scan(&s, z.ray_angle, 8.0);
        assert!(roots.iter().any(|r| (r - z.gamma_mag).abs() < 1e-6), "{roots:?}");
        for r in roots {
            assert!(q_superposition(&s, C64::from_polar(r, FRAC_PI_4)) < 1e-18);
        }
    }
}
