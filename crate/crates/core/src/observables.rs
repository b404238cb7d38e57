//! Observables of field and joint states.
//!
//! Quadratures use `x = (a + a†)/√2`, so the vacuum (shot-noise) variance is
//! exactly 1/2.

use std::f64::consts::FRAC_PI_4;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{
    dynamics::{JointState, ModelParams},
    error::Result,
    states::{coherent_state, squeezed_vacuum_state, FieldState, TruncationPolicy},
    C64,
};

/// Variance of `x` in the vacuum.
pub const SHOT_NOISE: f64 = 0.5;

/// Anything whose field part is a set of pure components added
/// incoherently: one component for a field state, two (dot in `|g⟩` and
/// in `|e⟩`) for a joint state.
pub trait FieldComponents {
    fn components(&self) -> Vec<&[C64]>;
}

impl FieldComponents for FieldState {
    fn components(&self) -> Vec<&[C64]> {
        vec![self.amps()]
    }
}

impl FieldComponents for JointState {
    fn components(&self) -> Vec<&[C64]> {
        vec![&self.ground, &self.excited]
    }
}

pub fn mean_photon_number(s: &impl FieldComponents) -> f64 {
    s.components()
        .iter()
        .flat_map(|c| c.iter().enumerate())
        .map(|(n, a)| n as f64 * a.norm_sqr())
        .sum()
}

/// Photon-number distribution of the field, traced over the dot.
pub fn photon_distribution(s: &impl FieldComponents) -> Vec<f64> {
    let comps = s.components();
    let dim = comps.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut p = vec![0.0; dim];
    for c in comps {
        for (n, a) in c.iter().enumerate() {
            p[n] += a.norm_sqr();
        }
    }
    p
}

/// `(⟨x⟩, Var[x])` of the reduced field state.
///
/// Since the reduced density matrix is `Σ_c |c⟩⟨c|` over the components,
/// `Tr(ρ x) = Σ_c ⟨c|x|c⟩`; the tridiagonal `x` with
/// `⟨n|x|n+1⟩ = √((n+1)/2)` is applied to each component directly.
pub fn quadrature_moments(s: &impl FieldComponents) -> (f64, f64) {
    let mut mean = 0.0;
    let mut second = 0.0;
    for c in s.components() {
        let dim = c.len();
        for n in 0..dim {
            // (x c)_n = √(n/2) c_{n−1} + √((n+1)/2) c_{n+1}
            let mut xc = C64::new(0.0, 0.0);
            if n >= 1 {
                xc += c[n - 1] * (0.5 * n as f64).sqrt();
            }
            if n + 1 < dim {
                xc += c[n + 1] * (0.5 * (n + 1) as f64).sqrt();
            }
            mean += (c[n].conj() * xc).re;
            second += xc.norm_sqr();
        }
        // the top level leaks into |dim⟩ under x; keep that weight too
        if let Some(top) = c.last() {
            second += 0.5 * dim as f64 * top.norm_sqr();
        }
    }
    (mean, second - mean * mean)
}

/// Quadrature variance of an initially coherent field evolving under the
/// Kerr term alone, in closed form:
///
/// ```text
/// Var[x(t)] = 1/2 + |α|² [ 1 − e^{−2|α|²(1−cos gt)}
///             − cos(2|α|² sin gt − 2ωt + 2φ) e^{−2|α|²(1−cos gt)}
///             + cos(gt + |α|² sin 2gt − 2ωt + 2φ) e^{−|α|²(1−cos 2gt)} ]
/// ```
///
/// with `φ = arg α`; for real α the `2φ` terms vanish.
pub fn kerr_variance_analytic(alpha: C64, p: &ModelParams, t: f64) -> f64 {
    let n = alpha.norm_sqr();
    let phi2 = 2.0 * alpha.arg();
    let gt = p.g * t;
    let wt2 = 2.0 * p.omega * t;
    let damp1 = (-2.0 * n * (1.0 - gt.cos())).exp();
    let damp2 = (-n * (1.0 - (2.0 * gt).cos())).exp();
    0.5 + n
        * (1.0 - damp1 - (2.0 * n * gt.sin() - wt2 + phi2).cos() * damp1
            + (gt + n * (2.0 * gt).sin() - wt2 + phi2).cos() * damp2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subsystem {
    Field,
    Dot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub elements: Array2<C64>,
    pub subsystem: Subsystem,
}

impl DensityMatrix {
    pub fn pure(state: &FieldState) -> Self {
        DensityMatrix {
            elements: outer(&[state.amps()], state.dim()),
            subsystem: Subsystem::Field,
        }
    }

    pub fn dim(&self) -> usize {
        self.elements.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.elements.diag().iter().map(|z| z.re).sum()
    }

    /// `Tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        // ρ Hermitian: Tr(ρ²) = Σ |ρ_ij|²
        self.elements.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.elements;
        let n = m.nrows();
        (0..n).all(|i| (i..n).all(|j| (m[[i, j]] - m[[j, i]].conj()).norm() <= tol))
    }

    /// Hermitian, unit trace and no eigenvalue below `−tol`. The spectrum is
    /// probed with a Cholesky factorization of `ρ + tol·1`, which succeeds
    /// exactly when every eigenvalue exceeds `−tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        if !self.is_hermitian(tol) || (self.trace() - 1.0).abs() > tol {
            return false;
        }
        let n = self.dim();
        let mut l = Array2::<C64>::zeros((n, n));
        for j in 0..n {
            let mut d = self.elements[[j, j]].re + tol;
            for k in 0..j {
                d -= l[[j, k]].norm_sqr();
            }
            if d <= 0.0 {
                return false;
            }
            let d = d.sqrt();
            l[[j, j]] = C64::new(d, 0.0);
            for i in j + 1..n {
                let mut v = self.elements[[i, j]];
                for k in 0..j {
                    v -= l[[i, k]] * l[[j, k]].conj();
                }
                l[[i, j]] = v / d;
            }
        }
        true
    }

    /// Diagonal of a field density matrix.
    pub fn populations(&self) -> Vec<f64> {
        self.elements.diag().iter().map(|z| z.re).collect()
    }
}

fn outer(components: &[&[C64]], dim: usize) -> Array2<C64> {
    let mut m = Array2::<C64>::zeros((dim, dim));
    for c in components {
        for (i, a) in c.iter().enumerate() {
            if *a == C64::new(0.0, 0.0) {
                continue;
            }
            for (j, b) in c.iter().enumerate() {
                m[[i, j]] += a * b.conj();
            }
        }
    }
    m
}

/// Reduced state of one subsystem of a pure joint state.
///
/// Field: `ρ_nk = g_n g_k* + e_n e_k*`. Dot, in the order `(g, e)`:
/// `ρ₁₁ = Σ|g_n|²`, `ρ₂₂ = Σ|e_n|²`, `ρ₁₂ = Σ g_n e_n*`.
pub fn reduced_density(s: &JointState, which: Subsystem) -> DensityMatrix {
    let elements = match which {
        Subsystem::Field => outer(&[&s.ground, &s.excited], s.dim()),
        Subsystem::Dot => {
            let r11: f64 = s.ground.iter().map(|a| a.norm_sqr()).sum();
            let r22: f64 = s.excited.iter().map(|a| a.norm_sqr()).sum();
            let r12: C64 = s
                .ground
                .iter()
                .zip(&s.excited)
                .map(|(g, e)| g * e.conj())
                .sum();
            ndarray::array![
                [C64::new(r11, 0.0), r12],
                [r12.conj(), C64::new(r22, 0.0)]
            ]
        }
    };
    DensityMatrix {
        elements,
        subsystem: which,
    }
}

/// Schmidt parameter `K = 1/Tr(ρ²) = 1/(ρ₁₁² + ρ₂₂² + 2|ρ₁₂|²)` of the
/// reduced dot state; 1 for a product state, 2 for a maximally entangled one.
pub fn schmidt_parameter(rho_dot: &DensityMatrix) -> f64 {
    let m = &rho_dot.elements;
    debug_assert_eq!(m.dim(), (2, 2));
    let r11 = m[[0, 0]].re;
    let r22 = m[[1, 1]].re;
    let r12 = m[[0, 1]].norm_sqr();
    1.0 / (r11 * r11 + r22 * r22 + 2.0 * r12)
}

fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// `|⟨reference|s⟩|²`; the shorter vector is implicitly zero-padded.
pub fn fidelity(s: &FieldState, reference: &FieldState) -> f64 {
    inner(reference.amps(), s.amps()).norm_sqr()
}

/// `⟨reference|ρ|reference⟩`.
pub fn overlap(rho: &DensityMatrix, reference: &FieldState) -> f64 {
    let r = reference.amps();
    let dim = rho.dim().min(r.len());
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            acc += r[i].conj() * rho.elements[[i, j]] * r[j];
        }
    }
    acc.re
}

/// Phase-space rotation `e^{−iθ a†a}`: `Cₙ → Cₙ e^{−inθ}`, which maps
/// `|α⟩` to `|α e^{−iθ}⟩`.
pub fn rotate(s: &FieldState, theta: f64) -> FieldState {
    let amps = s
        .amps()
        .iter()
        .enumerate()
        .map(|(n, a)| a * C64::from_polar(1.0, -(n as f64) * theta))
        .collect();
    FieldState::from_normalized(amps, s.tail_eps())
}

/// `(e^{−iπ/4}|iα⟩ + e^{iπ/4}|−iα⟩)/√2`, renormalized on the truncated basis.
///
/// The two branches overlap, but with a relative phase of π/2 the overlap
/// term is purely imaginary and the untruncated norm is exactly one.
pub fn cat_reference(alpha: C64, trunc: &TruncationPolicy) -> Result<FieldState> {
    let i = C64::new(0.0, 1.0);
    let plus = coherent_state(i * alpha, trunc)?;
    let trunc = TruncationPolicy {
        dim: Some(plus.dim()),
        ..*trunc
    };
    let minus = coherent_state(-i * alpha, &trunc)?;
    superpose(&plus, &minus)
}

/// `(e^{−iπ/4}|first⟩ + e^{iπ/4}|second⟩)/√2`, renormalized.
pub(crate) fn superpose(first: &FieldState, second: &FieldState) -> Result<FieldState> {
    let w1 = C64::from_polar(1.0, -FRAC_PI_4);
    let w2 = C64::from_polar(1.0, FRAC_PI_4);
    let amps = first
        .amps()
        .iter()
        .zip(second.amps())
        .map(|(a, b)| (w1 * a + w2 * b) / std::f64::consts::SQRT_2)
        .collect();
    let s = FieldState::from_amplitudes(amps)?;
    Ok(FieldState::from_normalized(
        s.into_amps(),
        first.tail_eps().max(second.tail_eps()),
    ))
}

/// Sign convention for the rotated squeezed vacuum `|R⟩_θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationConvention {
    /// `|2k⟩` amplitude times `e^{−i2kθ}`: the squeezed ellipse rotated by θ
    /// in phase space.
    PhaseSpace,
    /// `|2k⟩` amplitude times `e^{+i2kθ}`: rotated by −θ.
    Conjugate,
}

/// Squeezed vacuum with factor `r_factor`, rotated by θ under `convention`.
pub fn rotated_squeezed(
    r_factor: f64,
    theta: f64,
    convention: RotationConvention,
    trunc: &TruncationPolicy,
) -> Result<FieldState> {
    let base = squeezed_vacuum_state(r_factor, trunc)?;
    let angle = match convention {
        RotationConvention::PhaseSpace => theta,
        RotationConvention::Conjugate => -theta,
    };
    Ok(rotate(&base, angle))
}

/// `(e^{−iπ/4}|R⟩_{π/4} + e^{iπ/4}|R⟩_{−π/4})/√2`.
pub fn cross_reference(
    r_factor: f64,
    convention: RotationConvention,
    trunc: &TruncationPolicy,
) -> Result<FieldState> {
    let plus = rotated_squeezed(r_factor, FRAC_PI_4, convention, trunc)?;
    let trunc = TruncationPolicy {
        dim: Some(plus.dim()),
        ..*trunc
    };
    let minus = rotated_squeezed(r_factor, -FRAC_PI_4, convention, &trunc)?;
    superpose(&plus, &minus)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::{
        dynamics::{evolve, kerr_propagate, Frame},
        states::{fock_state, squeezed_vacuum_state},
    };

    fn trunc() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    #[test]
    fn vacuum_moments() {
        let vac = fock_state(0, &trunc()).unwrap();
        assert_eq!(mean_photon_number(&vac), 0.0);
        let (m, v) = quadrature_moments(&vac);
        assert_eq!(m, 0.0);
        assert!((v - 0.5).abs() < 1e-15);
    }

    #[test]
    fn coherent_moments() {
        let s = coherent_state(C64::new(2.0, 0.0), &trunc()).unwrap();
        let (m, v) = quadrature_moments(&s);
        assert!((m - 2.0 * 2f64.sqrt()).abs() < 1e-10);
        assert!((v - 0.5).abs() < 1e-10);
        let s4 = coherent_state(C64::new(4.0, 0.0), &trunc()).unwrap();
        assert!((mean_photon_number(&s4) - 16.0).abs() < 1e-9);
    }

    #[test]
    fn squeezed_variance_is_squeezed_in_x() {
        let s = squeezed_vacuum_state(4.0, &trunc()).unwrap();
        let (m, v) = quadrature_moments(&s);
        assert!(m.abs() < 1e-15);
        // Var = 1/(2R²)
        assert!((v - 1.0 / 32.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn fock_one_variance() {
        // ⟨1|x²|1⟩ = 3/2
        let s = fock_state(1, &trunc()).unwrap();
        let (_, v) = quadrature_moments(&s);
        assert!((v - 1.5).abs() < 1e-15);
    }

    #[test]
    fn analytic_variance_trivial_limits() {
        let alpha = C64::new(2.0, 0.0);
        let p = ModelParams::resonant(1.0, 0.1, 0.0);
        assert!((kerr_variance_analytic(alpha, &p, 0.0) - 0.5).abs() < 1e-14);
        let free = ModelParams::resonant(1.0, 0.0, 0.0);
        for t in [0.1, 1.0, 17.0] {
            assert!((kerr_variance_analytic(alpha, &free, t) - 0.5).abs() < 1e-13);
        }
    }

    #[test]
    fn analytic_variance_matches_simulation_for_complex_alpha() {
        let alpha = C64::from_polar(1.3, 0.8);
        let s0 = coherent_state(alpha, &trunc()).unwrap();
        let p = ModelParams::resonant(1.0, 0.23, 0.0);
        for t in [0.4, 3.0, 11.0] {
            let s = kerr_propagate(&s0, &p, t, Frame::Lab);
            let v = quadrature_moments(&s).1;
            assert!((v - kerr_variance_analytic(alpha, &p, t)).abs() < 1e-9);
        }
    }

    #[test]
    fn dot_density_at_start_is_pure_ground() {
        let s0 = coherent_state(C64::new(1.5, 0.0), &trunc()).unwrap();
        let p = ModelParams::resonant(1.0, 0.1, 1.0);
        let j = evolve(&s0, &p, 0.0).unwrap();
        let rho = reduced_density(&j, Subsystem::Dot);
        assert!((rho.elements[[0, 0]].re - 1.0).abs() < 1e-15);
        assert!(rho.elements[[1, 1]].norm() < 1e-15);
        assert!((rho.purity() - 1.0).abs() < 1e-14);
        assert!((schmidt_parameter(&rho) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn single_photon_dot_purity() {
        // |1⟩: ψ = cos Ωt |g,1⟩ − i sin Ωt |e,0⟩, so ρ_dot = diag(cos², sin²)
        // (ρ₁₂ = Σ g_n e_n* pairs different photon numbers and vanishes)
        let s0 = fock_state(1, &trunc()).unwrap();
        let p = ModelParams::resonant(1.0, 0.4, 1.0);
        let j = evolve(&s0, &p, PI / 4.0).unwrap();
        let rho = reduced_density(&j, Subsystem::Dot);
        assert!(rho.elements[[0, 1]].norm() < 1e-15);
        assert!((rho.purity() - 0.5).abs() < 1e-14);
        assert!((schmidt_parameter(&rho) - 2.0).abs() < 1e-13);
    }

    #[test]
    fn schmidt_extremes() {
        let mixed = DensityMatrix {
            elements: ndarray::array![
                [C64::new(0.5, 0.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(0.5, 0.0)]
            ],
            subsystem: Subsystem::Dot,
        };
        assert!((schmidt_parameter(&mixed) - 2.0).abs() < 1e-15);
        let pure = DensityMatrix {
            elements: ndarray::array![
                [C64::new(0.5, 0.0), C64::new(0.0, 0.5)],
                [C64::new(0.0, -0.5), C64::new(0.5, 0.0)]
            ],
            subsystem: Subsystem::Dot,
        };
        assert!((schmidt_parameter(&pure) - 1.0).abs() < 1e-15);
        assert!(pure.is_valid(1e-10) && mixed.is_valid(1e-10));
        let bad = DensityMatrix {
            elements: ndarray::array![
                [C64::new(1.2, 0.0), C64::new(0.0, 0.0)],
                [C64::new(0.0, 0.0), C64::new(-0.2, 0.0)]
            ],
            subsystem: Subsystem::Dot,
        };
        assert!(!bad.is_valid(1e-10));
    }

    #[test]
    fn field_density_is_valid_and_purity_dual() {
        let s0 = coherent_state(C64::new(2.0, 0.0), &trunc()).unwrap();
        let p = ModelParams::resonant(5.0, 0.1, 1.0);
        let j = evolve(&s0, &p, 3.3).unwrap();
        let field = reduced_density(&j, Subsystem::Field);
        let dot = reduced_density(&j, Subsystem::Dot);
        assert!(field.is_valid(1e-10));
        assert!((field.purity() - dot.purity()).abs() < 1e-12);
    }

    #[test]
    fn fidelity_basics() {
        let a = fock_state(2, &TruncationPolicy::fixed(4)).unwrap();
        let b = fock_state(1, &trunc()).unwrap();
        assert!((fidelity(&a, &a) - 1.0).abs() < 1e-15);
        assert_eq!(fidelity(&a, &b), 0.0);
        let rho = DensityMatrix::pure(&a);
        assert!((overlap(&rho, &a) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cat_reference_vacuum_and_phase_pattern() {
        let vac = cat_reference(C64::new(0.0, 0.0), &trunc()).unwrap();
        assert_eq!(vac.dim(), 1);
        assert!((vac.amps()[0].norm() - 1.0).abs() < 1e-15);

        // iⁿ e^{−iπ/4} + (−i)ⁿ e^{iπ/4} over √2 is real: +1, +1, −1, −1, …
        let cat = cat_reference(C64::new(2.0, 0.0), &trunc()).unwrap();
        let coh = coherent_state(C64::new(2.0, 0.0), &trunc()).unwrap();
        for n in 0..cat.dim() {
            let sign = if n % 4 < 2 { 1.0 } else { -1.0 };
            assert!((cat.amps()[n] - sign * coh.amps()[n]).norm() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn cat_state_formed_at_half_revival() {
        let alpha = C64::new(2.0, 0.0);
        let s0 = coherent_state(alpha, &trunc()).unwrap();
        let p = ModelParams::resonant(1.0, 0.1, 0.0);
        let half = kerr_propagate(&s0, &p, 0.5 * p.kerr_period().unwrap(), Frame::Rotating);
        let cat = cat_reference(alpha, &trunc()).unwrap();
        assert!((fidelity(&half, &cat) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn rotated_squeezed_conventions_are_mirror_images() {
        let a = rotated_squeezed(4.0, 0.3, RotationConvention::PhaseSpace, &trunc()).unwrap();
        let b = rotated_squeezed(4.0, -0.3, RotationConvention::Conjugate, &trunc()).unwrap();
        assert!((fidelity(&a, &b) - 1.0).abs() < 1e-14);
        // rotation by π/2 swaps the squeezed and anti-squeezed axes
        let r = rotated_squeezed(4.0, PI / 2.0, RotationConvention::PhaseSpace, &trunc()).unwrap();
        assert!((quadrature_moments(&r).1 - 8.0).abs() < 1e-8);
    }
}
