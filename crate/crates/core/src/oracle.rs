//! Brute-force reference propagator.
//!
//! Builds the full RWA Hamiltonian on the truncated joint basis and
//! integrates the Schrödinger equation with an adaptive Runge–Kutta scheme.
//! Nothing here knows about the block structure that the closed form
//! exploits: the integrator only sees a Hermitian matrix.
//!
//! Basis order is interleaved, `[g0, e0, g1, e1, …]`; use [`BasisIndex`]
//! rather than computing offsets by hand.

use ndarray::Array2;
use serde::Serialize;

use crate::{
    dynamics::{self, Frame, JointState, ModelParams},
    error::{Error, Result},
    observables,
    states::FieldState,
    C64,
};

pub const DEFAULT_TOL: f64 = 1e-10;
pub const DEFAULT_ORACLE_CAP: usize = 256;

/// Index map for the interleaved joint basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisIndex {
    pub dim: usize,
}

impl BasisIndex {
    pub fn ground(&self, n: usize) -> usize {
        2 * n
    }

    pub fn excited(&self, n: usize) -> usize {
        2 * n + 1
    }

    pub fn len(&self) -> usize {
        2 * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.dim == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointHamiltonian {
    pub matrix: Array2<C64>,
    pub basis: BasisIndex,
    pub params: ModelParams,
}

/// `H = ω₀σz/2 + ωa†a − (g/2)a†²a² + Ω(a†σ₋ + aσ₊)` on `2·dim` states.
/// Detuned parameters are accepted here.
pub fn build_hamiltonian(p: &ModelParams, dim: usize) -> Result<JointHamiltonian> {
    p.validate()?;
    if dim == 0 {
        return Err(Error::param("dim", "must be at least 1"));
    }
    let basis = BasisIndex { dim };
    let mut h = Array2::<C64>::zeros((basis.len(), basis.len()));
    for n in 0..dim {
        let nf = n as f64;
        let free = p.omega * nf - 0.5 * p.g * nf * (nf - 1.0);
        h[[basis.ground(n), basis.ground(n)]] = C64::new(-0.5 * p.omega0 + free, 0.0);
        h[[basis.excited(n), basis.excited(n)]] = C64::new(0.5 * p.omega0 + free, 0.0);
        if n >= 1 {
            // a†σ₋ |e,n−1⟩ = √n |g,n⟩
            let c = C64::new(p.coupling * nf.sqrt(), 0.0);
            h[[basis.ground(n), basis.excited(n - 1)]] = c;
            h[[basis.excited(n - 1), basis.ground(n)]] = c;
        }
    }
    Ok(JointHamiltonian {
        matrix: h,
        basis,
        params: *p,
    })
}

impl JointHamiltonian {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let m = &self.matrix;
        let n = m.nrows();
        (0..n).all(|i| (0..n).all(|j| (m[[i, j]] - m[[j, i]].conj()).norm() <= tol))
    }

    pub fn to_vector(&self, s: &JointState) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.basis.len()];
        for n in 0..self.basis.dim.min(s.dim()) {
            v[self.basis.ground(n)] = s.ground[n];
            v[self.basis.excited(n)] = s.excited[n];
        }
        v
    }

    pub fn from_vector(&self, v: &[C64], t: f64) -> JointState {
        let dim = self.basis.dim;
        JointState {
            ground: (0..dim).map(|n| v[self.basis.ground(n)]).collect(),
            excited: (0..dim).map(|n| v[self.basis.excited(n)]).collect(),
            t,
            frame: Frame::Lab,
        }
    }

    /// `⟨ψ|H|ψ⟩` for a normalized state.
    pub fn expectation(&self, s: &JointState) -> f64 {
        let v = self.to_vector(s);
        let hv = self.matrix.dot(&ndarray::Array1::from(v.clone()));
        v.iter().zip(hv.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// Off-diagonal part of a matrix in coordinate form plus its diagonal.
struct Split {
    diag: Vec<f64>,
    entries: Vec<(usize, usize, C64)>,
}

impl Split {
    fn new(m: &Array2<C64>) -> Self {
        let n = m.nrows();
        let diag = (0..n).map(|i| m[[i, i]].re).collect();
        let entries = m
            .indexed_iter()
            .filter(|&((i, j), v)| i != j && *v != C64::new(0.0, 0.0))
            .map(|((i, j), v)| (i, j, *v))
            .collect();
        Split { diag, entries }
    }

    /// Interaction-picture derivative `−i e^{iDτ} V e^{−iDτ} φ`.
    fn rhs(&self, tau: f64, phi: &[C64], out: &mut [C64], scratch: &mut [C64]) {
        for ((u, p), d) in scratch.iter_mut().zip(phi).zip(&self.diag) {
            *u = p * C64::from_polar(1.0, -d * tau);
        }
        out.iter_mut().for_each(|o| *o = C64::new(0.0, 0.0));
        for &(i, j, v) in &self.entries {
            out[i] += v * scratch[j];
        }
        for (o, d) in out.iter_mut().zip(&self.diag) {
            *o *= C64::new(0.0, -1.0) * C64::from_polar(1.0, d * tau);
        }
    }

    fn max_row_sum(&self) -> f64 {
        let mut rows = vec![0.0; self.diag.len()];
        for &(i, _, v) in &self.entries {
            rows[i] += v.norm();
        }
        rows.into_iter().fold(0.0, f64::max)
    }
}

// Dormand–Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th-order minus embedded 4th-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// per-step error budget as a fraction of the requested accuracy, so that
// errors accumulated over many steps stay near `tol`
const LOCAL_FRACTION: f64 = 1e-3;

/// Integration statistics, for diagnostics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Solves `i dψ/dt = Hψ` for a duration `t` starting from `initial`
/// (taken in the lab frame) with local error control `tol`.
pub fn integrate(initial: &JointState, h: &JointHamiltonian, t: f64, tol: f64) -> Result<JointState> {
    integrate_with_stats(initial, h, t, tol).map(|(s, _)| s)
}

pub fn integrate_with_stats(
    initial: &JointState,
    h: &JointHamiltonian,
    t: f64,
    tol: f64,
) -> Result<(JointState, IntegrationStats)> {
    if !(tol > 0.0) {
        return Err(Error::param("tol", format!("must be positive, got {tol}")));
    }
    if !t.is_finite() {
        return Err(Error::param("t", format!("must be finite, got {t}")));
    }
    if initial.dim() != h.basis.dim {
        return Err(Error::DimensionMismatch(format!(
            "state dim {} vs Hamiltonian dim {}",
            initial.dim(),
            h.basis.dim
        )));
    }
    let start = initial.in_frame(Frame::Lab, &h.params);
    let split = Split::new(&h.matrix);
    let mut phi = h.to_vector(&start);
    let stats = dp5(&split, &mut phi, t, tol)?;
    // back to the Schrödinger picture
    let psi: Vec<C64> = phi
        .iter()
        .zip(&split.diag)
        .map(|(p, d)| p * C64::from_polar(1.0, -d * t))
        .collect();
    Ok((h.from_vector(&psi, start.t + t), stats))
}

fn dp5(split: &Split, y: &mut [C64], t_end: f64, tol: f64) -> Result<IntegrationStats> {
    let n = y.len();
    let mut stats = IntegrationStats::default();
    if t_end == 0.0 || n == 0 {
        return Ok(stats);
    }
    let dir = t_end.signum();
    let span = t_end.abs();
    let zero = C64::new(0.0, 0.0);
    let mut k: [Vec<C64>; 7] = std::array::from_fn(|_| vec![zero; n]);
    let mut tmp = vec![zero; n];
    let mut scratch = vec![zero; n];
    let mut y_new = vec![zero; n];

    let rate = split.max_row_sum().max(1e-300);
    let mut h = (tol.powf(0.2) / rate).min(span);
    let mut t = 0.0f64;
    let mut last_err = 0.0;
    split.rhs(0.0, y, &mut k[0], &mut scratch);

    while t < span {
        if t + h > span {
            h = span - t;
        }
        if h < 1e-14 * span.max(1.0) && t + h < span {
            return Err(Error::IntegrationFailure {
                t: dir * t,
                step: h,
                steps: stats.accepted,
                error_estimate: last_err,
            });
        }
        let s = dir * h;
        let tt = dir * t;
        let stage = |coeffs: &[(usize, f64)], k: &[Vec<C64>], tmp: &mut Vec<C64>, y: &[C64]| {
            for i in 0..n {
                let mut acc = y[i];
                for &(j, a) in coeffs {
                    acc += k[j][i] * (a * s);
                }
                tmp[i] = acc;
            }
        };
        stage(&[(0, A21)], &k, &mut tmp, y);
        split.rhs(tt + C2 * s, &tmp, &mut k[1], &mut scratch);
        stage(&[(0, A31), (1, A32)], &k, &mut tmp, y);
        split.rhs(tt + C3 * s, &tmp, &mut k[2], &mut scratch);
        stage(&[(0, A41), (1, A42), (2, A43)], &k, &mut tmp, y);
        split.rhs(tt + C4 * s, &tmp, &mut k[3], &mut scratch);
        stage(&[(0, A51), (1, A52), (2, A53), (3, A54)], &k, &mut tmp, y);
        split.rhs(tt + C5 * s, &tmp, &mut k[4], &mut scratch);
        stage(&[(0, A61), (1, A62), (2, A63), (3, A64), (4, A65)], &k, &mut tmp, y);
        split.rhs(tt + s, &tmp, &mut k[5], &mut scratch);
        stage(&[(0, B1), (2, B3), (3, B4), (4, B5), (5, B6)], &k, &mut y_new, y);
        split.rhs(tt + s, &y_new, &mut k[6], &mut scratch);

        let mut err = 0.0f64;
        for i in 0..n {
            let e = (k[0][i] * E1
                + k[2][i] * E3
                + k[3][i] * E4
                + k[4][i] * E5
                + k[5][i] * E6
                + k[6][i] * E7)
                * s;
            // amplitudes are bounded by one, so an absolute max-norm suffices
            err = err.max(e.norm() / (LOCAL_FRACTION * tol));
        }
        last_err = err;
        if err <= 1.0 {
            t += h;
            y.copy_from_slice(&y_new);
            // first-same-as-last
            k.swap(0, 6);
            stats.accepted += 1;
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
    }
    Ok(stats)
}

/// Options for [`equivalence_report`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleOptions {
    pub tol: f64,
    pub dim_cap: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            tol: DEFAULT_TOL,
            dim_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceSample {
    pub t: f64,
    pub max_amplitude_deviation: f64,
    pub norm_drift: f64,
    pub delta_excitation: f64,
    pub delta_photon_number: f64,
    pub delta_variance: f64,
    pub delta_schmidt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub dim: usize,
    pub params: ModelParams,
    pub options: OracleOptions,
    pub samples: Vec<EquivalenceSample>,
    pub max_amplitude_deviation: f64,
    pub max_norm_drift: f64,
    pub steps: IntegrationStats,
}

impl EquivalenceReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_amplitude_deviation < threshold
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is plain data")
    }
}

/// Compares [`dynamics::evolve`] with direct integration on `t_grid`.
pub fn equivalence_report(
    initial: &FieldState,
    p: &ModelParams,
    t_grid: &[f64],
    opts: &OracleOptions,
) -> Result<EquivalenceReport> {
    equivalence_report_with(initial, p, t_grid, opts, dynamics::evolve)
}

/// As [`equivalence_report`], with the closed-form propagator supplied by the
/// caller (used for negative controls).
pub fn equivalence_report_with<F>(
    initial: &FieldState,
    p: &ModelParams,
    t_grid: &[f64],
    opts: &OracleOptions,
    closed_form: F,
) -> Result<EquivalenceReport>
where
    F: Fn(&FieldState, &ModelParams, f64) -> Result<JointState>,
{
    let dim = initial.dim();
    if dim > opts.dim_cap {
        return Err(Error::OracleCapExceeded {
            dim,
            cap: opts.dim_cap,
        });
    }
    let h = build_hamiltonian(p, dim)?;
    let mut times: Vec<f64> = t_grid.to_vec();
    times.sort_by(f64::total_cmp);

    let mut state = JointState::from_field(initial, 0.0, Frame::Lab);
    let mut samples = Vec::with_capacity(times.len());
    let mut steps = IntegrationStats::default();
    for &t in &times {
        let (next, st) = integrate_with_stats(&state, &h, t - state.t, opts.tol)?;
        steps.accepted += st.accepted;
        steps.rejected += st.rejected;
        state = next;
        state.t = t;
        let mut closed = closed_form(initial, p, t)?.in_frame(Frame::Lab, p);
        // the closed form takes |g,0⟩ as the energy zero; H puts it at −ω₀/2
        let gauge = C64::from_polar(1.0, 0.5 * p.omega0 * t);
        closed
            .ground
            .iter_mut()
            .chain(closed.excited.iter_mut())
            .for_each(|a| *a *= gauge);
        let max_dev = closed
            .ground
            .iter()
            .zip(&state.ground)
            .chain(closed.excited.iter().zip(&state.excited))
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let rho_c = observables::reduced_density(&closed, observables::Subsystem::Dot);
        let rho_o = observables::reduced_density(&state, observables::Subsystem::Dot);
        samples.push(EquivalenceSample {
            t,
            max_amplitude_deviation: max_dev,
            norm_drift: (state.norm_sqr() - 1.0).abs(),
            delta_excitation: (dynamics::excitation_probability(&closed)
                - dynamics::excitation_probability(&state))
            .abs(),
            delta_photon_number: (observables::mean_photon_number(&closed)
                - observables::mean_photon_number(&state))
            .abs(),
            delta_variance: (observables::quadrature_moments(&closed).1
                - observables::quadrature_moments(&state).1)
                .abs(),
            delta_schmidt: (observables::schmidt_parameter(&rho_c)
                - observables::schmidt_parameter(&rho_o))
            .abs(),
        });
    }
    let max_amplitude_deviation = samples
        .iter()
        .map(|s| s.max_amplitude_deviation)
        .fold(0.0, f64::max);
    let max_norm_drift = samples.iter().map(|s| s.norm_drift).fold(0.0, f64::max);
    Ok(EquivalenceReport {
        dim,
        params: *p,
        options: *opts,
        samples,
        max_amplitude_deviation,
        max_norm_drift,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_state, fock_state, TruncationPolicy};

    #[test]
    fn small_matrix_layout() {
        let p = ModelParams::resonant(1.0, 0.0, 1.0);
        let h = build_hamiltonian(&p, 2).unwrap();
        assert_eq!(h.matrix.dim(), (4, 4));
        let b = h.basis;
        assert_eq!(h.matrix[[b.ground(1), b.excited(0)]], C64::new(1.0, 0.0));
        assert_eq!(h.matrix[[b.ground(0), b.ground(0)]], C64::new(-0.5, 0.0));
        assert_eq!(h.matrix[[b.excited(0), b.excited(0)]], C64::new(0.5, 0.0));
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn kerr_diagonal_entry() {
        let p = ModelParams {
            omega: 0.0,
            omega0: 0.0,
            g: 0.5,
            coupling: 0.3,
        };
        let h = build_hamiltonian(&p, 5).unwrap();
        assert_eq!(h.matrix[[h.basis.ground(3), h.basis.ground(3)]].re, -1.5);
    }

    #[test]
    fn block_sparsity() {
        let p = ModelParams {
            omega: 1.3,
            omega0: 0.9,
            g: 0.2,
            coupling: 0.7,
        };
        let h = build_hamiltonian(&p, 6).unwrap();
        let b = h.basis;
        for ((i, j), v) in h.matrix.indexed_iter() {
            if i == j || *v == C64::new(0.0, 0.0) {
                continue;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            // only ⟨g,n|H|e,n−1⟩ couplings: odd index 2n−1 with even 2n
            assert!(lo % 2 == 1 && hi == lo + 1, "unexpected entry ({i},{j})");
            assert!(b.excited((lo - 1) / 2) == lo);
        }
        assert!(h.is_hermitian(1e-12));
    }

    #[test]
    fn zero_hamiltonian_is_identity() {
        let p = ModelParams {
            omega: 0.0,
            omega0: 0.0,
            g: 0.0,
            coupling: 0.0,
        };
        let init = coherent_state(C64::new(1.0, 0.5), &TruncationPolicy::default()).unwrap();
        let h = build_hamiltonian(&p, init.dim()).unwrap();
        let s0 = JointState::from_field(&init, 0.0, Frame::Lab);
        let s = integrate(&s0, &h, 3.0, 1e-10).unwrap();
        assert_eq!(s.ground, s0.ground);
    }

    #[test]
    fn rabi_from_single_photon() {
        let one = fock_state(1, &TruncationPolicy::default()).unwrap();
        let p = ModelParams::resonant(1.0, 0.0, 1.0);
        let h = build_hamiltonian(&p, 2).unwrap();
        let s0 = JointState::from_field(&one, 0.0, Frame::Lab);
        for t in [0.3, 1.7, 10.0] {
            let s = integrate(&s0, &h, t, 1e-10).unwrap();
            let pe = dynamics::excitation_probability(&s);
            assert!((pe - t.sin().powi(2)).abs() < 1e-9, "t={t} {pe}");
        }
    }

    #[test]
    fn spectral_blocks_match_quasienergies() {
        let p = ModelParams::resonant(2.0, 0.37, 1.1);
        let h = build_hamiltonian(&p, 12).unwrap();
        let b = h.basis;
        for n in 1..12 {
            let hg = h.matrix[[b.ground(n), b.ground(n)]].re;
            let he = h.matrix[[b.excited(n - 1), b.excited(n - 1)]].re;
            let c = h.matrix[[b.ground(n), b.excited(n - 1)]].re;
            // free energy of the manifold on resonance
            let free = p.omega * (n as f64 - 0.5);
            let mean = 0.5 * (hg + he) - free;
            let half = (0.25 * (hg - he).powi(2) + c * c).sqrt();
            let q = dynamics::quasienergies(n, &p).unwrap();
            assert!((mean + half - q.gamma1).abs() < 1e-10);
            assert!((mean - half - q.gamma2).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_bad_tolerance_and_cap() {
        let init = fock_state(3, &TruncationPolicy::default()).unwrap();
        let p = ModelParams::resonant(1.0, 0.1, 1.0);
        let h = build_hamiltonian(&p, 4).unwrap();
        let s0 = JointState::from_field(&init, 0.0, Frame::Lab);
        assert!(integrate(&s0, &h, 1.0, 0.0).is_err());
        let opts = OracleOptions {
            dim_cap: 2,
            ..Default::default()
        };
        assert_eq!(
            equivalence_report(&init, &p, &[1.0], &opts),
            Err(Error::OracleCapExceeded { dim: 4, cap: 2 })
        );
    }
}
