//! Closed-form evolution of the joint dot + field state.
//!
//! The Hamiltonian conserves `a†a + σ₊σ₋`, so it splits into the invariant
//! pairs `{|g,n⟩, |e,n−1⟩}` (plus the lone `|g,0⟩`). On resonance each pair
//! shares the free energy `ω(n − ½)` and is coupled by `Ω√n`, while the Kerr
//! term shifts the two levels by different amounts. Diagonalizing each 2×2
//! block gives the dressed quasienergies
//!
//! ```text
//! γ₁,₂ = −g(n−1)²/2 ± sₙ,    sₙ = √(Ω²n + g²(n−1)²/4)
//! ```
//!
//! and, for the dot starting in `|g⟩`,
//!
//! ```text
//! aₙ(t)/Cₙ   = ½(1 − g(n−1)/2sₙ) e^{−iγ₁t} + ½(1 + g(n−1)/2sₙ) e^{−iγ₂t}
//! bₙ₋₁(t)/Cₙ = Ω√n/(2sₙ) (e^{−iγ₁t} − e^{−iγ₂t})
//! ```
//!
//! Lab-frame amplitudes multiply these by the free phases `e^{−iωnt}` on
//! `|g,n⟩` and `e^{−i(ω₀ + ωm)t}` on `|e,m⟩`. The energy of `|g,0⟩` is the
//! zero reference, which drops the constant global phase `e^{iω₀t/2}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{
    error::{Error, Result},
    states::FieldState,
    C64,
};

/// Relative tolerance used to decide `ω₀ == ω`.
pub const RESONANCE_RTOL: f64 = 1e-12;

/// Model frequencies in units with ħ = 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Cavity mode frequency ω.
    pub omega: f64,
    /// Dot transition frequency ω₀.
    pub omega0: f64,
    /// Kerr strength g (signed).
    pub g: f64,
    /// Vacuum Rabi frequency Ω.
    pub coupling: f64,
}

impl ModelParams {
    /// Resonant model, `ω₀ = ω`.
    pub fn resonant(omega: f64, g: f64, coupling: f64) -> Self {
        ModelParams {
            omega,
            omega0: omega,
            g,
            coupling,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("omega", self.omega),
            ("omega0", self.omega0),
            ("g", self.g),
            ("coupling", self.coupling),
        ] {
            if !v.is_finite() {
                return Err(Error::param(name, format!("must be finite, got {v}")));
            }
        }
        if self.coupling < 0.0 {
            return Err(Error::param(
                "coupling",
                format!("must be non-negative, got {}", self.coupling),
            ));
        }
        Ok(())
    }

    pub fn is_resonant(&self) -> bool {
        (self.omega0 - self.omega).abs() <= RESONANCE_RTOL * self.omega.abs().max(1.0)
    }

    fn require_resonance(&self) -> Result<()> {
        self.validate()?;
        if self.is_resonant() {
            Ok(())
        } else {
            Err(Error::NotResonant {
                omega: self.omega,
                omega0: self.omega0,
            })
        }
    }

    /// Revival period `2π/|g|` of the Kerr phases, if `g ≠ 0`.
    pub fn kerr_period(&self) -> Option<f64> {
        (self.g != 0.0).then(|| std::f64::consts::TAU / self.g.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    #[default]
    Lab,
    /// Free phases `e^{−iωnt}` on the field and `e^{−iω₀t}` on `|e⟩` removed.
    Rotating,
}

/// Joint amplitudes at one instant: `ground[n]` multiplies `|g,n⟩` and
/// `excited[m]` multiplies `|e,m⟩`. Both vectors have the field basis size;
/// `excited[dim−1]` is always zero because its partner `|g,dim⟩` lies
/// outside the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub ground: Vec<C64>,
    pub excited: Vec<C64>,
    pub t: f64,
    pub frame: Frame,
}

impl JointState {
    /// Dot in `|g⟩`, field in `field`.
    pub fn from_field(field: &FieldState, t: f64, frame: Frame) -> Self {
        JointState {
            ground: field.amps().to_vec(),
            excited: vec![C64::new(0.0, 0.0); field.dim()],
            t,
            frame,
        }
    }

    pub fn dim(&self) -> usize {
        self.ground.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.ground
            .iter()
            .chain(&self.excited)
            .map(|a| a.norm_sqr())
            .sum()
    }

    /// Populations of the invariant manifolds: entry 0 is `|g,0⟩`, entry
    /// `n ≥ 1` is `|g,n⟩` plus `|e,n−1⟩`.
    pub fn manifold_populations(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|n| {
                let g = self.ground[n].norm_sqr();
                if n == 0 {
                    g
                } else {
                    g + self.excited[n - 1].norm_sqr()
                }
            })
            .collect()
    }

    /// Same physical state viewed in another frame.
    pub fn in_frame(&self, frame: Frame, p: &ModelParams) -> JointState {
        if frame == self.frame {
            return self.clone();
        }
        // lab → rotating multiplies by e^{+iE t}; the reverse by e^{−iE t}
        let sign = match frame {
            Frame::Rotating => 1.0,
            Frame::Lab => -1.0,
        };
        let t = self.t;
        let ground = self
            .ground
            .iter()
            .enumerate()
            .map(|(n, a)| a * C64::from_polar(1.0, sign * p.omega * n as f64 * t))
            .collect();
        let excited = self
            .excited
            .iter()
            .enumerate()
            .map(|(m, a)| a * C64::from_polar(1.0, sign * (p.omega0 + p.omega * m as f64) * t))
            .collect();
        JointState {
            ground,
            excited,
            t,
            frame,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quasienergies {
    pub gamma1: f64,
    pub gamma2: f64,
    /// `sₙ = √(Ω²n + g²(n−1)²/4)`, half the dressed splitting.
    pub s: f64,
}

/// Dressed quasienergies of the manifold `{|g,n⟩, |e,n−1⟩}`, measured from
/// its free energy.
pub fn quasienergies(n: usize, p: &ModelParams) -> Result<Quasienergies> {
    if n == 0 {
        return Err(Error::NoDressedManifold { n });
    }
    p.require_resonance()?;
    Ok(manifold_quasienergies(n, p))
}

fn manifold_quasienergies(n: usize, p: &ModelParams) -> Quasienergies {
    let m = (n - 1) as f64;
    let half_detuning = 0.5 * p.g * m;
    let s = (p.coupling * p.coupling * n as f64 + half_detuning * half_detuning).sqrt();
    let shift = -0.5 * p.g * m * m;
    Quasienergies {
        gamma1: shift + s,
        gamma2: shift - s,
        s,
    }
}

/// Interaction-picture amplitudes `(aₙ/Cₙ, bₙ₋₁/Cₙ)` of manifold `n ≥ 1`.
fn manifold_amplitudes(n: usize, p: &ModelParams, t: f64) -> (C64, C64) {
    let q = manifold_quasienergies(n, p);
    let e1 = C64::from_polar(1.0, -q.gamma1 * t);
    let e2 = C64::from_polar(1.0, -q.gamma2 * t);
    if q.s == 0.0 {
        // uncoupled and degenerate: both levels just carry the Kerr shift
        return (e1, C64::new(0.0, 0.0));
    }
    let ratio = 0.5 * p.g * (n - 1) as f64 / q.s;
    let a = 0.5 * (1.0 - ratio) * e1 + 0.5 * (1.0 + ratio) * e2;
    let b = p.coupling * (n as f64).sqrt() / (2.0 * q.s) * (e1 - e2);
    (a, b)
}

/// Joint state at time `t` for the dot starting in `|g⟩`, in the lab frame.
pub fn evolve(initial: &FieldState, p: &ModelParams, t: f64) -> Result<JointState> {
    p.require_resonance()?;
    Ok(evolve_unchecked(initial.amps(), p, t))
}

fn evolve_unchecked(c: &[C64], p: &ModelParams, t: f64) -> JointState {
    let dim = c.len();
    let zero = C64::new(0.0, 0.0);
    let mut ground = vec![zero; dim];
    let mut excited = vec![zero; dim];
    if dim > 0 {
        ground[0] = c[0];
    }
    for n in 1..dim {
        if c[n] == zero {
            continue;
        }
        let (a, b) = manifold_amplitudes(n, p, t);
        // on resonance |g,n⟩ and |e,n−1⟩ share the free phase e^{−iωnt}
        let free = C64::from_polar(1.0, -p.omega * n as f64 * t);
        ground[n] = c[n] * a * free;
        excited[n - 1] = c[n] * b * free;
    }
    JointState {
        ground,
        excited,
        t,
        frame: Frame::Lab,
    }
}

/// Evaluates [`evolve`] on a time grid, in parallel over time points.
pub fn trajectory(initial: &FieldState, p: &ModelParams, times: &[f64]) -> Result<Vec<JointState>> {
    p.require_resonance()?;
    Ok(times
        .par_iter()
        .map(|&t| evolve_unchecked(initial.amps(), p, t))
        .collect())
}

/// Field evolution under the Kerr term alone (coupling treated as zero):
/// `Cₙ → Cₙ e^{+i g n(n−1) t/2}`, times `e^{−iωnt}` in the lab frame.
pub fn kerr_propagate(initial: &FieldState, p: &ModelParams, t: f64, frame: Frame) -> FieldState {
    let amps = initial
        .amps()
        .iter()
        .enumerate()
        .map(|(n, c)| {
            let pairs = (n * n.saturating_sub(1) / 2) as f64;
            let mut phase = p.g * pairs * t;
            if frame == Frame::Lab {
                phase -= p.omega * n as f64 * t;
            }
            c * C64::from_polar(1.0, phase)
        })
        .collect();
    FieldState::from_normalized(amps, initial.tail_eps())
}

/// Probability that the dot is excited, `Σ |bₙ|²`.
pub fn excitation_probability(s: &JointState) -> f64 {
    s.excited.iter().map(|b| b.norm_sqr()).sum()
}
