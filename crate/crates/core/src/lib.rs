//! Closed-form dynamics of a two-level quantum dot coupled to a single
//! cavity mode with Kerr self-phase modulation, in the rotating-wave
//! approximation:
//!
//! ```text
//! H = ω₀ σz/2 + ω a†a − (g/2) a†² a² + Ω (a† σ₋ + a σ₊)      (ħ = 1)
//! ```
//!
//! The crate is organised bottom-up:
//!
//! * [`states`] builds truncated Fock-basis field states.
//! * [`dynamics`] evaluates the dressed-state solution pointwise in time.
//! * [`oracle`] integrates the same Hamiltonian numerically, as an
//!   independent check of [`dynamics`].
//! * [`observables`] reduces joint states to photon statistics, quadrature
//!   moments, reduced density matrices and the Schmidt parameter.
//! * [`phasespace`] produces quantum carpets and Wigner functions.

pub mod dynamics;
pub mod error;
pub mod observables;
pub mod oracle;
pub mod phasespace;
pub mod states;

pub use num_complex::Complex64 as C64;

pub use crate::{
    dynamics::{Frame, JointState, ModelParams},
    error::{Error, Result},
    observables::DensityMatrix,
    phasespace::PhaseSpaceGrid,
    states::{FieldState, StateSpec, TruncationPolicy},
};
