//! Initial field states in a truncated Fock basis.
//!
//! Coherent and squeezed-vacuum amplitudes are generated by their two-term
//! recurrences in the log domain, so no factorial is ever formed and the
//! construction stays finite for any basis size below the hard cap.

use serde::{Deserialize, Serialize};

use crate::{
    error::{Error, Result},
    C64,
};

pub const DEFAULT_TAIL_EPS: f64 = 1e-12;
pub const DEFAULT_MAX_DIM: usize = 4096;

/// How a state expansion is cut off.
///
/// With `dim` unset the basis is sized by [`auto_dim`] so that the excluded
/// probability mass stays below `tail_eps`. With `dim` set the basis size is
/// forced and the achieved tail mass is only recorded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruncationPolicy {
    pub tail_eps: f64,
    pub max_dim: usize,
    pub dim: Option<usize>,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            tail_eps: DEFAULT_TAIL_EPS,
            max_dim: DEFAULT_MAX_DIM,
            dim: None,
        }
    }
}

impl TruncationPolicy {
    pub fn with_tail(tail_eps: f64) -> Self {
        TruncationPolicy {
            tail_eps,
            ..Default::default()
        }
    }

    pub fn fixed(dim: usize) -> Self {
        TruncationPolicy {
            dim: Some(dim),
            max_dim: DEFAULT_MAX_DIM.max(dim),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tail_eps > 0.0 && self.tail_eps < 1.0) {
            return Err(Error::param(
                "tail_eps",
                format!("must lie in (0, 1), got {}", self.tail_eps),
            ));
        }
        if self.max_dim == 0 {
            return Err(Error::param("max_dim", "must be at least 1"));
        }
        match self.dim {
            Some(0) => Err(Error::param("dim", "must be at least 1")),
            Some(d) if d > self.max_dim => Err(Error::TruncationUnreachable {
                required: d,
                max_dim: self.max_dim,
                tail_eps: self.tail_eps,
            }),
            _ => Ok(()),
        }
    }
}

/// A complex number as written in configuration files: either a bare real
/// number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexValue> for C64 {
    fn from(v: ComplexValue) -> C64 {
        match v {
            ComplexValue::Real(re) => C64::new(re, 0.0),
            ComplexValue::Pair([re, im]) => C64::new(re, im),
        }
    }
}

impl From<C64> for ComplexValue {
    fn from(z: C64) -> Self {
        if z.im == 0.0 {
            ComplexValue::Real(z.re)
        } else {
            ComplexValue::Pair([z.re, z.im])
        }
    }
}

/// Description of an initial field state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Fock {
        n: usize,
    },
    Coherent {
        alpha: ComplexValue,
    },
    /// Squeezed vacuum given by exactly one of the squeezing factor
    /// `R = e^r` or the squeezing parameter `r`.
    SqueezedVacuum {
        #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
        factor: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        r: Option<f64>,
    },
    Custom {
        amps: Vec<ComplexValue>,
    },
}

impl StateSpec {
    pub fn fock(n: usize) -> Self {
        StateSpec::Fock { n }
    }

    pub fn coherent(alpha: C64) -> Self {
        StateSpec::Coherent {
            alpha: alpha.into(),
        }
    }

    pub fn squeezed(factor: f64) -> Self {
        StateSpec::SqueezedVacuum {
            factor: Some(factor),
            r: None,
        }
    }

    /// Squeezing parameter `r`, for squeezed vacuum only.
    pub fn squeezing_parameter(&self) -> Result<Option<f64>> {
        match *self {
            StateSpec::SqueezedVacuum { factor, r } => match (factor, r) {
                (Some(f), None) => {
                    if f > 0.0 && f.is_finite() {
                        Ok(Some(f.ln()))
                    } else {
                        Err(Error::param(
                            "R",
                            format!("squeezing factor must be positive, got {f}"),
                        ))
                    }
                }
                (None, Some(r)) if r.is_finite() => Ok(Some(r)),
                (None, Some(r)) => Err(Error::param("r", format!("must be finite, got {r}"))),
                _ => Err(Error::param(
                    "R",
                    "give exactly one of the squeezing factor `R` or the parameter `r`",
                )),
            },
            _ => Ok(None),
        }
    }

    pub fn build(&self, trunc: &TruncationPolicy) -> Result<FieldState> {
        match self {
            StateSpec::Fock { n } => fock_state(*n, trunc),
            StateSpec::Coherent { alpha } => coherent_state((*alpha).into(), trunc),
            StateSpec::SqueezedVacuum { .. } => {
                let r = self.squeezing_parameter()?.expect("squeezed variant");
                squeezed_vacuum_state(r.exp(), trunc)
            }
            StateSpec::Custom { amps } => {
                let amps: Vec<C64> = amps.iter().map(|&a| a.into()).collect();
                FieldState::from_amplitudes(amps)
            }
        }
    }
}

/// A normalized pure field state `Σ Cₙ |n⟩` on the basis `|0⟩ .. |dim−1⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    amps: Vec<C64>,
    tail_eps: f64,
}

impl FieldState {
    /// Normalizes an arbitrary amplitude list. The truncation tail is taken
    /// to be zero since the list is the whole state.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::param("amps", "amplitude list is empty"));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::param("amps", "amplitudes must be finite"));
        }
        let mut state = FieldState {
            amps,
            tail_eps: 0.0,
        };
        if state.norm_sqr() == 0.0 {
            return Err(Error::param("amps", "amplitude list has zero norm"));
        }
        state.normalize();
        Ok(state)
    }

    /// Wraps amplitudes that are already normalized (up to rounding).
    pub(crate) fn from_normalized(amps: Vec<C64>, tail_eps: f64) -> Self {
        FieldState { amps, tail_eps }
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Probability mass excluded by the truncation, before renormalization.
    pub fn tail_eps(&self) -> f64 {
        self.tail_eps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Zero-padded copy on a larger basis; never truncates.
    pub fn padded(&self, dim: usize) -> FieldState {
        let mut amps = self.amps.clone();
        if dim > amps.len() {
            amps.resize(dim, C64::new(0.0, 0.0));
        }
        FieldState {
            amps,
            tail_eps: self.tail_eps,
        }
    }

    fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        self.amps.iter_mut().for_each(|a| *a /= norm);
    }
}

/// `|n⟩` on a basis of size `trunc.dim` (or `n + 1` when unset).
pub fn fock_state(n: usize, trunc: &TruncationPolicy) -> Result<FieldState> {
    trunc.validate()?;
    let dim = match trunc.dim {
        Some(d) => d,
        None => n + 1,
    };
    if n >= dim || n >= trunc.max_dim {
        return Err(Error::FockOutOfRange {
            n,
            dim: dim.min(trunc.max_dim),
        });
    }
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    amps[n] = C64::new(1.0, 0.0);
    Ok(FieldState::from_normalized(amps, 0.0))
}

pub fn coherent_state(alpha: C64, trunc: &TruncationPolicy) -> Result<FieldState> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(Error::param("alpha", format!("must be finite, got {alpha}")));
    }
    build_from_profile(&Profile::Coherent(alpha), trunc)
}

/// Squeezed vacuum with squeezing factor `r_factor = e^r`, coefficients
/// `(−tanh r)^k √((2k)!)/(2^k k!)/√(cosh r)` on `|2k⟩`.
pub fn squeezed_vacuum_state(r_factor: f64, trunc: &TruncationPolicy) -> Result<FieldState> {
    if !(r_factor > 0.0 && r_factor.is_finite()) {
        return Err(Error::param(
            "R",
            format!("squeezing factor must be positive, got {r_factor}"),
        ));
    }
    build_from_profile(&Profile::Squeezed(r_factor.ln()), trunc)
}

/// Smallest basis size whose excluded probability mass is below `tail_eps`.
pub fn auto_dim(spec: &StateSpec, tail_eps: f64) -> Result<usize> {
    auto_dim_capped(spec, tail_eps, DEFAULT_MAX_DIM)
}

pub fn auto_dim_capped(spec: &StateSpec, tail_eps: f64, max_dim: usize) -> Result<usize> {
    let trunc = TruncationPolicy {
        tail_eps,
        max_dim,
        dim: None,
    };
    trunc.validate()?;
    let required = match spec {
        StateSpec::Fock { n } => n + 1,
        StateSpec::Custom { amps } => amps.len(),
        StateSpec::Coherent { alpha } => Profile::Coherent((*alpha).into()).required_dim(tail_eps),
        StateSpec::SqueezedVacuum { .. } => {
            let r = spec.squeezing_parameter()?.expect("squeezed variant");
            Profile::Squeezed(r).required_dim(tail_eps)
        }
    };
    if required > max_dim {
        return Err(Error::TruncationUnreachable {
            required,
            max_dim,
            tail_eps,
        });
    }
    Ok(required)
}

// the exact (untruncated) expansions share one code path: log-magnitudes
// and phases from the recurrence, plus suffix sums for the tail mass
enum Profile {
    Coherent(C64),
    Squeezed(f64),
}

/// Terms beyond the generated ones are bounded geometrically; generation
/// stops once that bound is this far below the smallest tail of interest.
const TAIL_BOUND_MARGIN: f64 = 1e-6;
const MAX_PROFILE_TERMS: usize = 1 << 22;

struct Expansion {
    log_mag: Vec<f64>,
    phase: Vec<f64>,
    // suffix[n] = Σ_{m ≥ n} |C_m|², including the bound on ungenerated terms
    suffix: Vec<f64>,
}

impl Profile {
    fn expand(&self, min_len: usize, tail_eps: f64) -> Expansion {
        let mut log_mag = Vec::new();
        let mut phase = Vec::new();
        let bound_target = tail_eps * TAIL_BOUND_MARGIN;
        let residual;
        match *self {
            Profile::Coherent(alpha) => {
                let lambda = alpha.norm_sqr();
                let ln_abs = alpha.norm().ln();
                let arg = alpha.arg();
                let mut lm = -0.5 * lambda;
                let mut k = 0usize;
                loop {
                    log_mag.push(lm);
                    phase.push(k as f64 * arg);
                    // p_{k+1}/p_k = λ/(k+1), decreasing once k + 1 > λ
                    let q = lambda / (k + 1) as f64;
                    let p = (2.0 * lm).exp();
                    if k + 1 >= min_len && q < 1.0 {
                        let bound = p * q / (1.0 - q);
                        if bound < bound_target || k + 1 >= MAX_PROFILE_TERMS {
                            residual = bound;
                            break;
                        }
                    }
                    lm += ln_abs - 0.5 * ((k + 1) as f64).ln();
                    k += 1;
                }
            }
            Profile::Squeezed(r) => {
                let t = r.tanh();
                let ln_t = t.abs().ln();
                let step_phase = if t > 0.0 { std::f64::consts::PI } else { 0.0 };
                let mut lm = -0.5 * r.cosh().ln();
                let mut j = 0usize; // Fock index 2j
                loop {
                    log_mag.push(lm);
                    phase.push(j as f64 * step_phase);
                    log_mag.push(f64::NEG_INFINITY);
                    phase.push(0.0);
                    // p_{2j+2}/p_{2j} = tanh²r (2j+1)/(2j+2) < tanh²r
                    let q = t * t;
                    let p = (2.0 * lm).exp();
                    if 2 * j + 2 >= min_len {
                        let bound = if q < 1.0 { p * q / (1.0 - q) } else { p };
                        if bound < bound_target || 2 * j + 2 >= MAX_PROFILE_TERMS {
                            residual = bound;
                            break;
                        }
                    }
                    lm += ln_t + 0.5 * (((2 * j + 1) as f64) / ((2 * j + 2) as f64)).ln();
                    j += 1;
                }
            }
        }
        let mut suffix = vec![0.0; log_mag.len() + 1];
        suffix[log_mag.len()] = residual;
        for n in (0..log_mag.len()).rev() {
            suffix[n] = suffix[n + 1] + (2.0 * log_mag[n]).exp();
        }
        Expansion {
            log_mag,
            phase,
            suffix,
        }
    }

    fn required_dim(&self, tail_eps: f64) -> usize {
        let exp = self.expand(1, tail_eps);
        let required = exp
            .suffix
            .iter()
            .position(|&s| s < tail_eps)
            .unwrap_or(exp.suffix.len());
        required.max(1)
    }
}

fn build_from_profile(profile: &Profile, trunc: &TruncationPolicy) -> Result<FieldState> {
    trunc.validate()?;
    let dim = match trunc.dim {
        Some(d) => d,
        None => {
            let required = profile.required_dim(trunc.tail_eps);
            if required > trunc.max_dim {
                return Err(Error::TruncationUnreachable {
                    required,
                    max_dim: trunc.max_dim,
                    tail_eps: trunc.tail_eps,
                });
            }
            required
        }
    };
    let exp = profile.expand(dim, trunc.tail_eps);
    // renormalize in the log domain: the kept mass may underflow term by term
    // only where the terms themselves are negligible
    let kept: f64 = exp.suffix[0] - exp.suffix[dim];
    let kept = if kept > 0.0 {
        kept
    } else {
        exp.log_mag[..dim]
            .iter()
            .map(|lm| (2.0 * lm).exp())
            .sum::<f64>()
    };
    let log_norm = 0.5 * kept.ln();
    let amps: Vec<C64> = (0..dim)
        .map(|n| C64::from_polar((exp.log_mag[n] - log_norm).exp(), exp.phase[n]))
        .collect();
    let mut state = FieldState::from_normalized(amps, exp.suffix[dim]);
    // the analytic kept mass is accurate to rounding; tidy the last ulps
    state.normalize();
    Ok(state)
}
