//! Closed form against the brute-force oracle.

use qdkerr::{
    dynamics::evolve,
    oracle::{equivalence_report_with, EquivalenceReport, OracleOptions},
    FieldState, JointState, ModelParams, StateSpec, TruncationPolicy, C64,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{config::ScenarioConfig, run::initial_state, CliError};

pub const VERIFY_SCHEMA: &str = "qdkerr.verify/1";
pub const DEFAULT_THRESHOLD: f64 = 1e-8;
/// Config time grids are thinned to at most this many oracle samples.
pub const MAX_SAMPLES: usize = 200;

#[derive(Debug, Clone)]
pub struct VerifyCase {
    pub name: String,
    pub initial: FieldState,
    pub params: ModelParams,
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseResult {
    pub name: String,
    pub passed: bool,
    pub report: EquivalenceReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub schema: &'static str,
    pub threshold: f64,
    pub fault_injected: bool,
    pub passed: bool,
    pub cases: Vec<CaseResult>,
}

fn grid(stop: f64, n: usize) -> Vec<f64> {
    (1..=n).map(|i| stop * i as f64 / n as f64).collect()
}

fn case(name: &str, spec: StateSpec, trunc: TruncationPolicy, params: ModelParams, times: Vec<f64>) -> VerifyCase {
    VerifyCase {
        name: name.to_string(),
        initial: spec.build(&trunc).expect("suite states are buildable"),
        params,
        times,
    }
}

/// Fixed suite covering Rabi, coupled Kerr and Kerr-only dynamics.
pub fn default_suite() -> Vec<VerifyCase> {
    let auto = TruncationPolicy::default();
    let fixed = TruncationPolicy::fixed(128);
    vec![
        case(
            "fock2_g0",
            StateSpec::fock(2),
            TruncationPolicy::fixed(4),
            ModelParams::resonant(1.0, 0.0, 1.0),
            grid(50.0, 50),
        ),
        case(
            "coherent2_g0.1",
            StateSpec::coherent(C64::new(2.0, 0.0)),
            auto,
            ModelParams::resonant(1.0, 0.1, 1.0),
            grid(20.0, 40),
        ),
        case(
            "coherent4_g0.1_w100",
            StateSpec::coherent(C64::new(4.0, 0.0)),
            auto,
            ModelParams::resonant(100.0, 0.1, 1.0),
            grid(50.0, 100),
        ),
        case(
            "squeezed4_g0.01",
            StateSpec::squeezed(4.0),
            fixed,
            ModelParams::resonant(10.0, 0.01, 1.0),
            grid(50.0, 50),
        ),
        case(
            "kerr_coherent2",
            StateSpec::coherent(C64::new(2.0, 0.0)),
            auto,
            ModelParams::resonant(1.0, 0.1, 0.0),
            grid(62.8, 64),
        ),
        case(
            "kerr_squeezed4",
            StateSpec::squeezed(4.0),
            fixed,
            ModelParams::resonant(1.0, 0.12, 0.0),
            grid(52.4, 64),
        ),
    ]
}

/// One case per Kerr value of a scenario, on its time grid (thinned).
pub fn cases_from_config(cfg: &ScenarioConfig) -> Result<Vec<VerifyCase>, CliError> {
    cfg.validate()?;
    let initial = initial_state(cfg)?;
    let all: Vec<f64> = cfg.unit_times().iter().map(|&u| cfg.to_absolute(u)).collect();
    let stride = all.len().div_ceil(MAX_SAMPLES).max(1);
    let mut times: Vec<f64> = all.iter().copied().step_by(stride).collect();
    if times.last() != all.last() {
        times.push(*all.last().expect("at least two samples"));
    }
    Ok(cfg
        .kerr_values()
        .into_iter()
        .map(|g| VerifyCase {
            name: format!("{}_g{g}", cfg.name),
            initial: initial.clone(),
            params: cfg.model.params(g),
            times: times.clone(),
        })
        .collect())
}

/// Closed form evaluated at a slightly wrong time; the negative control.
fn faulty(init: &FieldState, p: &ModelParams, t: f64) -> qdkerr::Result<JointState> {
    let mut s = evolve(init, p, t * (1.0 + 1e-4))?;
    s.t = t;
    Ok(s)
}

pub fn verify(
    cases: &[VerifyCase],
    opts: &OracleOptions,
    threshold: f64,
    inject_fault: bool,
) -> Result<VerifyOutcome, CliError> {
    let results: Vec<qdkerr::Result<CaseResult>> = cases
        .par_iter()
        .map(|c| {
            let report = if inject_fault {
                equivalence_report_with(&c.initial, &c.params, &c.times, opts, faulty)?
            } else {
                equivalence_report_with(&c.initial, &c.params, &c.times, opts, evolve)?
            };
            Ok(CaseResult {
                name: c.name.clone(),
                passed: report.passes(threshold),
                report,
            })
        })
        .collect();
    let cases = results
        .into_iter()
        .collect::<qdkerr::Result<Vec<_>>>()
        .map_err(CliError::Oracle)?;
    Ok(VerifyOutcome {
        schema: VERIFY_SCHEMA,
        threshold,
        fault_injected: inject_fault,
        passed: cases.iter().all(|c| c.passed),
        cases,
    })
}
