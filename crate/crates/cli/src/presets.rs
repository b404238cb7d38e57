//! Built-in scenarios, one per figure (`fig1a` … `fig9`). Values with no
//! obvious canonical choice are noted where they are set.

use qdkerr::{phasespace::Axis, Frame, StateSpec, TruncationPolicy, C64};
use serde::Serialize;

use crate::config::{
    Format, GridConfig, KerrValues, ModelConfig, Observable, OutputSpec, ScenarioConfig, TimeConfig,
    TimeUnit,
};

pub const PRESET_NAMES: [&str; 11] = [
    "fig1a", "fig1b", "fig2a", "fig2b", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8", "fig9",
];

#[derive(Debug, Clone, Serialize)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub variants: Vec<ScenarioConfig>,
}

fn out(observable: Observable, path: &str) -> OutputSpec {
    OutputSpec {
        observable,
        path: path.to_string(),
        format: Format::Csv,
        threshold: None,
    }
}

fn zones(path: &str, threshold: f64) -> OutputSpec {
    OutputSpec {
        threshold: Some(threshold),
        ..out(Observable::Zones, path)
    }
}

fn coherent(alpha: f64) -> StateSpec {
    StateSpec::coherent(C64::new(alpha, 0.0))
}

struct Scenario {
    name: &'static str,
    description: &'static str,
    initial: StateSpec,
    omega: f64,
    coupling: f64,
    g: Vec<f64>,
    time: TimeConfig,
    grid: GridConfig,
    outputs: Vec<OutputSpec>,
}

impl Scenario {
    fn build(self) -> ScenarioConfig {
        ScenarioConfig {
            name: self.name.to_string(),
            description: self.description.to_string(),
            model: ModelConfig {
                omega: self.omega,
                omega0: None,
                g: if self.g.len() == 1 {
                    KerrValues::One(self.g[0])
                } else {
                    KerrValues::Scan(self.g)
                },
                coupling: self.coupling,
                scale: 1.0,
            },
            initial: self.initial,
            truncation: TruncationPolicy::default(),
            time: self.time,
            grid: self.grid,
            frame: Frame::Lab,
            outputs: self.outputs,
        }
    }
}

fn time(stop: f64, steps: usize, unit: TimeUnit) -> TimeConfig {
    TimeConfig {
        start: 0.0,
        stop,
        steps,
        unit,
        reference_g: None,
        snapshots: Vec::new(),
    }
}

fn kerr_time(stop: f64, steps: usize, reference_g: f64) -> TimeConfig {
    TimeConfig {
        reference_g: Some(reference_g),
        ..time(stop, steps, TimeUnit::KerrPeriods)
    }
}

fn square(half: f64, points: usize) -> GridConfig {
    let a = Axis::new(-half, half, points);
    GridConfig { x: a, p: a }
}

/// Kerr strengths for the two variance maps, g/ω from 0 to 0.2.
fn variance_scan() -> Vec<f64> {
    (0..=40).map(|i| i as f64 * 0.005).collect()
}

/// g values for the collapse-revival presets; they span the range used elsewhere.
const FIG1_G: [f64; 4] = [0.0, 0.01, 0.05, 0.1];
const STRONG_G: [f64; 3] = [0.0, 0.01, 0.1];

pub fn preset(name: &str) -> Option<Preset> {
    let rabi = TimeUnit::RabiPeriods;
    let (description, variants): (&'static str, Vec<Scenario>) = match name {
        "fig1a" => (
            "Dot excitation, coherent α=4, ω/Ω=100, g/Ω ∈ {0, 0.01, 0.05, 0.1} (g values chosen)",
            vec![Scenario {
                name: "fig1a",
                description: "collapse and revival against Kerr strength",
                initial: coherent(4.0),
                omega: 100.0,
                coupling: 1.0,
                g: FIG1_G.to_vec(),
                time: time(6.0, 3000, rabi),
                grid: GridConfig::default(),
                outputs: vec![out(Observable::Excitation, "excitation.csv")],
            }],
        ),
        "fig1b" => (
            "Dot excitation, squeezed vacuum R=6, ω/Ω=100, g/Ω ∈ {0, 0.01, 0.05, 0.1}",
            vec![Scenario {
                name: "fig1b",
                description: "excitation for squeezed input",
                initial: StateSpec::squeezed(6.0),
                omega: 100.0,
                coupling: 1.0,
                g: FIG1_G.to_vec(),
                time: time(6.0, 3000, rabi),
                grid: GridConfig::default(),
                outputs: vec![out(Observable::Excitation, "excitation.csv")],
            }],
        ),
        "fig2a" => (
            "Var[x](g, t) map, coherent α=2, Ω=0, ω=1, g/ω ∈ [0, 0.2], t ∈ [0, 60]",
            vec![Scenario {
                name: "fig2a",
                description: "Kerr-only variance map with the analytic form alongside",
                initial: coherent(2.0),
                omega: 1.0,
                coupling: 0.0,
                g: variance_scan(),
                time: time(60.0, 1200, TimeUnit::Absolute),
                grid: GridConfig::default(),
                outputs: vec![
                    out(Observable::Variance, "variance.csv"),
                    out(Observable::AnalyticVariance, "analytic_variance.csv"),
                ],
            }],
        ),
        "fig2b" => (
            "Var[x](g, t) map, squeezed vacuum R=4, Ω=0, ω=1, g/ω ∈ [0, 0.2], t ∈ [0, 60]",
            vec![Scenario {
                name: "fig2b",
                description: "Kerr-only variance map",
                initial: StateSpec::squeezed(4.0),
                omega: 1.0,
                coupling: 0.0,
                g: variance_scan(),
                time: time(60.0, 1200, TimeUnit::Absolute),
                grid: GridConfig::default(),
                outputs: vec![out(Observable::Variance, "variance.csv")],
            }],
        ),
        "fig3" => (
            "Carpets, coherent α=2, Ω=0, g/ω ∈ {0, 0.1}, one Kerr period of g/ω=0.1",
            vec![Scenario {
                name: "fig3",
                description: "coherent carpets with local squeezing zones",
                initial: coherent(2.0),
                omega: 1.0,
                coupling: 0.0,
                g: vec![0.0, 0.1],
                time: kerr_time(1.0, 512, 0.1),
                grid: GridConfig::default(),
                outputs: vec![
                    out(Observable::Carpet, "carpet.csv"),
                    zones("zones.csv", 0.5),
                    out(Observable::Variance, "variance.csv"),
                ],
            }],
        ),
        "fig4" => (
            "Carpets, squeezed vacuum R=4, Ω=0, g/ω ∈ {0, 0.125}, one Kerr period of g/ω=0.125",
            vec![Scenario {
                name: "fig4",
                description: "squeezed carpets; x range widened for the anti-squeezed orientation",
                initial: StateSpec::squeezed(4.0),
                omega: 1.0,
                coupling: 0.0,
                g: vec![0.0, 0.125],
                time: kerr_time(1.0, 512, 0.125),
                grid: GridConfig {
                    x: Axis::new(-16.0, 16.0, 801),
                    p: Axis::default(),
                },
                outputs: vec![
                    out(Observable::Carpet, "carpet.csv"),
                    zones("zones.csv", 1.0),
                    out(Observable::Variance, "variance.csv"),
                ],
            }],
        ),
        "fig5" => (
            "Wigner snapshots, squeezed vacuum R=4, Ω=0, g/ω=0.12, t/T ∈ {0, 1/64, 3/32, 1/8}",
            vec![Scenario {
                name: "fig5",
                description: "Wigner functions along the Kerr evolution (use --frame rotating to drop the free rotation)",
                initial: StateSpec::squeezed(4.0),
                omega: 1.0,
                coupling: 0.0,
                g: vec![0.12],
                time: TimeConfig {
                    snapshots: vec![0.0, 1.0 / 64.0, 3.0 / 32.0, 0.125],
                    ..kerr_time(0.125, 64, 0.12)
                },
                grid: square(12.0, 241),
                outputs: vec![
                    out(Observable::Wigner, "wigner.csv"),
                    out(Observable::Variance, "variance.csv"),
                ],
            }],
        ),
        "fig6" => (
            "Schmidt parameter, coherent α=4, ω/Ω=100, g/Ω ∈ {0, 0.01, 0.1}",
            vec![Scenario {
                name: "fig6",
                description: "dot-field entanglement",
                initial: coherent(4.0),
                omega: 100.0,
                coupling: 1.0,
                g: STRONG_G.to_vec(),
                time: time(4.0, 2000, rabi),
                grid: GridConfig::default(),
                outputs: vec![
                    out(Observable::Schmidt, "schmidt.csv"),
                    out(Observable::FieldPurity, "field_purity.csv"),
                ],
            }],
        ),
        "fig7" => (
            "Carpets in strong coupling: α=2 g=0 (a), α=4 g=0 (b), α=4 g/Ω=0.1 (c); ω/Ω=10 (chosen)",
            [("fig7a", 2.0, 0.0), ("fig7b", 4.0, 0.0), ("fig7c", 4.0, 0.1)]
                .into_iter()
                .map(|(name, alpha, g)| Scenario {
                    name,
                    description: "field carpet traced over the dot",
                    initial: coherent(alpha),
                    omega: 10.0,
                    coupling: 1.0,
                    g: vec![g],
                    time: time(4.0, 2048, rabi),
                    grid: GridConfig::default(),
                    outputs: vec![out(Observable::Carpet, "carpet.csv"), zones("zones.csv", 0.5)],
                })
                .collect(),
        ),
        "fig8" => (
            "Field Wigner at Ωt*/2π=2, coherent α=4, ω/Ω=100, g/Ω ∈ {0, 0.1}",
            vec![Scenario {
                name: "fig8",
                description: "pure (g=0) and mixed (g/Ω=0.1) field states at t*",
                initial: coherent(4.0),
                omega: 100.0,
                coupling: 1.0,
                g: vec![0.0, 0.1],
                time: TimeConfig {
                    snapshots: vec![2.0],
                    ..time(2.0, 400, rabi)
                },
                grid: square(8.0, 161),
                outputs: vec![
                    out(Observable::Wigner, "wigner.csv"),
                    out(Observable::PhotonDistribution, "photon_distribution.csv"),
                    out(Observable::Schmidt, "schmidt.csv"),
                ],
            }],
        ),
        "fig9" => (
            "Var[x]/(1/2), coherent α=4, ω/Ω=100, g/Ω ∈ {0, 0.01, 0.1}",
            vec![Scenario {
                name: "fig9",
                description: "quadrature squeezing in strong coupling",
                initial: coherent(4.0),
                omega: 100.0,
                coupling: 1.0,
                g: STRONG_G.to_vec(),
                // 20 samples per fast period π/ω
                time: time(4.0, 16000, rabi),
                grid: GridConfig::default(),
                outputs: vec![out(Observable::NormalizedVariance, "normalized_variance.csv")],
            }],
        ),
        _ => return None,
    };
    Some(Preset {
        name: PRESET_NAMES.iter().find(|n| **n == name).expect("matched above"),
        description,
        variants: variants.into_iter().map(Scenario::build).collect(),
    })
}

pub fn all_presets() -> Vec<Preset> {
    PRESET_NAMES
        .iter()
        .map(|n| preset(n).expect("every listed preset exists"))
        .collect()
}

fn initial_label(s: &StateSpec) -> String {
    match s {
        StateSpec::Fock { n } => format!("fock n={n}"),
        StateSpec::Coherent { alpha } => {
            let a = C64::from(*alpha);
            if a.im == 0.0 {
                format!("coherent α={}", a.re)
            } else {
                format!("coherent α={a}")
            }
        }
        StateSpec::SqueezedVacuum { factor: Some(f), .. } => format!("squeezed R={f}"),
        StateSpec::SqueezedVacuum { r: Some(r), .. } => format!("squeezed r={r}"),
        StateSpec::SqueezedVacuum { .. } => "squeezed".to_string(),
        StateSpec::Custom { .. } => "custom".to_string(),
    }
}

/// One row per variant: name, initial state, ω, Ω, g values, time window.
pub fn table() -> String {
    let mut rows = vec![[
        "preset".to_string(),
        "variant".to_string(),
        "initial".to_string(),
        "omega".to_string(),
        "coupling".to_string(),
        "g".to_string(),
        "time".to_string(),
        "outputs".to_string(),
    ]];
    for p in all_presets() {
        for v in &p.variants {
            let gs: Vec<String> = v.kerr_values().iter().map(|g| g.to_string()).collect();
            let g = if gs.len() > 6 {
                format!("{}..{} ({} values)", gs[0], gs[gs.len() - 1], gs.len())
            } else {
                gs.join(",")
            };
            let outs: Vec<&str> = v.outputs.iter().map(|o| o.observable.name()).collect();
            rows.push([
                p.name.to_string(),
                v.name.clone(),
                initial_label(&v.initial),
                v.model.omega.to_string(),
                v.model.coupling.to_string(),
                g,
                format!("[{}, {}] {}", v.time.start, v.time.stop, v.time.unit.label()),
                outs.join(","),
            ]);
        }
    }
    let widths: Vec<usize> = (0..8)
        .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
        .collect();
    let mut s = String::new();
    for r in rows {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell}{}", " ".repeat(w - cell.chars().count())))
            .collect();
        s.push_str(cells.join("  ").trim_end());
        s.push('\n');
    }
    s
}
