//! Executes a scenario: evolve, derive observables, write files and a
//! summary with conservation checks.

use std::{
    fmt::Write as _,
    fs,
    path::{Path, PathBuf},
};

use qdkerr::{
    dynamics::{excitation_probability, trajectory},
    observables::{
        kerr_variance_analytic, mean_photon_number, photon_distribution, quadrature_moments,
        reduced_density, schmidt_parameter, Subsystem, SHOT_NOISE,
    },
    phasespace::{carpet, squeezing_zones, wigner, ZoneReport},
    FieldState, Frame, JointState, ModelParams, StateSpec,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::{
    config::{ConfigError, Format, Observable, OutputSpec, ScenarioConfig, DEFAULT_ZONE_THRESHOLD},
    CliError,
};

pub const SUMMARY_SCHEMA: &str = "qdkerr.summary/1";
pub const SERIES_SCHEMA: &str = "qdkerr.series/1";
pub const NORM_TOL: f64 = 1e-10;
pub const MANIFOLD_TOL: f64 = 1e-10;
pub const EXCITATION_TOL: f64 = 1e-9;

/// Which configured outputs to produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Selection {
    #[default]
    All,
    /// Carpet and zone outputs; a default carpet is added if none is configured.
    Carpet,
    /// Wigner outputs; a default one is added if none is configured.
    Wigner,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub format: Option<Format>,
    pub frame: Option<Frame>,
    pub selection: Selection,
}

/// Conservation residuals of one trajectory.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Conservation {
    pub g: f64,
    pub max_norm_drift: f64,
    pub max_manifold_residual: f64,
    pub max_excitation_residual: f64,
}

impl Conservation {
    pub fn passes(&self) -> bool {
        self.max_norm_drift < NORM_TOL
            && self.max_manifold_residual < MANIFOLD_TOL
            && self.max_excitation_residual < EXCITATION_TOL
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub schema: &'static str,
    pub scenario: String,
    pub config_sha256: String,
    pub dim: usize,
    pub tail_eps: f64,
    pub frame: Frame,
    pub time_unit: &'static str,
    pub samples: usize,
    pub tolerances: Tolerances,
    pub conservation: Vec<Conservation>,
    pub passed: bool,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tolerances {
    pub norm: f64,
    pub manifold: f64,
    pub excitation_number: f64,
}

/// Resolves overrides into the config actually run (and hashed).
pub fn resolve(cfg: &ScenarioConfig, opts: &RunOptions) -> ScenarioConfig {
    let mut cfg = cfg.clone();
    if let Some(frame) = opts.frame {
        cfg.frame = frame;
    }
    if let Some(format) = opts.format {
        for o in &mut cfg.outputs {
            o.format = format;
            o.path = Path::new(&o.path)
                .with_extension(format.extension())
                .to_string_lossy()
                .into_owned();
        }
    }
    let keep = |o: &OutputSpec| match opts.selection {
        Selection::All => true,
        Selection::Carpet => matches!(o.observable, Observable::Carpet | Observable::Zones),
        Selection::Wigner => o.observable == Observable::Wigner,
    };
    cfg.outputs.retain(keep);
    let ext = opts.format.unwrap_or_default().extension();
    match opts.selection {
        Selection::Carpet if cfg.outputs.is_empty() => cfg.outputs.push(OutputSpec {
            observable: Observable::Carpet,
            path: format!("carpet.{ext}"),
            format: opts.format.unwrap_or_default(),
            threshold: None,
        }),
        Selection::Wigner if cfg.outputs.is_empty() => cfg.outputs.push(OutputSpec {
            observable: Observable::Wigner,
            path: format!("wigner.{ext}"),
            format: opts.format.unwrap_or_default(),
            threshold: None,
        }),
        _ => {}
    }
    cfg
}

/// Builds the initial state, mapping failures to the config field at fault.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<FieldState, ConfigError> {
    cfg.initial.build(&cfg.truncation).map_err(|e| {
        let path = match e {
            qdkerr::Error::TruncationUnreachable { .. } => "truncation",
            _ => "initial",
        };
        ConfigError::new(path, e.to_string())
    })
}

pub fn conservation(initial: &FieldState, g: f64, traj: &[JointState]) -> Conservation {
    let n0 = mean_photon_number(initial);
    let pops = initial.populations();
    let mut c = Conservation {
        g,
        max_norm_drift: 0.0,
        max_manifold_residual: 0.0,
        max_excitation_residual: 0.0,
    };
    for s in traj {
        c.max_norm_drift = c.max_norm_drift.max((s.norm_sqr() - 1.0).abs());
        let m = s
            .manifold_populations()
            .iter()
            .zip(&pops)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        c.max_manifold_residual = c.max_manifold_residual.max(m);
        let e = (mean_photon_number(s) + excitation_probability(s) - n0).abs();
        c.max_excitation_residual = c.max_excitation_residual.max(e);
    }
    c
}

/// `name.ext` → `name_g0.1_t0.125.ext`, with each tag added only when the
/// scenario has more than one value for it.
fn tagged_path(path: &str, g: Option<f64>, t: Option<f64>) -> String {
    let (stem, ext) = match path.rfind('.') {
        Some(i) if i > 0 && !path[i..].contains('/') => (&path[..i], &path[i..]),
        _ => (path, ""),
    };
    let mut out = stem.to_string();
    if let Some(g) = g {
        let _ = write!(out, "_g{g}");
    }
    if let Some(t) = t {
        let _ = write!(out, "_t{t}");
    }
    out.push_str(ext);
    out
}

fn series_value(obs: Observable, s: &JointState, initial: &StateSpec, p: &ModelParams) -> f64 {
    match obs {
        Observable::Excitation => excitation_probability(s),
        Observable::PhotonNumber => mean_photon_number(s),
        Observable::MeanX => quadrature_moments(s).0,
        Observable::Variance => quadrature_moments(s).1,
        Observable::NormalizedVariance => quadrature_moments(s).1 / SHOT_NOISE,
        Observable::Schmidt => schmidt_parameter(&reduced_density(s, Subsystem::Dot)),
        Observable::FieldPurity => reduced_density(s, Subsystem::Field).purity(),
        Observable::AnalyticVariance => {
            let alpha = match initial {
                StateSpec::Coherent { alpha } => qdkerr::C64::from(*alpha),
                _ => unreachable!("validated"),
            };
            kerr_variance_analytic(alpha, p, s.t)
        }
        _ => unreachable!("not a series"),
    }
}

struct Context<'a> {
    cfg: &'a ScenarioConfig,
    hash: String,
    out_dir: &'a Path,
    written: Vec<String>,
}

impl Context<'_> {
    fn header(&self, observable: &str) -> Vec<String> {
        vec![
            format!("qdkerr {}", env!("CARGO_PKG_VERSION")),
            format!("config_sha256 {}", self.hash),
            format!("scenario {}", self.cfg.name),
            format!("observable {observable}"),
            format!("frame {}", frame_name(self.cfg.frame)),
            format!("time_unit {}", self.cfg.time.unit.label()),
        ]
    }

    fn meta(&self, observable: &str) -> serde_json::Value {
        serde_json::json!({
            "config_sha256": self.hash,
            "scenario": self.cfg.name,
            "observable": observable,
            "frame": self.cfg.frame,
            "time_unit": self.cfg.time.unit.label(),
        })
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<(), CliError> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(rel.to_string());
        Ok(())
    }
}

fn frame_name(f: Frame) -> &'static str {
    match f {
        Frame::Lab => "lab",
        Frame::Rotating => "rotating",
    }
}

fn comment_lines(header: &[String]) -> String {
    header.iter().map(|l| format!("# {l}\n")).collect()
}

/// Runs a scenario and writes its outputs plus `summary.json` into `out_dir`.
pub fn run(cfg: &ScenarioConfig, opts: &RunOptions, out_dir: &Path) -> Result<Summary, CliError> {
    let cfg = resolve(cfg, opts);
    cfg.validate()?;
    let initial = initial_state(&cfg)?;
    let unit_times = cfg.unit_times();
    let times: Vec<f64> = unit_times.iter().map(|&u| cfg.to_absolute(u)).collect();
    let snapshot_units = cfg.time.snapshots.clone();
    let snapshot_times: Vec<f64> = snapshot_units.iter().map(|&u| cfg.to_absolute(u)).collect();
    let gs = cfg.kerr_values();
    let multi_g = gs.len() > 1;
    let multi_t = snapshot_times.len() > 1;

    let mut ctx = Context {
        cfg: &cfg,
        hash: cfg.hash(),
        out_dir,
        written: Vec::new(),
    };
    let mut warnings = Vec::new();
    let mut conservations = Vec::new();
    let mut series: Vec<(Observable, Vec<Vec<f64>>)> = cfg
        .outputs
        .iter()
        .filter(|o| o.observable.is_series())
        .map(|o| (o.observable, Vec::new()))
        .collect();

    for &g in &gs {
        let p = cfg.model.params(g);
        let lab = trajectory(&initial, &p, &times).map_err(|e| ConfigError::new("model", e.to_string()))?;
        conservations.push(conservation(&initial, g, &lab));
        let view: Vec<JointState> = match cfg.frame {
            Frame::Lab => lab,
            Frame::Rotating => lab.par_iter().map(|s| s.in_frame(Frame::Rotating, &p)).collect(),
        };
        for (obs, columns) in &mut series {
            let column = view
                .par_iter()
                .map(|s| series_value(*obs, s, &cfg.initial, &p))
                .collect();
            columns.push(column);
        }

        let needs_carpet = cfg
            .outputs
            .iter()
            .any(|o| matches!(o.observable, Observable::Carpet | Observable::Zones));
        if needs_carpet {
            let mut grid = carpet(&view, &cfg.grid.x);
            grid.rows = unit_times.clone();
            for w in grid.warnings.drain(..) {
                warnings.push(format!("g = {g}: {w}"));
            }
            for out in cfg.outputs.iter() {
                let rel = tagged_path(&out.path, multi_g.then_some(g), None);
                match out.observable {
                    Observable::Carpet => {
                        let text = match out.format {
                            Format::Csv => grid.to_csv(&ctx.header("carpet")),
                            Format::Json => grid.to_json(&ctx.meta("carpet")),
                        };
                        ctx.write(&rel, &text)?;
                    }
                    Observable::Zones => {
                        let report = squeezing_zones(&grid, out.threshold.unwrap_or(DEFAULT_ZONE_THRESHOLD));
                        let text = zones_text(&ctx, &report, out);
                        ctx.write(&rel, &text)?;
                    }
                    _ => {}
                }
            }
        }

        let snapshot_outputs: Vec<&OutputSpec> =
            cfg.outputs.iter().filter(|o| o.observable.needs_snapshots()).collect();
        if !snapshot_outputs.is_empty() {
            let snaps = trajectory(&initial, &p, &snapshot_times).map_err(|e| ConfigError::new("model", e.to_string()))?;
            for ((s, &tu), _) in snaps.iter().zip(&snapshot_units).zip(&snapshot_times) {
                let s = s.in_frame(cfg.frame, &p);
                let rho = reduced_density(&s, Subsystem::Field);
                for out in &snapshot_outputs {
                    let rel = tagged_path(&out.path, multi_g.then_some(g), multi_t.then_some(tu));
                    let text = match out.observable {
                        Observable::Wigner => {
                            let w = wigner(&rho, &cfg.grid.x, &cfg.grid.p);
                            match out.format {
                                Format::Csv => {
                                    let mut h = ctx.header("wigner");
                                    h.push(format!("g {g}"));
                                    h.push(format!("t {tu}"));
                                    w.to_csv(&h)
                                }
                                Format::Json => {
                                    let mut meta = ctx.meta("wigner");
                                    meta["g"] = g.into();
                                    meta["t"] = tu.into();
                                    w.to_json(&meta)
                                }
                            }
                        }
                        Observable::PhotonDistribution => {
                            distribution_text(&ctx, &photon_distribution(&s), g, tu, out.format)
                        }
                        _ => unreachable!(),
                    };
                    ctx.write(&rel, &text)?;
                }
            }
        }
    }

    for out in cfg.outputs.iter().filter(|o| o.observable.is_series()) {
        let columns = &series
            .iter()
            .find(|(o, _)| *o == out.observable)
            .expect("collected above")
            .1;
        let text = series_text(&ctx, out, &unit_times, &gs, columns);
        ctx.write(&out.path, &text)?;
    }

    let passed = conservations.iter().all(Conservation::passes);
    let summary = Summary {
        schema: SUMMARY_SCHEMA,
        scenario: cfg.name.clone(),
        config_sha256: ctx.hash.clone(),
        dim: initial.dim(),
        tail_eps: initial.tail_eps(),
        frame: cfg.frame,
        time_unit: cfg.time.unit.label(),
        samples: times.len(),
        tolerances: Tolerances {
            norm: NORM_TOL,
            manifold: MANIFOLD_TOL,
            excitation_number: EXCITATION_TOL,
        },
        conservation: conservations,
        passed,
        outputs: ctx.written.clone(),
        warnings,
    };
    let text = serde_json::to_string_pretty(&summary).expect("summary is plain data");
    ctx.write("summary.json", &(text + "\n"))?;
    Ok(summary)
}

fn series_text(ctx: &Context, out: &OutputSpec, t: &[f64], gs: &[f64], columns: &[Vec<f64>]) -> String {
    let name = out.observable.name();
    match out.format {
        Format::Csv => {
            let mut s = comment_lines(&ctx.header(name));
            s.push('t');
            for g in gs {
                let _ = write!(s, ",{name}[g={g}]");
            }
            s.push('\n');
            for (i, ti) in t.iter().enumerate() {
                let _ = write!(s, "{ti}");
                for c in columns {
                    let _ = write!(s, ",{}", c[i]);
                }
                s.push('\n');
            }
            s
        }
        Format::Json => {
            let series: Vec<_> = gs
                .iter()
                .zip(columns)
                .map(|(g, v)| serde_json::json!({"g": g, "values": v}))
                .collect();
            let doc = serde_json::json!({
                "schema": SERIES_SCHEMA,
                "meta": ctx.meta(name),
                "t": t,
                "series": series,
            });
            serde_json::to_string(&doc).expect("plain data")
        }
    }
}

fn zones_text(ctx: &Context, report: &ZoneReport, out: &OutputSpec) -> String {
    let threshold = out.threshold.unwrap_or(DEFAULT_ZONE_THRESHOLD);
    match out.format {
        Format::Csv => {
            let mut h = ctx.header("zones");
            h.push(format!("threshold {threshold}"));
            h.push(format!("initial_width {}", report.initial_width));
            let mut s = comment_lines(&h);
            s.push_str("t,sigma_x,zone,x_left,x_right,width\n");
            let mut zones = report.zones.iter().peekable();
            for &(t, sigma) in &report.sigma_x {
                match zones.peek() {
                    Some(z) if z.t == t => {
                        let _ = writeln!(s, "{t},{sigma},1,{},{},{}", z.x_left, z.x_right, z.width);
                        zones.next();
                    }
                    _ => {
                        let _ = writeln!(s, "{t},{sigma},0,,,");
                    }
                }
            }
            s
        }
        Format::Json => {
            let doc = serde_json::json!({
                "schema": "qdkerr.zones/1",
                "meta": ctx.meta("zones"),
                "threshold": threshold,
                "report": report,
            });
            serde_json::to_string(&doc).expect("plain data")
        }
    }
}

fn distribution_text(ctx: &Context, dist: &[f64], g: f64, t: f64, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut h = ctx.header("photon_distribution");
            h.push(format!("g {g}"));
            h.push(format!("t {t}"));
            let mut s = comment_lines(&h);
            s.push_str("n,probability\n");
            for (n, p) in dist.iter().enumerate() {
                let _ = writeln!(s, "{n},{p}");
            }
            s
        }
        Format::Json => {
            let mut meta = ctx.meta("photon_distribution");
            meta["g"] = g.into();
            meta["t"] = t.into();
            serde_json::to_string(&serde_json::json!({
                "schema": "qdkerr.distribution/1",
                "meta": meta,
                "probabilities": dist,
            }))
            .expect("plain data")
        }
    }
}

/// Output directory for one variant of a multi-variant preset.
pub fn variant_dir(out: &Path, name: &str, variants: usize) -> PathBuf {
    if variants > 1 {
        out.join(name)
    } else {
        out.to_path_buf()
    }
}
