use std::{
    path::{Path, PathBuf},
    process::ExitCode,
};

use clap::{Args, Parser, Subcommand, ValueEnum};
use qdkerr::{oracle::OracleOptions, Frame};
use qdkerr_cli::{
    config::Format,
    load_scenarios, presets,
    run::{run, variant_dir, RunOptions, Selection},
    verify::{cases_from_config, default_suite, verify, DEFAULT_THRESHOLD},
    CliError, EXIT_CONFIG, EXIT_OK,
};

#[derive(Parser)]
#[command(name = "qdkerr", version, about = "Quantum dot in a Kerr cavity: closed-form simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write every configured output.
    Simulate(ScenarioArgs),
    /// Write quantum carpets (and zone reports) only.
    Carpet(ScenarioArgs),
    /// Write Wigner functions at the snapshot times only.
    Wigner(ScenarioArgs),
    /// Compare the closed form with direct integration.
    Verify(VerifyArgs),
    /// List the figure presets.
    Presets(PresetArgs),
}

#[derive(Args)]
struct Source {
    /// Scenario file (.toml or .json).
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in figure preset.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
}

#[derive(Args)]
struct ScenarioArgs {
    #[command(flatten)]
    source: Source,
    /// Override the format of every output.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Override the frame the states are viewed in.
    #[arg(long, value_enum)]
    frame: Option<FrameArg>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    source: Source,
    /// Integrator accuracy.
    #[arg(long, default_value_t = qdkerr::oracle::DEFAULT_TOL)]
    tol: f64,
    /// Largest allowed amplitude deviation.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    threshold: f64,
    /// Largest basis the oracle accepts.
    #[arg(long, default_value_t = qdkerr::oracle::DEFAULT_ORACLE_CAP)]
    oracle_cap: usize,
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct PresetArgs {
    /// Print the scenario config of one preset as TOML.
    #[arg(long, value_name = "NAME")]
    show: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum FrameArg {
    Lab,
    Rotating,
}

fn set_threads(n: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = n {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn simulate(args: ScenarioArgs, selection: Selection) -> Result<(), CliError> {
    set_threads(args.source.threads)?;
    let scenarios = load_scenarios(args.source.config.as_deref(), args.source.preset.as_deref())?;
    let opts = RunOptions {
        format: args.format.map(|f| match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }),
        frame: args.frame.map(|f| match f {
            FrameArg::Lab => Frame::Lab,
            FrameArg::Rotating => Frame::Rotating,
        }),
        selection,
    };
    let mut failed = Vec::new();
    for cfg in &scenarios {
        let dir = variant_dir(&args.source.out, &cfg.name, scenarios.len());
        let summary = run(cfg, &opts, &dir)?;
        for w in &summary.warnings {
            eprintln!("warning: {}: {w}", cfg.name);
        }
        println!(
            "{}: dim {} samples {} conservation {} -> {}",
            summary.scenario,
            summary.dim,
            summary.samples,
            if summary.passed { "ok" } else { "FAILED" },
            dir.display()
        );
        if !summary.passed {
            failed.push(summary.scenario);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::VerificationFailed(format!(
            "conservation residuals above tolerance in {}",
            failed.join(", ")
        )))
    }
}

fn run_verify(args: VerifyArgs) -> Result<(), CliError> {
    set_threads(args.source.threads)?;
    let cases = if args.source.config.is_none() && args.source.preset.is_none() {
        default_suite()
    } else {
        let mut cases = Vec::new();
        for cfg in load_scenarios(args.source.config.as_deref(), args.source.preset.as_deref())? {
            cases.extend(cases_from_config(&cfg)?);
        }
        cases
    };
    let opts = OracleOptions {
        tol: args.tol,
        dim_cap: args.oracle_cap,
    };
    let outcome = verify(&cases, &opts, args.threshold, args.inject_fault)?;
    for c in &outcome.cases {
        println!(
            "{} {} max_deviation {:.3e} norm_drift {:.3e} dim {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.report.max_amplitude_deviation,
            c.report.max_norm_drift,
            c.report.dim
        );
    }
    write_json(&args.source.out, "verify.json", &outcome)?;
    if outcome.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = outcome
            .cases
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        Err(CliError::VerificationFailed(format!(
            "deviation above {:e} in {}",
            args.threshold,
            failed.join(", ")
        )))
    }
}

fn write_json<T: serde::Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("plain data") + "\n";
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

fn list_presets(args: PresetArgs) -> Result<(), CliError> {
    match args.show {
        None => print!("{}", presets::table()),
        Some(name) => {
            let p = presets::preset(&name).ok_or(CliError::UnknownPreset(name))?;
            println!("# {}", p.description);
            for v in &p.variants {
                println!();
                print!("{}", v.to_toml());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { EXIT_OK as u8 });
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => simulate(a, Selection::All),
        Command::Carpet(a) => simulate(a, Selection::Carpet),
        Command::Wigner(a) => simulate(a, Selection::Wigner),
        Command::Verify(a) => run_verify(a),
        Command::Presets(a) => list_presets(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
