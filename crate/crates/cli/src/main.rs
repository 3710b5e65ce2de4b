use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cpk_core::config::{load_materials, load_scenario, load_species, MaterialCatalog};
use cpk_core::potential::EvaluationPath;
use cpk_core::sweep::{compare_asymptotics, run_sweep, threads_from_env, Axis, Spacing, SweepSpec};
use cpk_core::{casimir_energy_dilute, Asymptote, Preparation, Tolerances};

/// Thermal Casimir-Polder potentials near plane surfaces.
#[derive(Parser)]
#[command(name = "cpk", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a scenario over a temperature or distance grid.
    Sweep(SweepArgs),
    /// Tabulate the exact potential against the closed-form asymptotes.
    Compare(CompareArgs),
    /// Casimir energy per unit area of a dilute medium.
    Casimir(CasimirArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Temperature,
    Distance,
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, value_enum)]
    axis: AxisArg,
    #[arg(long)]
    min: f64,
    #[arg(long)]
    max: f64,
    #[arg(long)]
    points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    spacing: SpacingArg,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Comma-separated asymptote tokens, e.g. eq9,eq10,eq17.
    #[arg(long, value_delimiter = ',')]
    asymptotes: Vec<Asymptote>,
    #[arg(long)]
    per_transition: bool,
    /// Perfect-reflector closed forms only.
    #[arg(long, conflicts_with = "numerical")]
    closed: bool,
    /// Reflection-coefficient quadrature even for a perfect reflector.
    #[arg(long)]
    numerical: bool,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    tmin: f64,
    #[arg(long)]
    tmax: f64,
    #[arg(long)]
    points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    spacing: SpacingArg,
    /// Relative deviation flagged inside a formula's regime.
    #[arg(long)]
    tolerance: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CasimirArgs {
    /// Species file.
    #[arg(long)]
    species: PathBuf,
    /// Species within the file; required when it holds more than one.
    #[arg(long)]
    name: Option<String>,
    /// Number density in m⁻³.
    #[arg(long)]
    eta: f64,
    /// Distance of the medium's face in m.
    #[arg(long)]
    z: f64,
    /// Temperature in K.
    #[arg(long = "T")]
    temperature: f64,
    /// Surface name from the bundled set or from --materials.
    #[arg(long, default_value = "perfect")]
    surface: String,
    #[arg(long)]
    materials: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<cpk_core::Error> for Failure {
    fn from(e: cpk_core::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn spacing(s: SpacingArg) -> Spacing {
    match s {
        SpacingArg::Linear => Spacing::Linear,
        SpacingArg::Log => Spacing::Log,
    }
}

fn sweep(args: SweepArgs) -> Result<(), Failure> {
    let template = load_scenario(&args.scenario)?;
    let axis = match args.axis {
        AxisArg::Temperature => Axis::Temperature,
        AxisArg::Distance => Axis::Distance,
    };
    let mut spec = SweepSpec::new(axis, args.min, args.max, args.points, spacing(args.spacing));
    spec.asymptotes = args.asymptotes;
    spec.per_transition = args.per_transition;
    spec.path = if args.closed {
        EvaluationPath::Closed
    } else if args.numerical {
        EvaluationPath::Numerical
    } else {
        EvaluationPath::Auto
    };
    let table = run_sweep(&template, &spec, threads_from_env()?)?;

    let mut out = open_out(args.out.as_deref())?;
    match args.format {
        Format::Csv => table.write_csv(&mut out)?,
        Format::Json => writeln!(out, "{}", table.to_json())?,
    }
    out.flush()?;

    match table.failed_rows() {
        0 => Ok(()),
        n => Err(Failure::Numeric(format!(
            "{n} of {} grid points failed; see the error column",
            table.rows.len()
        ))),
    }
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let scenario = load_scenario(&args.scenario)?;
    let grid = SweepSpec::new(
        Axis::Temperature,
        args.tmin,
        args.tmax,
        args.points,
        spacing(args.spacing),
    )
    .grid()?;
    let report = compare_asymptotics(&scenario, &grid, args.tolerance, threads_from_env()?)?;

    let mut out = open_out(args.out.as_deref())?;
    writeln!(out, "{}", report.to_json())?;
    out.flush()?;

    let s = &report.summary;
    if s.violations > 0 {
        eprintln!(
            "{} in-regime deviations exceed the tolerance {}",
            s.violations, args.tolerance
        );
    }
    match s.failed_rows {
        0 => Ok(()),
        n => Err(Failure::Numeric(format!(
            "{n} of {} temperatures failed; see the error fields",
            report.rows.len()
        ))),
    }
}

fn casimir(args: CasimirArgs) -> Result<(), Failure> {
    let catalog = load_species(&args.species)?;
    let mut species = match &args.name {
        Some(name) => catalog.get(name).cloned().ok_or_else(|| {
            Failure::Usage(format!(
                "no species '{name}' in {}; available: {}",
                args.species.display(),
                catalog.names().join(", ")
            ))
        })?,
        None if catalog.len() == 1 => catalog.iter().next().cloned().unwrap(),
        None => {
            return Err(Failure::Usage(format!(
                "{} holds {} species; choose one with --name ({})",
                args.species.display(),
                catalog.len(),
                catalog.names().join(", ")
            )))
        }
    };
    if species.preparation != Preparation::ThermalEnsemble {
        eprintln!(
            "note: '{}' evaluated as a thermal ensemble at {} K",
            species.name, args.temperature
        );
        species.preparation = Preparation::ThermalEnsemble;
    }
    let materials = match &args.materials {
        Some(p) => load_materials(p)?,
        None => MaterialCatalog::bundled(),
    };
    let surface = materials.get(&args.surface).ok_or_else(|| {
        Failure::Usage(format!(
            "unknown surface '{}'; available: {}",
            args.surface,
            materials.names().join(", ")
        ))
    })?;

    let energy = casimir_energy_dilute(
        &species,
        &surface,
        args.z,
        args.temperature,
        args.eta,
        &Tolerances::default(),
    )
    .map_err(|e| match e {
        cpk_core::Error::InvalidInput(_) | cpk_core::Error::Contract(_) => {
            Failure::Usage(e.to_string())
        }
        e => Failure::Numeric(e.to_string()),
    })?;
    for w in &energy.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = open_out(args.out.as_deref())?;
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&energy).expect("energies serialize")
    )?;
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Compare(a) => compare(a),
        Command::Casimir(a) => casimir(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
