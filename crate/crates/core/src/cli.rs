//! Command-line front end. Exit codes: 0 success, 1 input error,
//! 2 hypothesis or convergence failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::horizon::{classify_curve, gordon_flow_crosscheck};
use crate::report::{
    cmd_check, cmd_ergosphere, cmd_horizon, cmd_plot, cmd_trace, parse_ray_csv, ray_csv, ray_record, to_json_17,
    Launch, PlotInput, RunReport,
};
use crate::rays::Branch;
use crate::scenario::{build_model, load_scenario, preset, Scenario, PRESETS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_HYPOTHESIS: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Root1,
    Root2,
    Zero,
}

impl From<BranchArg> for Branch {
    fn from(b: BranchArg) -> Self {
        match b {
            BranchArg::Root1 => Branch::Root1,
            BranchArg::Root2 => Branch::Root2,
            BranchArg::Zero => Branch::ZeroXi0,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "analog-horizon", version, about = "Analog black and white hole finder for moving media")]
pub struct Cli {
    /// Scenario JSON file.
    #[arg(long, global = true, conflicts_with = "preset")]
    pub scenario: Option<PathBuf>,
    /// Built-in scenario name.
    #[arg(long, global = true, value_parser = clap::builder::PossibleValuesParser::new(PRESETS))]
    pub preset: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Relative integration tolerance override.
    #[arg(long = "tol-rel", global = true)]
    pub tol_rel: Option<f64>,
    /// Absolute integration tolerance override.
    #[arg(long = "tol-abs", global = true)]
    pub tol_abs: Option<f64>,
    /// Ray parameter limit override.
    #[arg(long = "s-max", global = true)]
    pub s_max: Option<f64>,
    /// Include wall-clock timings in reports (breaks byte-identical output).
    #[arg(long, global = true)]
    pub timings: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Signature audit and ergosphere location.
    Check,
    /// Classify the ergosphere when it is characteristic.
    Ergosphere,
    /// Full horizon search and classification.
    Horizon,
    /// Trace one null ray; CSV by default.
    Trace {
        /// Launch point, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "xi")]
        at: Option<Vec<f64>>,
        /// Spatial covector, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "at")]
        xi: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value = "root1")]
        branch: BranchArg,
        /// Launch along the ergosphere kernel direction at this polar angle.
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["at", "xi"])]
        kernel: Option<f64>,
    },
    /// Classify a closed characteristic curve given as CSV `x1,x2`.
    Classify {
        #[arg(long)]
        curve: PathBuf,
    },
    /// Render an SVG from a report, ray CSVs, or a fresh horizon run.
    Plot {
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        rays: Vec<PathBuf>,
    },
}

/// Process exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::HypothesisViolation { .. }
        | Error::NoConvergence { .. }
        | Error::EscapedRegion(_)
        | Error::NotCharacteristic { .. }
        | Error::NonSimpleOrbit { .. }
        | Error::CharacteristicS1 { .. }
        | Error::StepFailure { .. }
        | Error::NoErgoregion
        | Error::NotAxisymmetric { .. }
        | Error::RankCollapse { .. } => EXIT_HYPOTHESIS,
        _ => EXIT_INPUT,
    }
}

fn load(cli: &Cli) -> Result<Scenario> {
    let mut s = match (&cli.scenario, &cli.preset) {
        (Some(p), _) => load_scenario(p)?,
        (None, Some(name)) => preset(name).ok_or_else(|| Error::InvalidInput(format!("unknown preset {name}")))?,
        (None, None) => return Err(Error::InvalidInput("give --scenario <file> or --preset <name>".into())),
    };
    if let Some(v) = cli.tol_rel {
        s.numerics.rel_tol = v;
    }
    if let Some(v) = cli.tol_abs {
        s.numerics.abs_tol = v;
    }
    if let Some(v) = cli.s_max {
        s.numerics.s_max = v;
    }
    s.validate()?;
    Ok(s)
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
                _ => {}
            }
        }
    }
    Ok(())
}

fn report_text(cli: &Cli, report: &RunReport) -> Result<String> {
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => Ok(to_json_17(report)? + "\n"),
        Format::Csv => {
            let mut out = String::from("index,method,classification,mean_radius,field,flow_check\n");
            for (i, h) in report.holes.iter().enumerate() {
                let field = h.field_used.map(|f| format!("{f:?}").to_lowercase()).unwrap_or_default();
                let flow = h.flow_check.map(|f| format!("{f:?}")).unwrap_or_default();
                let _ =
                    writeln!(out, "{i},{:?},{:?},{:.16e},{field},{flow}", h.method, h.classification, h.mean_radius);
            }
            Ok(out)
        }
    }
}

fn read_curve(path: &Path) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse { line: 1, column: 0, message: format!("{other:?}") },
    })?;
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, column: 0, message: e.to_string() })?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x1", "x2"] {
        return Err(Error::Parse { line: 1, column: 0, message: "curve header must be x1,x2".into() });
    }
    let mut pts = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, column: 0, message: e.to_string() })?;
        let num = |c: usize| {
            rec.get(c)
                .and_then(|v| v.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, column: c + 1, message: "expected a finite number".into() })
        };
        pts.push([num(0)?, num(1)?]);
    }
    Ok(pts)
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Check => {
            let s = load(cli)?;
            let model = build_model(&s)?;
            emit(cli, &report_text(cli, &cmd_check(&s, &model))?)?;
            Ok(EXIT_OK)
        }
        Command::Ergosphere => {
            let s = load(cli)?;
            let model = build_model(&s)?;
            emit(cli, &report_text(cli, &cmd_ergosphere(&s, &model))?)?;
            Ok(EXIT_OK)
        }
        Command::Horizon => {
            let s = load(cli)?;
            let model = build_model(&s)?;
            let report = cmd_horizon(&s, &model, cli.timings)?;
            emit(cli, &report_text(cli, &report)?)?;
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            Ok(if report.missing_expected_horizon() { EXIT_HYPOTHESIS } else { EXIT_OK })
        }
        Command::Trace { at, xi, branch, kernel } => {
            let s = load(cli)?;
            let model = build_model(&s)?;
            let launch = match (kernel, at, xi) {
                (Some(angle), _, _) => Launch::Kernel { angle: *angle },
                (None, Some(x), Some(xi)) => Launch::Covector { x: x.clone(), xi: xi.clone(), branch: (*branch).into() },
                _ => return Err(Error::InvalidInput("trace needs --at and --xi, or --kernel".into())),
            };
            let (ray, branch) = cmd_trace(&s, &model, &launch)?;
            let text = match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => ray_csv(model.metric.as_ref(), &ray),
                Format::Json => to_json_17(&ray_record(&ray, branch))? + "\n",
            };
            emit(cli, &text)?;
            Ok(EXIT_OK)
        }
        Command::Classify { curve } => {
            let s = load(cli)?;
            let model = build_model(&s)?;
            let pts = read_curve(curve)?;
            let mut hole = classify_curve(model.metric.as_ref(), &pts)?;
            if let Some(f) = model.flow.as_ref().filter(|f| f.dim() == 2) {
                hole.flow_check = Some(gordon_flow_crosscheck(f, &pts));
            }
            emit(cli, &(to_json_17(&hole)? + "\n"))?;
            Ok(EXIT_OK)
        }
        Command::Plot { report, rays } => {
            let mut input = match report {
                Some(p) => PlotInput::from_report_json(&std::fs::read_to_string(p)?)?,
                None if cli.scenario.is_some() || cli.preset.is_some() => {
                    let s = load(cli)?;
                    let model = build_model(&s)?;
                    PlotInput::from_report(&cmd_horizon(&s, &model, false)?)
                }
                None => PlotInput::default(),
            };
            for p in rays {
                input.rays.push(parse_ray_csv(&std::fs::read_to_string(p)?)?);
            }
            if report.is_none() && rays.is_empty() && cli.scenario.is_none() && cli.preset.is_none() {
                return Err(Error::InvalidInput("plot needs --report, --rays, or a scenario".into()));
            }
            emit(cli, &cmd_plot(&input))?;
            Ok(EXIT_OK)
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("ANALOG_HORIZON_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses arguments, runs the command, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    configure_threads();
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
