//! The `borgspec` command line.
//!
//! Every command computes first and writes all of its files at the end.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use borgspec_core::borg::{effective_case, forward_threshold, verify_all, CertStatus, VerifyOptions};
use borgspec_core::connectivity::{auto_grid, decide_on_set, Decision, GridChoice, Verdict, DEFAULT_GRID_NODES, MAX_REFINEMENTS};
use borgspec_core::fdm::discretize;
use borgspec_core::field::{field_from_set, GridSpec, SymbolSchurSet};
use borgspec_core::operator::PeriodicJacobiOperator;
use borgspec_core::spectral::{sample_spectrum, DEFAULT_BAND_THETAS, DEFAULT_FIELD_THETAS};
use borgspec_core::Complex64;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::formats::{self, FormatError, LevelSummary};
use crate::parallel::Parallel;
use crate::plot::{self, Bounds};
use crate::presets;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_INDETERMINATE: i32 = 4;

/// Level used for the spectrum itself by `illustrate`.
pub const SPECTRUM_EPSILON: f64 = 1e-6;
/// Contour levels of `pseudo` when none are given.
pub const DEFAULT_LEVELS: [f64; 3] = [0.01, 0.1, 1.0];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Parse { path: PathBuf, source: FormatError },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("numerical failure: {0}")]
    Numerical(borgspec_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl From<borgspec_core::Error> for CliError {
    fn from(e: borgspec_core::Error) -> Self {
        if e.is_usage() {
            CliError::Usage(e.to_string())
        } else {
            CliError::Numerical(e)
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    Spectrum,
    Pseudo,
    Connectivity,
    Verify,
    Discretize,
    Illustrate,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Spectrum => "spectrum",
            CommandKind::Pseudo => "pseudo",
            CommandKind::Connectivity => "connectivity",
            CommandKind::Verify => "verify",
            CommandKind::Discretize => "discretize",
            CommandKind::Illustrate => "illustrate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EpsilonArg {
    /// The case-determined forward threshold.
    Auto,
    Values(Vec<f64>),
}

impl EpsilonArg {
    pub fn parse(s: &str) -> Result<Self, String> {
        if s.trim() == "auto" {
            return Ok(EpsilonArg::Auto);
        }
        let values = s
            .split(',')
            .map(|t| match t.trim().parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                _ => Err(format!("invalid epsilon `{t}`: expected a positive number or `auto`")),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EpsilonArg::Values(values))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatKind {
    Table,
    Report,
    Plot,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Formats {
    pub table: bool,
    pub report: bool,
    pub plot: bool,
}

impl Formats {
    pub const ALL: Formats = Formats { table: true, report: true, plot: true };

    fn from_kinds(kinds: &[FormatKind]) -> Self {
        Formats {
            table: kinds.contains(&FormatKind::Table),
            report: kinds.contains(&FormatKind::Report),
            plot: kinds.contains(&FormatKind::Plot),
        }
    }
}

/// Everything one invocation needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: CommandKind,
    pub input: Option<PathBuf>,
    pub preset: Option<String>,
    pub output_dir: PathBuf,
    /// `re_min, re_max, im_min, im_max`; automatic when absent.
    pub bounds: Option<[f64; 4]>,
    pub nx: usize,
    pub ny: usize,
    pub theta_count: usize,
    pub epsilon: Option<EpsilonArg>,
    pub formats: Formats,
    pub strict: bool,
    pub timestamps: bool,
}

impl RunConfig {
    pub fn new(command: CommandKind, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            input: None,
            preset: None,
            output_dir: output_dir.into(),
            bounds: None,
            nx: DEFAULT_GRID_NODES,
            ny: DEFAULT_GRID_NODES,
            theta_count: DEFAULT_FIELD_THETAS,
            epsilon: None,
            formats: Formats::ALL,
            strict: false,
            timestamps: true,
        }
    }

    /// Parses a full argument list (program name first).
    pub fn from_args<I, T>(args: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        Ok(Cli::try_parse_from(args)?.into_config())
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.nx < 2 || self.ny < 2 {
            return Err(usage(format!("--nx and --ny must be at least 2, got {} and {}", self.nx, self.ny)));
        }
        if let Some(b) = self.bounds {
            if !(b.iter().all(|v| v.is_finite()) && b[0] < b[1] && b[2] < b[3]) {
                return Err(usage("--grid needs finite re_min < re_max and im_min < im_max"));
            }
        }
        match (&self.epsilon, self.command) {
            (Some(EpsilonArg::Auto), CommandKind::Connectivity | CommandKind::Verify) => {}
            (Some(EpsilonArg::Auto), c) => {
                return Err(usage(format!("--epsilon auto is only valid for connectivity and verify, not `{}`", c.name())))
            }
            (Some(EpsilonArg::Values(v)), CommandKind::Connectivity | CommandKind::Verify) if v.len() != 1 => {
                return Err(usage(format!("`{}` takes a single --epsilon", self.command.name())))
            }
            (Some(_), c @ (CommandKind::Spectrum | CommandKind::Discretize | CommandKind::Illustrate)) => {
                return Err(usage(format!("--epsilon is not used by `{}`", c.name())))
            }
            _ => {}
        }
        if self.input.is_some() && self.preset.is_some() {
            return Err(usage("pass either --input or --preset, not both"));
        }
        Ok(())
    }
}

#[derive(Parser)]
#[command(name = "borgspec", version, about = "Spectra, pseudospectra and Borg-type checks for periodic Jacobi operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample the spectrum: eigenvalues of the symbol on the angle grid.
    Spectrum(Opts),
    /// Compute the field psi(z) on a grid and contour it.
    Pseudo(Opts),
    /// Decide whether an eps-pseudospectrum is connected.
    Connectivity(Opts),
    /// Evaluate every stability inequality for the operator.
    Verify(Opts),
    /// Turn an ODE spec into an operator spec.
    Discretize(Opts),
    /// Spectrum and threshold pseudospectrum of a preset, with figures.
    Illustrate(Opts),
}

#[derive(Args)]
struct Opts {
    /// Operator spec (ODE spec for `discretize`).
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    output_dir: PathBuf,
    /// Fixed grid bounds instead of the padded spectrum box.
    #[arg(long, value_name = "RE_MIN,RE_MAX,IM_MIN,IM_MAX", value_parser = parse_bounds, allow_hyphen_values = true)]
    grid: Option<[f64; 4]>,
    #[arg(long, default_value_t = DEFAULT_GRID_NODES)]
    nx: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_NODES)]
    ny: usize,
    #[arg(long, default_value_t = DEFAULT_FIELD_THETAS)]
    theta_count: usize,
    /// A value, a comma list (contour levels of `pseudo`) or `auto`.
    #[arg(long, value_parser = EpsilonArg::parse, allow_hyphen_values = true)]
    epsilon: Option<EpsilonArg>,
    #[arg(long, value_delimiter = ',', default_value = "table,report,plot")]
    formats: Vec<FormatKind>,
    /// Exit with status 4 on an indeterminate verdict.
    #[arg(long)]
    strict: bool,
    /// Leave generation time out of plots.
    #[arg(long)]
    no_timestamps: bool,
    #[arg(long, value_parser = presets::NAMES)]
    preset: Option<String>,
}

fn parse_bounds(s: &str) -> Result<[f64; 4], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("invalid number `{t}`")))
        .collect::<Result<_, _>>()?;
    <[f64; 4]>::try_from(v).map_err(|v| format!("expected 4 comma-separated numbers, got {}", v.len()))
}

impl Cli {
    fn into_config(self) -> RunConfig {
        let (command, o) = match self.command {
            Command::Spectrum(o) => (CommandKind::Spectrum, o),
            Command::Pseudo(o) => (CommandKind::Pseudo, o),
            Command::Connectivity(o) => (CommandKind::Connectivity, o),
            Command::Verify(o) => (CommandKind::Verify, o),
            Command::Discretize(o) => (CommandKind::Discretize, o),
            Command::Illustrate(o) => (CommandKind::Illustrate, o),
        };
        RunConfig {
            command,
            input: o.input,
            preset: o.preset,
            output_dir: o.output_dir,
            bounds: o.grid,
            nx: o.nx,
            ny: o.ny,
            theta_count: o.theta_count,
            epsilon: o.epsilon,
            formats: Formats::from_kinds(&o.formats),
            strict: o.strict,
            timestamps: !o.no_timestamps,
        }
    }
}

/// Result of a successful run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub written: Vec<PathBuf>,
    /// Result lines for standard output.
    pub messages: Vec<String>,
    /// Warnings for standard error.
    pub notices: Vec<String>,
}

#[derive(Default)]
struct Artifacts {
    files: Vec<(&'static str, String)>,
    messages: Vec<String>,
    notices: Vec<String>,
    indeterminate: bool,
}

impl Artifacts {
    fn file(&mut self, name: &'static str, body: String) {
        self.files.push((name, body));
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_operator(cfg: &RunConfig) -> Result<(PeriodicJacobiOperator, String), CliError> {
    match (&cfg.input, &cfg.preset) {
        (Some(path), None) => {
            let op = formats::parse_operator(&read(path)?).map_err(|source| CliError::Parse { path: path.clone(), source })?;
            Ok((op, path.display().to_string()))
        }
        (None, Some(name)) => presets::lookup(name)
            .map(|op| (op, name.clone()))
            .ok_or_else(|| usage(format!("unknown preset `{name}`"))),
        (None, None) if cfg.command == CommandKind::Illustrate => {
            Ok((presets::paper_illustration(), presets::PAPER_ILLUSTRATION.to_string()))
        }
        _ => Err(usage(format!("`{}` needs --input or --preset", cfg.command.name()))),
    }
}

fn timestamp(cfg: &RunConfig) -> Option<String> {
    cfg.timestamps.then(|| {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("unix-time {secs}")
    })
}

fn fixed_grid(cfg: &RunConfig) -> Result<Option<GridSpec>, CliError> {
    cfg.bounds
        .map(|[a, b, c, d]| GridSpec::new(a, b, c, d, cfg.nx, cfg.ny))
        .transpose()
        .map_err(CliError::from)
}

fn grid_choice(cfg: &RunConfig) -> Result<GridChoice, CliError> {
    Ok(match fixed_grid(cfg)? {
        Some(g) => GridChoice::Fixed(g),
        None => GridChoice::Auto { nx: cfg.nx, ny: cfg.ny },
    })
}

fn single_epsilon(cfg: &RunConfig) -> Option<f64> {
    match &cfg.epsilon {
        Some(EpsilonArg::Values(v)) => v.first().copied(),
        _ => None,
    }
}

fn threshold(op: &PeriodicJacobiOperator, theta_count: usize) -> Result<f64, CliError> {
    let eps = forward_threshold(op, effective_case(op), theta_count)?;
    if eps > 0.0 {
        Ok(eps)
    } else {
        Err(usage("the forward threshold is zero for this operator (constant coefficients); pass a positive --epsilon"))
    }
}

fn eigenvalues(set: &SymbolSchurSet) -> Vec<Complex64> {
    set.eigenvalues().map(|(_, z)| z).collect()
}

fn region_message(tag: &str, d: &Decision) -> String {
    let r = &d.report;
    format!(
        "{tag}: eps={} verdict={} components={} boundary_margin={} certified_margin={} refinement_level={}",
        r.epsilon,
        r.verdict.name(),
        r.component_count,
        r.boundary_margin,
        r.certified_margin,
        r.refinement_level
    )
}

fn spectrum(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (op, _) = load_operator(cfg)?;
    let sample = sample_spectrum(&op, cfg.theta_count)?;
    if cfg.formats.table {
        out.file("spectrum.tsv", formats::write_spectrum(&sample, op.period()));
    }
    if cfg.formats.report {
        out.file("spectrum.toml", formats::write_spectrum_report(&op, effective_case(&op).name(), &sample));
    }
    if cfg.formats.plot {
        let pts: Vec<Complex64> = sample.eigenvalues().collect();
        let bounds = match cfg.bounds {
            Some([a, b, c, d]) => Bounds { re_min: a, re_max: b, im_min: c, im_max: d },
            None => Bounds::of_points(pts.iter().copied()),
        };
        let title = format!("spectrum, {} angles", cfg.theta_count);
        out.file("spectrum.svg", plot::spectrum_svg(&pts, bounds, &title, timestamp(cfg).as_deref()));
    }
    out.messages.push(format!("spectrum: {} eigenvalues", sample.points.len()));
    Ok(())
}

fn pseudo(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (op, _) = load_operator(cfg)?;
    let levels = match &cfg.epsilon {
        Some(EpsilonArg::Values(v)) => v.clone(),
        _ => DEFAULT_LEVELS.to_vec(),
    };
    let set = SymbolSchurSet::new(&op, cfg.theta_count)?;
    let top = levels.iter().copied().fold(0.0, f64::max);
    let grid = match fixed_grid(cfg)? {
        Some(g) => g,
        None => auto_grid(&set, top, cfg.nx, cfg.ny, 1.0)?,
    };
    let field = field_from_set(&set, &grid, &Parallel::default());
    let summaries: Vec<LevelSummary> = levels
        .iter()
        .map(|&eps| {
            let cs = plot::contours(&field, eps);
            LevelSummary {
                epsilon: eps,
                curves: cs.len(),
                closed_curves: cs.iter().filter(|c| c.closed).count(),
            }
        })
        .collect();
    if cfg.formats.table {
        out.file("field.tsv", formats::write_field(&field));
    }
    if cfg.formats.report {
        out.file("pseudo.toml", formats::write_pseudo_report(&field, &summaries));
    }
    if cfg.formats.plot {
        let title = format!("pseudospectra, {} angles", cfg.theta_count);
        out.file(
            "pseudospectrum.svg",
            plot::pseudospectrum_svg(&field, &levels, &eigenvalues(&set), &title, timestamp(cfg).as_deref()),
        );
    }
    for s in &summaries {
        out.messages.push(format!("level {}: {} curves, {} closed", s.epsilon, s.curves, s.closed_curves));
    }
    Ok(())
}

fn connectivity(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (op, _) = load_operator(cfg)?;
    let eps = match &cfg.epsilon {
        Some(EpsilonArg::Auto) => threshold(&op, cfg.theta_count)?,
        Some(EpsilonArg::Values(_)) => single_epsilon(cfg).expect("validated"),
        None => return Err(usage("`connectivity` needs --epsilon <value|auto>")),
    };
    let set = SymbolSchurSet::new(&op, cfg.theta_count)?;
    let d = decide_on_set(&set, eps, grid_choice(cfg)?, MAX_REFINEMENTS, &Parallel::default())?;
    if cfg.formats.report {
        out.file("connectivity.toml", formats::write_report(&d.report));
    }
    if cfg.formats.table {
        out.file("labels.tsv", formats::write_labels(&d.report));
        out.file("field.tsv", formats::write_field(&d.field));
    }
    if cfg.formats.plot {
        let title = format!("eps = {eps:e}: {}", d.report.verdict.name());
        out.file(
            "connectivity.svg",
            plot::pseudospectrum_svg(&d.field, &[eps], &eigenvalues(&set), &title, timestamp(cfg).as_deref()),
        );
    }
    out.indeterminate = d.report.verdict == Verdict::Indeterminate;
    out.messages.push(region_message("connectivity", &d));
    Ok(())
}

fn verify(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (op, _) = load_operator(cfg)?;
    let opts = VerifyOptions {
        theta_count: cfg.theta_count,
        band_theta_count: DEFAULT_BAND_THETAS,
        grid: grid_choice(cfg)?,
        epsilon: single_epsilon(cfg),
    };
    let certs = verify_all(&op, &opts, &Parallel::default())?;
    if cfg.formats.report {
        out.file("certificates.toml", formats::write_certificates(&op, &opts, effective_case(&op).name(), &certs));
    }
    for c in &certs {
        out.messages.push(format!("{} {} lhs={} rhs={}", c.statement.id(), c.status.name(), c.lhs, c.rhs));
        for n in &c.notes {
            out.messages.push(format!("  note: {n}"));
        }
    }
    out.indeterminate = certs.iter().any(|c| c.status == CertStatus::Indeterminate);
    Ok(())
}

fn discretize_cmd(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    if cfg.preset.is_some() {
        return Err(usage("`discretize` reads an ODE spec from --input; presets are operators"));
    }
    let path = cfg.input.as_ref().ok_or_else(|| usage("`discretize` needs --input <ode spec>"))?;
    let problem = formats::parse_ode(&read(path)?).map_err(|source| CliError::Parse { path: path.clone(), source })?;
    let d = discretize(&problem)?;
    out.file("operator.toml", formats::write_operator(&d.operator));
    out.notices.extend(d.notices);
    out.messages.push(format!("discretize: {} order, p = {}", problem.order.name(), problem.p));
    Ok(())
}

fn illustrate(cfg: &RunConfig, out: &mut Artifacts) -> Result<(), CliError> {
    let (op, name) = load_operator(cfg)?;
    let sample = sample_spectrum(&op, cfg.theta_count)?;
    let set = SymbolSchurSet::new(&op, cfg.theta_count)?;
    let eps_star = threshold(&op, cfg.theta_count)?;
    let grid = grid_choice(cfg)?;
    let spec = decide_on_set(&set, SPECTRUM_EPSILON, grid, MAX_REFINEMENTS, &Parallel::default())?;
    let pseu = decide_on_set(&set, eps_star, grid, MAX_REFINEMENTS, &Parallel::default())?;
    let pts: Vec<Complex64> = sample.eigenvalues().collect();
    if cfg.formats.table {
        out.file("spectrum.tsv", formats::write_spectrum(&sample, op.period()));
        out.file("field.tsv", formats::write_field(&pseu.field));
        out.file("labels-spectrum.tsv", formats::write_labels(&spec.report));
        out.file("labels-pseudospectrum.tsv", formats::write_labels(&pseu.report));
    }
    if cfg.formats.report {
        out.file(
            "summary.toml",
            formats::write_illustration_summary(&name, cfg.theta_count, eps_star, &spec.report, &pseu.report),
        );
    }
    if cfg.formats.plot {
        let ts = timestamp(cfg);
        let title = format!("spectrum: {} components", spec.report.component_count);
        out.file("spectrum.svg", plot::spectrum_svg(&pts, Bounds::of_points(pts.iter().copied()), &title, ts.as_deref()));
        let title = format!("eps* = {eps_star:.4}: {}", pseu.report.verdict.name());
        out.file(
            "pseudospectrum.svg",
            plot::pseudospectrum_svg(&pseu.field, &[eps_star], &pts, &title, ts.as_deref()),
        );
    }
    out.messages.push(region_message("spectrum", &spec));
    out.messages.push(region_message("pseudospectrum", &pseu));
    out.indeterminate = spec.report.verdict == Verdict::Indeterminate || pseu.report.verdict == Verdict::Indeterminate;
    Ok(())
}

/// Runs one command and writes its files into `cfg.output_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome, CliError> {
    cfg.validate()?;
    let mut art = Artifacts::default();
    match cfg.command {
        CommandKind::Spectrum => spectrum(cfg, &mut art)?,
        CommandKind::Pseudo => pseudo(cfg, &mut art)?,
        CommandKind::Connectivity => connectivity(cfg, &mut art)?,
        CommandKind::Verify => verify(cfg, &mut art)?,
        CommandKind::Discretize => discretize_cmd(cfg, &mut art)?,
        CommandKind::Illustrate => illustrate(cfg, &mut art)?,
    }
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.clone(), source })?;
    let mut written = Vec::with_capacity(art.files.len());
    for (name, body) in art.files {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|source| CliError::Io { path: path.clone(), source })?;
        written.push(path);
    }
    let exit_code = if cfg.strict && art.indeterminate { EXIT_INDETERMINATE } else { EXIT_OK };
    if exit_code == EXIT_INDETERMINATE {
        art.notices.push("indeterminate verdict with --strict".to_string());
    }
    Ok(RunOutcome {
        exit_code,
        written,
        messages: art.messages,
        notices: art.notices,
    })
}

/// Parses, runs and reports; returns the process exit status.
pub fn main_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match RunConfig::from_args(args) {
        Ok(cfg) => cfg,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            for n in &outcome.notices {
                eprintln!("notice: {n}");
            }
            for m in &outcome.messages {
                println!("{m}");
            }
            for p in &outcome.written {
                println!("wrote {}", p.display());
            }
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
