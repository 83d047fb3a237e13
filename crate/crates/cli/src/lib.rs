//! The `relhyp` command line: census tables, density and commutativity curves,
//! growth brackets, translation lengths and counting-bound audits for group
//! files, written as CSV.
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_FAILED`] for guard violations and other
//! computational failures, [`EXIT_USAGE`] for bad arguments or input files.

mod selftest;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use relhyp_core::census::{Census, CensusError, DEFAULT_ENUMERATION_GUARD};
use relhyp_core::statistics::{
    bound_audit, dc_curve, fit_decay, format_significant, growth_rate, parabolic_density_curve,
    peripheral_density_curve, torsion_parabolic_density_curve, translation_length, zeta_estimate, CommutingMethod,
    DcMethod, DecayFit, DensityCurve, DensityMode, FChoice, Numerator, StatsError, TauMethod,
};
use relhyp_core::{parse_group_spec, validate, ClassTag, Group};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Significant digits for decimal columns.
pub const DIGITS: u32 = 12;

#[derive(Debug, Parser)]
#[command(name = "relhyp", version, about = "Exact densities of parabolic elements and commuting pairs in free products")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sphere and ball sizes `n,sphere,ball`.
    Census(CensusArgs),
    /// Density curve of parabolic, parabolic-or-torsion, or peripheral elements.
    Density(DensityArgs),
    /// Degree-of-commutativity curve.
    Dc(DcArgs),
    /// Growth-rate bracket from the census.
    Growth(GrowthArgs),
    /// Translation length of one element.
    Tau(TauArgs),
    /// Smallest translation length among hyperbolic elements of a ball.
    Zeta(ZetaArgs),
    /// Minimal constant in the parabolic counting bound.
    #[command(name = "audit-bound")]
    AuditBound(AuditArgs),
    /// Cross-checks counts, classification and centralizers against brute force.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct CensusArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "max-n")]
    pub max_n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Sampled,
    Enumerate,
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// `parabolic`, `parabolic-torsion` or `peripheral:<label>`.
    #[arg(long)]
    pub set: String,
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "max-n")]
    pub max_n: usize,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    pub mode: Mode,
    /// Draws per sphere in sampled mode.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest ball enumerated in `enumerate` mode.
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_GUARD)]
    pub guard: u64,
    /// Decay-fit window `lo:hi`.
    #[arg(long, value_parser = parse_window)]
    pub fit: Option<(usize, usize)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the fit record; standard output when absent.
    #[arg(long = "fit-out")]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DcMethodArg {
    Brute,
    Structural,
    PerElement,
    Sampled,
}

#[derive(Debug, Args)]
pub struct DcArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "max-n")]
    pub max_n: usize,
    #[arg(long, value_enum, default_value_t = DcMethodArg::Structural)]
    pub method: DcMethodArg,
    /// Pairs drawn per radius in sampled mode.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_GUARD)]
    pub guard: u64,
    #[arg(long, value_parser = parse_window)]
    pub fit: Option<(usize, usize)>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "fit-out")]
    pub fit_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "max-n")]
    pub max_n: usize,
    /// Upper envelope `n,ball,root` as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TauMethodArg {
    Structural,
    Oracle,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    #[arg(long)]
    pub group: PathBuf,
    /// Serialized element, e.g. `A(1,0)·F(t)`.
    #[arg(long)]
    pub element: String,
    #[arg(long, value_enum, default_value_t = TauMethodArg::Structural)]
    pub method: TauMethodArg,
    #[arg(long, default_value_t = 16)]
    pub kmax: u32,
}

#[derive(Debug, Args)]
pub struct ZetaArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long)]
    pub radius: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_GUARD)]
    pub guard: u64,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[arg(long)]
    pub group: PathBuf,
    #[arg(long = "max-n")]
    pub max_n: usize,
    /// `zero`, `const:<c>` or `log2:<c>`.
    #[arg(long, value_parser = parse_f_choice, default_value = "zero")]
    pub f: FChoice,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub group: PathBuf,
    /// Radius for the brute-force comparisons.
    #[arg(long, default_value_t = 5)]
    pub radius: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Guard(String),
    #[error("{0}")]
    Failed(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            _ => EXIT_FAILED,
        }
    }
}

impl From<CensusError> for CliError {
    fn from(e: CensusError) -> Self {
        match e {
            CensusError::NotPeripheral(_) => CliError::Usage(e.to_string()),
            CensusError::EmptySphere(_) => CliError::Failed(e.to_string()),
            CensusError::RadiusLimit { .. } | CensusError::EnumerationGuard { .. } | CensusError::OutOfTable { .. } => {
                CliError::Guard(e.to_string())
            }
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::Census(c) => c.into(),
            StatsError::Algebra(_)
            | StatsError::BadWindow { .. }
            | StatsError::NotPeripheral(_)
            | StatsError::NoSamples => CliError::Usage(e.to_string()),
            StatsError::ZeroDensity(_) | StatsError::NoHyperbolic(_) => CliError::Failed(e.to_string()),
        }
    }
}

fn parse_window(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad window start `{lo}`"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad window end `{hi}`"))?;
    if hi < lo + 2 {
        return Err(format!("window {lo}:{hi} has fewer than 3 points"));
    }
    Ok((lo, hi))
}

fn parse_f_choice(s: &str) -> Result<FChoice, String> {
    if s == "zero" {
        return Ok(FChoice::Zero);
    }
    if let Some(c) = s.strip_prefix("const:") {
        return c.parse().map(FChoice::Const).map_err(|_| format!("bad constant `{c}`"));
    }
    if let Some(c) = s.strip_prefix("log2:") {
        return match c.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Ok(FChoice::CeilLog2Scaled(v)),
            _ => Err(format!("bad log2 scale `{c}`")),
        };
    }
    Err(format!("expected zero, const:<c> or log2:<c>, got `{s}`"))
}

/// Runs the command line with process stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the command line; `argv[0]` is the program name.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{}", e.render()) } else { write!(err, "{}", e.render()) };
            return code;
        }
    };
    let result = configure_threads().and_then(|_| execute(&cli.command, out, err));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("RELHYP_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("RELHYP_THREADS must be a positive integer, got `{raw}`")))?;
    // the global pool can only be set once per process
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn execute(command: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Census(a) => census_cmd(a, out, err),
        Command::Density(a) => density_cmd(a, out, err),
        Command::Dc(a) => dc_cmd(a, out, err),
        Command::Growth(a) => growth_cmd(a, out, err),
        Command::Tau(a) => tau_cmd(a, out, err),
        Command::Zeta(a) => zeta_cmd(a, out, err),
        Command::AuditBound(a) => audit_cmd(a, out, err),
        Command::Selftest(a) => selftest::run(a, out, err),
    }
}

/// Reads, parses and validates a group file; warnings go to `err`.
pub fn load_group(path: &Path, err: &mut dyn Write) -> Result<Group, CliError> {
    let text =
        fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let spec = parse_group_spec(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let report = validate(&spec);
    for w in &report.warnings {
        let _ = writeln!(err, "warning: {}: {w}", path.display());
    }
    if !report.is_accepted() {
        return Err(CliError::Usage(format!("{}: {}", path.display(), report.errors.join("; "))));
    }
    Ok(Group::new(spec))
}

fn real(x: f64) -> String {
    match BigRational::from_float(x) {
        Some(r) => format_significant(&r, DIGITS),
        None => x.to_string(),
    }
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::Io { path: PathBuf::from("<stdout>"), source: e }
}

fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

/// Sends a CSV body to `path`, or to `out` when no path is given.
fn emit(out: &mut dyn Write, path: Option<&Path>, body: &[u8], what: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_output(p, body)?;
            writeln!(out, "{what} written to {}", p.display()).map_err(stdout_err)
        }
        None => out.write_all(body).map_err(stdout_err),
    }
}

pub fn curve_csv(curve: &DensityCurve) -> Vec<u8> {
    let rows = curve.points.iter().map(|p| {
        let numerator = match &p.numerator {
            Numerator::Exact(v) => v.to_string(),
            Numerator::Estimate(r) => format_significant(r, DIGITS),
        };
        vec![p.n.to_string(), numerator, p.denominator.to_string(), format_significant(&p.delta, DIGITS)]
    });
    csv_bytes(&["n", "numerator", "denominator", "delta"], rows)
}

pub fn fit_csv(fit: &DecayFit) -> Vec<u8> {
    csv_bytes(
        &["window_lo", "window_hi", "rho", "r_squared"],
        [vec![fit.window.0.to_string(), fit.window.1.to_string(), real(fit.rho), real(fit.r_squared)]],
    )
}

fn emit_curve(
    out: &mut dyn Write,
    curve: &DensityCurve,
    path: Option<&Path>,
    fit: Option<(usize, usize)>,
    fit_path: Option<&Path>,
) -> Result<(), CliError> {
    // fit first so a bad window leaves no partial output
    let fit = fit.map(|(lo, hi)| fit_decay(curve, lo, hi)).transpose()?;
    emit(out, path, &curve_csv(curve), &format!("{} curve ({} points)", curve.set_label, curve.points.len()))?;
    if let Some(fit) = fit {
        if path.is_none() && fit_path.is_none() {
            writeln!(out).map_err(stdout_err)?;
        }
        emit(out, fit_path, &fit_csv(&fit), "fit")?;
    }
    Ok(())
}

fn census_cmd(a: &CensusArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let census = Census::build(&group, a.max_n)?;
    let rows = (0..=a.max_n).map(|n| vec![n.to_string(), census.sphere(n).to_string(), census.ball(n).to_string()]);
    let body = csv_bytes(&["n", "sphere", "ball"], rows);
    emit(out, a.out.as_deref(), &body, &format!("census of {} ({} rows)", group.spec().name, a.max_n + 1))
}

fn sampled_mode(samples: Option<usize>, seed: Option<u64>) -> Result<DensityMode, CliError> {
    let samples = samples.ok_or_else(|| CliError::Usage("sampled mode needs --samples".into()))?;
    let seed = seed.ok_or_else(|| CliError::Usage("sampled mode needs --seed".into()))?;
    Ok(DensityMode::Sampled { samples, seed })
}

fn density_cmd(a: &DensityArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let mode = match a.mode {
        Mode::Exact => DensityMode::Exact,
        Mode::Enumerate => DensityMode::Enumerated { guard: a.guard },
        Mode::Sampled => sampled_mode(a.samples, a.seed)?,
    };
    let curve = match a.set.as_str() {
        "parabolic" => parabolic_density_curve(&group, a.max_n, mode)?,
        "parabolic-torsion" => torsion_parabolic_density_curve(&group, a.max_n, mode)?,
        other => {
            let label = other.strip_prefix("peripheral:").ok_or_else(|| {
                CliError::Usage(format!(
                    "unknown set `{other}`; expected parabolic, parabolic-torsion or peripheral:<label>"
                ))
            })?;
            let omega = group
                .spec()
                .factor_by_label(label)
                .ok_or_else(|| CliError::Usage(format!("no factor labelled `{label}`")))?;
            if a.mode != Mode::Exact {
                return Err(CliError::Usage("peripheral curves are exact only".into()));
            }
            peripheral_density_curve(&group, omega, a.max_n).map_err(|e| match e {
                StatsError::NotPeripheral(_) => CliError::Usage(format!("factor `{label}` is not peripheral")),
                e => e.into(),
            })?
        }
    };
    emit_curve(out, &curve, a.out.as_deref(), a.fit, a.fit_out.as_deref())
}

fn dc_cmd(a: &DcArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let count = |method| DcMethod::Count { method, guard: a.guard };
    let method = match a.method {
        DcMethodArg::Brute => count(CommutingMethod::Brute),
        DcMethodArg::Structural => count(CommutingMethod::Structural),
        DcMethodArg::PerElement => count(CommutingMethod::PerElement),
        DcMethodArg::Sampled => match sampled_mode(a.samples, a.seed)? {
            DensityMode::Sampled { samples, seed } => DcMethod::Sampled { samples, seed },
            _ => unreachable!(),
        },
    };
    let curve = dc_curve(&group, a.max_n, method)?;
    emit_curve(out, &curve, a.out.as_deref(), a.fit, a.fit_out.as_deref())
}

fn growth_cmd(a: &GrowthArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let census = Census::build(&group, a.max_n)?;
    let est = growth_rate(&census, a.max_n)?;
    if let Some(path) = &a.out {
        let rows = est.upper_envelope.iter().map(|&(n, root)| vec![n.to_string(), census.ball(n).to_string(), real(root)]);
        write_output(path, &csv_bytes(&["n", "ball", "root"], rows))?;
    }
    let text = format!(
        "group: {}\nN: {}\nupper_bound: {}\nratio_estimate: {}\nbracket: [{}, {}]\n",
        group.spec().name,
        est.max_n,
        real(est.hi),
        real(est.ratio_estimate),
        real(est.lo),
        real(est.hi)
    );
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn class_name(tag: &ClassTag) -> &'static str {
    match tag {
        ClassTag::Identity => "identity",
        ClassTag::Parabolic(_) => "parabolic",
        ClassTag::Elliptic => "elliptic",
        ClassTag::Hyperbolic => "hyperbolic",
    }
}

fn tau_cmd(a: &TauArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let g = group.parse_element(&a.element).map_err(|e| CliError::Usage(format!("--element: {e}")))?;
    let method = match a.method {
        TauMethodArg::Structural => TauMethod::Structural,
        TauMethodArg::Oracle if a.kmax == 0 => return Err(CliError::Usage("--kmax must be at least 1".into())),
        TauMethodArg::Oracle => TauMethod::LimitOracle { k_max: a.kmax },
    };
    let result = translation_length(&group, &g, method);
    let mut text = format!(
        "element: {}\nclass: {}\ntau: {}\ntau_decimal: {}\n",
        group.serialize(&g),
        class_name(&group.classify(&g).tag),
        result.tau,
        format_significant(&result.tau, DIGITS)
    );
    match method {
        TauMethod::Structural => text.push_str("method: structural\n"),
        TauMethod::LimitOracle { k_max } => {
            text.push_str(&format!("method: oracle\nkmax: {k_max}\n"));
            if let Some(upper) = &result.fekete_upper {
                text.push_str(&format!("fekete_upper: {upper}\n"));
            }
        }
    }
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn zeta_cmd(a: &ZetaArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    let census = Census::build(&group, a.radius)?;
    let zeta = zeta_estimate(&census, a.radius, a.guard)?;
    writeln!(out, "group: {}\nradius: {}\nzeta_witness: {zeta}", group.spec().name, a.radius).map_err(stdout_err)
}

fn audit_cmd(a: &AuditArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    let group = load_group(&a.group, err)?;
    if !group.spec().has_peripherals() {
        let _ = writeln!(err, "warning: no peripheral factors; every row has lhs 0");
    }
    let rows = bound_audit(&group, a.max_n, a.f)?;
    let body = csv_bytes(
        &["n", "lhs", "rhs_unit", "minimal_D", "f_desc"],
        rows.iter()
            .map(|r| vec![r.n.to_string(), r.lhs.to_string(), r.rhs_unit.to_string(), r.minimal_d.to_string(), r.f_used.clone()]),
    );
    emit(out, a.out.as_deref(), &body, &format!("audit of {} ({} rows)", group.spec().name, rows.len()))
}
