//! The `ttmpp` command line.
//!
//! Exit codes: 0 success (or an optimal solve), 1 invalid instance, bad
//! scenario or solver failure, 2 infeasible, 3 limit reached, 64 usage or
//! input parse error, 74 file or network I/O error.

use std::ffi::OsString;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use ttmpp_core::io::{
    parse_instance_document, parse_instance_document_unchecked, read_csv_bundle, read_csv_bundle_unchecked,
    render_instance_document, to_json, write_csv_bundle, DocumentMetadata, InstanceDocument, IoError, ScenarioStore,
    StoreError,
};
use ttmpp_core::{
    apply_scenario, build_model, diff_schedules, render_report, solve_instance, synthetic, write_lp, Instance,
    ReportFormat, Scenario, SolveOptions, SolveStatus,
};

pub mod exit {
    pub const OK: i32 = 0;
    pub const FAILURE: i32 = 1;
    pub const INFEASIBLE: i32 = 2;
    pub const LIMIT_REACHED: i32 = 3;
    pub const USAGE: i32 = 64;
    pub const IO: i32 = 74;
}

#[derive(Debug, Parser)]
#[command(name = "ttmpp", version, about = "Repair a teaching schedule with as few changes as possible")]
pub struct Cli {
    /// Print solver statistics to standard error.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportKind {
    Plain,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    Json,
    Csv,
}

/// Instances are read from a JSON document, or from a CSV bundle when the
/// path is a directory.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check an instance; violations go to standard error.
    Validate { instance: PathBuf },
    /// Solve an instance, optionally after applying a scenario, and write the swap report.
    Solve {
        instance: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Skip the second phase that minimizes the number of changes.
        #[arg(long)]
        no_min_change: bool,
        /// Time limit in seconds.
        #[arg(long, value_name = "SECONDS")]
        time_limit: Option<f64>,
        #[arg(long)]
        node_limit: Option<u64>,
        #[arg(long, value_enum, default_value = "plain")]
        report: ReportKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a scenario file from `course@slot[:count]` edits.
    Perturb {
        instance: PathBuf,
        #[arg(long, value_name = "COURSE@SLOT[:COUNT]", required_unless_present = "add")]
        cancel: Vec<String>,
        #[arg(long, value_name = "COURSE@SLOT[:COUNT]")]
        add: Vec<String>,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the integer program in LP text format.
    ExportLp {
        instance: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a seeded department-sized instance.
    GenPaperInstance {
        #[arg(long)]
        seed: u64,
        /// A CSV bundle is written as a directory and needs --out.
        #[arg(long, value_enum, default_value = "json", requires_if("csv", "out"))]
        format: InstanceKind,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP API over a scenario store. No authentication.
    Serve {
        #[arg(long, env = "TTMPP_STORE")]
        store: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        /// Concurrent solves; defaults to the number of cores, at most 4.
        #[arg(long)]
        workers: Option<usize>,
    },
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let code = match e {
            IoError::Io { .. } => exit::IO,
            IoError::Invalid(_) => exit::FAILURE,
            _ => exit::USAGE,
        };
        Failure::new(code, e.to_string())
    }
}

impl From<StoreError> for Failure {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::Document(inner) => inner.into(),
            other => Failure::new(exit::IO, other.to_string()),
        }
    }
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::new(exit::IO, format!("{}: {e}", path.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| Failure::new(exit::IO, format!("standard output: {e}"))),
    }
}

fn with_path(path: &Path, e: IoError) -> Failure {
    let f: Failure = e.into();
    Failure::new(f.code, format!("{}: {}", path.display(), f.message))
}

fn load_instance(path: &Path, checked: bool) -> Result<Instance, Failure> {
    if path.is_dir() {
        let r = if checked {
            read_csv_bundle(path)
        } else {
            read_csv_bundle_unchecked(path)
        };
        return r.map_err(|e| with_path(path, e));
    }
    let text = read_text(path)?;
    let r = if checked {
        parse_instance_document(&text)
    } else {
        parse_instance_document_unchecked(&text)
    };
    r.map(|doc| doc.instance).map_err(|e| with_path(path, e))
}

/// Parses `course@slot[:count]`.
pub fn parse_edit(spec: &str) -> Result<(String, String, u32), String> {
    let (course, rest) = spec
        .split_once('@')
        .ok_or_else(|| format!("{spec:?}: expected course@slot[:count]"))?;
    let (slot, count) = match rest.rsplit_once(':') {
        Some((slot, n)) => (
            slot,
            n.parse::<u32>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| format!("{spec:?}: count must be a positive integer"))?,
        ),
        None => (rest, 1),
    };
    if course.is_empty() || slot.is_empty() {
        return Err(format!("{spec:?}: course and slot must be non-empty"));
    }
    Ok((course.to_string(), slot.to_string(), count))
}

fn validate(path: &Path, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let instance = load_instance(path, false)?;
    let report = instance.validate();
    if report.is_valid() {
        return Ok(exit::OK);
    }
    let _ = write!(stderr, "{report}");
    Ok(exit::FAILURE)
}

#[allow(clippy::too_many_arguments)]
fn solve(
    instance: &Path,
    scenario: Option<&Path>,
    no_min_change: bool,
    time_limit: Option<f64>,
    node_limit: Option<u64>,
    report: ReportKind,
    out: Option<&Path>,
    verbose: u8,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, Failure> {
    let mut inst = load_instance(instance, true)?;
    if let Some(path) = scenario {
        let scenario: Scenario = ttmpp_core::io::from_json(&read_text(path)?).map_err(|e| with_path(path, e))?;
        inst = apply_scenario(&inst, &scenario)
            .map_err(|e| Failure::new(exit::FAILURE, format!("{}: {e}", path.display())))?;
    }
    let time_limit = time_limit
        .map(|s| {
            Duration::try_from_secs_f64(s)
                .ok()
                .filter(|d| !d.is_zero())
                .ok_or_else(|| Failure::new(exit::USAGE, "--time-limit must be a positive number of seconds"))
        })
        .transpose()?;
    let options = SolveOptions {
        min_change_phase: !no_min_change,
        time_limit,
        node_limit,
        ..SolveOptions::default()
    };
    let solution = solve_instance(&inst, &options).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    if verbose > 0 {
        let s = &solution.stats;
        let _ = writeln!(
            stderr,
            "{:?}: {} nodes (+{} refining), {} LP iterations, {:.3}s",
            solution.status,
            s.nodes,
            s.refine_nodes,
            s.lp_iterations,
            s.wall_time.as_secs_f64()
        );
    }
    if solution.incumbent.is_some() {
        let format = match report {
            ReportKind::Plain => ReportFormat::PlainTable,
            ReportKind::Json => ReportFormat::Json,
        };
        let r = diff_schedules(&inst, &solution).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
        write_output(out, &render_report(&r, format), stdout)?;
    }
    Ok(match solution.status {
        SolveStatus::Optimal => exit::OK,
        SolveStatus::Infeasible => {
            let _ = writeln!(stderr, "infeasible: no schedule meets the new demand under the constraints");
            exit::INFEASIBLE
        }
        SolveStatus::LimitReached => {
            let _ = match solution.incumbent {
                Some(_) => writeln!(stderr, "limit reached: the reported schedule may not be optimal"),
                None => writeln!(stderr, "limit reached before any schedule was found"),
            };
            exit::LIMIT_REACHED
        }
        SolveStatus::NumericalFailure => {
            let _ = writeln!(stderr, "the solver failed numerically");
            exit::FAILURE
        }
    })
}

fn perturb(
    instance: &Path,
    cancel: &[String],
    add: &[String],
    name: Option<String>,
    out: Option<&Path>,
    stdout: &mut dyn Write,
) -> Result<i32, Failure> {
    let inst = load_instance(instance, true)?;
    let mut scenario = Scenario::new(name.unwrap_or_else(|| {
        let mut parts: Vec<String> = cancel.iter().map(|c| format!("cancel {c}")).collect();
        parts.extend(add.iter().map(|a| format!("add {a}")));
        parts.join(", ")
    }));
    for spec in cancel {
        let (course, slot, n) = parse_edit(spec).map_err(|e| Failure::new(exit::USAGE, e))?;
        scenario = scenario.cancel(&course, &slot, n);
    }
    for spec in add {
        let (course, slot, n) = parse_edit(spec).map_err(|e| Failure::new(exit::USAGE, e))?;
        scenario = scenario.add(&course, &slot, n);
    }
    apply_scenario(&inst, &scenario).map_err(|e| Failure::new(exit::FAILURE, e.to_string()))?;
    write_output(out, &to_json(&scenario), stdout)?;
    Ok(exit::OK)
}

fn gen_department_instance(seed: u64, format: InstanceKind, out: Option<&Path>, stdout: &mut dyn Write) -> Result<i32, Failure> {
    let instance = synthetic::department_instance(seed);
    match (format, out) {
        (InstanceKind::Csv, Some(dir)) => write_csv_bundle(&instance, dir)?,
        (InstanceKind::Csv, None) => return Err(Failure::new(exit::USAGE, "--format csv needs --out")),
        (InstanceKind::Json, out) => {
            let doc = InstanceDocument::new(
                instance,
                DocumentMetadata {
                    name: format!("department-sized instance, seed {seed}"),
                    description: format!(
                        "{} courses, {} faculty, {} slots, {} sections",
                        synthetic::COURSES,
                        synthetic::FACULTY,
                        synthetic::SLOTS,
                        synthetic::SECTIONS
                    ),
                    created: None,
                },
            );
            write_output(out, &render_instance_document(&doc), stdout)?;
        }
    }
    Ok(exit::OK)
}

fn serve(store: &Path, listen: SocketAddr, workers: Option<usize>, stderr: &mut dyn Write) -> Result<i32, Failure> {
    let store = ScenarioStore::open(store)?;
    let workers = workers.unwrap_or_else(ttmpp_service::default_workers);
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::new(exit::IO, e.to_string()))?;
    let _ = writeln!(stderr, "serving {} on http://{listen} with {workers} worker(s)", store.root().display());
    runtime
        .block_on(ttmpp_service::serve(store, listen, workers))
        .map_err(|e| Failure::new(exit::IO, format!("{listen}: {e}")))?;
    Ok(exit::OK)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Validate { instance } => validate(&instance, stderr),
        Command::Solve {
            instance,
            scenario,
            no_min_change,
            time_limit,
            node_limit,
            report,
            out,
        } => solve(
            &instance,
            scenario.as_deref(),
            no_min_change,
            time_limit,
            node_limit,
            report,
            out.as_deref(),
            cli.verbose,
            stdout,
            stderr,
        ),
        Command::Perturb {
            instance,
            cancel,
            add,
            name,
            out,
        } => perturb(&instance, &cancel, &add, name, out.as_deref(), stdout),
        Command::ExportLp { instance, out } => {
            let inst = load_instance(&instance, true)?;
            write_output(Some(&out), &write_lp(&build_model(&inst)), stdout)?;
            Ok(exit::OK)
        }
        Command::GenPaperInstance { seed, format, out } => gen_department_instance(seed, format, out.as_deref(), stdout),
        Command::Serve { store, listen, workers } => serve(&store, listen, workers, stderr),
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edit_syntax() {
        assert_eq!(parse_edit("A@s3").unwrap(), ("A".into(), "s3".into(), 1));
        assert_eq!(parse_edit("MTH201@MWF0800:2").unwrap(), ("MTH201".into(), "MWF0800".into(), 2));
        for bad in ["A", "A@", "@s1", "A@s1:0", "A@s1:x"] {
            assert!(parse_edit(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
