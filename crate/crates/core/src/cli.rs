//! Command-line front end: `gen`, `run`, `compare`, `repl`, `db-inspect`.
//!
//! Every command writes its effective configuration to stderr and only data
//! to stdout. Exit codes: 0 success, 1 usage error, 2 input data error.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::evalkit::{
    self, compare_engines, final_cum_accuracy, tail_accuracy, trace_vocabulary, MetricsRow,
    ScenarioKind, ScenarioSpec, TraceRecord,
};
use crate::lookupdb::{ExtensionDirection, LookupDb, SnapshotHeader};
use crate::model::Vocabulary;
use crate::predictor::{Engine, EngineMode, PredictorConfig, UpdateScope};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "stepcast",
    version,
    about = "Next-step prediction for software process enactment"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a scenario trace.
    Gen(GenArgs),
    /// Replay a trace through one engine and emit per-step metrics as CSV.
    Run(RunArgs),
    /// Replay a trace through the context and baseline engines.
    Compare(CompareArgs),
    /// Enter steps interactively and get next-step suggestions.
    Repl(ReplArgs),
    /// List the rules of a saved database.
    DbInspect(DbInspectArgs),
}

#[derive(Debug, Clone, Args)]
pub struct EngineArgs {
    /// Decay factor of the probability update, in (0, 1).
    #[arg(long, default_value_t = 0.8)]
    pub alpha: f64,
    /// Relevance threshold for context weights, in [0, 1).
    #[arg(long, default_value_t = 0.5)]
    pub theta: f64,
    /// Observation window length (maximum rule condition length).
    #[arg(long, default_value_t = 10)]
    pub window: usize,
    /// Which applicable rules record contexts: correct-only | all-matching.
    #[arg(long, default_value = "correct-only")]
    pub context_update: UpdateScope,
    /// Which applicable rules are extended: all-matching | correct-only.
    #[arg(long, default_value = "all-matching")]
    pub extension_scope: UpdateScope,
    /// append-observation | extend-into-past.
    #[arg(long, default_value = "append-observation")]
    pub extension_direction: ExtensionDirection,
}

impl EngineArgs {
    pub fn config(&self, engine_mode: EngineMode) -> PredictorConfig {
        PredictorConfig {
            alpha: self.alpha,
            theta: self.theta,
            window_capacity: self.window,
            engine_mode,
            context_update_scope: self.context_update,
            extension_scope: self.extension_scope,
            extension_direction: self.extension_direction,
        }
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// a | b | mix
    #[arg(long)]
    pub scenario: ScenarioKind,
    #[arg(long, default_value_t = 10)]
    pub components: u32,
    /// Requirements per component.
    #[arg(long, default_value_t = 3)]
    pub requirements: u32,
    /// Seed of the component-type draw (mix only).
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// context | baseline
    #[arg(long, default_value = "context")]
    pub engine: EngineMode,
    #[command(flatten)]
    pub engine_args: EngineArgs,
    /// Trailing window of the rolling accuracy.
    #[arg(long, default_value_t = evalkit::DEFAULT_ROLL_WINDOW)]
    pub roll_window: usize,
    /// CSV output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the final rule database here.
    #[arg(long)]
    pub save_db: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub trace: PathBuf,
    #[command(flatten)]
    pub engine_args: EngineArgs,
    #[arg(long, default_value_t = evalkit::DEFAULT_ROLL_WINDOW)]
    pub roll_window: usize,
    #[arg(long)]
    pub context_csv: Option<PathBuf>,
    #[arg(long)]
    pub baseline_csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReplArgs {
    /// Start from a saved rule database.
    #[arg(long)]
    pub load: Option<PathBuf>,
    /// Number of declared steps (ids 0..steps).
    #[arg(long, default_value_t = 10)]
    pub steps: u32,
    /// Number of declared context classifications.
    #[arg(long, default_value_t = 2)]
    pub classifications: u32,
    #[arg(long, default_value = "context")]
    pub engine: EngineMode,
    #[command(flatten)]
    pub engine_args: EngineArgs,
}

#[derive(Debug, Args)]
pub struct DbInspectArgs {
    pub snapshot: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Self::Usage(_) => EXIT_USAGE,
            Self::Data(_) => EXIT_DATA,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Usage(m) | Self::Data(m) => m,
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> Failure {
    Failure::Data(e.to_string())
}

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Data(format!("{}: {e}", path.display()))
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a, stdout, stderr),
        Command::Run(a) => run_cmd(a, stdout, stderr),
        Command::Compare(a) => compare(a, stdout, stderr),
        Command::Repl(a) => repl_cmd(a, stdin, stdout, stderr),
        Command::DbInspect(a) => db_inspect(a, stdout, stderr),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message());
            f.code()
        }
    }
}

fn checked_config(args: &EngineArgs, mode: EngineMode) -> Result<PredictorConfig, Failure> {
    let config = args.config(mode);
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    Ok(config)
}

fn with_output<F>(path: Option<&Path>, stdout: &mut dyn Write, f: F) -> Result<(), Failure>
where
    F: FnOnce(&mut dyn Write) -> io::Result<()>,
{
    match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(p, e))?;
            let mut w = BufWriter::new(file);
            f(&mut w).and_then(|_| w.flush()).map_err(|e| io_err(p, e))
        }
        None => f(stdout).map_err(data_err),
    }
}

fn load_trace(path: &Path) -> Result<Vec<TraceRecord>, Failure> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    evalkit::read_trace(BufReader::new(file))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, LookupDb), Failure> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    LookupDb::read_snapshot(BufReader::new(file))
        .map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn gen(a: GenArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let spec = ScenarioSpec {
        kind: a.scenario,
        components: a.components,
        requirements_per_component: a.requirements,
        seed: a.seed,
    };
    let trace = evalkit::generate(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    let _ = writeln!(stderr, "gen: {spec} records={}", trace.len());
    with_output(a.out.as_deref(), stdout, |w| {
        evalkit::write_trace(w, &trace)
    })
}

fn run_cmd(a: RunArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let config = checked_config(&a.engine_args, a.engine)?;
    let trace = load_trace(&a.trace)?;
    let _ = writeln!(stderr, "run: {config} roll-window={}", a.roll_window);
    let mut engine = Engine::new(config, trace_vocabulary(&trace)).map_err(data_err)?;
    let rows = evalkit::replay(&mut engine, &trace, a.roll_window).map_err(data_err)?;
    with_output(a.out.as_deref(), stdout, |w| evalkit::write_csv(w, &rows))?;
    if let Some(path) = &a.save_db {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        engine
            .save_snapshot(BufWriter::new(file))
            .map_err(|e| io_err(path, e))?;
    }
    let _ = writeln!(
        stderr,
        "run: predictions={} cum_acc={:.6} entries={}",
        rows.len(),
        final_cum_accuracy(&rows),
        engine.db().len()
    );
    Ok(())
}

fn summary_line(name: &str, rows: &[MetricsRow]) -> String {
    format!(
        "{name},{},{},{:.6},{:.6}",
        rows.len(),
        rows.last().map_or(0, |r| r.cum_correct),
        final_cum_accuracy(rows),
        tail_accuracy(rows, 1.0 / 3.0)
    )
}

fn compare(a: CompareArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let config = checked_config(&a.engine_args, EngineMode::Context)?;
    let trace = load_trace(&a.trace)?;
    let _ = writeln!(stderr, "compare: {config} roll-window={}", a.roll_window);
    let cmp = compare_engines(&trace, &config, a.roll_window).map_err(data_err)?;
    for (path, rows) in [
        (&a.context_csv, &cmp.context),
        (&a.baseline_csv, &cmp.baseline),
    ] {
        if let Some(p) = path {
            with_output(Some(p), stdout, |w| evalkit::write_csv(w, rows))?;
        }
    }
    if let Some(p) = &a.svg {
        let title = format!("{} ({})", a.trace.display(), config);
        let svg = evalkit::render_svg(&title, &cmp.context, &cmp.baseline);
        std::fs::write(p, svg).map_err(|e| io_err(p, e))?;
    }
    let mut out = String::from("engine,predictions,cum_correct,cum_acc,tail_acc\n");
    out.push_str(&summary_line("context", &cmp.context));
    out.push('\n');
    out.push_str(&summary_line("baseline", &cmp.baseline));
    out.push('\n');
    stdout.write_all(out.as_bytes()).map_err(data_err)
}

fn repl_cmd(
    a: ReplArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let config = checked_config(&a.engine_args, a.engine)?;
    let mut engine = Engine::new(config, Vocabulary::new(a.steps, a.classifications))
        .map_err(|e| Failure::Usage(e.to_string()))?;
    if let Some(path) = &a.load {
        let (header, db) = load_snapshot(path)?;
        engine.load_db(header, db).map_err(data_err)?;
    }
    let _ = writeln!(
        stderr,
        "repl: {} steps={} classifications={}",
        engine.config(),
        a.steps,
        a.classifications
    );
    repl(&mut engine, stdin, stdout).map_err(data_err)
}

/// Interactive loop over `input`. Before each line the current suggestion
/// is printed. A line is either a record `step [cc=ctx,...]`, which is
/// learned, or one of `:save <path>`, `:load <path>`, `:db`, `:quit`.
pub fn repl(engine: &mut Engine, input: &mut dyn BufRead, out: &mut dyn Write) -> io::Result<()> {
    let mut line = String::new();
    loop {
        print_suggestion(engine, out)?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            return Ok(());
        }
        let cmd = line.trim();
        if cmd.is_empty() {
            continue;
        }
        if let Some(meta) = cmd.strip_prefix(':') {
            let (name, arg) = meta
                .split_once(char::is_whitespace)
                .map_or((meta, ""), |(n, a)| (n, a.trim()));
            match (name, arg) {
                ("quit" | "q", _) => return Ok(()),
                ("db", _) => write_listing(engine.db(), out)?,
                ("save", path) if !path.is_empty() => {
                    match File::create(path).and_then(|f| engine.save_snapshot(BufWriter::new(f))) {
                        Ok(()) => writeln!(out, "saved {} entries to {path}", engine.db().len())?,
                        Err(e) => writeln!(out, "error: {path}: {e}")?,
                    }
                }
                ("load", path) if !path.is_empty() => {
                    let loaded = File::open(path)
                        .map_err(|e| e.to_string())
                        .and_then(|f| {
                            LookupDb::read_snapshot(BufReader::new(f)).map_err(|e| e.to_string())
                        })
                        .and_then(|(h, db)| engine.load_db(h, db).map_err(|e| e.to_string()));
                    match loaded {
                        Ok(()) => {
                            writeln!(out, "loaded {} entries from {path}", engine.db().len())?
                        }
                        Err(e) => writeln!(out, "error: {path}: {e}")?,
                    }
                }
                _ => writeln!(
                    out,
                    "error: unknown command `{cmd}` (try :save <path>, :load <path>, :db, :quit)"
                )?,
            }
            continue;
        }
        let record = match evalkit::parse_record(cmd) {
            Ok(r) => r,
            Err(e) => {
                writeln!(out, "error: {e}")?;
                continue;
            }
        };
        let step = record.step;
        match engine.learn(record) {
            Ok(report) => {
                let verdict = match report.correct {
                    Some(true) => "correct",
                    Some(false) => "wrong",
                    None => "no prediction",
                };
                writeln!(
                    out,
                    "learned step {step}: {verdict}, {} new, {} updated",
                    report.entries_added, report.entries_updated
                )?;
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}

fn print_suggestion(engine: &mut Engine, out: &mut dyn Write) -> io::Result<()> {
    let result = engine.predict();
    match (result.step, result.actual_p, result.entry) {
        (Some(step), Some(p), Some(id)) => {
            let cond = engine
                .db()
                .get(id)
                .map(|e| join(e.cond().iter()))
                .unwrap_or_default();
            writeln!(out, "suggestion: step {step} (actualP={p:.3}, cond={cond})")
        }
        _ => writeln!(out, "no suggestion"),
    }
}

fn join<T: ToString>(items: impl Iterator<Item = T>) -> String {
    items.map(|i| i.to_string()).collect::<Vec<_>>().join(",")
}

/// One line per rule, longest condition first, then highest p.
pub fn write_listing(db: &LookupDb, out: &mut dyn Write) -> io::Result<()> {
    let mut entries: Vec<_> = db.iter().collect();
    entries.sort_by(|a, b| {
        b.len_cond()
            .cmp(&a.len_cond())
            .then(b.p().total_cmp(&a.p()))
            .then(a.id().cmp(&b.id()))
    });
    writeln!(out, "{} entries", entries.len())?;
    for e in entries {
        write!(
            out,
            "#{} cond={} pred={} p={:.3}",
            e.id(),
            join(e.cond().iter()),
            e.prediction(),
            e.p()
        )?;
        for ((cc, i), slot) in e.slots() {
            if let Some((ctx, w)) = slot.top() {
                write!(out, " cc{cc}@{i}={ctx}:{w:.3}")?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

fn db_inspect(
    a: DbInspectArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), Failure> {
    let (header, db) = load_snapshot(&a.snapshot)?;
    let _ = writeln!(
        stderr,
        "db-inspect: {} alpha={} theta={}",
        a.snapshot.display(),
        header.alpha,
        header.theta
    );
    write_listing(&db, stdout).map_err(data_err)
}
