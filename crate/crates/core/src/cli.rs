//! Command-line driver.
//!
//! Exit codes: 0 success, 1 schema diagnostics (and usage errors), 2
//! bitstream parse or generation failure, 3 I/O failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bitio::{BitReader, BitWriter};
use crate::engine::{object_to_doc, MismatchPolicy, Session, SessionOptions};
use crate::frontend::resolve_includes;
use crate::sema::{analyze, AnalyzeOptions, SyntaxSpec, DEFAULT_ARRAY_CAP};
use crate::vlcmap::DEFAULT_STEP;

pub const EXIT_OK: i32 = 0;
pub const EXIT_SCHEMA: i32 = 1;
pub const EXIT_BITSTREAM: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "bitsyn",
    version,
    about = "Check bitstream syntax schemas and parse or generate bitstreams with them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a schema and report diagnostics.
    Check {
        #[command(flatten)]
        schema: SchemaArgs,
    },
    /// Parse a bitstream and print a trace of every field.
    Trace {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Bitstream file
        input: PathBuf,
    },
    /// Generate a bitstream from a JSON value document.
    Generate {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        run: RunArgs,
        /// JSON value document
        document: PathBuf,
        /// Where to write the bitstream
        output: PathBuf,
    },
    /// Parse a bitstream, regenerate it and compare the bytes.
    Roundtrip {
        #[command(flatten)]
        schema: SchemaArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Bitstream file
        input: PathBuf,
    },
    /// Print decoder statistics for every map.
    MapReport {
        #[command(flatten)]
        schema: SchemaArgs,
    },
}

#[derive(Debug, Args)]
pub struct SchemaArgs {
    /// Schema source file.
    pub schema: PathBuf,
    /// Include search directory (repeatable).
    #[arg(short = 'I', value_name = "PATH")]
    pub include: Vec<PathBuf>,
    /// Bits per decoder lookup stage.
    #[arg(long, default_value_t = DEFAULT_STEP, value_parser = clap::value_parser!(u32).range(1..=16))]
    pub step: u32,
    /// Default array size limit.
    #[arg(long, default_value_t = DEFAULT_ARRAY_CAP)]
    pub array_max: u64,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Entry class; defaults to the last class of the schema file.
    #[arg(long = "class", value_name = "NAME")]
    pub class: Option<String>,
    #[arg(long, value_enum, default_value_t = OnMismatch::Abort)]
    pub on_mismatch: OnMismatch,
    /// Suppress the field trace.
    #[arg(long)]
    pub no_trace: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnMismatch {
    Abort,
    Warn,
}

/// Parses `args` (program name first) and runs the command.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_SCHEMA } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let r = match cli.command {
        Command::Check { schema } => load(&schema, err).map(|(_, _)| {
            let _ = writeln!(out, "OK");
            EXIT_OK
        }),
        Command::Trace { schema, run, input } => load(&schema, err)
            .and_then(|(spec, main)| trace(&spec, &entry(&spec, &run, main, err)?, &run, &input, out, err)),
        Command::Generate { schema, run, document, output } => load(&schema, err).and_then(|(spec, main)| {
            generate(&spec, &entry(&spec, &run, main, err)?, &run, &document, &output, out, err)
        }),
        Command::Roundtrip { schema, run, input } => load(&schema, err)
            .and_then(|(spec, main)| roundtrip(&spec, &entry(&spec, &run, main, err)?, &run, &input, out, err)),
        Command::MapReport { schema } => load(&schema, err).map(|(spec, _)| {
            for m in spec.maps.iter() {
                let _ = writeln!(out, "{}", m.stats());
            }
            EXIT_OK
        }),
    };
    r.unwrap_or_else(|code| code)
}

/// Loads and checks a schema; `Err` carries the exit code.
fn load(args: &SchemaArgs, err: &mut dyn Write) -> Result<(SyntaxSpec, Option<String>), i32> {
    let loaded = match resolve_includes(&args.schema, &args.include) {
        Ok(l) => l,
        Err(e) => {
            for d in &e.diagnostics {
                let _ = writeln!(err, "{}", d.render(&e.sources));
            }
            return Err(if e.is_io() { EXIT_IO } else { EXIT_SCHEMA });
        }
    };
    let opts = AnalyzeOptions { array_cap: args.array_max, step: args.step };
    match analyze(&loaded.ast, &opts) {
        Ok(spec) => {
            for d in &spec.warnings {
                let _ = writeln!(err, "{}", d.render(&loaded.sources));
            }
            Ok((spec, loaded.ast.last_main_class().map(str::to_string)))
        }
        Err(diags) => {
            for d in &diags {
                let _ = writeln!(err, "{}", d.render(&loaded.sources));
            }
            Err(EXIT_SCHEMA)
        }
    }
}

fn entry(spec: &SyntaxSpec, run: &RunArgs, main: Option<String>, err: &mut dyn Write) -> Result<String, i32> {
    let Some(name) = run.class.clone().or(main) else {
        let _ = writeln!(err, "error: the schema declares no class");
        return Err(EXIT_SCHEMA);
    };
    match spec.class(&name) {
        None => {
            let _ = writeln!(err, "error: unknown class {name}");
            Err(EXIT_SCHEMA)
        }
        Some(c) if !c.parsable => {
            let _ = writeln!(err, "error: class {name} is not parsable");
            Err(EXIT_SCHEMA)
        }
        Some(_) => Ok(name),
    }
}

fn session_options(run: &RunArgs) -> SessionOptions {
    SessionOptions {
        on_mismatch: match run.on_mismatch {
            OnMismatch::Abort => MismatchPolicy::Abort,
            OnMismatch::Warn => MismatchPolicy::Warn,
        },
        trace: !run.no_trace,
        ..SessionOptions::default()
    }
}

fn read_file(path: &Path, err: &mut dyn Write) -> Result<Vec<u8>, i32> {
    fs::read(path).map_err(|e| {
        let _ = writeln!(err, "error: cannot read {}: {e}", path.display());
        EXIT_IO
    })
}

fn warn_reports(s: &Session<'_>, err: &mut dyn Write) {
    for r in s.reports() {
        let _ = writeln!(err, "warning @ {}: {}", r.position, r.message);
    }
}

fn trace(
    spec: &SyntaxSpec,
    class: &str,
    run: &RunArgs,
    input: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, i32> {
    let bytes = read_file(input, err)?;
    let mut s = Session::new(spec, session_options(run));
    let r = s.parse(class, &mut BitReader::new(&bytes), &[]);
    let _ = write!(out, "{}", s.trace_text());
    warn_reports(&s, err);
    match r {
        Ok(o) => {
            let _ = writeln!(out, "OK {} bits", o.bits);
            Ok(EXIT_OK)
        }
        Err(e) => {
            let _ = writeln!(out, "FAIL @ {}: {}", e.position, e.message);
            Err(EXIT_BITSTREAM)
        }
    }
}

fn generate(
    spec: &SyntaxSpec,
    class: &str,
    run: &RunArgs,
    document: &Path,
    output: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, i32> {
    let text = read_file(document, err)?;
    let doc: serde_json::Value = serde_json::from_slice(&text).map_err(|e| {
        let _ = writeln!(err, "error: {}: invalid JSON: {e}", document.display());
        EXIT_BITSTREAM
    })?;
    let mut s = Session::new(spec, session_options(run));
    let mut w = BitWriter::new();
    let r = s.generate(class, &doc, &mut w, &[]);
    warn_reports(&s, err);
    let o = r.map_err(|e| {
        let _ = writeln!(out, "FAIL @ {}: {}", e.position, e.message);
        EXIT_BITSTREAM
    })?;
    fs::write(output, w.into_bytes()).map_err(|e| {
        let _ = writeln!(err, "error: cannot write {}: {e}", output.display());
        EXIT_IO
    })?;
    let _ = writeln!(out, "OK {} bits", o.bits);
    Ok(EXIT_OK)
}

fn roundtrip(
    spec: &SyntaxSpec,
    class: &str,
    run: &RunArgs,
    input: &Path,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<i32, i32> {
    let bytes = read_file(input, err)?;
    let opts = SessionOptions { trace: false, ..session_options(run) };
    let mut s = Session::new(spec, opts);
    let parsed = s.parse(class, &mut BitReader::new(&bytes), &[]);
    warn_reports(&s, err);
    let o = parsed.map_err(|e| {
        let _ = writeln!(out, "FAIL @ {}: {}", e.position, e.message);
        EXIT_BITSTREAM
    })?;
    let mut w = BitWriter::new();
    let generated = s.generate(class, &object_to_doc(&o), &mut w, &[]);
    warn_reports(&s, err);
    generated.map_err(|e| {
        let _ = writeln!(out, "FAIL @ {}: regeneration failed: {}", e.position, e.message);
        EXIT_BITSTREAM
    })?;
    let regenerated = w.into_bytes();
    match first_difference(&bytes, &regenerated) {
        None => {
            let _ = writeln!(out, "OK {} bits", o.bits);
            Ok(EXIT_OK)
        }
        Some(bit) => {
            let _ = writeln!(out, "FAIL @ {bit}: regenerated bitstream differs");
            Err(EXIT_BITSTREAM)
        }
    }
}

/// Offset of the first bit where `a` and `b` differ, counting a length
/// difference as a difference at the end of the shorter one.
pub fn first_difference(a: &[u8], b: &[u8]) -> Option<u64> {
    for (i, (x, y)) in a.iter().zip(b).enumerate() {
        if x != y {
            return Some(i as u64 * 8 + (x ^ y).leading_zeros() as u64);
        }
    }
    (a.len() != b.len()).then(|| a.len().min(b.len()) as u64 * 8)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_difference_finds_bit() {
        assert_eq!(first_difference(&[0xAB], &[0xAB]), None);
        assert_eq!(first_difference(&[0xAB, 0x10], &[0xAB, 0x00]), Some(11));
        assert_eq!(first_difference(&[0xAB], &[0xAB, 0x00]), Some(8));
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut o, mut e) = (Vec::new(), Vec::new());
        assert_eq!(main_with_args(["bitsyn", "frobnicate"], &mut o, &mut e), EXIT_SCHEMA);
        assert_eq!(main_with_args(["bitsyn", "--help"], &mut o, &mut e), EXIT_OK);
    }
}
