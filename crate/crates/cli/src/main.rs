//! `macroforge` command-line driver.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error,
//! 3 runtime fault (including running out of fuel).

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use macroforge::asm::object::MAGIC;
use macroforge::asm::{assemble, disassemble, parse_source, ObjectImage, Program, SymbolTable};
use macroforge::compact::{DEFAULT_BUDGET, MAX_MACROS};
use macroforge::corpus::large_program;
use macroforge::toolchain::{compact_program, pack, unpack, verify, Mode, Options, StatsReport, DEFAULT_MAX_LEN};
use macroforge::vm::{run_image, Outcome};

const BUDGET_VAR: &str = "MACROFORGE_BUDGET";

#[derive(Parser)]
#[command(name = "macroforge", version, about = "Assemble, compact, pack and run compact interpretive bytecode")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Selection {
    /// Selection strategy: greedy, exact, brute or freq.
    #[arg(long, default_value = "greedy")]
    mode: Mode,
    /// Maximum number of macros (at most 176).
    #[arg(long, default_value_t = MAX_MACROS)]
    max_macros: usize,
    /// Maximum macro body length in bytes.
    #[arg(long, default_value_t = DEFAULT_MAX_LEN)]
    max_len: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble a source file into an object file.
    Asm {
        source: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Print a listing to standard output.
        #[arg(long)]
        list: bool,
    },
    /// Assemble a source file with macro compaction.
    Compact {
        source: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        selection: Selection,
        /// Allow macros inside macro bodies (raw packing only).
        #[arg(long)]
        allow_embed: bool,
        /// Write the JSON report here instead of standard output.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        list: bool,
    },
    /// Compact an arbitrary binary file into a raw packed image.
    Pack {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        selection: Selection,
        #[arg(long)]
        allow_embed: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Restore the original bytes of a raw packed image.
    Unpack {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run an object file and print its output trace, one value per line.
    Run {
        object: PathBuf,
        #[arg(long, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
    },
    /// Disassemble an object file.
    Disasm { object: PathBuf },
    /// Check that compaction preserves a program's behaviour.
    Verify {
        source: PathBuf,
        #[command(flatten)]
        selection: Selection,
        #[arg(long, default_value_t = 100_000, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
        #[arg(long, hide = true)]
        corrupt_table: bool,
    },
    /// Print the compaction report for a source (or, with --raw, binary) file.
    Stats {
        input: PathBuf,
        #[command(flatten)]
        selection: Selection,
        #[arg(long)]
        raw: bool,
    },
    /// Print a seeded synthetic program.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        instructions: usize,
    },
}

fn budget() -> Result<u128> {
    match std::env::var(BUDGET_VAR) {
        Ok(s) => s.trim().parse().with_context(|| format!("{BUDGET_VAR}={s:?} is not a step count")),
        Err(_) => Ok(DEFAULT_BUDGET),
    }
}

fn options(sel: &Selection, allow_embed: bool) -> Result<Options> {
    if sel.max_macros > MAX_MACROS {
        bail!("--max-macros {} exceeds the {MAX_MACROS} available opcodes", sel.max_macros);
    }
    if sel.max_len < 2 {
        bail!("--max-len must be at least 2");
    }
    Ok(Options {
        mode: sel.mode,
        max_macros: sel.max_macros,
        max_len: sel.max_len,
        allow_embed,
        budget: budget()?,
        ..Options::default()
    })
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn read_source(path: &Path) -> Result<Program> {
    let bytes = read(path)?;
    if bytes.starts_with(MAGIC) {
        bail!("{} is an object file; compaction needs the source, whose labels the object no longer carries", path.display());
    }
    let text = String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8 text", path.display()))?;
    parse_source(&text).with_context(|| format!("{}", path.display()))
}

fn read_object(path: &Path) -> Result<ObjectImage> {
    ObjectImage::from_bytes(&read(path)?).with_context(|| format!("{}", path.display()))
}

fn emit_report(report: &StatsReport, path: Option<&Path>) -> Result<()> {
    report.check()?;
    let json = serde_json::to_string_pretty(report)?;
    match path {
        Some(p) => write(p, format!("{json}\n").as_bytes()),
        None => {
            println!("{json}");
            Ok(())
        }
    }
}

fn listing(image: &ObjectImage, symbols: Option<&SymbolTable>) -> Result<()> {
    io::stdout().lock().write_all(disassemble(image, symbols)?.as_bytes())?;
    Ok(())
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Asm { source, output, list } => {
            let program = read_source(&source)?;
            let layout = assemble(&program, macroforge::asm::DEFAULT_ORIGIN)?;
            write(&output, &layout.image.to_bytes()?)?;
            if list {
                listing(&layout.image, Some(&layout.symbols))?;
            }
        }
        Command::Compact {
            source,
            output,
            selection,
            allow_embed,
            report,
            list,
        } => {
            let program = read_source(&source)?;
            let c = compact_program(&program, &options(&selection, allow_embed)?)?;
            write(&output, &c.layout.image.to_bytes()?)?;
            if list {
                listing(&c.layout.image, Some(&c.layout.symbols))?;
            }
            emit_report(&c.report, report.as_deref())?;
        }
        Command::Pack {
            input,
            output,
            selection,
            allow_embed,
            report,
        } => {
            let data = read(&input)?;
            let (image, r) = pack(&data, &options(&selection, allow_embed)?)?;
            write(&output, &image.to_bytes()?)?;
            emit_report(&r, report.as_deref())?;
        }
        Command::Unpack { input, output } => {
            write(&output, &unpack(&read_object(&input)?)?)?;
        }
        Command::Run { object, fuel } => {
            let result = run_image(&read_object(&object)?, fuel)?;
            let mut out = io::stdout().lock();
            for v in &result.trace {
                writeln!(out, "{v}")?;
            }
            out.flush()?;
            match result.outcome {
                Outcome::Halted => {}
                Outcome::OutOfFuel => {
                    eprintln!("out of fuel after {} steps", result.steps);
                    return Ok(3);
                }
                Outcome::Fault(f) => {
                    eprintln!("fault after {} steps: {f}", result.steps);
                    return Ok(3);
                }
            }
        }
        Command::Disasm { object } => listing(&read_object(&object)?, None)?,
        Command::Verify {
            source,
            selection,
            fuel,
            corrupt_table,
        } => {
            let program = read_source(&source)?;
            let v = verify(&program, &options(&selection, false)?, fuel, corrupt_table)?;
            match &v.mismatch {
                None => println!(
                    "pass: {} macros, {} outputs, {} steps, {}",
                    v.macro_count,
                    v.plain.trace.len(),
                    v.plain.steps,
                    v.plain.outcome.kind()
                ),
                Some(m) => {
                    println!("fail: {m}");
                    return Ok(1);
                }
            }
        }
        Command::Stats { input, selection, raw } => {
            let opts = options(&selection, false)?;
            let report = if raw {
                pack(&read(&input)?, &opts)?.1
            } else {
                compact_program(&read_source(&input)?, &opts)?.report
            };
            emit_report(&report, None)?;
        }
        Command::Gen { seed, instructions } => {
            io::stdout().lock().write_all(large_program(seed, instructions).as_bytes())?;
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
