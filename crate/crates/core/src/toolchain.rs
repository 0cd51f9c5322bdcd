//! End-to-end operations: compaction of programs, packing of raw bytes,
//! equivalence checking, and the statistics report.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::asm::select::select_by_instruction_frequency;
use crate::asm::{
    apply_macro_set, layout_and_resolve, AnnotatedStream, AsmError, Item, Layout, MacroEntry, ObjectError,
    ObjectImage, Program, TokenView, MACRO_BASE,
};
use crate::compact::{
    brute_force_select, exact_select, greedy_select, CompactError, CompactionResult, DEFAULT_BUDGET, MAX_MACROS,
};
use crate::symbol::Unit;
use crate::vm::{run_image, LoadError, Outcome, RunResult};

/// Largest input accepted by [`pack`].
pub const MAX_PACK_INPUT: usize = 1 << 20;
pub const DEFAULT_MAX_LEN: usize = 20;

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error(transparent)]
    Asm(#[from] AsmError),
    #[error(transparent)]
    Compact(#[from] CompactError),
    #[error(transparent)]
    Object(#[from] ObjectError),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("report invariant violated: {0}")]
    Report(String),
    #[error("image is not a raw packed image")]
    NotRaw,
    #[error("macro {0:#04x} expands into itself")]
    Cyclic(u8),
    #[error("input of {0} bytes exceeds the 1 MiB limit")]
    InputTooLarge(usize),
    #[error("maximum macro length {0} exceeds the 255-byte table entry limit")]
    MaxLenTooLong(usize),
    #[error("macro embedding is not executable; it is only available for raw packing")]
    EmbedNotExecutable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Greedy,
    Exact,
    Brute,
    Freq,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Mode, String> {
        match s {
            "greedy" => Ok(Mode::Greedy),
            "exact" => Ok(Mode::Exact),
            "brute" => Ok(Mode::Brute),
            "freq" => Ok(Mode::Freq),
            _ => Err(format!("unknown mode '{s}' (greedy, exact, brute, freq)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Greedy => "greedy",
            Mode::Exact => "exact",
            Mode::Brute => "brute",
            Mode::Freq => "freq",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Options {
    pub mode: Mode,
    pub max_macros: usize,
    pub max_len: usize,
    pub allow_embed: bool,
    pub budget: u128,
    pub origin: u16,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            mode: Mode::Greedy,
            max_macros: MAX_MACROS,
            max_len: DEFAULT_MAX_LEN,
            allow_embed: false,
            budget: DEFAULT_BUDGET,
            origin: crate::asm::DEFAULT_ORIGIN,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StatsReport {
    pub input_bytes: usize,
    pub macro_count: usize,
    pub table_bytes: usize,
    pub residual_bytes: usize,
    pub objective: usize,
    pub savings_bytes: i64,
    pub savings_percent: f64,
    pub mode: Mode,
    /// Milliseconds per phase.
    pub elapsed: BTreeMap<String, f64>,
}

impl StatsReport {
    pub fn new(mode: Mode, input_bytes: usize, residual_bytes: usize, table_bytes: usize, macro_count: usize) -> Self {
        let objective = residual_bytes + table_bytes;
        let savings_bytes = input_bytes as i64 - objective as i64;
        StatsReport {
            input_bytes,
            macro_count,
            table_bytes,
            residual_bytes,
            objective,
            savings_bytes,
            savings_percent: percent(savings_bytes, input_bytes),
            mode,
            elapsed: BTreeMap::new(),
        }
    }

    /// Recheck the arithmetic; called before every emission.
    pub fn check(&self) -> Result<(), ToolchainError> {
        if self.objective != self.residual_bytes + self.table_bytes {
            return Err(ToolchainError::Report(format!(
                "objective {} != residual {} + table {}",
                self.objective, self.residual_bytes, self.table_bytes
            )));
        }
        if self.savings_bytes != self.input_bytes as i64 - self.objective as i64 {
            return Err(ToolchainError::Report(format!(
                "savings {} != input {} - objective {}",
                self.savings_bytes, self.input_bytes, self.objective
            )));
        }
        if (self.savings_percent - percent(self.savings_bytes, self.input_bytes)).abs() > 1e-9 {
            return Err(ToolchainError::Report("savings percent inconsistent".to_string()));
        }
        Ok(())
    }

    fn time(&mut self, phase: &str, start: Instant) {
        self.elapsed.insert(phase.to_string(), start.elapsed().as_secs_f64() * 1e3);
    }
}

fn percent(savings: i64, input: usize) -> f64 {
    if input == 0 {
        0.0
    } else {
        savings as f64 * 100.0 / input as f64
    }
}

/// A compacted program: its final layout, the stream it came from, and
/// the accounting.
#[derive(Clone, Debug)]
pub struct Compacted {
    pub layout: Layout,
    pub stream: AnnotatedStream,
    pub report: StatsReport,
}

fn select_tokens(view: &TokenView, opts: &Options) -> Result<CompactionResult<crate::asm::Tok>, ToolchainError> {
    let toks = &view.toks;
    let (v, l) = (opts.max_macros, opts.max_len);
    Ok(match opts.mode {
        Mode::Greedy => greedy_select(toks, v, l, false)?,
        Mode::Exact => exact_select(toks, v, l, opts.budget)?,
        Mode::Brute => brute_force_select(toks, v, l)?,
        Mode::Freq => unreachable!("frequency selection works on instructions"),
    })
}

/// Select macros over the program's item stream, substitute, and lay out.
///
/// The result is never larger than the macro-free image: if relaxation
/// interplay ever made it so, the macro-free image is returned instead.
pub fn compact_program(program: &Program, opts: &Options) -> Result<Compacted, ToolchainError> {
    if opts.allow_embed {
        return Err(ToolchainError::EmbedNotExecutable);
    }
    if opts.max_macros > MAX_MACROS {
        return Err(CompactError::TooManyMacros(opts.max_macros).into());
    }
    if opts.max_len > 255 {
        return Err(ToolchainError::MaxLenTooLong(opts.max_len));
    }
    let t = Instant::now();
    let stream = AnnotatedStream::from_program(program)?;
    let baseline = layout_and_resolve(&stream, opts.origin)?;
    let t_layout0 = t.elapsed().as_secs_f64() * 1e3;
    let input = baseline.image.code.len() + baseline.image.table_bytes();

    let t = Instant::now();
    let compacted = if opts.max_macros == 0 {
        stream.clone()
    } else if opts.mode == Mode::Freq {
        let picks = select_by_instruction_frequency(&stream, opts.max_macros, opts.max_len, opts.origin)?;
        let bodies: Vec<Vec<Item>> = picks.into_iter().map(|p| p.body).collect();
        apply_macro_set(&stream, &bodies, opts.origin)?
    } else {
        let view = TokenView::new(&stream, &baseline);
        let result = select_tokens(&view, opts)?;
        view.rebuild(&stream, &result)?
    };
    let t_select = t;

    let t = Instant::now();
    let mut layout = layout_and_resolve(&compacted, opts.origin)?;
    let mut stream_out = compacted;
    if layout.image.code.len() + layout.image.table_bytes() > input {
        layout = baseline;
        stream_out = stream;
    }
    let mut report = StatsReport::new(
        opts.mode,
        input,
        layout.image.code.len(),
        layout.image.table_bytes(),
        layout.image.macros.len(),
    );
    report.elapsed.insert("layout".to_string(), t_layout0);
    report.time("select", t_select);
    report.time("resolve", t);
    report.check()?;
    Ok(Compacted {
        layout,
        stream: stream_out,
        report,
    })
}

/// Pack an arbitrary byte string into a raw image. Macro codes are byte
/// values from `0x50..=0xFF` that do not occur in the input, so the number
/// of macros is capped by how many such values are free.
pub fn pack(data: &[u8], opts: &Options) -> Result<(ObjectImage, StatsReport), ToolchainError> {
    if data.len() > MAX_PACK_INPUT {
        return Err(ToolchainError::InputTooLarge(data.len()));
    }
    if opts.max_len > 255 {
        return Err(ToolchainError::MaxLenTooLong(opts.max_len));
    }
    if opts.max_macros > MAX_MACROS {
        return Err(CompactError::TooManyMacros(opts.max_macros).into());
    }
    let t = Instant::now();
    let mut present = [false; 256];
    for &b in data {
        present[usize::from(b)] = true;
    }
    let free: Vec<u8> = (MACRO_BASE..=0xFF).filter(|&b| !present[usize::from(b)]).collect();
    let v = opts.max_macros.min(free.len());
    let result = if v == 0 {
        CompactionResult::unchanged(data)
    } else {
        match opts.mode {
            Mode::Greedy | Mode::Freq => greedy_select(data, v, opts.max_len, opts.allow_embed)?,
            Mode::Exact => exact_select(data, v, opts.max_len, opts.budget)?,
            Mode::Brute => brute_force_select(data, v, opts.max_len)?,
        }
    };
    let byte = |u: &Unit<u8>| match u {
        Unit::Sym(b) => *b,
        Unit::Macro(i) => free[usize::from(*i)],
    };
    let image = ObjectImage {
        entry: 0,
        origin: 0,
        code: result.residual.iter().map(byte).collect(),
        macros: result
            .macros
            .bodies()
            .iter()
            .enumerate()
            .map(|(i, body)| MacroEntry {
                opcode: free[i],
                body: body.iter().map(byte).collect(),
            })
            .collect(),
        raw: true,
    };
    let mut report = StatsReport::new(
        opts.mode,
        data.len(),
        image.code.len(),
        image.table_bytes(),
        image.macros.len(),
    );
    report.time("select", t);
    report.check()?;
    Ok((image, report))
}

/// Inverse of [`pack`]: expand every macro byte, recursively.
pub fn unpack(image: &ObjectImage) -> Result<Vec<u8>, ToolchainError> {
    if !image.raw {
        return Err(ToolchainError::NotRaw);
    }
    let table: BTreeMap<u8, &[u8]> = image.macros.iter().map(|m| (m.opcode, m.body.as_slice())).collect();
    fn expand(b: u8, table: &BTreeMap<u8, &[u8]>, depth: usize, out: &mut Vec<u8>) -> Result<(), ToolchainError> {
        match table.get(&b) {
            None => out.push(b),
            Some(_) if depth > MAX_MACROS => return Err(ToolchainError::Cyclic(b)),
            Some(body) => {
                for &c in *body {
                    expand(c, table, depth + 1, out)?;
                }
            }
        }
        Ok(())
    }
    let mut out = Vec::with_capacity(image.code.len() * 2);
    for &b in &image.code {
        expand(b, &table, 0, &mut out)?;
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    /// First trace index at which the runs differ (or where one trace ends).
    Trace(usize),
    Outcome { plain: String, compacted: String },
    Steps { plain: u64, compacted: u64 },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Trace(i) => write!(f, "traces diverge at index {i}"),
            Mismatch::Outcome { plain, compacted } => write!(f, "outcome {plain} vs {compacted}"),
            Mismatch::Steps { plain, compacted } => write!(f, "{plain} steps vs {compacted}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Verification {
    pub plain: RunResult,
    pub compacted: RunResult,
    pub macro_count: usize,
    pub mismatch: Option<Mismatch>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.mismatch.is_none()
    }
}

pub fn compare_runs(plain: &RunResult, compacted: &RunResult) -> Option<Mismatch> {
    let (a, b) = (&plain.trace, &compacted.trace);
    if a != b {
        let i = a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(a.len().min(b.len()));
        return Some(Mismatch::Trace(i));
    }
    let kind = |o: &Outcome| match o {
        Outcome::Fault(f) => format!("fault ({f})"),
        other => other.kind().to_string(),
    };
    if kind(&plain.outcome) != kind(&compacted.outcome) {
        return Some(Mismatch::Outcome {
            plain: kind(&plain.outcome),
            compacted: kind(&compacted.outcome),
        });
    }
    if plain.steps != compacted.steps {
        return Some(Mismatch::Steps {
            plain: plain.steps,
            compacted: compacted.steps,
        });
    }
    None
}

/// Assemble with and without compaction and compare the runs. With
/// `corrupt`, the first byte of the first macro body becomes `HLT`, a
/// negative control that must make verification fail.
pub fn verify(program: &Program, opts: &Options, fuel: u64, corrupt: bool) -> Result<Verification, ToolchainError> {
    let plain_image = layout_and_resolve(&AnnotatedStream::from_program(program)?, opts.origin)?.image;
    let mut image = compact_program(program, opts)?.layout.image;
    if corrupt {
        if let Some(m) = image.macros.first_mut() {
            m.body[0] = 0x00;
        }
    }
    let plain = run_image(&plain_image, fuel)?;
    let compacted = run_image(&image, fuel)?;
    let mismatch = compare_runs(&plain, &compacted);
    Ok(Verification {
        plain,
        compacted,
        macro_count: image.macros.len(),
        mismatch,
    })
}
