//! Assembler, object format, decoder and disassembler.
//!
//! Sources become an [`AnnotatedStream`] of bytes, symbolic references and
//! label definitions. Macro selection runs on that stream; layout then
//! assigns addresses, relaxes branches and emits an [`ObjectImage`].

pub mod decode;
pub mod disasm;
pub mod encode;
pub mod isa;
pub mod layout;
pub mod object;
pub mod parse;
pub mod select;
pub mod stream;

use thiserror::Error;

pub use decode::{decode, Cursor, DecodeError, Decoded, Source};
pub use disasm::{decode_image, disassemble, Line};
pub use isa::{Instruction, Mnemonic, Operand, Reg, Target, Value};
pub use layout::{layout_and_resolve, Layout, SymbolTable};
pub use object::{MacroEntry, ObjectError, ObjectImage};
pub use parse::{parse_source, Program, Stmt};
pub use stream::{apply_macro_set, extract_candidates, AnnotatedStream, Candidate, Item, Tok, TokenView};

/// First macro opcode; everything below is an instruction opcode.
pub const MACRO_BASE: u8 = 0x50;
pub const DEFAULT_ORIGIN: u16 = 0x0100;
/// Labels must resolve below this address.
pub const ADDRESS_LIMIT: u32 = 0x8000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AsmError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: duplicate label {label}")]
    DuplicateLabel { line: usize, label: String },
    #[error("line {line}: unknown mnemonic {name}")]
    UnknownMnemonic { line: usize, name: String },
    #[error("line {line}: {mnemonic}: {msg}")]
    Operand {
        line: usize,
        mnemonic: &'static str,
        msg: String,
    },
    #[error("literal {0:#06x} exceeds 0x7fff")]
    LiteralRange(u16),
    #[error("undefined symbol {0}")]
    UndefinedSymbol(String),
    #[error("label {label} at {addr:#06x} is outside the code address range")]
    AddressRange { label: String, addr: u32 },
    #[error("code runs past the end of memory ({0:#x})")]
    CodeOverflow(u32),
    #[error("branch relaxation did not settle after {0} passes")]
    RelaxationDiverged(usize),
    #[error("{0} macros exceed the opcode space")]
    TooManyMacros(usize),
    #[error("macro {0} embeds another macro")]
    EmbeddedMacro(usize),
    #[error("macro {0} has an invalid body")]
    InvalidBody(usize),
    #[error("macro opcode {0:#04x} has no table entry")]
    UndefinedMacro(u8),
}

/// Parse-free convenience: translate and lay out a program.
pub fn assemble(program: &Program, origin: u16) -> Result<Layout, AsmError> {
    layout_and_resolve(&AnnotatedStream::from_program(program)?, origin)
}

/// Parse and assemble source text at the default origin.
pub fn assemble_source(text: &str) -> Result<Layout, AsmError> {
    assemble(&parse_source(text)?, DEFAULT_ORIGIN)
}
